#include "ltgsr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "ltgsr/errors.hpp"

namespace ltgsr {
namespace fs = std::filesystem;
namespace {

constexpr std::array<char, 6> kMagic{'F', 'G', 'R', 'I', 'D', '\0'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

std::string file_name(int index, const char* role, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "group_%04d_%s.%s", index, role, ext);
  return buf;
}

}  // namespace

void write_fgrid(const fs::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(os, kFgridVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.height()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.width()));
  for (double v : img.pixels()) put_le<float>(os, static_cast<float>(v));
  if (!os) throw FormatError("write failed: " + path.string());
}

Image read_fgrid(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::array<char, 6> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw FormatError(path.string() + ": not an FGRID file");
  const auto version = get_le<std::uint16_t>(is);
  if (version != kFgridVersion) throw FormatError(path.string() + ": unsupported FGRID version " + std::to_string(version));
  const auto h = get_le<std::uint32_t>(is);
  const auto w = get_le<std::uint32_t>(is);
  if (!is || h == 0 || w == 0 || h > 65536 || w > 65536) throw FormatError(path.string() + ": bad FGRID header");
  std::vector<double> px(static_cast<std::size_t>(h) * w);
  for (double& v : px) v = get_le<float>(is);
  if (!is) throw FormatError(path.string() + ": truncated pixel data");
  return Image(static_cast<int>(h), static_cast<int>(w), std::move(px));
}

void write_png(const fs::path& path, const Image& img) {
  std::vector<png_byte> bytes(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), bytes.begin(), [](double v) {
    return static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw FormatError("png write failed for " + path.string() + ": " + image.message);
  }
}

Image read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("png read failed for " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("png decode failed for " + path.string() + ": " + image.message);
  }
  std::vector<double> px(bytes.size());
  std::transform(bytes.begin(), bytes.end(), px.begin(), [](png_byte b) { return b / 255.0; });
  return Image(static_cast<int>(image.height), static_cast<int>(image.width), std::move(px));
}

Image read_image(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".fgrid") return read_fgrid(path);
  throw FormatError("unknown image extension: " + path.string());
}

void write_image(const fs::path& path, const Image& img) {
  const auto ext = path.extension().string();
  if (ext == ".png") return write_png(path, img);
  if (ext == ".fgrid") return write_fgrid(path, img);
  throw FormatError("unknown image extension: " + path.string());
}

void save_dataset(const fs::path& dir, const std::vector<SampleGroup>& groups, std::uint64_t seed) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "ltgsr-dataset";
  manifest["version"] = 1;
  manifest["seed"] = seed;
  manifest["height"] = groups.empty() ? 0 : groups.front().hr.height();
  manifest["width"] = groups.empty() ? 0 : groups.front().hr.width();
  manifest["groups"] = nlohmann::json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const int idx = static_cast<int>(i);
    const SampleGroup& g = groups[i];
    const GroupSeeds s = group_seeds(seed, idx);
    nlohmann::json entry;
    const std::pair<const char*, const Image*> roles[] = {{"lr", &g.lr}, {"hr", &g.hr}, {"ref", &g.ref}, {"ref_down", &g.ref_down}};
    for (const auto& [role, img] : roles) {
      const std::string name = file_name(idx, role, "fgrid");
      write_fgrid(dir / name, *img);
      write_png(dir / file_name(idx, role, "png"), *img);
      entry[role] = name;
    }
    entry["seeds"] = {{"hr", s.hr}, {"ref", s.ref}, {"lr_noise", s.lr_noise}, {"ref_noise", s.ref_noise}};
    manifest["groups"].push_back(entry);
  }
  std::ofstream os(dir / kManifestName);
  os << manifest.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& dir) {
  std::ifstream is(dir / kManifestName);
  if (!is) throw FormatError("missing " + (dir / kManifestName).string());
  nlohmann::json j;
  try {
    is >> j;
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    for (const auto& e : j.at("groups")) {
      DatasetManifest::Entry entry;
      entry.lr = e.at("lr").get<std::string>();
      entry.hr = e.at("hr").get<std::string>();
      entry.ref = e.at("ref").get<std::string>();
      entry.ref_down = e.at("ref_down").get<std::string>();
      if (e.contains("seeds")) {
        const auto& s = e["seeds"];
        entry.seeds = {s.at("hr").get<std::uint64_t>(), s.at("ref").get<std::uint64_t>(),
                       s.at("lr_noise").get<std::uint64_t>(), s.at("ref_noise").get<std::uint64_t>()};
      }
      m.groups.push_back(std::move(entry));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest in " + dir.string() + ": " + e.what());
  }
}

std::vector<SampleGroup> load_dataset(const fs::path& dir) {
  const DatasetManifest m = read_manifest(dir);
  std::vector<SampleGroup> groups;
  for (const auto& e : m.groups) {
    groups.push_back({read_image(dir / e.lr), read_image(dir / e.hr), read_image(dir / e.ref), read_image(dir / e.ref_down)});
  }
  return groups;
}

}  // namespace ltgsr
