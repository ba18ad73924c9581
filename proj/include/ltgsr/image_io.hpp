#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltgsr/image.hpp"
#include "ltgsr/imaging.hpp"

namespace ltgsr {

/// Raw grid format. 16-byte header: magic "FGRID\0", u16 version, u32 height, u32 width
/// (all little-endian), then height*width float32 pixels in row-major order.
inline constexpr std::uint16_t kFgridVersion = 1;

void write_fgrid(const std::filesystem::path& path, const Image& img);
Image read_fgrid(const std::filesystem::path& path);

/// 8-bit grayscale PNG. Values are clamped to [0,1] and rounded to 0..255.
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

/// Reads by extension: .fgrid or .png.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

struct DatasetManifest {
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  struct Entry {
    std::string lr, hr, ref, ref_down;  // paths relative to the manifest directory
    GroupSeeds seeds{};
  };
  std::vector<Entry> groups;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes every group as .fgrid plus a .png preview, and manifest.json.
void save_dataset(const std::filesystem::path& dir, const std::vector<SampleGroup>& groups, std::uint64_t seed);
std::vector<SampleGroup> load_dataset(const std::filesystem::path& dir);
DatasetManifest read_manifest(const std::filesystem::path& dir);

}  // namespace ltgsr
