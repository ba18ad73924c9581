#include "ltgsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ltgsr/errors.hpp"

namespace ltgsr {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

Shape shape_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("checkpoint: bad shape");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  json header{{"version", ck.version},
              {"model", to_json(ck.model)},
              {"train", to_json(ck.train)},
              {"state", {{"epoch", ck.state.epoch}, {"step_in_epoch", ck.state.step_in_epoch},
                         {"global_step", ck.state.global_step}}},
              {"dtype", "f64"}};
  std::vector<const Tensor*> blobs;
  std::uint64_t offset = 0;
  auto place = [&](const Tensor& t) {
    json at{{"offset", offset}, {"count", t.size()}};
    blobs.push_back(&t);
    offset += t.size();
    return at;
  };
  json entries = json::array();
  for (const ParamBlob& p : ck.params) {
    json e{{"name", p.name}, {"shape", shape_json(p.value.shape())}, {"trainable", p.trainable}, {"t", p.t}};
    e["value"] = place(p.value);
    if (!p.m.empty()) {
      e["m"] = place(p.m);
      e["v"] = place(p.v);
    }
    entries.push_back(std::move(e));
  }
  header["params"] = std::move(entries);
  const std::string text = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("checkpoint: cannot write " + tmp.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Tensor* t : blobs) {
      out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
    }
    if (!out) throw FormatError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  char magic[sizeof kCheckpointMagic];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("checkpoint: " + path.string() + " is not an LTGCKPT1 file");
  }
  if (len > (1ull << 30)) throw FormatError("checkpoint: implausible header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("checkpoint: truncated header");

  Checkpoint ck;
  try {
    const json h = json::parse(text);
    ck.version = h.at("version");
    if (ck.version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(ck.version));
    if (h.at("dtype") != "f64") throw FormatError("checkpoint: unsupported dtype");
    ck.model = model_config_from_json(h.at("model"));
    ck.train = train_config_from_json(h.at("train"));
    const json& s = h.at("state");
    ck.state = {s.at("epoch"), s.at("step_in_epoch"), s.at("global_step")};

    const std::streamoff data_start = in.tellg();
    auto load = [&](const json& at, const Shape& shape) {
      const std::uint64_t count = at.at("count");
      if (count != shape.numel()) throw FormatError("checkpoint: blob size does not match its shape");
      Tensor t(shape);
      in.seekg(data_start + static_cast<std::streamoff>(at.at("offset").get<std::uint64_t>() * sizeof(double)));
      in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(count * sizeof(double)));
      if (!in) throw FormatError("checkpoint: truncated blob");
      return t;
    };
    for (const json& e : h.at("params")) {
      ParamBlob p;
      p.name = e.at("name");
      p.trainable = e.at("trainable");
      p.t = e.at("t");
      const Shape shape = shape_from(e.at("shape"));
      p.value = load(e.at("value"), shape);
      if (e.contains("m")) {
        p.m = load(e.at("m"), shape);
        p.v = load(e.at("v"), shape);
      }
      ck.params.push_back(std::move(p));
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("checkpoint: malformed header: ") + ex.what());
  }
  return ck;
}

}  // namespace ltgsr
