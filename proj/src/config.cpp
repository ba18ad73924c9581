#include "ltgsr/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ltgsr/errors.hpp"

namespace ltgsr {

using nlohmann::json;

ModelConfig ModelConfig::reduced() {
  ModelConfig c;
  c.channels = {16, 32, 64};
  c.deep_channels = 64;
  c.critic_channels = {16, 32, 64, 64, 64};
  return c;
}

EncoderConfig ModelConfig::encoder() const {
  EncoderConfig e;
  e.channels = channels;
  e.deep_channels = deep_channels;
  e.pretrained_weights_path = encoder_weights;
  e.trainable = encoder_trainable;
  return e;
}

LTGConfig ModelConfig::ltg() const { return {msfp_blocks, channels}; }

DecoderConfig ModelConfig::decoder() const { return {decoder_res_blocks, channels, global_skip}; }

CriticConfig ModelConfig::critic() const { return {critic_channels, 0.2, critic_input}; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("train config: " + what); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch < 1) fail("batch must be >= 1");
  if (crop < 16 || crop % 16 != 0) fail("crop must be a positive multiple of 16");
  if (!(lr_ltg > 0 && lr_encoder > 0 && lr_rest > 0)) fail("learning rates must be > 0");
  if (!(decay_factor > 0 && decay_factor <= 1)) fail("decay_factor must be in (0, 1]");
  if (decay_every < 1) fail("decay_every must be >= 1");
  if (critic_steps < 0) fail("critic_steps must be >= 0");
  const LossWeights& w = weights;
  if (w.lambda_per < 0 || w.lambda_tg < 0 || w.lambda_adv < 0 || w.gp_lambda < 0) fail("loss weights must be >= 0");
  if (perceptual_k < 0 || perceptual_k > 3) fail("perceptual_k must be in [0, 3]");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

json to_json(const ModelConfig& c) {
  json j{{"channels", c.channels},
         {"deep_channels", c.deep_channels},
         {"msfp_blocks", c.msfp_blocks},
         {"decoder_res_blocks", c.decoder_res_blocks},
         {"global_skip", c.global_skip},
         {"critic_channels", c.critic_channels},
         {"critic_input", c.critic_input},
         {"encoder_trainable", c.encoder_trainable},
         {"search", {{"patch", c.search.patch}, {"normalize", c.search.normalize}, {"shared_index", c.search.shared_index}}}};
  j["encoder_weights"] = c.encoder_weights ? json(*c.encoder_weights) : json(nullptr);
  return j;
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch", c.batch},
              {"crop", c.crop},
              {"lr_ltg", c.lr_ltg},
              {"lr_encoder", c.lr_encoder},
              {"lr_rest", c.lr_rest},
              {"decay_factor", c.decay_factor},
              {"decay_every", c.decay_every},
              {"critic_steps", c.critic_steps},
              {"lambda_per", c.weights.lambda_per},
              {"lambda_tg", c.weights.lambda_tg},
              {"lambda_adv", c.weights.lambda_adv},
              {"gp_lambda", c.weights.gp_lambda},
              {"seeds", {{"data", c.seeds.data}, {"init", c.seeds.init}, {"gan", c.seeds.gan}}},
              {"perceptual_k", c.perceptual_k},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"checkpoint_every", c.checkpoint_every}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.channels = j.at("channels").get<std::array<int, 3>>();
  c.deep_channels = j.at("deep_channels");
  c.msfp_blocks = j.at("msfp_blocks");
  c.decoder_res_blocks = j.at("decoder_res_blocks");
  c.global_skip = j.at("global_skip");
  c.critic_channels = j.at("critic_channels").get<std::vector<int>>();
  c.critic_input = j.at("critic_input");
  c.encoder_trainable = j.at("encoder_trainable");
  const json& s = j.at("search");
  c.search = {s.at("patch"), s.at("normalize"), s.at("shared_index")};
  if (!j.at("encoder_weights").is_null()) c.encoder_weights = j.at("encoder_weights").get<std::string>();
  return c;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs");
  c.batch = j.at("batch");
  c.crop = j.at("crop");
  c.lr_ltg = j.at("lr_ltg");
  c.lr_encoder = j.at("lr_encoder");
  c.lr_rest = j.at("lr_rest");
  c.decay_factor = j.at("decay_factor");
  c.decay_every = j.at("decay_every");
  c.critic_steps = j.at("critic_steps");
  c.weights = {j.at("lambda_per"), j.at("lambda_tg"), j.at("lambda_adv"), j.at("gp_lambda")};
  c.seeds = {j.at("seeds").at("data"), j.at("seeds").at("init"), j.at("seeds").at("gan")};
  c.perceptual_k = j.at("perceptual_k");
  c.adam_beta1 = j.at("adam_beta1");
  c.adam_beta2 = j.at("adam_beta2");
  c.adam_eps = j.at("adam_eps");
  c.checkpoint_every = j.at("checkpoint_every");
  return c;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument("config: bad value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config: bad boolean '" + std::string(v) + "' for " + std::string(key));
}

std::vector<int> parse_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_number<int>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

bool apply_setting(std::string_view key, std::string_view value, ModelConfig& m, TrainConfig& t) {
  const std::string_view v = trim(value);
  auto i = [&] { return parse_number<int>(key, v); };
  auto d = [&] { return parse_number<double>(key, v); };
  auto u = [&] { return parse_number<std::uint64_t>(key, v); };
  auto b = [&] { return parse_bool(key, v); };

  if (key == "epochs") t.epochs = i();
  else if (key == "batch") t.batch = i();
  else if (key == "crop") t.crop = i();
  else if (key == "lr_ltg") t.lr_ltg = d();
  else if (key == "lr_encoder") t.lr_encoder = d();
  else if (key == "lr_rest") t.lr_rest = d();
  else if (key == "decay_factor") t.decay_factor = d();
  else if (key == "decay_every") t.decay_every = i();
  else if (key == "critic_steps") t.critic_steps = i();
  else if (key == "lambda_per") t.weights.lambda_per = d();
  else if (key == "lambda_tg") t.weights.lambda_tg = d();
  else if (key == "lambda_adv") t.weights.lambda_adv = d();
  else if (key == "gp_lambda") t.weights.gp_lambda = d();
  else if (key == "seed") t.seeds = {u(), u(), u()};
  else if (key == "data_seed") t.seeds.data = u();
  else if (key == "init_seed") t.seeds.init = u();
  else if (key == "gan_seed") t.seeds.gan = u();
  else if (key == "perceptual_k") t.perceptual_k = i();
  else if (key == "adam_beta1") t.adam_beta1 = d();
  else if (key == "adam_beta2") t.adam_beta2 = d();
  else if (key == "adam_eps") t.adam_eps = d();
  else if (key == "checkpoint_every") t.checkpoint_every = i();
  else if (key == "msfp_blocks") m.msfp_blocks = i();
  else if (key == "decoder_res_blocks") m.decoder_res_blocks = i();
  else if (key == "deep_channels") m.deep_channels = i();
  else if (key == "global_skip") m.global_skip = b();
  else if (key == "encoder_trainable") m.encoder_trainable = b();
  else if (key == "encoder_weights") m.encoder_weights = std::string(v);
  else if (key == "patch") m.search.patch = i();
  else if (key == "normalize_search") m.search.normalize = b();
  else if (key == "shared_index") m.search.shared_index = b();
  else if (key == "critic_channels") m.critic_channels = parse_list(key, v);
  else if (key == "channels") {
    const std::vector<int> c = parse_list(key, v);
    if (c.size() != 3) throw InvalidArgument("config: channels needs three values");
    m.channels = {c[0], c[1], c[2]};
  } else {
    return false;
  }
  return true;
}

void apply_config_file(const std::filesystem::path& path, ModelConfig& model, TrainConfig& train) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config: " + path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string_view key = trim(s.substr(0, eq));
    if (!apply_setting(key, s.substr(eq + 1), model, train)) {
      throw InvalidArgument("config: " + path.string() + ":" + std::to_string(lineno) + ": unknown key '" +
                            std::string(key) + "'");
    }
  }
}

}  // namespace ltgsr
