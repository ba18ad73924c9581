// Command-line front end: data generation, training, inference and evaluation.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ltgsr/errors.hpp"
#include "ltgsr/eval.hpp"
#include "ltgsr/image_io.hpp"
#include "ltgsr/search.hpp"
#include "ltgsr/train.hpp"

using namespace ltgsr;

namespace {

struct TrainArgs {
  std::string data, out, config, resume, log;
  std::optional<int> epochs, batch, crop, msfp_blocks, critic_steps, checkpoint_every;
  std::optional<double> lambda_tg, lambda_per, lambda_adv, gp_lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> channels;
  bool no_global_skip = false;
  bool reduced = false;
};

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  return out;
}

std::unique_ptr<Model> load_model(const std::string& path, TrainState* state = nullptr) {
  const Checkpoint ck = read_checkpoint(path);
  if (state != nullptr) *state = ck.state;
  return restore_model(ck);
}

int run_train(const TrainArgs& a) {
  const std::vector<SampleGroup> data = load_dataset(a.data);
  if (!a.resume.empty()) {
    const Checkpoint ck = read_checkpoint(a.resume);
    auto model = restore_model(ck);
    Checkpoint resumed = ck;
    if (a.epochs) resumed.train.epochs = *a.epochs;
    Trainer trainer(*model, resumed);
    std::ofstream log_file;
    if (!a.log.empty()) log_file.open(a.log, std::ios::app);
    FitOptions opts;
    opts.checkpoint = a.out;
    opts.log = a.log.empty() ? &std::cout : static_cast<std::ostream*>(&log_file);
    trainer.fit(data, opts);
    return 0;
  }

  ModelConfig mc = a.reduced ? ModelConfig::reduced() : ModelConfig{};
  TrainConfig tc;
  if (!a.config.empty()) apply_config_file(a.config, mc, tc);
  if (a.channels && !apply_setting("channels", *a.channels, mc, tc)) return 2;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch) tc.batch = *a.batch;
  if (a.crop) tc.crop = *a.crop;
  if (a.msfp_blocks) mc.msfp_blocks = *a.msfp_blocks;
  if (a.critic_steps) tc.critic_steps = *a.critic_steps;
  if (a.checkpoint_every) tc.checkpoint_every = *a.checkpoint_every;
  if (a.lambda_tg) tc.weights.lambda_tg = *a.lambda_tg;
  if (a.lambda_per) tc.weights.lambda_per = *a.lambda_per;
  if (a.lambda_adv) tc.weights.lambda_adv = *a.lambda_adv;
  if (a.gp_lambda) tc.weights.gp_lambda = *a.gp_lambda;
  if (a.seed) tc.seeds = {*a.seed, *a.seed, *a.seed};
  if (a.no_global_skip) mc.global_skip = false;
  tc.validate();
  mc.critic_input = tc.crop;

  Model model(mc, tc.seeds.init);
  Trainer trainer(model, tc);
  std::ofstream log_file;
  if (!a.log.empty()) log_file.open(a.log);
  FitOptions opts;
  opts.checkpoint = a.out;
  opts.log = a.log.empty() ? &std::cout : static_cast<std::ostream*>(&log_file);
  trainer.fit(data, opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-based OCTA super-resolution with a learnable texture generator"};
  app.require_subcommand(1);

  int n = 8, size = 96;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic phantom dataset");
  gen->add_option("--n", n, "Number of groups")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Dataset seed");
  gen->add_option("--size", size, "Image side in pixels (multiple of 4, >= 32)");
  gen->add_option("--out", out_dir, "Output directory")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model (or resume one)");
  train->add_option("--data", ta.data, "Dataset directory")->required();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--config", ta.config, "key = value config file (flags override it)");
  train->add_option("--resume", ta.resume, "Continue from this checkpoint");
  train->add_option("--log", ta.log, "Per-epoch JSON lines (default stdout)");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--batch", ta.batch);
  train->add_option("--crop", ta.crop);
  train->add_option("--msfp-blocks", ta.msfp_blocks);
  train->add_option("--lambda-tg", ta.lambda_tg);
  train->add_option("--lambda-per", ta.lambda_per);
  train->add_option("--lambda-adv", ta.lambda_adv);
  train->add_option("--gp-lambda", ta.gp_lambda);
  train->add_option("--critic-steps", ta.critic_steps);
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Epochs between checkpoints");
  train->add_option("--seed", ta.seed, "Sets the data, init and GAN seeds");
  train->add_option("--channels", ta.channels, "Encoder widths, e.g. 16,32,64");
  train->add_flag("--reduced", ta.reduced, "Desk-scale widths (16, 32, 64)");
  train->add_flag("--no-global-skip", ta.no_global_skip, "Predict the image directly, not a residual");

  std::string ckpt, in_path, out_path, data_dir, csv_path, seeds = "1,2,3";
  auto* inf = app.add_subcommand("infer", "Refless super-resolution of one image");
  inf->add_option("--ckpt", ckpt)->required();
  inf->add_option("--in", in_path)->required();
  inf->add_option("--out", out_path)->required();

  auto* ev = app.add_subcommand("eval", "PSNR / SSIM / pdist of refless inference");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--data", data_dir)->required();
  ev->add_option("--csv", csv_path, "Also write per-image rows as CSV");

  int trials = 32;
  auto* oracle = app.add_subcommand("oracle-check", "Compare fast texture search with the brute-force oracle");
  oracle->add_option("--trials", trials)->check(CLI::PositiveNumber);
  oracle->add_option("--seed", seed);

  auto* sens = app.add_subcommand("ref-sensitivity", "Shuffle Ref images and compare search vs refless paths");
  sens->add_option("--ckpt", ckpt)->required();
  sens->add_option("--data", data_dir)->required();
  sens->add_option("--seeds", seeds, "Comma-separated shuffle seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      save_dataset(out_dir, make_dataset(n, seed, size, size), seed);
    } else if (*train) {
      return run_train(ta);
    } else if (*inf) {
      write_image(out_path, infer(*load_model(ckpt), read_image(in_path)));
    } else if (*ev) {
      const MetricReport r = evaluate(*load_model(ckpt), load_dataset(data_dir));
      if (!csv_path.empty()) std::ofstream(csv_path) << to_csv(r);
      std::cout << to_json(r).dump(2) << '\n';
    } else if (*oracle) {
      nlohmann::json j;
      for (bool shared : {true, false}) {
        const OracleReport r = run_oracle_check(trials, seed, SearchConfig{3, true, shared});
        j[shared ? "shared_index" : "per_scale"] = {{"trials", r.trials},
                                                     {"indices_equal", r.indices_equal},
                                                     {"max_relevance_dev", r.max_relevance_dev},
                                                     {"max_texture_dev", r.max_texture_dev}};
      }
      std::cout << j.dump(2) << '\n';
      return j["shared_index"]["indices_equal"] && j["per_scale"]["indices_equal"] ? 0 : 1;
    } else if (*sens) {
      TrainState state;
      auto model = load_model(ckpt, &state);
      const std::vector<std::uint64_t> s = parse_seeds(seeds);
      std::cout << to_json(ref_sensitivity(*model, state, load_dataset(data_dir), s)).dump(2) << '\n';
    }
  } catch (const TrainingDiverged& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
