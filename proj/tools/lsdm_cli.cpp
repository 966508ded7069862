// Command-line front end: two-step training, diffusion variant, exact
// evaluation, ablation grids and the verification suite.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lsdm/lsdm.hpp"

namespace fs = std::filesystem;
using lsdm::harness::ExperimentConfig;
using nlohmann::json;

namespace {

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j = json::parse(in);
  return lsdm::harness::config_from_json(j);
}

void ensure_dirs(const std::string& out) {
  fs::create_directories(out);
  fs::create_directories(out + "/checkpoints");
}

lsdm::data::CircleData sample_data(const ExperimentConfig& cfg,
                                   std::uint64_t seed) {
  auto dcfg = cfg.dataset;
  dcfg.seed = seed;
  lsdm::nn::Rng rng(seed);
  return lsdm::data::sample_circle_model(dcfg, rng.child("data"));
}

lsdm::nn::Tensor pooled_responses(const lsdm::data::CircleData& ds) {
  const auto &yp = ds.paired.y, &yu = ds.unpaired.y;
  lsdm::nn::Tensor y = lsdm::nn::Tensor::zeros({yp.rows() + yu.rows(), 2});
  for (std::size_t r = 0; r < yp.rows(); ++r)
    for (std::size_t c = 0; c < 2; ++c) y.at(r, c) = yp.at(r, c);
  for (std::size_t r = 0; r < yu.rows(); ++r)
    for (std::size_t c = 0; c < 2; ++c) y.at(yp.rows() + r, c) = yu.at(r, c);
  return y;
}

int cmd_train_ae(const ExperimentConfig& cfg, std::uint64_t seed,
                 const std::string& out) {
  ensure_dirs(out);
  auto ds = sample_data(cfg, seed);
  lsdm::nn::Rng rng(seed);
  auto [ae, hist] = lsdm::train::train_autoencoder(
      pooled_responses(ds), cfg.latent_dim, cfg.step1, rng.child("step1"));
  lsdm::io::save_mlp(out + "/checkpoints/encoder.json", ae.encoder);
  lsdm::io::save_mlp(out + "/checkpoints/decoder.json", ae.decoder);
  std::cout << "step1 done: final recon " << hist.recon.back() << "\n";
  return 0;
}

lsdm::train::AutoencoderPair load_ae(const std::string& out,
                                     std::size_t latent_dim) {
  lsdm::train::AutoencoderPair ae;
  ae.encoder = lsdm::io::load_mlp(out + "/checkpoints/encoder.json");
  ae.decoder = lsdm::io::load_mlp(out + "/checkpoints/decoder.json");
  ae.latent_dim = latent_dim;
  return ae;
}

int cmd_train_gen(ExperimentConfig cfg, std::uint64_t seed,
                  const std::string& out, const std::string& variant,
                  const std::string& divergence) {
  json patch;
  if (!variant.empty()) patch["step2"]["variant"] = variant;
  if (!divergence.empty()) patch["step2"]["divergence"] = divergence;
  if (!patch.empty()) {
    json full = lsdm::harness::config_to_json(cfg);
    full.merge_patch(patch);
    cfg = lsdm::harness::config_from_json(full);
  }
  ensure_dirs(out);
  auto ds = sample_data(cfg, seed);
  auto ae = load_ae(out, cfg.latent_dim);
  lsdm::nn::Rng rng(seed);
  auto bundle = lsdm::train::train_latent_generator(ds.paired.x, ds.paired.y,
                                                    ae, cfg.step2,
                                                    rng.child("step2"));
  lsdm::io::save_bundle(out + "/checkpoints/bundle.json", bundle);
  std::cout << "step2 done: outcome "
            << (bundle.outcome == lsdm::train::TrainOutcome::ok ? "ok"
                                                                : "diverged")
            << "\n";
  return bundle.outcome == lsdm::train::TrainOutcome::ok ? 0 : 2;
}

int cmd_train_diffusion(const ExperimentConfig& cfg, std::uint64_t seed,
                        const std::string& out) {
  ensure_dirs(out);
  auto ds = sample_data(cfg, seed);
  auto ae = load_ae(out, cfg.latent_dim);
  lsdm::nn::Rng rng(seed);
  auto scaler = lsdm::train::PredictorScaler::fit(ds.paired.x);
  auto res = lsdm::diffusion::train_score_net(scaler.apply(ds.paired.x),
                                              ae.encode(ds.paired.y), cfg.diff,
                                              rng.child("diffusion"));
  lsdm::io::save_score(out + "/checkpoints/score.json", res.score, cfg.diff);
  std::cout << "diffusion done: final dsm loss " << res.loss_history.back()
            << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& out) {
  ensure_dirs(out);
  std::ofstream metrics(out + "/metrics.csv", std::ios::trunc);
  metrics << lsdm::harness::MetricsRecord::csv_header() << "\n";
  bool all_ok = true;
  for (std::uint64_t seed : cfg.seeds) {
    lsdm::harness::PipelineArtifacts art;
    auto rec = lsdm::harness::run_pipeline(cfg, seed, &art);
    metrics << rec.csv_row() << "\n";
    lsdm::io::save_mlp(out + "/checkpoints/encoder-" + rec.run_id + ".json",
                       art.ae.encoder);
    lsdm::io::save_mlp(out + "/checkpoints/decoder-" + rec.run_id + ".json",
                       art.ae.decoder);
    if (!cfg.use_diffusion)
      lsdm::io::save_bundle(out + "/checkpoints/bundle-" + rec.run_id + ".json",
                            art.bundle);
    else if (art.score)
      lsdm::io::save_score(out + "/checkpoints/score-" + rec.run_id + ".json",
                           *art.score, cfg.diff);
    std::cout << "seed " << seed << ": w1_joint_test " << rec.w1_joint_test
              << " status " << rec.status << "\n";
    all_ok = all_ok && rec.status == "ok";
  }
  return all_ok ? 0 : 2;
}

int cmd_ablate(const std::string& grid_path, std::size_t jobs,
               const std::string& out_override) {
  std::ifstream in(grid_path);
  if (!in) throw std::runtime_error("cannot open grid file " + grid_path);
  json j = json::parse(in);
  ExperimentConfig base = j.contains("base")
                              ? lsdm::harness::config_from_json(j["base"])
                              : ExperimentConfig{};
  const std::string knob = j.value("knob", "x");
  std::vector<std::uint64_t> seeds =
      j.value("seeds", std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  std::vector<lsdm::harness::GridCell> cells;
  for (const auto& cj : j.at("cells")) {
    lsdm::harness::GridCell cell;
    cell.x = cj.value("x", 0.0);
    cell.label = cj.value("label", knob + "=" + std::to_string(cell.x));
    json merged = lsdm::harness::config_to_json(base);
    if (cj.contains("overrides")) merged.merge_patch(cj["overrides"]);
    cell.cfg = lsdm::harness::config_from_json(merged);
    cells.push_back(std::move(cell));
  }
  const std::string out = out_override.empty() ? base.out_dir : out_override;
  auto res = lsdm::harness::run_ablation(cells, seeds, jobs, out, knob);
  for (const auto& row : res.summary_rows) std::cout << row << "\n";
  return 0;
}

int cmd_verify(const std::string& scope, const std::string& out) {
  ensure_dirs(out);
  auto rep = lsdm::verify::run_verification_suite(scope);
  for (const auto& c : rep.checks)
    std::cout << (c.ok() ? "PASS" : "FAIL") << " " << c.name << " ("
              << c.passed << "/" << c.total << ", worst slack "
              << c.worst_slack << ")\n";
  std::ofstream f(out + "/report.json", std::ios::trunc);
  f << rep.to_json().dump(2) << "\n";
  std::cout << (rep.all_pass() ? "all checks passed" : "CHECKS FAILED")
            << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_export(const ExperimentConfig& cfg, std::uint64_t seed,
               const std::string& out) {
  ensure_dirs(out);
  auto ds = sample_data(cfg, seed);
  std::ofstream f(out + "/dataset.csv", std::ios::trunc);
  lsdm::data::export_csv(ds, f);
  std::cout << "wrote " << out << "/dataset.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step semi-supervised conditional generation with exact "
               "optimal-transport evaluation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", grid_path, variant, divergence;
  std::string scope = "all";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t jobs = std::thread::hardware_concurrency();

  app.add_option("--config", config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "run seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "parallel workers");

  auto* train_ae = app.add_subcommand("train-ae", "Step 1: representation learning");
  auto* train_gen =
      app.add_subcommand("train-gen", "Step 2: conditional generation");
  train_gen->add_option("--variant", variant, "clsdm | dlsdm");
  train_gen->add_option("--divergence", divergence, "w1 | js | kl");
  auto* train_diff =
      app.add_subcommand("train-diffusion", "Step 2 alternative: score matching");
  auto* eval = app.add_subcommand("eval", "full pipeline per seed plus metrics");
  auto* ablate = app.add_subcommand("ablate", "run a grid of configurations");
  ablate->add_option("--grid", grid_path, "JSON grid file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "property verification suite");
  verify->add_option("--scope", scope,
                     "all | ot | divergence | prop3 | theorems | gradients | "
                     "diffusion | quantile");
  auto* exportd = app.add_subcommand("export-data", "write dataset CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (!config_path.empty() && out_dir == "out" && cfg.out_dir != "out")
      out_dir = cfg.out_dir;
    const std::uint64_t run_seed =
        seed_set ? seed : (cfg.seeds.empty() ? 0 : cfg.seeds.front());

    if (*train_ae) return cmd_train_ae(cfg, run_seed, out_dir);
    if (*train_gen) return cmd_train_gen(cfg, run_seed, out_dir, variant, divergence);
    if (*train_diff) return cmd_train_diffusion(cfg, run_seed, out_dir);
    if (*eval) return cmd_eval(cfg, out_dir);
    if (*ablate) return cmd_ablate(grid_path, jobs, out_dir);
    if (*verify) return cmd_verify(scope, out_dir);
    if (*exportd) return cmd_export(cfg, run_seed, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
