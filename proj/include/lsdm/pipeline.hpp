#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lsdm/checkpoint.hpp"
#include "lsdm/data.hpp"
#include "lsdm/diffusion.hpp"
#include "lsdm/generator.hpp"
#include "lsdm/theorems.hpp"

namespace lsdm::harness {

using nlohmann::json;

struct ExperimentConfig {
  data::CircleModelConfig dataset;
  std::size_t latent_dim = 1;
  train::StepOneConfig step1;
  // Step 1 is restarted from fresh child-seeded inits while the final
  // training reconstruction stays above the acceptance level (an unrolled
  // circle arc reconstructs to ~0.007; folded encodings plateau well above
  // it). The best run by final reconstruction is kept.
  std::size_t step1_restarts = 3;
  double step1_accept_recon = 0.02;
  train::StepTwoConfig step2;
  bool use_diffusion = false;
  diffusion::DiffusionConfig diff;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string out_dir = "out";
};

// ---- config (de)serialization with full-default materialization ----

inline json adam_to_json(const nn::AdamConfig& a) {
  return json{{"alpha", a.alpha}, {"beta1", a.beta1}, {"beta2", a.beta2}};
}
inline nn::AdamConfig adam_from_json(const json& j, nn::AdamConfig d) {
  d.alpha = j.value("alpha", d.alpha);
  d.beta1 = j.value("beta1", d.beta1);
  d.beta2 = j.value("beta2", d.beta2);
  return d;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["data"] = {{"n", c.dataset.n},       {"N", c.dataset.N},
               {"c1", c.dataset.c1},     {"c2", c.dataset.c2},
               {"sigma", c.dataset.sigma}, {"test_size", c.dataset.test_size}};
  j["latent_dim"] = c.latent_dim;
  j["step1_restarts"] = c.step1_restarts;
  j["step1_accept_recon"] = c.step1_accept_recon;
  j["step1"] = {{"epochs", c.step1.epochs},
                {"batch", c.step1.batch},
                {"adam", adam_to_json(c.step1.adam)},
                {"milestones", c.step1.milestones},
                {"wae_lambda", c.step1.wae_lambda},
                {"hidden", c.step1.hidden}};
  j["step2"] = {{"variant", train::variant_name(c.step2.variant)},
                {"divergence", train::objective_name(c.step2.divergence)},
                {"critic_iters", c.step2.critic_iters},
                {"gp_lambda", c.step2.gp_lambda},
                {"gp_mode", c.step2.gp_mode == train::GpMode::interpolate
                                ? "interpolate"
                                : "real_point"},
                {"epochs", c.step2.epochs},
                {"batch", c.step2.batch},
                {"gen_adam", adam_to_json(c.step2.gen_adam)},
                {"critic_adam", adam_to_json(c.step2.critic_adam)},
                {"milestones", c.step2.milestones},
                {"noise_dim", c.step2.noise_dim},
                {"ema_decay", c.step2.ema_decay},
                {"gen_hidden", c.step2.gen_hidden},
                {"critic_hidden", c.step2.critic_hidden}};
  j["use_diffusion"] = c.use_diffusion;
  j["diffusion"] = {{"horizon", c.diff.horizon},
                    {"steps", c.diff.steps},
                    {"t_min", c.diff.t_min},
                    {"embed_frequencies", c.diff.embed_frequencies},
                    {"epochs", c.diff.epochs},
                    {"batch", c.diff.batch},
                    {"adam", adam_to_json(c.diff.adam)},
                    {"milestones", c.diff.milestones},
                    {"hidden", c.diff.hidden}};
  j["seeds"] = c.seeds;
  j["out_dir"] = c.out_dir;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.dataset.n = d.value("n", c.dataset.n);
    c.dataset.N = d.value("N", c.dataset.N);
    c.dataset.c1 = d.value("c1", c.dataset.c1);
    c.dataset.c2 = d.value("c2", c.dataset.c2);
    c.dataset.sigma = d.value("sigma", c.dataset.sigma);
    c.dataset.test_size = d.value("test_size", c.dataset.test_size);
  }
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.step1_restarts = j.value("step1_restarts", c.step1_restarts);
  c.step1_accept_recon = j.value("step1_accept_recon", c.step1_accept_recon);
  if (j.contains("step1")) {
    const auto& s = j["step1"];
    c.step1.epochs = s.value("epochs", c.step1.epochs);
    c.step1.batch = s.value("batch", c.step1.batch);
    if (s.contains("adam")) c.step1.adam = adam_from_json(s["adam"], c.step1.adam);
    c.step1.milestones = s.value("milestones", c.step1.milestones);
    c.step1.wae_lambda = s.value("wae_lambda", c.step1.wae_lambda);
    c.step1.hidden = s.value("hidden", c.step1.hidden);
  }
  if (j.contains("step2")) {
    const auto& s = j["step2"];
    const std::string variant = s.value("variant", "clsdm");
    if (variant == "clsdm") c.step2.variant = train::Variant::clsdm;
    else if (variant == "dlsdm") c.step2.variant = train::Variant::dlsdm;
    else throw std::invalid_argument("config: unknown variant " + variant);
    const std::string div = s.value("divergence", "w1");
    if (div == "w1") c.step2.divergence = train::MatchObjective::w1_gp;
    else if (div == "js") c.step2.divergence = train::MatchObjective::js;
    else if (div == "kl") c.step2.divergence = train::MatchObjective::kl;
    else throw std::invalid_argument("config: unknown divergence " + div);
    const std::string mode = s.value("gp_mode", "interpolate");
    if (mode == "interpolate") c.step2.gp_mode = train::GpMode::interpolate;
    else if (mode == "real_point") c.step2.gp_mode = train::GpMode::real_point;
    else throw std::invalid_argument("config: unknown gp_mode " + mode);
    c.step2.critic_iters = s.value("critic_iters", c.step2.critic_iters);
    c.step2.gp_lambda = s.value("gp_lambda", c.step2.gp_lambda);
    c.step2.epochs = s.value("epochs", c.step2.epochs);
    c.step2.batch = s.value("batch", c.step2.batch);
    if (s.contains("gen_adam"))
      c.step2.gen_adam = adam_from_json(s["gen_adam"], c.step2.gen_adam);
    if (s.contains("critic_adam"))
      c.step2.critic_adam = adam_from_json(s["critic_adam"], c.step2.critic_adam);
    c.step2.milestones = s.value("milestones", c.step2.milestones);
    c.step2.noise_dim = s.value("noise_dim", c.step2.noise_dim);
    c.step2.ema_decay = s.value("ema_decay", c.step2.ema_decay);
    c.step2.gen_hidden = s.value("gen_hidden", c.step2.gen_hidden);
    c.step2.critic_hidden = s.value("critic_hidden", c.step2.critic_hidden);
  }
  c.use_diffusion = j.value("use_diffusion", c.use_diffusion);
  if (j.contains("diffusion")) {
    const auto& s = j["diffusion"];
    c.diff.horizon = s.value("horizon", c.diff.horizon);
    c.diff.steps = s.value("steps", c.diff.steps);
    c.diff.t_min = s.value("t_min", c.diff.t_min);
    c.diff.embed_frequencies =
        s.value("embed_frequencies", c.diff.embed_frequencies);
    c.diff.epochs = s.value("epochs", c.diff.epochs);
    c.diff.batch = s.value("batch", c.diff.batch);
    if (s.contains("adam")) c.diff.adam = adam_from_json(s["adam"], c.diff.adam);
    c.diff.milestones = s.value("milestones", c.diff.milestones);
    c.diff.hidden = s.value("hidden", c.diff.hidden);
  }
  c.seeds = j.value("seeds", c.seeds);
  c.out_dir = j.value("out_dir", c.out_dir);
  return c;
}

/// FNV-1a hash of the fully materialized config; embedded in run ids so a
/// record pins the exact configuration that produced it.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  return nn::Rng::fnv1a64(config_to_json(c).dump());
}

// ---- metrics ----

struct MetricsRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string variant;
  std::string divergence;
  std::size_t n = 0, N = 0, m = 0, d = 0;
  double c1 = 0.0, c2 = 0.0;
  double recon_train = 0.0, recon_test = 0.0;
  double w1_joint_test = 0.0, w1_latent_test = 0.0;
  double thm1_lhs = 0.0, thm1_recon = 0.0, thm1_matched = 0.0;
  bool thm1_holds = false, thm2_holds = false;
  double range_sup_dist = 0.0;
  double critic_grad_norm_mean = 0.0;
  double wallclock_s = 0.0;
  std::string status = "ok";

  static std::string csv_header() {
    return "run_id,seed,variant,divergence,n,N,m,d,c1,c2,recon_train,"
           "recon_test,w1_joint_test,w1_latent_test,thm1_lhs,thm1_recon,"
           "thm1_matched,thm1_holds,thm2_holds,range_sup_dist,"
           "critic_grad_norm_mean,wallclock_s,status";
  }

  std::string csv_row() const {
    char buf[640];
    std::snprintf(buf, sizeof(buf),
                  "%s,%llu,%s,%s,%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g,%.3f,%s",
                  run_id.c_str(), static_cast<unsigned long long>(seed),
                  variant.c_str(), divergence.c_str(), n, N, m, d, c1, c2,
                  recon_train, recon_test, w1_joint_test, w1_latent_test,
                  thm1_lhs, thm1_recon, thm1_matched, thm1_holds ? 1 : 0,
                  thm2_holds ? 1 : 0, range_sup_dist, critic_grad_norm_mean,
                  wallclock_s, status.c_str());
    return buf;
  }
};

struct PipelineArtifacts {
  train::AutoencoderPair ae;
  train::GeneratorBundle bundle;
  std::optional<diffusion::ScoreNet> score;
  data::CircleData dataset;
};

namespace detail {

inline double mean_recon_norm(const train::AutoencoderPair& ae,
                              const nn::Tensor& y) {
  const nn::Tensor rec = ae.reconstruct(y);
  double s = 0.0;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < y.cols(); ++c) {
      const double d = y.at(r, c) - rec.at(r, c);
      d2 += d * d;
    }
    s += std::sqrt(d2);
  }
  return s / static_cast<double>(y.rows());
}

inline ot::EmpiricalSample joint_sample(const nn::Tensor& x,
                                        const nn::Tensor& y) {
  return ot::EmpiricalSample::from_matrix(train::concat_xz(x, y));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace detail

/// Latent probe set for the range diagnostic: encoded test responses plus a
/// uniform grid (m = 1) or uniform box draws (m > 1) over their range.
inline ot::EmpiricalSample range_probes(const nn::Tensor& encoded_test,
                                        nn::Rng rng,
                                        std::size_t grid_points = 256) {
  const std::size_t n = encoded_test.rows(), m = encoded_test.cols();
  std::vector<double> lo(m), hi(m);
  for (std::size_t c = 0; c < m; ++c) {
    lo[c] = hi[c] = encoded_test.at(0, c);
    for (std::size_t r = 1; r < n; ++r) {
      lo[c] = std::min(lo[c], encoded_test.at(r, c));
      hi[c] = std::max(hi[c], encoded_test.at(r, c));
    }
  }
  std::vector<double> pts = encoded_test.values;
  if (m == 1) {
    for (std::size_t k = 0; k < grid_points; ++k)
      pts.push_back(lo[0] + (hi[0] - lo[0]) * static_cast<double>(k) /
                                static_cast<double>(grid_points - 1));
  } else {
    for (std::size_t k = 0; k < grid_points; ++k)
      for (std::size_t c = 0; c < m; ++c)
        pts.push_back(rng.uniform(lo[c], hi[c]));
  }
  return ot::EmpiricalSample(n + grid_points, m, std::move(pts));
}

/// Full pipeline: sample data, Step 1, Step 2 (or score training plus
/// Euler-Maruyama generation), then the exact evaluation battery.
inline MetricsRecord run_pipeline(const ExperimentConfig& cfg,
                                  std::uint64_t seed,
                                  PipelineArtifacts* artifacts = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  nn::Rng rng(seed);

  data::CircleModelConfig dcfg = cfg.dataset;
  dcfg.seed = seed;
  data::CircleData ds = data::sample_circle_model(dcfg, rng.child("data"));

  MetricsRecord rec;
  {
    char id[64];
    std::snprintf(id, sizeof(id), "%016llx-s%llu",
                  static_cast<unsigned long long>(config_hash(cfg)),
                  static_cast<unsigned long long>(seed));
    rec.run_id = id;
  }
  rec.seed = seed;
  rec.n = dcfg.n;
  rec.N = dcfg.N;
  rec.m = cfg.latent_dim;
  rec.d = cfg.use_diffusion ? 0 : cfg.step2.noise_dim;
  rec.c1 = dcfg.c1;
  rec.c2 = dcfg.c2;
  rec.variant = cfg.use_diffusion ? "diffusion"
                                  : train::variant_name(cfg.step2.variant);
  rec.divergence =
      cfg.use_diffusion ? "dsm" : train::objective_name(cfg.step2.divergence);

  // Step 1 on the pooled responses.
  nn::Tensor y_all =
      nn::Tensor::zeros({ds.paired.y.rows() + ds.unpaired.y.rows(), 2});
  for (std::size_t r = 0; r < ds.paired.y.rows(); ++r)
    for (std::size_t c = 0; c < 2; ++c) y_all.at(r, c) = ds.paired.y.at(r, c);
  for (std::size_t r = 0; r < ds.unpaired.y.rows(); ++r)
    for (std::size_t c = 0; c < 2; ++c)
      y_all.at(ds.paired.y.rows() + r, c) = ds.unpaired.y.at(r, c);

  auto [ae, s1_hist] = train::train_autoencoder(y_all, cfg.latent_dim,
                                                cfg.step1, rng.child("step1"));
  for (std::size_t retry = 1;
       retry <= cfg.step1_restarts &&
       s1_hist.recon.back() > cfg.step1_accept_recon;
       ++retry) {
    auto [ae2, hist2] = train::train_autoencoder(
        y_all, cfg.latent_dim, cfg.step1,
        rng.child("step1-retry" + std::to_string(retry)));
    if (hist2.recon.back() < s1_hist.recon.back()) {
      ae = std::move(ae2);
      s1_hist = std::move(hist2);
    }
  }

  rec.recon_train = detail::mean_recon_norm(ae, y_all);
  rec.recon_test = detail::mean_recon_norm(ae, ds.test.y);

  const nn::Tensor encoded_test = ae.encode(ds.test.y);
  nn::Tensor gen_latents;  // one latent per test predictor
  train::GeneratorBundle bundle;

  if (!cfg.use_diffusion) {
    bundle = train::train_latent_generator(ds.paired.x, ds.paired.y, ae,
                                           cfg.step2, rng.child("step2"));
    rec.status = bundle.outcome == train::TrainOutcome::ok ? "ok" : "diverged";
    nn::Rng eval_eta = rng.child("eval_eta");
    gen_latents = train::generate_latents_batch(bundle, ds.test.x, eval_eta);
    if (!bundle.history.grad_norm_mean.empty())
      rec.critic_grad_norm_mean = bundle.history.grad_norm_mean.back();
  } else {
    const train::PredictorScaler scaler = train::PredictorScaler::fit(ds.paired.x);
    auto sres = diffusion::train_score_net(scaler.apply(ds.paired.x),
                                           ae.encode(ds.paired.y), cfg.diff,
                                           rng.child("diffusion"));
    nn::Rng eval_eta = rng.child("eval_eta");
    const nn::Tensor xs = scaler.apply(ds.test.x);
    gen_latents = nn::Tensor::zeros({xs.rows(), cfg.latent_dim});
    diffusion::ScoreFn fn = diffusion::score_fn_of(sres.score);
    for (std::size_t r = 0; r < xs.rows(); ++r) {
      nn::Tensor xr = nn::Tensor::matrix(
          1, xs.cols(),
          std::vector<double>(xs.values.begin() + r * xs.cols(),
                              xs.values.begin() + (r + 1) * xs.cols()));
      nn::Tensor zr =
          diffusion::em_sample(fn, xr, cfg.latent_dim, cfg.diff, eval_eta, 1);
      for (std::size_t c = 0; c < cfg.latent_dim; ++c)
        gen_latents.at(r, c) = zr.values[c];
    }
    rec.critic_grad_norm_mean = std::nan("");
    // Minimal bundle so the theorem diagnostics run on the same artifacts.
    bundle.decoder = ae.decoder;
    bundle.encoder = ae.encoder;
    bundle.scaler = scaler;
    bundle.latent_dim = cfg.latent_dim;
    bundle.noise_dim = 0;
    if (artifacts != nullptr) artifacts->score = std::move(sres.score);
  }

  const nn::Tensor generated = ae.decoder.forward_values(gen_latents);

  rec.w1_joint_test =
      ot::w1_exact_equal(detail::joint_sample(ds.test.x, ds.test.y),
                         detail::joint_sample(ds.test.x, generated))
          .first;
  rec.w1_latent_test =
      ot::w1_exact_equal(detail::joint_sample(ds.test.x, gen_latents),
                         detail::joint_sample(ds.test.x, encoded_test))
          .first;

  if (!cfg.use_diffusion) {
    nn::Rng thm_rng = rng.child("thm1");
    const auto t1 =
        train::theorem1_decomposition(ae, bundle, ds.test.x, ds.test.y, thm_rng);
    rec.thm1_lhs = t1.joint_w1;
    rec.thm1_recon = t1.recon_term;
    rec.thm1_matched = t1.matched_w1;
    rec.thm1_holds = t1.inequality_holds;
  } else {
    // Identity-coupling decomposition on the diffusion samples.
    const nn::Tensor recon = ae.reconstruct(ds.test.y);
    rec.thm1_lhs = rec.w1_joint_test;
    rec.thm1_recon = rec.recon_test;
    rec.thm1_matched =
        ot::w1_exact_equal(detail::joint_sample(ds.test.x, generated),
                           detail::joint_sample(ds.test.x, recon))
            .first;
    rec.thm1_holds = rec.thm1_lhs <= rec.thm1_recon + rec.thm1_matched + 1e-9;
  }

  rec.thm2_holds =
      train::theorem2_check(ae.decoder,
                            ot::EmpiricalSample::from_matrix(gen_latents),
                            ot::EmpiricalSample::from_matrix(encoded_test))
          .holds;

  rec.range_sup_dist = train::range_proximity(
      ae.decoder, range_probes(encoded_test, rng.child("range_probes")),
      [&](const double* y, std::size_t) {
        return data::dist_to_circle_support(y[0], y[1], 0.0);
      });

  rec.wallclock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (artifacts != nullptr) {
    artifacts->ae = std::move(ae);
    artifacts->bundle = std::move(bundle);
    artifacts->dataset = std::move(ds);
  }
  return rec;
}

// ---- ablation grids ----

struct GridCell {
  std::string label;
  double x = 0.0;  // varied knob value, for plot data
  ExperimentConfig cfg;
};

struct AblationResult {
  std::vector<MetricsRecord> records;
  std::vector<std::string> summary_rows;       // label, medians, counts
  std::vector<double> cell_median_w1;          // aligned with the input cells
  std::vector<double> cell_median_range;
};

/// Runs every (cell, seed) pair, at most `jobs` in parallel, one child run
/// per pair with its own seed-derived streams. Rows are appended to
/// metrics.csv under a lock as they complete; summary and plot data are
/// written once the grid drains. Per-run failures land in the status column
/// without stopping the grid.
inline AblationResult run_ablation(const std::vector<GridCell>& cells,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::size_t jobs,
                                   const std::string& out_dir,
                                   const std::string& knob = "x") {
  if (cells.empty()) throw std::invalid_argument("ablation: empty grid");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/plotdata");

  struct Task {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::uint64_t s : seeds) tasks.push_back({c, s});

  std::vector<std::vector<MetricsRecord>> per_cell(cells.size());
  std::mutex io_mutex;
  std::ofstream metrics(out_dir + "/metrics.csv", std::ios::trunc);
  metrics << MetricsRecord::csv_header() << "\n";
  std::size_t next = 0;
  std::mutex task_mutex;

  auto worker = [&]() {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lk(task_mutex);
        if (next >= tasks.size()) return;
        k = next++;
      }
      const Task& t = tasks[k];
      MetricsRecord rec;
      try {
        rec = run_pipeline(cells[t.cell].cfg, t.seed);
      } catch (const std::exception& e) {
        rec.run_id = "failed";
        rec.seed = t.seed;
        rec.status = std::string("error:") + e.what();
      }
      std::lock_guard<std::mutex> lk(io_mutex);
      metrics << rec.csv_row() << "\n";
      metrics.flush();
      per_cell[t.cell].push_back(rec);
    }
  };

  const std::size_t nthreads =
      std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  AblationResult out;
  std::ofstream summary(out_dir + "/summary.csv", std::ios::trunc);
  summary << knob
          << ",label,median_w1_joint,median_range_sup,ok_runs,total_runs\n";
  std::ofstream plot(out_dir + "/plotdata/" + knob + ".tsv", std::ios::trunc);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> w1s, ranges;
    std::size_t ok = 0;
    for (const auto& r : per_cell[c]) {
      if (r.status == "ok") {
        w1s.push_back(r.w1_joint_test);
        ranges.push_back(r.range_sup_dist);
        ++ok;
      }
      out.records.push_back(r);
    }
    const double mw1 = detail::median(w1s);
    const double mrange = detail::median(ranges);
    out.cell_median_w1.push_back(mw1);
    out.cell_median_range.push_back(mrange);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.17g,%s,%.17g,%.17g,%zu,%zu",
                  cells[c].x, cells[c].label.c_str(), mw1, mrange, ok,
                  per_cell[c].size());
    summary << buf << "\n";
    out.summary_rows.emplace_back(buf);
    std::snprintf(buf, sizeof(buf), "%.17g\t%.17g", cells[c].x, mw1);
    plot << buf << "\n";
  }
  return out;
}

}  // namespace lsdm::harness
