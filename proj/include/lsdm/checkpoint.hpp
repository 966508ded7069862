#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsdm/diffusion.hpp"
#include "lsdm/generator.hpp"
#include "lsdm/network.hpp"

namespace lsdm::io {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

/// Floats are written with 17 significant digits, which round-trips any
/// IEEE-754 double, so load(save(net)) is bit-exact.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_array(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  out += ']';
}

inline void write_mlp_fields(std::string& out, const nn::Network& net,
                             const nn::EmaState* ema) {
  out += "\"dims\":[";
  for (std::size_t i = 0; i < net.dims().size(); ++i) {
    if (i) out += ',';
    out += std::to_string(net.dims()[i]);
  }
  out += "],\"activations\":[";
  for (std::size_t i = 0; i < net.activations().size(); ++i) {
    if (i) out += ',';
    out += '"';
    out += nn::activation_name(net.activations()[i]);
    out += '"';
  }
  out += "],\"weights\":[";
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (l) out += ',';
    write_array(out, net.weights()[l].values);
  }
  out += "],\"biases\":[";
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (l) out += ',';
    write_array(out, net.biases()[l].values);
  }
  out += ']';
  if (ema != nullptr) {
    out += ",\"ema\":{\"decay\":";
    out += fmt(ema->decay);
    out += ",\"shadow\":[";
    for (std::size_t i = 0; i < ema->shadow.size(); ++i) {
      if (i) out += ',';
      write_array(out, ema->shadow[i].values);
    }
    out += "]}";
  }
}

inline nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded())
    throw std::runtime_error("checkpoint: malformed JSON in " + path);
  return j;
}

inline void check_version(const nlohmann::json& j, const std::string& path) {
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw std::runtime_error("checkpoint: malformed JSON in " + path +
                             " (missing version)");
  const int v = j["version"].get<int>();
  if (v != kCheckpointVersion)
    throw std::runtime_error(
        "checkpoint: version mismatch in " + path + " (file has version " +
        std::to_string(v) + ", reader supports version " +
        std::to_string(kCheckpointVersion) + ")");
}

inline nn::Network mlp_from_json(const nlohmann::json& j,
                                 nn::EmaState* ema_out) {
  if (!j.contains("dims") || !j.contains("activations") ||
      !j.contains("weights") || !j.contains("biases"))
    throw std::runtime_error("checkpoint: malformed mlp object");
  nn::MlpSpec spec;
  spec.dims = j["dims"].get<std::vector<std::size_t>>();
  for (const auto& s : j["activations"])
    spec.acts.push_back(nn::activation_from_name(s.get<std::string>()));
  nn::Rng unused(0);
  nn::Network net = nn::Network::build(spec, unused);

  const auto& ws = j["weights"];
  const auto& bs = j["biases"];
  if (ws.size() != net.depth() || bs.size() != net.depth())
    throw std::runtime_error("checkpoint: layer count inconsistent with dims");
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto w = ws[l].get<std::vector<double>>();
    auto b = bs[l].get<std::vector<double>>();
    if (w.size() != net.weight(l).size() || b.size() != net.bias(l).size())
      throw std::runtime_error("checkpoint: weight shape inconsistent with dims");
    net.weight(l).values = std::move(w);
    net.bias(l).values = std::move(b);
  }
  if (ema_out != nullptr && j.contains("ema")) {
    const auto& e = j["ema"];
    ema_out->decay = e["decay"].get<double>();
    ema_out->shadow.clear();
    auto params = net.parameters();
    const auto& shadow = e["shadow"];
    if (shadow.size() != params.size())
      throw std::runtime_error("checkpoint: ema shadow count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto v = shadow[i].get<std::vector<double>>();
      if (v.size() != params[i]->size())
        throw std::runtime_error("checkpoint: ema shadow shape mismatch");
      ema_out->shadow.push_back(nn::Tensor(params[i]->shape, std::move(v)));
    }
  }
  return net;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

}  // namespace detail

inline std::string mlp_to_string(const nn::Network& net,
                                 const nn::EmaState* ema = nullptr,
                                 const char* kind = "mlp") {
  std::string out = "{\"version\":1,\"kind\":\"";
  out += kind;
  out += "\",";
  detail::write_mlp_fields(out, net, ema);
  out += '}';
  return out;
}

inline void save_mlp(const std::string& path, const nn::Network& net,
                     const nn::EmaState* ema = nullptr) {
  detail::write_file(path, mlp_to_string(net, ema));
}

inline nn::Network load_mlp(const std::string& path,
                            nn::EmaState* ema_out = nullptr) {
  nlohmann::json j = detail::parse_file(path);
  detail::check_version(j, path);
  if (j.value("kind", "") != "mlp")
    throw std::runtime_error("checkpoint: expected kind \"mlp\" in " + path);
  return detail::mlp_from_json(j, ema_out);
}

inline std::string peek_kind(const std::string& path) {
  nlohmann::json j = detail::parse_file(path);
  detail::check_version(j, path);
  return j.value("kind", "");
}

// ---- score networks ----

inline void save_score(const std::string& path,
                       const diffusion::ScoreNet& score,
                       const diffusion::DiffusionConfig& cfg) {
  std::string out = "{\"version\":1,\"kind\":\"score_mlp\",";
  detail::write_mlp_fields(out, score.net, nullptr);
  out += ",\"latent_dim\":" + std::to_string(score.latent_dim);
  out += ",\"cond_dim\":" + std::to_string(score.cond_dim);
  out += ",\"embed_frequencies\":" + std::to_string(score.embed_frequencies);
  out += ",\"data_std\":";
  detail::write_array(out, score.data_std);
  out += ",\"diffusion\":{\"horizon\":" + detail::fmt(cfg.horizon);
  out += ",\"steps\":" + std::to_string(cfg.steps);
  out += ",\"t_min\":" + detail::fmt(cfg.t_min) + "}}";
  detail::write_file(path, out);
}

inline std::pair<diffusion::ScoreNet, diffusion::DiffusionConfig> load_score(
    const std::string& path) {
  nlohmann::json j = detail::parse_file(path);
  detail::check_version(j, path);
  if (j.value("kind", "") != "score_mlp")
    throw std::runtime_error("checkpoint: expected kind \"score_mlp\" in " + path);
  diffusion::ScoreNet s;
  s.net = detail::mlp_from_json(j, nullptr);
  s.latent_dim = j["latent_dim"].get<std::size_t>();
  s.cond_dim = j["cond_dim"].get<std::size_t>();
  s.embed_frequencies = j["embed_frequencies"].get<std::size_t>();
  s.data_std = j["data_std"].get<std::vector<double>>();
  if (s.data_std.size() != s.latent_dim)
    throw std::runtime_error("checkpoint: data_std shape inconsistent");
  diffusion::DiffusionConfig cfg;
  cfg.horizon = j["diffusion"]["horizon"].get<double>();
  cfg.steps = j["diffusion"]["steps"].get<std::size_t>();
  cfg.t_min = j["diffusion"]["t_min"].get<double>();
  cfg.embed_frequencies = s.embed_frequencies;
  return {std::move(s), cfg};
}

// ---- generator bundles ----

inline void save_bundle(const std::string& path,
                        const train::GeneratorBundle& b) {
  std::string out = "{\"version\":1,\"kind\":\"bundle\",\"decoder\":";
  out += mlp_to_string(b.decoder);
  out += ",\"encoder\":";
  out += mlp_to_string(b.encoder);
  out += ",\"latent_gen\":";
  out += mlp_to_string(b.latent_gen, &b.ema);
  out += ",\"meta\":{\"latent_dim\":" + std::to_string(b.latent_dim);
  out += ",\"noise_dim\":" + std::to_string(b.noise_dim);
  out += ",\"seed\":" + std::to_string(b.seed);
  out += ",\"variant\":\"";
  out += train::variant_name(b.cfg.variant);
  out += "\",\"divergence\":\"";
  out += train::objective_name(b.cfg.divergence);
  out += "\",\"gp_mode\":\"";
  out += b.cfg.gp_mode == train::GpMode::interpolate ? "interpolate"
                                                     : "real_point";
  out += "\",\"outcome\":\"";
  out += b.outcome == train::TrainOutcome::ok ? "ok" : "diverged";
  out += "\",\"step2\":{\"epochs\":" + std::to_string(b.cfg.epochs);
  out += ",\"batch\":" + std::to_string(b.cfg.batch);
  out += ",\"critic_iters\":" + std::to_string(b.cfg.critic_iters);
  out += ",\"gp_lambda\":" + detail::fmt(b.cfg.gp_lambda);
  out += ",\"ema_decay\":" + detail::fmt(b.cfg.ema_decay);
  out += ",\"gen_alpha\":" + detail::fmt(b.cfg.gen_adam.alpha);
  out += ",\"critic_alpha\":" + detail::fmt(b.cfg.critic_adam.alpha);
  out += "},\"scaler_offset\":";
  detail::write_array(out, b.scaler.offset);
  out += ",\"scaler_scale\":";
  detail::write_array(out, b.scaler.scale);
  out += ",\"history_critic_gap\":";
  detail::write_array(out, b.history.critic_gap);
  out += ",\"history_generator_loss\":";
  detail::write_array(out, b.history.generator_loss);
  out += "}}";
  detail::write_file(path, out);
}

inline train::GeneratorBundle load_bundle(const std::string& path) {
  nlohmann::json j = detail::parse_file(path);
  detail::check_version(j, path);
  if (j.value("kind", "") != "bundle")
    throw std::runtime_error("checkpoint: expected kind \"bundle\" in " + path);
  train::GeneratorBundle b;
  b.decoder = detail::mlp_from_json(j["decoder"], nullptr);
  b.encoder = detail::mlp_from_json(j["encoder"], nullptr);
  b.latent_gen = detail::mlp_from_json(j["latent_gen"], &b.ema);
  if (b.ema.shadow.empty())
    throw std::runtime_error("checkpoint: bundle missing ema shadow");
  const auto& m = j["meta"];
  b.latent_dim = m["latent_dim"].get<std::size_t>();
  b.noise_dim = m["noise_dim"].get<std::size_t>();
  b.seed = m["seed"].get<std::uint64_t>();
  b.cfg.variant = m["variant"].get<std::string>() == "clsdm"
                      ? train::Variant::clsdm
                      : train::Variant::dlsdm;
  const std::string div = m.value("divergence", "w1");
  b.cfg.divergence = div == "w1"   ? train::MatchObjective::w1_gp
                     : div == "js" ? train::MatchObjective::js
                                   : train::MatchObjective::kl;
  b.cfg.gp_mode = m.value("gp_mode", "interpolate") == "interpolate"
                      ? train::GpMode::interpolate
                      : train::GpMode::real_point;
  if (m.contains("step2")) {
    const auto& s2 = m["step2"];
    b.cfg.epochs = s2.value("epochs", b.cfg.epochs);
    b.cfg.batch = s2.value("batch", b.cfg.batch);
    b.cfg.critic_iters = s2.value("critic_iters", b.cfg.critic_iters);
    b.cfg.gp_lambda = s2.value("gp_lambda", b.cfg.gp_lambda);
    b.cfg.ema_decay = s2.value("ema_decay", b.cfg.ema_decay);
    b.cfg.gen_adam.alpha = s2.value("gen_alpha", b.cfg.gen_adam.alpha);
    b.cfg.critic_adam.alpha = s2.value("critic_alpha", b.cfg.critic_adam.alpha);
  }
  b.outcome = m["outcome"].get<std::string>() == "ok"
                  ? train::TrainOutcome::ok
                  : train::TrainOutcome::diverged;
  b.scaler.offset = m["scaler_offset"].get<std::vector<double>>();
  b.scaler.scale = m["scaler_scale"].get<std::vector<double>>();
  b.history.critic_gap = m["history_critic_gap"].get<std::vector<double>>();
  b.history.generator_loss =
      m["history_generator_loss"].get<std::vector<double>>();
  return b;
}

}  // namespace lsdm::io
