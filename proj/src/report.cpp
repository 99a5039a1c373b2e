#include "degeo/report.hpp"

#include <json.hpp>

namespace degeo {

namespace {

using nlohmann::ordered_json;

ordered_json state_json(const ModelState& s) {
  return {{"mu", s.mu}, {"sigma1_sq", s.sigma1_sq}, {"sigma2_sq", s.sigma2_sq}, {"beta", s.beta}, {"rho", s.rho}};
}

}  // namespace

std::string detect_manifest(const PipelineResult& res, const PipelineConfig& cfg, const RunInfo& info) {
  ordered_json j;
  j["tool"] = "degeo";
  j["version"] = kVersion;
  j["command"] = "detect";
  j["input"] = {{"path", info.input_path}, {"fnv1a64", info.input_hash}, {"column", info.column}};
  const auto& c = cfg.chain;
  j["chain"] = {{"seed", c.seed},
                {"chains", c.n_chains},
                {"max_iterations", c.max_iterations},
                {"burn_in", c.burn_in},
                {"thinning", c.thinning},
                {"check_interval", c.check_interval},
                {"rhat_tolerance", c.rhat_tolerance},
                {"rho_grid_size", c.rho_grid_size}};
  const auto& h = res.hyper;
  j["hyperparams"] = {{"g", h.g}, {"h", h.h}, {"a", h.a}, {"b", h.b}, {"r", h.r},
                      {"s", h.s}, {"p", h.p}, {"q", h.q}, {"u", h.u}, {"v", h.v}};
  j["mode"] = cfg.fallback ? "fallback" : (cfg.stop == StopMode::Svr ? "svr" : "beta");
  j["threshold"] = cfg.threshold;
  if (!info.model_path.empty()) j["model"] = {{"path", info.model_path}, {"fnv1a64", info.model_hash}};

  ordered_json branches = ordered_json::array();
  for (const auto& b : res.detection.branches) {
    ordered_json rh;
    for (std::size_t p = 0; p < kParameterNames.size(); ++p) rh[kParameterNames[p]] = b.rhat[p];
    ordered_json feats;
    const auto vals = b.features.values();
    for (std::size_t k = 0; k < kFeatureNames.size(); ++k) feats[kFeatureNames[k]] = vals[k];
    branches.push_back({{"change_point", b.change_point.name()},
                        {"accepted", b.accepted},
                        {"classifier_output", b.svr_output},
                        {"chain_seed", b.seed},
                        {"iterations", b.iterations},
                        {"estimate", state_json(b.estimate)},
                        {"rhat", rh},
                        {"features", feats},
                        {"n_cells", b.cells.size()}});
  }
  j["branches"] = branches;
  const auto& n = res.onsets.noise;
  if (!res.onsets.branches.empty() || cfg.fallback)
    j["noise"] = {{"mu_hat", n.mu_hat}, {"sigma_hat_sq", n.sigma_hat_sq}, {"threshold", n.threshold}, {"n_points", n.n_points}};
  std::size_t n_expr = 0;
  for (bool e : res.expressing) n_expr += e ? 1 : 0;
  j["expressing_cells"] = n_expr;
  j["status"] = res.detection.aborted ? "aborted" : "ok";
  if (res.detection.aborted) j["error"] = res.detection.abort_reason;
  if (res.detection.exhausted) j["candidates_exhausted"] = true;
  return j.dump(2) + "\n";
}

}  // namespace degeo
