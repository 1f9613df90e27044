#include "meattack/attack.hpp"

#include <algorithm>
#include <cassert>

#include "meattack/error.hpp"

namespace meattack {

std::string to_string(LookupPolicy policy) {
  switch (policy) {
    case LookupPolicy::automatic: return "auto";
    case LookupPolicy::raw: return "raw";
    case LookupPolicy::traceback: return "traceback";
  }
  return "unknown";
}

LookupPolicy lookup_policy_from_string(const std::string& name) {
  if (name == "auto") return LookupPolicy::automatic;
  if (name == "raw") return LookupPolicy::raw;
  if (name == "traceback") return LookupPolicy::traceback;
  throw InvalidArgument("unknown lookup policy '" + name + "'");
}

AttackConfig AttackConfig::untargeted_defaults() { return AttackConfig{}; }

AttackConfig AttackConfig::targeted_defaults(Label target) {
  AttackConfig cfg;
  cfg.kappa = 0.05;
  cfg.query_budget = 200000;
  cfg.max_iters = 66667;
  cfg.target = target;
  return cfg;
}

void AttackConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw InvalidArgument(std::string("attack config: ") + msg);
  };
  require(kappa > 0.0, "kappa must be > 0");
  require(query_budget > 0, "query_budget must be > 0");
  require(delta > 0.0, "delta must be > 0");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(eta > 0.0, "eta must be > 0");
  require(step_size > 0.0, "step_size must be > 0");
  require(refresh_interval >= 1, "refresh_interval must be >= 1");
  require(interval_length >= 2, "interval_length must be >= 2");
  require(block_size >= 1, "block_size must be >= 1");
  require(search_radius >= 0, "search_radius must be >= 0");
  require(flow_iterations >= 1, "flow_iterations must be >= 1");
  require(nes_sigma > 0.0, "nes_sigma must be > 0");
  require(nes_samples >= 2 && nes_samples % 2 == 0, "nes_samples must be even and >= 2");
}

bool stop_condition(Label predicted, Label label, std::optional<Label> target) {
  return target ? predicted == *target : predicted != label;
}

VideoTensor step_video(const VideoTensor& x_prev, const NoiseTensor& g, double h,
                       const VideoTensor& x0, double kappa) {
  require_same_shape(x_prev, g, "step_video");
  require_same_shape(x_prev, x0, "step_video");
  if (!(kappa > 0.0)) throw InvalidArgument("step_video: kappa must be > 0");
  VideoTensor x = x_prev;
  auto xv = x.values();
  auto gv = g.values();
  auto cv = x0.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double s = gv[i] > 0.0 ? 1.0 : (gv[i] < 0.0 ? -1.0 : 0.0);
    const double v = std::min(std::max(xv[i] - h * s, cv[i] - kappa), cv[i] + kappa);
    xv[i] = std::clamp(v, 0.0, 1.0);
  }
  return x;
}

namespace {

SamplerKind effective_sampler(const AttackConfig& cfg) {
  return cfg.estimator == EstimatorKind::me_sampler ? cfg.sampler : SamplerKind::multi_noise;
}

std::optional<LookupMode> lookup_mode(LookupPolicy p) {
  switch (p) {
    case LookupPolicy::raw: return LookupMode::raw;
    case LookupPolicy::traceback: return LookupMode::traceback;
    case LookupPolicy::automatic: break;
  }
  return std::nullopt;
}

}  // namespace

std::shared_ptr<const MotionSet> prepare_motion(const VideoTensor& video, const AttackConfig& cfg,
                                                Rng& rng) {
  if (cfg.estimator == EstimatorKind::nes) return nullptr;
  const SamplerKind kind = effective_sampler(cfg);
  if (kind == SamplerKind::one_noise || kind == SamplerKind::multi_noise) return nullptr;

  MotionParams params;
  params.block = {cfg.block_size, cfg.search_radius};
  params.flow = {cfg.flow_alpha, cfg.flow_iterations};
  const auto repr = kind == SamplerKind::me_of ? MotionRepresentation::flow : MotionRepresentation::mv;
  MotionSet set = build_motion_set(video, repr, cfg.interval_length, params);
  if (kind == SamplerKind::u_sample || kind == SamplerKind::s_value) {
    set = handcrafted_set(set, kind, rng);
  }
  return std::make_shared<const MotionSet>(std::move(set));
}

AttackResult run_attack(const VideoTensor& video, Label label, Oracle& oracle,
                        const AttackConfig& cfg) {
  cfg.validate();
  if (oracle.expected_shape() != video.shape()) {
    throw ShapeError("run_attack: oracle expects " + oracle.expected_shape().to_string() +
                     ", video is " + video.shape().to_string());
  }
  const std::size_t K = oracle.num_classes();
  if (label >= K) throw InvalidArgument("run_attack: label out of range");
  if (cfg.target) {
    if (*cfg.target >= K) throw InvalidArgument("run_attack: target out of range");
    if (*cfg.target == label) throw InvalidArgument("run_attack: target equals the true label");
  }

  Rng rng(cfg.seed);
  const Objective objective{cfg.loss, label, cfg.target};
  const SamplerKind kind = effective_sampler(cfg);
  const PriorSampler sampler(kind, prepare_motion(video, cfg, rng), lookup_mode(cfg.lookup));
  const GradEstConfig est_cfg{cfg.delta, cfg.epsilon};
  const NesConfig nes_cfg{cfg.nes_sigma, cfg.nes_samples};
  const std::size_t per_estimate = cfg.estimator == EstimatorKind::nes ? cfg.nes_samples : 2;

  EstimatorState state(video.shape(), cfg.refresh_interval);
  AttackResult result;
  result.adversarial = video;
  std::size_t queries = 0;

  auto ask = [&](const VideoTensor& x) {
    try {
      ++queries;
      return oracle.query(x);
    } catch (OracleError& e) {
      e.set_queries_consumed(queries);
      throw;
    }
  };

  VideoTensor& x = result.adversarial;
  while (true) {
    if (queries + 1 > cfg.query_budget) break;
    const Logits logits = ask(x);
    const Label predicted = argmax(logits);
    result.final_label = predicted;
    if (queries == 1 && predicted != label) throw AlreadyMisclassified(predicted, queries);
    result.loss_trace.push_back({result.iterations, objective(logits)});
    if (stop_condition(predicted, label, cfg.target)) {
      result.success = true;
      break;
    }
    if (result.iterations >= cfg.max_iters) break;
    if (queries + per_estimate > cfg.query_budget) break;

    try {
      if (cfg.estimator == EstimatorKind::nes) {
        GradEstimate est = nes_estimate(x, objective, oracle, nes_cfg, rng);
        queries += est.queries_used;
        state.g = std::move(est.delta);
        ++state.loop;
      } else {
        GradEstimate est = grad_est(x, objective, state, oracle, sampler, est_cfg, rng);
        queries += est.queries_used;
        update_g(state, est.delta, cfg.eta);
      }
    } catch (OracleError& e) {
      e.set_queries_consumed(queries + e.queries_consumed());
      throw;
    }
    x = step_video(x, state.g, cfg.step_size, video, cfg.kappa);
    ++result.iterations;
    assert(linf_dist(x, video) <= cfg.kappa + 1e-12 && in_unit_range(x));
  }

  if (!(linf_dist(x, video) <= cfg.kappa + 1e-12) || !in_unit_range(x)) {
    throw Error("run_attack: final iterate left the constraint set");
  }
  result.queries_used = queries;
  result.queries_recorded = result.success ? queries : cfg.query_budget;
  result.linf = linf_dist(x, video);
  return result;
}

}  // namespace meattack
