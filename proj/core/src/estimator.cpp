#include "meattack/estimator.hpp"

#include <algorithm>

#include "meattack/error.hpp"

namespace meattack {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::me_sampler: return "me_sampler";
    case EstimatorKind::bandits_plain: return "bandits_plain";
    case EstimatorKind::nes: return "nes";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "me_sampler") return EstimatorKind::me_sampler;
  if (name == "bandits_plain") return EstimatorKind::bandits_plain;
  if (name == "nes") return EstimatorKind::nes;
  throw InvalidArgument("unknown estimator '" + name + "'");
}

EstimatorState::EstimatorState(const VideoShape& shape, std::size_t refresh)
    : g(shape, 0.0), refresh_interval(refresh) {
  if (refresh == 0) throw InvalidArgument("EstimatorState: refresh interval must be >= 1");
}

PriorSampler::PriorSampler(SamplerKind kind, std::shared_ptr<const MotionSet> motion,
                           std::optional<LookupMode> mode)
    : kind_(kind), motion_(std::move(motion)), mode_(mode) {
  const bool plain = kind == SamplerKind::one_noise || kind == SamplerKind::multi_noise;
  if (plain) {
    motion_.reset();
  } else if (!motion_ || motion_->maps.empty()) {
    throw InvalidArgument("sampler " + to_string(kind) + " needs a non-empty motion set");
  }
}

NoiseTensor PriorSampler::draw(EstimatorState& state, Rng& rng) const {
  const VideoShape& shape = state.g.shape();
  if (kind_ == SamplerKind::one_noise) return one_noise(shape, rng);
  if (kind_ == SamplerKind::multi_noise) return multi_noise(shape, rng);

  if (state.loop % state.refresh_interval == 0 || !state.stack) {
    state.stack = sample_motion_stack(motion_, shape.frames, rng);
  }
  NoiseTensor r = multi_noise(shape, rng);
  return me_sample(r, *state.stack, mode_).values;
}

namespace {

Logits query_counted(Oracle& oracle, const VideoTensor& x, std::size_t& issued) {
  try {
    ++issued;
    return oracle.query(x);
  } catch (OracleError& e) {
    e.set_queries_consumed(issued);
    throw;
  }
}

// clamp(x + scale * (base + coef * dir)) to [0,1]; base may be null.
VideoTensor query_point(const VideoTensor& x, double scale, const NoiseTensor* base, double coef,
                        const NoiseTensor& dir) {
  VideoTensor out = x;
  auto o = out.values();
  auto d = dir.values();
  if (base) {
    auto b = base->values();
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] = std::clamp(o[i] + scale * (b[i] + coef * d[i]), 0.0, 1.0);
    }
  } else {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(o[i] + scale * coef * d[i], 0.0, 1.0);
  }
  return out;
}

}  // namespace

GradEstimate directional_estimate(const VideoTensor& x, const Objective& loss,
                                  const NoiseTensor& g, Oracle& oracle, const NoiseTensor& rs,
                                  const GradEstConfig& cfg) {
  if (!(cfg.delta > 0.0) || !(cfg.epsilon > 0.0)) {
    throw InvalidArgument("grad_est: delta and epsilon must be > 0");
  }
  require_same_shape(x, g, "grad_est");
  require_same_shape(x, rs, "grad_est");

  // w1 = g + delta * r_s, w2 = g - delta * r_s
  std::size_t issued = 0;
  const double l1 =
      loss(query_counted(oracle, query_point(x, cfg.epsilon, &g, cfg.delta, rs), issued));
  const double l2 =
      loss(query_counted(oracle, query_point(x, cfg.epsilon, &g, -cfg.delta, rs), issued));

  GradEstimate out{rs, issued, l1, l2};
  const double scale = (l2 - l1) / (cfg.delta * cfg.epsilon);
  for (double& v : out.delta.values()) v *= scale;
  return out;
}

GradEstimate grad_est(const VideoTensor& x, const Objective& loss, EstimatorState& state,
                      Oracle& oracle, const PriorSampler& sampler, const GradEstConfig& cfg,
                      Rng& rng) {
  require_same_shape(x, state.g, "grad_est");
  const NoiseTensor rs = sampler.draw(state, rng);
  return directional_estimate(x, loss, state.g, oracle, rs, cfg);
}

void update_g(EstimatorState& state, const NoiseTensor& delta, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("update_g: eta must be > 0");
  axpy(-eta, delta, state.g);
  ++state.loop;
}

GradEstimate nes_estimate(const VideoTensor& x, const Objective& loss, Oracle& oracle,
                          const NesConfig& cfg, Rng& rng) {
  if (cfg.samples == 0 || cfg.samples % 2 != 0) {
    throw InvalidArgument("nes_estimate: sample count must be even and positive");
  }
  if (!(cfg.sigma > 0.0)) throw InvalidArgument("nes_estimate: sigma must be > 0");

  GradEstimate out{NoiseTensor(x.shape(), 0.0), 0, 0.0, 0.0};
  std::size_t issued = 0;
  NoiseTensor u(x.shape());
  for (std::size_t j = 0; j < cfg.samples / 2; ++j) {
    fill_standard_normal(u.values(), rng);
    out.loss_plus = loss(query_counted(oracle, query_point(x, cfg.sigma, nullptr, 1.0, u), issued));
    out.loss_minus = loss(query_counted(oracle, query_point(x, cfg.sigma, nullptr, -1.0, u), issued));
    axpy(out.loss_plus - out.loss_minus, u, out.delta);
  }
  const double norm = 1.0 / (static_cast<double>(cfg.samples) * cfg.sigma);
  for (double& v : out.delta.values()) v *= norm;
  out.queries_used = issued;
  return out;
}

}  // namespace meattack
