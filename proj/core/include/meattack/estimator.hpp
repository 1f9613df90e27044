#pragma once

#include <memory>
#include <optional>
#include <string>

#include "meattack/loss.hpp"
#include "meattack/motion.hpp"
#include "meattack/oracle.hpp"
#include "meattack/sampler.hpp"
#include "meattack/tensor.hpp"

namespace meattack {

enum class EstimatorKind { me_sampler, bandits_plain, nes };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

// Running gradient estimate g and the motion maps currently in use.
struct EstimatorState {
  EstimatorState(const VideoShape& shape, std::size_t refresh_interval);

  NoiseTensor g;
  std::size_t loop = 0;
  std::size_t refresh_interval;
  std::optional<MotionStack> stack;
};

// Draws the prior r_s used by one gradient estimate. Motion-driven kinds
// re-sample the per-frame motion maps whenever loop % refresh_interval == 0;
// the Gaussian noise underneath is re-drawn on every call.
class PriorSampler {
 public:
  // one_noise and multi_noise need no motion; every other kind does.
  explicit PriorSampler(SamplerKind kind, std::shared_ptr<const MotionSet> motion = nullptr,
                        std::optional<LookupMode> mode = std::nullopt);

  SamplerKind kind() const noexcept { return kind_; }
  bool uses_motion() const noexcept { return motion_ != nullptr; }

  NoiseTensor draw(EstimatorState& state, Rng& rng) const;

 private:
  SamplerKind kind_;
  std::shared_ptr<const MotionSet> motion_;
  std::optional<LookupMode> mode_;
};

struct GradEstConfig {
  double delta = 0.1;    // prior scale inside w1, w2
  double epsilon = 0.1;  // finite-difference step
};

struct GradEstimate {
  NoiseTensor delta;
  std::size_t queries_used = 0;
  double loss_plus = 0.0;   // L(x + eps * w1) for grad_est, last +sigma*u sample for NES
  double loss_minus = 0.0;  // L(x + eps * w2)
};

// Two-query antithetic estimate of the gradient of
//   l(g) = -<grad_x L(x), g>
// with respect to g:
//   w1 = g + delta * r_s,  w2 = g - delta * r_s
//   Delta = (L(x + eps*w2) - L(x + eps*w1)) / (delta * eps) * r_s
// Query points are clamped to [0,1]. On oracle failure the OracleError
// carries the number of queries this call issued.
// The two queries of grad_est for a given prior r_s.
GradEstimate directional_estimate(const VideoTensor& x, const Objective& loss,
                                  const NoiseTensor& g, Oracle& oracle, const NoiseTensor& rs,
                                  const GradEstConfig& cfg);

GradEstimate grad_est(const VideoTensor& x, const Objective& loss, EstimatorState& state,
                      Oracle& oracle, const PriorSampler& sampler, const GradEstConfig& cfg,
                      Rng& rng);

// g <- g - eta * delta, loop <- loop + 1
void update_g(EstimatorState& state, const NoiseTensor& delta, double eta);

struct NesConfig {
  double sigma = 0.001;
  std::size_t samples = 20;  // even; one query each
};

// Antithetic NES: (1 / (n * sigma)) * sum_j L(x + sigma * u_j) * u_j over
// pairs +-u_j with u_j ~ N(0, I).
GradEstimate nes_estimate(const VideoTensor& x, const Objective& loss, Oracle& oracle,
                          const NesConfig& cfg, Rng& rng);

}  // namespace meattack
