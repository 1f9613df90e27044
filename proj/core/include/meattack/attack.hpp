#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "meattack/estimator.hpp"
#include "meattack/loss.hpp"
#include "meattack/motion.hpp"
#include "meattack/oracle.hpp"
#include "meattack/sampler.hpp"
#include "meattack/tensor.hpp"

namespace meattack {

// Lookup semantics used by motion-driven samplers inside the attack.
// automatic defers to default_lookup_mode() of each map.
enum class LookupPolicy { automatic, raw, traceback };

std::string to_string(LookupPolicy policy);
LookupPolicy lookup_policy_from_string(const std::string& name);

struct AttackConfig {
  double kappa = 0.03;              // l-inf budget
  std::size_t query_budget = 60000;
  double delta = 0.1;
  double epsilon = 0.1;
  double eta = 0.1;                 // step on g
  double step_size = 0.025;         // step on x
  std::size_t refresh_interval = 10;
  std::size_t interval_length = 12;
  std::size_t max_iters = 20000;
  LossKind loss = LossKind::logits;
  SamplerKind sampler = SamplerKind::me_mv;
  EstimatorKind estimator = EstimatorKind::me_sampler;
  LookupPolicy lookup = LookupPolicy::raw;
  std::optional<Label> target;      // set => targeted attack
  std::uint64_t seed = 0;

  int block_size = 16;
  int search_radius = 7;
  double flow_alpha = 1.0;
  int flow_iterations = 100;

  double nes_sigma = 0.001;
  std::size_t nes_samples = 20;

  static AttackConfig untargeted_defaults();
  static AttackConfig targeted_defaults(Label target);

  bool targeted() const noexcept { return target.has_value(); }
  void validate() const;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

struct LossPoint {
  std::size_t iteration = 0;
  double loss = 0.0;
  friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

struct AttackResult {
  bool success = false;
  std::size_t queries_used = 0;      // actually issued
  std::size_t queries_recorded = 0;  // queries_used on success, query_budget on failure
  std::size_t iterations = 0;        // completed update steps
  VideoTensor adversarial;
  Label final_label = 0;
  std::vector<LossPoint> loss_trace;  // loss at every stop-check
  double linf = 0.0;

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

// Success test on the label predicted for the current iterate.
bool stop_condition(Label predicted, Label label, std::optional<Label> target);

// clip_to_ball(x_prev - h * sign(g), x0, kappa)
VideoTensor step_video(const VideoTensor& x_prev, const NoiseTensor& g, double h,
                       const VideoTensor& x0, double kappa);

// Builds the motion set the configured sampler draws from, or nullptr for
// samplers that use none. Consumes rng only for u_sample.
std::shared_ptr<const MotionSet> prepare_motion(const VideoTensor& video, const AttackConfig& cfg,
                                                Rng& rng);

// Sign-PGD driven by zeroth-order gradient estimates. Every iteration opens
// with one prediction query on the current iterate (the stop check), then
// spends the estimator's queries. A query that would exceed the budget is
// never issued.
//
// Throws AlreadyMisclassified when the clean video is not predicted as
// label, and OracleError (queries_consumed = total for the run) when the
// model fails.
AttackResult run_attack(const VideoTensor& video, Label label, Oracle& oracle,
                        const AttackConfig& cfg);

}  // namespace meattack
