// One line per acceptance criterion; exit status 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "meattack/attack.hpp"
#include "meattack/estimator.hpp"
#include "meattack/harness.hpp"
#include "meattack/motion.hpp"
#include "meattack/sampler.hpp"
#include "test_support.hpp"

using namespace meattack;
using meattack::testing::CountingOracle;
using meattack::testing::LinearLossOracle;
using meattack::testing::random_texture;
using meattack::testing::random_video;
using meattack::testing::shifted;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- A1 ---------------------------------------------------------------------

Verdict a1() {
  Verdict v;
  const auto t0 = Clock::now();

  Rng rng(1);
  const NoiseTensor r = multi_noise({1, 8, 8, 3}, rng);
  MotionMap m(8, 8, MotionKind::handcrafted);
  m.set(1, 1, 4, 5);
  auto set = std::make_shared<MotionSet>();
  set->maps.push_back(m);
  const SparkedPrior rs = me_sample(r, MotionStack{set, {0}}, LookupMode::raw);
  bool example = true;
  for (std::size_t ch = 0; ch < 3; ++ch) example &= rs.values.at(0, 1, 1, ch) == r.at(0, 4, 5, ch);
  v.require(example, "(4,5) at (1,1) lookup example");

  std::size_t violations = 0;
  std::uniform_int_distribution<int> d(-4, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const VideoShape shape{2, 8, 8, 3};
    const NoiseTensor noise = multi_noise(shape, rng);
    auto s = std::make_shared<MotionSet>();
    for (int k = 0; k < 2; ++k) {
      MotionMap mm(8, 8, MotionKind::accumulated_mv);
      for (std::size_t y = 0; y < 8; ++y) {
        for (std::size_t x = 0; x < 8; ++x) mm.set(y, x, d(rng), d(rng));
      }
      s->maps.push_back(std::move(mm));
    }
    const LookupMode mode = trial % 2 ? LookupMode::raw : LookupMode::traceback;
    const MotionStack stack{s, {1, 0}};
    const SparkedPrior out = me_sample(noise, stack, mode);
    for (std::size_t f = 0; f < 2; ++f) {
      const LookupMap lk = to_lookup(stack.map(f), mode);
      std::map<std::pair<int, int>, std::size_t> first;
      for (std::size_t p = 0; p < 64; ++p) {
        auto [it, fresh] = first.emplace(std::make_pair(lk.row(p / 8, p % 8), lk.col(p / 8, p % 8)), p);
        if (fresh) continue;
        const std::size_t q = it->second;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          violations += out.values.at(f, p / 8, p % 8, ch) != out.values.at(f, q / 8, q % 8, ch);
        }
      }
    }
  }
  v.require(violations == 0, fmt("%zu equal-motion violations", violations));
  const double secs = seconds_since(t0);
  v.require(secs < 1.0, fmt("runtime %.2fs >= 1s", secs));
  v.detail = v.pass ? fmt("(4,5) lookup exact, 1000 pairs, %.3fs", secs) : v.detail;
  return v;
}

// ---- A2 ---------------------------------------------------------------------

Verdict a2() {
  Verdict v;
  const auto t0 = Clock::now();
  const VideoShape shape{12, 32, 32, 3};
  const PatchScene scene = make_patch_scene(shape, 0);
  MotionParams params;
  params.block = {4, 2};
  auto motion = std::make_shared<const MotionSet>(
      build_motion_set(scene.video, MotionRepresentation::mv, 12, params));
  const PriorSampler sampler(SamplerKind::me_mv, motion, LookupMode::raw);
  const Objective loss{LossKind::logits, 0, std::nullopt};

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng crng(seed + 5000);
    std::vector<double> c(shape.size());
    fill_standard_normal(c, crng);
    for (double& x : c) x /= std::sqrt(static_cast<double>(shape.size()));
    LinearLossOracle oracle(shape, c);
    EstimatorState state(shape, 10);
    EstimatorState replay_state = state;
    Rng rng(seed);
    Rng replay(seed);
    const NoiseTensor rs = sampler.draw(replay_state, replay);
    const GradEstimate est = grad_est(scene.video, loss, state, oracle, sampler, {}, rng);
    const double k = -2.0 * inner_product(VideoTensor(shape, c), rs);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      const double expected = k * rs[i];
      if (expected == 0.0) {
        worst = std::max(worst, est.delta[i] == 0.0 ? 0.0 : 1.0);
      } else {
        worst = std::max(worst, std::abs(est.delta[i] - expected) / std::abs(expected));
      }
    }
    v.require(est.queries_used == 2 && oracle.query_count() == 2, "grad_est must use 2 queries");
  }
  const double secs = seconds_since(t0);
  v.require(worst <= 1e-5, fmt("max relative error %.3g > 1e-5", worst));
  v.require(secs < 5.0, fmt("runtime %.2fs >= 5s", secs));
  if (v.pass) v.detail = fmt("100 seeds, max relative error %.2e, %.2fs", worst, secs);
  return v;
}

// ---- A3 ---------------------------------------------------------------------

Verdict a3() {
  Verdict v;
  const VideoShape shape{4, 8, 8, 3};
  auto oracle = ToyLinearSoftmax::random(shape, 10, 77, 1.0 / std::sqrt(double(shape.size())));
  const VideoTensor x = random_video(shape, 78, 0.1, 0.9);
  Rng rng(79);
  std::uniform_int_distribution<std::size_t> pick(0, shape.size() - 1);
  const double h = 1e-3;
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    const std::size_t i = pick(rng);
    VideoTensor plus = x;
    VideoTensor minus = x;
    plus[i] += h;
    minus[i] -= h;
    const Logits lp = oracle.query(plus);
    const Logits lm = oracle.query(minus);
    for (std::size_t k = 0; k < oracle.num_classes(); ++k) {
      const double fd = (lp[k] - lm[k]) / (2.0 * h);
      const double exact = oracle.weights_row(k)[i];
      worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
    }
  }
  v.require(worst <= 1e-4, fmt("max relative error %.3g > 1e-4", worst));
  if (v.pass) v.detail = fmt("50 coordinates x 10 classes, max relative error %.2e", worst);
  return v;
}

// ---- A4 ---------------------------------------------------------------------

Verdict a4() {
  Verdict v;
  std::size_t attacks = 0, successes = 0, failures = 0, bad_linf = 0, bad_range = 0, bad_count = 0,
              bad_record = 0;
  const std::size_t budgets[] = {30, 300, 3000};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    AttackConfig cfg = seed % 4 == 3 ? AttackConfig::targeted_defaults(2)
                                     : AttackConfig::untargeted_defaults();
    cfg.query_budget = budgets[seed % 3];
    cfg.seed = seed;
    cfg.loss = static_cast<LossKind>(seed % 3);
    AttackResult r;
    std::size_t calls = 0;
    std::size_t counted = 0;
    VideoTensor clean;
    if (seed % 2 == 0) {
      const VideoShape shape{2, 4, 4, 3};
      clean = random_video(shape, seed, 0.05, 0.95);
      auto base = ToyLinearSoftmax::random(shape, 3, seed + 900, 0.5);
      const Logits raw = base.evaluate(clean);
      const std::vector<double> w(base.weights_row(0).data(),
                                  base.weights_row(0).data() + 3 * shape.size());
      const double gap = 0.05 + 0.1 * static_cast<double>(seed % 7);
      ToyLinearSoftmax oracle(shape, w, {gap - raw[0], -raw[1], -0.5 * gap - raw[2]});
      CountingOracle audit(oracle);
      cfg.sampler = seed % 3 ? SamplerKind::multi_noise : SamplerKind::one_noise;
      r = run_attack(clean, 0, audit, cfg);
      calls = audit.calls();
      counted = oracle.query_count();
    } else {
      const VideoShape shape{12, 16, 16, 3};
      PatchSceneParams params;
      params.patch_size = 8;
      const PatchScene scene = make_patch_scene(shape, seed, params);
      clean = scene.video;
      if (cfg.target) cfg = AttackConfig::untargeted_defaults(), cfg.seed = seed,
                      cfg.query_budget = budgets[seed % 3];
      ToyMotionSensitive oracle(shape, scene.moving_mask);
      const Label label = argmax(oracle.evaluate(clean));
      CountingOracle audit(oracle);
      cfg.sampler = seed % 3 == 0 ? SamplerKind::me_mv : (seed % 3 == 1 ? SamplerKind::s_value
                                                                         : SamplerKind::u_sample);
      cfg.block_size = 4;
      cfg.search_radius = 2;
      r = run_attack(clean, label, audit, cfg);
      calls = audit.calls();
      counted = oracle.query_count();
    }
    ++attacks;
    (r.success ? successes : failures) += 1;
    bad_linf += !(linf_dist(r.adversarial, clean) <= cfg.kappa + 1e-6);
    bad_range += !in_unit_range(r.adversarial);
    const bool accounting = r.queries_used == calls && calls == counted &&
                            r.queries_used <= cfg.query_budget &&
                            (r.queries_used == 3 * r.iterations + 1 ||
                             (!r.success && r.queries_used == 3 * r.iterations));
    bad_count += !accounting;
    bad_record += r.queries_recorded != (r.success ? r.queries_used : cfg.query_budget);
  }
  v.require(bad_linf == 0, fmt("%zu runs exceed kappa", bad_linf));
  v.require(bad_range == 0, fmt("%zu runs leave [0,1]", bad_range));
  v.require(bad_count == 0, fmt("%zu runs break 3-per-iteration accounting", bad_count));
  v.require(bad_record == 0, fmt("%zu runs record the wrong query count", bad_record));
  v.require(successes > 0 && failures > 0, "need both successful and failed runs");

  std::vector<VideoOutcome> rows(3);
  const std::size_t used[] = {500, 700, 60000};
  for (int i = 0; i < 3; ++i) {
    rows[i].success = i < 2;
    rows[i].queries_used = used[i];
    rows[i].queries_recorded = i < 2 ? used[i] : 60000;
  }
  const MetricsReport m = compute_metrics(rows);
  v.require(m.anq == 20400.0, fmt("ANQ %.4f != 20400", m.anq));
  v.require(std::round(m.sr * 100.0) / 100.0 == 66.67, fmt("SR %.4f != 66.67", m.sr));
  if (v.pass) {
    v.detail = fmt("%zu attacks (%zu success, %zu fail), 3-video ANQ=%.0f SR=%.2f%%", attacks,
                   successes, failures, m.anq, m.sr);
  }
  return v;
}

// ---- A5 / A6 ------------------------------------------------------------------

constexpr std::size_t kSeeds = 20;
constexpr std::size_t kIterationCap = 1500;

struct StrategyRuns {
  std::vector<std::size_t> iterations;
  std::size_t successes = 0;
  double seconds = 0.0;
};

StrategyRuns run_strategy(SamplerKind kind) {
  StrategyRuns out;
  const auto t0 = Clock::now();
  const VideoShape shape{12, 32, 32, 3};
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const PatchScene scene = make_patch_scene(shape, seed);
    ToyMotionSensitive oracle(shape, scene.moving_mask);
    AttackConfig cfg = AttackConfig::untargeted_defaults();
    cfg.sampler = kind;
    cfg.seed = seed;
    cfg.max_iters = kIterationCap;
    cfg.block_size = 4;
    cfg.search_radius = 2;
    const AttackResult r = run_attack(scene.video, 0, oracle, cfg);
    out.iterations.push_back(r.success ? r.iterations : kIterationCap);
    out.successes += r.success;
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::string summary(const char* name, const StrategyRuns& s) {
  return fmt("%s median %.1f (%zu/%zu)", name, median(s.iterations), s.successes, kSeeds);
}

Verdict a5(const StrategyRuns& sparked, const StrategyRuns& one, const StrategyRuns& multi) {
  Verdict v;
  const double ms = median(sparked.iterations);
  const double mo = median(one.iterations);
  const double mm = median(multi.iterations);
  v.require(ms < mo, "sparked median not below one_noise");
  v.require(mo < mm, "one_noise median not below multi_noise");
  const double secs = sparked.seconds + one.seconds + multi.seconds;
  v.require(secs < 120.0, fmt("runtime %.1fs >= 120s", secs));
  v.detail = summary("sparked", sparked) + ", " + summary("one_noise", one) + ", " +
             summary("multi_noise", multi) + fmt(", %.1fs", secs) +
             (v.detail.empty() ? "" : " -- " + v.detail);
  return v;
}

Verdict a6(const StrategyRuns& sparked) {
  Verdict v;
  Rng rng(3);
  MotionMap zero(6, 6, MotionKind::accumulated_mv);
  MotionMap ref(6, 6, MotionKind::accumulated_mv);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      if ((r + c) % 3) ref.set(r, c, double(c % 2), -double(r % 3));
    }
  }
  bool ok = true;
  const MotionMap u_zero = u_sample_map(zero, rng);
  for (double x : u_zero.values()) ok &= x == 0.0;
  const MotionMap u = u_sample_map(ref, rng);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      const bool still = ref.u(r, c) == 0.0 && ref.v(r, c) == 0.0;
      ok &= still == (u.u(r, c) == 0.0 && u.v(r, c) == 0.0);
      ok &= std::abs(u.u(r, c)) <= 50.0 && std::abs(u.v(r, c)) <= 50.0;
    }
  }
  MotionMap ones(2, 2, MotionKind::block_mv);
  for (std::size_t p = 0; p < 4; ++p) ones.set(p / 2, p % 2, 1.0, 1.0);
  const MotionMap s = s_value_map(ones);
  for (std::size_t p = 0; p < 4; ++p) ok &= s.u(p / 2, p % 2) == double(p) && s.v(p / 2, p % 2) == double(p);
  const MotionMap s_zero = s_value_map(zero);
  for (double x : s_zero.values()) ok &= x == 0.0;
  v.require(ok, "u_sample/s_value examples");

  const StrategyRuns us = run_strategy(SamplerKind::u_sample);
  const StrategyRuns sv = run_strategy(SamplerKind::s_value);
  const double ms = median(sparked.iterations);
  v.require(ms <= median(us.iterations), "sparked median above u_sample");
  v.require(ms <= median(sv.iterations), "sparked median above s_value");
  v.detail = "maps ok, " + summary("sparked", sparked) + ", " + summary("u_sample", us) + ", " +
             summary("s_value", sv) + (v.detail.empty() ? "" : " -- " + v.detail);
  return v;
}

// ---- A7 ---------------------------------------------------------------------

MotionMap brute_force_sad(const GrayFrame& ref, const GrayFrame& cur, int block, int radius) {
  const int H = static_cast<int>(cur.height), W = static_cast<int>(cur.width);
  MotionMap out(cur.height, cur.width, MotionKind::block_mv);
  for (int by = 0; by < H; by += block) {
    for (int bx = 0; bx < W; bx += block) {
      const int bh = std::min(block, H - by), bw = std::min(block, W - bx);
      std::tuple<double, int, int, int> best{std::numeric_limits<double>::infinity(), 0, 0, 0};
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (by + dy < 0 || bx + dx < 0 || by + dy + bh > H || bx + dx + bw > W) continue;
          double sad = 0.0;
          for (int y = 0; y < bh; ++y) {
            for (int x = 0; x < bw; ++x) sad += std::abs(cur.at(by + y, bx + x) - ref.at(by + dy + y, bx + dx + x));
          }
          best = std::min(best, std::make_tuple(sad, std::abs(dy) + std::abs(dx), dy, dx));
        }
      }
      for (int y = by; y < by + bh; ++y) {
        for (int x = bx; x < bx + bw; ++x) out.set(y, x, -std::get<3>(best), -std::get<2>(best));
      }
    }
  }
  return out;
}

GrayFrame quantized(GrayFrame f) {
  for (double& p : f.pixels) p = std::floor(p * 256.0) / 256.0;
  return f;
}

Verdict a7() {
  Verdict v;
  std::size_t mismatches = 0;
  const int blocks[] = {2, 3, 4, 8};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const GrayFrame ref = quantized(random_texture(8, 8, seed));
    const GrayFrame cur = seed % 2 ? quantized(random_texture(8, 8, seed + 300))
                                   : quantized(shifted(ref, int(seed % 5) - 2, int(seed / 5 % 5) - 2, seed));
    const int block = blocks[seed % 4];
    const int radius = 1 + static_cast<int>(seed / 4 % 3);
    mismatches += !(estimate_block_motion(ref, cur, {block, radius}) == brute_force_sad(ref, cur, block, radius));
  }
  v.require(mismatches == 0, fmt("%zu of 60 instances differ from brute force", mismatches));

  const GrayFrame f0 = quantized(random_texture(32, 32, 21));
  std::vector<GrayFrame> frames{f0};
  for (int t = 1; t < 4; ++t) frames.push_back(quantized(shifted(f0, 2 * t, 0, 100 + t)));
  const MotionMap acc = accumulate_interval(frames, {4, 2});
  bool interior = true;
  for (std::size_t r = 11; r < 21; ++r) {
    for (std::size_t c = 11; c < 21; ++c) interior &= acc.u(r, c) == 6.0 && acc.v(r, c) == 0.0;
  }
  v.require(interior, "accumulated interior is not (6,0)");

  bool counts = true;
  MotionParams params;
  params.block = {4, 2};
  for (auto [frames_n, expected] : {std::pair{24, 2}, {12, 1}, {30, 2}}) {
    const PatchScene scene = make_patch_scene({std::size_t(frames_n), 24, 24, 3}, 1, {8, 1, 0.52, 0.5, 0.15});
    counts &= build_motion_set(scene.video, MotionRepresentation::mv, 12, params).size() ==
              std::size_t(expected);
  }
  v.require(counts, "N != floor(V/T)");
  if (v.pass) v.detail = "60/60 brute-force matches, (6,0) interior, N = 2/1/2 for V = 24/12/30";
  return v;
}

// ---- A8 ---------------------------------------------------------------------

Verdict a8() {
  Verdict v;
  std::size_t runs = 0, differing = 0;
  const VideoShape shape{12, 32, 32, 3};
  const PatchScene scene = make_patch_scene(shape, 8);
  for (auto kind : {SamplerKind::me_mv, SamplerKind::me_of, SamplerKind::one_noise,
                    SamplerKind::multi_noise, SamplerKind::u_sample, SamplerKind::s_value}) {
    for (auto est : {EstimatorKind::me_sampler, EstimatorKind::bandits_plain, EstimatorKind::nes}) {
      AttackConfig cfg = AttackConfig::untargeted_defaults();
      cfg.sampler = kind;
      cfg.estimator = est;
      cfg.loss = static_cast<LossKind>(runs % 3);
      cfg.seed = 1234 + runs;
      cfg.block_size = 4;
      cfg.search_radius = 2;
      cfg.flow_iterations = 20;
      cfg.max_iters = 60;
      ToyMotionSensitive a(shape, scene.moving_mask);
      ToyMotionSensitive b(shape, scene.moving_mask);
      differing += !(run_attack(scene.video, 0, a, cfg) == run_attack(scene.video, 0, b, cfg));
      ++runs;
    }
  }
  const VideoShape small{1, 4, 4, 3};
  const VideoTensor x = random_video(small, 5, 0.2, 0.8);
  for (Label target : {1, 2}) {
    auto o1 = ToyLinearSoftmax::random(small, 3, 6);
    o1.calibrate_margin(x, 0, 0.1);
    ToyLinearSoftmax o2 = o1;
    AttackConfig cfg = AttackConfig::targeted_defaults(target);
    cfg.sampler = SamplerKind::multi_noise;
    cfg.query_budget = 3000;
    differing += !(run_attack(x, 0, o1, cfg) == run_attack(x, 0, o2, cfg));
    ++runs;
  }
  v.require(differing == 0, fmt("%zu of %zu repeated runs differ", differing, runs));
  if (v.pass) v.detail = fmt("%zu configurations repeated bit-identically", runs);
  return v;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](const char* id, const Verdict& v) {
    std::printf("%s %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  };
  report("A1", a1());
  report("A2", a2());
  report("A3", a3());
  report("A4", a4());
  const StrategyRuns sparked = run_strategy(SamplerKind::me_mv);
  const StrategyRuns one = run_strategy(SamplerKind::one_noise);
  const StrategyRuns multi = run_strategy(SamplerKind::multi_noise);
  report("A5", a5(sparked, one, multi));
  report("A6", a6(sparked));
  report("A7", a7());
  report("A8", a8());
  std::printf("%d of 8 criteria failed\n", failed);
  return failed ? 1 : 0;
}
