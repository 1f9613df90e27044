#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "meattack/attack.hpp"
#include "meattack/error.hpp"
#include "meattack/harness.hpp"
#include "meattack/motion.hpp"
#include "meattack/oracle.hpp"
#include "meattack/vt01.hpp"

namespace fs = std::filesystem;
using namespace meattack;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kOracle = 2;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spill(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write " + p.string());
  os << text;
}

struct AttackArgs {
  fs::path video;
  Label label = 0;
  std::optional<Label> target;
  std::string oracle = "toy:linear:0";
  fs::path config;
  std::string sampler;
  std::string loss;
  std::optional<double> kappa;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iters;
  fs::path out = "attack_out";
};

int cmd_attack(const AttackArgs& a) {
  AttackConfig cfg = a.config.empty() ? (a.target ? AttackConfig::targeted_defaults(*a.target)
                                                  : AttackConfig::untargeted_defaults())
                                      : parse_attack_config(slurp(a.config));
  if (a.target) cfg.target = a.target;
  if (!a.sampler.empty()) cfg.sampler = sampler_kind_from_string(a.sampler);
  if (!a.loss.empty()) cfg.loss = loss_kind_from_string(a.loss);
  if (a.kappa) cfg.kappa = *a.kappa;
  if (a.budget) cfg.query_budget = *a.budget;
  if (a.seed) cfg.seed = *a.seed;
  if (a.max_iters) cfg.max_iters = *a.max_iters;
  cfg.validate();

  const VideoTensor video = ingest_frames(a.video);
  auto oracle = make_oracle(a.oracle, video, a.label, cfg.target);
  const AttackResult r = run_attack(video, a.label, *oracle, cfg);

  fs::create_directories(a.out);
  VideoOutcome row;
  row.path = a.video.string();
  row.label = a.label;
  row.target = cfg.target;
  row.strategy = to_string(cfg.sampler);
  row.seed = cfg.seed;
  row.success = r.success;
  row.queries_used = r.queries_used;
  row.queries_recorded = r.queries_recorded;
  row.iterations = r.iterations;
  row.linf = r.linf;
  row.final_label = r.final_label;
  spill(a.out / "result.json", outcome_to_jsonl(row) + "\n");
  spill(a.out / "config.json", attack_config_to_json(cfg) + "\n");
  std::vector<LossCurveRow> curve;
  for (const LossPoint& p : r.loss_trace) curve.push_back({row.strategy, p.iteration, p.loss});
  spill(a.out / "loss_curve.csv", export_loss_curves(curve));
  vt01::write_file(a.out / "adversarial.vt01", vt01::from_video(r.adversarial));

  std::printf("%s queries=%zu iterations=%zu linf=%.6f final_label=%zu\n",
              r.success ? "success" : "failure", r.queries_used, r.iterations, r.linf,
              r.final_label);
  return kOk;
}

int cmd_bench(const fs::path& spec_path, const fs::path& out) {
  ExperimentSpec spec = parse_experiment_spec(slurp(spec_path), spec_path.parent_path());
  if (!out.empty()) spec.output_dir = out;
  const BatchReport report = run_batch(spec);
  for (const StrategyReport& s : report.strategies) {
    std::printf("%-12s ANQ=%.2f SR=%.2f%% attacked=%zu excluded=%zu\n", s.strategy.c_str(),
                s.metrics.anq, s.metrics.sr, s.metrics.attacked, s.metrics.excluded);
  }
  return kOk;
}

int cmd_motion(const fs::path& video_path, const std::string& repr, std::size_t T, int block,
               int radius, const fs::path& out) {
  const VideoTensor video = ingest_frames(video_path);
  MotionParams params;
  params.block = {block, radius};
  const MotionSet set = build_motion_set(
      video, repr == "flow" ? MotionRepresentation::flow : MotionRepresentation::mv, T, params,
      video_path.filename().string());
  vt01::write_file(out, vt01::from_motion_set(set));
  std::printf("%zu motion maps of %zux%zu written to %s\n", set.size(), video.shape().height,
              video.shape().width, out.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box video attack with motion-excited sampling"};
  app.require_subcommand(1);

  AttackArgs aa;
  auto* attack = app.add_subcommand("attack", "Attack one video");
  attack->add_option("--video", aa.video, "VT01 file or directory of PGM/PPM frames")->required();
  attack->add_option("--label", aa.label, "True label")->required();
  attack->add_option("--target", aa.target, "Target label (targeted attack)");
  attack->add_option("--oracle", aa.oracle, "toy:linear:SEED | toy:motion:SEED | http://host:port");
  attack->add_option("--config", aa.config, "AttackConfig JSON; flags override it");
  attack->add_option("--sampler", aa.sampler)
      ->check(CLI::IsMember({"me_mv", "me_of", "one_noise", "multi_noise", "u_sample", "s_value"}));
  attack->add_option("--loss", aa.loss)->check(CLI::IsMember({"logits", "probability", "cross_entropy"}));
  attack->add_option("--kappa", aa.kappa, "l-inf budget");
  attack->add_option("--budget", aa.budget, "Query budget Q");
  attack->add_option("--seed", aa.seed);
  attack->add_option("--max-iters", aa.max_iters);
  attack->add_option("--out", aa.out, "Output directory");

  fs::path bench_spec, bench_out;
  auto* bench = app.add_subcommand("bench", "Run an experiment spec");
  bench->add_option("--spec", bench_spec)->required()->check(CLI::ExistingFile);
  bench->add_option("--out", bench_out, "Overrides output_dir of the spec");

  fs::path motion_video, motion_out;
  std::string motion_repr = "mv";
  std::size_t motion_T = 12;
  int motion_block = 16, motion_radius = 7;
  auto* motion = app.add_subcommand("motion", "Compute accumulated motion maps");
  motion->add_option("--video", motion_video)->required();
  motion->add_option("--repr", motion_repr)->check(CLI::IsMember({"mv", "flow"}));
  motion->add_option("--T", motion_T, "Interval length")->check(CLI::PositiveNumber);
  motion->add_option("--block", motion_block)->check(CLI::PositiveNumber);
  motion->add_option("--radius", motion_radius)->check(CLI::NonNegativeNumber);
  motion->add_option("--out", motion_out)->required();

  fs::path ingest_in, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Convert a frame directory to VT01");
  ingest->add_option("--input", ingest_in)->required();
  ingest->add_option("--out", ingest_out)->required();

  std::vector<std::size_t> synth_shape{12, 32, 32, 3};
  std::uint64_t synth_seed = 0;
  PatchSceneParams synth_params;
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic translating-patch video");
  synth->add_option("--shape", synth_shape, "V H W C")->expected(4)->delimiter(',');
  synth->add_option("--seed", synth_seed);
  synth->add_option("--patch", synth_params.patch_size);
  synth->add_option("--speed", synth_params.speed);
  synth->add_option("--out", synth_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*attack) return cmd_attack(aa);
    if (*bench) return cmd_bench(bench_spec, bench_out);
    if (*motion) {
      return cmd_motion(motion_video, motion_repr, motion_T, motion_block, motion_radius, motion_out);
    }
    if (*ingest) {
      vt01::write_file(ingest_out, vt01::from_video(ingest_frames(ingest_in)));
      return kOk;
    }
    if (*synth) {
      const VideoShape shape{synth_shape[0], synth_shape[1], synth_shape[2], synth_shape[3]};
      vt01::write_file(synth_out, vt01::from_video(make_patch_scene(shape, synth_seed, synth_params).video));
      return kOk;
    }
  } catch (const OracleError& e) {
    std::cerr << "oracle failure after " << e.queries_consumed() << " queries: " << e.what() << "\n";
    return kOracle;
  } catch (const AlreadyMisclassified& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
