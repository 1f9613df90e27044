#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meattack/attack.hpp"
#include "meattack/oracle.hpp"

namespace meattack {

// ---- configuration documents -------------------------------------------

// Keys match AttackConfig member names; "mode" ("untargeted" | "targeted")
// selects which defaults the missing keys take. Unknown keys are rejected.
AttackConfig parse_attack_config(const std::string& json_text);
std::string attack_config_to_json(const AttackConfig& cfg);

struct VideoEntry {
  std::filesystem::path path;
  Label label = 0;
  std::optional<Label> target;
};

struct ExperimentSpec {
  std::vector<VideoEntry> videos;
  AttackConfig config;
  std::string oracle;  // "toy:linear:SEED", "toy:motion:SEED" or "http://host:port"
  std::filesystem::path output_dir;
  std::size_t workers = 1;
  std::vector<SamplerKind> strategies;  // empty => config.sampler only
};

// {"videos":[{"path":..,"label":..,"target":..}], "config":{...}, "oracle":"..",
//  "output_dir":"..", "workers":N, "strategies":["me_mv",...]}
// Relative paths resolve against base_dir.
ExperimentSpec parse_experiment_spec(const std::string& json_text,
                                     const std::filesystem::path& base_dir = {});

// Builds one oracle session for a clean video. The toy oracles are shaped to
// the video: toy:linear draws max(10, label+1, target+1) classes and sets the
// bias so label wins by 0.1; toy:motion uses the patch mask of
// make_patch_scene(video shape, SEED).
std::unique_ptr<Oracle> make_oracle(const std::string& spec, const VideoTensor& video, Label label,
                                    std::optional<Label> target = std::nullopt);

// ---- results and metrics ---------------------------------------------------

struct VideoOutcome {
  std::string path;
  Label label = 0;
  std::optional<Label> target;
  std::string strategy;
  std::uint64_t seed = 0;
  bool excluded = false;  // input or oracle error; no attack result
  std::string error;
  bool success = false;
  std::size_t queries_used = 0;
  std::size_t queries_recorded = 0;
  std::size_t iterations = 0;
  double linf = 0.0;
  Label final_label = 0;

  friend bool operator==(const VideoOutcome&, const VideoOutcome&) = default;
};

struct MetricsReport {
  double anq = 0.0;  // mean of queries_recorded over attacked videos
  double sr = 0.0;   // percent
  std::size_t attacked = 0;
  std::size_t successes = 0;
  std::size_t excluded = 0;
};

// Excluded rows count only towards `excluded`.
MetricsReport compute_metrics(std::span<const VideoOutcome> rows);

std::string outcome_to_jsonl(const VideoOutcome& row);
VideoOutcome outcome_from_jsonl(const std::string& line);
std::vector<VideoOutcome> read_results_jsonl(const std::filesystem::path& path);

struct StrategyReport {
  std::string strategy;
  MetricsReport metrics;
};

struct BatchReport {
  std::vector<StrategyReport> strategies;
  std::vector<VideoOutcome> rows;  // spec order, strategies grouped per video
};

// Attacks every (video, strategy) pair, up to spec.workers at a time, each
// with its own oracle session and seed config.seed + video index. Writes
// results.jsonl, report.json and loss_curves.csv into output_dir.
BatchReport run_batch(const ExperimentSpec& spec);

std::string report_to_json(const BatchReport& report, const AttackConfig& cfg);

// ---- loss curves -----------------------------------------------------------

struct LossCurveRow {
  std::string strategy;
  std::size_t iteration = 0;
  double loss = 0.0;
  friend bool operator==(const LossCurveRow&, const LossCurveRow&) = default;
};

// Header line "strategy,iteration,loss", then one row per point. Losses are
// printed with round-trip precision.
std::string export_loss_curves(std::span<const LossCurveRow> rows);
std::vector<LossCurveRow> parse_loss_curves(const std::string& csv);

// Pointwise mean across traces; a finished trace holds its last value.
std::vector<LossPoint> mean_loss_curve(std::span<const std::vector<LossPoint>> traces);

// ---- ingestion ---------------------------------------------------------------

// A directory of PGM/PPM frames (lexicographic order, grey replicated to three
// channels, scaled by maxval) or a VT01 file, which is validated and returned.
VideoTensor ingest_frames(const std::filesystem::path& input);

}  // namespace meattack
