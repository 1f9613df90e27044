#include "meattack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "meattack/error.hpp"
#include "meattack/remote_oracle.hpp"
#include "meattack/vt01.hpp"

namespace meattack {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- configuration -----------------------------------------------------------

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string(what) + " is not valid JSON: " + e.what());
  }
}

AttackConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("attack config must be a JSON object");
  static const char* const kKeys[] = {
      "mode", "target", "kappa", "query_budget", "delta", "epsilon", "eta", "step_size",
      "refresh_interval", "interval_length", "max_iters", "loss", "sampler", "estimator",
      "lookup", "seed", "block_size", "search_radius", "flow_alpha", "flow_iterations",
      "nes_sigma", "nes_samples"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw InvalidArgument("unknown attack config key '" + key + "'");
    }
  }

  std::string mode = j.contains("target") && !j["target"].is_null() ? "targeted" : "untargeted";
  take(j, "mode", mode);
  AttackConfig cfg;
  if (mode == "targeted") {
    if (!j.contains("target") || j["target"].is_null()) {
      throw InvalidArgument("targeted mode needs a target label");
    }
    cfg = AttackConfig::targeted_defaults(j["target"].get<Label>());
  } else if (mode == "untargeted") {
    if (j.contains("target") && !j["target"].is_null()) {
      throw InvalidArgument("untargeted mode cannot carry a target");
    }
    cfg = AttackConfig::untargeted_defaults();
  } else {
    throw InvalidArgument("mode must be 'untargeted' or 'targeted'");
  }

  take(j, "kappa", cfg.kappa);
  take(j, "query_budget", cfg.query_budget);
  take(j, "delta", cfg.delta);
  take(j, "epsilon", cfg.epsilon);
  take(j, "eta", cfg.eta);
  take(j, "step_size", cfg.step_size);
  take(j, "refresh_interval", cfg.refresh_interval);
  take(j, "interval_length", cfg.interval_length);
  take(j, "max_iters", cfg.max_iters);
  take(j, "seed", cfg.seed);
  take(j, "block_size", cfg.block_size);
  take(j, "search_radius", cfg.search_radius);
  take(j, "flow_alpha", cfg.flow_alpha);
  take(j, "flow_iterations", cfg.flow_iterations);
  take(j, "nes_sigma", cfg.nes_sigma);
  take(j, "nes_samples", cfg.nes_samples);
  if (j.contains("loss")) cfg.loss = loss_kind_from_string(j["loss"].get<std::string>());
  if (j.contains("sampler")) cfg.sampler = sampler_kind_from_string(j["sampler"].get<std::string>());
  if (j.contains("estimator")) {
    cfg.estimator = estimator_kind_from_string(j["estimator"].get<std::string>());
  }
  if (j.contains("lookup")) cfg.lookup = lookup_policy_from_string(j["lookup"].get<std::string>());
  cfg.validate();
  return cfg;
}

json config_to_json_value(const AttackConfig& cfg) {
  json j{{"mode", cfg.targeted() ? "targeted" : "untargeted"},
         {"kappa", cfg.kappa},
         {"query_budget", cfg.query_budget},
         {"delta", cfg.delta},
         {"epsilon", cfg.epsilon},
         {"eta", cfg.eta},
         {"step_size", cfg.step_size},
         {"refresh_interval", cfg.refresh_interval},
         {"interval_length", cfg.interval_length},
         {"max_iters", cfg.max_iters},
         {"loss", to_string(cfg.loss)},
         {"sampler", to_string(cfg.sampler)},
         {"estimator", to_string(cfg.estimator)},
         {"lookup", to_string(cfg.lookup)},
         {"seed", cfg.seed},
         {"block_size", cfg.block_size},
         {"search_radius", cfg.search_radius},
         {"flow_alpha", cfg.flow_alpha},
         {"flow_iterations", cfg.flow_iterations},
         {"nes_sigma", cfg.nes_sigma},
         {"nes_samples", cfg.nes_samples}};
  if (cfg.target) j["target"] = *cfg.target;
  return j;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

AttackConfig parse_attack_config(const std::string& json_text) {
  return config_from_json(parse_json(json_text, "attack config"));
}

std::string attack_config_to_json(const AttackConfig& cfg) {
  return config_to_json_value(cfg).dump(2);
}

ExperimentSpec parse_experiment_spec(const std::string& json_text, const fs::path& base_dir) {
  const json j = parse_json(json_text, "experiment spec");
  if (!j.is_object()) throw InvalidArgument("experiment spec must be a JSON object");
  ExperimentSpec spec;
  if (!j.contains("videos") || !j["videos"].is_array() || j["videos"].empty()) {
    throw InvalidArgument("experiment spec needs a non-empty 'videos' list");
  }
  for (const auto& v : j["videos"]) {
    if (!v.contains("path") || !v.contains("label")) {
      throw InvalidArgument("every video entry needs 'path' and 'label'");
    }
    VideoEntry e;
    e.path = resolve(base_dir, v["path"].get<std::string>());
    e.label = v["label"].get<Label>();
    if (v.contains("target") && !v["target"].is_null()) e.target = v["target"].get<Label>();
    spec.videos.push_back(std::move(e));
  }
  spec.config = config_from_json(j.value("config", json::object()));
  if (!j.contains("oracle")) throw InvalidArgument("experiment spec needs an 'oracle'");
  spec.oracle = j["oracle"].get<std::string>();
  spec.output_dir = resolve(base_dir, j.value("output_dir", std::string("bench_out")));
  spec.workers = j.value("workers", std::size_t{1});
  if (spec.workers == 0) throw InvalidArgument("workers must be >= 1");
  if (j.contains("strategies")) {
    for (const auto& s : j["strategies"]) {
      spec.strategies.push_back(sampler_kind_from_string(s.get<std::string>()));
    }
  }
  return spec;
}

std::unique_ptr<Oracle> make_oracle(const std::string& spec, const VideoTensor& video, Label label,
                                    std::optional<Label> target) {
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    return std::make_unique<RemoteOracle>(spec);
  }
  auto seed_of = [&](const std::string& prefix) -> std::uint64_t {
    const std::string digits = spec.substr(prefix.size());
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
      throw InvalidArgument("oracle spec '" + spec + "' needs a numeric seed");
    }
    return seed;
  };
  if (spec.rfind("toy:linear:", 0) == 0) {
    const std::size_t K = std::max<std::size_t>({10, label + 1, target.value_or(0) + 1});
    const double scale = 1.0 / std::sqrt(static_cast<double>(video.size()));
    auto oracle = std::make_unique<ToyLinearSoftmax>(
        ToyLinearSoftmax::random(video.shape(), K, seed_of("toy:linear:"), scale));
    oracle->calibrate_margin(video, label, 0.1);
    return oracle;
  }
  if (spec.rfind("toy:motion:", 0) == 0) {
    PatchScene scene = make_patch_scene(video.shape(), seed_of("toy:motion:"));
    return std::make_unique<ToyMotionSensitive>(video.shape(), std::move(scene.moving_mask));
  }
  throw InvalidArgument("unknown oracle spec '" + spec + "'");
}

// ---- results -------------------------------------------------------------------

MetricsReport compute_metrics(std::span<const VideoOutcome> rows) {
  MetricsReport m;
  double total_queries = 0.0;
  for (const auto& r : rows) {
    if (r.excluded) {
      ++m.excluded;
      continue;
    }
    ++m.attacked;
    if (r.success) ++m.successes;
    total_queries += static_cast<double>(r.queries_recorded);
  }
  if (m.attacked > 0) {
    m.anq = total_queries / static_cast<double>(m.attacked);
    m.sr = 100.0 * static_cast<double>(m.successes) / static_cast<double>(m.attacked);
  }
  return m;
}

std::string outcome_to_jsonl(const VideoOutcome& r) {
  json j{{"path", r.path},
         {"label", r.label},
         {"target", r.target ? json(*r.target) : json(nullptr)},
         {"strategy", r.strategy},
         {"seed", r.seed},
         {"excluded", r.excluded},
         {"error", r.error},
         {"success", r.success},
         {"queries_used", r.queries_used},
         {"queries_recorded", r.queries_recorded},
         {"iterations", r.iterations},
         {"linf", r.linf},
         {"final_label", r.final_label}};
  return j.dump();
}

VideoOutcome outcome_from_jsonl(const std::string& line) {
  const json j = parse_json(line, "results row");
  VideoOutcome r;
  r.path = j.at("path").get<std::string>();
  r.label = j.at("label").get<Label>();
  if (!j.at("target").is_null()) r.target = j["target"].get<Label>();
  r.strategy = j.at("strategy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.excluded = j.at("excluded").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.success = j.at("success").get<bool>();
  r.queries_used = j.at("queries_used").get<std::size_t>();
  r.queries_recorded = j.at("queries_recorded").get<std::size_t>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.linf = j.at("linf").get<double>();
  r.final_label = j.at("final_label").get<Label>();
  return r;
}

std::vector<VideoOutcome> read_results_jsonl(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  std::vector<VideoOutcome> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) rows.push_back(outcome_from_jsonl(line));
  }
  return rows;
}

std::string report_to_json(const BatchReport& report, const AttackConfig& cfg) {
  json j;
  j["config"] = config_to_json_value(cfg);
  j["strategies"] = json::array();
  for (const auto& s : report.strategies) {
    j["strategies"].push_back({{"strategy", s.strategy},
                               {"anq", s.metrics.anq},
                               {"sr", s.metrics.sr},
                               {"attacked", s.metrics.attacked},
                               {"successes", s.metrics.successes},
                               {"excluded", s.metrics.excluded}});
  }
  j["videos"] = json::array();
  for (const auto& r : report.rows) j["videos"].push_back(json::parse(outcome_to_jsonl(r)));
  return j.dump(2);
}

BatchReport run_batch(const ExperimentSpec& spec) {
  if (spec.videos.empty()) throw InvalidArgument("run_batch: experiment has no videos");
  std::vector<SamplerKind> strategies = spec.strategies;
  if (strategies.empty()) strategies.push_back(spec.config.sampler);

  struct Job {
    std::size_t video;
    SamplerKind strategy;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < spec.videos.size(); ++v) {
    for (auto s : strategies) jobs.push_back({v, s});
  }
  std::vector<VideoOutcome> rows(jobs.size());
  std::vector<std::vector<LossPoint>> traces(jobs.size());

  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    const VideoEntry& entry = spec.videos[job.video];
    AttackConfig cfg = spec.config;
    cfg.sampler = job.strategy;
    cfg.seed = spec.config.seed + job.video;
    if (entry.target) cfg.target = entry.target;

    VideoOutcome& row = rows[i];
    row.path = entry.path.string();
    row.label = entry.label;
    row.target = cfg.target;
    row.strategy = to_string(job.strategy);
    row.seed = cfg.seed;
    try {
      const VideoTensor video = vt01::to_video(vt01::read_file(entry.path));
      auto oracle = make_oracle(spec.oracle, video, entry.label, cfg.target);
      AttackResult res = run_attack(video, entry.label, *oracle, cfg);
      row.success = res.success;
      row.queries_used = res.queries_used;
      row.queries_recorded = res.queries_recorded;
      row.iterations = res.iterations;
      row.linf = res.linf;
      row.final_label = res.final_label;
      traces[i] = std::move(res.loss_trace);
    } catch (const std::exception& e) {
      row.excluded = true;
      row.error = e.what();
      std::cerr << "meattack: skipping " << row.path << " [" << row.strategy << "]: " << e.what()
                << "\n";
    }
  };

  const std::size_t workers = std::min(spec.workers, jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  BatchReport report;
  report.rows = rows;
  std::vector<LossCurveRow> curve_rows;
  for (auto s : strategies) {
    std::vector<VideoOutcome> subset;
    std::vector<std::vector<LossPoint>> subset_traces;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].strategy != s) continue;
      subset.push_back(rows[i]);
      if (!rows[i].excluded) subset_traces.push_back(traces[i]);
    }
    report.strategies.push_back({to_string(s), compute_metrics(subset)});
    for (const auto& p : mean_loss_curve(subset_traces)) {
      curve_rows.push_back({to_string(s), p.iteration, p.loss});
    }
  }

  fs::create_directories(spec.output_dir);
  {
    std::ofstream os(spec.output_dir / "results.jsonl");
    for (const auto& r : rows) os << outcome_to_jsonl(r) << "\n";
  }
  {
    std::ofstream os(spec.output_dir / "report.json");
    os << report_to_json(report, spec.config) << "\n";
  }
  {
    std::ofstream os(spec.output_dir / "loss_curves.csv");
    os << export_loss_curves(curve_rows);
  }
  return report;
}

// ---- loss curves ---------------------------------------------------------------

std::string export_loss_curves(std::span<const LossCurveRow> rows) {
  std::ostringstream os;
  os << "strategy,iteration,loss\n";
  os.precision(17);
  for (const auto& r : rows) {
    if (r.strategy.find_first_of(",\n\"") != std::string::npos) {
      throw InvalidArgument("strategy names cannot contain commas, quotes or newlines");
    }
    os << r.strategy << ',' << r.iteration << ',' << r.loss << '\n';
  }
  return os.str();
}

std::vector<LossCurveRow> parse_loss_curves(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line != "strategy,iteration,loss") {
    throw FormatError("loss curve CSV must start with 'strategy,iteration,loss'");
  }
  std::vector<LossCurveRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw FormatError("malformed loss curve row '" + line + "'");
    }
    LossCurveRow r;
    r.strategy = line.substr(0, a);
    try {
      r.iteration = std::stoull(line.substr(a + 1, b - a - 1));
      r.loss = std::stod(line.substr(b + 1));
    } catch (const std::exception&) {
      throw FormatError("malformed loss curve row '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<LossPoint> mean_loss_curve(std::span<const std::vector<LossPoint>> traces) {
  std::size_t longest = 0;
  for (const auto& t : traces) longest = std::max(longest, t.size());
  std::vector<LossPoint> out;
  out.reserve(longest);
  for (std::size_t i = 0; i < longest; ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : traces) {
      if (t.empty()) continue;
      sum += t[std::min(i, t.size() - 1)].loss;
      ++n;
    }
    out.push_back({i, n ? sum / static_cast<double>(n) : 0.0});
  }
  return out;
}

// ---- ingestion -------------------------------------------------------------------

namespace {

struct PnmImage {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<double> values;  // already scaled to [0,1]
};

// Next header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw FormatError("truncated PNM header");
  return tok;
}

unsigned long pnm_number(std::istream& is, const fs::path& path) {
  const std::string tok = pnm_token(is);
  unsigned long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw FormatError(path.string() + ": bad PNM number '" + tok + "'");
  }
  return v;
}

PnmImage read_pnm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string magic = pnm_token(is);
  const bool binary = magic == "P5" || magic == "P6";
  if (magic != "P2" && magic != "P3" && !binary) {
    throw FormatError(path.string() + ": unsupported image format '" + magic + "'");
  }
  PnmImage img;
  img.channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  img.width = pnm_number(is, path);
  img.height = pnm_number(is, path);
  const unsigned long maxval = pnm_number(is, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
    throw FormatError(path.string() + ": bad PNM header");
  }
  const std::size_t n = img.width * img.height * img.channels;
  img.values.resize(n);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned long v = 0;
    if (binary) {
      const int hi = is.get();
      if (hi == EOF) throw FormatError(path.string() + ": truncated PNM payload");
      v = static_cast<unsigned long>(hi);
      if (maxval > 255) {
        const int lo = is.get();
        if (lo == EOF) throw FormatError(path.string() + ": truncated PNM payload");
        v = (v << 8) | static_cast<unsigned long>(lo);
      }
    } else {
      v = pnm_number(is, path);
    }
    if (v > maxval) throw FormatError(path.string() + ": sample exceeds maxval");
    img.values[i] = static_cast<double>(v) * scale;
  }
  return img;
}

bool is_pnm(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

VideoTensor ingest_frames(const fs::path& input) {
  if (fs::is_regular_file(input)) {
    VideoTensor v = vt01::to_video(vt01::read_file(input));
    if (!in_unit_range(v)) throw FormatError(input.string() + ": values outside [0,1]");
    return v;
  }
  if (!fs::is_directory(input)) throw FormatError("no such file or directory: " + input.string());

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input)) {
    if (!e.is_regular_file()) continue;
    if (!is_pnm(e.path())) {
      throw FormatError(e.path().string() + ": unsupported frame format (expected PGM/PPM)");
    }
    files.push_back(e.path());
  }
  if (files.empty()) throw FormatError(input.string() + ": no frames found");
  std::sort(files.begin(), files.end());

  std::vector<PnmImage> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    frames.push_back(read_pnm(f));
    if (frames.back().width != frames.front().width ||
        frames.back().height != frames.front().height) {
      throw FormatError(f.string() + ": frame size differs from " + files.front().string());
    }
  }
  const VideoShape shape{frames.size(), frames.front().height, frames.front().width, 3};
  VideoTensor video(shape);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const PnmImage& img = frames[f];
    auto dst = video.frame(f);
    for (std::size_t p = 0; p < img.width * img.height; ++p) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        dst[p * 3 + ch] = img.values[p * img.channels + (img.channels == 3 ? ch : 0)];
      }
    }
  }
  return video;
}

}  // namespace meattack
