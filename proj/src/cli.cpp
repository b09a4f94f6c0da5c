#include "facereid/cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "facereid/ablation.hpp"
#include "facereid/config.hpp"
#include "facereid/log.hpp"
#include "facereid/scenario.hpp"
#include "facereid/sources.hpp"
#include "facereid/stories.hpp"

namespace facereid {

namespace fs = std::filesystem;

namespace {

// Bad invocation detected after flag parsing; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamFlags {
  std::string params_file;
  std::optional<double> sigma_h;
  std::optional<double> tau_d;
  std::optional<double> tau_iou;
  std::optional<std::int64_t> t_min;
  std::optional<std::int64_t> min_hold;
  std::optional<std::string> policy;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--params", params_file, "Parameters file (key = value)");
    cmd.add_option("--sigma-h", sigma_h, "Detection confidence threshold");
    cmd.add_option("--tau-d", tau_d, "Cosine distance threshold");
    cmd.add_option("--tau-iou", tau_iou, "IoU threshold for candidate validation");
    cmd.add_option("--t-min", t_min, "Hold period in frames (0 disables post-filtering)");
    cmd.add_option("--min-hold", min_hold, "Appearances needed during the hold period");
    cmd.add_option("--policy", policy, "overlap_reject | continuity_confirm | off");
  }

  EngineParams resolve(EngineParams base = {}) const {
    try {
      if (!params_file.empty()) {
        if (!fs::exists(params_file)) {
          throw UsageError(fmt::format("params file '{}' does not exist", params_file));
        }
        base = load_params_file(params_file, base);
      }
      if (sigma_h) base.sigma_h = *sigma_h;
      if (tau_d) base.tau_d = *tau_d;
      if (tau_iou) base.tau_iou = *tau_iou;
      if (t_min) base.t_min = *t_min;
      if (min_hold) base.min_hold_appearances = *min_hold;
      if (policy) base.validation_policy = validation_policy_from_string(*policy);
      return validate_params(base);
    } catch (const InvalidArgument& e) {
      throw UsageError(fmt::format("invalid parameters: {}", e.what()));
    }
  }
};

ScenarioScript load_script_or_usage(const std::string& path) {
  if (!fs::exists(path)) throw UsageError(fmt::format("input '{}' does not exist", path));
  try {
    return load_scenario_file(path);
  } catch (const InvalidArgument& e) {
    throw UsageError(fmt::format("invalid scenario '{}': {}", path, e.what()));
  }
}

void print_summary(std::ostream& out, const RunSummary& s) {
  out << fmt::format(
      "frames: {}\nobservations: matched={} enrolled={} rejected_low_score={} "
      "suppressed_by_tracker={}\nprovider failures: {}\ngallery: active={} held={} "
      "discarded={}\n",
      s.frames, s.outcomes.matched, s.outcomes.enrolled, s.outcomes.rejected_low_score,
      s.outcomes.suppressed_by_tracker, s.provider_failures, s.gallery.active, s.gallery.held,
      s.gallery.discarded);
  for (const auto& w : s.warnings) out << "warning: " << w << '\n';
  if (s.truncated) out << "truncated: " << s.truncation_reason << '\n';
  if (s.wall_ms && s.frames > 0) {
    out << fmt::format("wall time: {:.1f} ms ({:.3f} ms/frame)\n", *s.wall_ms,
                       *s.wall_ms / static_cast<double>(s.frames));
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  auto out = open_output(path.string());
  out << content;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string input;
  std::string log;
  bool embed = false;
  bool deterministic = false;
  ParamFlags params;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  if (!fs::exists(a.input)) throw UsageError(fmt::format("input '{}' does not exist", a.input));
  const auto params = a.params.resolve();
  const bool from_frames = fs::is_directory(a.input);
  std::optional<ScenarioScript> script;
  if (!from_frames) {
    script = load_script_or_usage(a.input);
    if (script->embedding_dim != params.embedding_dim) {
      throw UsageError(fmt::format("embedding_dim: scenario uses {}, parameters say {}",
                                   script->embedding_dim, params.embedding_dim));
    }
  }

  RunResult result;
  auto log_out = open_output(a.log);
  LogWriter writer(log_out, {.embed_embeddings = a.embed});
  const RunOptions options{.deterministic = a.deterministic};

  if (from_frames) {
    SidecarProvider provider;
    FrameDirSource source(a.input, provider);
    result = run(source, provider, params, writer, options);
  } else {
    ScenarioSource source(*script);
    PrecomputedEmbedder embedder;
    result = run(source, embedder, params, writer, options);
  }
  print_summary(out, result.summary);
  out << "log: " << a.log << '\n';
  return result.summary.truncated ? kExitRuntime : kExitOk;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string input;
  std::string out;
  bool with_embeddings = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto script = load_script_or_usage(a.input);
  auto file = open_output(a.out);
  ScenarioSimulator sim(script);
  std::int64_t detections = 0;
  std::int64_t spurious = 0;
  std::int64_t occluded = 0;
  while (auto f = sim.next()) {
    nlohmann::ordered_json dets = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < f->frame.detections.size(); ++i) {
      const auto& d = f->frame.detections[i];
      const auto& t = f->truth[i];
      nlohmann::ordered_json j{{"box", {d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2()}},
                               {"score", d.score},
                               {"true_id", t.true_id},
                               {"occluded", t.occluded}};
      if (a.with_embeddings) {
        const auto v = f->frame.embeddings[i]->values();
        j["embedding"] = std::vector<double>(v.begin(), v.end());
      }
      dets.push_back(std::move(j));
      ++detections;
      spurious += t.true_id < 0 ? 1 : 0;
      occluded += t.occluded ? 1 : 0;
    }
    file << nlohmann::ordered_json{{"frame", f->frame.index}, {"detections", std::move(dets)}}
                .dump()
         << '\n';
  }
  out << fmt::format("frames: {}\ndetections: {} (false positives {}, occluded {})\n",
                     script.frame_count, detections, spurious, occluded);
  return kExitOk;
}

// ----------------------------------------------------------------- ablate

struct AblateArgs {
  std::string input;
  std::string report;
  std::vector<std::int64_t> counts;
  ParamFlags params;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  if (!a.counts.empty()) {
    if (a.counts.size() != 4) throw UsageError("--counts takes exactly four values e1,e2,e3,e4");
    double g = 0.0;
    try {
      g = gamma_percent(a.counts[0], a.counts[1], a.counts[2], a.counts[3]);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    out << fmt::format("gamma: {:.1f}%\n", round_tenth(g));
    return kExitOk;
  }
  if (a.input.empty()) throw UsageError("ablate needs --input <script> or --counts");
  const auto script = load_script_or_usage(a.input);
  auto base = a.params.resolve();
  if (script.embedding_dim != base.embedding_dim) {
    throw UsageError(fmt::format("embedding_dim: scenario uses {}, parameters say {}",
                                 script.embedding_dim, base.embedding_dim));
  }
  const auto report = run_ablation(script, base);
  out << ablation_text(report);
  if (!a.report.empty()) {
    write_file(a.report, ablation_csv(report));
    out << "report: " << a.report << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- stories

struct StoriesArgs {
  std::string log;
  std::string identity = "all";
  std::string mode;
  std::string frames;
  std::string out;
  std::int64_t max_gap = 12;
  double margin = 0.2;
  std::string scale;
  bool include_unconfirmed = false;
};

std::vector<IdentityId> selected_ids(const CatalogIndex& index, const std::string& identity) {
  if (identity == "all") return index.active_ids();
  IdentityId id = 0;
  try {
    id = parse_int("--identity", identity);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  index.identity(id);  // unknown id is a runtime error
  return {id};
}

int cmd_stories(const StoriesArgs& a, std::ostream& out) {
  if (!fs::exists(a.log)) throw UsageError(fmt::format("log '{}' does not exist", a.log));
  std::optional<int> out_w;
  std::optional<int> out_h;
  if (!a.scale.empty()) {
    const auto x = a.scale.find('x');
    try {
      if (x == std::string::npos) throw InvalidArgument("--scale: expected WxH");
      out_w = static_cast<int>(parse_int("--scale", std::string_view(a.scale).substr(0, x)));
      out_h = static_cast<int>(parse_int("--scale", std::string_view(a.scale).substr(x + 1)));
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }

  const auto log = read_log(fs::path(a.log));
  for (const auto& w : log.warnings) out << "warning: " << w << '\n';
  const auto index = index_log(log);
  const auto ids = selected_ids(index, a.identity);
  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);

  if (a.mode == "timeline") {
    const auto t = presence_timeline(index);
    write_file(out_dir / "presence.svg", presence_svg(t, index.header.fps));
    write_file(out_dir / "presence.csv", presence_csv(t));
    out << fmt::format("timeline: {} identities x {} frames\n", t.ids.size(), t.frames);
    return kExitOk;
  }

  if (a.mode == "segments") {
    std::vector<StorySegment> all;
    const SegmentOptions opts{a.max_gap, a.include_unconfirmed};
    for (const auto id : ids) {
      auto segs = build_segments(index, id, opts);
      all.insert(all.end(), segs.begin(), segs.end());
    }
    write_file(out_dir / "segments.csv", segments_csv(all));
    out << fmt::format("segments: {}\n", all.size());
    return kExitOk;
  }

  CropOptions opts;
  opts.mode = a.mode == "mouth" ? CropMode::Mouth : CropMode::Face;
  opts.face_margin = a.margin;
  opts.out_width = out_w;
  opts.out_height = out_h;
  opts.include_unconfirmed = a.include_unconfirmed;
  std::vector<CropRow> rows;
  for (const auto id : ids) {
    auto r = crop_manifest(index, id, opts);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_file(out_dir / fmt::format("{}_manifest.csv", a.mode), manifest_csv(rows));
  out << fmt::format("manifest rows: {}\n", rows.size());
  if (!a.frames.empty()) {
    const auto result = apply_crops(rows, a.frames, out_dir / a.mode);
    for (const auto& w : result.warnings) out << "warning: " << w << '\n';
    out << fmt::format("crops written: {}\n", result.written.size());
  }
  return kExitOk;
}

// ----------------------------------------------------------------- replay

struct ReplayArgs {
  std::string log;
  std::string out_log;
  bool embed = false;
  bool deterministic = false;
  ParamFlags params;
};

int cmd_replay(const ReplayArgs& a, std::ostream& out) {
  if (!fs::exists(a.log)) throw UsageError(fmt::format("log '{}' does not exist", a.log));
  ReplaySource source{fs::path(a.log)};
  const auto params = a.params.resolve(source.header().params);
  auto log_out = open_output(a.out_log);
  LogWriter writer(log_out, {.embed_embeddings = a.embed});
  PrecomputedEmbedder embedder;
  const auto result = run(source, embedder, params, writer, {.deterministic = a.deterministic});
  print_summary(out, result.summary);
  out << "log: " << a.out_log << '\n';
  return result.summary.truncated ? kExitRuntime : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-set face re-identification and video story cataloging", "facereid"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Run re-identification and write the analysis log");
  c_analyze->add_option("--input", analyze.input, "Frame directory or scenario script")->required();
  c_analyze->add_option("--log", analyze.log, "Output analysis log")->required();
  c_analyze->add_flag("--embed-in-log", analyze.embed, "Store embeddings (enables replay)");
  c_analyze->add_flag("--deterministic", analyze.deterministic,
                      "Omit wall-clock fields so identical runs give identical logs");
  analyze.params.add_to(*c_analyze);

  SimulateArgs simulate;
  auto* c_simulate = app.add_subcommand("simulate", "Dump a scenario's detection stream with ground truth");
  c_simulate->add_option("--input", simulate.input, "Scenario script")->required();
  c_simulate->add_option("--out", simulate.out, "Output JSONL stream")->required();
  c_simulate->add_flag("--with-embeddings", simulate.with_embeddings, "Include embeddings");

  AblateArgs ablate;
  auto* c_ablate = app.add_subcommand("ablate", "Four-configuration ablation and relative gain");
  c_ablate->add_option("--input", ablate.input, "Scenario script");
  c_ablate->add_option("--report", ablate.report, "CSV report path");
  c_ablate->add_option("--counts", ablate.counts, "Identity counts e1,e2,e3,e4 (gamma only)")
      ->delimiter(',')
      ->expected(1, 4);
  ablate.params.add_to(*c_ablate);

  StoriesArgs stories;
  auto* c_stories = app.add_subcommand("stories", "Build story catalogs from an analysis log");
  c_stories->add_option("--log", stories.log, "Analysis log")->required();
  c_stories->add_option("--identity", stories.identity, "Identity id or 'all'");
  c_stories->add_option("--mode", stories.mode, "face | mouth | segments | timeline")
      ->required()
      ->check(CLI::IsMember({"face", "mouth", "segments", "timeline"}));
  c_stories->add_option("--frames", stories.frames, "Frame directory to cut crops from");
  c_stories->add_option("--out", stories.out, "Output directory")->required();
  c_stories->add_option("--max-gap", stories.max_gap, "Frames a gap may span inside a segment");
  c_stories->add_option("--margin", stories.margin, "Face crop margin per side");
  c_stories->add_option("--scale", stories.scale, "Rescale crops to WxH");
  c_stories->add_flag("--include-unconfirmed", stories.include_unconfirmed,
                      "Include identities that ended discarded or held");

  ReplayArgs replay;
  auto* c_replay = app.add_subcommand("replay", "Re-run the engine on a logged detection stream");
  c_replay->add_option("--log", replay.log, "Analysis log written with --embed-in-log")->required();
  c_replay->add_option("--out", replay.out_log, "Output analysis log")->required();
  c_replay->add_flag("--embed-in-log", replay.embed, "Store embeddings in the new log");
  c_replay->add_flag("--deterministic", replay.deterministic, "Omit wall-clock fields");
  replay.params.add_to(*c_replay);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_analyze->parsed()) return cmd_analyze(analyze, out);
    if (c_simulate->parsed()) return cmd_simulate(simulate, out);
    if (c_ablate->parsed()) return cmd_ablate(ablate, out);
    if (c_stories->parsed()) return cmd_stories(stories, out);
    if (c_replay->parsed()) return cmd_replay(replay, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace facereid
