#pragma once

// Command implementations for the style_space tool. Kept in a header so tests can
// drive the commands in-process.
//
// Exit codes: 0 success, 1 data or algorithm failure, 2 usage error.

#include "style_space/style_space.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace style_space::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

// Thrown for flag combinations CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Temp file in the same directory, then rename over the destination.
inline void write_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

inline std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

class Manifest {
 public:
  explicit Manifest(std::string command) { j_["command"] = std::move(command); j_["version"] = kVersion; }

  nlohmann::ordered_json& config() { return j_["config"]; }
  void seed(const std::string& name, std::uint64_t value) { j_["seeds"][name] = value; }

  void input(const std::string& path) {
    nlohmann::ordered_json e;
    e["path"] = path;
    e["sha256"] = sha256_hex(read_file(path));
    j_["inputs"].push_back(std::move(e));
  }

  // Writes the artifact and then the manifest next to it.
  void write(const std::string& out_path, const std::string& bytes) {
    write_atomic(out_path, bytes);
    nlohmann::ordered_json e;
    e["path"] = out_path;
    e["sha256"] = sha256_hex(bytes);
    j_["outputs"].push_back(std::move(e));
    if (!j_.contains("inputs")) j_["inputs"] = nlohmann::ordered_json::array();
    if (!j_.contains("seeds")) j_["seeds"] = nlohmann::ordered_json::object();
    write_atomic(manifest_path(out_path), j_.dump(2) + "\n");
  }

 private:
  nlohmann::ordered_json j_;
};

struct SolverFlags {
  SolverConfig cfg;
  bool no_refine = false;
  bool split_mode = false;

  void add(CLI::App& app) {
    app.add_flag("--no-refine", no_refine, "Skip continuous refinement after the candidate scan");
    app.add_flag("--split-mode", split_mode, "Average the two separate ratio maximizers");
    app.add_option("--tol", cfg.tol, "Simplex diameter tolerance")->check(CLI::PositiveNumber);
    app.add_option("--max-iters", cfg.max_iters, "Refinement iteration cap")->check(CLI::PositiveNumber);
    app.add_option("--penalty", cfg.penalty, "Boundary penalty weight")->check(CLI::NonNegativeNumber);
    app.add_option("--slack", cfg.slack, "Boundary slack")->check(CLI::NonNegativeNumber);
    app.add_option("--shrinkage", cfg.shrinkage, "Covariance shrinkage")->check(CLI::Range(0.0, 1.0));
    app.add_option("--quantile", cfg.boundary_quantile, "Boundary quantile")->check(CLI::Range(0.0, 1.0));
  }

  SolverConfig resolved() const {
    SolverConfig c = cfg;
    c.refine = !no_refine;
    c.split_mode = split_mode;
    c.check();
    return c;
  }
};

inline nlohmann::ordered_json to_json(const SolverConfig& c) {
  nlohmann::ordered_json j;
  j["refine"] = c.refine;
  j["split_mode"] = c.split_mode;
  j["tol"] = c.tol;
  j["max_iters"] = c.max_iters;
  j["penalty"] = c.penalty;
  j["slack"] = c.slack;
  j["shrinkage"] = c.shrinkage;
  j["boundary_quantile"] = c.boundary_quantile;
  return j;
}

inline std::string dataset_bytes(const LabeledEmbeddingSet& set, const std::string& path) {
  std::ostringstream ss;
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    write_csv(ss, set);
  else
    write_jsonl(ss, set);
  return ss.str();
}

// Non-finite weights make every downstream command fail.
inline bool check_finite(const LabeledEmbeddingSet& set, std::ostream& err) {
  const auto report = validate(set, 1);
  if (report.non_finite_ids.empty()) return true;
  for (const auto& id : report.non_finite_ids) err << "error: record '" << id << "' has NaN/Inf weights\n";
  return false;
}

// ---------------------------------------------------------------------------

struct GenSynthArgs {
  std::string spec_path;
  std::size_t clusters = 4;
  std::size_t dim = 40;
  std::size_t n = 740;
  std::uint64_t seed = 0;
  double separation = 3.0;
  double stddev = 1.0;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  std::vector<CLI::Option*> inline_opts;
};

inline int cmd_gen_synth(const GenSynthArgs& a, std::ostream& err) {
  bool inline_given = false;
  for (auto* o : a.inline_opts) inline_given = inline_given || o->count() > 0;
  if (!a.spec_path.empty() && inline_given) throw UsageError("--spec cannot be combined with inline cluster flags");

  Manifest manifest("gen-synth");
  SyntheticSpec spec;
  if (!a.spec_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(a.spec_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("'" + a.spec_path + "': " + e.what());
    }
    spec = synthetic_spec_from_json(j);
    if (a.seed_opt && a.seed_opt->count()) spec.seed = a.seed;
    manifest.input(a.spec_path);
  } else {
    spec = make_separated_spec(a.clusters, a.dim, a.n, a.seed, a.separation, a.stddev);
    manifest.config()["clusters"] = a.clusters;
    manifest.config()["dim"] = a.dim;
    manifest.config()["n"] = a.n;
    manifest.config()["separation"] = a.separation;
    manifest.config()["std"] = a.stddev;
  }
  manifest.config()["spec"] = to_json(spec);
  manifest.seed("seed", spec.seed);
  const auto set = generate_synthetic(spec);
  manifest.write(a.out, dataset_bytes(set, a.out));
  err << "wrote " << set.size() << " records (" << spec.categories.size() << " categories, dim " << spec.dim
      << ") to " << a.out << "\n";
  return kOk;
}

struct RepsArgs {
  std::string input;
  std::string method = "i2i";
  std::string out;
  SolverFlags solver;
};

inline int cmd_reps(const RepsArgs& a, std::ostream& err) {
  const SolverConfig cfg = a.solver.resolved();
  if (a.method == "mean" && (a.solver.no_refine || a.solver.split_mode))
    throw UsageError("--no-refine and --split-mode apply to --method i2i only");
  Manifest manifest("reps");
  const auto set = load_dataset(a.input);
  manifest.input(a.input);
  if (!check_finite(set, err)) return kFailure;

  const auto cats = fit_categories(set, cfg.model_options());
  if (a.method == "i2i" && cats.clusters.size() < 2) {
    err << "error: I2I needs at least 2 categories\n";
    return kFailure;
  }
  if (a.method == "i2i" && cats.clusters.size() == 2)
    err << "warning: only 2 categories; I2I runs in degenerate mode (closest == farthest)\n";

  auto list = nlohmann::ordered_json::array();
  for (const auto& [label, cluster] : cats.clusters) {
    const Representative rep = a.method == "mean" ? mean_representative(cluster, cats.model(label))
                                                  : i2i_representative(cats, label, cfg);
    list.push_back(to_json(rep));
  }
  manifest.config()["method"] = a.method;
  manifest.config()["solver"] = to_json(cfg);
  manifest.write(a.out, list.dump(2) + "\n");
  return kOk;
}

struct ScheduleArgs {
  std::string input;
  std::string emotion;
  std::string neutral = "neutral";
  std::string method;
  std::size_t levels = 4;
  std::vector<double> ts;
  std::string f = "square";
  std::size_t pair_cap = 10000;
  std::uint64_t seed = 0;
  std::string out;
  SolverFlags solver;
  CLI::Option* levels_opt = nullptr;
  CLI::Option* ts_opt = nullptr;
  CLI::Option* f_opt = nullptr;
  CLI::Option* cap_opt = nullptr;
};

inline int cmd_schedule(const ScheduleArgs& a, std::ostream& err) {
  const bool linear = a.method == "linear";
  if (linear && (a.levels_opt->count() || a.f_opt->count() || a.cap_opt->count()))
    throw UsageError("--levels, --f and --pair-cap are only valid with --method sa-i2i");
  if (!linear && a.ts_opt->count()) throw UsageError("--ts is only valid with --method linear");
  const SolverConfig cfg = a.solver.resolved();

  Manifest manifest("schedule");
  const auto set = load_dataset(a.input);
  manifest.input(a.input);
  if (!check_finite(set, err)) return kFailure;
  const auto labels = set.labels();
  for (const auto& needed : {a.neutral, a.emotion}) {
    if (std::find(labels.begin(), labels.end(), needed) == labels.end()) {
      err << "error: category '" << needed << "' not present in " << a.input << "\n";
      return kFailure;
    }
  }
  if (labels.size() == 2) err << "warning: only 2 categories; I2I runs in degenerate mode (closest == farthest)\n";

  IntensitySchedule schedule;
  manifest.config()["method"] = a.method;
  manifest.config()["neutral"] = a.neutral;
  manifest.config()["emotion"] = a.emotion;
  if (linear) {
    const auto ts = a.ts.empty() ? default_linear_ratios() : a.ts;
    try {
      schedule = linear_schedule(set, a.emotion, ts, cfg, a.neutral);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    manifest.config()["ts"] = ts;
  } else {
    InterpolationConfig icfg;
    icfg.f_kind = f_kind_from_string(a.f);
    icfg.levels = a.levels;
    icfg.pair_cap = a.pair_cap;
    icfg.seed = a.seed;
    icfg.neutral_label = a.neutral;
    schedule = sa_i2i_schedule(set, a.emotion, icfg, cfg);
    manifest.config()["levels"] = icfg.levels;
    manifest.config()["f"] = to_string(icfg.f_kind);
    manifest.config()["pair_cap"] = icfg.pair_cap;
    manifest.seed("seed", icfg.seed);
  }
  manifest.config()["solver"] = to_json(cfg);
  manifest.write(a.out, to_json(schedule).dump(2) + "\n");
  return kOk;
}

struct PlotArgs {
  std::string input;
  std::string reps;
  std::string schedule;
  std::string format;
  std::string out;
};

inline nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

inline int cmd_plot(const PlotArgs& a, std::ostream& err) {
  const PlotFormat format = plot_format_from_string(a.format);
  Manifest manifest("plot");
  const auto set = load_dataset(a.input);
  manifest.input(a.input);
  if (!check_finite(set, err)) return kFailure;
  std::vector<Representative> reps;
  std::optional<IntensitySchedule> schedule;
  if (!a.reps.empty()) {
    reps = representatives_from_json(parse_json_file(a.reps));
    manifest.input(a.reps);
    for (const auto& r : reps)
      if (static_cast<std::size_t>(r.vector.size()) != set.dim()) {
        err << "error: representative '" << r.label << "' in " << a.reps << " has dimension " << r.vector.size()
            << ", dataset has " << set.dim() << "\n";
        return kFailure;
      }
  }
  if (!a.schedule.empty()) {
    schedule = schedule_from_json(parse_json_file(a.schedule));
    manifest.input(a.schedule);
    for (const auto& level : schedule->levels)
      if (static_cast<std::size_t>(level.vector.size()) != set.dim()) {
        err << "error: schedule " << a.schedule << " has dimension " << level.vector.size() << ", dataset has "
            << set.dim() << "\n";
        return kFailure;
      }
  }

  const Projection2D proj = pca_fit(set);
  PlotScene scene;
  for (const auto& r : set.records()) scene.points.push_back({project(proj, r.weights), r.label, MarkerKind::point});
  for (const auto& r : reps)
    scene.representatives.push_back({project(proj, r.vector), r.label,
                                     r.method == RepresentativeMethod::mean ? MarkerKind::rep_mean
                                                                            : MarkerKind::rep_i2i});
  if (schedule) {
    std::vector<ScenePoint> line;
    const std::string label = schedule->neutral_label + "->" + schedule->emotion_label + ":" + to_string(schedule->method);
    for (const auto& level : schedule->levels) line.push_back({project(proj, level.vector), label, MarkerKind::schedule});
    scene.schedules.push_back(std::move(line));
  }
  manifest.config()["format"] = a.format;
  manifest.write(a.out, emit_plot(scene, format));
  return kOk;
}

struct ValidateArgs {
  std::string input;
  std::size_t min_per_category = 1;
  std::string neutral = "neutral";
};

inline int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  LabeledEmbeddingSet set;
  try {
    set = load_dataset(a.input);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  const auto report = validate(set, a.min_per_category, a.neutral);
  out << to_json(report).dump(2) << "\n";
  for (const auto& p : report.problems) err << "problem: " << p << "\n";
  return report.schedulable ? kOk : kFailure;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Representative style-embedding vectors and emotion-intensity schedules", "style_space"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a seeded synthetic labeled dataset");
  gen_cmd->add_option("--spec", gen.spec_path, "SyntheticSpec JSON file")->check(CLI::ExistingFile);
  gen.inline_opts.push_back(gen_cmd->add_option("--clusters", gen.clusters, "Number of categories")->check(CLI::PositiveNumber));
  gen.inline_opts.push_back(gen_cmd->add_option("--dim", gen.dim, "Dimension")->check(CLI::PositiveNumber));
  gen.inline_opts.push_back(gen_cmd->add_option("--n", gen.n, "Vectors per category")->check(CLI::PositiveNumber));
  gen.inline_opts.push_back(
      gen_cmd->add_option("--separation", gen.separation, "Centroid separation in units of std")->check(CLI::NonNegativeNumber));
  gen.inline_opts.push_back(gen_cmd->add_option("--std", gen.stddev, "Per-dimension std")->check(CLI::PositiveNumber));
  gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "Output dataset (.jsonl or .csv)")->required();

  RepsArgs reps;
  auto* reps_cmd = app.add_subcommand("reps", "Compute a representative vector per category");
  reps_cmd->add_option("--input", reps.input, "Dataset (.jsonl or .csv)")->required();
  reps_cmd->add_option("--method", reps.method, "mean|i2i")->check(CLI::IsMember({"mean", "i2i"}));
  reps_cmd->add_option("--out", reps.out, "Output JSON")->required();
  reps.solver.add(*reps_cmd);

  ScheduleArgs sched;
  auto* sched_cmd = app.add_subcommand("schedule", "Build a neutral-to-emotion intensity schedule");
  sched_cmd->add_option("--input", sched.input, "Dataset (.jsonl or .csv)")->required();
  sched_cmd->add_option("--emotion", sched.emotion, "Target emotion label")->required();
  sched_cmd->add_option("--neutral", sched.neutral, "Neutral label");
  sched_cmd->add_option("--method", sched.method, "linear|sa-i2i")->required()->check(CLI::IsMember({"linear", "sa-i2i"}));
  sched.levels_opt = sched_cmd->add_option("--levels", sched.levels, "Granularity N (sa-i2i)")->check(CLI::Range(2, 100000));
  sched.ts_opt = sched_cmd->add_option("--ts", sched.ts, "Comma-separated ratios (linear)")->delimiter(',');
  sched.f_opt = sched_cmd->add_option("--f", sched.f, "identity|square|cube (sa-i2i)")
                    ->check(CLI::IsMember({"identity", "square", "cube"}));
  sched.cap_opt = sched_cmd->add_option("--pair-cap", sched.pair_cap, "Max interpolated pairs (sa-i2i)")->check(CLI::PositiveNumber);
  sched_cmd->add_option("--seed", sched.seed, "RNG seed");
  sched_cmd->add_option("--out", sched.out, "Output JSON")->required();
  sched.solver.add(*sched_cmd);

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Project dataset and artifacts to 2-D and render");
  plot_cmd->add_option("--input", plot.input, "Dataset (.jsonl or .csv)")->required();
  plot_cmd->add_option("--reps", plot.reps, "Representatives JSON");
  plot_cmd->add_option("--schedule", plot.schedule, "Schedule JSON");
  plot_cmd->add_option("--format", plot.format, "svg|csv")->required()->check(CLI::IsMember({"svg", "csv"}));
  plot_cmd->add_option("--out", plot.out, "Output file")->required();

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Check a dataset and print a JSON report");
  val_cmd->add_option("--input", val.input, "Dataset (.jsonl or .csv)")->required();
  val_cmd->add_option("--min-per-category", val.min_per_category, "Minimum vectors per category");
  val_cmd->add_option("--neutral", val.neutral, "Neutral label");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_synth(gen, err);
    if (reps_cmd->parsed()) return cmd_reps(reps, err);
    if (sched_cmd->parsed()) return cmd_schedule(sched, err);
    if (plot_cmd->parsed()) return cmd_plot(plot, err);
    if (val_cmd->parsed()) return cmd_validate(val, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args), out, err);
}

}  // namespace style_space::cli
