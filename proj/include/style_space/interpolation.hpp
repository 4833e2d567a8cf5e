#pragma once

// Emotion-intensity schedules between the neutral category and a target emotion:
// straight-line interpolation of representatives, and the spread-aware variant that
// synthesizes an intermediate cluster per level and takes its I2I representative.
//
// Intensity convention throughout: t = 0 is neutral, t = 1 is the full emotion.

#include "style_space/cluster_stats.hpp"
#include "style_space/common.hpp"
#include "style_space/dataset.hpp"
#include "style_space/representative.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace style_space {

enum class FKind { identity, square, cube };

inline std::string to_string(FKind f) {
  switch (f) {
    case FKind::identity: return "identity";
    case FKind::square: return "square";
    case FKind::cube: return "cube";
  }
  return "unknown";
}

inline FKind f_kind_from_string(const std::string& s) {
  if (s == "identity") return FKind::identity;
  if (s == "square") return FKind::square;
  if (s == "cube") return FKind::cube;
  throw ConfigError("unknown f kind '" + s + "' (identity|square|cube)");
}

inline double apply_f(FKind f, double sigma) {
  switch (f) {
    case FKind::identity: return sigma;
    case FKind::square: return sigma * sigma;
    case FKind::cube: return sigma * sigma * sigma;
  }
  return sigma;
}

struct InterpolationConfig {
  FKind f_kind = FKind::square;
  std::size_t levels = 4;  // granularity N
  std::size_t pair_cap = 10000;
  std::uint64_t seed = 0;
  std::string neutral_label = "neutral";

  void check() const {
    if (levels < 2) throw ConfigError("granularity N must be >= 2");
    if (pair_cap < 1) throw ConfigError("pair cap must be >= 1");
  }
};

enum class ScheduleMethod { linear, sa_i2i };

inline std::string to_string(ScheduleMethod m) { return m == ScheduleMethod::linear ? "linear" : "sa_i2i"; }

struct ScheduleLevel {
  double t = 0.0;
  double alpha = 0.0;
  Vector vector;
};

struct IntensitySchedule {
  std::string neutral_label;
  std::string emotion_label;
  ScheduleMethod method = ScheduleMethod::linear;
  std::optional<double> anchor;  // b_e, sa_i2i only
  std::size_t granularity = 0;
  std::vector<ScheduleLevel> levels;
};

// t * a + (1 - t) * b for each t.
inline std::vector<Vector> linear_path(const Vector& a, const Vector& b, const std::vector<double>& ts) {
  require_dim(static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()));
  std::vector<Vector> out;
  out.reserve(ts.size());
  for (double t : ts) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("interpolation ratio " + std::to_string(t) + " outside [0, 1]");
    out.push_back(t * a + (1.0 - t) * b);
  }
  return out;
}

// b = f(sigma_n) / (f(sigma_n) + f(sigma_e)) with sigma the average per-dimension std;
// 0.5 when both f-values vanish.
inline double anchor_point(const Cluster& neutral, const Cluster& emotion, FKind f = FKind::square) {
  require_dim(neutral.dim(), emotion.dim());
  const double fn = apply_f(f, avg_std(neutral));
  const double fe = apply_f(f, avg_std(emotion));
  if (fn + fe == 0.0) return 0.5;
  return fn / (fn + fe);
}

// alpha_i = ln(e^b + delta*(i-1)), delta = (e - e^b)/(N-1), i = 1..N. The last ratio is
// pinned to exactly 1.
inline std::vector<double> nonlinear_ratios(double anchor, std::size_t levels) {
  if (levels < 2) throw ConfigError("granularity N must be >= 2");
  if (!(anchor >= 0.0 && anchor < 1.0)) throw ConfigError("anchor point must lie in [0, 1)");
  const double start = std::exp(anchor);
  const double delta = (std::numbers::e - start) / static_cast<double>(levels - 1);
  std::vector<double> alpha(levels);
  alpha[0] = anchor;
  for (std::size_t i = 1; i + 1 < levels; ++i) alpha[i] = std::log(start + delta * static_cast<double>(i));
  alpha[levels - 1] = 1.0;
  return alpha;
}

namespace detail {

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline std::string interpolated_label(const Cluster& neutral, const Cluster& emotion, double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "@%.6f", t);
  return neutral.label() + "->" + emotion.label() + buf;
}

}  // namespace detail

// Synthetic cluster at intensity t: midpoints (x' + y')/2 with
//   x' = (1 - t) x + t r_e   for x in neutral,
//   y' = t y + (1 - t) r_n   for y in emotion,
// over the pair cross-product. Above cfg.pair_cap pairs, a seeded uniform subset
// (without replacement, in pair order) is kept. `stream` selects an independent RNG
// stream for the same seed.
inline Cluster generate_interpolated_cluster(const Cluster& neutral, const Cluster& emotion, const Vector& r_n,
                                             const Vector& r_e, double t, const InterpolationConfig& cfg,
                                             std::uint64_t stream = 0) {
  cfg.check();
  const std::size_t d = neutral.dim();
  require_dim(d, emotion.dim());
  require_dim(d, static_cast<std::size_t>(r_n.size()));
  require_dim(d, static_cast<std::size_t>(r_e.size()));
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("intensity t must lie in [0, 1]");

  const Matrix from_neutral = ((1.0 - t) * neutral.members()).colwise() + t * r_e;
  const Matrix from_emotion = (t * emotion.members()).colwise() + (1.0 - t) * r_n;
  const std::size_t ne = emotion.count();
  const std::size_t total = neutral.count() * ne;

  std::vector<std::size_t> pairs(total);
  std::iota(pairs.begin(), pairs.end(), std::size_t{0});
  if (total > cfg.pair_cap) {
    std::vector<std::size_t> kept(cfg.pair_cap);
    auto rng = detail::stream_rng(cfg.seed, stream);
    std::sample(pairs.begin(), pairs.end(), kept.begin(), cfg.pair_cap, rng);
    pairs = std::move(kept);
  }

  Matrix members(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k] / ne);
    const auto j = static_cast<Eigen::Index>(pairs[k] % ne);
    members.col(static_cast<Eigen::Index>(k)) = 0.5 * (from_neutral.col(i) + from_emotion.col(j));
  }
  return Cluster(detail::interpolated_label(neutral, emotion, t), std::move(members));
}

namespace detail {

inline void check_pair(const CategoryModels& cats, const std::string& neutral, const std::string& emotion) {
  if (neutral == emotion) throw DataError("emotion label must differ from the neutral label '" + neutral + "'");
  find_cluster(cats.clusters, neutral);
  find_cluster(cats.clusters, emotion);
}

}  // namespace detail

// Spread-aware schedule: I2I representatives of neutral and emotion, anchor b_e, ratios
// alpha_1..alpha_N, then for every level below N the I2I representative of the
// interpolated cluster at t = alpha_i, with closest/farthest context picked among all
// original categories by centroid distance. Level N is the emotion representative.
// Nominal intensities t_i = (i - 1)/(N - 1).
inline IntensitySchedule sa_i2i_schedule(const LabeledEmbeddingSet& set, const std::string& emotion,
                                         const InterpolationConfig& cfg = {}, const SolverConfig& solver = {}) {
  cfg.check();
  solver.check();
  const CategoryModels cats = fit_categories(set, solver.model_options());
  detail::check_pair(cats, cfg.neutral_label, emotion);
  const Cluster& xn = find_cluster(cats.clusters, cfg.neutral_label);
  const Cluster& xe = find_cluster(cats.clusters, emotion);

  const Representative rn = i2i_representative(cats, cfg.neutral_label, solver);
  const Representative re = i2i_representative(cats, emotion, solver);
  const double anchor = anchor_point(xn, xe, cfg.f_kind);
  if (!(anchor < 1.0))
    throw DataError("anchor point is 1: the '" + emotion + "' cluster has zero spread");
  const auto alphas = nonlinear_ratios(anchor, cfg.levels);

  IntensitySchedule s;
  s.neutral_label = cfg.neutral_label;
  s.emotion_label = emotion;
  s.method = ScheduleMethod::sa_i2i;
  s.anchor = anchor;
  s.granularity = cfg.levels;
  s.levels.resize(cfg.levels);
  for (std::size_t i = 0; i < cfg.levels; ++i) {
    ScheduleLevel& level = s.levels[i];
    level.t = static_cast<double>(i) / static_cast<double>(cfg.levels - 1);
    level.alpha = alphas[i];
    if (i + 1 == cfg.levels) {
      level.vector = re.vector;
      continue;
    }
    const Cluster mixed = generate_interpolated_cluster(xn, xe, rn.vector, re.vector, alphas[i], cfg, i);
    const Neighbors nb = rank_by_centroid_distance(centroid(mixed), cats.models);
    const I2IContext ctx(mixed, find_cluster(cats.clusters, nb.closest), find_cluster(cats.clusters, nb.farthest));
    level.vector = solve_i2i(ctx, fit_model(mixed, solver.model_options()), solver).vector;
  }
  return s;
}

inline const std::vector<double>& default_linear_ratios() {
  static const std::vector<double> ts{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  return ts;
}

// Straight-line schedule between the I2I representatives: level t is t*r_e + (1-t)*r_n.
inline IntensitySchedule linear_schedule(const LabeledEmbeddingSet& set, const std::string& emotion,
                                         const std::vector<double>& ts = default_linear_ratios(),
                                         const SolverConfig& solver = {},
                                         const std::string& neutral_label = "neutral") {
  solver.check();
  if (ts.empty()) throw ConfigError("linear schedule needs at least one ratio");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1])) throw ConfigError("linear ratios must be strictly increasing");
  const CategoryModels cats = fit_categories(set, solver.model_options());
  detail::check_pair(cats, neutral_label, emotion);
  const Representative rn = i2i_representative(cats, neutral_label, solver);
  const Representative re = i2i_representative(cats, emotion, solver);
  const auto path = linear_path(re.vector, rn.vector, ts);

  IntensitySchedule s;
  s.neutral_label = neutral_label;
  s.emotion_label = emotion;
  s.method = ScheduleMethod::linear;
  s.granularity = ts.size();
  for (std::size_t i = 0; i < ts.size(); ++i) s.levels.push_back({ts[i], ts[i], path[i]});
  return s;
}

inline nlohmann::ordered_json to_json(const IntensitySchedule& s) {
  nlohmann::ordered_json j;
  j["neutral"] = s.neutral_label;
  j["emotion"] = s.emotion_label;
  j["method"] = to_string(s.method);
  j["anchor"] = s.anchor ? nlohmann::ordered_json(*s.anchor) : nlohmann::ordered_json(nullptr);
  j["granularity"] = s.granularity;
  j["levels"] = nlohmann::ordered_json::array();
  for (const auto& level : s.levels) {
    nlohmann::ordered_json lj;
    lj["t"] = level.t;
    lj["alpha"] = level.alpha;
    lj["vector"] = std::vector<double>(level.vector.begin(), level.vector.end());
    j["levels"].push_back(std::move(lj));
  }
  return j;
}

inline IntensitySchedule schedule_from_json(const nlohmann::json& j) {
  try {
    IntensitySchedule s;
    s.neutral_label = j.at("neutral").get<std::string>();
    s.emotion_label = j.at("emotion").get<std::string>();
    const auto method = j.at("method").get<std::string>();
    if (method == "linear")
      s.method = ScheduleMethod::linear;
    else if (method == "sa_i2i")
      s.method = ScheduleMethod::sa_i2i;
    else
      throw DataError("schedule: unknown method '" + method + "'");
    if (j.contains("anchor") && !j["anchor"].is_null()) s.anchor = j["anchor"].get<double>();
    for (const auto& lj : j.at("levels")) {
      const auto v = lj.at("vector").get<std::vector<double>>();
      s.levels.push_back({lj.at("t").get<double>(), lj.at("alpha").get<double>(),
                          Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))});
    }
    s.granularity = j.value("granularity", s.levels.size());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schedule: ") + e.what());
  }
}

}  // namespace style_space
