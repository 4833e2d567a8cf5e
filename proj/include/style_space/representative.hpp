#pragma once

// Representative vectors per category: the centroid baseline and the inter-to-intra
// (I2I) distance-ratio maximizer, found by a scan over target members followed by an
// optional boundary-penalized Nelder-Mead refinement.

#include "style_space/cluster_stats.hpp"
#include "style_space/common.hpp"
#include "style_space/dataset.hpp"
#include "style_space/nelder_mead.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace style_space {

// Candidates closer than this (mean distance) to the target members are singular.
inline constexpr double kSingularityGuard = 1e-12;

enum class RepresentativeMethod { mean, i2i_scan, i2i_refined, sa_i2i };

inline std::string to_string(RepresentativeMethod m) {
  switch (m) {
    case RepresentativeMethod::mean: return "mean";
    case RepresentativeMethod::i2i_scan: return "i2i_scan";
    case RepresentativeMethod::i2i_refined: return "i2i_refined";
    case RepresentativeMethod::sa_i2i: return "sa_i2i";
  }
  return "unknown";
}

inline RepresentativeMethod representative_method_from_string(const std::string& s) {
  if (s == "mean") return RepresentativeMethod::mean;
  if (s == "i2i_scan") return RepresentativeMethod::i2i_scan;
  if (s == "i2i_refined") return RepresentativeMethod::i2i_refined;
  if (s == "sa_i2i") return RepresentativeMethod::sa_i2i;
  throw DataError("unknown representative method '" + s + "'");
}

struct Representative {
  std::string label;
  Vector vector;
  RepresentativeMethod method = RepresentativeMethod::mean;
  std::optional<double> objective;  // absent for mean, and for singleton targets
  double boundary_margin = 0.0;     // boundary_radius - mahalanobis(vector)

  // Provenance.
  std::string closest;
  std::string farthest;
  bool degenerate = false;  // fewer than two other categories; closest == farthest
  bool split_mode = false;  // literal two-argmax reading
  std::optional<std::size_t> member_index;  // target member picked by the scan, if unchanged
};

struct SolverConfig {
  bool refine = true;
  double tol = 1e-6;
  std::size_t max_iters = 2000;
  double penalty = 1e3;
  double slack = 0.05;
  double shrinkage = 0.1;
  double boundary_quantile = 1.0;
  bool split_mode = false;

  ModelOptions model_options() const { return {shrinkage, boundary_quantile}; }

  void check() const {
    if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
    if (max_iters == 0) throw ConfigError("max_iters must be >= 1");
    if (!(penalty >= 0.0)) throw ConfigError("penalty must be >= 0");
    if (!(slack >= 0.0)) throw ConfigError("slack must be >= 0");
    if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in [0, 1]");
    if (!(boundary_quantile > 0.0 && boundary_quantile <= 1.0))
      throw ConfigError("boundary quantile must lie in (0, 1]");
  }
};

// Target cluster plus the closest and farthest other categories. Holds references;
// the clusters must outlive the context.
class I2IContext {
 public:
  I2IContext(const Cluster& target, const Cluster& closest, const Cluster& farthest)
      : target_(&target), closest_(&closest), farthest_(&farthest) {
    require_dim(target.dim(), closest.dim());
    require_dim(target.dim(), farthest.dim());
    if (target.label() == closest.label() || target.label() == farthest.label())
      throw DataError("I2I context: target '" + target.label() + "' must differ from its neighbors");
  }

  const Cluster& target() const { return *target_; }
  const Cluster& closest() const { return *closest_; }
  const Cluster& farthest() const { return *farthest_; }
  bool degenerate() const { return closest_->label() == farthest_->label(); }

 private:
  const Cluster* target_;
  const Cluster* closest_;
  const Cluster* farthest_;
};

// Weights on the farthest / closest inter-category terms. The joint objective uses
// (0.5, 0.5); the literal two-argmax reading maximizes (1, 0) and (0, 1) separately.
struct RatioWeights {
  double farthest = 0.5;
  double closest = 0.5;
};

inline constexpr RatioWeights kJointWeights{0.5, 0.5};
inline constexpr RatioWeights kFarthestOnly{1.0, 0.0};
inline constexpr RatioWeights kClosestOnly{0.0, 1.0};

namespace detail {

// NaN when singular.
inline double ratio_objective(const Eigen::Ref<const Vector>& r, const I2IContext& ctx, RatioWeights w) {
  const double intra = mean_distance(r, ctx.target());
  if (!(intra >= kSingularityGuard)) return std::numeric_limits<double>::quiet_NaN();
  double inter = 0.0;
  if (w.farthest != 0.0) inter += w.farthest * mean_distance(r, ctx.farthest()) / intra;
  if (w.closest != 0.0) inter += w.closest * mean_distance(r, ctx.closest()) / intra;
  return inter;
}

}  // namespace detail

inline double i2i_objective(const Eigen::Ref<const Vector>& r, const I2IContext& ctx) {
  const double j = detail::ratio_objective(r, ctx, kJointWeights);
  if (std::isnan(j))
    throw SingularityError("I2I objective undefined: candidate coincides with the members of '" +
                           ctx.target().label() + "'");
  return j;
}

inline Representative mean_representative(const Cluster& cluster) {
  Representative rep;
  rep.label = cluster.label();
  rep.vector = centroid(cluster);
  rep.method = RepresentativeMethod::mean;
  return rep;
}

// Same, with boundary margin filled from a fitted model.
inline Representative mean_representative(const Cluster& cluster, const ClusterModel& model) {
  Representative rep = mean_representative(cluster);
  rep.boundary_margin = model.boundary_radius() - mahalanobis(rep.vector, model);
  return rep;
}

namespace detail {

// Index of the first maximizer of the weighted ratio over target members, skipping
// singular candidates and (optionally) members outside the model boundary.
inline std::optional<std::size_t> scan_argmax(const I2IContext& ctx, RatioWeights w,
                                              const ClusterModel* boundary, double slack,
                                              std::vector<double>* values_out = nullptr) {
  const Cluster& target = ctx.target();
  std::vector<double> values(target.count(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(target.count(), [&](std::size_t i) {
    if (boundary && !inside_boundary(target.member(i), *boundary, slack)) return;
    values[i] = ratio_objective(target.member(i), ctx, w);
  });
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) continue;
    if (!best || values[i] > values[*best]) best = i;
  }
  if (values_out) *values_out = std::move(values);
  return best;
}

inline void fill_provenance(Representative& rep, const I2IContext& ctx) {
  rep.label = ctx.target().label();
  rep.closest = ctx.closest().label();
  rep.farthest = ctx.farthest().label();
  rep.degenerate = ctx.degenerate();
}

}  // namespace detail

// Best target member under the joint objective. Ties go to the earliest member.
// A singleton target returns its only member with no objective value. When
// `restrict_to_boundary` is set, members outside the model boundary (at `slack`) are
// not candidates.
inline Representative i2i_candidate_scan(const I2IContext& ctx, const ClusterModel& model,
                                         bool restrict_to_boundary = false, double slack = 0.05) {
  Representative rep;
  detail::fill_provenance(rep, ctx);
  rep.method = RepresentativeMethod::i2i_scan;
  if (ctx.target().count() == 1) {
    rep.vector = ctx.target().member(0);
    rep.member_index = 0;
  } else {
    const auto best = detail::scan_argmax(ctx, kJointWeights, restrict_to_boundary ? &model : nullptr, slack);
    if (!best)
      throw SingularityError("I2I scan: every candidate of '" + ctx.target().label() + "' is singular");
    rep.vector = ctx.target().member(*best);
    rep.member_index = *best;
    rep.objective = i2i_objective(rep.vector, ctx);
  }
  rep.boundary_margin = model.boundary_radius() - mahalanobis(rep.vector, model);
  return rep;
}

inline Representative i2i_candidate_scan(const I2IContext& ctx) {
  return i2i_candidate_scan(ctx, fit_model(ctx.target()));
}

namespace detail {

// Penalized ratio maximization started at `start`. Works in coordinates relative to
// `start` so the search path does not depend on where the data sits in space.
inline Vector refine_point(const Vector& start, const I2IContext& ctx, const ClusterModel& model,
                           const SolverConfig& cfg, RatioWeights w) {
  const Matrix target = ctx.target().members().colwise() - start;
  const Matrix closest = ctx.closest().members().colwise() - start;
  const Matrix farthest = ctx.farthest().members().colwise() - start;
  const Vector centre = model.centroid() - start;
  const auto lower = model.cholesky_lower().triangularView<Eigen::Lower>();
  const double radius = model.boundary_radius();

  auto mean_dist = [](const Matrix& m, const Vector& u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (m.col(j) - u).norm();
    return s / static_cast<double>(m.cols());
  };
  auto negated = [&](const Vector& u) {
    const double intra = mean_dist(target, u);
    if (!(intra >= kSingularityGuard)) return std::numeric_limits<double>::infinity();
    double j = 0.0;
    if (w.farthest != 0.0) j += w.farthest * mean_dist(farthest, u) / intra;
    if (w.closest != 0.0) j += w.closest * mean_dist(closest, u) / intra;
    const double excess = std::max(0.0, lower.solve(u - centre).norm() - radius);
    return -(j - cfg.penalty * excess * excess);
  };

  double step = 0.1 * model.avg_std();
  if (!(step > 0.0)) step = 1e-3 * std::max(1.0, start.norm());
  NelderMeadOptions nm;
  nm.initial_step = step;
  nm.tol = cfg.tol;
  nm.max_iters = cfg.max_iters;
  const auto res = nelder_mead(negated, Vector::Zero(start.size()), nm);
  return start + res.x;
}

}  // namespace detail

// Continuous ascent on the boundary-penalized objective. The result never has a lower
// objective than `start` and always passes inside_boundary at cfg.slack; when the
// search cannot satisfy both, `start` is returned unchanged (method i2i_refined).
inline Representative i2i_refine(const Representative& start, const I2IContext& ctx, const ClusterModel& model,
                                 const SolverConfig& cfg = {}) {
  cfg.check();
  require_dim(ctx.target().dim(), static_cast<std::size_t>(start.vector.size()));
  if (!inside_boundary(start.vector, model, cfg.slack))
    throw Error("i2i_refine: start point lies outside the boundary of '" + model.label() + "'");

  Representative rep = start;
  detail::fill_provenance(rep, ctx);
  rep.method = RepresentativeMethod::i2i_refined;
  const double start_value = detail::ratio_objective(start.vector, ctx, kJointWeights);
  if (std::isnan(start_value)) return rep;  // singleton target: nothing to ascend

  const Vector candidate = detail::refine_point(start.vector, ctx, model, cfg, kJointWeights);
  const double value = detail::ratio_objective(candidate, ctx, kJointWeights);
  if (!std::isnan(value) && value >= start_value && inside_boundary(candidate, model, cfg.slack)) {
    if (candidate != start.vector) rep.member_index.reset();
    rep.vector = candidate;
    rep.objective = value;
  } else {
    rep.objective = start_value;
  }
  rep.boundary_margin = model.boundary_radius() - mahalanobis(rep.vector, model);
  return rep;
}

namespace detail {

// Literal reading: average of the separate farthest-ratio and closest-ratio maximizers.
inline Representative split_representative(const I2IContext& ctx, const ClusterModel& model,
                                           const SolverConfig& cfg) {
  Representative rep;
  fill_provenance(rep, ctx);
  rep.split_mode = true;
  rep.method = cfg.refine ? RepresentativeMethod::i2i_refined : RepresentativeMethod::i2i_scan;
  if (ctx.target().count() == 1) {
    rep.vector = ctx.target().member(0);
  } else {
    auto solve = [&](RatioWeights w) -> Vector {
      const auto best = scan_argmax(ctx, w, &model, cfg.slack);
      if (!best) throw SingularityError("I2I scan: every candidate of '" + ctx.target().label() + "' is singular");
      Vector x = ctx.target().member(*best);
      if (!cfg.refine) return x;
      const double v0 = ratio_objective(x, ctx, w);
      const Vector y = refine_point(x, ctx, model, cfg, w);
      const double v1 = ratio_objective(y, ctx, w);
      return (!std::isnan(v1) && v1 >= v0 && inside_boundary(y, model, cfg.slack)) ? y : x;
    };
    rep.vector = 0.5 * solve(kFarthestOnly) + 0.5 * solve(kClosestOnly);
    const double j = ratio_objective(rep.vector, ctx, kJointWeights);
    if (!std::isnan(j)) rep.objective = j;
  }
  rep.boundary_margin = model.boundary_radius() - mahalanobis(rep.vector, model);
  return rep;
}

}  // namespace detail

// Scan (restricted to boundary members) then optional refinement, or the split
// reading when cfg.split_mode is set.
inline Representative solve_i2i(const I2IContext& ctx, const ClusterModel& model, const SolverConfig& cfg) {
  cfg.check();
  if (cfg.split_mode) return detail::split_representative(ctx, model, cfg);
  Representative rep = i2i_candidate_scan(ctx, model, /*restrict_to_boundary=*/true, cfg.slack);
  if (cfg.refine) rep = i2i_refine(rep, ctx, model, cfg);
  return rep;
}

// Clusters and their fitted models, keyed by label.
struct CategoryModels {
  std::map<std::string, Cluster> clusters;
  std::vector<ClusterModel> models;  // lexicographic label order

  const ClusterModel& model(const std::string& label) const {
    for (const auto& m : models)
      if (m.label() == label) return m;
    throw DataError("category '" + label + "' not present in dataset");
  }
};

inline CategoryModels fit_categories(const LabeledEmbeddingSet& set, const ModelOptions& opts) {
  CategoryModels out;
  out.clusters = partition(set);
  for (const auto& [label, cluster] : out.clusters) out.models.push_back(fit_model(cluster, opts));
  return out;
}

inline Representative i2i_representative(const CategoryModels& cats, const std::string& target,
                                         const SolverConfig& cfg = {}) {
  const Cluster& target_cluster = find_cluster(cats.clusters, target);
  if (cats.clusters.size() < 2)
    throw DataError("I2I needs at least 2 categories; only '" + target + "' is present");
  Neighbors nb;
  if (cats.clusters.size() == 2) {
    for (const auto& [label, c] : cats.clusters)
      if (label != target) nb = {label, label};
  } else {
    nb = rank_neighbors(target, cats.models);
  }
  const I2IContext ctx(target_cluster, find_cluster(cats.clusters, nb.closest),
                       find_cluster(cats.clusters, nb.farthest));
  return solve_i2i(ctx, cats.model(target), cfg);
}

inline Representative i2i_representative(const LabeledEmbeddingSet& set, const std::string& target,
                                         const SolverConfig& cfg = {}) {
  cfg.check();
  return i2i_representative(fit_categories(set, cfg.model_options()), target, cfg);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::vector<double> to_std(const Vector& v) { return {v.begin(), v.end()}; }

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Representative& rep) {
  nlohmann::ordered_json j;
  j["label"] = rep.label;
  j["method"] = to_string(rep.method);
  j["vector"] = detail::to_std(rep.vector);
  j["objective"] = rep.objective ? nlohmann::ordered_json(*rep.objective) : nlohmann::ordered_json(nullptr);
  j["boundary_margin"] = rep.boundary_margin;
  if (rep.method != RepresentativeMethod::mean) {
    j["closest"] = rep.closest;
    j["farthest"] = rep.farthest;
    j["degenerate"] = rep.degenerate;
    j["split_mode"] = rep.split_mode;
  }
  return j;
}

inline Representative representative_from_json(const nlohmann::json& j) {
  try {
    Representative rep;
    rep.label = j.at("label").get<std::string>();
    rep.method = representative_method_from_string(j.at("method").get<std::string>());
    rep.vector = detail::to_vector(j.at("vector").get<std::vector<double>>());
    if (rep.vector.size() == 0) throw DataError("representative '" + rep.label + "' has an empty vector");
    if (j.contains("objective") && !j["objective"].is_null()) rep.objective = j["objective"].get<double>();
    rep.boundary_margin = j.at("boundary_margin").get<double>();
    rep.closest = j.value("closest", std::string{});
    rep.farthest = j.value("farthest", std::string{});
    rep.degenerate = j.value("degenerate", false);
    rep.split_mode = j.value("split_mode", false);
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("representative: ") + e.what());
  }
}

// Accepts a single object or a list.
inline std::vector<Representative> representatives_from_json(const nlohmann::json& j) {
  std::vector<Representative> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(representative_from_json(item));
  } else {
    out.push_back(representative_from_json(j));
  }
  return out;
}

}  // namespace style_space
