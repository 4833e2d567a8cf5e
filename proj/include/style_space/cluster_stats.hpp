#pragma once

// Per-category statistics and geometry: moments, a shrinkage-regularized Gaussian
// model with a Mahalanobis boundary, and centroid-distance neighbor ranking.

#include "style_space/common.hpp"
#include "style_space/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace style_space {

inline constexpr double kEigenFloor = 1e-9;

inline Vector centroid(const Cluster& cluster) { return cluster.members().rowwise().mean(); }

// Population (divide by N) standard deviation per dimension.
inline Vector per_dim_std(const Cluster& cluster) {
  const Vector c = centroid(cluster);
  const Matrix centered = cluster.members().colwise() - c;
  return (centered.array().square().rowwise().sum() / static_cast<double>(cluster.count())).sqrt();
}

inline double avg_std(const Cluster& cluster) { return per_dim_std(cluster).mean(); }

// Mean Euclidean distance from point to the cluster's members.
inline double mean_distance(const Eigen::Ref<const Vector>& point, const Cluster& cluster) {
  require_dim(cluster.dim(), static_cast<std::size_t>(point.size()));
  const Matrix& m = cluster.members();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) sum += (m.col(j) - point).norm();
  return sum / static_cast<double>(m.cols());
}

struct ModelOptions {
  double shrinkage = 0.1;          // in [0, 1]
  double boundary_quantile = 1.0;  // in (0, 1]; 1.0 = farthest member
};

// Single-Gaussian description of a cluster. Immutable once fitted.
class ClusterModel {
 public:
  ClusterModel(std::string label, Vector centroid, Vector per_dim_std, Matrix covariance,
               double boundary_radius, std::size_t sample_count)
      : label_(std::move(label)),
        centroid_(std::move(centroid)),
        per_dim_std_(std::move(per_dim_std)),
        covariance_(std::move(covariance)),
        boundary_radius_(boundary_radius),
        sample_count_(sample_count) {
    require_dim(static_cast<std::size_t>(centroid_.size()), static_cast<std::size_t>(covariance_.rows()));
    require_dim(static_cast<std::size_t>(centroid_.size()), static_cast<std::size_t>(covariance_.cols()));
    Eigen::LLT<Matrix> llt(covariance_);
    if (llt.info() != Eigen::Success) throw DataError("covariance of '" + label_ + "' is not positive definite");
    chol_lower_ = llt.matrixL();
  }

  const std::string& label() const { return label_; }
  const Vector& centroid() const { return centroid_; }
  const Vector& per_dim_std() const { return per_dim_std_; }
  double avg_std() const { return per_dim_std_.size() ? per_dim_std_.mean() : 0.0; }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& cholesky_lower() const { return chol_lower_; }
  double boundary_radius() const { return boundary_radius_; }
  std::size_t sample_count() const { return sample_count_; }
  std::size_t dim() const { return static_cast<std::size_t>(centroid_.size()); }

 private:
  std::string label_;
  Vector centroid_;
  Vector per_dim_std_;
  Matrix covariance_;
  Matrix chol_lower_;
  double boundary_radius_ = 0.0;
  std::size_t sample_count_ = 0;
};

inline double mahalanobis(const Eigen::Ref<const Vector>& point, const ClusterModel& model) {
  require_dim(model.dim(), static_cast<std::size_t>(point.size()));
  const Vector diff = point - model.centroid();
  return model.cholesky_lower().triangularView<Eigen::Lower>().solve(diff).norm();
}

inline bool inside_boundary(const Eigen::Ref<const Vector>& point, const ClusterModel& model,
                            double slack = 0.05) {
  return mahalanobis(point, model) <= model.boundary_radius() * (1.0 + slack);
}

// Nearest-rank quantile: the ceil(q*N)-th smallest value.
inline double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

// Regularized covariance: (1-s)*S + s*mean(diag S)*I with S the population covariance,
// eigenvalues floored at kEigenFloor. Singleton clusters get kEigenFloor*I and radius 0.
inline ClusterModel fit_model(const Cluster& cluster, const ModelOptions& opts = {}) {
  if (!(opts.shrinkage >= 0.0 && opts.shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in [0, 1]");
  if (!(opts.boundary_quantile > 0.0 && opts.boundary_quantile <= 1.0))
    throw ConfigError("boundary quantile must lie in (0, 1]");

  const auto d = static_cast<Eigen::Index>(cluster.dim());
  const Vector c = centroid(cluster);
  const Vector sd = per_dim_std(cluster);
  if (cluster.count() < 2)
    return ClusterModel(cluster.label(), c, sd, kEigenFloor * Matrix::Identity(d, d), 0.0, cluster.count());

  const Matrix centered = cluster.members().colwise() - c;
  Matrix sample = centered * centered.transpose() / static_cast<double>(cluster.count());
  const double avg_diag = sample.diagonal().mean();
  Matrix cov = (1.0 - opts.shrinkage) * sample + opts.shrinkage * avg_diag * Matrix::Identity(d, d);
  cov = 0.5 * (cov + cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  // Relative term keeps the Cholesky factorization well-posed for large-scale data.
  const double floor = std::max(kEigenFloor, 1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < floor) {
    Vector lambda = eig.eigenvalues().cwiseMax(floor);
    cov = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
  }

  // Provisional model (radius 0) to measure member distances.
  ClusterModel shape(cluster.label(), c, sd, cov, 0.0, cluster.count());
  std::vector<double> dist(cluster.count());
  for (std::size_t j = 0; j < cluster.count(); ++j) dist[j] = mahalanobis(cluster.member(j), shape);
  const double radius = nearest_rank_quantile(std::move(dist), opts.boundary_quantile);
  return ClusterModel(cluster.label(), c, sd, std::move(cov), radius, cluster.count());
}

struct Neighbors {
  std::string closest;
  std::string farthest;
};

// Orders candidate models by (centroid distance to `from`, label) and returns the
// first and last. Models whose label equals `exclude` are skipped.
inline Neighbors rank_by_centroid_distance(const Eigen::Ref<const Vector>& from,
                                           std::span<const ClusterModel> models,
                                           const std::string& exclude = {}) {
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& m : models) {
    if (!exclude.empty() && m.label() == exclude) continue;
    require_dim(m.dim(), static_cast<std::size_t>(from.size()));
    ranked.emplace_back((m.centroid() - from).norm(), m.label());
  }
  if (ranked.size() < 2) throw DataError("need at least 2 candidate categories to rank neighbors");
  std::sort(ranked.begin(), ranked.end());
  return {ranked.front().second, ranked.back().second};
}

inline Neighbors rank_neighbors(const std::string& target, std::span<const ClusterModel> models) {
  const auto it = std::find_if(models.begin(), models.end(), [&](const auto& m) { return m.label() == target; });
  if (it == models.end()) throw DataError("category '" + target + "' not present");
  return rank_by_centroid_distance(it->centroid(), models, target);
}

inline nlohmann::ordered_json to_json(const ClusterModel& m) {
  nlohmann::ordered_json j;
  j["label"] = m.label();
  j["sample_count"] = m.sample_count();
  j["centroid"] = std::vector<double>(m.centroid().begin(), m.centroid().end());
  j["per_dim_std"] = std::vector<double>(m.per_dim_std().begin(), m.per_dim_std().end());
  j["avg_std"] = m.avg_std();
  j["boundary_radius"] = m.boundary_radius();
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(m.covariance().size()));
  for (Eigen::Index r = 0; r < m.covariance().rows(); ++r)
    for (Eigen::Index c = 0; c < m.covariance().cols(); ++c) cov.push_back(m.covariance()(r, c));
  j["covariance"] = std::move(cov);
  return j;
}

inline ClusterModel cluster_model_from_json(const nlohmann::json& j) {
  try {
    const auto c = j.at("centroid").get<std::vector<double>>();
    const auto sd = j.at("per_dim_std").get<std::vector<double>>();
    const auto cov = j.at("covariance").get<std::vector<double>>();
    const auto d = static_cast<Eigen::Index>(c.size());
    if (static_cast<Eigen::Index>(cov.size()) != d * d) throw DataError("covariance must have dim*dim entries");
    Matrix m(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index k = 0; k < d; ++k) m(r, k) = cov[static_cast<std::size_t>(r * d + k)];
    return ClusterModel(j.at("label").get<std::string>(), Eigen::Map<const Vector>(c.data(), d),
                        Eigen::Map<const Vector>(sd.data(), static_cast<Eigen::Index>(sd.size())), m,
                        j.at("boundary_radius").get<double>(), j.value("sample_count", std::size_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("cluster model: ") + e.what());
  }
}

}  // namespace style_space
