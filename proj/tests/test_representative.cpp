#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

namespace ss = style_space;
namespace st = style_space::testing;

namespace {

ss::Cluster cluster_of(const std::string& label, std::initializer_list<std::initializer_list<double>> pts) {
  std::vector<ss::Vector> vs;
  for (const auto& p : pts) {
    ss::Vector v(static_cast<Eigen::Index>(p.size()));
    Eigen::Index i = 0;
    for (double x : p) v[i++] = x;
    vs.push_back(v);
  }
  return ss::Cluster::from_vectors(label, vs);
}

ss::Vector vec(double a, double b) {
  ss::Vector v(2);
  v << a, b;
  return v;
}

// A random instance with the context built from centroid ranking.
struct Instance {
  ss::CategoryModels cats;
  std::string target;
  ss::Neighbors nb;

  ss::I2IContext ctx() const {
    return {cats.clusters.at(target), cats.clusters.at(nb.closest), cats.clusters.at(nb.farthest)};
  }
};

Instance random_instance(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_int_distribution<std::size_t> k(3, 5);
  Instance inst;
  inst.cats = ss::fit_categories(st::random_set(rng, dim, k(rng), 5, 30), {});
  std::uniform_int_distribution<std::size_t> pick(0, inst.cats.clusters.size() - 1);
  inst.target = std::next(inst.cats.clusters.begin(), static_cast<long>(pick(rng)))->first;
  inst.nb = ss::rank_neighbors(inst.target, inst.cats.models);
  return inst;
}

}  // namespace

TEST(MeanRepresentative, Examples) {
  const auto c = cluster_of("a", {{0, 0}, {2, 2}});
  const auto rep = ss::mean_representative(c);
  EXPECT_TRUE(rep.vector.isApprox(vec(1, 1)));
  EXPECT_EQ(rep.method, ss::RepresentativeMethod::mean);
  EXPECT_FALSE(rep.objective);
  EXPECT_EQ(ss::mean_representative(cluster_of("s", {{4, -1}})).vector, vec(4, -1));
  std::mt19937_64 rng(1);
  const auto r = st::random_cluster(rng, "r", 5, 13);
  EXPECT_EQ(ss::mean_representative(r).vector, ss::centroid(r));
}

TEST(I2IObjective, HandComputed) {
  const auto xe = cluster_of("e", {{0, 0}, {2, 0}});
  const auto xs = cluster_of("s", {{1, 3}});
  const auto xl = cluster_of("l", {{1, -5}});
  const ss::I2IContext ctx(xe, xs, xl);
  EXPECT_DOUBLE_EQ(ss::i2i_objective(vec(1, 0), ctx), 4.0);
}

TEST(I2IObjective, SingularWhenCoincident) {
  const auto xe = cluster_of("e", {{1, 1}});
  const auto xs = cluster_of("s", {{1, 1}});
  const auto xl = cluster_of("l", {{1, 1}});
  EXPECT_THROW(ss::i2i_objective(vec(1, 1), ss::I2IContext(xe, xs, xl)), ss::SingularityError);
}

TEST(I2IObjective, ContextRejectsTargetAsNeighbor) {
  const auto xe = cluster_of("e", {{0, 0}});
  const auto xs = cluster_of("s", {{1, 3}});
  EXPECT_THROW(ss::I2IContext(xe, xe, xs), ss::DataError);
  const auto xs3 = cluster_of("t", {{1, 3, 4}});
  EXPECT_THROW(ss::I2IContext(xe, xs3, xs), ss::DimensionMismatch);
}

TEST(I2IObjective, IsometryInvariant) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + trial % 4;
    const auto inst = random_instance(rng, d);
    const ss::Matrix q = st::random_rotation(rng, d);
    const ss::Vector t = ss::Vector::Random(static_cast<Eigen::Index>(d)) * 10;
    auto move = [&](const ss::Cluster& c) { return ss::Cluster(c.label(), (q * c.members()).colwise() + t); };
    const auto ctx = inst.ctx();
    const auto e2 = move(ctx.target()), s2 = move(ctx.closest()), l2 = move(ctx.farthest());
    const ss::I2IContext moved(e2, s2, l2);
    const ss::Vector r = ss::centroid(ctx.target()) + ss::Vector::Random(static_cast<Eigen::Index>(d));
    const double j1 = ss::i2i_objective(r, ctx);
    const double j2 = ss::i2i_objective(q * r + t, moved);
    EXPECT_NEAR(j1, j2, 1e-10 * j1);
  }
}

TEST(I2IObjective, FinitePositiveAtMembers) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng, 3);
    const auto ctx = inst.ctx();
    for (std::size_t i = 0; i < ctx.target().count(); ++i) {
      const double j = ss::i2i_objective(ctx.target().member(i), ctx);
      EXPECT_TRUE(std::isfinite(j));
      EXPECT_GT(j, 0.0);
    }
  }
}

TEST(CandidateScan, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 2 + trial % 3);
    const auto ctx = inst.ctx();
    const auto rep = ss::i2i_candidate_scan(ctx);
    const long expected =
        st::oracle_scan(st::to_points(ctx.target()), st::to_points(ctx.closest()), st::to_points(ctx.farthest()));
    ASSERT_TRUE(rep.member_index);
    EXPECT_EQ(static_cast<long>(*rep.member_index), expected);
    EXPECT_EQ(rep.vector, ss::Vector(ctx.target().member(static_cast<std::size_t>(expected))));
    EXPECT_EQ(rep.method, ss::RepresentativeMethod::i2i_scan);
    EXPECT_EQ(rep.closest, inst.nb.closest);
    EXPECT_EQ(rep.farthest, inst.nb.farthest);
  }
}

TEST(CandidateScan, TiesGoToFirstMember) {
  // Members 0 and 2 are identical maximizers: J = 3*(6+10)/2 = 24 vs 12 at (0, 0).
  const auto xe = cluster_of("e", {{0, -1}, {0, 0}, {0, -1}});
  const auto xs = cluster_of("s", {{0, 5}});
  const auto xl = cluster_of("l", {{0, 9}});
  const auto rep = ss::i2i_candidate_scan(ss::I2IContext(xe, xs, xl));
  EXPECT_EQ(*rep.member_index, 0u);
  EXPECT_DOUBLE_EQ(*rep.objective, 24.0);
}

TEST(CandidateScan, SingletonAndAllSingular) {
  const auto single = cluster_of("e", {{1, 2}});
  const auto xs = cluster_of("s", {{0, 5}});
  const auto xl = cluster_of("l", {{0, 9}});
  const auto rep = ss::i2i_candidate_scan(ss::I2IContext(single, xs, xl));
  EXPECT_EQ(rep.vector, vec(1, 2));
  EXPECT_FALSE(rep.objective);

  const auto same = cluster_of("e", {{1, 2}, {1, 2}, {1, 2}});
  EXPECT_THROW(ss::i2i_candidate_scan(ss::I2IContext(same, xs, xl)), ss::SingularityError);
}

TEST(Refine, NeverWorseAndInsideBoundary) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_instance(rng, 2 + trial % 3);
    const auto ctx = inst.ctx();
    const auto& model = inst.cats.model(inst.target);
    const auto scan = ss::i2i_candidate_scan(ctx, model);
    const auto refined = ss::i2i_refine(scan, ctx, model);
    EXPECT_EQ(refined.method, ss::RepresentativeMethod::i2i_refined);
    EXPECT_GE(*refined.objective, *scan.objective - 1e-12);
    EXPECT_TRUE(ss::inside_boundary(refined.vector, model, 0.05));
    EXPECT_GE(refined.boundary_margin, -0.05 * model.boundary_radius());
    EXPECT_NEAR(*refined.objective, ss::i2i_objective(refined.vector, ctx), 1e-12);
  }
}

TEST(Refine, FixedPointAtInteriorMaximum) {
  // Refining an already-converged optimum again must not move it.
  std::mt19937_64 rng(7);
  const auto inst = random_instance(rng, 2);
  const auto ctx = inst.ctx();
  const auto& model = inst.cats.model(inst.target);
  auto once = ss::i2i_refine(ss::i2i_candidate_scan(ctx, model), ctx, model);
  ss::SolverConfig tight;
  tight.tol = 1e-10;
  once = ss::i2i_refine(once, ctx, model, tight);
  const auto twice = ss::i2i_refine(once, ctx, model, tight);
  EXPECT_NEAR(*twice.objective, *once.objective, 1e-9);
  EXPECT_LT((twice.vector - once.vector).norm(), 1e-6);
}

TEST(Refine, RejectsStartOutsideBoundary) {
  const auto xe = cluster_of("e", {{0, 0}, {1, 0}, {0, 1}});
  const auto xs = cluster_of("s", {{0, 5}});
  const auto xl = cluster_of("l", {{0, 9}});
  const ss::I2IContext ctx(xe, xs, xl);
  const auto model = ss::fit_model(xe);
  ss::Representative far;
  far.label = "e";
  far.vector = vec(50, 50);
  EXPECT_THROW(ss::i2i_refine(far, ctx, model), ss::Error);
}

TEST(Refine, SingletonTargetUnchanged) {
  const auto single = cluster_of("e", {{1, 2}});
  const auto xs = cluster_of("s", {{0, 5}});
  const auto xl = cluster_of("l", {{0, 9}});
  const ss::I2IContext ctx(single, xs, xl);
  const auto model = ss::fit_model(single);
  const auto rep = ss::i2i_refine(ss::i2i_candidate_scan(ctx, model), ctx, model);
  EXPECT_EQ(rep.vector, vec(1, 2));
}

TEST(I2IRepresentative, PipelineComposition) {
  const auto set = ss::generate_synthetic(ss::make_separated_spec(4, 6, 40, 7));
  const ss::SolverConfig cfg;
  const auto cats = ss::fit_categories(set, cfg.model_options());
  for (const auto& label : set.labels()) {
    const auto nb = ss::rank_neighbors(label, cats.models);
    const ss::I2IContext ctx(cats.clusters.at(label), cats.clusters.at(nb.closest), cats.clusters.at(nb.farthest));
    const auto& model = cats.model(label);
    const auto manual = ss::i2i_refine(ss::i2i_candidate_scan(ctx, model, true, cfg.slack), ctx, model, cfg);
    const auto piped = ss::i2i_representative(set, label, cfg);
    EXPECT_EQ(manual.vector, piped.vector);
    EXPECT_EQ(manual.objective, piped.objective);
    EXPECT_EQ(piped.method, ss::RepresentativeMethod::i2i_refined);
    EXPECT_FALSE(piped.degenerate);
  }
}

TEST(I2IRepresentative, RefinedDominatesScanOnSynthetic) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto set = ss::generate_synthetic(ss::make_separated_spec(4, 8, 60, seed));
    ss::SolverConfig scan_only;
    scan_only.refine = false;
    for (const auto& label : set.labels()) {
      const auto scan = ss::i2i_representative(set, label, scan_only);
      const auto refined = ss::i2i_representative(set, label);
      EXPECT_EQ(scan.method, ss::RepresentativeMethod::i2i_scan);
      EXPECT_GE(*refined.objective, *scan.objective - 1e-12);
    }
  }
}

TEST(I2IRepresentative, DegenerateTwoCategories) {
  const auto set = ss::generate_synthetic(ss::make_separated_spec(2, 3, 20, 1));
  const auto rep = ss::i2i_representative(set, "neutral");
  EXPECT_TRUE(rep.degenerate);
  EXPECT_EQ(rep.closest, "anger");
  EXPECT_EQ(rep.farthest, "anger");
  EXPECT_TRUE(rep.objective);

  const auto one = ss::generate_synthetic(ss::make_separated_spec(1, 3, 20, 1));
  EXPECT_THROW(ss::i2i_representative(one, "neutral"), ss::DataError);
  EXPECT_THROW(ss::i2i_representative(set, "missing"), ss::DataError);
}

TEST(I2IRepresentative, SplitModeAveragesTwoMaximizers) {
  const auto set = ss::generate_synthetic(ss::make_separated_spec(4, 3, 30, 4));
  ss::SolverConfig cfg;
  cfg.split_mode = true;
  cfg.refine = false;
  const auto rep = ss::i2i_representative(set, "anger", cfg);
  EXPECT_TRUE(rep.split_mode);
  const auto cats = ss::fit_categories(set, cfg.model_options());
  const auto nb = ss::rank_neighbors("anger", cats.models);
  const auto target = st::to_points(cats.clusters.at("anger"));
  const auto close = st::to_points(cats.clusters.at(nb.closest));
  const auto far = st::to_points(cats.clusters.at(nb.farthest));
  // Independent argmax of each single ratio.
  auto argmax = [&](const st::Points& other) {
    std::size_t best = 0;
    double bv = -1;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double v = st::oracle_mean_distance(target[i], other) / st::oracle_mean_distance(target[i], target);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    return best;
  };
  const auto& c = cats.clusters.at("anger");
  const ss::Vector expected = 0.5 * ss::Vector(c.member(argmax(far))) + 0.5 * ss::Vector(c.member(argmax(close)));
  EXPECT_LT((rep.vector - expected).norm(), 1e-15);
}

TEST(I2IRepresentative, TranslationEquivariant) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto set = st::random_set(rng, 3, 3 + trial % 3, 5, 25);
    ss::Vector t = ss::Vector::Random(3) * 50;
    const auto moved = st::translated(set, t);
    for (const auto& label : set.labels()) {
      const auto a = ss::i2i_representative(set, label);
      const auto b = ss::i2i_representative(moved, label);
      EXPECT_NEAR(*a.objective, *b.objective, 1e-9 * *a.objective);
      EXPECT_LT((a.vector + t - b.vector).norm(), 1e-6);
    }
  }
}

TEST(I2IRepresentative, Deterministic) {
  const auto set = ss::generate_synthetic(ss::make_separated_spec(4, 10, 50, 21));
  const auto a = ss::i2i_representative(set, "sadness");
  const auto b = ss::i2i_representative(set, "sadness");
  EXPECT_EQ(a.vector, b.vector);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Representative, JsonShape) {
  const auto set = ss::generate_synthetic(ss::make_separated_spec(3, 2, 10, 2));
  const auto rep = ss::i2i_representative(set, "anger");
  const auto j = nlohmann::json::parse(ss::to_json(rep).dump());
  for (const char* key : {"label", "method", "vector", "objective", "boundary_margin"}) EXPECT_TRUE(j.contains(key)) << key;
  const auto back = ss::representative_from_json(j);
  EXPECT_EQ(back.vector, rep.vector);
  EXPECT_EQ(back.method, rep.method);
  EXPECT_EQ(back.objective, rep.objective);

  const auto mean = ss::to_json(ss::mean_representative(ss::partition(set).at("anger")));
  EXPECT_TRUE(mean["objective"].is_null());
}

TEST(Parallelism, ThreadBudgetDoesNotChangeResults) {
  std::mt19937_64 rng(31);
  const auto set = ss::testing::random_set(rng, 6, 4, 80, 120);
  std::vector<std::string> dumps;
  for (const char* threads : {"1", "4", "0"}) {
    ::setenv("STYLE_SPACE_THREADS", threads, 1);
    EXPECT_GE(ss::detail::thread_budget(), 1u);
    std::string all;
    for (const auto& label : set.labels()) all += ss::to_json(ss::i2i_representative(set, label)).dump();
    dumps.push_back(all);
  }
  ::unsetenv("STYLE_SPACE_THREADS");
  EXPECT_EQ(dumps[0], dumps[1]);
  EXPECT_EQ(dumps[0], dumps[2]);

  ::setenv("STYLE_SPACE_THREADS", "3", 1);
  EXPECT_EQ(ss::detail::thread_budget(), 3u);
  ::unsetenv("STYLE_SPACE_THREADS");
}
