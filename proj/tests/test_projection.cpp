#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "errscope/projection.hpp"
#include "errscope/random.hpp"
#include "support/corpus.hpp"

using namespace errscope;
using namespace errscope::testing;

namespace {

PointMatrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  PointMatrix m{n, dim, std::vector<double>(n * dim)};
  for (auto& v : m.values) v = uniform_unit(rng) * 2.0 - 1.0;
  return m;
}

std::vector<double> normalized_affinities(const PointMatrix& x, double perplexity) {
  return tsne::symmetrize(tsne::conditional_affinities(x, perplexity), x.rows);
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("PCA agrees with an SVD of the centered data") {
  const auto x = random_points(40, 5, 3);
  const auto pca = pca_project(x);
  Eigen::MatrixXd m(40, 5);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 5; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j);
  }
  m.rowwise() -= m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  for (Eigen::Index axis = 0; axis < 2; ++axis) {
    Eigen::VectorXd v = svd.matrixV().col(axis);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    const Eigen::VectorXd proj = m * v;
    const double sigma = svd.singularValues()(axis);
    CHECK(pca.explained_variance[static_cast<std::size_t>(axis)] == doctest::Approx(sigma * sigma / 39.0).epsilon(1e-10));
    for (Eigen::Index i = 0; i < 40; ++i) {
      CHECK(pca.coordinates[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] ==
            doctest::Approx(proj(i)).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(pca_project(random_points(2, 3, 1)), std::invalid_argument);
}

TEST_CASE("bandwidth search reaches the target perplexity") {
  const auto x = random_points(60, 4, 5);
  std::vector<double> entropies;
  const auto cond = tsne::conditional_affinities(x, 10.0, &entropies);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(entropies[i] == doctest::Approx(std::log2(10.0)).epsilon(1e-6));
    double row = 0.0;
    for (std::size_t j = 0; j < 60; ++j) row += cond[i * 60 + j];
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cond[i * 60 + i] == 0.0);
  }
  const auto p = tsne::symmetrize(cond, 60);
  double total = 0.0;
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 60; ++j) {
      CHECK(p[i * 60 + j] == p[j * 60 + i]);
      total += p[i * 60 + j];
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central differences") {
  const auto x = random_points(10, 4, 7);
  const auto p = normalized_affinities(x, 3.0);
  Rng rng(8);
  std::vector<Point2D> y(10);
  for (auto& pt : y) pt = {uniform_unit(rng) - 0.5, uniform_unit(rng) - 0.5};
  const auto grad = tsne::kl_gradient(p, y);
  const double h = 1e-5;
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto plus = y, minus = y;
      plus[i][k] += h;
      minus[i][k] -= h;
      const double fd = (tsne::kl_divergence(p, plus) - tsne::kl_divergence(p, minus)) / (2.0 * h);
      diff2 += (fd - grad[i][k]) * (fd - grad[i][k]);
      norm2 += grad[i][k] * grad[i][k];
    }
  }
  CHECK(std::sqrt(diff2 / norm2) < 1e-5);
}

TEST_CASE("t-SNE lowers KL, stays finite and is reproducible") {
  const auto x = random_points(120, 6, 9);
  TsneOptions options;
  options.seed = 4;
  const auto a = tsne_project(x, options);
  CHECK(a.final_kl < a.initial_kl);
  for (const auto& pt : a.coordinates) {
    CHECK(std::isfinite(pt[0]));
    CHECK(std::isfinite(pt[1]));
  }
  const auto b = tsne_project(x, options);
  CHECK(a.coordinates == b.coordinates);
  options.init = TsneInit::kRandom;
  const auto r1 = tsne_project(x, options);
  const auto r2 = tsne_project(x, options);
  CHECK(r1.coordinates == r2.coordinates);
  CHECK(r1.final_kl < r1.initial_kl);
}

TEST_CASE("perplexity is clamped for small inputs") {
  const auto x = random_points(10, 3, 1);
  TsneOptions options;
  options.iterations = 50;
  const auto r = tsne_project(x, options);
  CHECK(r.perplexity == 3.0);
  CHECK_THROWS_AS(tsne_project(random_points(2, 3, 1)), std::invalid_argument);
}

TEST_CASE("store projections and filtering") {
  RandomCorpusSpec spec;
  spec.n_test = 40;
  spec.embedding_dim = 4;
  spec.seed = 3;
  const auto store = DatasetStore::build(random_corpus(spec));
  TsneOptions options;
  options.iterations = 100;
  const auto proj = build_projection(store, options);
  CHECK(proj.method == ProjectionMethod::kTsne);
  REQUIRE(proj.points.size() == 40);
  const std::vector<std::size_t> subset = {1, 5, 7};
  const auto pts = filter_projection(proj, subset, store.error_labels());
  REQUIRE(pts.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pts[i].index == subset[i]);
    CHECK(pts[i].x == proj.points[subset[i]][0]);
    CHECK(pts[i].y == proj.points[subset[i]][1]);
    CHECK(pts[i].error == (store.error_labels()[subset[i]] != 0));
  }

  auto recs = random_corpus(spec);
  for (auto& r : recs) {
    r.embedding.clear();
    r.projection = std::array<double, 2>{1.0, 2.0};
  }
  const auto ingested = build_projection(DatasetStore::build(recs));
  CHECK(ingested.method == ProjectionMethod::kIngested);
  CHECK(ingested.points[0] == Point2D{1.0, 2.0});

  for (auto& r : recs) r.projection.reset();
  CHECK_THROWS_AS(build_projection(DatasetStore::build(recs)), std::invalid_argument);
}

}
