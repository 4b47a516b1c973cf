#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errscope/ingest.hpp"

namespace errscope {

// Row-major n x d matrix of points.
struct PointMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

using Point2D = std::array<double, 2>;

struct PcaResult {
  std::vector<Point2D> coordinates;
  std::array<double, 2> explained_variance{};  // eigenvalues of the sample covariance
};

// Projects mean-centered data onto its top two principal axes. Each axis is
// oriented so that its largest-magnitude loading is positive. Throws
// std::invalid_argument for fewer than 3 points.
PcaResult pca_project(const PointMatrix& points);

enum class ProjectionMethod { kTsne, kPca, kIngested };

std::string to_string(ProjectionMethod method);

struct Projection2D {
  ProjectionMethod method = ProjectionMethod::kIngested;
  std::vector<Point2D> points;  // one per test record, in store order
  double initial_kl = 0.0;      // t-SNE only
  double final_kl = 0.0;        // t-SNE only
};

enum class TsneInit { kPca, kRandom };

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  TsneInit init = TsneInit::kPca;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  std::size_t momentum_switch_iteration = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
};

struct TsneResult {
  std::vector<Point2D> coordinates;
  double initial_kl = 0.0;
  double final_kl = 0.0;
  double perplexity = 0.0;             // after clamping
  std::vector<double> entropies_bits;  // H(P_i) reached by the bandwidth search
};

// Exact O(n^2) t-SNE into two dimensions.
TsneResult tsne_project(const PointMatrix& points, const TsneOptions& options = {});

namespace tsne {

// Conditional affinities P_{j|i} with per-point Gaussian bandwidths whose
// Shannon entropy (bits) matches log2(perplexity). Row-major n x n.
std::vector<double> conditional_affinities(const PointMatrix& points, double perplexity,
                                           std::vector<double>* entropies_bits = nullptr);

// (P_{j|i} + P_{i|j}) / 2n.
std::vector<double> symmetrize(std::span<const double> conditional, std::size_t n);

// KL(P || Q) for the Student-t kernel over 2-D coordinates.
double kl_divergence(std::span<const double> p, std::span<const Point2D> y);

// Analytic gradient of kl_divergence with respect to each coordinate.
std::vector<Point2D> kl_gradient(std::span<const double> p, std::span<const Point2D> y);

}  // namespace tsne

PointMatrix embeddings_matrix(const DatasetStore& store);

// Ingested coordinates when present, otherwise t-SNE over the embeddings.
// Throws std::invalid_argument when the store has neither.
Projection2D build_projection(const DatasetStore& store, const TsneOptions& options = {});

struct ProjectedPoint {
  std::size_t index = 0;  // test index
  double x = 0.0;
  double y = 0.0;
  bool error = false;
};

// The subpopulation's points with unchanged coordinates, tagged by
// correctness.
std::vector<ProjectedPoint> filter_projection(const Projection2D& projection,
                                              std::span<const std::size_t> subpop,
                                              std::span<const std::uint8_t> errors);

}  // namespace errscope
