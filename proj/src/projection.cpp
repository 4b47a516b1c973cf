#include "errscope/projection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "errscope/random.hpp"

namespace errscope {

namespace {

constexpr double kEntropyTolerance = 1e-7;  // bits
constexpr int kMaxBandwidthSteps = 200;
constexpr double kMinGain = 0.01;
constexpr double kInitialScale = 1e-4;

std::vector<double> squared_distances(const PointMatrix& points) {
  const std::size_t n = points.rows;
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < points.cols; ++k) {
        const double diff = points(i, k) - points(j, k);
        s += diff * diff;
      }
      d[i * n + j] = s;
      d[j * n + i] = s;
    }
  }
  return d;
}

// Fills row i of P_{j|i} for precision beta and returns its entropy in bits.
double affinity_row(std::span<const double> dist_row, std::size_t i, double beta, double min_dist,
                    std::span<double> p_row) {
  double sum = 0.0;
  for (std::size_t j = 0; j < dist_row.size(); ++j) {
    p_row[j] = j == i ? 0.0 : std::exp(-beta * (dist_row[j] - min_dist));
    sum += p_row[j];
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < dist_row.size(); ++j) {
    p_row[j] /= sum;
    if (p_row[j] > 0.0) entropy -= p_row[j] * std::log(p_row[j]);
  }
  return entropy / std::log(2.0);
}

double gaussian(Rng& rng) {
  // Box-Muller on the portable uniform source.
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

PcaResult pca_project(const PointMatrix& points) {
  if (points.rows < 3) throw std::invalid_argument("PCA needs at least 3 points");
  if (points.cols == 0) throw std::invalid_argument("PCA needs at least one dimension");
  const auto n = static_cast<Eigen::Index>(points.rows);
  const auto dim = static_cast<Eigen::Index>(points.cols);
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      x(i, j) = points(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

  PcaResult out;
  out.coordinates.assign(points.rows, Point2D{0.0, 0.0});
  // Eigenvalues come in ascending order.
  for (Eigen::Index axis = 0; axis < 2 && axis < dim; ++axis) {
    const Eigen::Index col = dim - 1 - axis;
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    if (v(largest) < 0.0) v = -v;
    const double lambda = std::max(0.0, solver.eigenvalues()(col));
    out.explained_variance[static_cast<std::size_t>(axis)] = lambda;
    if (lambda == 0.0) continue;  // zero-variance axis projects to 0
    const Eigen::VectorXd proj = x * v;
    for (Eigen::Index i = 0; i < n; ++i) {
      out.coordinates[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] = proj(i);
    }
  }
  return out;
}

std::string to_string(ProjectionMethod method) {
  switch (method) {
    case ProjectionMethod::kTsne: return "tsne";
    case ProjectionMethod::kPca: return "pca";
    case ProjectionMethod::kIngested: return "ingested";
  }
  return "ingested";
}

namespace tsne {

std::vector<double> conditional_affinities(const PointMatrix& points, double perplexity,
                                           std::vector<double>* entropies_bits) {
  const std::size_t n = points.rows;
  if (n < 2) throw std::invalid_argument("affinities need at least 2 points");
  if (!(perplexity > 0.0)) throw std::invalid_argument("perplexity must be positive");
  const auto dist = squared_distances(points);
  const double target = std::log2(perplexity);
  std::vector<double> p(n * n, 0.0);
  if (entropies_bits) entropies_bits->assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> row(dist.data() + i * n, n);
    const std::span<double> p_row(p.data() + i * n, n);
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) min_dist = std::min(min_dist, row[j]);
    }

    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double entropy = affinity_row(row, i, beta, min_dist, p_row);
    for (int step = 0; step < kMaxBandwidthSteps && std::fabs(entropy - target) > kEntropyTolerance;
         ++step) {
      if (entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
      entropy = affinity_row(row, i, beta, min_dist, p_row);
    }
    if (entropies_bits) (*entropies_bits)[i] = entropy;
  }
  return p;
}

std::vector<double> symmetrize(std::span<const double> conditional, std::size_t n) {
  std::vector<double> p(n * n, 0.0);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      p[i * n + j] = (conditional[i * n + j] + conditional[j * n + i]) * scale;
    }
  }
  return p;
}

double kl_divergence(std::span<const double> p, std::span<const Point2D> y) {
  const std::size_t n = y.size();
  double z = 0.0;
  std::vector<double> num(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy);
      num[i * n + j] = q;
      num[j * n + i] = q;
      z += 2.0 * q;
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p[i * n + j];
      if (i == j || pij <= 0.0) continue;
      kl += pij * std::log(pij / (num[i * n + j] / z));
    }
  }
  return kl;
}

std::vector<Point2D> kl_gradient(std::span<const double> p, std::span<const Point2D> y) {
  const std::size_t n = y.size();
  std::vector<double> num(n * n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy);
      num[i * n + j] = q;
      num[j * n + i] = q;
      z += 2.0 * q;
    }
  }
  std::vector<Point2D> grad(n, Point2D{0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double q = num[i * n + j];
      const double pij = p[i * n + j] + p[j * n + i];
      // Both (i, j) and (j, i) terms contribute to the symmetric force.
      const double mult = 2.0 * (pij - 2.0 * q / z) * q;
      const double fx = mult * (y[i][0] - y[j][0]);
      const double fy = mult * (y[i][1] - y[j][1]);
      grad[i][0] += fx;
      grad[i][1] += fy;
      grad[j][0] -= fx;
      grad[j][1] -= fy;
    }
  }
  return grad;
}

}  // namespace tsne

TsneResult tsne_project(const PointMatrix& points, const TsneOptions& options) {
  const std::size_t n = points.rows;
  if (n < 3) throw std::invalid_argument("t-SNE needs at least 3 points");
  TsneResult out;
  const double max_perplexity = static_cast<double>(n - 1) / 3.0;
  out.perplexity = std::max(1.0, std::min(options.perplexity, max_perplexity));

  const auto p = tsne::symmetrize(tsne::conditional_affinities(points, out.perplexity, &out.entropies_bits), n);

  std::vector<Point2D> y(n, Point2D{0.0, 0.0});
  bool need_random = options.init == TsneInit::kRandom;
  if (!need_random) {
    y = pca_project(points).coordinates;
    double mean = 0.0, var = 0.0;
    for (const auto& pt : y) mean += pt[0];
    mean /= static_cast<double>(n);
    for (const auto& pt : y) var += (pt[0] - mean) * (pt[0] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd > 0.0) {
      for (auto& pt : y) {
        pt[0] = pt[0] / sd * kInitialScale;
        pt[1] = pt[1] / sd * kInitialScale;
      }
    } else {
      need_random = true;
    }
  }
  if (need_random) {
    Rng rng(options.seed);
    for (auto& pt : y) pt = {gaussian(rng) * kInitialScale, gaussian(rng) * kInitialScale};
  }
  out.initial_kl = tsne::kl_divergence(p, y);

  std::vector<double> exaggerated(p);
  for (auto& v : exaggerated) v *= options.early_exaggeration;
  const std::vector<double>* current = options.exaggeration_iterations > 0 ? &exaggerated : &p;

  std::vector<Point2D> update(n, Point2D{0.0, 0.0});
  std::vector<Point2D> gains(n, Point2D{1.0, 1.0});
  double momentum = options.initial_momentum;
  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    const auto grad = tsne::kl_gradient(*current, y);
    Point2D mean{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < 2; ++k) {
        const bool same_sign = (grad[i][k] > 0.0) == (update[i][k] > 0.0);
        gains[i][k] = same_sign ? gains[i][k] * 0.8 : gains[i][k] + 0.2;
        gains[i][k] = std::max(gains[i][k], kMinGain);
        update[i][k] = momentum * update[i][k] - options.learning_rate * gains[i][k] * grad[i][k];
        y[i][k] += update[i][k];
        mean[k] += y[i][k];
      }
    }
    for (auto& pt : y) {
      pt[0] -= mean[0] / static_cast<double>(n);
      pt[1] -= mean[1] / static_cast<double>(n);
    }
    if (iter + 1 == options.exaggeration_iterations) current = &p;
    if (iter + 1 == options.momentum_switch_iteration) momentum = options.final_momentum;
  }

  for (const auto& pt : y) {
    if (!std::isfinite(pt[0]) || !std::isfinite(pt[1])) {
      throw std::runtime_error("t-SNE diverged to non-finite coordinates");
    }
  }
  out.final_kl = tsne::kl_divergence(p, y);
  out.coordinates = std::move(y);
  return out;
}

PointMatrix embeddings_matrix(const DatasetStore& store) {
  PointMatrix m;
  m.rows = store.test().size();
  m.cols = store.embedding_dim();
  m.values.reserve(m.rows * m.cols);
  for (const auto& rec : store.test()) {
    m.values.insert(m.values.end(), rec.embedding.begin(), rec.embedding.end());
  }
  return m;
}

Projection2D build_projection(const DatasetStore& store, const TsneOptions& options) {
  Projection2D out;
  if (store.has_ingested_projection()) {
    out.method = ProjectionMethod::kIngested;
    for (const auto& rec : store.test()) out.points.push_back(*rec.projection);
    return out;
  }
  if (!store.has_embeddings()) throw std::invalid_argument("store has no embeddings to project");
  auto result = tsne_project(embeddings_matrix(store), options);
  out.method = ProjectionMethod::kTsne;
  out.points = std::move(result.coordinates);
  out.initial_kl = result.initial_kl;
  out.final_kl = result.final_kl;
  return out;
}

std::vector<ProjectedPoint> filter_projection(const Projection2D& projection,
                                              std::span<const std::size_t> subpop,
                                              std::span<const std::uint8_t> errors) {
  std::vector<ProjectedPoint> out;
  out.reserve(subpop.size());
  for (auto d : subpop) {
    if (d >= projection.points.size()) throw std::out_of_range("document has no projected point");
    out.push_back({d, projection.points[d][0], projection.points[d][1], errors[d] != 0});
  }
  return out;
}

}  // namespace errscope
