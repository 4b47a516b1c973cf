#include "errscope/significance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "errscope/hash.hpp"
#include "errscope/random.hpp"

namespace errscope {

namespace {

double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// 1-based nearest rank of quantile q among `count` sorted values.
std::size_t nearest_rank(double q, std::size_t count) {
  // The epsilon keeps exact products such as 0.025 * 1000 from rounding up.
  const double rank = std::ceil(q * static_cast<double>(count) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1, count);
}

}  // namespace

double binomial_p_value(std::size_t k, std::size_t n, double p0) {
  if (n == 0) throw std::invalid_argument("empty subpopulation");
  if (k > n) throw std::invalid_argument("error count exceeds support");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("baseline must be in (0, 1)");
  if (k == 0) return 1.0;

  const double log_p = std::log(p0);
  const double log_q = std::log1p(-p0);
  const auto log_term = [&](std::size_t i) {
    return log_choose(n, i) + static_cast<double>(i) * log_p + static_cast<double>(n - i) * log_q;
  };
  // Scaling by the mode term and summing from i = n downwards makes the
  // partial sums shared across k, so the result is exactly monotone in k.
  const auto mode = std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n + 1) * p0)));
  const double log_mode = log_term(mode);
  double sum = 0.0;
  for (std::size_t i = n + 1; i-- > k;) sum += std::exp(log_term(i) - log_mode);
  return std::min(1.0, std::exp(log_mode) * sum);
}

ConfidenceInterval bootstrap_ci(std::span<const std::uint8_t> flags, std::size_t resamples,
                                double alpha, std::uint64_t seed) {
  if (flags.empty()) throw std::invalid_argument("bootstrap of an empty sample");
  if (resamples == 0) throw std::invalid_argument("resample count must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");

  const std::size_t n = flags.size();
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& mean : means) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += flags[uniform_index(rng, n)];
    mean = static_cast<double>(hits) / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  return {means[nearest_rank(alpha / 2.0, resamples) - 1],
          means[nearest_rank(1.0 - alpha / 2.0, resamples) - 1]};
}

std::uint64_t subpopulation_seed(std::uint64_t seed, std::span<const std::size_t> members) {
  std::uint64_t h = fnv1a_u64(members.size());
  for (auto m : members) h = fnv1a_u64(m, h);
  return mix_seed(seed, h);
}

RuleMetrics evaluate_subpopulation(std::span<const std::size_t> members,
                                   std::span<const std::uint8_t> errors, double baseline,
                                   const SignificanceOptions& options) {
  RuleMetrics m;
  m.support_count = members.size();
  if (errors.empty()) throw std::invalid_argument("no test documents");
  m.support_fraction = static_cast<double>(members.size()) / static_cast<double>(errors.size());
  if (members.empty()) {
    m.p_value = 1.0;
    return m;
  }

  std::vector<std::uint8_t> flags;
  flags.reserve(members.size());
  for (auto d : members) flags.push_back(errors[d]);
  for (auto f : flags) m.error_count += f;
  m.error_rate = static_cast<double>(m.error_count) / static_cast<double>(m.support_count);

  if (baseline <= 0.0) {
    m.p_value = m.error_count == 0 ? 1.0 : 0.0;
  } else if (baseline >= 1.0) {
    m.p_value = 1.0;
  } else {
    m.p_value = binomial_p_value(m.error_count, m.support_count, baseline);
  }
  const auto ci = bootstrap_ci(flags, options.bootstrap_resamples, options.alpha,
                               subpopulation_seed(options.seed, members));
  m.ci_low = ci.low;
  m.ci_high = ci.high;
  return m;
}

}  // namespace errscope
