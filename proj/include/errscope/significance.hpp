#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "errscope/rule.hpp"

namespace errscope {

// One-sided exact binomial tail P[X >= k], X ~ Bin(n, p0), summed in log
// space. H0: the subpopulation error rate equals the baseline; H1: it is
// higher. Throws std::invalid_argument("empty subpopulation") for n == 0 and
// for k > n or p0 outside (0, 1).
double binomial_p_value(std::size_t k, std::size_t n, double p0);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

inline constexpr std::size_t kDefaultBootstrapResamples = 1000;
inline constexpr double kDefaultAlpha = 0.05;

// Percentile bootstrap of the mean of `flags`: B resamples of size n with
// replacement; the bounds are the nearest-rank alpha/2 and 1 - alpha/2
// quantiles of the resampled means.
ConfidenceInterval bootstrap_ci(std::span<const std::uint8_t> flags,
                                std::size_t resamples = kDefaultBootstrapResamples,
                                double alpha = kDefaultAlpha, std::uint64_t seed = 0);

struct SignificanceOptions {
  std::size_t bootstrap_resamples = kDefaultBootstrapResamples;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 0;
};

// Bootstrap seed for a subpopulation. Derived from the member set so that
// equal subpopulations get equal intervals regardless of how they were
// described.
std::uint64_t subpopulation_seed(std::uint64_t seed, std::span<const std::size_t> members);

// Support, error rate, p-value against `baseline` and bootstrap interval for
// the test documents in `members` (sorted indices). An empty member list
// yields support 0 and undefined metrics.
RuleMetrics evaluate_subpopulation(std::span<const std::size_t> members,
                                   std::span<const std::uint8_t> errors, double baseline,
                                   const SignificanceOptions& options);

}  // namespace errscope
