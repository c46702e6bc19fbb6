#pragma once

// Scalar statistics shared across modules.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace envclass {

double mean(std::span<const double> xs);

// Sample (n - 1) standard deviation. 0 for fewer than 2 values.
double sample_sd(std::span<const double> xs);

// Linear interpolation between order statistics (h = (n - 1) p), i.e. the
// default quantile in R and NumPy. `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> xs, double p);

// Shannon entropy in nats of a histogram; empty bins contribute nothing.
// Returns 0 for an empty histogram.
double histogram_entropy(std::span<const std::size_t> counts);

// Two-sided standard normal tail probability, P(|Z| > |z|).
inline double two_sided_normal_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

}  // namespace envclass
