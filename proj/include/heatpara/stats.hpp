#pragma once

#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace heatpara {

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);
double quantile(std::vector<double> v, double q);
double dkw_epsilon(std::size_t n, double confidence = 0.95);
// Empirical CDF of an ascending sample.
double ecdf(const std::vector<double>& sorted, double x);
// Quadratic coefficient of log P(X > x) fitted over the 19 ventiles, x standardized.
// Negative for a log-concave survival function.
double log_survival_curvature(const std::vector<double>& v);
std::pair<double, double> bootstrap_ci(const std::vector<double>& v,
                                       const std::function<double(const std::vector<double>&)>& stat,
                                       std::mt19937_64& gen, int resamples = 1000, double confidence = 0.95);

}  // namespace heatpara
