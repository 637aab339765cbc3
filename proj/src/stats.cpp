#include "heatpara/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "heatpara/errors.hpp"
#include "heatpara/report.hpp"

namespace heatpara {

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("least squares needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

ScalingReport fit_scaling(std::string op_id, std::string source, std::string target, std::vector<double> scales,
                          std::vector<double> norms) {
  if (scales.size() != norms.size() || scales.size() < 2) throw InvalidArgument("scaling fit needs two or more scales");
  std::vector<std::size_t> order(scales.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scales[a] > scales[b]; });
  ScalingReport r;
  r.op_id = std::move(op_id);
  r.source_space = std::move(source);
  r.target_space = std::move(target);
  std::vector<double> lx, ly;
  for (std::size_t i : order) {
    if (!r.scales.empty() && !(scales[i] < r.scales.back())) throw InvalidArgument("scales must be distinct");
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) throw InvalidArgument("norms must be positive and finite");
    r.scales.push_back(scales[i]);
    r.norms.push_back(norms[i]);
    lx.push_back(std::log(scales[i]));
    ly.push_back(std::log(norms[i]));
  }
  const LinearFit fit = least_squares(lx, ly);
  r.exponent = fit.slope;
  r.residual = fit.residual;
  return r;
}

json to_json(const ScalingReport& r) {
  return json{{"op", r.op_id},         {"source", r.source_space}, {"target", r.target_space},
              {"scales", r.scales},    {"norms", r.norms},         {"exponent", r.exponent},
              {"residual", r.residual}};
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) throw InvalidArgument("stddev needs two or more samples");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double fr = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - fr) + v[hi] * fr;
}

double log_survival_curvature(const std::vector<double>& v) {
  if (v.size() < 20) throw InvalidArgument("log_survival_curvature needs at least 20 samples");
  const double m = mean(v), sd = sample_stddev(v);
  if (!(sd > 0.0)) throw InvalidArgument("log_survival_curvature of a constant sample");
  Eigen::MatrixXd A(19, 3);
  Eigen::VectorXd b(19);
  for (int q = 1; q <= 19; ++q) {
    const double x = (quantile(v, q / 20.0) - m) / sd;
    A.row(q - 1) << 1.0, x, x * x;
    b(q - 1) = std::log(1.0 - q / 20.0);
  }
  return A.colPivHouseholderQr().solve(b)(2);
}

double dkw_epsilon(std::size_t n, double confidence) {
  return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(n)));
}

double ecdf(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& v,
                                       const std::function<double(const std::vector<double>&)>& stat,
                                       std::mt19937_64& gen, int resamples, double confidence) {
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> stats, sample(v.size());
  stats.reserve(resamples);
  for (int r = 0; r < resamples; ++r) {
    for (auto& s : sample) s = v[pick(gen)];
    stats.push_back(stat(sample));
  }
  const double a = 0.5 * (1.0 - confidence);
  return {quantile(stats, a), quantile(stats, 1.0 - a)};
}

}  // namespace heatpara
