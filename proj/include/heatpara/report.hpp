#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace heatpara {

using json = nlohmann::json;

// Least-squares slope of log(norm) against log(scale).
struct ScalingReport {
  std::string op_id;
  std::string source_space;
  std::string target_space;
  std::vector<double> scales;
  std::vector<double> norms;
  double exponent = 0.0;
  double residual = 0.0;
};

ScalingReport fit_scaling(std::string op_id, std::string source, std::string target, std::vector<double> scales,
                          std::vector<double> norms);
json to_json(const ScalingReport& r);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace heatpara
