#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "heatpara/bony.hpp"

namespace heatpara {

// C(a1,a2,b) = Pi(P~_{a1} a2, b) - a1 Pi(a2, b)
Field corrector_C(const Field& a1, const Field& a2, const Field& b, const TimeGrid& grid, int order = 4);
// D(a1,a2,b) = Pi(P~_{a1} a2, b) - P_{a1} Pi(a2, b)
Field commutator_D(const Field& a1, const Field& a2, const Field& b, const TimeGrid& grid, int order = 4);
// S(a1,a2,b) = P_b P~_{a1} a2 - P_{a1} P_b a2
Field swap_S(const Field& a1, const Field& a2, const Field& b, const TimeGrid& grid, int order = 4);
// A(a,b,c) = <a, Pi(b,c)> - <P_a b, c>
double duality_A(const Field& a, const Field& b, const Field& c, const TimeGrid& grid, int order = 4);
// Same with the canonical pair Pi°, P°.
double duality_A_canonical(const Field& a, const Field& b, const Field& c, const TimeGrid& grid, int order = 4);

// Sobolev weight (1 + L)^{s/2}.
Field sobolev_weight(const Field& f, double s);
// "L2" -> 0, "H2" -> 2, "H-1.5" -> -1.5.
double parse_sobolev_index(const std::string& space);

struct LinearOp {
  std::function<Field(const Field&)> apply;
  std::function<Field(const Field&)> adjoint;
};

// Largest singular value of (1+L)^{t/2} T (1+L)^{-s/2} by power iteration.
struct PowerResult {
  double norm = 0.0;
  int iterations = 0;
  double last_change = 0.0;
};
PowerResult operator_norm(const LinearOp& op, const GeometryPtr& geo, double source_index, double target_index,
                          std::uint64_t seed, int max_iter = 40, double tol = 1e-4);

// Data shared by the registered operators: the fixed C^beta argument X and the grid.
struct ProbeContext {
  GeometryPtr geo;
  TimeGrid grid;
  int b = 4;
  Field X;
  std::uint64_t seed = 1;
  int max_iter = 40;
  double tol = 1e-4;
};

struct ProbeSpec {
  std::string id;
  std::string source;
  std::string target;
  std::string scale_name;
  std::function<LinearOp(const ProbeContext&, double scale)> make;
};

const std::vector<ProbeSpec>& probe_registry();
const ProbeSpec& find_probe(const std::string& id);
ScalingReport scaling_probe(const std::string& id, const ProbeContext& ctx, const std::vector<double>& scales);

}  // namespace heatpara
