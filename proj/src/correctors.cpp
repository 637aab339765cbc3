#include "heatpara/correctors.hpp"

#include <cmath>
#include <random>

#include "heatpara/rng.hpp"

namespace heatpara {

Field corrector_C(const Field& a1, const Field& a2, const Field& b, const TimeGrid& grid, int order) {
  return resonant(intertwined_para(a1, a2, grid, order), b, grid, order) -
         multiply(a1, resonant(a2, b, grid, order));
}

Field commutator_D(const Field& a1, const Field& a2, const Field& b, const TimeGrid& grid, int order) {
  return resonant(intertwined_para(a1, a2, grid, order), b, grid, order) -
         para(a1, resonant(a2, b, grid, order), grid, order);
}

Field swap_S(const Field& a1, const Field& a2, const Field& b, const TimeGrid& grid, int order) {
  return para(b, intertwined_para(a1, a2, grid, order), grid, order) -
         para(a1, para(b, a2, grid, order), grid, order);
}

double duality_A(const Field& a, const Field& b, const Field& c, const TimeGrid& grid, int order) {
  return inner_product(a, resonant(b, c, grid, order)) - inner_product(para(a, b, grid, order), c);
}

double duality_A_canonical(const Field& a, const Field& b, const Field& c, const TimeGrid& grid, int order) {
  return inner_product(a, canonical_resonant(b, c, grid, order)) -
         inner_product(canonical_para(a, b, grid, order), c);
}

Field sobolev_weight(const Field& f, double s) {
  if (s == 0.0) return f;
  return apply_multiplier(f, [s](double l) { return std::pow(1.0 + l, 0.5 * s); });
}

double parse_sobolev_index(const std::string& space) {
  if (space == "L2") return 0.0;
  if (space.size() >= 2 && space[0] == 'H') {
    try {
      std::size_t used = 0;
      const double v = std::stod(space.substr(1), &used);
      if (used == space.size() - 1) return v;
    } catch (const std::exception&) {
    }
  }
  throw InvalidArgument("unknown Sobolev space '" + space + "'");
}

PowerResult operator_norm(const LinearOp& op, const GeometryPtr& geo, double source_index, double target_index,
                          std::uint64_t seed, int max_iter, double tol) {
  auto fwd = [&](const Field& v) { return sobolev_weight(op.apply(sobolev_weight(v, -source_index)), target_index); };
  auto bwd = [&](const Field& w) { return sobolev_weight(op.adjoint(sobolev_weight(w, target_index)), -source_index); };
  auto gen = make_stream(seed, Stream::PowerIteration);
  std::normal_distribution<double> nd;
  Eigen::VectorXd r(geo->real_dim());
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = nd(gen);
  Field v = geo->from_real(r);
  v *= 1.0 / v.norm();
  PowerResult res;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Field w = bwd(fwd(v));
    const double n2 = inner_product(v, w);
    const double nw = w.norm();
    res.iterations = it;
    res.norm = std::sqrt(std::max(n2, 0.0));
    if (nw == 0.0) {
      res.norm = 0.0;
      res.last_change = 0.0;
      return res;
    }
    res.last_change = prev > 0.0 ? std::abs(res.norm - prev) / res.norm : 1.0;
    if (it > 2 && res.last_change < tol) return res;
    prev = res.norm;
    v = w * (1.0 / nw);
  }
  return res;
}

namespace {

LinearOp truncated_intertwined(const ProbeContext& ctx, double s, bool complement) {
  const auto w = ctx.grid.truncated_weights(s, complement);
  LinearOp op;
  op.apply = [&ctx, s, complement](const Field& u) {
    return intertwined_para_truncated(u, ctx.X, ctx.grid, s, ctx.b, complement);
  };
  op.adjoint = [&ctx, w](const Field& v) { return intertwined_para_adjoint(v, ctx.X, ctx.grid, w, ctx.b); };
  return op;
}

LinearOp truncated_para(const ProbeContext& ctx, double s) {
  const auto w = ctx.grid.truncated_weights(s);
  LinearOp op;
  op.apply = [&ctx, s](const Field& u) { return para_truncated(u, ctx.X, ctx.grid, s, ctx.b); };
  op.adjoint = [&ctx, w](const Field& v) { return para_adjoint(v, ctx.X, ctx.grid, w, ctx.b); };
  return op;
}

std::vector<ProbeSpec> build_registry() {
  std::vector<ProbeSpec> r;
  r.push_back({"identity", "L2", "L2", "s", [](const ProbeContext&, double) {
                 return LinearOp{[](const Field& u) { return u; }, [](const Field& v) { return v; }};
               }});
  r.push_back({"ptilde_truncated", "L2", "L2", "s",
               [](const ProbeContext& c, double s) { return truncated_intertwined(c, s, false); }});
  r.push_back({"ptilde_complement", "L2", "H2", "s",
               [](const ProbeContext& c, double s) { return truncated_intertwined(c, s, true); }});
  r.push_back({"para_truncated", "L2", "L2", "s", [](const ProbeContext& c, double s) { return truncated_para(c, s); }});
  return r;
}

}  // namespace

const std::vector<ProbeSpec>& probe_registry() {
  static const std::vector<ProbeSpec> reg = build_registry();
  return reg;
}

const ProbeSpec& find_probe(const std::string& id) {
  for (const auto& p : probe_registry())
    if (p.id == id) return p;
  throw InvalidArgument("operator '" + id + "' is not registered");
}

ScalingReport scaling_probe(const std::string& id, const ProbeContext& ctx, const std::vector<double>& scales) {
  const ProbeSpec& spec = find_probe(id);
  const double src = parse_sobolev_index(spec.source), tgt = parse_sobolev_index(spec.target);
  std::vector<double> norms;
  for (double s : scales) {
    const LinearOp op = spec.make(ctx, s);
    norms.push_back(operator_norm(op, ctx.geo, src, tgt, ctx.seed, ctx.max_iter, ctx.tol).norm);
  }
  return fit_scaling(id, spec.source, spec.target, scales, norms);
}

}  // namespace heatpara
