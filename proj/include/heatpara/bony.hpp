#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "heatpara/calderon.hpp"
#include "heatpara/geometry.hpp"
#include "heatpara/report.hpp"

namespace heatpara {

// (tL)^lap P_t^(prop); prop = 0 means no propagator.
struct SlotWord {
  int lap = 0;
  int prop = 0;
  auto operator<=>(const SlotWord&) const = default;
};

enum Slot : int { OuterSlot = 0, FSlot = 1, GSlot = 2 };

// One signed operator word per slot. Derivatives sqrt(t) d_i always come in
// index-contracted pairs shared between two different slots:
// pairs[0] = (outer, f), pairs[1] = (outer, g), pairs[2] = (f, g).
// A pair contributes -t v.w to the multiplier, v, w the slot frequencies.
struct TermTriple {
  long coeff = 0;
  std::array<SlotWord, 3> words{};
  std::array<int, 3> pairs{};

  int derivatives(int slot) const;
  int order(int slot) const { return 2 * words[slot].lap + derivatives(slot); }
  std::array<int, 3> signature() const { return {order(0), order(1), order(2)}; }
  bool same_word(const TermTriple& o) const { return words == o.words && pairs == o.pairs; }
  // Semigroup multipliers of an outer derivative need a cosine projection on
  // the Dirichlet square, which the geometry does not provide.
  bool dirichlet_compatible() const { return pairs[0] == 0 && pairs[1] == 0; }
};

enum class TermClass { ParaFG, ParaGF, Resonant };
TermClass classify(const TermTriple& term, int b);

struct BonyDecomposition {
  int b = 0;
  double scale = 1.0;  // every coefficient carries 1/(b-1)!
  std::size_t unmerged_count = 0;
  std::vector<TermTriple> para_fg;
  std::vector<TermTriple> para_gf;
  std::vector<TermTriple> resonant;

  std::vector<TermTriple> all() const;
};

// Leaves of the drain started at one slot, before merging.
std::vector<TermTriple> drain_from(int b, int start_slot);
BonyDecomposition redistribute(int b);
// Cached per b; thread-safe.
const BonyDecomposition& decomposition(int b);

// Scalar multiplier of a term at input frequencies k (f) and l (g), scale included.
double term_multiplier(const TermTriple& term, double scale, double t, std::array<double, 2> k,
                       std::array<double, 2> l);
// -t d/dt [P_t(P_t f . P_t g)] as a multiplier.
double undistributed_multiplier(int b, double t, std::array<double, 2> k, std::array<double, 2> l);
double remainder_multiplier(int b, std::array<double, 2> k, std::array<double, 2> l);

json to_json(const TermTriple& term);
json to_json(const BonyDecomposition& d);

// The (0,b,b)-type leading terms compared with the single triple
// (P^(b), Q^(b/2), Q^(b/2)) of unit coefficient.
struct LeadingTripleReport {
  std::array<int, 3> signature{};
  std::vector<TermTriple> engine_terms;
  bool matches_unit_claim = false;
};
std::vector<LeadingTripleReport> leading_triples(int b);

// Quadrature of sum_terms scale * coeff * w_t * T_t over the grid.
// out_slot = 0: x is the f input, y the g input, the result is the outer output.
// out_slot = 1: x is the outer test field, y the g input; the result is the
// field u with <u, f> = <x, T(f, y)>. out_slot = 2 likewise in g, y the f input.
Field evaluate_terms(const std::vector<TermTriple>& terms, double scale, const Field& x, const Field& y,
                     const TimeGrid& grid, const std::vector<double>& weights, int out_slot = 0);

Field para(const Field& f, const Field& g, const TimeGrid& grid, int b = 4);
Field resonant(const Field& f, const Field& g, const TimeGrid& grid, int b = 4);
Field remainder(const Field& f, const Field& g, int b = 4);
// Integral restricted to t <= s (or t > s with complement).
Field para_truncated(const Field& f, const Field& g, const TimeGrid& grid, double s, int b = 4,
                     bool complement = false);
Field intertwined_para(const Field& f, const Field& g, const TimeGrid& grid, int b = 4);
Field intertwined_para_truncated(const Field& f, const Field& g, const TimeGrid& grid, double s, int b = 4,
                                 bool complement = false);
// Per-t formula with Q~^1 = l(L)/t Q^1 and Q~^3 = tL Q^3.
Field intertwined_para_explicit(const Field& f, const Field& g, const TimeGrid& grid, int b = 4);

// Adjoints in the f argument: <para_adjoint(v, g), u> = <v, P_u g>.
Field para_adjoint(const Field& v, const Field& g, const TimeGrid& grid, const std::vector<double>& weights,
                   int b = 4);
Field intertwined_para_adjoint(const Field& v, const Field& g, const TimeGrid& grid,
                               const std::vector<double>& weights, int b = 4);

// Canonical pair: Pi°(b,c) = int P_t(Q_t b . Q_t c), P°_a b = int Q_t(P_t a . Q_t b)
// with P = P^(b), Q = Q^(b/2).
Field canonical_resonant(const Field& f, const Field& g, const TimeGrid& grid, int b = 4);
Field canonical_para(const Field& f, const Field& g, const TimeGrid& grid, int b = 4);

}  // namespace heatpara
