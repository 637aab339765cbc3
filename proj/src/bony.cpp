#include "heatpara/bony.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace heatpara {

namespace {

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// Leibniz sign for moving one sqrt(t) d_i from slot `from` to slot `to`.
int move_sign(int from, int to) { return (from != OuterSlot && to != OuterSlot) ? -1 : 1; }

int pair_index(int a, int b) {
  if (a > b) std::swap(a, b);
  if (a == OuterSlot) return b == FSlot ? 0 : 1;
  return 2;
}

struct DrainState {
  TermTriple term;
  int open = -1;  // other end of the pair whose end still sits in the drained slot
};

void drain(DrainState st, int slot, int remaining, std::vector<TermTriple>& out) {
  if (remaining == 0) {
    out.push_back(st.term);
    return;
  }
  if (st.open < 0) {
    // split one tL = -sum_i (sqrt(t) d_i)^2 and move one of its ends
    DrainState base = st;
    base.term.words[slot].lap -= 1;
    base.term.coeff = -base.term.coeff;
    for (int to = 0; to < 3; ++to) {
      if (to == slot) continue;
      DrainState nx = base;
      nx.term.coeff *= move_sign(slot, to);
      nx.open = to;
      drain(nx, slot, remaining - 1, out);
    }
    return;
  }
  for (int to = 0; to < 3; ++to) {
    if (to == slot) continue;
    DrainState nx = st;
    nx.term.coeff *= move_sign(slot, to);
    if (to == st.open) {
      // both ends in one slot: sum_i (sqrt(t) d_i)^2 = -tL
      nx.term.words[to].lap += 1;
      nx.term.coeff = -nx.term.coeff;
    } else {
      nx.term.pairs[pair_index(st.open, to)] += 1;
    }
    nx.open = -1;
    drain(nx, slot, remaining - 1, out);
  }
}

void merge_into(std::vector<TermTriple>& list, const TermTriple& t) {
  for (auto& e : list) {
    if (e.same_word(t)) {
      e.coeff += t.coeff;
      return;
    }
  }
  list.push_back(t);
}

double slot_factor(const SlotWord& w, double tau) {
  double v = w.lap == 0 ? 1.0 : std::pow(tau, w.lap);
  if (w.prop > 0) v *= propagator_multiplier(1.0, tau, w.prop);
  return v;
}

double dot(std::array<double, 2> a, std::array<double, 2> b) { return a[0] * b[0] + a[1] * b[1]; }

}  // namespace

int TermTriple::derivatives(int slot) const {
  switch (slot) {
    case OuterSlot:
      return pairs[0] + pairs[1];
    case FSlot:
      return pairs[0] + pairs[2];
    default:
      return pairs[1] + pairs[2];
  }
}

TermClass classify(const TermTriple& term, int b) {
  const auto s = term.signature();
  if (2 * s[1] < b) return TermClass::ParaFG;
  if (2 * s[2] < b) return TermClass::ParaGF;
  return TermClass::Resonant;
}

std::vector<TermTriple> BonyDecomposition::all() const {
  std::vector<TermTriple> v = para_fg;
  v.insert(v.end(), para_gf.begin(), para_gf.end());
  v.insert(v.end(), resonant.begin(), resonant.end());
  return v;
}

std::vector<TermTriple> drain_from(int b, int start_slot) {
  if (b < 2 || b > 8 || b % 2 != 0) throw InvalidArgument("b must be even with 2 <= b <= 8");
  if (start_slot < 0 || start_slot > 2) throw InvalidArgument("slot must be 0, 1 or 2");
  DrainState st;
  st.term.coeff = 1;
  for (int s = 0; s < 3; ++s) st.term.words[s] = s == start_slot ? SlotWord{b, 1} : SlotWord{0, b};
  std::vector<TermTriple> out;
  drain(st, start_slot, b, out);
  return out;
}

BonyDecomposition redistribute(int b) {
  BonyDecomposition d;
  d.b = b;
  d.scale = 1.0 / factorial(b - 1);
  std::vector<TermTriple> merged;
  for (int s = 0; s < 3; ++s) {
    for (const auto& t : drain_from(b, s)) {
      ++d.unmerged_count;
      merge_into(merged, t);
    }
  }
  for (const auto& t : merged) {
    if (t.coeff == 0) continue;
    switch (classify(t, b)) {
      case TermClass::ParaFG:
        d.para_fg.push_back(t);
        break;
      case TermClass::ParaGF:
        d.para_gf.push_back(t);
        break;
      case TermClass::Resonant:
        d.resonant.push_back(t);
        break;
    }
  }
  return d;
}

const BonyDecomposition& decomposition(int b) {
  static std::mutex mu;
  static std::map<int, BonyDecomposition> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(b);
  if (it == cache.end()) it = cache.emplace(b, redistribute(b)).first;
  return it->second;
}

double term_multiplier(const TermTriple& term, double scale, double t, std::array<double, 2> k,
                       std::array<double, 2> l) {
  const std::array<double, 2> m{k[0] + l[0], k[1] + l[1]};
  double v = scale * static_cast<double>(term.coeff);
  v *= slot_factor(term.words[0], t * dot(m, m));
  v *= slot_factor(term.words[1], t * dot(k, k));
  v *= slot_factor(term.words[2], t * dot(l, l));
  v *= std::pow(-t * dot(m, k), term.pairs[0]);
  v *= std::pow(-t * dot(m, l), term.pairs[1]);
  v *= std::pow(-t * dot(k, l), term.pairs[2]);
  return v;
}

double undistributed_multiplier(int b, double t, std::array<double, 2> k, std::array<double, 2> l) {
  const std::array<double, 2> m{k[0] + l[0], k[1] + l[1]};
  const double lm = dot(m, m), lk = dot(k, k), ll = dot(l, l);
  auto P = [&](double lam) { return propagator_multiplier(t, lam, b); };
  auto Q = [&](double lam) { return localizer_multiplier(t, lam, b); };
  return Q(lm) * P(lk) * P(ll) + P(lm) * Q(lk) * P(ll) + P(lm) * P(lk) * Q(ll);
}

double remainder_multiplier(int b, std::array<double, 2> k, std::array<double, 2> l) {
  const std::array<double, 2> m{k[0] + l[0], k[1] + l[1]};
  return propagator_multiplier(1.0, dot(m, m), b) * propagator_multiplier(1.0, dot(k, k), b) *
         propagator_multiplier(1.0, dot(l, l), b);
}

json to_json(const TermTriple& term) {
  // derivative indices are labelled so that contracted pairs share a label
  std::array<json, 3> der{json::array(), json::array(), json::array()};
  int label = 0;
  const int ends[3][2] = {{OuterSlot, FSlot}, {OuterSlot, GSlot}, {FSlot, GSlot}};
  for (int p = 0; p < 3; ++p) {
    for (int r = 0; r < term.pairs[p]; ++r) {
      const std::string name = "i" + std::to_string(++label);
      der[ends[p][0]].push_back(name);
      der[ends[p][1]].push_back(name);
    }
  }
  auto word = [&](int s) {
    return json{{"deriv", der[s]}, {"lap_power", term.words[s].lap}, {"prop", term.words[s].prop}};
  };
  const auto sig = term.signature();
  return json{{"coeff", term.coeff},
              {"outer", word(0)},
              {"fop", word(1)},
              {"gop", word(2)},
              {"signature", {sig[0], sig[1], sig[2]}},
              {"dirichlet_compatible", term.dirichlet_compatible()}};
}

json to_json(const BonyDecomposition& d) {
  auto list = [](const std::vector<TermTriple>& v) {
    json a = json::array();
    for (const auto& t : v) a.push_back(to_json(t));
    return a;
  };
  return json{{"b", d.b},
              {"coefficient_scale", "1/(b-1)!"},
              {"unmerged_count", d.unmerged_count},
              {"para_fg", list(d.para_fg)},
              {"para_gf", list(d.para_gf)},
              {"resonant", list(d.resonant)},
              {"remainder", "P_1(P_1 f . P_1 g)"}};
}

std::vector<LeadingTripleReport> leading_triples(int b) {
  const auto& d = decomposition(b);
  const int h = b / 2;
  const std::array<std::array<int, 3>, 3> sigs = {{{0, b, b}, {b, 0, b}, {b, b, 0}}};
  std::vector<LeadingTripleReport> out;
  for (int which = 0; which < 3; ++which) {
    LeadingTripleReport r;
    r.signature = sigs[which];
    for (const auto& t : d.all())
      if (t.signature() == r.signature) r.engine_terms.push_back(t);
    // claimed: slot `which` is P^(b), the other two are Q^(b/2) = (tL)^{b/2} P^(1) / (b/2-1)!
    TermTriple claim;
    for (int s = 0; s < 3; ++s) claim.words[s] = s == which ? SlotWord{0, b} : SlotWord{h, 1};
    const double claim_scale = 1.0 / (factorial(h - 1) * factorial(h - 1));
    r.matches_unit_claim = r.engine_terms.size() == 1 && r.engine_terms[0].same_word(claim) &&
                           std::abs(static_cast<double>(r.engine_terms[0].coeff) * d.scale - claim_scale) < 1e-14;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// numeric evaluation

namespace {

using SpecKey = std::array<int, 4>;  // lap, prop, d0, d1

struct Atom {
  double weight;  // coeff times axis multiplicity
  std::array<SpecKey, 3> spec;
};

std::vector<Atom> atoms_of(const TermTriple& term) {
  std::map<std::array<SpecKey, 3>, double> acc;
  const int n0 = term.pairs[0], n1 = term.pairs[1], n2 = term.pairs[2];
  for (int j0 = 0; j0 <= n0; ++j0)
    for (int j1 = 0; j1 <= n1; ++j1)
      for (int j2 = 0; j2 <= n2; ++j2) {
        const double mult = binomial(n0, j0) * binomial(n1, j1) * binomial(n2, j2);
        std::array<SpecKey, 3> spec;
        spec[0] = {term.words[0].lap, term.words[0].prop, (n0 - j0) + (n1 - j1), j0 + j1};
        spec[1] = {term.words[1].lap, term.words[1].prop, (n0 - j0) + (n2 - j2), j0 + j2};
        spec[2] = {term.words[2].lap, term.words[2].prop, (n1 - j1) + (n2 - j2), j1 + j2};
        acc[spec] += mult * static_cast<double>(term.coeff);
      }
  std::vector<Atom> out;
  for (const auto& [spec, w] : acc) out.push_back({w, spec});
  return out;
}

// Per-t mode tables so that spec multipliers avoid transcendental calls.
class ScaleTable {
 public:
  ScaleTable(const Geometry& geo, double t) : geo_(geo), t_(t) {
    const auto& act = geo.active_indices();
    tau_.resize(act.size());
    ex_.resize(act.size());
    k0_.resize(act.size());
    k1_.resize(act.size());
    const double st = std::sqrt(t);
    for (std::size_t r = 0; r < act.size(); ++r) {
      tau_[r] = t * geo.lambda(act[r]);
      ex_[r] = std::exp(-tau_[r]);
      k0_[r] = st * geo.wave(act[r], 0);
      k1_[r] = st * geo.wave(act[r], 1);
    }
  }

  // multiplier of `key` on active mode r
  cplx value(const SpecKey& key, std::size_t r, bool adjoint) const {
    const double tau = tau_[r];
    double v = 1.0;
    for (int p = 0; p < key[0]; ++p) v *= tau;
    if (key[1] > 0) {
      double term = 1.0, s = 0.0;
      for (int j = 0; j < key[1]; ++j) {
        s += term;
        term *= tau / (j + 1);
      }
      v *= s * ex_[r];
    }
    for (int p = 0; p < key[2]; ++p) v *= k0_[r];
    for (int p = 0; p < key[3]; ++p) v *= k1_[r];
    // i^d, conjugated for adjoints
    const int d = ((key[2] + key[3]) * (adjoint ? 3 : 1)) % 4;
    switch (d) {
      case 0:
        return {v, 0.0};
      case 1:
        return {0.0, v};
      case 2:
        return {-v, 0.0};
      default:
        return {0.0, -v};
    }
  }

  void apply(const SpecKey& key, bool adjoint, const std::vector<cplx>& in, cplx factor,
             std::vector<cplx>& out) const {
    const auto& act = geo_.active_indices();
    for (std::size_t r = 0; r < act.size(); ++r) out[act[r]] += factor * in[act[r]] * value(key, r, adjoint);
  }

  double t() const { return t_; }

 private:
  const Geometry& geo_;
  double t_;
  std::vector<double> tau_, ex_, k0_, k1_;
};

bool is_real_field(const Field& f) {
  const Geometry& geo = f.geo();
  const auto& c = f.coeffs();
  double scale = 0.0, dev = 0.0;
  for (std::size_t idx : geo.active_indices()) {
    const long m = geo.index_of(-geo.wave(idx, 0), -geo.wave(idx, 1));
    scale = std::max(scale, std::abs(c[idx]));
    dev = std::max(dev, std::abs(c[idx] - std::conj(c[m])));
  }
  return dev <= 1e-13 * scale;
}

template <class K>
std::size_t slot_of(std::vector<K>& keys, const K& key) {
  auto it = std::find(keys.begin(), keys.end(), key);
  if (it != keys.end()) return static_cast<std::size_t>(it - keys.begin());
  keys.push_back(key);
  return keys.size() - 1;
}

}  // namespace

Field evaluate_terms(const std::vector<TermTriple>& terms, double scale, const Field& x, const Field& y,
                     const TimeGrid& grid, const std::vector<double>& weights, int out_slot) {
  require_same_geometry(x, y);
  const Geometry& geo = x.geo();
  if (!geo.is_torus()) throw GeometryLimitation("bony evaluation is implemented on the torus only");
  if (weights.size() != grid.size()) throw InvalidArgument("weights do not match the time grid");
  if (out_slot < 0 || out_slot > 2) throw InvalidArgument("slot must be 0, 1 or 2");

  // input slots feed the product; the output slot receives it
  const int in_a = out_slot == OuterSlot ? FSlot : OuterSlot;
  const int in_b = out_slot == GSlot ? FSlot : GSlot;
  const bool adjoint = out_slot != OuterSlot;
  // in the adjoint form the outer word acts on the test field through its adjoint
  const bool adj_a = adjoint && in_a == OuterSlot;

  // index atoms by their input and output specs once
  std::vector<SpecKey> keys_a, keys_b, keys_o;
  struct Use {
    std::size_t a, b, o;
    double w;
  };
  std::vector<Use> uses;
  for (const auto& t : terms)
    for (const auto& atom : atoms_of(t))
      uses.push_back({slot_of(keys_a, atom.spec[in_a]), slot_of(keys_b, atom.spec[in_b]),
                      slot_of(keys_o, atom.spec[out_slot]), atom.weight});

  // real inputs allow two fields per transform (a + i b)
  const bool real = is_real_field(x) && is_real_field(y);
  const std::size_t fs = geo.fine_size(), sz = geo.size();
  const auto& act = geo.active_indices();
  std::vector<long> neg(sz, -1);
  for (std::size_t idx : act) neg[idx] = geo.index_of(-geo.wave(idx, 0), -geo.wave(idx, 1));

  std::vector<cplx> result(sz, cplx(0.0));
  std::vector<cplx> tmp(sz), coeffs(sz), work(fs);
  std::vector<std::vector<double>> ra(keys_a.size()), rb(keys_b.size()), ro(keys_o.size());
  std::vector<std::vector<cplx>> ca, cb, co;
  if (!real) {
    ca.resize(keys_a.size());
    cb.resize(keys_b.size());
    co.resize(keys_o.size());
  }

  auto fill_real = [&](const ScaleTable& tab, const std::vector<SpecKey>& keys, const Field& src, bool adj,
                       std::vector<std::vector<double>>& out) {
    for (std::size_t q = 0; q < keys.size(); q += 2) {
      std::fill(tmp.begin(), tmp.end(), cplx(0.0));
      tab.apply(keys[q], adj, src.coeffs(), 1.0, tmp);
      const bool two = q + 1 < keys.size();
      if (two) tab.apply(keys[q + 1], adj, src.coeffs(), cplx(0.0, 1.0), tmp);
      geo.to_fine(tmp.data(), geo.default_basis(), work.data());
      out[q].resize(fs);
      for (std::size_t i = 0; i < fs; ++i) out[q][i] = work[i].real();
      if (two) {
        out[q + 1].resize(fs);
        for (std::size_t i = 0; i < fs; ++i) out[q + 1][i] = work[i].imag();
      }
    }
  };
  auto fill_complex = [&](const ScaleTable& tab, const std::vector<SpecKey>& keys, const Field& src, bool adj,
                          std::vector<std::vector<cplx>>& out) {
    for (std::size_t q = 0; q < keys.size(); ++q) {
      std::fill(tmp.begin(), tmp.end(), cplx(0.0));
      tab.apply(keys[q], adj, src.coeffs(), 1.0, tmp);
      out[q].resize(fs);
      geo.to_fine(tmp.data(), geo.default_basis(), out[q].data());
    }
  };

  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double w = weights[j];
    if (w == 0.0) continue;
    const ScaleTable tab(geo, grid.t[j]);
    const cplx factor = w * scale;
    if (real) {
      fill_real(tab, keys_a, x, adj_a, ra);
      fill_real(tab, keys_b, y, false, rb);
      for (auto& v : ro) v.assign(fs, 0.0);
      for (const auto& u : uses) {
        const double* pa = ra[u.a].data();
        const double* pb = rb[u.b].data();
        double* po = ro[u.o].data();
        const double c = u.w;
        for (std::size_t i = 0; i < fs; ++i) po[i] += c * pa[i] * pb[i];
      }
      for (std::size_t q = 0; q < keys_o.size(); q += 2) {
        const bool two = q + 1 < keys_o.size();
        for (std::size_t i = 0; i < fs; ++i) work[i] = cplx(ro[q][i], two ? ro[q + 1][i] : 0.0);
        geo.from_fine(work.data(), coeffs.data());
        // split Z = A + iB with A, B Hermitian
        for (std::size_t idx : act) {
          const cplx z = coeffs[idx], zm = std::conj(coeffs[neg[idx]]);
          tmp[idx] = 0.5 * (z + zm);
        }
        tab.apply(keys_o[q], adjoint, tmp, factor, result);
        if (two) {
          for (std::size_t idx : act) {
            const cplx z = coeffs[idx], zm = std::conj(coeffs[neg[idx]]);
            tmp[idx] = cplx(0.0, -0.5) * (z - zm);
          }
          tab.apply(keys_o[q + 1], adjoint, tmp, factor, result);
        }
      }
    } else {
      fill_complex(tab, keys_a, x, adj_a, ca);
      fill_complex(tab, keys_b, y, false, cb);
      for (auto& v : co) v.assign(fs, cplx(0.0));
      for (const auto& u : uses) {
        const cplx* pa = ca[u.a].data();
        const cplx* pb = cb[u.b].data();
        cplx* po = co[u.o].data();
        const double c = u.w;
        for (std::size_t i = 0; i < fs; ++i) po[i] += c * pa[i] * pb[i];
      }
      for (std::size_t q = 0; q < keys_o.size(); ++q) {
        geo.from_fine(co[q].data(), coeffs.data());
        tab.apply(keys_o[q], adjoint, coeffs, factor, result);
      }
    }
  }
  return Field::from_coeffs(x.geometry(), std::move(result));
}

Field para(const Field& f, const Field& g, const TimeGrid& grid, int b) {
  const auto& d = decomposition(b);
  return evaluate_terms(d.para_fg, d.scale, f, g, grid, grid.w);
}

Field resonant(const Field& f, const Field& g, const TimeGrid& grid, int b) {
  const auto& d = decomposition(b);
  return evaluate_terms(d.resonant, d.scale, f, g, grid, grid.w);
}

Field remainder(const Field& f, const Field& g, int b) {
  return propagator(multiply(propagator(f, 1.0, b), propagator(g, 1.0, b)), 1.0, b);
}

namespace {

void check_scale(const TimeGrid& grid, double s) {
  if (!(s > grid.t_min && s <= grid.t_max)) throw InvalidArgument("truncation scale s must lie in (t_min, 1]");
}

Field apply_L(const Field& f) {
  return apply_multiplier(f, [](double l) { return l; });
}

}  // namespace

Field para_truncated(const Field& f, const Field& g, const TimeGrid& grid, double s, int b, bool complement) {
  check_scale(grid, s);
  const auto& d = decomposition(b);
  return evaluate_terms(d.para_fg, d.scale, f, g, grid, grid.truncated_weights(s, complement));
}

Field intertwined_para(const Field& f, const Field& g, const TimeGrid& grid, int b) {
  return inverse_L(para(f, apply_L(g), grid, b));
}

Field intertwined_para_truncated(const Field& f, const Field& g, const TimeGrid& grid, double s, int b,
                                 bool complement) {
  return inverse_L(para_truncated(f, apply_L(g), grid, s, b, complement));
}

Field intertwined_para_explicit(const Field& f, const Field& g, const TimeGrid& grid, int b) {
  // Q~^3 = tL Q^3 shifts the g word by one Laplacian power; Q~^1 = l(L)/t Q^1
  // moves the 1/t into the weights.
  const auto& d = decomposition(b);
  std::vector<TermTriple> shifted = d.para_fg;
  for (auto& t : shifted) t.words[GSlot].lap += 1;
  std::vector<double> w(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) w[j] = grid.w[j] / grid.t[j];
  return inverse_L(evaluate_terms(shifted, d.scale, f, g, grid, w));
}

Field para_adjoint(const Field& v, const Field& g, const TimeGrid& grid, const std::vector<double>& weights, int b) {
  const auto& d = decomposition(b);
  return evaluate_terms(d.para_fg, d.scale, v, g, grid, weights, FSlot);
}

Field intertwined_para_adjoint(const Field& v, const Field& g, const TimeGrid& grid,
                               const std::vector<double>& weights, int b) {
  return para_adjoint(inverse_L(v), apply_L(g), grid, weights, b);
}

namespace {

std::vector<TermTriple> canonical_term(int b, int p_slot) {
  TermTriple t;
  t.coeff = 1;
  for (int s = 0; s < 3; ++s) t.words[s] = s == p_slot ? SlotWord{0, b} : SlotWord{b / 2, 1};
  return {t};
}

double canonical_scale(int b) {
  const double f = factorial(b / 2 - 1);
  return 1.0 / (f * f);
}

}  // namespace

Field canonical_resonant(const Field& f, const Field& g, const TimeGrid& grid, int b) {
  if (b < 2 || b % 2 != 0) throw InvalidArgument("b must be even");
  return evaluate_terms(canonical_term(b, OuterSlot), canonical_scale(b), f, g, grid, grid.w);
}

Field canonical_para(const Field& f, const Field& g, const TimeGrid& grid, int b) {
  if (b < 2 || b % 2 != 0) throw InvalidArgument("b must be even");
  return evaluate_terms(canonical_term(b, FSlot), canonical_scale(b), f, g, grid, grid.w);
}

}  // namespace heatpara
