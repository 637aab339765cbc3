#include "heatpara/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "heatpara/rng.hpp"

namespace heatpara {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

struct Geometry::Plans {
  fftw_plan coarse_fwd = nullptr, coarse_bwd = nullptr, fine_fwd = nullptr, fine_bwd = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (fftw_plan p : {coarse_fwd, coarse_bwd, fine_fwd, fine_bwd})
      if (p) fftw_destroy_plan(p);
  }
};

std::string to_string(GeometryKind kind) {
  return kind == GeometryKind::Torus ? "torus" : "dirichlet-square";
}

GeometryKind parse_geometry_kind(std::string_view name) {
  if (name == "torus") return GeometryKind::Torus;
  if (name == "dirichlet-square" || name == "square") return GeometryKind::DirichletSquare;
  throw InvalidArgument("unsupported geometry kind: " + std::string(name));
}

GeometryPtr Geometry::make(GeometryKind kind, int n) {
  if (kind != GeometryKind::Torus && kind != GeometryKind::DirichletSquare)
    throw InvalidArgument("unsupported geometry kind");
  if (n < 8) throw InvalidArgument("N must be at least 8");
  if (n > 1024) throw InvalidArgument("N above 1024 is not supported");
  if (kind == GeometryKind::Torus && !is_power_of_two(n))
    throw InvalidArgument("torus N must be a power of two");
  return GeometryPtr(new Geometry(kind, n));
}

Geometry::Geometry(GeometryKind kind, int n) : kind_(kind), n_(n), plans_(std::make_unique<Plans>()) {
  const std::size_t sz = size();
  lambda_.assign(sz, 0.0);
  wave_.assign(2 * sz, 0);
  is_active_.assign(sz, 0);
  if (kind_ == GeometryKind::Torus) {
    side_ = 2.0 * kPi;
    fine_n_ = 3 * n_ / 2;  // 3/2 rule: exact for quadratic products
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
        const int k0 = i < n_ / 2 ? i : i - n_;
        const int k1 = j < n_ / 2 ? j : j - n_;
        wave_[2 * idx] = k0;
        wave_[2 * idx + 1] = k1;
        lambda_[idx] = static_cast<double>(k0 * k0 + k1 * k1);
        if (i != n_ / 2 && j != n_ / 2) {
          is_active_[idx] = 1;
          active_.push_back(idx);
        }
      }
    }
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<cplx> buf(fine_size());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->coarse_fwd = fftw_plan_dft_2d(n_, n_, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_FORWARD, flags);
    plans_->coarse_bwd = fftw_plan_dft_2d(n_, n_, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_BACKWARD, flags);
    plans_->fine_fwd =
        fftw_plan_dft_2d(fine_n_, fine_n_, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_FORWARD, flags);
    plans_->fine_bwd =
        fftw_plan_dft_2d(fine_n_, fine_n_, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_BACKWARD, flags);
  } else {
    side_ = kPi;
    fine_n_ = 2 * n_ + 1;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
        wave_[2 * idx] = i + 1;
        wave_[2 * idx + 1] = j + 1;
        lambda_[idx] = static_cast<double>((i + 1) * (i + 1) + (j + 1) * (j + 1));
        is_active_[idx] = 1;
        active_.push_back(idx);
      }
    }
    const double norm = std::sqrt(2.0 / kPi);
    auto build = [&](int points, bool cosine) {
      Eigen::MatrixXd m(points, n_);
      for (int p = 0; p < points; ++p) {
        const double x = (p + 1) * kPi / (points + 1);
        for (int q = 0; q < n_; ++q) m(p, q) = norm * (cosine ? std::cos((q + 1) * x) : std::sin((q + 1) * x));
      }
      return m;
    };
    sin_coarse_ = build(n_, false);
    cos_coarse_ = build(n_, true);
    sin_fine_ = build(fine_n_, false);
    cos_fine_ = build(fine_n_, true);
    analyze_coarse_ = (kPi / (n_ + 1)) * sin_coarse_.transpose();
    analyze_fine_ = (kPi / (fine_n_ + 1)) * sin_fine_.transpose();
  }
  for (std::size_t idx : active_) lambda_max_ = std::max(lambda_max_, lambda_[idx]);

  for (std::size_t idx : active_) {
    if (kind_ == GeometryKind::DirichletSquare) {
      real_slot_.push_back(idx);
      real_type_.push_back(0);
      continue;
    }
    const int k0 = wave_[2 * idx], k1 = wave_[2 * idx + 1];
    if (k0 == 0 && k1 == 0) {
      real_slot_.push_back(idx);
      real_type_.push_back(0);
    } else if (k0 > 0 || (k0 == 0 && k1 > 0)) {
      real_slot_.push_back(idx);
      real_type_.push_back(1);
      real_slot_.push_back(idx);
      real_type_.push_back(2);
    }
  }
}

Geometry::~Geometry() = default;

BasisPair Geometry::default_basis() const {
  return is_torus() ? BasisPair{AxisBasis::Fourier, AxisBasis::Fourier} : BasisPair{AxisBasis::Sine, AxisBasis::Sine};
}

long Geometry::index_of(int k0, int k1) const {
  if (is_torus()) {
    const int h = n_ / 2;
    if (k0 <= -h || k0 >= h || k1 <= -h || k1 >= h) return -1;
    const int i = k0 < 0 ? k0 + n_ : k0;
    const int j = k1 < 0 ? k1 + n_ : k1;
    return static_cast<long>(i) * n_ + j;
  }
  if (k0 < 1 || k0 > n_ || k1 < 1 || k1 > n_) return -1;
  return static_cast<long>(k0 - 1) * n_ + (k1 - 1);
}

double Geometry::lambda_min_positive() const {
  double m = lambda_max_;
  for (std::size_t idx : active_)
    if (lambda_[idx] > 0.0) m = std::min(m, lambda_[idx]);
  return m;
}

std::vector<double> Geometry::eigenvalue_table() const {
  std::vector<double> t;
  t.reserve(active_.size());
  for (std::size_t idx : active_) t.push_back(lambda_[idx]);
  std::sort(t.begin(), t.end());
  return t;
}

std::vector<double> Geometry::pack_raw(const Field& f) const {
  if (!f.is_default_basis()) throw InvalidArgument("pack_raw requires a default-basis field");
  std::vector<double> v(real_dim());
  for (std::size_t r = 0; r < real_slot_.size(); ++r) {
    const cplx z = f.coeffs()[real_slot_[r]];
    v[r] = real_type_[r] == 2 ? z.imag() : z.real();
  }
  return v;
}

Field Geometry::unpack_raw(const std::vector<double>& v) const {
  if (v.size() != real_dim()) throw InvalidArgument("raw vector has wrong length");
  std::vector<cplx> c(size(), 0.0);
  for (std::size_t r = 0; r < real_slot_.size(); ++r) {
    const std::size_t idx = real_slot_[r];
    if (real_type_[r] == 2)
      c[idx].imag(v[r]);
    else
      c[idx].real(v[r]);
  }
  if (is_torus()) {
    for (std::size_t r = 0; r < real_slot_.size(); ++r) {
      if (real_type_[r] != 1) continue;
      const std::size_t idx = real_slot_[r];
      c[static_cast<std::size_t>(index_of(-wave_[2 * idx], -wave_[2 * idx + 1]))] = std::conj(c[idx]);
    }
  }
  return Field::from_coeffs(shared_from_this(), std::move(c));
}

double Geometry::grid_point(int j) const {
  if (is_torus()) return 2.0 * kPi * j / n_;
  return (j + 1) * kPi / (n_ + 1);
}

Eigen::VectorXd Geometry::to_real(const Field& f) const {
  if (!f.is_default_basis()) throw InvalidArgument("to_real requires a default-basis field");
  Eigen::VectorXd v(real_dim());
  const auto& c = f.coeffs();
  for (std::size_t r = 0; r < real_slot_.size(); ++r) {
    const cplx z = c[real_slot_[r]];
    switch (real_type_[r]) {
      case 0: v[r] = z.real(); break;
      case 1: v[r] = std::sqrt(2.0) * z.real(); break;
      default: v[r] = -std::sqrt(2.0) * z.imag(); break;
    }
  }
  return v;
}

Field Geometry::from_real(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != real_dim()) throw InvalidArgument("real vector has wrong length");
  std::vector<cplx> c(size(), 0.0);
  for (std::size_t r = 0; r < real_slot_.size(); ++r) {
    const std::size_t idx = real_slot_[r];
    switch (real_type_[r]) {
      case 0: c[idx] = v[r]; break;
      case 1: c[idx] += v[r] / std::sqrt(2.0); break;
      default: c[idx] += cplx(0.0, -v[r] / std::sqrt(2.0)); break;
    }
  }
  if (is_torus()) {
    for (std::size_t r = 0; r < real_slot_.size(); ++r) {
      if (real_type_[r] != 1) continue;
      const std::size_t idx = real_slot_[r];
      const long m = index_of(-wave_[2 * idx], -wave_[2 * idx + 1]);
      c[static_cast<std::size_t>(m)] = std::conj(c[idx]);
    }
  }
  return Field::from_coeffs(shared_from_this(), std::move(c));
}

void Geometry::synthesize(const cplx* coeffs, BasisPair basis, cplx* grid) const {
  const std::size_t sz = size();
  if (is_torus()) {
    const double s = 1.0 / (2.0 * kPi);
    for (std::size_t i = 0; i < sz; ++i) grid[i] = coeffs[i] * s;
    fftw_execute_dft(plans_->coarse_bwd, as_fftw(grid), as_fftw(grid));
    return;
  }
  const Eigen::MatrixXd& a0 = basis[0] == AxisBasis::Cosine ? cos_coarse_ : sin_coarse_;
  const Eigen::MatrixXd& a1 = basis[1] == AxisBasis::Cosine ? cos_coarse_ : sin_coarse_;
  RowMat re(n_, n_), im(n_, n_);
  for (std::size_t i = 0; i < sz; ++i) {
    re.data()[i] = coeffs[i].real();
    im.data()[i] = coeffs[i].imag();
  }
  RowMat vr = a0 * re * a1.transpose();
  RowMat vi = a0 * im * a1.transpose();
  for (std::size_t i = 0; i < sz; ++i) grid[i] = cplx(vr.data()[i], vi.data()[i]);
}

void Geometry::analyze(const cplx* grid, cplx* coeffs) const {
  const std::size_t sz = size();
  if (is_torus()) {
    for (std::size_t i = 0; i < sz; ++i) coeffs[i] = grid[i];
    fftw_execute_dft(plans_->coarse_fwd, as_fftw(coeffs), as_fftw(coeffs));
    const double s = 2.0 * kPi / static_cast<double>(sz);
    for (std::size_t i = 0; i < sz; ++i) coeffs[i] = is_active_[i] ? coeffs[i] * s : cplx(0.0);
    return;
  }
  RowMat re(n_, n_), im(n_, n_);
  for (std::size_t i = 0; i < sz; ++i) {
    re.data()[i] = grid[i].real();
    im.data()[i] = grid[i].imag();
  }
  RowMat cr = analyze_coarse_ * re * analyze_coarse_.transpose();
  RowMat ci = analyze_coarse_ * im * analyze_coarse_.transpose();
  for (std::size_t i = 0; i < sz; ++i) coeffs[i] = cplx(cr.data()[i], ci.data()[i]);
}

void Geometry::to_fine(const cplx* coeffs, BasisPair basis, cplx* work) const {
  if (is_torus()) {
    const std::size_t fs = fine_size();
    std::fill(work, work + fs, cplx(0.0));
    const double s = 1.0 / (2.0 * kPi);
    for (std::size_t idx : active_) {
      const int k0 = wave_[2 * idx], k1 = wave_[2 * idx + 1];
      const int i = k0 < 0 ? k0 + fine_n_ : k0;
      const int j = k1 < 0 ? k1 + fine_n_ : k1;
      work[static_cast<std::size_t>(i) * fine_n_ + j] = coeffs[idx] * s;
    }
    fftw_execute_dft(plans_->fine_bwd, as_fftw(work), as_fftw(work));
    return;
  }
  const Eigen::MatrixXd& a0 = basis[0] == AxisBasis::Cosine ? cos_fine_ : sin_fine_;
  const Eigen::MatrixXd& a1 = basis[1] == AxisBasis::Cosine ? cos_fine_ : sin_fine_;
  RowMat re(n_, n_), im(n_, n_);
  const std::size_t sz = size();
  bool has_imag = false;
  for (std::size_t i = 0; i < sz; ++i) {
    re.data()[i] = coeffs[i].real();
    im.data()[i] = coeffs[i].imag();
    has_imag = has_imag || coeffs[i].imag() != 0.0;
  }
  RowMat vr = a0 * re * a1.transpose();
  const std::size_t fs = fine_size();
  if (has_imag) {
    RowMat vi = a0 * im * a1.transpose();
    for (std::size_t i = 0; i < fs; ++i) work[i] = cplx(vr.data()[i], vi.data()[i]);
  } else {
    for (std::size_t i = 0; i < fs; ++i) work[i] = cplx(vr.data()[i], 0.0);
  }
}

void Geometry::from_fine(cplx* work, cplx* coeffs) const {
  const std::size_t sz = size();
  if (is_torus()) {
    fftw_execute_dft(plans_->fine_fwd, as_fftw(work), as_fftw(work));
    const double s = 2.0 * kPi / static_cast<double>(fine_size());
    for (std::size_t i = 0; i < sz; ++i) coeffs[i] = 0.0;
    for (std::size_t idx : active_) {
      const int k0 = wave_[2 * idx], k1 = wave_[2 * idx + 1];
      const int i = k0 < 0 ? k0 + fine_n_ : k0;
      const int j = k1 < 0 ? k1 + fine_n_ : k1;
      coeffs[idx] = work[static_cast<std::size_t>(i) * fine_n_ + j] * s;
    }
    return;
  }
  const std::size_t fs = fine_size();
  RowMat re(fine_n_, fine_n_), im(fine_n_, fine_n_);
  bool has_imag = false;
  for (std::size_t i = 0; i < fs; ++i) {
    re.data()[i] = work[i].real();
    im.data()[i] = work[i].imag();
    has_imag = has_imag || work[i].imag() != 0.0;
  }
  RowMat cr = analyze_fine_ * re * analyze_fine_.transpose();
  if (has_imag) {
    RowMat ci = analyze_fine_ * im * analyze_fine_.transpose();
    for (std::size_t i = 0; i < sz; ++i) coeffs[i] = cplx(cr.data()[i], ci.data()[i]);
  } else {
    for (std::size_t i = 0; i < sz; ++i) coeffs[i] = cplx(cr.data()[i], 0.0);
  }
}

// ---------------------------------------------------------------------------

Field::Field(GeometryPtr geo) : geo_(std::move(geo)) {
  if (!geo_) throw InvalidArgument("null geometry");
  c_.assign(geo_->size(), 0.0);
  basis_ = geo_->default_basis();
}

Field Field::from_coeffs(GeometryPtr geo, std::vector<cplx> coeffs) {
  const BasisPair b = geo->default_basis();
  return from_coeffs(std::move(geo), std::move(coeffs), b);
}

Field Field::from_coeffs(GeometryPtr geo, std::vector<cplx> coeffs, BasisPair basis) {
  if (!geo) throw InvalidArgument("null geometry");
  if (coeffs.size() != geo->size()) throw InvalidArgument("coefficient array has wrong length");
  if (geo->is_torus()) {
    if (basis[0] != AxisBasis::Fourier || basis[1] != AxisBasis::Fourier)
      throw InvalidArgument("torus fields use the Fourier basis");
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      if (!geo->active(i)) coeffs[i] = 0.0;
  } else if (basis[0] == AxisBasis::Fourier || basis[1] == AxisBasis::Fourier) {
    throw InvalidArgument("square fields use sine/cosine bases");
  }
  Field f;
  f.geo_ = std::move(geo);
  f.c_ = std::move(coeffs);
  f.basis_ = basis;
  return f;
}

Field Field::from_values(GeometryPtr geo, const std::vector<double>& values) {
  std::vector<cplx> v(values.begin(), values.end());
  return from_complex_values(std::move(geo), v);
}

Field Field::from_complex_values(GeometryPtr geo, const std::vector<cplx>& values) {
  if (!geo) throw InvalidArgument("null geometry");
  if (values.size() != geo->size()) throw InvalidArgument("grid has wrong size");
  std::vector<cplx> c(geo->size());
  geo->analyze(values.data(), c.data());
  return from_coeffs(std::move(geo), std::move(c));
}

Field Field::constant(GeometryPtr geo, double value) {
  if (!geo->is_torus()) throw GeometryLimitation("constants are not in the Dirichlet sine space");
  Field f(geo);
  f.c_[0] = value * 2.0 * kPi;
  return f;
}

Field Field::mode(GeometryPtr geo, int k0, int k1, cplx amplitude) {
  const long idx = geo->index_of(k0, k1);
  if (idx < 0 || !geo->active(static_cast<std::size_t>(idx))) throw InvalidArgument("mode not represented");
  Field f(geo);
  f.c_[static_cast<std::size_t>(idx)] = amplitude;
  return f;
}

bool Field::is_default_basis() const { return geo_ && basis_ == geo_->default_basis(); }

std::vector<cplx> Field::complex_values() const {
  std::vector<cplx> g(geo_->size());
  geo_->synthesize(c_.data(), basis_, g.data());
  return g;
}

std::vector<double> Field::values() const {
  const auto g = complex_values();
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = g[i].real();
  return v;
}

double Field::evaluate(double x, double y) const {
  const Geometry& g = *geo_;
  double acc = 0.0;
  if (g.is_torus()) {
    for (std::size_t idx : g.active_indices()) {
      if (c_[idx] == cplx(0.0)) continue;
      const double ph = g.wave(idx, 0) * x + g.wave(idx, 1) * y;
      acc += (c_[idx] * cplx(std::cos(ph), std::sin(ph))).real();
    }
    return acc / (2.0 * kPi);
  }
  const double norm = 2.0 / kPi;
  for (std::size_t idx : g.active_indices()) {
    if (c_[idx] == cplx(0.0)) continue;
    const int n = g.wave(idx, 0), m = g.wave(idx, 1);
    const double fx = basis_[0] == AxisBasis::Cosine ? std::cos(n * x) : std::sin(n * x);
    const double fy = basis_[1] == AxisBasis::Cosine ? std::cos(m * y) : std::sin(m * y);
    acc += c_[idx].real() * fx * fy;
  }
  return acc * norm;
}

double Field::norm() const {
  double s = 0.0;
  for (const cplx& z : c_) s += std::norm(z);
  return std::sqrt(s);
}

double Field::mean() const {
  if (!geo_->is_torus()) {
    double acc = 0.0;
    for (std::size_t idx : geo_->active_indices()) {
      const int n = geo_->wave(idx, 0), m = geo_->wave(idx, 1);
      auto avg = [](AxisBasis b, int k) { return b == AxisBasis::Cosine ? 0.0 : (k % 2 == 1 ? 2.0 / k : 0.0); };
      acc += c_[idx].real() * (2.0 / kPi) * avg(basis_[0], n) * avg(basis_[1], m);
    }
    return acc / (kPi * kPi);
  }
  return c_[0].real() / (2.0 * kPi);
}

double Field::max_abs_coeff() const {
  double m = 0.0;
  for (const cplx& z : c_) m = std::max(m, std::abs(z));
  return m;
}

void Field::check_same(const Field& o) const {
  if (geo_.get() != o.geo_.get()) throw GeometryMismatch();
  if (basis_ != o.basis_) throw InvalidArgument("fields are expanded in different bases");
}

Field& Field::operator+=(const Field& o) {
  check_same(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_same(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (cplx& z : c_) z *= s;
  return *this;
}

Field& Field::axpy(double a, const Field& x) {
  check_same(x);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += a * x.c_[i];
  return *this;
}

// ---------------------------------------------------------------------------

void require_same_geometry(const Field& a, const Field& b) {
  if (a.geometry().get() != b.geometry().get()) throw GeometryMismatch();
}

cplx inner_product_complex(const Field& f, const Field& g) {
  require_same_geometry(f, g);
  if (f.basis() != g.basis()) throw InvalidArgument("inner product of fields in different bases");
  cplx s = 0.0;
  const auto& a = f.coeffs();
  const auto& b = g.coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double inner_product(const Field& f, const Field& g) { return inner_product_complex(f, g).real(); }

Field multiply(const Field& f, const Field& g) {
  require_same_geometry(f, g);
  const Geometry& geo = f.geo();
  std::vector<cplx> wf(geo.fine_size()), wg(geo.fine_size());
  geo.to_fine(f.coeffs().data(), f.basis(), wf.data());
  geo.to_fine(g.coeffs().data(), g.basis(), wg.data());
  for (std::size_t i = 0; i < wf.size(); ++i) wf[i] *= wg[i];
  std::vector<cplx> c(geo.size());
  geo.from_fine(wf.data(), c.data());
  return Field::from_coeffs(f.geometry(), std::move(c));
}

Field apply_multiplier(const Field& f, const std::function<double(double)>& phi) {
  if (!f.is_default_basis())
    throw InvalidArgument("semigroup multipliers apply only to pure-sine fields on the square");
  const Geometry& geo = f.geo();
  Field out = f;
  auto& c = out.coeffs();
  for (std::size_t idx : geo.active_indices()) {
    const double v = phi(geo.lambda(idx));
    if (!std::isfinite(v)) throw InvalidArgument("multiplier is not finite on the eigenvalue table");
    c[idx] *= v;
  }
  return out;
}

Field derivative(const Field& f, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("axis must be 0 or 1");
  const Geometry& geo = f.geo();
  std::vector<cplx> c = f.coeffs();
  BasisPair b = f.basis();
  if (geo.is_torus()) {
    for (std::size_t idx : geo.active_indices()) c[idx] *= cplx(0.0, static_cast<double>(geo.wave(idx, axis)));
    return Field::from_coeffs(f.geometry(), std::move(c));
  }
  const double sign = b[axis] == AxisBasis::Sine ? 1.0 : -1.0;
  for (std::size_t idx : geo.active_indices()) c[idx] *= sign * geo.wave(idx, axis);
  b[axis] = b[axis] == AxisBasis::Sine ? AxisBasis::Cosine : AxisBasis::Sine;
  return Field::from_coeffs(f.geometry(), std::move(c), b);
}

Field laplacian(const Field& f) {
  return apply_multiplier(f, [](double l) { return l; });
}

Field random_band_limited(GeometryPtr geo, int band, std::uint64_t seed, double decay) {
  auto gen = make_stream(seed, Stream::TestField);
  std::normal_distribution<double> nd(0.0, 1.0);
  Field f(geo);
  auto& c = f.coeffs();
  for (std::size_t idx : geo->active_indices()) {
    const int k0 = geo->wave(idx, 0), k1 = geo->wave(idx, 1);
    if (std::abs(k0) > band || std::abs(k1) > band) continue;
    const double w = std::pow(1.0 + geo->lambda(idx), -0.5 * decay);
    if (!geo->is_torus()) {
      c[idx] = w * nd(gen);
      continue;
    }
    if (k0 == 0 && k1 == 0) {
      c[idx] = w * nd(gen);
    } else if (k0 > 0 || (k0 == 0 && k1 > 0)) {
      const double a = nd(gen), b = nd(gen);
      c[idx] = w * cplx(a, b) / std::sqrt(2.0);
      c[static_cast<std::size_t>(geo->index_of(-k0, -k1))] = std::conj(c[idx]);
    }
  }
  return f;
}

}  // namespace heatpara
