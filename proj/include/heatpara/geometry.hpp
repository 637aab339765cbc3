#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "heatpara/errors.hpp"

namespace heatpara {

using cplx = std::complex<double>;

enum class GeometryKind { Torus, DirichletSquare };

// Per-axis expansion. Torus fields are Fourier on both axes; square fields are
// sine on both axes unless a derivative has switched an axis to cosine.
enum class AxisBasis : std::uint8_t { Fourier, Sine, Cosine };
using BasisPair = std::array<AxisBasis, 2>;

std::string to_string(GeometryKind kind);
GeometryKind parse_geometry_kind(std::string_view name);

class Field;
class Geometry;
using GeometryPtr = std::shared_ptr<const Geometry>;

class Geometry : public std::enable_shared_from_this<Geometry> {
 public:
  static GeometryPtr make(GeometryKind kind, int n);

  Geometry(const Geometry&) = delete;
  Geometry& operator=(const Geometry&) = delete;
  ~Geometry();

  GeometryKind kind() const { return kind_; }
  bool is_torus() const { return kind_ == GeometryKind::Torus; }
  int n() const { return n_; }
  double side() const { return side_; }
  double volume() const { return side_ * side_; }
  BasisPair default_basis() const;

  // Spectral arrays have n*n slots in row-major (axis 0, axis 1) order. On the
  // torus the Nyquist row and column are inactive and always hold zero.
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t dimension() const { return active_.size(); }
  const std::vector<std::size_t>& active_indices() const { return active_; }
  bool active(std::size_t idx) const { return is_active_[idx] != 0; }
  double lambda(std::size_t idx) const { return lambda_[idx]; }
  const std::vector<double>& lambdas() const { return lambda_; }
  int wave(std::size_t idx, int axis) const { return wave_[2 * idx + axis]; }
  // Slot holding wave vector (k0,k1); -1 if the mode is not represented.
  long index_of(int k0, int k1) const;
  double lambda_max() const { return lambda_max_; }
  double lambda_min_positive() const;
  std::vector<double> eigenvalue_table() const;

  double grid_point(int j) const;

  // Real orthonormal basis used by dense operators.
  std::size_t real_dim() const { return real_slot_.size(); }
  double real_eigenvalue(std::size_t r) const { return lambda_[real_slot_[r]]; }
  Eigen::VectorXd to_real(const Field& f) const;
  Field from_real(const Eigen::VectorXd& v) const;
  // Unscaled real and imaginary parts in real-basis order; bit-exact inverse pair.
  std::vector<double> pack_raw(const Field& f) const;
  Field unpack_raw(const std::vector<double>& v) const;

  // Transforms between coefficient arrays and complex grid values on the n x n grid.
  void synthesize(const cplx* coeffs, BasisPair basis, cplx* grid) const;
  void analyze(const cplx* grid, cplx* coeffs) const;

  // Dealiased product support: values on the refined grid ((3n/2)^2 on the torus,
  // (2n+1)^2 interior DST points on the square) and projection back.
  std::size_t fine_size() const { return static_cast<std::size_t>(fine_n_) * fine_n_; }
  int fine_n() const { return fine_n_; }
  void to_fine(const cplx* coeffs, BasisPair basis, cplx* work) const;
  // Overwrites `work`; writes a default-basis coefficient array into `coeffs`.
  void from_fine(cplx* work, cplx* coeffs) const;

 private:
  Geometry(GeometryKind kind, int n);
  struct Plans;

  GeometryKind kind_;
  int n_;
  int fine_n_;
  double side_;
  double lambda_max_ = 0.0;
  std::vector<double> lambda_;
  std::vector<int> wave_;
  std::vector<std::uint8_t> is_active_;
  std::vector<std::size_t> active_;
  // real basis: slot and type (0 = mean/sine-square, 1 = cosine part, 2 = sine part)
  std::vector<std::size_t> real_slot_;
  std::vector<std::uint8_t> real_type_;
  std::unique_ptr<Plans> plans_;
  // square transforms
  Eigen::MatrixXd sin_coarse_, cos_coarse_, sin_fine_, cos_fine_, analyze_coarse_, analyze_fine_;
};

class Field {
 public:
  Field() = default;
  explicit Field(GeometryPtr geo);

  static Field from_coeffs(GeometryPtr geo, std::vector<cplx> coeffs);
  static Field from_coeffs(GeometryPtr geo, std::vector<cplx> coeffs, BasisPair basis);
  static Field from_values(GeometryPtr geo, const std::vector<double>& values);
  static Field from_complex_values(GeometryPtr geo, const std::vector<cplx>& values);
  static Field constant(GeometryPtr geo, double value);
  // Single normalized eigenfunction; torus (k0,k1) signed, square (n,m) >= 1.
  static Field mode(GeometryPtr geo, int k0, int k1, cplx amplitude = 1.0);

  const GeometryPtr& geometry() const { return geo_; }
  const Geometry& geo() const { return *geo_; }
  const std::vector<cplx>& coeffs() const { return c_; }
  std::vector<cplx>& coeffs() { return c_; }
  BasisPair basis() const { return basis_; }
  bool is_default_basis() const;
  bool empty() const { return !geo_; }

  std::vector<double> values() const;
  std::vector<cplx> complex_values() const;
  double evaluate(double x, double y) const;

  double norm() const;
  double mean() const;
  double max_abs_coeff() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  Field& axpy(double a, const Field& x);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

 private:
  void check_same(const Field& o) const;
  GeometryPtr geo_;
  std::vector<cplx> c_;
  BasisPair basis_{AxisBasis::Fourier, AxisBasis::Fourier};
};

void require_same_geometry(const Field& a, const Field& b);

double inner_product(const Field& f, const Field& g);
cplx inner_product_complex(const Field& f, const Field& g);
Field multiply(const Field& f, const Field& g);
Field apply_multiplier(const Field& f, const std::function<double(double)>& phi);
Field derivative(const Field& f, int axis);
Field laplacian(const Field& f);

// Random field with iid Gaussian coefficients on modes with |k_i| <= band
// (square: n, m <= band), real on the torus.
Field random_band_limited(GeometryPtr geo, int band, std::uint64_t seed, double decay = 0.0);

}  // namespace heatpara
