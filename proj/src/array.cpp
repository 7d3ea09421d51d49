#include "softtree/array.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "softtree/error.hpp"

namespace softtree {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

void require_same_shape(const char* op, const Array& a, const Array& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch: " + shape_string(a) +
                     " vs " + shape_string(b));
  }
}

}  // namespace

Array::Array(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Array::Array(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("Array: " + std::to_string(data_.size()) +
                     " values do not fill shape " + shape_string(shape_));
  }
}

bool Array::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << " x ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::string shape_string(const Array& a) { return shape_string(a.shape()); }

void matvec_into(std::span<const double> weights, std::size_t p, std::size_t m,
                 std::span<const double> x, std::span<double> out) {
  for (std::size_t j = 0; j < m; ++j) out[j] = 0.0;
  for (std::size_t f = 0; f < p; ++f) {
    const double xf = x[f];
    const double* row = weights.data() + f * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += row[j] * xf;
  }
}

Array matvec(const Array& weights, const Array& x) {
  if (weights.rank() != 2 || x.rank() != 1 || weights.extent(0) != x.extent(0)) {
    throw ShapeError("matvec: shape mismatch: W is " + shape_string(weights) +
                     ", x is " + shape_string(x));
  }
  const std::size_t p = weights.extent(0), m = weights.extent(1);
  Array out({m});
  matvec_into(weights.values(), p, m, x.values(), out.values());
  return out;
}

Array batched_matvec(const Array& weights, const Array& X) {
  if (weights.rank() != 2 || X.rank() != 2 || weights.extent(0) != X.extent(1)) {
    throw ShapeError("batched_matvec: shape mismatch: W is " +
                     shape_string(weights) + ", X is " + shape_string(X));
  }
  const std::size_t p = weights.extent(0), m = weights.extent(1);
  const std::size_t batch = X.extent(0);
  Array out({batch, m});
  for (std::size_t b = 0; b < batch; ++b) {
    matvec_into(weights.values(), p, m,
                std::span<const double>(X.data() + b * p, p),
                std::span<double>(out.data() + b * m, m));
  }
  return out;
}

Array ew_add(const Array& a, const Array& b) {
  require_same_shape("ew_add", a, b);
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Array ew_sub(const Array& a, const Array& b) {
  require_same_shape("ew_sub", a, b);
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Array ew_mul(const Array& a, const Array& b) {
  require_same_shape("ew_mul", a, b);
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Array scaled(const Array& a, double c) {
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  return out;
}

void axpy(double c, const Array& x, Array& y) {
  require_same_shape("axpy", x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

double sum(const Array& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double dot(const Array& a, const Array& b) {
  require_same_shape("dot", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Array sum_axis0(const Array& a) {
  if (a.rank() == 0) throw ShapeError("sum_axis0: rank-0 input");
  std::vector<std::size_t> rest(a.shape().begin() + 1, a.shape().end());
  Array out(rest);
  const std::size_t inner = out.size();
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    const double* src = a.data() + i * inner;
    for (std::size_t j = 0; j < inner; ++j) out[j] += src[j];
  }
  return out;
}

}  // namespace softtree
