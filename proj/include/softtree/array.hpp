#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace softtree {

// Dense row-major array of 64-bit reals. Only the handful of bulk
// operations the ensemble needs are provided; there is deliberately no
// general broadcasting or einsum machinery.
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<std::size_t> shape);
  Array(std::vector<std::size_t> shape, std::vector<double> values);

  static Array zeros(std::vector<std::size_t> shape) { return Array(std::move(shape)); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i) { return data_[i]; }
  double operator()(std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Array& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(std::span<const std::size_t> shape);
std::string shape_string(const Array& a);

// out[j] = sum_f W[f,j] * x[f];  W is [p x m], x is [p].
Array matvec(const Array& weights, const Array& x);

// Row b of the result equals matvec(W, X[b]);  X is [B x p].
Array batched_matvec(const Array& weights, const Array& X);

// Raw-span kernel shared by both entry points and the ensemble hot path.
void matvec_into(std::span<const double> weights, std::size_t p, std::size_t m,
                 std::span<const double> x, std::span<double> out);

// Elementwise operations; shapes must match exactly.
Array ew_add(const Array& a, const Array& b);
Array ew_sub(const Array& a, const Array& b);
Array ew_mul(const Array& a, const Array& b);
Array scaled(const Array& a, double c);

// In-place y += c * x over raw storage.
void axpy(double c, const Array& x, Array& y);

double sum(const Array& a);
double dot(const Array& a, const Array& b);

// Sum over the leading axis: [n x rest...] -> [rest...].
Array sum_axis0(const Array& a);

}  // namespace softtree
