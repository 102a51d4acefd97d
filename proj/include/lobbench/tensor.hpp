#pragma once

// Dense row-major double tensor. Shape is dynamic; the flat buffer is
// reinterpreted by ops that know their geometry (a [N, T*D] sequence batch
// is viewed as an (N*T) x D matrix for per-step work, etc.). Eigen backs
// the heavy matrix arithmetic through Map views; no Eigen type leaks out.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lobbench/common.hpp"

namespace lobbench::ad {

namespace detail {

// 64-byte-aligned buffer storage. Eigen's vectorized kernels peel loops at
// the first aligned element, so the floating-point reduction order depends
// on `address % 64`. Pinning every buffer to one alignment makes results a
// function of the values alone — repeated runs inside one process see the
// same rounding as a fresh process.
template <class T, std::size_t Align>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Align)));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    ::operator delete(p, n * sizeof(T), std::align_val_t(Align));
  }

  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
  friend bool operator!=(const AlignedAllocator&, const AlignedAllocator&) { return false; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double, 64>>;

}  // namespace detail

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    std::int64_t n = 1;
    for (const std::int64_t d : shape_) {
      if (d < 0) throw ConfigError("tensor: negative dimension");
      n *= d;
    }
    data_.assign(static_cast<std::size_t>(n), 0.0);
  }

  static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<std::int64_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor scalar(double v) { return full({1}, v); }

  static Tensor from_values(std::vector<std::int64_t> shape, const std::vector<double>& values) {
    Tensor t(std::move(shape));
    if (t.data_.size() != values.size()) throw ConfigError("tensor: value count mismatch");
    std::copy(values.begin(), values.end(), t.data_.begin());
    return t;
  }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // View the flat buffer as rows x cols (must cover the buffer exactly).
  MatMap mat(std::int64_t rows, std::int64_t cols) {
    if (rows * cols != size()) throw ConfigError("tensor: bad matrix view");
    return MatMap(data_.data(), rows, cols);
  }
  ConstMatMap mat(std::int64_t rows, std::int64_t cols) const {
    if (rows * cols != size()) throw ConfigError("tensor: bad matrix view");
    return ConstMatMap(data_.data(), rows, cols);
  }

  // Rank-2 tensors view themselves.
  MatMap mat() { return mat(dim(0), dim(1)); }
  ConstMatMap mat() const { return mat(dim(0), dim(1)); }

  VecMap vec() { return VecMap(data_.data(), size()); }
  ConstVecMap vec() const { return ConstVecMap(data_.data(), size()); }

  Tensor reshaped(std::vector<std::int64_t> shape) const {
    Tensor t;
    t.shape_ = std::move(shape);
    std::int64_t n = 1;
    for (const std::int64_t d : t.shape_) n *= d;
    if (n != size()) throw ConfigError("tensor: reshape size mismatch");
    t.data_ = data_;
    return t;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (const double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

private:
  std::vector<std::int64_t> shape_;
  detail::AlignedBuffer data_;
};

inline std::string shape_string(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) s += ", ";
    s += std::to_string(t.shape()[i]);
  }
  return s + "]";
}

inline void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite())
    throw NumericError(std::string(what) + ": non-finite values in tensor " + shape_string(t));
}

}  // namespace lobbench::ad
