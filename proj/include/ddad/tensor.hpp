#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "ddad/errors.hpp"

namespace ddad {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<MatRM<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const MatRM<T>>;
template <typename T>
using MapVec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

// Dense row-major tensor, shape held as a small vector. Rank 2 covers
// (N, features), rank 4 covers (N, C, H, W); blob I/O treats everything as
// a flat float array plus its shape.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(numel_of(shape_)), T(0));
  }
  Tensor(std::initializer_list<int64_t> shape)
      : Tensor(std::vector<int64_t>(shape)) {}

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) {
      if (d < 0) throw ValidationError("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t rank() const { return shape_.size(); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // rank-4 indexing (n, c, h, w)
  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(
        ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(
        ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  // rank-2 indexing
  T& at(int64_t i, int64_t j) {
    return data_[static_cast<size_t>(i * shape_[1] + j)];
  }
  const T& at(int64_t i, int64_t j) const {
    return data_[static_cast<size_t>(i * shape_[1] + j)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  // Workspace reuse: reallocates only when the shape changes; existing
  // contents are kept (callers overwrite).
  void ensure_shape(const std::vector<int64_t>& shape) {
    if (shape_ == shape) return;
    shape_ = shape;
    data_.assign(static_cast<size_t>(numel_of(shape_)), T(0));
  }

  Tensor<T> reshaped(std::vector<int64_t> shape) const {
    if (numel_of(shape) != numel())
      throw ValidationError("tensor: reshape changes element count");
    Tensor<T> out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
  }

  // flat view as (rows x cols)
  MapMat<T> mat(int64_t rows, int64_t cols) {
    return MapMat<T>(data(), rows, cols);
  }
  ConstMapMat<T> mat(int64_t rows, int64_t cols) const {
    return ConstMapMat<T>(data(), rows, cols);
  }

  bool same_shape(const Tensor<T>& o) const { return shape_ == o.shape_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

}  // namespace ddad
