#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "stainco/common.hpp"

namespace stainco {

// Dense row-major tensor. Deliberately minimal: the NN layers address storage
// directly or through Eigen maps; this type only owns memory and shape.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), T(0)) {}
  Tensor(std::initializer_list<int> s) : Tensor(std::vector<int>(s)) {}

  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw ShapeError("negative tensor dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // 2-d accessor (rows x cols).
  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
  const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void reshape(std::vector<int> s) {
    if (count(s) != data.size()) throw ShapeError("reshape changes element count");
    shape = std::move(s);
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <class T>
using EigenRowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Map a tensor (or raw buffer) as a rows x cols row-major Eigen matrix.
template <class T>
Eigen::Map<EigenRowMat<T>> as_matrix(T* p, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<EigenRowMat<T>>(p, rows, cols);
}

template <class T>
Eigen::Map<const EigenRowMat<T>> as_matrix(const T* p, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const EigenRowMat<T>>(p, rows, cols);
}

}  // namespace stainco
