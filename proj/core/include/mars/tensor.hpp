#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace mars {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double value = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  std::span<double> row(int i) {
    return {data_.data() + static_cast<std::size_t>(i) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Dense 3-way tensor, row-major over (i, j, k).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int n1, int n2, int n3, double value = 0.0);

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int n3() const { return n3_; }
  // Size along one of the three modes (1-based, matching mode products).
  int dim(int mode) const;

  double& operator()(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(i) * n2_ + j) * n3_ + k];
  }
  double operator()(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * n2_ + j) * n3_ + k];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  bool same_shape(const Tensor3& other) const {
    return n1_ == other.n1_ && n2_ == other.n2_ && n3_ == other.n3_;
  }

  bool operator==(const Tensor3&) const = default;

 private:
  int n1_ = 0;
  int n2_ = 0;
  int n3_ = 0;
  std::vector<double> data_;
};

// Sparse nonnegative 3-way event tensor over (viewer, channel, slot).
// Absent cells are exactly zero. Entries are kept sorted by index so
// iteration order is deterministic.
class EventTensor {
 public:
  EventTensor() = default;
  EventTensor(int n_viewers, int n_channels, int n_slots);

  // Stores x at (v, c, t). Requires x >= 0; storing 0 clears the cell.
  void set(int v, int c, int t, double x);
  double at(int v, int c, int t) const;

  const std::map<std::array<int, 3>, double>& entries() const {
    return entries_;
  }

  int n_viewers() const { return n_viewers_; }
  int n_channels() const { return n_channels_; }
  int n_slots() const { return n_slots_; }
  std::size_t nnz() const { return entries_.size(); }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(n_viewers_) * n_channels_ * n_slots_;
  }

  bool same_shape(const EventTensor& other) const {
    return n_viewers_ == other.n_viewers_ &&
           n_channels_ == other.n_channels_ && n_slots_ == other.n_slots_;
  }

  void check_index(int v, int c, int t) const;

  bool operator==(const EventTensor&) const = default;

 private:
  int n_viewers_ = 0;
  int n_channels_ = 0;
  int n_slots_ = 0;
  std::map<std::array<int, 3>, double> entries_;
};

// Mode-n product of a dense 3-way tensor with a matrix. `mode` is 1, 2 or 3;
// the matrix column count must equal the tensor size along that mode, and the
// output replaces that size with the matrix row count.
Tensor3 mode_n_product(const Tensor3& t, const Matrix& m, int mode);

// core x1 m1 x2 m2 x3 m3. The order of application across distinct modes does
// not matter.
Tensor3 tucker_reconstruct(const Tensor3& core, const Matrix& m1,
                           const Matrix& m2, const Matrix& m3);

// Sum over all cells of (a - b)^2.
double frob_sq_diff(const Tensor3& a, const Tensor3& b);
double frob_sq_diff(const EventTensor& a, const Tensor3& b);

Tensor3 to_dense(const EventTensor& t);

}  // namespace mars
