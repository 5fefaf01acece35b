#include "mars/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mars {

Matrix::Matrix(int rows, int cols, double value)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("Matrix: negative dimension");
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, value);
}

Tensor3::Tensor3(int n1, int n2, int n3, double value)
    : n1_(n1), n2_(n2), n3_(n3) {
  if (n1 < 0 || n2 < 0 || n3 < 0) {
    throw std::invalid_argument("Tensor3: negative dimension");
  }
  data_.assign(static_cast<std::size_t>(n1) * n2 * n3, value);
}

int Tensor3::dim(int mode) const {
  switch (mode) {
    case 1: return n1_;
    case 2: return n2_;
    case 3: return n3_;
    default:
      throw std::invalid_argument("Tensor3::dim: mode must be 1, 2 or 3");
  }
}

EventTensor::EventTensor(int n_viewers, int n_channels, int n_slots)
    : n_viewers_(n_viewers), n_channels_(n_channels), n_slots_(n_slots) {
  if (n_viewers < 0 || n_channels < 0 || n_slots < 0) {
    throw std::invalid_argument("EventTensor: negative dimension");
  }
}

void EventTensor::check_index(int v, int c, int t) const {
  if (v < 0 || v >= n_viewers_ || c < 0 || c >= n_channels_ || t < 0 ||
      t >= n_slots_) {
    throw std::out_of_range("EventTensor: index (" + std::to_string(v) + ", " +
                            std::to_string(c) + ", " + std::to_string(t) +
                            ") outside " + std::to_string(n_viewers_) + "x" +
                            std::to_string(n_channels_) + "x" +
                            std::to_string(n_slots_));
  }
}

void EventTensor::set(int v, int c, int t, double x) {
  check_index(v, c, t);
  if (!(x >= 0.0)) {
    throw std::invalid_argument("EventTensor: values must be nonnegative");
  }
  if (x == 0.0) {
    entries_.erase({v, c, t});
  } else {
    entries_[{v, c, t}] = x;
  }
}

double EventTensor::at(int v, int c, int t) const {
  check_index(v, c, t);
  auto it = entries_.find({v, c, t});
  return it == entries_.end() ? 0.0 : it->second;
}

Tensor3 mode_n_product(const Tensor3& t, const Matrix& m, int mode) {
  if (mode < 1 || mode > 3) {
    throw std::invalid_argument("mode_n_product: mode must be 1, 2 or 3");
  }
  if (m.cols() != t.dim(mode)) {
    throw std::invalid_argument(
        "mode_n_product: matrix has " + std::to_string(m.cols()) +
        " columns but tensor mode " + std::to_string(mode) + " has size " +
        std::to_string(t.dim(mode)));
  }
  const int r = m.rows();
  switch (mode) {
    case 1: {
      Tensor3 out(r, t.n2(), t.n3());
      for (int i = 0; i < r; ++i) {
        for (int a = 0; a < t.n1(); ++a) {
          const double w = m(i, a);
          if (w == 0.0) continue;
          for (int j = 0; j < t.n2(); ++j) {
            for (int k = 0; k < t.n3(); ++k) {
              out(i, j, k) += w * t(a, j, k);
            }
          }
        }
      }
      return out;
    }
    case 2: {
      Tensor3 out(t.n1(), r, t.n3());
      for (int i = 0; i < t.n1(); ++i) {
        for (int j = 0; j < r; ++j) {
          for (int b = 0; b < t.n2(); ++b) {
            const double w = m(j, b);
            if (w == 0.0) continue;
            for (int k = 0; k < t.n3(); ++k) {
              out(i, j, k) += w * t(i, b, k);
            }
          }
        }
      }
      return out;
    }
    default: {
      Tensor3 out(t.n1(), t.n2(), r);
      for (int i = 0; i < t.n1(); ++i) {
        for (int j = 0; j < t.n2(); ++j) {
          for (int k = 0; k < r; ++k) {
            double acc = 0.0;
            for (int e = 0; e < t.n3(); ++e) {
              acc += m(k, e) * t(i, j, e);
            }
            out(i, j, k) = acc;
          }
        }
      }
      return out;
    }
  }
}

Tensor3 tucker_reconstruct(const Tensor3& core, const Matrix& m1,
                           const Matrix& m2, const Matrix& m3) {
  return mode_n_product(mode_n_product(mode_n_product(core, m1, 1), m2, 2),
                        m3, 3);
}

double frob_sq_diff(const Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("frob_sq_diff: shape mismatch");
  }
  double acc = 0.0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  return acc;
}

double frob_sq_diff(const EventTensor& a, const Tensor3& b) {
  if (a.n_viewers() != b.n1() || a.n_channels() != b.n2() ||
      a.n_slots() != b.n3()) {
    throw std::invalid_argument("frob_sq_diff: shape mismatch");
  }
  // All absent cells contribute b^2; correct the observed ones afterwards.
  double acc = 0.0;
  for (double x : b.data()) acc += x * x;
  for (const auto& [idx, x] : a.entries()) {
    const double y = b(idx[0], idx[1], idx[2]);
    acc += (x - y) * (x - y) - y * y;
  }
  return acc;
}

Tensor3 to_dense(const EventTensor& t) {
  Tensor3 out(t.n_viewers(), t.n_channels(), t.n_slots());
  for (const auto& [idx, x] : t.entries()) {
    out(idx[0], idx[1], idx[2]) = x;
  }
  return out;
}

}  // namespace mars
