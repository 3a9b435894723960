#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "egosearch/rng.hpp"

namespace egosearch::nn {

// Activations are batch-major: one sample per row.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<T>::Zero(rows, cols)), grad(Mat<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

template <typename T>
void fill_uniform(Mat<T>& m, T bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<T>(rng.uniform(-static_cast<double>(bound), static_cast<double>(bound)));
  }
}

template <typename T>
void zero_grads(const ParamList<T>& ps) {
  for (Param<T>* p : ps) p->zero_grad();
}

template <typename T>
bool all_finite(const Mat<T>& m) {
  return m.allFinite();
}

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
void require_finite(const Mat<T>& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string("non-finite values in ") + what);
}

// Copies values (not gradients) between structurally identical lists.
template <typename T, typename U>
void copy_values(const std::vector<Param<U>*>& from, const ParamList<T>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("parameter list size mismatch");
  for (std::size_t i = 0; i < from.size(); ++i) {
    to[i]->value = from[i]->value.template cast<T>();
  }
}

}  // namespace egosearch::nn
