#pragma once

#include <cmath>

#include "egosearch/nn/tensor.hpp"

namespace egosearch::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (Param<T>* p : params_) {
      m_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T c1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, t_));
    const T c2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, t_));
    const T lr = static_cast<T>(cfg_.lr), eps = static_cast<T>(cfg_.eps);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<T>& p = *params_[i];
      m_[i] = b1 * m_[i] + (T(1) - b1) * p.grad;
      v_[i] = b2 * v_[i] + (T(1) - b2) * p.grad.cwiseProduct(p.grad);
      p.value.array() -=
          lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

  void zero_grad() { zero_grads(params_); }
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<Mat<T>>& first_moments() { return m_; }
  std::vector<Mat<T>>& second_moments() { return v_; }
  void set_steps(long t) { t_ = t; }

 private:
  ParamList<T> params_;
  AdamConfig cfg_;
  std::vector<Mat<T>> m_, v_;
  long t_ = 0;
};

// target <- tau * online + (1 - tau) * target, elementwise.
template <typename T>
void polyak_update(const ParamList<T>& online, const ParamList<T>& target, double tau) {
  if (online.size() != target.size()) throw std::invalid_argument("polyak: list size mismatch");
  const T a = static_cast<T>(tau), b = static_cast<T>(1.0 - tau);
  for (std::size_t i = 0; i < online.size(); ++i) {
    target[i]->value = a * online[i]->value + b * target[i]->value;
  }
}

}  // namespace egosearch::nn
