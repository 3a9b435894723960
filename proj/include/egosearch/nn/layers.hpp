#pragma once

#include <cmath>

#include "egosearch/nn/tensor.hpp"

namespace egosearch::nn {

// y = x W^T + b
template <typename T>
struct Linear {
  Param<T> w, b;

  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng)
      : w(name + ".w", out, in), b(name + ".b", 1, out) {
    const T bound = T(1) / std::sqrt(static_cast<T>(in));
    fill_uniform(w.value, bound, rng);
    fill_uniform(b.value, bound, rng);
  }

  int in_features() const { return static_cast<int>(w.value.cols()); }
  int out_features() const { return static_cast<int>(w.value.rows()); }

  Mat<T> forward(const Mat<T>& x) const {
    Mat<T> y(x.rows(), w.value.rows());
    y.noalias() = x * w.value.transpose();
    y.rowwise() += b.value.row(0);
    return y;
  }

  // Accumulates parameter gradients unless `param_grad` is false; returns dL/dx.
  Mat<T> backward(const Mat<T>& x, const Mat<T>& dy, bool param_grad = true) {
    if (param_grad) {
      w.grad.noalias() += dy.transpose() * x;
      b.grad.row(0) += dy.colwise().sum();
    }
    Mat<T> dx(dy.rows(), w.value.cols());
    dx.noalias() = dy * w.value;
    return dx;
  }

  ParamList<T> params() { return {&w, &b}; }
};

template <typename T>
Mat<T> relu(const Mat<T>& x) {
  return x.cwiseMax(T(0));
}

// Gradient through relu given its output.
template <typename T>
Mat<T> relu_backward(const Mat<T>& y, const Mat<T>& dy) {
  return (y.array() > T(0)).select(dy, T(0));
}

template <typename T>
Mat<T> tanh_forward(const Mat<T>& x) {
  return x.array().tanh().matrix();
}

template <typename T>
Mat<T> tanh_backward(const Mat<T>& y, const Mat<T>& dy) {
  return (dy.array() * (T(1) - y.array().square())).matrix();
}

// Per-row layer normalisation with learned gain and bias.
template <typename T>
struct LayerNorm {
  Param<T> gamma, beta;
  T eps = T(1e-5);

  struct Cache {
    Mat<T> xhat;
    Vec<T> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim) : gamma(name + ".g", 1, dim), beta(name + ".b", 1, dim) {
    gamma.value.setOnes();
  }

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    const Eigen::Index n = x.rows(), d = x.cols();
    Mat<T> xhat(n, d);
    Vec<T> inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const T mean = x.row(i).mean();
      const T var = (x.row(i).array() - mean).square().mean();
      inv_std(i) = T(1) / std::sqrt(var + eps);
      xhat.row(i) = (x.row(i).array() - mean) * inv_std(i);
    }
    Mat<T> y = (xhat.array().rowwise() * gamma.value.row(0).array()).matrix();
    y.rowwise() += beta.value.row(0);
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv_std);
    }
    return y;
  }

  Mat<T> backward(const Cache& c, const Mat<T>& dy, bool param_grad = true) {
    const Eigen::Index n = dy.rows(), d = dy.cols();
    if (param_grad) {
      gamma.grad.row(0) += (dy.array() * c.xhat.array()).matrix().colwise().sum();
      beta.grad.row(0) += dy.colwise().sum();
    }
    Mat<T> dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto g = (dy.row(i).array() * gamma.value.row(0).array()).eval();
      const T mean_g = g.mean();
      const T mean_gx = (g * c.xhat.row(i).array()).mean();
      dx.row(i) = c.inv_std(i) * (g - mean_g - c.xhat.row(i).array() * mean_gx);
    }
    return dx;
  }

  ParamList<T> params() { return {&gamma, &beta}; }
};

struct ConvShape {
  int channels = 1, height = 1, width = 1;
  int size() const { return channels * height * width; }
};

// Valid (unpadded) square-kernel convolution over (C, H, W) rows, via im2col.
template <typename T>
struct Conv2d {
  Param<T> w, b;  // w: out_ch x (in_ch * k * k)
  ConvShape in_shape;
  int out_ch = 0;
  int kernel = 3;
  int stride = 1;

  struct Cache {
    Mat<T> cols;  // (in_ch*k*k) x (N * P)
  };

  Conv2d() = default;
  Conv2d(const std::string& name, ConvShape in, int out_channels, int k, int s, Rng& rng)
      : w(name + ".w", out_channels, in.channels * k * k),
        b(name + ".b", 1, out_channels),
        in_shape(in),
        out_ch(out_channels),
        kernel(k),
        stride(s) {
    if (in.height < k || in.width < k) throw std::invalid_argument("conv input smaller than kernel");
    const T bound = T(1) / std::sqrt(static_cast<T>(in.channels * k * k));
    fill_uniform(w.value, bound, rng);
    fill_uniform(b.value, bound, rng);
  }

  ConvShape out_shape() const {
    return {out_ch, (in_shape.height - kernel) / stride + 1, (in_shape.width - kernel) / stride + 1};
  }

  Mat<T> im2col(const Mat<T>& x) const {
    const ConvShape o = out_shape();
    const int P = o.height * o.width;
    const Eigen::Index N = x.rows();
    Mat<T> cols(in_shape.channels * kernel * kernel, N * P);
    const int H = in_shape.height, W = in_shape.width;
    for (int c = 0; c < in_shape.channels; ++c) {
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          T* dst = cols.row((c * kernel + ky) * kernel + kx).data();
          for (Eigen::Index n = 0; n < N; ++n) {
            const T* src = x.row(n).data() + static_cast<std::ptrdiff_t>(c) * H * W;
            for (int oy = 0; oy < o.height; ++oy) {
              const T* line = src + (oy * stride + ky) * W + kx;
              for (int ox = 0; ox < o.width; ++ox) *dst++ = line[ox * stride];
            }
          }
        }
      }
    }
    return cols;
  }

  Mat<T> forward(const Mat<T>& x, Cache* cache = nullptr) const {
    if (x.cols() != in_shape.size()) throw std::invalid_argument("conv input width mismatch");
    const ConvShape o = out_shape();
    const int P = o.height * o.width;
    const Eigen::Index N = x.rows();
    Mat<T> cols = im2col(x);
    Mat<T> y(out_ch, N * P);
    y.noalias() = w.value * cols;
    Mat<T> out(N, static_cast<Eigen::Index>(out_ch) * P);
    for (int co = 0; co < out_ch; ++co) {
      const T bias = b.value(0, co);
      for (Eigen::Index n = 0; n < N; ++n) {
        const T* src = y.row(co).data() + n * P;
        T* dst = out.row(n).data() + static_cast<std::ptrdiff_t>(co) * P;
        for (int p = 0; p < P; ++p) dst[p] = src[p] + bias;
      }
    }
    if (cache) cache->cols = std::move(cols);
    return out;
  }

  Mat<T> backward(const Cache& cache, const Mat<T>& dout, bool param_grad = true,
                  bool need_dx = true) {
    const ConvShape o = out_shape();
    const int P = o.height * o.width;
    const Eigen::Index N = dout.rows();
    Mat<T> dy(out_ch, N * P);
    for (int co = 0; co < out_ch; ++co) {
      for (Eigen::Index n = 0; n < N; ++n) {
        const T* src = dout.row(n).data() + static_cast<std::ptrdiff_t>(co) * P;
        std::copy(src, src + P, dy.row(co).data() + n * P);
      }
    }
    if (param_grad) {
      w.grad.noalias() += dy * cache.cols.transpose();
      b.grad.row(0) += dy.rowwise().sum().transpose();
    }
    if (!need_dx) return Mat<T>();
    Mat<T> dcols(w.value.cols(), N * P);
    dcols.noalias() = w.value.transpose() * dy;
    Mat<T> dx = Mat<T>::Zero(N, in_shape.size());
    const int H = in_shape.height, W = in_shape.width;
    for (int c = 0; c < in_shape.channels; ++c) {
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const T* src = dcols.row((c * kernel + ky) * kernel + kx).data();
          for (Eigen::Index n = 0; n < N; ++n) {
            T* base = dx.row(n).data() + static_cast<std::ptrdiff_t>(c) * H * W;
            for (int oy = 0; oy < o.height; ++oy) {
              T* line = base + (oy * stride + ky) * W + kx;
              for (int ox = 0; ox < o.width; ++ox) line[ox * stride] += *src++;
            }
          }
        }
      }
    }
    return dx;
  }

  ParamList<T> params() { return {&w, &b}; }
};

}  // namespace egosearch::nn
