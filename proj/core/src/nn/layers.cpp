#include "patchattack/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "patchattack/error.hpp"

namespace patchattack::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

// cols is (channels*9) x (h*w), row-major.
void im2col(const float* src, int channels, int h, int w, float* cols) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    const float* plane = src + c * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        float* row = cols + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          float* out = row + static_cast<std::size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, 0.0F);
            continue;
          }
          const float* in = plane + static_cast<std::size_t>(sy) * w;
          const int dx = kx - 1;
          for (int x = 0; x < w; ++x) {
            const int sx = x + dx;
            out[x] = (sx >= 0 && sx < w) ? in[sx] : 0.0F;
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, int channels, int h, int w, float* dst) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    float* plane = dst + c * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const float* row = cols + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const float* in = row + static_cast<std::size_t>(y) * w;
          float* out = plane + static_cast<std::size_t>(sy) * w;
          const int dx = kx - 1;
          for (int x = 0; x < w; ++x) {
            const int sx = x + dx;
            if (sx >= 0 && sx < w) out[sx] += in[x];
          }
        }
      }
    }
  }
}

void he_normal(std::vector<float>& values, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0F, std::sqrt(2.0F / static_cast<float>(fan_in)));
  for (auto& v : values) v = dist(rng);
}

}  // namespace

// ---------------------------------------------------------------- Conv3x3

Conv3x3::Conv3x3(int in_channels, int out_channels)
    : in_(in_channels),
      out_(out_channels),
      weight_(static_cast<std::size_t>(out_channels) * in_channels * 9),
      bias_(static_cast<std::size_t>(out_channels)) {}

void Conv3x3::init_he(std::mt19937_64& rng) {
  he_normal(weight_.value, in_ * 9, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0F);
}

Tensor Conv3x3::forward(const Tensor& x) const {
  if (x.c != in_) throw ShapeMismatch("Conv3x3: input channel mismatch");
  Tensor y(x.n, out_, x.h, x.w);
  const int hw = x.h * x.w;
  std::vector<float> cols(static_cast<std::size_t>(in_) * 9 * hw);
  ConstMapMatrix wmat(weight_.value.data(), out_, in_ * 9);
  Eigen::Map<const Eigen::VectorXf> b(bias_.value.data(), out_);
  for (int i = 0; i < x.n; ++i) {
    im2col(x.sample(i), in_, x.h, x.w, cols.data());
    ConstMapMatrix cmat(cols.data(), in_ * 9, hw);
    MapMatrix ymat(y.sample(i), out_, hw);
    ymat.noalias() = wmat * cmat;
    ymat.colwise() += b;
  }
  return y;
}

Tensor Conv3x3::backward_input(const Tensor& x, const Tensor& /*y*/, const Tensor& grad_y) const {
  Tensor gx(x.n, x.c, x.h, x.w);
  const int hw = x.h * x.w;
  RowMatrix dcols(in_ * 9, hw);
  ConstMapMatrix wmat(weight_.value.data(), out_, in_ * 9);
  for (int i = 0; i < x.n; ++i) {
    ConstMapMatrix gy(grad_y.sample(i), out_, hw);
    dcols.noalias() = wmat.transpose() * gy;
    col2im_add(dcols.data(), in_, x.h, x.w, gx.sample(i));
  }
  return gx;
}

void Conv3x3::accumulate_grads(const Tensor& x, const Tensor& grad_y) {
  const int hw = x.h * x.w;
  std::vector<float> cols(static_cast<std::size_t>(in_) * 9 * hw);
  MapMatrix gw(weight_.grad.data(), out_, in_ * 9);
  Eigen::Map<Eigen::VectorXf> gb(bias_.grad.data(), out_);
  for (int i = 0; i < x.n; ++i) {
    im2col(x.sample(i), in_, x.h, x.w, cols.data());
    ConstMapMatrix cmat(cols.data(), in_ * 9, hw);
    ConstMapMatrix gy(grad_y.sample(i), out_, hw);
    gw.noalias() += gy * cmat.transpose();
    gb += gy.rowwise().sum();
  }
}

nlohmann::json Conv3x3::describe() const { return {{"type", "conv3x3"}, {"in", in_}, {"out", out_}}; }

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0F ? v : 0.0F;
  return y;
}

Tensor ReLU::backward_input(const Tensor& x, const Tensor& /*y*/, const Tensor& grad_y) const {
  Tensor gx = grad_y;
  for (std::size_t i = 0; i < gx.data.size(); ++i) {
    if (!(x.data[i] > 0.0F)) gx.data[i] = 0.0F;
  }
  return gx;
}

// ---------------------------------------------------------------- AvgPool2

Tensor AvgPool2::forward(const Tensor& x) const {
  const int oh = x.h / 2;
  const int ow = x.w / 2;
  if (oh == 0 || ow == 0) throw ShapeMismatch("AvgPool2: input smaller than 2x2");
  Tensor y(x.n, x.c, oh, ow);
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      for (int yy = 0; yy < oh; ++yy) {
        for (int xx = 0; xx < ow; ++xx) {
          y.at(i, c, yy, xx) = 0.25F * (x.at(i, c, 2 * yy, 2 * xx) + x.at(i, c, 2 * yy, 2 * xx + 1) +
                                        x.at(i, c, 2 * yy + 1, 2 * xx) + x.at(i, c, 2 * yy + 1, 2 * xx + 1));
        }
      }
    }
  }
  return y;
}

Tensor AvgPool2::backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const {
  Tensor gx(x.n, x.c, x.h, x.w);
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) {
          const float g = 0.25F * grad_y.at(i, c, yy, xx);
          gx.at(i, c, 2 * yy, 2 * xx) = g;
          gx.at(i, c, 2 * yy, 2 * xx + 1) = g;
          gx.at(i, c, 2 * yy + 1, 2 * xx) = g;
          gx.at(i, c, 2 * yy + 1, 2 * xx + 1) = g;
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x) const {
  Tensor y(x.n, x.c, 1, 1);
  const std::size_t plane = x.plane_size();
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      const float* p = x.sample(i) + c * plane;
      double acc = 0.0;
      for (std::size_t k = 0; k < plane; ++k) acc += p[k];
      y.at(i, c, 0, 0) = static_cast<float>(acc / static_cast<double>(plane));
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward_input(const Tensor& x, const Tensor& /*y*/, const Tensor& grad_y) const {
  Tensor gx(x.n, x.c, x.h, x.w);
  const std::size_t plane = x.plane_size();
  const float inv = 1.0F / static_cast<float>(plane);
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      float* p = gx.sample(i) + c * plane;
      std::fill(p, p + plane, grad_y.at(i, c, 0, 0) * inv);
    }
  }
  return gx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features)
    : in_(in_features),
      out_(out_features),
      weight_(static_cast<std::size_t>(out_features) * in_features),
      bias_(static_cast<std::size_t>(out_features)) {}

void Linear::init_he(std::mt19937_64& rng) {
  he_normal(weight_.value, in_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0F);
}

Tensor Linear::forward(const Tensor& x) const {
  if (static_cast<int>(x.sample_size()) != in_) throw ShapeMismatch("Linear: input feature mismatch");
  Tensor y(x.n, out_, 1, 1);
  ConstMapMatrix xmat(x.data.data(), x.n, in_);
  ConstMapMatrix wmat(weight_.value.data(), out_, in_);
  MapMatrix ymat(y.data.data(), x.n, out_);
  ymat.noalias() = xmat * wmat.transpose();
  ymat.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias_.value.data(), out_);
  return y;
}

Tensor Linear::backward_input(const Tensor& x, const Tensor& /*y*/, const Tensor& grad_y) const {
  Tensor gx(x.n, x.c, x.h, x.w);
  ConstMapMatrix gy(grad_y.data.data(), x.n, out_);
  ConstMapMatrix wmat(weight_.value.data(), out_, in_);
  MapMatrix gxm(gx.data.data(), x.n, in_);
  gxm.noalias() = gy * wmat;
  return gx;
}

void Linear::accumulate_grads(const Tensor& x, const Tensor& grad_y) {
  ConstMapMatrix xmat(x.data.data(), x.n, in_);
  ConstMapMatrix gy(grad_y.data.data(), x.n, out_);
  MapMatrix gw(weight_.grad.data(), out_, in_);
  gw.noalias() += gy.transpose() * xmat;
  Eigen::Map<Eigen::RowVectorXf> gb(bias_.grad.data(), out_);
  gb += gy.colwise().sum();
}

nlohmann::json Linear::describe() const { return {{"type", "linear"}, {"in", in_}, {"out", out_}}; }

std::unique_ptr<Layer> layer_from_json(const nlohmann::json& spec) {
  const auto type = spec.at("type").get<std::string>();
  if (type == "conv3x3") return std::make_unique<Conv3x3>(spec.at("in").get<int>(), spec.at("out").get<int>());
  if (type == "linear") return std::make_unique<Linear>(spec.at("in").get<int>(), spec.at("out").get<int>());
  if (type == "relu") return std::make_unique<ReLU>();
  if (type == "avgpool2") return std::make_unique<AvgPool2>();
  if (type == "gap") return std::make_unique<GlobalAvgPool>();
  throw InvalidArgument("unknown layer type: " + type);
}

}  // namespace patchattack::nn
