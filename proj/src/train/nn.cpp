#include "semiseg/train/nn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

// (in_c * k * k) x (oh * ow) patch matrix for one sample.
void im2col(const float* x, int c, int h, int w, int kernel, int stride, int pad, int oh, int ow,
            float* col) {
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                float* row = col + ((static_cast<std::size_t>(ch) * kernel + ky) * kernel + kx) *
                                       out_plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) {
                        std::fill_n(row + static_cast<std::size_t>(oy) * ow, ow, 0.0f);
                        continue;
                    }
                    const float* src = x + (static_cast<std::size_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        row[static_cast<std::size_t>(oy) * ow + ox] =
                            (ix < 0 || ix >= w) ? 0.0f : src[ix];
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int c, int h, int w, int kernel, int stride, int pad, int oh,
            int ow, float* x) {
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    std::fill_n(x, static_cast<std::size_t>(c) * h * w, 0.0f);
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const float* row =
                    col + ((static_cast<std::size_t>(ch) * kernel + ky) * kernel + kx) * out_plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    float* dst = x + (static_cast<std::size_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w) {
                            dst[ix] += row[static_cast<std::size_t>(oy) * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Tensor4 image_batch_to_tensor(const std::vector<Image>& images) {
    if (images.empty()) throw DataError("empty image batch");
    const int h = images[0].height, w = images[0].width;
    Tensor4 t(static_cast<int>(images.size()), 3, h, w);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].height != h || images[i].width != w) {
            throw DataError("image batch is not shape-uniform");
        }
        for (int ch = 0; ch < 3; ++ch) {
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    t.at(static_cast<int>(i), ch, r, c) = images[i].at(r, c)[ch];
                }
            }
        }
    }
    return t;
}

Conv2d::Conv2d(int in_c_, int out_c_, int kernel_, int stride_, int pad_, Rng rng)
    : in_c(in_c_), out_c(out_c_), kernel(kernel_), stride(stride_), pad(pad_) {
    weight.resize(static_cast<std::size_t>(out_c) * in_c * kernel * kernel);
    bias.resize(static_cast<std::size_t>(out_c));
    // He initialization for ReLU networks.
    const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_c) * kernel * kernel));
    for (float& v : weight.value) v = static_cast<float>(rng.normal() * std_dev);
}

std::pair<int, int> Conv2d::out_dims(int h, int w) const {
    const int oh = (h + 2 * pad - kernel) / stride + 1;
    const int ow = (w + 2 * pad - kernel) / stride + 1;
    if (oh <= 0 || ow <= 0) throw DataError("conv input smaller than kernel");
    return {oh, ow};
}

Tensor4 Conv2d::forward(const Tensor4& x, Cache* cache) const {
    if (x.c != in_c) throw DataError("conv channel mismatch");
    const auto [oh, ow] = out_dims(x.h, x.w);
    Tensor4 out(x.n, out_c, oh, ow);
    const int patch = in_c * kernel * kernel;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    std::vector<float> col(static_cast<std::size_t>(patch) * out_plane);
    ConstMapRM w_mat(weight.value.data(), out_c, patch);
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), in_c, x.h, x.w, kernel, stride, pad, oh, ow, col.data());
        ConstMapRM col_mat(col.data(), patch, static_cast<Eigen::Index>(out_plane));
        MapRM out_mat(out.sample(i), out_c, static_cast<Eigen::Index>(out_plane));
        out_mat.noalias() = w_mat * col_mat;
        for (int ch = 0; ch < out_c; ++ch) out_mat.row(ch).array() += bias.value[ch];
    }
    if (cache) cache->input = x;
    return out;
}

Tensor4 Conv2d::backward(const Cache& cache, const Tensor4& grad_out) {
    const Tensor4& x = cache.input;
    const auto [oh, ow] = out_dims(x.h, x.w);
    const int patch = in_c * kernel * kernel;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

    Tensor4 grad_in(x.n, in_c, x.h, x.w);
    std::vector<float> col(static_cast<std::size_t>(patch) * out_plane);
    std::vector<float> gcol(col.size());
    ConstMapRM w_mat(weight.value.data(), out_c, patch);
    MapRM gw_mat(weight.grad.data(), out_c, patch);
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), in_c, x.h, x.w, kernel, stride, pad, oh, ow, col.data());
        ConstMapRM col_mat(col.data(), patch, static_cast<Eigen::Index>(out_plane));
        ConstMapRM go_mat(grad_out.sample(i), out_c, static_cast<Eigen::Index>(out_plane));
        gw_mat.noalias() += go_mat * col_mat.transpose();
        for (int ch = 0; ch < out_c; ++ch) bias.grad[ch] += go_mat.row(ch).sum();
        MapRM gcol_mat(gcol.data(), patch, static_cast<Eigen::Index>(out_plane));
        gcol_mat.noalias() = w_mat.transpose() * go_mat;
        col2im(gcol.data(), in_c, x.h, x.w, kernel, stride, pad, oh, ow, grad_in.sample(i));
    }
    return grad_in;
}

BatchNorm2d::BatchNorm2d(int channels_) : channels(channels_) {
    gamma.resize(channels);
    beta.resize(channels);
    std::fill(gamma.value.begin(), gamma.value.end(), 1.0f);
    running_mean.assign(channels, 0.0f);
    running_var.assign(channels, 1.0f);
}

Tensor4 BatchNorm2d::forward(const Tensor4& x, bool train, Cache* cache) {
    if (x.c != channels) throw DataError("batchnorm channel mismatch");
    const std::size_t plane = x.plane();
    const std::size_t count = static_cast<std::size_t>(x.n) * plane;
    Tensor4 out(x.n, x.c, x.h, x.w);

    std::vector<float> mean(channels), inv_std(channels);
    for (int ch = 0; ch < channels; ++ch) {
        double m = 0.0, v = 0.0;
        if (train) {
            for (int i = 0; i < x.n; ++i) {
                const float* src = x.sample(i) + ch * plane;
                for (std::size_t k = 0; k < plane; ++k) m += src[k];
            }
            m /= static_cast<double>(count);
            for (int i = 0; i < x.n; ++i) {
                const float* src = x.sample(i) + ch * plane;
                for (std::size_t k = 0; k < plane; ++k) {
                    const double d = src[k] - m;
                    v += d * d;
                }
            }
            v /= static_cast<double>(count); // biased, used for normalization
            const double unbiased = count > 1 ? v * static_cast<double>(count) / (count - 1) : v;
            running_mean[ch] = static_cast<float>((1.0 - momentum) * running_mean[ch] +
                                                  momentum * m);
            running_var[ch] = static_cast<float>((1.0 - momentum) * running_var[ch] +
                                                 momentum * unbiased);
        } else {
            m = running_mean[ch];
            v = running_var[ch];
        }
        mean[ch] = static_cast<float>(m);
        inv_std[ch] = static_cast<float>(1.0 / std::sqrt(v + eps));
    }

    if (cache) {
        cache->x_hat = Tensor4(x.n, x.c, x.h, x.w);
        cache->mean = mean;
        cache->inv_std = inv_std;
    }
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < channels; ++ch) {
            const float* src = x.sample(i) + ch * plane;
            float* dst = out.sample(i) + ch * plane;
            float* hat = cache ? cache->x_hat.sample(i) + ch * plane : nullptr;
            const float g = gamma.value[ch], b = beta.value[ch];
            for (std::size_t k = 0; k < plane; ++k) {
                const float xh = (src[k] - mean[ch]) * inv_std[ch];
                if (hat) hat[k] = xh;
                dst[k] = g * xh + b;
            }
        }
    }
    return out;
}

Tensor4 BatchNorm2d::backward(const Cache& cache, const Tensor4& grad_out) {
    const Tensor4& x_hat = cache.x_hat;
    const std::size_t plane = x_hat.plane();
    const double count = static_cast<double>(x_hat.n) * plane;
    Tensor4 grad_in(x_hat.n, x_hat.c, x_hat.h, x_hat.w);

    for (int ch = 0; ch < channels; ++ch) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int i = 0; i < x_hat.n; ++i) {
            const float* go = grad_out.sample(i) + ch * plane;
            const float* xh = x_hat.sample(i) + ch * plane;
            for (std::size_t k = 0; k < plane; ++k) {
                sum_g += go[k];
                sum_gx += static_cast<double>(go[k]) * xh[k];
            }
        }
        gamma.grad[ch] += static_cast<float>(sum_gx);
        beta.grad[ch] += static_cast<float>(sum_g);

        const double g = gamma.value[ch];
        const double inv_std = cache.inv_std[ch];
        for (int i = 0; i < x_hat.n; ++i) {
            const float* go = grad_out.sample(i) + ch * plane;
            const float* xh = x_hat.sample(i) + ch * plane;
            float* gi = grad_in.sample(i) + ch * plane;
            for (std::size_t k = 0; k < plane; ++k) {
                const double term =
                    go[k] - sum_g / count - static_cast<double>(xh[k]) * sum_gx / count;
                gi[k] = static_cast<float>(g * inv_std * term);
            }
        }
    }
    return grad_in;
}

Tensor4 Relu::forward(const Tensor4& x, Cache* cache) {
    Tensor4 out = x;
    if (cache) cache->positive.assign(x.size(), 0);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (out.data[i] > 0.0f) {
            if (cache) cache->positive[i] = 1;
        } else {
            out.data[i] = 0.0f;
        }
    }
    return out;
}

Tensor4 Relu::backward(const Cache& cache, const Tensor4& grad_out) {
    Tensor4 grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
        if (!cache.positive[i]) grad_in.data[i] = 0.0f;
    }
    return grad_in;
}

namespace {

struct LerpIndex {
    int lo, hi;
    float w_hi;
};

std::vector<LerpIndex> lerp_axis(int in, int out) {
    std::vector<LerpIndex> idx(out);
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        double f = (i + 0.5) * scale - 0.5;
        f = std::clamp(f, 0.0, static_cast<double>(in - 1));
        const int lo = static_cast<int>(f);
        idx[i] = {lo, std::min(lo + 1, in - 1), static_cast<float>(f - lo)};
    }
    return idx;
}

} // namespace

Tensor4 BilinearResize::forward(const Tensor4& x, int out_h, int out_w, Cache* cache) {
    if (cache) *cache = {x.h, x.w};
    if (out_h == x.h && out_w == x.w) return x;
    Tensor4 out(x.n, x.c, out_h, out_w);
    const auto ys = lerp_axis(x.h, out_h);
    const auto xs = lerp_axis(x.w, out_w);
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            const float* src = x.sample(i) + ch * x.plane();
            float* dst = out.sample(i) + ch * out.plane();
            for (int r = 0; r < out_h; ++r) {
                const LerpIndex& ry = ys[r];
                const float* top = src + static_cast<std::size_t>(ry.lo) * x.w;
                const float* bot = src + static_cast<std::size_t>(ry.hi) * x.w;
                for (int c = 0; c < out_w; ++c) {
                    const LerpIndex& rx = xs[c];
                    const float t = top[rx.lo] * (1.0f - rx.w_hi) + top[rx.hi] * rx.w_hi;
                    const float b = bot[rx.lo] * (1.0f - rx.w_hi) + bot[rx.hi] * rx.w_hi;
                    dst[static_cast<std::size_t>(r) * out_w + c] =
                        t * (1.0f - ry.w_hi) + b * ry.w_hi;
                }
            }
        }
    }
    return out;
}

Tensor4 BilinearResize::backward(const Cache& cache, const Tensor4& grad_out) {
    if (cache.in_h == grad_out.h && cache.in_w == grad_out.w) return grad_out;
    Tensor4 grad_in(grad_out.n, grad_out.c, cache.in_h, cache.in_w);
    const auto ys = lerp_axis(cache.in_h, grad_out.h);
    const auto xs = lerp_axis(cache.in_w, grad_out.w);
    for (int i = 0; i < grad_out.n; ++i) {
        for (int ch = 0; ch < grad_out.c; ++ch) {
            const float* go = grad_out.sample(i) + ch * grad_out.plane();
            float* gi = grad_in.sample(i) + ch * grad_in.plane();
            for (int r = 0; r < grad_out.h; ++r) {
                const LerpIndex& ry = ys[r];
                for (int c = 0; c < grad_out.w; ++c) {
                    const LerpIndex& rx = xs[c];
                    const float g = go[static_cast<std::size_t>(r) * grad_out.w + c];
                    gi[static_cast<std::size_t>(ry.lo) * cache.in_w + rx.lo] +=
                        g * (1.0f - ry.w_hi) * (1.0f - rx.w_hi);
                    gi[static_cast<std::size_t>(ry.lo) * cache.in_w + rx.hi] +=
                        g * (1.0f - ry.w_hi) * rx.w_hi;
                    gi[static_cast<std::size_t>(ry.hi) * cache.in_w + rx.lo] +=
                        g * ry.w_hi * (1.0f - rx.w_hi);
                    gi[static_cast<std::size_t>(ry.hi) * cache.in_w + rx.hi] +=
                        g * ry.w_hi * rx.w_hi;
                }
            }
        }
    }
    return grad_in;
}

ConfidenceMap softmax_confidence(const Tensor4& logits, int sample) {
    ConfidenceMap map(logits.h, logits.w, logits.c);
    const std::size_t plane = logits.plane();
    const float* base = logits.sample(sample);
    std::vector<double> exps(logits.c);
    for (std::size_t k = 0; k < plane; ++k) {
        double row_max = -1e300;
        for (int ch = 0; ch < logits.c; ++ch) {
            row_max = std::max(row_max, static_cast<double>(base[ch * plane + k]));
        }
        double z = 0.0;
        for (int ch = 0; ch < logits.c; ++ch) {
            exps[ch] = std::exp(base[ch * plane + k] - row_max);
            z += exps[ch];
        }
        for (int ch = 0; ch < logits.c; ++ch) {
            map.probs[k * logits.c + ch] = static_cast<float>(exps[ch] / z);
        }
    }
    return map;
}

Sgd::Sgd(std::vector<Param*> params, SgdConfig config)
    : params_(std::move(params)), config_(config) {
    velocity_.reserve(params_.size());
    for (const Param* p : params_) velocity_.emplace_back(p->value.size(), 0.0f);
}

void Sgd::zero_grad() {
    for (Param* p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

void Sgd::step() {
    for (std::size_t b = 0; b < params_.size(); ++b) {
        Param& p = *params_[b];
        std::vector<float>& v = velocity_[b];
        const float mu = static_cast<float>(config_.momentum);
        const float wd = static_cast<float>(config_.weight_decay);
        const float lr = static_cast<float>(config_.lr);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            v[i] = mu * v[i] + p.grad[i] + wd * p.value[i];
            p.value[i] -= lr * v[i];
        }
    }
}

} // namespace semiseg
