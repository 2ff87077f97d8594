#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "semiseg/core/rng.hpp"
#include "semiseg/core/types.hpp"

namespace semiseg {

// NCHW float tensor.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {}

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    float* sample(int i) { return data.data() + static_cast<std::size_t>(i) * c * plane(); }
    const float* sample(int i) const {
        return data.data() + static_cast<std::size_t>(i) * c * plane();
    }
    float& at(int i, int ch, int r, int col) {
        return data[((static_cast<std::size_t>(i) * c + ch) * h + r) * w + col];
    }
    float at(int i, int ch, int r, int col) const {
        return data[((static_cast<std::size_t>(i) * c + ch) * h + r) * w + col];
    }
};

Tensor4 image_batch_to_tensor(const std::vector<Image>& images);

// One parameter block: values plus accumulated gradient.
struct Param {
    std::vector<float> value;
    std::vector<float> grad;

    void resize(std::size_t size) {
        value.assign(size, 0.0f);
        grad.assign(size, 0.0f);
    }
};

struct Conv2d {
    int in_c, out_c, kernel, stride, pad;
    Param weight; // (out_c, in_c, kernel, kernel)
    Param bias;

    Conv2d(int in_c, int out_c, int kernel, int stride, int pad, Rng rng);

    struct Cache {
        Tensor4 input;
    };

    Tensor4 forward(const Tensor4& x, Cache* cache) const;
    Tensor4 backward(const Cache& cache, const Tensor4& grad_out); // accumulates into grads
    std::pair<int, int> out_dims(int h, int w) const;
};

struct BatchNorm2d {
    int channels;
    Param gamma, beta;
    std::vector<float> running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNorm2d(int channels);

    struct Cache {
        Tensor4 x_hat;
        std::vector<float> mean, inv_std;
    };

    Tensor4 forward(const Tensor4& x, bool train, Cache* cache);
    Tensor4 backward(const Cache& cache, const Tensor4& grad_out);
};

struct Relu {
    struct Cache {
        std::vector<std::uint8_t> positive;
    };

    static Tensor4 forward(const Tensor4& x, Cache* cache);
    static Tensor4 backward(const Cache& cache, const Tensor4& grad_out);
};

// align_corners=false bilinear resize to a fixed output size; backward
// scatters gradients with the same interpolation weights.
struct BilinearResize {
    struct Cache {
        int in_h = 0, in_w = 0;
    };

    static Tensor4 forward(const Tensor4& x, int out_h, int out_w, Cache* cache);
    static Tensor4 backward(const Cache& cache, const Tensor4& grad_out);
};

// Per-pixel softmax over channels of one sample's logits.
ConfidenceMap softmax_confidence(const Tensor4& logits, int sample);

struct SgdConfig {
    double lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

// SGD with momentum: v = mu*v + g + wd*w; w -= lr*v.
class Sgd {
public:
    Sgd(std::vector<Param*> params, SgdConfig config);

    void set_lr(double lr) { config_.lr = lr; }
    double lr() const { return config_.lr; }
    void zero_grad();
    void step();

    std::vector<float>& momentum_buffer(std::size_t i) { return velocity_[i]; }
    std::size_t block_count() const { return params_.size(); }

private:
    std::vector<Param*> params_;
    std::vector<std::vector<float>> velocity_;
    SgdConfig config_;
};

} // namespace semiseg
