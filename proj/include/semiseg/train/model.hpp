#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "semiseg/train/nn.hpp"

namespace semiseg {

// F = D(E(x)): encode yields the activation grid the feature perturbation
// acts on, decode turns activations into per-pixel class logits at the
// requested resolution.
class ModelInterface {
public:
    virtual ~ModelInterface() = default;

    virtual Tensor4 encode(const Tensor4& images, bool train) = 0;
    virtual Tensor4 decode(const Tensor4& activations, int out_h, int out_w, bool train) = 0;
    virtual Tensor4 full(const Tensor4& images, bool train) = 0;
    virtual std::size_t parameter_count() const = 0;
};

// Small fully-convolutional segmentation net: three-conv encoder with one
// stride-2 stage, two-conv decoder head, bilinear restore to input
// resolution. Deterministically initialized from the seed.
class ReferenceModel : public ModelInterface {
public:
    ReferenceModel(int num_classes, std::uint64_t seed, int width = 32);

    Tensor4 encode(const Tensor4& images, bool train) override;
    Tensor4 decode(const Tensor4& activations, int out_h, int out_w, bool train) override;
    Tensor4 full(const Tensor4& images, bool train) override;
    std::size_t parameter_count() const override;

    int num_classes() const { return num_classes_; }

    // Train-time entry points carrying explicit caches so several branches
    // can run forward before any backward; gradients accumulate in the
    // parameter blocks until the optimizer consumes them.
    struct EncodeCtx {
        Conv2d::Cache conv1, conv2, conv3;
        BatchNorm2d::Cache bn1, bn2, bn3;
        Relu::Cache relu1, relu2, relu3;
    };
    struct DecodeCtx {
        Conv2d::Cache conv4, conv5;
        BatchNorm2d::Cache bn4;
        Relu::Cache relu4;
        BilinearResize::Cache resize;
    };

    Tensor4 encode_train(const Tensor4& images, EncodeCtx& ctx);
    Tensor4 decode_train(const Tensor4& activations, int out_h, int out_w, DecodeCtx& ctx);
    Tensor4 encode_backward(EncodeCtx& ctx, const Tensor4& grad_activations);
    Tensor4 decode_backward(DecodeCtx& ctx, const Tensor4& grad_logits);

    std::vector<Param*> parameters();
    std::vector<std::vector<float>*> buffers(); // batch-norm running stats

private:
    int num_classes_;
    int width_;
    Conv2d conv1_, conv2_, conv3_, conv4_, conv5_;
    BatchNorm2d bn1_, bn2_, bn3_, bn4_;
};

std::unique_ptr<ReferenceModel> make_reference_model(int num_classes, std::uint64_t seed,
                                                     int width = 32);

} // namespace semiseg
