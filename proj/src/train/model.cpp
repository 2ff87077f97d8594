#include "semiseg/train/model.hpp"

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

Rng seeded(std::uint64_t seed, std::uint64_t salt) { return Rng(seed).substream(salt); }

} // namespace

ReferenceModel::ReferenceModel(int num_classes, std::uint64_t seed, int width)
    : num_classes_(num_classes),
      width_(width),
      conv1_(3, width / 2, 3, 1, 1, seeded(seed, 1)),
      conv2_(width / 2, width, 3, 2, 1, seeded(seed, 2)),
      conv3_(width, width, 3, 1, 1, seeded(seed, 3)),
      conv4_(width, width, 3, 1, 1, seeded(seed, 4)),
      conv5_(width, num_classes, 1, 1, 0, seeded(seed, 5)),
      bn1_(width / 2),
      bn2_(width),
      bn3_(width),
      bn4_(width) {
    if (num_classes < 2) throw ConfigError("model needs at least two classes");
    if (width < 4 || width % 2 != 0) throw ConfigError("model width must be even and >= 4");
}

Tensor4 ReferenceModel::encode(const Tensor4& images, bool train) {
    Tensor4 t = conv1_.forward(images, nullptr);
    t = bn1_.forward(t, train, nullptr);
    t = Relu::forward(t, nullptr);
    t = conv2_.forward(t, nullptr);
    t = bn2_.forward(t, train, nullptr);
    t = Relu::forward(t, nullptr);
    t = conv3_.forward(t, nullptr);
    t = bn3_.forward(t, train, nullptr);
    return Relu::forward(t, nullptr);
}

Tensor4 ReferenceModel::decode(const Tensor4& activations, int out_h, int out_w, bool train) {
    Tensor4 t = conv4_.forward(activations, nullptr);
    t = bn4_.forward(t, train, nullptr);
    t = Relu::forward(t, nullptr);
    t = conv5_.forward(t, nullptr);
    return BilinearResize::forward(t, out_h, out_w, nullptr);
}

Tensor4 ReferenceModel::full(const Tensor4& images, bool train) {
    return decode(encode(images, train), images.h, images.w, train);
}

std::size_t ReferenceModel::parameter_count() const {
    const Param* blocks[] = {&conv1_.weight, &conv1_.bias, &bn1_.gamma, &bn1_.beta,
                             &conv2_.weight, &conv2_.bias, &bn2_.gamma, &bn2_.beta,
                             &conv3_.weight, &conv3_.bias, &bn3_.gamma, &bn3_.beta,
                             &conv4_.weight, &conv4_.bias, &bn4_.gamma, &bn4_.beta,
                             &conv5_.weight, &conv5_.bias};
    std::size_t count = 0;
    for (const Param* p : blocks) count += p->value.size();
    return count;
}

Tensor4 ReferenceModel::encode_train(const Tensor4& images, EncodeCtx& ctx) {
    Tensor4 t = conv1_.forward(images, &ctx.conv1);
    t = bn1_.forward(t, true, &ctx.bn1);
    t = Relu::forward(t, &ctx.relu1);
    t = conv2_.forward(t, &ctx.conv2);
    t = bn2_.forward(t, true, &ctx.bn2);
    t = Relu::forward(t, &ctx.relu2);
    t = conv3_.forward(t, &ctx.conv3);
    t = bn3_.forward(t, true, &ctx.bn3);
    return Relu::forward(t, &ctx.relu3);
}

Tensor4 ReferenceModel::decode_train(const Tensor4& activations, int out_h, int out_w,
                                     DecodeCtx& ctx) {
    Tensor4 t = conv4_.forward(activations, &ctx.conv4);
    t = bn4_.forward(t, true, &ctx.bn4);
    t = Relu::forward(t, &ctx.relu4);
    t = conv5_.forward(t, &ctx.conv5);
    return BilinearResize::forward(t, out_h, out_w, &ctx.resize);
}

Tensor4 ReferenceModel::decode_backward(DecodeCtx& ctx, const Tensor4& grad_logits) {
    Tensor4 g = BilinearResize::backward(ctx.resize, grad_logits);
    g = conv5_.backward(ctx.conv5, g);
    g = Relu::backward(ctx.relu4, g);
    g = bn4_.backward(ctx.bn4, g);
    return conv4_.backward(ctx.conv4, g);
}

Tensor4 ReferenceModel::encode_backward(EncodeCtx& ctx, const Tensor4& grad_activations) {
    Tensor4 g = Relu::backward(ctx.relu3, grad_activations);
    g = bn3_.backward(ctx.bn3, g);
    g = conv3_.backward(ctx.conv3, g);
    g = Relu::backward(ctx.relu2, g);
    g = bn2_.backward(ctx.bn2, g);
    g = conv2_.backward(ctx.conv2, g);
    g = Relu::backward(ctx.relu1, g);
    g = bn1_.backward(ctx.bn1, g);
    return conv1_.backward(ctx.conv1, g);
}

std::vector<Param*> ReferenceModel::parameters() {
    return {&conv1_.weight, &conv1_.bias, &bn1_.gamma, &bn1_.beta,
            &conv2_.weight, &conv2_.bias, &bn2_.gamma, &bn2_.beta,
            &conv3_.weight, &conv3_.bias, &bn3_.gamma, &bn3_.beta,
            &conv4_.weight, &conv4_.bias, &bn4_.gamma, &bn4_.beta,
            &conv5_.weight, &conv5_.bias};
}

std::vector<std::vector<float>*> ReferenceModel::buffers() {
    return {&bn1_.running_mean, &bn1_.running_var, &bn2_.running_mean, &bn2_.running_var,
            &bn3_.running_mean, &bn3_.running_var, &bn4_.running_mean, &bn4_.running_var};
}

std::unique_ptr<ReferenceModel> make_reference_model(int num_classes, std::uint64_t seed,
                                                     int width) {
    return std::make_unique<ReferenceModel>(num_classes, seed, width);
}

} // namespace semiseg
