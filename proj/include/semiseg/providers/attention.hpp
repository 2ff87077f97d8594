#pragma once

#include <Eigen/Dense>

#include "semiseg/core/types.hpp"

namespace semiseg {

// Token representations feeding self-self attention: one row per token.
using TokenMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Projection { query, key, value };

// Optional learned projections; an empty matrix means identity. Real
// encoders supply their own q/k/v weights, mocks usually run identity.
struct ProjectionSet {
    TokenMatrix query;
    TokenMatrix key;
    TokenMatrix value;

    const TokenMatrix& select(Projection p) const {
        switch (p) {
        case Projection::query: return query;
        case Projection::key: return key;
        default: return value;
        }
    }
};

// Attention where queries and keys come from the same projection (qq, kk
// or vv). Rows are L2-normalized before the similarity, the weight matrix
// is row-softmaxed at `temperature`, and the weights are applied to the
// value tokens.
TokenMatrix self_self_attention(const TokenMatrix& tokens, Projection projection,
                                double temperature, const ProjectionSet* projections = nullptr);

// One block of the grounding pipeline: the qq/kk/vv ensemble average.
TokenMatrix self_self_ensemble(const TokenMatrix& tokens, double temperature,
                               const ProjectionSet* projections = nullptr);

struct GemConfig {
    int depth = 4;             // ensemble blocks applied in sequence
    double temperature = 0.0;  // <= 0 selects sqrt(d_model)
};

// Applies `depth` ensemble blocks; the backbone of gem-style feature maps.
TokenMatrix apply_gem(TokenMatrix tokens, const GemConfig& config,
                      const ProjectionSet* projections = nullptr);

} // namespace semiseg
