#include "semiseg/providers/attention.hpp"

#include <cmath>

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

TokenMatrix project(const TokenMatrix& tokens, const TokenMatrix& weights) {
    if (weights.size() == 0) return tokens;
    if (weights.cols() != tokens.cols()) {
        throw ProviderError("projection matrix width does not match token dimension");
    }
    return tokens * weights.transpose();
}

void check_finite(const TokenMatrix& tokens) {
    if (tokens.rows() < 1) throw DataError("token matrix must have at least one row");
    if (!tokens.allFinite()) throw NumericError("token matrix contains non-finite values");
}

TokenMatrix normalize_rows(TokenMatrix m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        float n = m.row(i).norm();
        if (n > 0.f) m.row(i) /= n;
    }
    return m;
}

} // namespace

TokenMatrix self_self_attention(const TokenMatrix& tokens, Projection projection,
                                double temperature, const ProjectionSet* projections) {
    if (temperature <= 0.0) throw ConfigError("attention temperature must be positive");
    check_finite(tokens);

    const TokenMatrix proj =
        normalize_rows(projections ? project(tokens, projections->select(projection)) : tokens);
    const TokenMatrix values =
        projections ? project(tokens, projections->value) : tokens;

    const Eigen::Index n = tokens.rows();
    TokenMatrix logits = proj * proj.transpose() / static_cast<float>(temperature);

    // Row-wise softmax, stabilized by the row max.
    TokenMatrix weights(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const float row_max = logits.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double e = std::exp(static_cast<double>(logits(i, j) - row_max));
            weights(i, j) = static_cast<float>(e);
            sum += e;
        }
        weights.row(i) /= static_cast<float>(sum);
    }
    return weights * values;
}

TokenMatrix self_self_ensemble(const TokenMatrix& tokens, double temperature,
                               const ProjectionSet* projections) {
    TokenMatrix out = self_self_attention(tokens, Projection::query, temperature, projections);
    out += self_self_attention(tokens, Projection::key, temperature, projections);
    out += self_self_attention(tokens, Projection::value, temperature, projections);
    return out / 3.f;
}

TokenMatrix apply_gem(TokenMatrix tokens, const GemConfig& config,
                      const ProjectionSet* projections) {
    const double temperature =
        config.temperature > 0.0 ? config.temperature : std::sqrt(static_cast<double>(tokens.cols()));
    for (int block = 0; block < config.depth; ++block) {
        tokens = self_self_ensemble(tokens, temperature, projections);
    }
    return tokens;
}

} // namespace semiseg
