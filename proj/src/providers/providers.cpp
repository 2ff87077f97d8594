#include "semiseg/providers/providers.hpp"

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {
constexpr const char* kPlaceholder = "{classlabel}";
}

std::vector<std::string> expand_prompts(const ClassVocabulary& vocab,
                                        const std::string& template_str) {
    const std::size_t pos = template_str.find(kPlaceholder);
    if (pos == std::string::npos) {
        throw ConfigError("prompt template is missing the {classlabel} placeholder: \"" +
                          template_str + "\"");
    }
    if (template_str.find(kPlaceholder, pos + 1) != std::string::npos) {
        throw ConfigError("prompt template must contain exactly one {classlabel} placeholder");
    }
    std::vector<std::string> prompts;
    prompts.reserve(vocab.names().size());
    for (const auto& name : vocab.names()) {
        std::string p = template_str;
        p.replace(pos, std::string(kPlaceholder).size(), name);
        prompts.push_back(std::move(p));
    }
    return prompts;
}

std::vector<std::vector<float>> build_text_embeddings(const ClassVocabulary& vocab,
                                                      const std::string& template_str,
                                                      const TextEmbedder& embedder) {
    const auto prompts = expand_prompts(vocab, template_str);
    auto vectors = embedder.embed(prompts);
    if (vectors.size() != prompts.size()) {
        throw ProviderError("text embedder returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(prompts.size()) + " prompts");
    }
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != embedder.embedding_dim()) {
            throw ProviderError("text embedding dimension mismatch");
        }
    }
    return vectors;
}

} // namespace semiseg
