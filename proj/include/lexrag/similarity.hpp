#pragma once

#include <string>
#include <string_view>

namespace lexrag {

/// Similarity over answer texts, in [0,1]; symmetric and 1 on identical inputs.
class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    virtual double score(std::string_view a, std::string_view b) = 0;
    virtual std::string name() const = 0;
};

/// Cosine over normalized token-frequency vectors. Fully local, no network.
/// Two texts with no tokens at all count as identical (1.0); one empty side
/// is orthogonal to anything (0.0).
class LexicalCosineScorer final : public SimilarityScorer {
public:
    double score(std::string_view a, std::string_view b) override;
    std::string name() const override { return "lexical"; }
};

/// Cosine over vectors from an external embedding HTTP endpoint
/// (POST {base_url}/v1/embeddings, OpenAI-style payload). Negative cosines
/// clamp to 0 so the result stays in [0,1].
class EmbeddingCosineScorer final : public SimilarityScorer {
public:
    EmbeddingCosineScorer(std::string base_url, std::string model, double timeout_s = 120.0);

    double score(std::string_view a, std::string_view b) override;
    std::string name() const override { return "embedding"; }

private:
    std::string base_url_;
    std::string model_;
    double timeout_s_;
};

} // namespace lexrag
