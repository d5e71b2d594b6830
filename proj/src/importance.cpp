#include "lexrag/importance.hpp"

#include "lexrag/errors.hpp"
#include "lexrag/rng.hpp"

namespace lexrag {
namespace {

const std::string kSystemPrompt = "You answer questions using only the passage provided.";

std::string compose(const std::string& chunk_text, const std::string& query) {
    // c ⊕ q: the chunk precedes the query in one prompt
    return chunk_text + "\n\nQuestion: " + query + "\nAnswer concisely.";
}

double clamp01(double v) {
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

} // namespace

ImportanceEntry importance(const Chunk& chunk, const std::string& query, Llm& llm,
                           SimilarityScorer& similarity, std::size_t n_samples,
                           std::uint64_t rng_seed, std::uint32_t noise_ops) {
    ImportanceEntry entry;
    entry.n_samples = n_samples;

    const std::string baseline = llm.chat(kSystemPrompt, compose(chunk.text, query), "importance");

    for (std::size_t s = 0; s < n_samples; ++s) {
        // two independent draws per sample: the noise level and the stream
        // that decides which characters it hits
        const double lambda = u01_closed(mix64(rng_seed, 2 * s));
        const std::uint64_t noise_seed = mix64(rng_seed, 2 * s + 1);
        entry.lambdas.push_back(lambda);

        const std::string perturbed =
            inject_noise(chunk.text, NoiseSpec{lambda, noise_seed, noise_ops});
        const std::string prompt = compose(perturbed, query);

        bool scored = false;
        double value = 0.0;
        for (int attempt = 0; attempt < 2 && !scored; ++attempt) {
            try {
                const std::string response = llm.chat(kSystemPrompt, prompt, "importance");
                value = clamp01(similarity.score(baseline, response));
                scored = true;
            } catch (const Error&) {
                if (attempt == 1)
                    break; // retried once already: drop this sample
            }
        }
        if (scored) {
            entry.similarities.push_back(value);
            ++entry.n_effective;
        }
    }

    if (entry.n_effective == 0)
        throw EndpointUnavailableError("importance: every perturbation sample failed for chunk at sentences " +
                                       std::to_string(chunk.span_first) + "-" +
                                       std::to_string(chunk.span_last));

    double sum = 0.0;
    for (const double v : entry.similarities)
        sum += v;
    entry.score = clamp01(1.0 - sum / static_cast<double>(entry.n_effective));
    return entry;
}

ImportanceReport score_all(std::span<const Chunk> chunks, const std::string& query, Llm& llm,
                           SimilarityScorer& similarity, std::size_t n_samples,
                           std::uint64_t master_seed, std::uint32_t noise_ops) {
    ImportanceReport report;
    report.entries.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i)
        report.entries.push_back(importance(chunks[i], query, llm, similarity, n_samples,
                                            mix64(master_seed, i), noise_ops));
    return report;
}

} // namespace lexrag
