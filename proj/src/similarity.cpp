#include "lexrag/similarity.hpp"

#include <chrono>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "lexrag/errors.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

double LexicalCosineScorer::score(std::string_view a, std::string_view b) {
    if (a == b)
        return 1.0;
    const std::vector<std::string> ta = tokenize(a);
    const std::vector<std::string> tb = tokenize(b);
    if (ta.empty() && tb.empty())
        return 1.0;
    if (ta.empty() || tb.empty())
        return 0.0;

    std::unordered_map<std::string_view, std::pair<double, double>> freq;
    for (const std::string& t : ta)
        freq[t].first += 1.0;
    for (const std::string& t : tb)
        freq[t].second += 1.0;

    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [tok, f] : freq) {
        dot += f.first * f.second;
        na += f.first * f.first;
        nb += f.second * f.second;
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom == 0.0)
        return 0.0;
    const double cos = dot / denom;
    return cos < 0.0 ? 0.0 : (cos > 1.0 ? 1.0 : cos);
}

EmbeddingCosineScorer::EmbeddingCosineScorer(std::string base_url, std::string model,
                                             double timeout_s)
    : base_url_(std::move(base_url)), model_(std::move(model)), timeout_s_(timeout_s) {}

double EmbeddingCosineScorer::score(std::string_view a, std::string_view b) {
    if (a == b)
        return 1.0;

    httplib::Client client(base_url_);
    const auto timeout = std::chrono::milliseconds(static_cast<long>(timeout_s_ * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const nlohmann::json payload = {
        {"model", model_},
        {"input", {std::string(a), std::string(b)}},
    };
    const auto res = client.Post("/v1/embeddings", payload.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            throw TimeoutError("embedding endpoint timed out: " + base_url_);
        throw EndpointUnavailableError("embedding endpoint unreachable: " + base_url_ + " (" +
                                       httplib::to_string(err) + ")");
    }
    if (res->status != 200)
        throw EndpointUnavailableError("embedding endpoint returned HTTP " +
                                       std::to_string(res->status));

    std::vector<double> va, vb;
    try {
        const auto body = nlohmann::json::parse(res->body);
        va = body.at("data").at(0).at("embedding").get<std::vector<double>>();
        vb = body.at("data").at(1).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseFailureError(std::string("malformed embedding response: ") + e.what());
    }
    if (va.size() != vb.size() || va.empty())
        throw ParseFailureError("embedding response has mismatched or empty vectors");

    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom == 0.0)
        return 0.0;
    const double cos = dot / denom;
    return cos < 0.0 ? 0.0 : (cos > 1.0 ? 1.0 : cos);
}

} // namespace lexrag
