// lexrag — embedding-free retrieval QA over a single document.
//
// Subcommands: ask (answer a question), count (exact occurrence counts),
// importance (perturbation scores for round-1 chunks), bench (dataset run).
// Exit codes: 0 success, 1 usage/input error, 2 backend failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lexrag/bench.hpp"
#include "lexrag/config.hpp"
#include "lexrag/errors.hpp"
#include "lexrag/pipeline.hpp"

namespace {

using namespace lexrag;

struct FlagValues {
    std::string config_path;
    std::string model_url;
    std::string model_name;
    double temperature = 0.7;
    std::uint64_t seed = 42;
    std::uint64_t recall_index = 25;
    std::uint64_t neighbor_num = 5;
    std::uint64_t deep_search_index = 5;
    std::uint64_t deep_search_num = 10;
    std::uint64_t voter_num = 10;
    std::uint64_t iter_max = 5;
    std::uint64_t importance_samples = 3;
    std::string similarity = "lexical";
    std::string scripted;
    std::string embed_url;
    std::string embed_model;
    double timeout_s = 120.0;
    std::string format = "text";
    std::string transcript_log;
};

void add_pipeline_flags(CLI::App& app, FlagValues& v) {
    app.add_option("--config", v.config_path, "config file (key = value lines)");
    app.add_option("--model-url", v.model_url, "chat endpoint base URL");
    app.add_option("--model-name", v.model_name, "chat model name");
    app.add_option("--temperature", v.temperature, "sampling temperature");
    app.add_option("--seed", v.seed, "master RNG seed for noise sampling");
    app.add_option("--recall-index", v.recall_index, "top-K sentences collected per round");
    app.add_option("--neighbor-num", v.neighbor_num, "context radius in sentences");
    app.add_option("--deep-search-index", v.deep_search_index,
                   "highest-scored chunks fed to depth extension");
    app.add_option("--deep-search-num", v.deep_search_num,
                   "max new terms accepted per extension round");
    app.add_option("--voter-num", v.voter_num, "answer votes in the Organizing stage");
    app.add_option("--iter-max", v.iter_max, "search-space extension budget");
    app.add_option("--importance-samples", v.importance_samples,
                   "noise perturbations per chunk");
    app.add_option("--similarity", v.similarity, "answer-similarity backend")
        ->check(CLI::IsMember({"lexical", "embedding"}));
    app.add_option("--scripted", v.scripted,
                   "scripted-response fixture; replaces the HTTP backend");
    app.add_option("--embed-url", v.embed_url, "embedding endpoint base URL");
    app.add_option("--embed-model", v.embed_model, "embedding model name");
    app.add_option("--timeout", v.timeout_s, "HTTP timeout in seconds");
    app.add_option("--format", v.format, "output format")
        ->check(CLI::IsMember({"text", "json"}));
    app.add_option("--log-transcript", v.transcript_log,
                   "write a JSON-lines transcript of every model call");
}

/// defaults < config file < flags actually given on the command line
PipelineConfig build_config(const CLI::App& cmd, const FlagValues& v) {
    PipelineConfig config;
    if (cmd.count("--config"))
        apply_config_file(config, v.config_path);
    if (cmd.count("--model-url"))
        config.backend.model_url = v.model_url;
    if (cmd.count("--model-name"))
        config.backend.model = v.model_name;
    if (cmd.count("--temperature"))
        config.backend.temperature = v.temperature;
    if (cmd.count("--seed"))
        config.seed = v.seed;
    if (cmd.count("--recall-index"))
        config.recall_index = v.recall_index;
    if (cmd.count("--neighbor-num"))
        config.neighbor_num = static_cast<std::uint32_t>(v.neighbor_num);
    if (cmd.count("--deep-search-index"))
        config.deep_search_index = v.deep_search_index;
    if (cmd.count("--deep-search-num"))
        config.deep_search_num = v.deep_search_num;
    if (cmd.count("--voter-num"))
        config.voter_num = v.voter_num;
    if (cmd.count("--iter-max"))
        config.iter_max = v.iter_max;
    if (cmd.count("--importance-samples"))
        config.importance_samples = v.importance_samples;
    if (cmd.count("--similarity"))
        config.similarity_backend = v.similarity;
    if (cmd.count("--scripted"))
        config.backend.scripted_fixture = v.scripted;
    if (cmd.count("--embed-url"))
        config.backend.embed_url = v.embed_url;
    if (cmd.count("--embed-model"))
        config.backend.embed_model = v.embed_model;
    if (cmd.count("--timeout"))
        config.backend.timeout_s = v.timeout_s;
    if (cmd.count("--log-transcript"))
        config.transcript_log = v.transcript_log;
    config.validate();
    return config;
}

std::string read_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open document: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<Choice> parse_choices(const std::vector<std::string>& raw) {
    std::vector<Choice> choices;
    for (const std::string& item : raw) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--choice expects LABEL=text, got \"" + item + "\"");
        choices.push_back(Choice{item.substr(0, eq), item.substr(eq + 1)});
    }
    return choices;
}

int cmd_ask(const CLI::App& cmd, const FlagValues& v, const std::string& doc_path,
            const std::string& query, const std::vector<std::string>& raw_choices) {
    const PipelineConfig config = build_config(cmd, v);
    const std::vector<Choice> choices = parse_choices(raw_choices);
    const PreparedDocument prepared = prepare_document(doc_path, read_document(doc_path));
    const AnswerReport report = answer_query(prepared, query, choices, config);
    if (v.format == "json") {
        nlohmann::json j = report.to_json(true);
        j["timings"]["prepare_s"] = prepared.prepare_s;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "answer: " << report.final_answer << '\n'
                  << "path: " << report.path << '\n'
                  << "iterations: " << report.iterations << '\n';
        if (report.low_confidence)
            std::cout << "low confidence: nothing was retrieved before the budget ran out\n";
    }
    return 0;
}

int cmd_count(const CLI::App& cmd, const FlagValues& v, const std::string& doc_path,
              const std::string& phrase_text, bool no_llm) {
    const PipelineConfig config = build_config(cmd, v);
    const Phrase phrase = normalize_phrase(phrase_text);
    if (phrase.empty())
        throw ConfigError("phrase normalizes to nothing: \"" + phrase_text + "\"");

    std::vector<Phrase> variants;
    if (no_llm) {
        variants.push_back(phrase); // literal counting: zero backend calls
    } else {
        Llm llm = make_llm(config);
        variants = llm.expand_variants(phrase);
    }
    const Document doc = make_document(doc_path, read_document(doc_path));
    const CountResult counts = count_occurrences(doc, variants);

    if (v.format == "json") {
        nlohmann::json items = nlohmann::json::array();
        for (std::size_t i = 0; i < variants.size(); ++i)
            items.push_back({{"text", variants[i].text()}, {"count", counts.per_variant[i]}});
        const nlohmann::json j = {
            {"phrase", phrase.text()}, {"variants", std::move(items)}, {"total", counts.total}};
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "phrase: " << phrase.text() << '\n';
        for (std::size_t i = 0; i < variants.size(); ++i)
            std::cout << "  " << variants[i].text() << ": " << counts.per_variant[i] << '\n';
        std::cout << "total: " << counts.total << '\n';
    }
    return 0;
}

int cmd_importance(const CLI::App& cmd, const FlagValues& v, const std::string& doc_path,
                   const std::string& query) {
    const PipelineConfig config = build_config(cmd, v);
    const PreparedDocument prepared = prepare_document(doc_path, read_document(doc_path));
    Llm llm = make_llm(config);
    const auto similarity = make_similarity(config);

    // round-1 retrieval, then perturbation scoring of each merged chunk
    const TermSet terms = llm.generate_terms(query);
    const std::vector<ScoredSentence> ranked =
        collect_topk(prepared.index, prepared.doc, terms, config.recall_index);
    std::vector<Chunk> chunks;
    for (const ScoredSentence& hit : ranked)
        chunks.push_back(expand_context(prepared.doc, hit.index, config.neighbor_num, hit.score));
    chunks = merge_chunks(prepared.doc, chunks);
    const ImportanceReport report = score_all(chunks, query, llm, *similarity,
                                              config.importance_samples, config.seed);

    if (v.format == "json") {
        nlohmann::json items = nlohmann::json::array();
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const ImportanceEntry& e = report.entries[i];
            items.push_back({
                {"span", {chunks[i].span_first, chunks[i].span_last}},
                {"overlap", chunks[i].score},
                {"importance", e.score},
                {"n_samples", e.n_samples},
                {"n_effective", e.n_effective},
                {"lambdas", e.lambdas},
                {"similarities", e.similarities},
            });
        }
        std::cout << nlohmann::json({{"chunks", std::move(items)}}).dump(2) << '\n';
    } else {
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const ImportanceEntry& e = report.entries[i];
            std::cout << "chunk " << i + 1 << " [" << chunks[i].span_first << "-"
                      << chunks[i].span_last << "] importance " << e.score << " (" << e.n_effective
                      << "/" << e.n_samples << " samples";
            std::cout << "; lambdas";
            for (const double l : e.lambdas)
                std::cout << ' ' << l;
            std::cout << "; similarities";
            for (const double s : e.similarities)
                std::cout << ' ' << s;
            std::cout << ")\n";
        }
        if (chunks.empty())
            std::cout << "no chunks retrieved\n";
    }
    return 0;
}

int cmd_bench(const CLI::App& cmd, const FlagValues& v, const std::string& dataset_path,
              const std::string& format_name, bool lenient, const std::string& records_path) {
    const PipelineConfig config = build_config(cmd, v);
    const std::vector<BenchItem> items =
        load_dataset(dataset_path, parse_dataset_format(format_name), lenient);
    const BenchSummary summary = run_bench(items, config);
    if (!records_path.empty())
        write_records(summary, records_path);
    if (v.format == "json")
        std::cout << summary.to_json(true).dump(2) << '\n';
    else
        std::cout << format_summary(summary);
    return 0;
}

std::string config_key_footer() {
    std::string footer = "Config file keys (key = value, '#' comments):\n";
    for (const auto& [key, description] : config_keys())
        footer += "  " + key + std::string(key.size() < 20 ? 20 - key.size() : 1, ' ') +
                  description + "\n";
    return footer;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding-free retrieval question answering"};
    app.require_subcommand(1);
    app.footer(config_key_footer());

    FlagValues v;
    std::string doc_path, query, phrase_text, dataset_path, records_path;
    std::string dataset_format = "generic-json";
    std::vector<std::string> raw_choices;
    bool no_llm = false;
    bool lenient = false;

    CLI::App* ask = app.add_subcommand("ask", "answer a question over one document");
    ask->add_option("--doc", doc_path, "document file (UTF-8 plain text)")->required();
    ask->add_option("--query", query, "the question")->required();
    ask->add_option("--choice", raw_choices, "multiple-choice option as LABEL=text (repeatable)");
    add_pipeline_flags(*ask, v);

    CLI::App* count = app.add_subcommand("count", "exact occurrence counts for a phrase");
    count->add_option("--doc", doc_path, "document file")->required();
    count->add_option("--phrase", phrase_text, "phrase to count")->required();
    count->add_flag("--no-llm", no_llm, "count only the literal phrase, no variant expansion");
    add_pipeline_flags(*count, v);

    CLI::App* imp = app.add_subcommand("importance", "perturbation scores for round-1 chunks");
    imp->add_option("--doc", doc_path, "document file")->required();
    imp->add_option("--query", query, "the question")->required();
    add_pipeline_flags(*imp, v);

    CLI::App* bench = app.add_subcommand("bench", "run a multiple-choice dataset");
    bench->add_option("--dataset", dataset_path, "dataset file")->required();
    bench->add_option("--dataset-format", dataset_format,
                      "generic-json | novelqa-json | marathon-json");
    bench->add_flag("--lenient", lenient, "skip malformed dataset entries instead of failing");
    bench->add_option("--records", records_path, "write per-item JSON-lines records here");
    add_pipeline_flags(*bench, v);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (ask->parsed())
            return cmd_ask(*ask, v, doc_path, query, raw_choices);
        if (count->parsed())
            return cmd_count(*count, v, doc_path, phrase_text, no_llm);
        if (imp->parsed())
            return cmd_importance(*imp, v, doc_path, query);
        return cmd_bench(*bench, v, dataset_path, dataset_format, lenient, records_path);
    } catch (const PipelineError& e) {
        std::cerr << "backend failure: " << e.what() << '\n';
        if (v.format == "json")
            std::cerr << e.partial().to_json(false).dump(2) << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const EmptyVariantError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "backend failure: " << e.what() << '\n';
        return 2;
    }
}
