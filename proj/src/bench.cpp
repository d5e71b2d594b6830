#include "lexrag/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lexrag/errors.hpp"

namespace fs = std::filesystem;

namespace lexrag {
namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DatasetError("cannot open file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Shared mutable state while parsing one dataset file.
struct LoadContext {
    fs::path base_dir;
    std::map<std::string, std::string> inline_keys; // context text → short doc key
};

std::string pick_string(const nlohmann::json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys)
        if (j.contains(k) && j[k].is_string())
            return j[k].get<std::string>();
    return {};
}

void attach_context(BenchItem& item, const nlohmann::json& j, LoadContext& ctx,
                    std::initializer_list<const char*> inline_keys,
                    std::initializer_list<const char*> file_keys) {
    const std::string inline_text = pick_string(j, inline_keys);
    if (!inline_text.empty()) {
        item.context = inline_text;
        const auto [it, inserted] = ctx.inline_keys.try_emplace(
            item.context, "inline:" + std::to_string(ctx.inline_keys.size() + 1));
        item.doc_key = it->second;
        return;
    }
    const std::string file = pick_string(j, file_keys);
    if (!file.empty()) {
        const fs::path resolved = fs::path(file).is_absolute() ? fs::path(file)
                                                               : ctx.base_dir / file;
        item.context = read_file(resolved);
        item.doc_key = resolved.generic_string();
        return;
    }
    throw DatasetError("item has no context (inline or file)");
}

std::vector<Choice> labeled_choices(const nlohmann::json& options) {
    std::vector<Choice> choices;
    if (options.is_object()) {
        for (const auto& [label, text] : options.items())
            choices.push_back(Choice{label, text.is_string() ? text.get<std::string>() : text.dump()});
    } else if (options.is_array()) {
        // positional labels A, B, C, ...
        char label = 'A';
        for (const auto& text : options) {
            if (!text.is_string())
                throw DatasetError("options array must contain strings");
            choices.push_back(Choice{std::string(1, label++), text.get<std::string>()});
        }
    } else {
        throw DatasetError("options must be an object or an array");
    }
    return choices;
}

BenchItem parse_generic(const nlohmann::json& j, LoadContext& ctx) {
    BenchItem item;
    item.question = pick_string(j, {"question"});
    attach_context(item, j, ctx, {"context"}, {"context_file"});
    if (!j.contains("choices") || !j["choices"].is_array())
        throw DatasetError("item has no choices array");
    for (const auto& c : j["choices"]) {
        if (!c.is_object() || !c.contains("label") || !c.contains("text"))
            throw DatasetError("each choice needs label and text");
        item.choices.push_back(Choice{c["label"].get<std::string>(), c["text"].get<std::string>()});
    }
    item.gold = pick_string(j, {"gold"});
    item.category = pick_string(j, {"category"});
    item.id = pick_string(j, {"id"});
    return item;
}

BenchItem parse_novelqa(const nlohmann::json& j, LoadContext& ctx) {
    BenchItem item;
    item.question = pick_string(j, {"question", "Question"});
    attach_context(item, j, ctx, {"book", "context"}, {"book_file", "context_file"});
    if (!j.contains("options") && !j.contains("Options"))
        throw DatasetError("item has no options");
    item.choices = labeled_choices(j.contains("options") ? j["options"] : j["Options"]);
    item.gold = pick_string(j, {"answer", "gold", "Answer"});
    item.category = pick_string(j, {"aspect", "complexity", "category"});
    item.id = pick_string(j, {"id", "question_id"});
    return item;
}

BenchItem parse_marathon(const nlohmann::json& j, LoadContext& ctx) {
    BenchItem item;
    item.question = pick_string(j, {"question"});
    attach_context(item, j, ctx, {"context"}, {"context_file"});
    if (!j.contains("options"))
        throw DatasetError("item has no options");
    item.choices = labeled_choices(j["options"]);
    item.gold = pick_string(j, {"answer", "gold"});
    item.category = pick_string(j, {"type", "task", "category"});
    item.id = pick_string(j, {"id"});
    return item;
}

void validate_item(const BenchItem& item) {
    if (item.question.empty())
        throw DatasetError("item has an empty question");
    if (item.context.empty())
        throw DatasetError("item has an empty context");
    if (item.choices.empty())
        throw DatasetError("item has no choices");
    for (std::size_t i = 0; i < item.choices.size(); ++i) {
        if (item.choices[i].label.empty())
            throw DatasetError("choice label is empty");
        for (std::size_t k = i + 1; k < item.choices.size(); ++k)
            if (item.choices[i].label == item.choices[k].label)
                throw DatasetError("duplicate choice label \"" + item.choices[i].label + "\"");
    }
    if (item.gold.empty())
        throw DatasetError("item has no gold label");
    bool found = false;
    for (const Choice& c : item.choices)
        found = found || c.label == item.gold;
    if (!found)
        throw DatasetError("gold label \"" + item.gold + "\" is not among the choices");
}

BenchItem parse_item(const nlohmann::json& j, DatasetFormat format, LoadContext& ctx) {
    if (!j.is_object())
        throw DatasetError("entry is not a JSON object");
    BenchItem item;
    switch (format) {
    case DatasetFormat::generic_json: item = parse_generic(j, ctx); break;
    case DatasetFormat::novelqa_json: item = parse_novelqa(j, ctx); break;
    case DatasetFormat::marathon_json: item = parse_marathon(j, ctx); break;
    }
    if (item.category.empty())
        item.category = "default";
    validate_item(item);
    return item;
}

/// Nearest-rank percentile over an ascending vector.
double percentile(const std::vector<double>& ascending, double p) {
    if (ascending.empty())
        return 0.0;
    const auto rank = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(ascending.size())));
    return ascending[rank == 0 ? 0 : rank - 1];
}

std::string format_seconds(double s) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

} // namespace

DatasetFormat parse_dataset_format(std::string_view name) {
    if (name == "generic-json")
        return DatasetFormat::generic_json;
    if (name == "novelqa-json")
        return DatasetFormat::novelqa_json;
    if (name == "marathon-json")
        return DatasetFormat::marathon_json;
    throw ConfigError("unknown dataset format: " + std::string(name) +
                      " (expected generic-json, novelqa-json or marathon-json)");
}

std::vector<BenchItem> load_dataset(const std::string& path, DatasetFormat format, bool lenient) {
    const std::string text = read_file(path);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw DatasetError("empty dataset file: " + path);

    LoadContext ctx;
    ctx.base_dir = fs::path(path).parent_path();

    // (location label, raw entry) pairs: a whole-file JSON array or JSON lines
    std::vector<std::pair<std::string, nlohmann::json>> entries;
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (text[first] == '[') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError(path + ": malformed JSON array: " + e.what());
        }
        std::size_t n = 0;
        for (auto& entry : doc)
            entries.emplace_back("entry " + std::to_string(++n), std::move(entry));
    } else {
        std::istringstream lines(text);
        std::string line;
        for (std::size_t lineno = 1; std::getline(lines, line); ++lineno) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            const std::string where = "line " + std::to_string(lineno);
            try {
                entries.emplace_back(where, nlohmann::json::parse(line));
            } catch (const nlohmann::json::exception& e) {
                if (!lenient)
                    throw DatasetError(path + ": " + where + ": " + e.what());
                std::cerr << path << ": " << where << ": skipped (" << e.what() << ")\n";
            }
        }
    }

    std::vector<BenchItem> items;
    std::size_t ordinal = 0;
    for (auto& [where, entry] : entries) {
        ++ordinal;
        try {
            BenchItem item = parse_item(entry, format, ctx);
            if (item.id.empty())
                item.id = "item-" + std::to_string(ordinal);
            items.push_back(std::move(item));
        } catch (const DatasetError& e) {
            if (!lenient)
                throw DatasetError(path + ": " + where + ": " + e.what());
            std::cerr << path << ": " << where << ": skipped (" << e.what() << ")\n";
        }
    }
    if (items.empty())
        throw DatasetError(path + ": no valid items");
    return items;
}

BenchSummary run_bench(std::span<const BenchItem> items, const PipelineConfig& config) {
    if (items.empty())
        throw DatasetError("bench run needs at least one item");
    config.validate();

    BenchSummary summary;

    // prepare each distinct document once, in first-appearance order
    std::map<std::string, std::size_t> doc_pos;
    std::vector<PreparedDocument> docs;
    for (const BenchItem& item : items) {
        const auto [it, inserted] = doc_pos.try_emplace(item.doc_key, docs.size());
        if (inserted) {
            docs.push_back(prepare_document(item.doc_key, item.context));
            summary.documents.push_back(
                DocumentStats{item.doc_key, item.context.size(), docs.back().prepare_s, 0});
        }
        ++summary.documents[it->second].items;
    }

    Llm llm = make_llm(config);
    const auto similarity = make_similarity(config);

    for (const BenchItem& item : items) {
        const std::size_t pos = doc_pos.at(item.doc_key);
        const AnswerReport report =
            answer_query(docs[pos], item.question, item.choices, config, llm, *similarity);

        BenchRecord rec;
        rec.item_id = item.id;
        rec.doc_key = item.doc_key;
        rec.category = item.category;
        rec.predicted = report.final_answer;
        rec.gold = item.gold;
        rec.correct = report.final_answer == item.gold;
        rec.path = report.path;
        rec.prepare_share_s =
            summary.documents[pos].prepare_s / static_cast<double>(summary.documents[pos].items);
        rec.retrieve_s = report.timings.retrieve_s;
        rec.generate_s = report.timings.generate_s;
        summary.records.push_back(std::move(rec));
    }

    summary.total_items = summary.records.size();
    double retrieve_sum = 0.0, generate_sum = 0.0;
    std::vector<double> per_item;
    per_item.reserve(summary.records.size());
    for (const BenchRecord& rec : summary.records) {
        if (rec.correct)
            ++summary.correct_items;
        CategoryStats& cat = summary.per_category[rec.category];
        ++cat.total;
        if (rec.correct)
            ++cat.correct;
        retrieve_sum += rec.retrieve_s;
        generate_sum += rec.generate_s;
        per_item.push_back(rec.retrieve_s + rec.generate_s);
    }
    summary.accuracy =
        static_cast<double>(summary.correct_items) / static_cast<double>(summary.total_items);
    for (auto& [name, cat] : summary.per_category)
        cat.accuracy = static_cast<double>(cat.correct) / static_cast<double>(cat.total);

    for (const DocumentStats& d : summary.documents)
        summary.total_prepare_s += d.prepare_s;
    const auto n = static_cast<double>(summary.total_items);
    summary.mean_retrieve_s = retrieve_sum / n;
    summary.mean_generate_s = generate_sum / n;
    summary.avg_query_time_s = avg_query_time(summary.total_prepare_s, summary.mean_retrieve_s,
                                              summary.mean_generate_s, summary.total_items);
    std::sort(per_item.begin(), per_item.end());
    summary.p50_query_s = percentile(per_item, 0.50);
    summary.p90_query_s = percentile(per_item, 0.90);
    summary.max_query_s = per_item.back();
    return summary;
}

nlohmann::json BenchSummary::to_json(bool include_timings) const {
    nlohmann::json j = {
        {"total_items", total_items},
        {"correct_items", correct_items},
        {"accuracy", accuracy},
    };
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [name, cat] : per_category)
        cats[name] = {{"total", cat.total}, {"correct", cat.correct}, {"accuracy", cat.accuracy}};
    j["per_category"] = std::move(cats);

    nlohmann::json recs = nlohmann::json::array();
    for (const BenchRecord& r : records) {
        nlohmann::json rec = {
            {"item_id", r.item_id}, {"doc_key", r.doc_key},     {"category", r.category},
            {"predicted", r.predicted}, {"gold", r.gold},       {"correct", r.correct},
            {"path", r.path},
        };
        if (include_timings) {
            rec["prepare_share_s"] = r.prepare_share_s;
            rec["retrieve_s"] = r.retrieve_s;
            rec["generate_s"] = r.generate_s;
        }
        recs.push_back(std::move(rec));
    }
    j["records"] = std::move(recs);

    nlohmann::json docs = nlohmann::json::array();
    for (const DocumentStats& d : documents) {
        nlohmann::json doc = {
            {"doc_key", d.doc_key}, {"context_bytes", d.context_bytes}, {"items", d.items}};
        if (include_timings)
            doc["prepare_s"] = d.prepare_s;
        docs.push_back(std::move(doc));
    }
    j["documents"] = std::move(docs);

    if (include_timings)
        j["timings"] = {
            {"total_prepare_s", total_prepare_s},   {"mean_retrieve_s", mean_retrieve_s},
            {"mean_generate_s", mean_generate_s},   {"avg_query_time_s", avg_query_time_s},
            {"p50_query_s", p50_query_s},           {"p90_query_s", p90_query_s},
            {"max_query_s", max_query_s},
        };
    return j;
}

void write_records(const BenchSummary& summary, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw DatasetError("cannot write records file: " + path);
    for (const BenchRecord& r : summary.records) {
        const nlohmann::json rec = {
            {"item_id", r.item_id},     {"doc_key", r.doc_key},
            {"category", r.category},   {"predicted", r.predicted},
            {"gold", r.gold},           {"correct", r.correct},
            {"path", r.path},           {"prepare_share_s", r.prepare_share_s},
            {"retrieve_s", r.retrieve_s}, {"generate_s", r.generate_s},
        };
        out << rec.dump() << '\n';
    }
}

std::string format_summary(const BenchSummary& summary) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "items: %zu   correct: %zu   accuracy: %.2f%%\n",
                  summary.total_items, summary.correct_items, summary.accuracy * 100.0);
    out << line;
    out << "\ncategory                     items  correct  accuracy\n";
    for (const auto& [name, cat] : summary.per_category) {
        std::snprintf(line, sizeof line, "%-28s %5zu %8zu   %6.2f%%\n", name.c_str(), cat.total,
                      cat.correct, cat.accuracy * 100.0);
        out << line;
    }
    out << "\ndocuments prepared: " << summary.documents.size()
        << "   total prepare: " << format_seconds(summary.total_prepare_s) << " s\n";
    out << "mean retrieve: " << format_seconds(summary.mean_retrieve_s)
        << " s   mean generate: " << format_seconds(summary.mean_generate_s) << " s\n";
    out << "amortized query time (prep spread over " << summary.total_items
        << " queries): " << format_seconds(summary.avg_query_time_s) << " s\n";
    out << "per-query p50: " << format_seconds(summary.p50_query_s)
        << " s   p90: " << format_seconds(summary.p90_query_s)
        << " s   max: " << format_seconds(summary.max_query_s) << " s\n";
    return out.str();
}

double avg_query_time(double t_prepare, double t_retrieve_per_q, double t_gen_per_q,
                      std::size_t n) {
    if (n == 0)
        throw ConfigError("avg_query_time: n must be >= 1");
    if (t_prepare < 0.0 || t_retrieve_per_q < 0.0 || t_gen_per_q < 0.0)
        throw ConfigError("avg_query_time: times must be >= 0");
    return (t_prepare + static_cast<double>(n) * (t_retrieve_per_q + t_gen_per_q)) /
           static_cast<double>(n);
}

double storage_expansion(std::uintmax_t original_bytes, std::uintmax_t extra_bytes) {
    if (original_bytes == 0)
        throw ConfigError("storage_expansion: original size must be positive");
    return (static_cast<double>(original_bytes) + static_cast<double>(extra_bytes)) /
           static_cast<double>(original_bytes);
}

TreeSnapshot snapshot_tree(const fs::path& dir) {
    TreeSnapshot snapshot;
    if (!fs::exists(dir))
        return snapshot;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            snapshot[fs::relative(entry.path(), dir).generic_string()] = entry.file_size();
    return snapshot;
}

ExtraStorage measure_extra_storage(const TreeSnapshot& before, const TreeSnapshot& after,
                                   std::span<const std::string> excluded_prefixes) {
    const auto excluded = [&](const std::string& path) {
        for (const std::string& prefix : excluded_prefixes)
            if (path.rfind(prefix, 0) == 0)
                return true;
        return false;
    };
    ExtraStorage result;
    for (const auto& [path, size] : after) {
        const auto it = before.find(path);
        const std::uintmax_t previous = it == before.end() ? 0 : it->second;
        const std::uintmax_t delta = size > previous ? size - previous : 0;
        if (delta == 0)
            continue;
        if (excluded(path)) {
            result.excluded_bytes += delta;
        } else {
            result.extra_bytes += delta;
            result.unexpected_paths.push_back(path);
        }
    }
    return result;
}

} // namespace lexrag
