#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lexrag/pipeline.hpp"

namespace lexrag {

/// One multiple-choice question over a (possibly shared) context document.
struct BenchItem {
    std::string id;
    std::string doc_key; // items with equal keys share one prepared document
    std::string context;
    std::string question;
    std::vector<Choice> choices;
    std::string gold;
    std::string category;
};

enum class DatasetFormat { generic_json, novelqa_json, marathon_json };

/// "generic-json" | "novelqa-json" | "marathon-json" → enum; ConfigError otherwise.
DatasetFormat parse_dataset_format(std::string_view name);

/// Loads and validates a dataset. The file is either a JSON array or JSON
/// lines (one object per line). Malformed entries are fatal DatasetErrors
/// naming the offending line; under `lenient` they are skipped with a note
/// to stderr. Zero valid items is always an error.
std::vector<BenchItem> load_dataset(const std::string& path, DatasetFormat format,
                                    bool lenient = false);

struct BenchRecord {
    std::string item_id;
    std::string doc_key;
    std::string category;
    std::string predicted;
    std::string gold;
    bool correct = false;
    std::string path; // counting | standard
    double prepare_share_s = 0.0; // document prep time / items on that document
    double retrieve_s = 0.0;
    double generate_s = 0.0;
};

struct DocumentStats {
    std::string doc_key;
    std::size_t context_bytes = 0;
    double prepare_s = 0.0;
    std::size_t items = 0;
};

struct CategoryStats {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

struct BenchSummary {
    std::size_t total_items = 0;
    std::size_t correct_items = 0;
    double accuracy = 0.0;
    std::map<std::string, CategoryStats> per_category;
    double total_prepare_s = 0.0;
    double mean_retrieve_s = 0.0;
    double mean_generate_s = 0.0;
    double avg_query_time_s = 0.0; // amortized: (prep + N·(retrieve+gen)) / N
    double p50_query_s = 0.0;      // per-item retrieve+generate percentiles
    double p90_query_s = 0.0;
    double max_query_s = 0.0;
    std::vector<BenchRecord> records;
    std::vector<DocumentStats> documents;

    nlohmann::json to_json(bool include_timings = true) const;
};

/// Runs every item through the pipeline (documents prepared once per
/// doc_key), tallies accuracy per category and overall, and fills in the
/// amortized-time accounting.
BenchSummary run_bench(std::span<const BenchItem> items, const PipelineConfig& config);

/// Writes one JSON line per record.
void write_records(const BenchSummary& summary, const std::string& path);

/// Human-readable summary table.
std::string format_summary(const BenchSummary& summary);

/// Amortized per-query latency: (t_prepare + n·(t_retrieve + t_gen)) / n.
/// t_prepare is the one-off document cost; the others are per-query means.
double avg_query_time(double t_prepare, double t_retrieve_per_q, double t_gen_per_q,
                      std::size_t n);

/// Expansion ratio (original + extra) / original. The companion extra/original
/// reading is reported alongside it in summaries.
double storage_expansion(std::uintmax_t original_bytes, std::uintmax_t extra_bytes);

/// file path → size in bytes, recursively, for the storage audit.
using TreeSnapshot = std::map<std::string, std::uintmax_t>;
TreeSnapshot snapshot_tree(const std::filesystem::path& dir);

struct ExtraStorage {
    std::uintmax_t extra_bytes = 0;    // new or grown, not excluded
    std::uintmax_t excluded_bytes = 0; // new or grown under an excluded prefix
    std::vector<std::string> unexpected_paths;
};

/// Diffs two snapshots of the working tree. Paths under any excluded prefix
/// (explicit outputs: reports, transcript logs) are tallied separately; the
/// pipeline itself must account for zero extra bytes.
ExtraStorage measure_extra_storage(const TreeSnapshot& before, const TreeSnapshot& after,
                                   std::span<const std::string> excluded_prefixes);

} // namespace lexrag
