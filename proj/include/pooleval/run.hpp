#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pooleval/judge.hpp"
#include "pooleval/metrics.hpp"
#include "pooleval/retrieval.hpp"
#include "pooleval/synthetic.hpp"

namespace pooleval {

// Invalid invocation or unusable inputs; the CLI maps it to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmbedderConfig {
    std::string id;
    std::string kind = "hash";  // hash | http
    size_t dim = 64;
    RemoteEndpoint endpoint;
};

struct JudgeConfig {
    std::string kind = "oracle";  // oracle | http
    RemoteEndpoint endpoint;
    JudgePrompts prompts;
};

struct RewriterConfig {
    std::string kind = "template";  // template | http
    RemoteEndpoint endpoint;
};

struct RerankAdapterConfig {
    std::string kind = "overlap";  // overlap | http
    RemoteEndpoint endpoint;
};

// Versioned run configuration. Parsing is strict: unknown fields anywhere in
// the document are rejected.
struct RunConfig {
    int schema_version = 1;
    std::filesystem::path corpus_path;
    std::filesystem::path queries_path;
    std::filesystem::path out_dir;
    std::filesystem::path cache_dir;  // default: <out_dir>/cache
    uint64_t seed = 0;
    int k_max = 20;
    size_t max_inflight = 8;
    bool offline = false;

    std::vector<EmbedderConfig> embedders;
    JudgeConfig judge;
    JudgeConfig extractor;  // same knobs as the judge adapter
    RewriterConfig rewriter;
    RerankAdapterConfig pointwise;
    RerankAdapterConfig listwise;
    std::vector<RetrieverSpec> retrievers;

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    nlohmann::json to_json() const;  // canonical snapshot (absolute paths)
    void validate() const;
};

enum class RunStatus { complete, partial };

struct RunOutcome {
    int exit_code = 0;
    RunStatus status = RunStatus::complete;
    std::string config_digest;
    std::string report_digest;
    std::filesystem::path report_path;
    CostReport cost;
};

// ingest -> segment -> index -> retrieve -> pool -> judge -> pseudo-GT ->
// metrics -> compare, persisting every stage under config.out_dir. Exit code
// 0 on complete, 2 on unusable configuration or inputs, 3 on a partial run
// (unjudged chunks or an adapter hard failure after retries; cached progress
// is kept so a rerun resumes from the judgment cache).
RunOutcome cmd_evaluate(const RunConfig& config, std::ostream& log);

// Writes chunk dumps per distinct segmentation plus corpus stats.
int cmd_ingest(const RunConfig& config, std::ostream& log);

struct VerifyConfig {
    SyntheticSpec synthetic = default_verify_synth();
    std::vector<RetrieverSpec> retrievers = default_verify_retrievers();
    int k = 20;
    std::filesystem::path cache_dir;
    std::filesystem::path out_dir;
    double noisy_flip_probability = 0.0;
    uint64_t noise_seed = 0;
    size_t workers = 1;

    static VerifyConfig load(const std::filesystem::path& path);
    static VerifyConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base);
};

// Runs the subset-sampling verification; prints the aggregate deltas and one
// PASS/FAIL line. Exit 0 on PASS, 1 on FAIL, and always 0 in noisy mode
// (divergence is reported, not asserted).
int cmd_verify(const VerifyConfig& config, std::ostream& log);

// Re-emits per-retriever curve tables and an SVG precision-recall plot per
// comparison from a completed run directory. `slice` groups retrievers by one
// strategy dimension (segmentation|mode|embedder|rewriter|filter|reranker)
// and plots each pair differing only in that dimension.
int cmd_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir,
               const std::string& slice, std::ostream& log);

// Recomputes curves and the comparison from persisted ranked lists and
// pseudo-GT without re-judging; k_max <= 0 keeps the run's value.
int cmd_compare(const std::filesystem::path& run_dir, int k_max, std::ostream& log);

// One polyline per retriever over the unit PR square, with a legend carrying
// ids and PR-AUC values.
void write_pr_svg(const std::vector<PRCurve>& curves, const std::string& title,
                  const std::filesystem::path& path);

std::string json_digest(const nlohmann::json& doc);

}  // namespace pooleval
