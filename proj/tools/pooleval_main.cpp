#include <iostream>

#include <CLI11.hpp>

#include "pooleval/run.hpp"

namespace {

struct GlobalFlags {
    std::string out;
    uint64_t seed = 0;
    bool seed_set = false;
    long max_inflight = 0;
    bool offline = false;
};

void apply_overrides(pooleval::RunConfig& config, const GlobalFlags& flags) {
    if (!flags.out.empty()) {
        config.out_dir = std::filesystem::absolute(flags.out);
        config.cache_dir = config.out_dir / "cache";
    }
    if (flags.seed_set) config.seed = flags.seed;
    if (flags.max_inflight > 0) config.max_inflight = static_cast<size_t>(flags.max_inflight);
    if (flags.offline) config.offline = true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"retriever evaluation via pooled relevance judgments"};
    app.require_subcommand(1);

    GlobalFlags flags;
    std::string config_path;
    std::string run_dir;
    std::string slice;
    int k_max = 0;
    double noisy = -1.0;
    std::string cache_dir;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "path to the JSON config");
        if (needs_config) opt->required();
        cmd->add_option("--out", flags.out, "output directory override");
        cmd->add_option("--seed", flags.seed, "seed override")
            ->each([&](const std::string&) { flags.seed_set = true; });
        cmd->add_option("--max-inflight", flags.max_inflight,
                        "bound on parallel workers / in-flight adapter calls");
        cmd->add_flag("--offline", flags.offline,
                      "forbid remote adapter calls; only cached responses are used");
    };

    CLI::App* ingest = app.add_subcommand("ingest", "segment a corpus and write chunk dumps");
    add_common(ingest, true);

    CLI::App* evaluate =
        app.add_subcommand("evaluate", "run retrievers, build pseudo GT, rank by PR-AUC");
    add_common(evaluate, true);

    CLI::App* verify = app.add_subcommand(
        "verify", "check the subset-sampling algebra on a seeded synthetic corpus");
    add_common(verify, false);
    verify->add_option("--cache", cache_dir, "persistent judgment cache directory");
    verify->add_option("--noisy", noisy, "judge flip probability (non-asserting mode)");

    CLI::App* report = app.add_subcommand("report", "emit curve tables and PR plots from a run");
    report->add_option("--run", run_dir, "completed run directory")->required();
    report->add_option("--out", flags.out, "output directory (defaults to the run directory)");
    report->add_option("--slice", slice,
                       "group retrievers by one dimension "
                       "(segmentation|mode|embedder|rewriter|filter|reranker|k)");

    CLI::App* compare =
        app.add_subcommand("compare", "recompute the comparison from persisted run artifacts");
    compare->add_option("--run", run_dir, "completed run directory")->required();
    compare->add_option("--k-max", k_max, "curve cutoff override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            pooleval::RunConfig config = pooleval::RunConfig::load(config_path);
            apply_overrides(config, flags);
            return pooleval::cmd_ingest(config, std::cout);
        }
        if (evaluate->parsed()) {
            pooleval::RunConfig config = pooleval::RunConfig::load(config_path);
            apply_overrides(config, flags);
            return pooleval::cmd_evaluate(config, std::cout).exit_code;
        }
        if (verify->parsed()) {
            pooleval::VerifyConfig config;
            if (!config_path.empty()) config = pooleval::VerifyConfig::load(config_path);
            if (!cache_dir.empty()) config.cache_dir = std::filesystem::absolute(cache_dir);
            if (!flags.out.empty()) config.out_dir = std::filesystem::absolute(flags.out);
            if (flags.seed_set) config.synthetic.seed = flags.seed;
            if (flags.max_inflight > 0) config.workers = static_cast<size_t>(flags.max_inflight);
            if (noisy >= 0.0) config.noisy_flip_probability = noisy;
            return pooleval::cmd_verify(config, std::cout);
        }
        if (report->parsed()) {
            const std::filesystem::path run(run_dir);
            const std::filesystem::path out =
                flags.out.empty() ? run : std::filesystem::path(flags.out);
            return pooleval::cmd_report(run, out, slice, std::cout);
        }
        if (compare->parsed()) {
            return pooleval::cmd_compare(run_dir, k_max, std::cout);
        }
    } catch (const pooleval::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
