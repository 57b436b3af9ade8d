#include "pooleval/run.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <set>

#include "pooleval/jsonl.hpp"
#include "pooleval/log.hpp"
#include "pooleval/parallel.hpp"
#include "pooleval/pseudogt.hpp"
#include "pooleval/text.hpp"

namespace pooleval {

namespace {

void require_known_fields(const nlohmann::json& obj,
                          std::initializer_list<const char*> allowed,
                          const std::string& context) {
    if (!obj.is_object()) throw UsageError(context + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) throw UsageError(context + ": unknown field \"" + key + "\"");
    }
}

RemoteEndpoint endpoint_from_json(const nlohmann::json& obj, const std::string& context) {
    require_known_fields(
        obj, {"kind", "url", "model", "prompt_version", "timeout_ms", "retries", "dim", "id",
              "prompt_template"},
        context);
    RemoteEndpoint ep;
    ep.url = obj.value("url", "");
    ep.model = obj.value("model", "");
    ep.prompt_version = obj.value("prompt_version", "v1");
    ep.timeout_ms = obj.value("timeout_ms", 30000);
    ep.retries = obj.value("retries", 2);
    return ep;
}

nlohmann::json endpoint_to_json(const RemoteEndpoint& ep) {
    return {{"url", ep.url},
            {"model", ep.model},
            {"prompt_version", ep.prompt_version},
            {"timeout_ms", ep.timeout_ms},
            {"retries", ep.retries}};
}

SegmentationSpec segmentation_from_json(const nlohmann::json& obj, const std::string& context) {
    require_known_fields(obj, {"strategy", "min_merge_len", "max_chunk_len"}, context);
    SegmentationSpec seg;
    seg.strategy = seg_strategy_from_string(obj.value("strategy", "original"));
    seg.min_merge_len = obj.value("min_merge_len", 100u);
    seg.max_chunk_len = obj.value("max_chunk_len", 500u);
    return seg;
}

nlohmann::json segmentation_to_json(const SegmentationSpec& seg) {
    return {{"strategy", to_string(seg.strategy)},
            {"min_merge_len", seg.min_merge_len},
            {"max_chunk_len", seg.max_chunk_len}};
}

// Each filter dimension accepts a bare bool or an {"on", ...} object.
FilterSpec filter_from_json(const nlohmann::json& obj, const std::string& context) {
    require_known_fields(obj, {"quality", "length", "engagement", "poi"}, context);
    FilterSpec f;
    if (obj.contains("quality")) f.quality = obj["quality"].get<bool>();
    if (obj.contains("length")) {
        const auto& v = obj["length"];
        if (v.is_boolean()) {
            f.length = v.get<bool>();
        } else {
            require_known_fields(v, {"on", "threshold_chars"}, context + ".length");
            f.length = v.value("on", true);
            f.length_threshold_chars = v.value("threshold_chars", 50L);
        }
    }
    if (obj.contains("engagement")) {
        const auto& v = obj["engagement"];
        if (v.is_boolean()) {
            f.engagement = v.get<bool>();
        } else {
            require_known_fields(v, {"on", "threshold_interactions"}, context + ".engagement");
            f.engagement = v.value("on", true);
            f.engagement_threshold = v.value("threshold_interactions", 25L);
        }
    }
    if (obj.contains("poi")) {
        const auto& v = obj["poi"];
        if (v.is_boolean()) {
            f.poi = v.get<bool>();
        } else {
            require_known_fields(v, {"on", "bottom_percentile"}, context + ".poi");
            f.poi = v.value("on", true);
            f.poi_bottom_percentile = v.value("bottom_percentile", 0.25);
        }
    }
    return f;
}

nlohmann::json filter_to_json(const FilterSpec& f) {
    return {{"quality", f.quality},
            {"length", {{"on", f.length}, {"threshold_chars", f.length_threshold_chars}}},
            {"engagement",
             {{"on", f.engagement}, {"threshold_interactions", f.engagement_threshold}}},
            {"poi", {{"on", f.poi}, {"bottom_percentile", f.poi_bottom_percentile}}}};
}

RetrieverSpec retriever_from_json(const nlohmann::json& obj, const std::string& context) {
    require_known_fields(obj,
                         {"id", "segmentation", "mode", "embedder_id", "k", "rewriter", "filter",
                          "reranker", "pool_multiplier"},
                         context);
    RetrieverSpec spec;
    spec.id = obj.value("id", "");
    if (obj.contains("segmentation")) {
        spec.segmentation = segmentation_from_json(obj["segmentation"], context + ".segmentation");
    }
    spec.mode = retrieval_mode_from_string(obj.value("mode", "dense"));
    spec.embedder_id = obj.value("embedder_id", "");
    spec.k = obj.value("k", 10);
    if (obj.contains("rewriter")) {
        const auto& v = obj["rewriter"];
        if (v.is_boolean()) {
            spec.rewriter = v.get<bool>();
        } else {
            const std::string s = v.get<std::string>();
            if (s != "on" && s != "off") throw UsageError(context + ": rewriter must be on/off");
            spec.rewriter = (s == "on");
        }
    }
    if (obj.contains("filter")) spec.filter = filter_from_json(obj["filter"], context + ".filter");
    if (obj.contains("reranker")) {
        const auto& v = obj["reranker"];
        require_known_fields(v, {"kind", "window", "overlap"}, context + ".reranker");
        spec.reranker.kind = rerank_kind_from_string(v.value("kind", "none"));
        spec.reranker.window = v.value("window", 20);
        spec.reranker.overlap = v.value("overlap", 10);
    }
    spec.pool_multiplier = obj.value("pool_multiplier", 4);
    return spec;
}

nlohmann::json retriever_to_json(const RetrieverSpec& spec) {
    return {{"id", spec.id},
            {"segmentation", segmentation_to_json(spec.segmentation)},
            {"mode", to_string(spec.mode)},
            {"embedder_id", spec.embedder_id},
            {"k", spec.k},
            {"rewriter", spec.rewriter ? "on" : "off"},
            {"filter", filter_to_json(spec.filter)},
            {"reranker",
             {{"kind", to_string(spec.reranker.kind)},
              {"window", spec.reranker.window},
              {"overlap", spec.reranker.overlap}}},
            {"pool_multiplier", spec.pool_multiplier}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string json_digest(const nlohmann::json& doc) {
    return text::hex64(text::fnv1a64(doc.dump()));
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc, std::filesystem::absolute(path).parent_path());
}

RunConfig RunConfig::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    require_known_fields(doc,
                         {"schema_version", "corpus", "queries", "out_dir", "cache_dir", "seed",
                          "k_max", "max_inflight", "adapters", "retrievers"},
                         "config");
    RunConfig cfg;
    cfg.schema_version = doc.value("schema_version", 0);
    if (cfg.schema_version != 1) {
        throw UsageError("config schema_version must be 1, got " +
                         std::to_string(cfg.schema_version));
    }
    cfg.corpus_path = resolve(base_dir, doc.value("corpus", ""));
    cfg.queries_path = resolve(base_dir, doc.value("queries", ""));
    cfg.out_dir = resolve(base_dir, doc.value("out_dir", "run"));
    cfg.cache_dir = doc.contains("cache_dir") ? resolve(base_dir, doc["cache_dir"])
                                              : cfg.out_dir / "cache";
    cfg.seed = doc.value("seed", 0ULL);
    cfg.k_max = doc.value("k_max", 20);
    cfg.max_inflight = doc.value("max_inflight", 8ULL);

    if (doc.contains("adapters")) {
        const auto& a = doc["adapters"];
        require_known_fields(a,
                             {"embedders", "judge", "extractor", "rewriter", "reranker_pointwise",
                              "reranker_listwise"},
                             "adapters");
        if (a.contains("embedders")) {
            for (const auto& e : a["embedders"]) {
                EmbedderConfig ec;
                ec.id = e.value("id", "");
                ec.kind = e.value("kind", "hash");
                ec.dim = e.value("dim", 64ULL);
                ec.endpoint = endpoint_from_json(e, "adapters.embedders[" + ec.id + "]");
                if (ec.id.empty()) throw UsageError("embedder without id");
                if (ec.kind != "hash" && ec.kind != "http") {
                    throw UsageError("embedder kind must be hash or http: " + ec.id);
                }
                cfg.embedders.push_back(std::move(ec));
            }
        }
        auto judge_like = [&](const char* key, JudgeConfig& out, bool extractor) {
            if (!a.contains(key)) return;
            const auto& j = a[key];
            out.kind = j.value("kind", "oracle");
            if (out.kind != "oracle" && out.kind != "http") {
                throw UsageError(std::string(key) + " kind must be oracle or http");
            }
            out.endpoint = endpoint_from_json(j, std::string("adapters.") + key);
            if (j.contains("prompt_template")) {
                if (extractor) {
                    out.prompts.extract_template = j["prompt_template"].get<std::string>();
                } else {
                    out.prompts.judge_template = j["prompt_template"].get<std::string>();
                }
            }
        };
        judge_like("judge", cfg.judge, false);
        judge_like("extractor", cfg.extractor, true);
        if (a.contains("rewriter")) {
            cfg.rewriter.kind = a["rewriter"].value("kind", "template");
            if (cfg.rewriter.kind != "template" && cfg.rewriter.kind != "http") {
                throw UsageError("rewriter kind must be template or http");
            }
            cfg.rewriter.endpoint = endpoint_from_json(a["rewriter"], "adapters.rewriter");
        }
        auto rerank_like = [&](const char* key, RerankAdapterConfig& out) {
            if (!a.contains(key)) return;
            out.kind = a[key].value("kind", "overlap");
            if (out.kind != "overlap" && out.kind != "http") {
                throw UsageError(std::string(key) + " kind must be overlap or http");
            }
            out.endpoint = endpoint_from_json(a[key], std::string("adapters.") + key);
        };
        rerank_like("reranker_pointwise", cfg.pointwise);
        rerank_like("reranker_listwise", cfg.listwise);
    }

    if (doc.contains("retrievers")) {
        size_t i = 0;
        for (const auto& r : doc["retrievers"]) {
            cfg.retrievers.push_back(
                retriever_from_json(r, "retrievers[" + std::to_string(i++) + "]"));
        }
    }
    return cfg;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json retrievers = nlohmann::json::array();
    for (const auto& r : this->retrievers) retrievers.push_back(retriever_to_json(r));
    nlohmann::json embedders = nlohmann::json::array();
    for (const auto& e : this->embedders) {
        nlohmann::json ej = endpoint_to_json(e.endpoint);
        ej["id"] = e.id;
        ej["kind"] = e.kind;
        ej["dim"] = e.dim;
        embedders.push_back(ej);
    }
    auto judge_like = [](const JudgeConfig& j, bool extractor) {
        nlohmann::json out = endpoint_to_json(j.endpoint);
        out["kind"] = j.kind;
        out["prompt_template"] =
            extractor ? j.prompts.extract_template : j.prompts.judge_template;
        return out;
    };
    nlohmann::json rewriter = endpoint_to_json(this->rewriter.endpoint);
    rewriter["kind"] = this->rewriter.kind;
    nlohmann::json pw = endpoint_to_json(this->pointwise.endpoint);
    pw["kind"] = this->pointwise.kind;
    nlohmann::json lw = endpoint_to_json(this->listwise.endpoint);
    lw["kind"] = this->listwise.kind;

    return {{"schema_version", schema_version},
            {"corpus", corpus_path.string()},
            {"queries", queries_path.string()},
            {"out_dir", out_dir.string()},
            {"cache_dir", cache_dir.string()},
            {"seed", seed},
            {"k_max", k_max},
            {"max_inflight", max_inflight},
            {"adapters",
             {{"embedders", embedders},
              {"judge", judge_like(judge, false)},
              {"extractor", judge_like(extractor, true)},
              {"rewriter", rewriter},
              {"reranker_pointwise", pw},
              {"reranker_listwise", lw}}},
            {"retrievers", retrievers}};
}

void RunConfig::validate() const {
    if (retrievers.size() < 2) {
        throw UsageError("pooling requires >=2 retrievers, config has " +
                         std::to_string(retrievers.size()));
    }
    std::set<std::string> ids, embedder_ids;
    for (const auto& e : embedders) {
        if (!embedder_ids.insert(e.id).second) throw UsageError("duplicate embedder id: " + e.id);
    }
    for (const auto& r : retrievers) {
        try {
            r.validate();
        } catch (const std::exception& e) {
            throw UsageError("retriever " + r.id + ": " + e.what());
        }
        if (!ids.insert(r.id).second) throw UsageError("duplicate retriever id: " + r.id);
        if (!embedder_ids.count(r.embedder_id)) {
            throw UsageError("retriever " + r.id + " references undefined embedder " +
                             r.embedder_id);
        }
    }
    if (k_max < 1) throw UsageError("k_max must be >= 1");
    if (max_inflight < 1) throw UsageError("max_inflight must be >= 1");
}

// --- Adapter assembly -----------------------------------------------------------

namespace {

struct AdapterRuntime {
    std::shared_ptr<AdapterCache> cache;
    std::shared_ptr<std::counting_semaphore<>> inflight;
    std::shared_ptr<CachedJudge> judge;
    std::shared_ptr<CachedExtractor> extractor;
};

std::shared_ptr<HttpAdapterClient> make_client(const RemoteEndpoint& ep,
                                               const AdapterRuntime& rt, bool offline) {
    if (ep.url.empty()) throw UsageError("http adapter configured without url");
    return std::make_shared<HttpAdapterClient>(ep, rt.inflight, offline);
}

AdapterRuntime assemble_adapters(const RunConfig& config, const std::vector<Query>& queries,
                                 RetrievalEngine& engine) {
    AdapterRuntime rt;
    rt.cache = std::make_shared<AdapterCache>(config.cache_dir);
    rt.inflight = std::make_shared<std::counting_semaphore<>>(
        static_cast<std::ptrdiff_t>(config.max_inflight));

    for (const auto& ec : config.embedders) {
        if (ec.kind == "hash") {
            engine.register_embedder(std::make_shared<HashedBowEmbedder>(ec.id, ec.dim));
        } else {
            engine.register_embedder(std::make_shared<RemoteEmbedder>(
                ec.id, ec.dim, make_client(ec.endpoint, rt, config.offline), rt.cache));
        }
    }

    if (config.rewriter.kind == "template") {
        engine.set_rewriter(std::make_shared<TemplateRewriter>());
    } else {
        engine.set_rewriter(std::make_shared<RemoteRewriter>(
            make_client(config.rewriter.endpoint, rt, config.offline), rt.cache));
    }
    if (config.pointwise.kind == "overlap") {
        engine.set_pointwise(std::make_shared<TokenOverlapScorer>());
    } else {
        engine.set_pointwise(std::make_shared<RemotePointwiseScorer>(
            make_client(config.pointwise.endpoint, rt, config.offline), rt.cache));
    }
    if (config.listwise.kind == "overlap") {
        engine.set_listwise(std::make_shared<TokenOverlapListwise>());
    } else {
        engine.set_listwise(std::make_shared<RemoteListwiseReranker>(
            make_client(config.listwise.endpoint, rt, config.offline), rt.cache));
    }

    std::shared_ptr<RelevanceJudge> judge;
    if (config.judge.kind == "oracle") {
        judge = std::make_shared<OracleJudge>(queries);
    } else {
        judge = std::make_shared<RemoteJudge>(make_client(config.judge.endpoint, rt, config.offline),
                                              config.judge.prompts);
    }
    rt.judge = std::make_shared<CachedJudge>(judge, rt.cache);

    std::shared_ptr<FactExtractor> extractor;
    if (config.extractor.kind == "oracle") {
        extractor = std::make_shared<OracleExtractor>(queries);
    } else {
        extractor = std::make_shared<RemoteExtractor>(
            make_client(config.extractor.endpoint, rt, config.offline), config.extractor.prompts);
    }
    rt.extractor = std::make_shared<CachedExtractor>(extractor, rt.cache);
    return rt;
}

}  // namespace

// --- evaluate --------------------------------------------------------------------

RunOutcome cmd_evaluate(const RunConfig& config, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    if (!std::filesystem::exists(config.corpus_path)) {
        throw UsageError("corpus file not found: " + config.corpus_path.string());
    }
    if (!std::filesystem::exists(config.queries_path)) {
        throw UsageError("queries file not found: " + config.queries_path.string());
    }

    const std::vector<Document> docs = load_corpus_jsonl(config.corpus_path);
    const std::vector<Query> queries = load_queries_jsonl(config.queries_path);
    if (docs.empty()) throw UsageError("corpus is empty: " + config.corpus_path.string());
    if (queries.empty()) throw UsageError("query set is empty: " + config.queries_path.string());

    std::filesystem::create_directories(config.out_dir);
    std::filesystem::create_directories(config.out_dir / "chunks");
    std::filesystem::create_directories(config.out_dir / "ranked");
    std::filesystem::create_directories(config.out_dir / "curves");

    const nlohmann::json config_snapshot = config.to_json();
    {
        std::ofstream out(config.out_dir / "config.json", std::ios::trunc);
        out << config_snapshot.dump(2) << '\n';
    }

    RunOutcome outcome;
    outcome.config_digest = json_digest(config_snapshot);

    RetrievalEngine engine(docs, config.max_inflight);
    AdapterRuntime adapters = assemble_adapters(config, queries, engine);

    const size_t n_specs = config.retrievers.size();
    const size_t n_queries = queries.size();

    bool aborted = false;
    std::string abort_reason;
    size_t unjudged_total = 0;
    std::vector<PRCurve> curves;
    std::optional<ComparisonReport> comparison;
    std::vector<size_t> pool_sizes;

    try {
        // Chunk ids embed their strategy id, so one store can span every
        // segmentation in the comparison; pools and covers() look up here.
        ChunkStore all_chunks;
        std::set<std::string> dumped_strategies;
        for (const auto& spec : config.retrievers) {
            engine.prepare(spec);
            const std::string strategy = spec.segmentation.id();
            if (dumped_strategies.insert(strategy).second) {
                dump_chunks_jsonl(engine.chunks(strategy).all(),
                                  config.out_dir / "chunks" / (strategy + ".jsonl"));
                all_chunks.add(engine.chunks(strategy).all());
            }
        }

        // Fan out retrieval over (spec x query); results land in fixed slots.
        std::vector<std::vector<RankedList>> results(n_specs,
                                                     std::vector<RankedList>(n_queries));
        parallel_for(n_specs * n_queries, config.max_inflight, [&](size_t flat) {
            const size_t si = flat / n_queries;
            const size_t qi = flat % n_queries;
            results[si][qi] = engine.run_retriever(config.retrievers[si], queries[qi]);
        });

        for (size_t si = 0; si < n_specs; ++si) {
            dump_ranked_lists_jsonl(results[si], config.out_dir / "ranked" /
                                                     (config.retrievers[si].id + ".jsonl"));
        }

        // Pool + judge + pseudo-GT per query.
        std::vector<SubsetPool> pools(n_queries);
        std::vector<PseudoGT> gts(n_queries);
        std::vector<PseudoGTBuildStats> stats(n_queries);
        std::vector<std::vector<Judgment>> judgments(n_queries);
        parallel_for(n_queries, config.max_inflight, [&](size_t qi) {
            std::vector<RankedList> lists;
            lists.reserve(n_specs);
            for (size_t si = 0; si < n_specs; ++si) lists.push_back(results[si][qi]);
            pools[qi] = build_subset(queries[qi].id, lists);
            gts[qi] = build_pseudo_gt(pools[qi], queries[qi], *adapters.judge, *adapters.extractor,
                                      all_chunks, &stats[qi], &judgments[qi]);
        });

        std::vector<Judgment> all_judgments;
        for (size_t qi = 0; qi < n_queries; ++qi) {
            pool_sizes.push_back(pools[qi].chunk_ids.size());
            unjudged_total += stats[qi].unjudged;
            all_judgments.insert(all_judgments.end(), judgments[qi].begin(), judgments[qi].end());
        }
        dump_pools_jsonl(pools, config.out_dir / "pools.jsonl");
        dump_pseudo_gt_jsonl(gts, config.out_dir / "pseudo_gt.jsonl");
        dump_judgments_jsonl(all_judgments, config.out_dir / "judgments.jsonl");

        for (size_t si = 0; si < n_specs; ++si) {
            std::vector<QueryEval> evals(n_queries);
            for (size_t qi = 0; qi < n_queries; ++qi) {
                evals[qi] = {&results[si][qi], &gts[qi]};
            }
            PRCurve curve = pr_curve(config.retrievers[si].id, evals, config.k_max, all_chunks);
            write_curve_csv(curve, config.out_dir / "curves" / (config.retrievers[si].id + ".csv"));
            curves.push_back(std::move(curve));
        }
        comparison = compare(curves);
    } catch (const AdapterError& e) {
        aborted = true;
        abort_reason = e.what();
        log_warn(std::string("run aborted by adapter failure: ") + e.what() +
                 " (judged progress is checkpointed in the cache)");
    }

    const bool partial = aborted || unjudged_total > 0;
    outcome.status = partial ? RunStatus::partial : RunStatus::complete;
    outcome.exit_code = partial ? 3 : 0;

    // Digest covers the scientific content only; cache hit counts and wall
    // time vary between cold and warm runs of the same config.
    nlohmann::json curves_json = nlohmann::json::array();
    for (const PRCurve& c : curves) {
        nlohmann::json points = nlohmann::json::array();
        for (const PRPoint& p : c.points) {
            points.push_back({{"cutoff_k", p.cutoff_k},
                              {"precision", p.precision},
                              {"recall", p.recall}});
        }
        curves_json.push_back(
            {{"retriever_id", c.retriever_id}, {"pr_auc", c.pr_auc}, {"points", points}});
    }
    nlohmann::json core{{"schema_version", 1},
                        {"config", config_snapshot},
                        {"status", partial ? "partial" : "complete"},
                        {"curves", curves_json},
                        {"pool_sizes", pool_sizes}};
    if (comparison) {
        nlohmann::json dom = nlohmann::json::array();
        for (const auto& row : comparison->dominance) dom.push_back(row);
        core["comparison"] = {{"ranking", comparison->ranking},
                              {"winners", comparison->winners},
                              {"dominance", dom}};
    }
    if (aborted) core["abort_reason"] = abort_reason;
    outcome.report_digest = json_digest(core);

    outcome.cost.queries = n_queries;
    outcome.cost.judge_calls = adapters.judge->inner_calls();
    outcome.cost.cache_hits = adapters.cache->hits();
    outcome.cost.pool_sizes = pool_sizes;
    for (size_t s : pool_sizes) outcome.cost.pooled_union_total += s;
    for (const auto& spec : config.retrievers) {
        outcome.cost.sum_topk_total += static_cast<size_t>(spec.k) * n_queries;
    }
    outcome.cost.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json report = core;
    report["digest"] = outcome.report_digest;
    report["config_digest"] = outcome.config_digest;
    report["cost"] = {{"queries", outcome.cost.queries},
                      {"judge_calls", outcome.cost.judge_calls},
                      {"cache_hits", outcome.cost.cache_hits},
                      {"pooled_union_total", outcome.cost.pooled_union_total},
                      {"sum_topk_total", outcome.cost.sum_topk_total},
                      {"wall_time_ms", outcome.cost.wall_time_ms}};
    outcome.report_path = config.out_dir / "report.json";
    {
        std::ofstream out(outcome.report_path, std::ios::trunc);
        out << report.dump(2) << '\n';
    }

    log << "run " << (partial ? "partial" : "complete") << ": " << n_specs << " retrievers, "
        << n_queries << " queries, judge calls " << outcome.cost.judge_calls << ", cache hits "
        << outcome.cost.cache_hits << "\n";
    if (comparison) {
        log << "ranking:";
        for (const auto& id : comparison->ranking) log << " " << id;
        log << "\nreport digest " << outcome.report_digest << " -> " << outcome.report_path.string()
            << "\n";
    }
    return outcome;
}

// --- ingest ------------------------------------------------------------------

int cmd_ingest(const RunConfig& config, std::ostream& log) {
    if (!std::filesystem::exists(config.corpus_path)) {
        throw UsageError("corpus file not found: " + config.corpus_path.string());
    }
    const std::vector<Document> docs = load_corpus_jsonl(config.corpus_path);
    std::filesystem::create_directories(config.out_dir / "chunks");

    std::set<std::string> strategies;
    size_t total_chunks = 0;
    for (const auto& spec : config.retrievers) {
        const std::string strategy = spec.segmentation.id();
        if (!strategies.insert(strategy).second) continue;
        std::vector<Chunk> chunks;
        for (const Document& doc : docs) {
            auto doc_chunks = segment_document(doc, spec.segmentation);
            validate_chunking(doc, doc_chunks);
            chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
        }
        total_chunks += chunks.size();
        dump_chunks_jsonl(chunks, config.out_dir / "chunks" / (strategy + ".jsonl"));
        log << "segmentation " << strategy << ": " << chunks.size() << " chunks\n";
    }

    const PoiPercentiles poi = PoiPercentiles::from_documents(docs);
    nlohmann::json stats{{"documents", docs.size()},
                         {"segmentations", std::vector<std::string>(strategies.begin(),
                                                                    strategies.end())},
                         {"total_chunks", total_chunks},
                         {"poi_percentile_25", docs.empty() ? 0 : poi.threshold(0.25)},
                         {"poi_counts_sorted", poi.sorted_counts}};
    std::ofstream out(config.out_dir / "corpus_stats.json", std::ios::trunc);
    out << stats.dump(2) << '\n';
    log << "ingested " << docs.size() << " documents -> " << config.out_dir.string() << "\n";
    return 0;
}

// --- verify ------------------------------------------------------------------

VerifyConfig VerifyConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc, std::filesystem::absolute(path).parent_path());
}

VerifyConfig VerifyConfig::from_json(const nlohmann::json& doc,
                                     const std::filesystem::path& base) {
    require_known_fields(doc,
                         {"schema_version", "synthetic", "retrievers", "k", "cache_dir",
                          "out_dir", "noisy_flip_probability", "noise_seed", "workers"},
                         "verify config");
    VerifyConfig cfg;
    if (doc.value("schema_version", 1) != 1) throw UsageError("verify schema_version must be 1");
    if (doc.contains("synthetic")) {
        const auto& s = doc["synthetic"];
        require_known_fields(s,
                             {"seed", "n_docs", "n_queries", "facts_per_query",
                              "fact_placements_per_fact", "distractor_sentences_per_doc",
                              "sections_per_doc", "engagement_max", "poi_max",
                              "quality_ok_rate"},
                             "verify config.synthetic");
        cfg.synthetic.seed = s.value("seed", cfg.synthetic.seed);
        cfg.synthetic.n_docs = s.value("n_docs", cfg.synthetic.n_docs);
        cfg.synthetic.n_queries = s.value("n_queries", cfg.synthetic.n_queries);
        cfg.synthetic.facts_per_query = s.value("facts_per_query", cfg.synthetic.facts_per_query);
        cfg.synthetic.fact_placements_per_fact =
            s.value("fact_placements_per_fact", cfg.synthetic.fact_placements_per_fact);
        cfg.synthetic.distractor_sentences_per_doc =
            s.value("distractor_sentences_per_doc", cfg.synthetic.distractor_sentences_per_doc);
        cfg.synthetic.sections_per_doc = s.value("sections_per_doc", cfg.synthetic.sections_per_doc);
        cfg.synthetic.meta.engagement_max =
            s.value("engagement_max", cfg.synthetic.meta.engagement_max);
        cfg.synthetic.meta.poi_max = s.value("poi_max", cfg.synthetic.meta.poi_max);
        cfg.synthetic.meta.quality_ok_rate =
            s.value("quality_ok_rate", cfg.synthetic.meta.quality_ok_rate);
    }
    if (doc.contains("retrievers")) {
        cfg.retrievers.clear();
        size_t i = 0;
        for (const auto& r : doc["retrievers"]) {
            cfg.retrievers.push_back(
                retriever_from_json(r, "retrievers[" + std::to_string(i++) + "]"));
        }
    }
    cfg.k = doc.value("k", 20);
    if (doc.contains("cache_dir")) cfg.cache_dir = resolve(base, doc["cache_dir"]);
    if (doc.contains("out_dir")) cfg.out_dir = resolve(base, doc["out_dir"]);
    cfg.noisy_flip_probability = doc.value("noisy_flip_probability", 0.0);
    cfg.noise_seed = doc.value("noise_seed", 0ULL);
    cfg.workers = doc.value("workers", 1ULL);
    return cfg;
}

int cmd_verify(const VerifyConfig& config, std::ostream& log) {
    VerifyOptions opts;
    opts.noisy_flip_probability = config.noisy_flip_probability;
    opts.noise_seed = config.noise_seed;
    opts.cache_dir = config.cache_dir;
    opts.workers = config.workers;

    const VerificationReport report =
        verify_appendix_a(config.retrievers, config.synthetic, config.k, opts);
    log << report.summary();
    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        write_verification_report(report, config.out_dir / "verification.json");
        std::ofstream out(config.out_dir / "verification.txt", std::ios::trunc);
        out << report.summary();
        log << "report -> " << (config.out_dir / "verification.json").string() << "\n";
    }
    return report.passed ? 0 : 1;
}

// --- compare -----------------------------------------------------------------

int cmd_compare(const std::filesystem::path& run_dir, int k_max, std::ostream& log) {
    const auto config_path = run_dir / "config.json";
    const auto gt_path = run_dir / "pseudo_gt.jsonl";
    if (!std::filesystem::exists(config_path) || !std::filesystem::exists(gt_path)) {
        throw UsageError("not a completed run directory: " + run_dir.string());
    }
    const RunConfig config = RunConfig::load(config_path);
    if (k_max <= 0) k_max = config.k_max;

    const std::vector<Document> docs = load_corpus_jsonl(config.corpus_path);
    ChunkStore all_chunks;
    std::set<std::string> strategies;
    for (const auto& spec : config.retrievers) {
        if (!strategies.insert(spec.segmentation.id()).second) continue;
        for (const Document& doc : docs) {
            all_chunks.add(segment_document(doc, spec.segmentation));
        }
    }

    std::map<std::string, PseudoGT> gts;
    for (PseudoGT& gt : load_pseudo_gt_jsonl(gt_path)) gts.emplace(gt.query_id, std::move(gt));

    std::vector<PRCurve> curves;
    for (const auto& spec : config.retrievers) {
        const auto ranked_path = run_dir / "ranked" / (spec.id + ".jsonl");
        if (!std::filesystem::exists(ranked_path)) {
            throw UsageError("missing ranked lists for retriever " + spec.id);
        }
        const std::vector<RankedList> lists = load_ranked_lists_jsonl(ranked_path);
        std::vector<QueryEval> evals;
        for (const RankedList& list : lists) {
            auto it = gts.find(list.query_id);
            if (it == gts.end()) throw UsageError("pseudo GT missing for query " + list.query_id);
            evals.push_back({&list, &it->second});
        }
        curves.push_back(pr_curve(spec.id, evals, k_max, all_chunks));
    }

    const ComparisonReport report = compare(curves);
    log << "pr_auc ranking (k_max=" << k_max << "):\n";
    for (const auto& id : report.ranking) {
        for (const PRCurve& c : report.curves) {
            if (c.retriever_id == id) {
                log << "  " << id << "  " << c.pr_auc << "\n";
            }
        }
    }
    log << "dominance matrix (rows >= columns fraction):\n";
    for (size_t a = 0; a < report.curves.size(); ++a) {
        log << "  " << report.curves[a].retriever_id << ":";
        for (size_t b = 0; b < report.curves.size(); ++b) {
            log << " " << report.dominance[a][b];
        }
        log << "\n";
    }
    return 0;
}

}  // namespace pooleval
