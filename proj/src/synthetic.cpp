#include "pooleval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pooleval/judge.hpp"
#include "pooleval/log.hpp"
#include "pooleval/parallel.hpp"
#include "pooleval/pseudogt.hpp"
#include "pooleval/text.hpp"

namespace pooleval {

void SyntheticSpec::validate() const {
    if (n_docs < 1 || n_queries < 1 || facts_per_query < 1 || fact_placements_per_fact < 1 ||
        sections_per_doc < 1) {
        throw std::invalid_argument("synthetic spec counts must be >= 1");
    }
    if (distractor_sentences_per_doc < 0) {
        throw std::invalid_argument("distractor count must be >= 0");
    }
    if (fact_placements_per_fact > n_docs) {
        throw std::invalid_argument("fact placements exceed corpus capacity (" +
                                    std::to_string(fact_placements_per_fact) + " placements, " +
                                    std::to_string(n_docs) + " documents)");
    }
    if (meta.quality_ok_rate < 0.0 || meta.quality_ok_rate > 1.0) {
        throw std::invalid_argument("quality_ok_rate must be in [0,1]");
    }
}

namespace {

// Own samplers over mt19937_64 keep dumps byte-identical across platforms
// regardless of the standard library's distribution implementations.
long rand_range(std::mt19937_64& rng, long lo, long hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<long>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

double rand_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

const char* kVocab[] = {
    "river",  "harbor", "lantern", "meadow",  "orchard", "summit", "valley",  "garden",
    "market", "bridge", "temple",  "station", "forest",  "coast",  "plateau", "canyon",
    "villa",  "museum", "bakery",  "terrace", "pier",    "grove",  "castle",  "spring",
    "trail",  "cellar", "tower",   "lagoon",  "quarry",  "shrine", "arcade",  "hostel",
};
constexpr size_t kVocabSize = sizeof(kVocab) / sizeof(kVocab[0]);

std::string distractor_sentence(std::mt19937_64& rng, int doc, int section, int ordinal) {
    std::ostringstream s;
    s << "Note d" << doc << "s" << section << "n" << ordinal << " covers the "
      << kVocab[rng() % kVocabSize] << " " << kVocab[rng() % kVocabSize] << " near the "
      << kVocab[rng() % kVocabSize] << " " << kVocab[rng() % kVocabSize] << ".";
    return s.str();
}

std::string doc_id_for(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "doc-%04d", i);
    return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    // Sentence grid first, fact insertion second, rendering last.
    const int sections = spec.sections_per_doc;
    std::vector<std::vector<std::vector<std::string>>> grid(
        static_cast<size_t>(spec.n_docs),
        std::vector<std::vector<std::string>>(static_cast<size_t>(sections)));
    for (int d = 0; d < spec.n_docs; ++d) {
        const int base = spec.distractor_sentences_per_doc / sections;
        int remainder = spec.distractor_sentences_per_doc % sections;
        for (int s = 0; s < sections; ++s) {
            const int count = base + (s < remainder ? 1 : 0);
            for (int t = 0; t < count; ++t) {
                grid[d][s].push_back(distractor_sentence(rng, d, s, t));
            }
        }
    }

    SyntheticCorpus out;
    for (int qi = 0; qi < spec.n_queries; ++qi) {
        Query q;
        q.id = "q" + std::to_string(qi);
        q.text = "what is the canonical answer for query q" + std::to_string(qi) + " about topic-" +
                 std::to_string(qi);
        std::vector<PlantedFact> planted;
        for (int fj = 0; fj < spec.facts_per_query; ++fj) {
            PlantedFact fact;
            fact.token = "FACT-q" + std::to_string(qi) + "-" + std::to_string(fj);
            fact.sentence = "Record " + fact.token + " confirms the canonical answer for query q" +
                            std::to_string(qi) + " topic " + std::to_string(qi) + ".";
            // Distinct documents for each placement of this fact.
            std::vector<int> candidates(static_cast<size_t>(spec.n_docs));
            for (int d = 0; d < spec.n_docs; ++d) candidates[static_cast<size_t>(d)] = d;
            for (int p = 0; p < spec.fact_placements_per_fact; ++p) {
                const size_t pick =
                    static_cast<size_t>(p) + static_cast<size_t>(rand_range(
                                                 rng, 0, static_cast<long>(candidates.size()) - 1 -
                                                             p));
                std::swap(candidates[static_cast<size_t>(p)], candidates[pick]);
                const int doc = candidates[static_cast<size_t>(p)];
                auto& section = grid[static_cast<size_t>(doc)][static_cast<size_t>(
                    rand_range(rng, 0, sections - 1))];
                const size_t slot =
                    static_cast<size_t>(rand_range(rng, 0, static_cast<long>(section.size())));
                section.insert(section.begin() + static_cast<std::ptrdiff_t>(slot), fact.sentence);
            }
            q.facts.push_back(fact.sentence);
            planted.push_back(std::move(fact));
        }
        out.gt.facts_by_query[q.id] = std::move(planted);
        out.queries.push_back(std::move(q));
    }

    for (int d = 0; d < spec.n_docs; ++d) {
        Document doc;
        doc.id = doc_id_for(d);
        doc.title = "Guide " + std::to_string(d);
        std::ostringstream body;
        body << "# Guide " << d << "\n\n";
        for (int s = 0; s < sections; ++s) {
            if (s > 0) body << "## Topic " << d << "-" << s << "\n\n";
            bool first = true;
            for (const std::string& sentence : grid[static_cast<size_t>(d)][static_cast<size_t>(s)]) {
                if (!first) body << " ";
                body << sentence;
                first = false;
            }
            body << "\n\n";
        }
        doc.body = body.str();
        doc.metadata.length_chars = utf8::length(doc.body);
        doc.metadata.engagement_count = rand_range(rng, spec.meta.engagement_min,
                                                   spec.meta.engagement_max);
        doc.metadata.poi_count = rand_range(rng, spec.meta.poi_min, spec.meta.poi_max);
        doc.metadata.quality_ok = rand_unit(rng) < spec.meta.quality_ok_rate;
        out.docs.push_back(std::move(doc));
    }
    return out;
}

void TrueGT::compute_positives(const std::string& strategy_id, const std::vector<Chunk>& chunks) {
    auto& by_query = positives_[strategy_id];
    for (const auto& [query_id, facts] : facts_by_query) {
        std::set<std::string>& pos = by_query[query_id];
        for (const Chunk& chunk : chunks) {
            const std::string chunk_norm = text::normalize(chunk.text);
            for (const PlantedFact& fact : facts) {
                if (chunk_norm.find(text::normalize(fact.token)) != std::string::npos) {
                    pos.insert(chunk.id);
                    break;
                }
            }
        }
    }
}

bool TrueGT::has_strategy(const std::string& strategy_id) const {
    return positives_.count(strategy_id) > 0;
}

const std::set<std::string>& TrueGT::positives_for(const std::string& query_id,
                                                   const std::string& strategy_id) const {
    auto it = positives_.find(strategy_id);
    if (it == positives_.end()) {
        throw std::invalid_argument("true GT has no positives for segmentation " + strategy_id);
    }
    auto qit = it->second.find(query_id);
    return qit == it->second.end() ? empty_ : qit->second;
}

FullEvalResult full_gt_eval(const RankedList& list, const TrueGT& gt,
                            const std::string& query_id, const std::string& strategy_id, int k,
                            const ChunkStore& chunks) {
    if (k < 1) throw std::invalid_argument("full_gt_eval requires k >= 1");
    const std::set<std::string>& positives = gt.positives_for(query_id, strategy_id);
    auto facts_it = gt.facts_by_query.find(query_id);
    const std::vector<PlantedFact> no_facts;
    const std::vector<PlantedFact>& facts =
        facts_it == gt.facts_by_query.end() ? no_facts : facts_it->second;

    const size_t prefix = std::min(list.entries.size(), static_cast<size_t>(k));
    FullEvalResult r;
    std::set<std::string> covered_facts;
    for (size_t i = 0; i < prefix; ++i) {
        const std::string& chunk_id = list.entries[i].chunk_id;
        if (positives.count(chunk_id)) {
            ++r.counts.tp;
        } else {
            ++r.counts.fp;
        }
        const std::string chunk_norm = text::normalize(chunks.at(chunk_id).text);
        for (const PlantedFact& fact : facts) {
            if (chunk_norm.find(text::normalize(fact.token)) != std::string::npos) {
                covered_facts.insert(fact.token);
            }
        }
    }
    r.counts.fn = static_cast<long>(positives.size()) - r.counts.tp;
    r.counts.tn = static_cast<long>(chunks.size()) - r.counts.tp - r.counts.fp - r.counts.fn;
    r.precision = prefix == 0 ? 0.0 : static_cast<double>(r.counts.tp) / static_cast<double>(prefix);
    r.chunk_recall = positives.empty()
                         ? 0.0
                         : static_cast<double>(r.counts.tp) / static_cast<double>(positives.size());
    r.fact_recall = facts.empty() ? 0.0
                                  : static_cast<double>(covered_facts.size()) /
                                        static_cast<double>(facts.size());
    return r;
}

// --- Verification ---------------------------------------------------------------

std::shared_ptr<Embedder> make_hash_embedder(const std::string& id) {
    size_t dim = 64;
    const size_t dash = id.find_last_of('-');
    if (dash != std::string::npos) {
        const std::string suffix = id.substr(dash + 1);
        if (!suffix.empty() && suffix.find_first_not_of("0123456789") == std::string::npos) {
            dim = static_cast<size_t>(std::stoul(suffix));
        }
    }
    return std::make_shared<HashedBowEmbedder>(id, dim);
}

SyntheticSpec default_verify_synth() {
    SyntheticSpec spec;
    spec.seed = 7;
    spec.n_docs = 250;
    spec.n_queries = 50;
    spec.facts_per_query = 3;
    spec.fact_placements_per_fact = 3;
    spec.distractor_sentences_per_doc = 33;
    spec.sections_per_doc = 11;
    return spec;
}

std::vector<RetrieverSpec> default_verify_retrievers() {
    SegmentationSpec seg;
    seg.strategy = SegStrategy::nmns;

    RetrieverSpec dense64;
    dense64.id = "dense-h64";
    dense64.segmentation = seg;
    dense64.mode = RetrievalMode::dense;
    dense64.embedder_id = "hash-64";
    dense64.k = 20;
    dense64.pool_multiplier = 2;

    RetrieverSpec hybrid64 = dense64;
    hybrid64.id = "hybrid-h64";
    hybrid64.mode = RetrievalMode::hybrid;

    RetrieverSpec dense48 = dense64;
    dense48.id = "dense-h48";
    dense48.embedder_id = "hash-48";

    return {dense64, hybrid64, dense48};
}

namespace {

int sign_of(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

struct TempDir {
    std::filesystem::path path;
    bool owned = false;

    explicit TempDir(const std::filesystem::path& requested) {
        if (!requested.empty()) {
            path = requested;
            return;
        }
        path = std::filesystem::temp_directory_path() /
               ("pooleval-verify-" +
                std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        owned = true;
    }
    ~TempDir() {
        if (owned) {
            std::error_code ec;
            std::filesystem::remove_all(path, ec);
        }
    }
};

}  // namespace

VerificationReport verify_appendix_a(std::vector<RetrieverSpec> specs, const SyntheticSpec& synth,
                                     int k, const VerifyOptions& opts) {
    if (specs.size() < 2) throw std::invalid_argument("verification needs >= 2 retriever specs");
    if (k < 1) throw std::invalid_argument("verification needs k >= 1");
    const std::string strategy = specs.front().segmentation.id();
    for (auto& spec : specs) {
        if (spec.segmentation.id() != strategy) {
            throw std::invalid_argument(
                "verification retrievers must share one segmentation (got " + strategy + " and " +
                spec.segmentation.id() + ")");
        }
        spec.k = k;
    }

    SyntheticCorpus corpus = generate_synthetic_corpus(synth);

    RetrievalEngine engine(corpus.docs, opts.workers);
    for (const auto& spec : specs) {
        engine.register_embedder(make_hash_embedder(spec.embedder_id));
    }
    engine.set_rewriter(std::make_shared<TemplateRewriter>());
    engine.set_pointwise(std::make_shared<TokenOverlapScorer>());
    engine.set_listwise(std::make_shared<TokenOverlapListwise>());
    for (const auto& spec : specs) engine.prepare(spec);

    const ChunkStore& chunks = engine.chunks(strategy);
    corpus.gt.compute_positives(strategy, chunks.all());

    TempDir cache_dir(opts.cache_dir);
    auto cache = std::make_shared<AdapterCache>(cache_dir.path);

    std::shared_ptr<RelevanceJudge> base = std::make_shared<OracleJudge>(corpus.queries);
    const bool noisy = opts.noisy_flip_probability > 0.0;
    if (noisy) {
        base = std::make_shared<NoisyJudge>(base, opts.noisy_flip_probability, opts.noise_seed);
    }
    auto judge = std::make_shared<CachedJudge>(base, cache);
    auto extractor =
        std::make_shared<CachedExtractor>(std::make_shared<OracleExtractor>(corpus.queries), cache);

    VerificationReport report;
    report.mode = noisy ? "noisy" : "exact";
    report.n_chunks = chunks.size();

    struct QueryResult {
        std::vector<VerifyRow> rows;
        size_t pool_size = 0;
        size_t judged = 0;
        std::vector<std::string> failures;
        int pseudo_ge_true = 0, pseudo_checks = 0;
        int chunk_sign_ok = 0, fact_sign_ok = 0, pair_checks = 0;
        size_t equality_mismatches = 0, tp_zero = 0;
    };
    std::vector<QueryResult> results(corpus.queries.size());

    parallel_for(corpus.queries.size(), opts.workers, [&](size_t qi) {
        const Query& query = corpus.queries[qi];
        QueryResult& res = results[qi];

        std::vector<RankedList> lists;
        lists.reserve(specs.size());
        for (const auto& spec : specs) lists.push_back(engine.run_retriever(spec, query));

        const SubsetPool pool = build_subset(query.id, lists);
        res.pool_size = pool.chunk_ids.size();

        PseudoGTBuildStats stats;
        const PseudoGT pseudo = build_pseudo_gt(pool, query, *judge, *extractor, chunks, &stats);
        res.judged = stats.judged;

        const std::set<std::string>& positives = corpus.gt.positives_for(query.id, strategy);
        long fn_res = 0;
        for (const std::string& id : positives) {
            if (!pool.chunk_ids.count(id)) ++fn_res;
        }
        long pool_negatives = 0;
        for (const std::string& id : pool.chunk_ids) {
            if (!positives.count(id)) ++pool_negatives;
        }
        const long tn_res =
            static_cast<long>(chunks.size()) - static_cast<long>(positives.size()) - pool_negatives;

        for (size_t si = 0; si < specs.size(); ++si) {
            const RankedList& list = lists[si];
            VerifyRow row;
            row.query_id = query.id;
            row.retriever_id = specs[si].id;
            row.fn_res = fn_res;
            row.tn_res = tn_res;

            std::set<std::string> true_tp_set, pseudo_tp_set;
            for (const RankedEntry& e : list.entries) {
                if (positives.count(e.chunk_id)) true_tp_set.insert(e.chunk_id);
                if (pseudo.relevant_chunk_ids.count(e.chunk_id)) pseudo_tp_set.insert(e.chunk_id);
            }
            const auto prefix = static_cast<long>(list.entries.size());
            row.tp_true = static_cast<long>(true_tp_set.size());
            row.fp_true = prefix - row.tp_true;
            row.tp_pseudo = static_cast<long>(pseudo_tp_set.size());
            row.fp_pseudo = prefix - row.tp_pseudo;
            row.predicted_positive_sets_equal = (true_tp_set == pseudo_tp_set);

            row.precision_true =
                prefix == 0 ? 0.0 : static_cast<double>(row.tp_true) / static_cast<double>(prefix);
            row.precision_pseudo = prefix == 0 ? 0.0
                                               : static_cast<double>(row.tp_pseudo) /
                                                     static_cast<double>(prefix);
            row.chunk_recall_true = positives.empty() ? 0.0
                                                      : static_cast<double>(row.tp_true) /
                                                            static_cast<double>(positives.size());
            const size_t pseudo_positive_count = pseudo.relevant_chunk_ids.size();
            row.chunk_recall_pseudo = pseudo_positive_count == 0
                                          ? 0.0
                                          : static_cast<double>(row.tp_pseudo) /
                                                static_cast<double>(pseudo_positive_count);

            const FullEvalResult full = full_gt_eval(list, corpus.gt, query.id, strategy, k, chunks);
            row.fact_recall_true = full.fact_recall;
            row.fact_recall_pseudo = confusion_at_k(list, pseudo, k, chunks).recall;

            if (!noisy) {
                if (!row.predicted_positive_sets_equal) {
                    res.failures.push_back("query " + query.id + " retriever " + specs[si].id +
                                           ": predicted positive sets differ between pseudo and "
                                           "true GT");
                }
                if (row.precision_pseudo != row.precision_true) {
                    res.failures.push_back("query " + query.id + " retriever " + specs[si].id +
                                           ": precision delta " +
                                           std::to_string(row.precision_pseudo -
                                                          row.precision_true));
                }
                if (row.chunk_recall_pseudo < row.chunk_recall_true) {
                    res.failures.push_back("query " + query.id + " retriever " + specs[si].id +
                                           ": pseudo recall below true recall");
                }
                const bool equal_recall = row.chunk_recall_pseudo == row.chunk_recall_true;
                if (row.tp_true == 0) {
                    ++res.tp_zero;
                } else if (equal_recall != (fn_res == 0)) {
                    ++res.equality_mismatches;
                    res.failures.push_back("query " + query.id + " retriever " + specs[si].id +
                                           ": recall equality inconsistent with FN_res=" +
                                           std::to_string(fn_res));
                }
            }
            ++res.pseudo_checks;
            if (row.chunk_recall_pseudo >= row.chunk_recall_true) ++res.pseudo_ge_true;
            res.rows.push_back(row);
        }

        if (res.judged > pool.chunk_ids.size()) {
            res.failures.push_back("query " + query.id + ": judged more chunks than the pool holds");
        }

        for (size_t a = 0; a < specs.size(); ++a) {
            for (size_t b = a + 1; b < specs.size(); ++b) {
                const VerifyRow& ra = res.rows[a];
                const VerifyRow& rb = res.rows[b];
                ++res.pair_checks;
                const int chunk_pseudo =
                    sign_of(ra.chunk_recall_pseudo - rb.chunk_recall_pseudo);
                const int chunk_true = sign_of(ra.chunk_recall_true - rb.chunk_recall_true);
                // Shared denominators reduce the ordering claim to TP counts.
                const int tp_pseudo_sign = sign_of(static_cast<double>(ra.tp_pseudo - rb.tp_pseudo));
                const int tp_true_sign = sign_of(static_cast<double>(ra.tp_true - rb.tp_true));
                const bool chunk_ok = chunk_pseudo == chunk_true && tp_pseudo_sign == tp_true_sign;
                if (chunk_ok) {
                    ++res.chunk_sign_ok;
                } else if (!noisy) {
                    res.failures.push_back("query " + query.id + " pair (" + ra.retriever_id +
                                           ", " + rb.retriever_id +
                                           "): recall ordering not preserved");
                }
                const int fact_pseudo = sign_of(ra.fact_recall_pseudo - rb.fact_recall_pseudo);
                const int fact_true = sign_of(ra.fact_recall_true - rb.fact_recall_true);
                if (fact_pseudo == fact_true) {
                    ++res.fact_sign_ok;
                } else if (!noisy) {
                    res.failures.push_back("query " + query.id + " pair (" + ra.retriever_id +
                                           ", " + rb.retriever_id +
                                           "): fact recall ordering not preserved");
                }
            }
        }
    });

    size_t pseudo_ge = 0, pseudo_checks = 0, chunk_sign_ok = 0, fact_sign_ok = 0, pair_checks = 0;
    for (const QueryResult& res : results) {
        report.rows.insert(report.rows.end(), res.rows.begin(), res.rows.end());
        report.failures.insert(report.failures.end(), res.failures.begin(), res.failures.end());
        report.pool_sizes.push_back(res.pool_size);
        report.pool_total += res.pool_size;
        report.equality_mismatches += res.equality_mismatches;
        report.tp_zero_pairs += res.tp_zero;
        pseudo_ge += static_cast<size_t>(res.pseudo_ge_true);
        pseudo_checks += static_cast<size_t>(res.pseudo_checks);
        chunk_sign_ok += static_cast<size_t>(res.chunk_sign_ok);
        fact_sign_ok += static_cast<size_t>(res.fact_sign_ok);
        pair_checks += static_cast<size_t>(res.pair_checks);
    }
    for (const VerifyRow& row : report.rows) {
        report.max_precision_delta = std::max(
            report.max_precision_delta, std::abs(row.precision_pseudo - row.precision_true));
    }
    report.pseudo_ge_true_rate =
        pseudo_checks == 0 ? 1.0 : static_cast<double>(pseudo_ge) / pseudo_checks;
    report.chunk_recall_sign_agreement_rate =
        pair_checks == 0 ? 1.0 : static_cast<double>(chunk_sign_ok) / pair_checks;
    report.fact_recall_sign_agreement_rate =
        pair_checks == 0 ? 1.0 : static_cast<double>(fact_sign_ok) / pair_checks;
    report.sign_checks = pair_checks;
    report.judge_calls = judge->inner_calls();
    for (const auto& spec : specs) {
        report.sum_topk_total += static_cast<size_t>(spec.k) * corpus.queries.size();
    }
    if (report.judge_calls > report.pool_total) {
        report.failures.push_back("judge calls (" + std::to_string(report.judge_calls) +
                                  ") exceed the pooled-union size (" +
                                  std::to_string(report.pool_total) + ")");
    }
    report.passed = noisy || report.failures.empty();
    return report;
}

std::string VerificationReport::summary() const {
    std::ostringstream s;
    s << (passed ? "PASS" : "FAIL") << " mode=" << mode << " chunks=" << n_chunks
      << " rows=" << rows.size() << "\n"
      << "  max |precision' - precision|      = " << max_precision_delta << "\n"
      << "  chunk recall sign agreement       = " << chunk_recall_sign_agreement_rate << " over "
      << sign_checks << " pairs\n"
      << "  fact recall sign agreement        = " << fact_recall_sign_agreement_rate << "\n"
      << "  pseudo recall >= true recall rate = " << pseudo_ge_true_rate << "\n"
      << "  recall-equality mismatches        = " << equality_mismatches
      << " (tp=0 rows: " << tp_zero_pairs << ")\n"
      << "  judge calls = " << judge_calls << ", pooled union = " << pool_total
      << ", sum of K over queries = " << sum_topk_total << "\n";
    if (!failures.empty()) {
        s << "  first failures:\n";
        for (size_t i = 0; i < failures.size() && i < 5; ++i) s << "    - " << failures[i] << "\n";
        if (failures.size() > 5) s << "    ... " << failures.size() - 5 << " more\n";
    }
    return s.str();
}

void write_verification_report(const VerificationReport& report,
                               const std::filesystem::path& path) {
    nlohmann::json rows = nlohmann::json::array();
    for (const VerifyRow& r : report.rows) {
        rows.push_back({{"query_id", r.query_id},
                        {"retriever_id", r.retriever_id},
                        {"tp_true", r.tp_true},
                        {"fp_true", r.fp_true},
                        {"tp_pseudo", r.tp_pseudo},
                        {"fp_pseudo", r.fp_pseudo},
                        {"precision_true", r.precision_true},
                        {"precision_pseudo", r.precision_pseudo},
                        {"chunk_recall_true", r.chunk_recall_true},
                        {"chunk_recall_pseudo", r.chunk_recall_pseudo},
                        {"fact_recall_true", r.fact_recall_true},
                        {"fact_recall_pseudo", r.fact_recall_pseudo},
                        {"fn_res", r.fn_res},
                        {"tn_res", r.tn_res},
                        {"predicted_positive_sets_equal", r.predicted_positive_sets_equal}});
    }
    nlohmann::json doc{
        {"passed", report.passed},
        {"mode", report.mode},
        {"n_chunks", report.n_chunks},
        {"max_precision_delta", report.max_precision_delta},
        {"chunk_recall_sign_agreement_rate", report.chunk_recall_sign_agreement_rate},
        {"fact_recall_sign_agreement_rate", report.fact_recall_sign_agreement_rate},
        {"pseudo_ge_true_rate", report.pseudo_ge_true_rate},
        {"equality_mismatches", report.equality_mismatches},
        {"tp_zero_pairs", report.tp_zero_pairs},
        {"judge_calls", report.judge_calls},
        {"pool_total", report.pool_total},
        {"pool_sizes", report.pool_sizes},
        {"sum_topk_total", report.sum_topk_total},
        {"failures", report.failures},
        {"rows", rows},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write verification report: " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace pooleval
