#include "pooleval/pseudogt.hpp"

#include <algorithm>
#include <numeric>

#include "pooleval/jsonl.hpp"
#include "pooleval/log.hpp"
#include "pooleval/text.hpp"

namespace pooleval {

SubsetPool build_subset(const std::string& query_id, const std::vector<RankedList>& results) {
    if (results.size() < 2) {
        throw std::invalid_argument("pooling requires >=2 retrievers, got " +
                                    std::to_string(results.size()));
    }
    std::set<std::string> retriever_ids;
    SubsetPool pool;
    pool.query_id = query_id;
    for (const RankedList& list : results) {
        if (list.query_id != query_id) {
            throw std::invalid_argument("pool for " + query_id + " given list for " +
                                        list.query_id);
        }
        if (!retriever_ids.insert(list.retriever_id).second) {
            throw std::invalid_argument("duplicate retriever in pool: " + list.retriever_id);
        }
        for (const RankedEntry& e : list.entries) {
            pool.chunk_ids.insert(e.chunk_id);
            pool.contributors[e.chunk_id].insert(list.retriever_id);
        }
    }
    return pool;
}

PseudoGT build_pseudo_gt(const SubsetPool& pool, const Query& query, RelevanceJudge& judge,
                         FactExtractor& extractor, const ChunkStore& chunks,
                         PseudoGTBuildStats* stats, std::vector<Judgment>* judgments_out) {
    PseudoGT gt;
    gt.query_id = pool.query_id;

    auto* cached = dynamic_cast<CachedJudge*>(&judge);
    const size_t inner_before = cached ? cached->inner_calls() : 0;

    std::vector<FactExtraction> extractions;
    for (const std::string& chunk_id : pool.chunk_ids) {  // std::set: ascending id order
        const Chunk& chunk = chunks.at(chunk_id);
        const Judgment j = judge.judge(query, chunk);
        if (judgments_out) judgments_out->push_back(j);
        if (!j.judged()) {
            if (stats) ++stats->unjudged;
            continue;
        }
        if (stats) ++stats->judged;
        if (*j.relevant) {
            gt.relevant_chunk_ids.insert(chunk_id);
            extractions.push_back(extractor.extract(query, chunk));
        }
    }
    gt.facts = canonicalize_facts(extractions);
    if (stats && cached) stats->judge_calls += cached->inner_calls() - inner_before;
    else if (stats) stats->judge_calls += stats->judged + stats->unjudged;
    return gt;
}

std::string fact_id_for(const std::string& canonical_text) {
    return "f" + text::hex64(text::fnv1a64(canonical_text));
}

namespace {

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    size_t find(size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(size_t a, size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<MinimalFact> canonicalize_facts(const std::vector<FactExtraction>& extractions) {
    struct Item {
        std::string norm;
        std::string chunk_id;
        Span span;
    };
    std::vector<Item> items;
    for (const FactExtraction& ex : extractions) {
        for (const ExtractedFact& f : ex.facts) {
            const std::string norm = text::normalize(f.text);
            if (norm.empty()) continue;
            items.push_back({norm, ex.chunk_id, f.span});
        }
    }
    if (items.empty()) return {};

    UnionFind uf(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
        for (size_t j = i + 1; j < items.size(); ++j) {
            const std::string& a = items[i].norm;
            const std::string& b = items[j].norm;
            if (a == b || a.find(b) != std::string::npos || b.find(a) != std::string::npos) {
                uf.unite(i, j);
            }
        }
    }

    std::map<size_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < items.size(); ++i) groups[uf.find(i)].push_back(i);

    std::vector<MinimalFact> facts;
    for (const auto& [root, members] : groups) {
        // Shortest normalized text wins; ties resolved lexicographically.
        const std::string* canonical = &items[members.front()].norm;
        for (size_t m : members) {
            const std::string& cand = items[m].norm;
            const size_t cl = utf8::length(*canonical);
            const size_t nl = utf8::length(cand);
            if (nl < cl || (nl == cl && cand < *canonical)) canonical = &cand;
        }
        MinimalFact fact;
        fact.canonical_text = *canonical;
        fact.fact_id = fact_id_for(fact.canonical_text);
        std::set<std::pair<std::string, std::pair<size_t, size_t>>> dedup;
        for (size_t m : members) {
            const auto key = std::make_pair(items[m].chunk_id,
                                            std::make_pair(items[m].span.start, items[m].span.end));
            if (dedup.insert(key).second) {
                fact.sources.emplace_back(items[m].chunk_id, items[m].span);
            }
        }
        std::sort(fact.sources.begin(), fact.sources.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second.start < b.second.start;
        });
        facts.push_back(std::move(fact));
    }
    std::sort(facts.begin(), facts.end(),
              [](const MinimalFact& a, const MinimalFact& b) { return a.fact_id < b.fact_id; });
    return facts;
}

bool covers(const Chunk& chunk, const MinimalFact& fact) {
    for (const auto& [chunk_id, span] : fact.sources) {
        if (chunk_id == chunk.id) return true;
    }
    return text::normalize(chunk.text).find(fact.canonical_text) != std::string::npos;
}

void dump_pseudo_gt_jsonl(const std::vector<PseudoGT>& gts, const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const PseudoGT& gt : gts) {
        nlohmann::json facts = nlohmann::json::array();
        for (const MinimalFact& f : gt.facts) {
            nlohmann::json sources = nlohmann::json::array();
            for (const auto& [chunk_id, span] : f.sources) {
                sources.push_back(
                    {{"chunk_id", chunk_id}, {"start", span.start}, {"end", span.end}});
            }
            facts.push_back({{"fact_id", f.fact_id},
                             {"canonical_text", f.canonical_text},
                             {"sources", sources}});
        }
        out.write(nlohmann::json{
            {"query_id", gt.query_id},
            {"relevant_chunk_ids",
             std::vector<std::string>(gt.relevant_chunk_ids.begin(), gt.relevant_chunk_ids.end())},
            {"facts", facts}});
    }
}

std::vector<PseudoGT> load_pseudo_gt_jsonl(const std::filesystem::path& path) {
    std::vector<PseudoGT> gts;
    jsonl::for_each(path, [&](const nlohmann::json& rec, size_t) {
        PseudoGT gt;
        gt.query_id = rec.at("query_id").get<std::string>();
        for (const auto& id : rec.at("relevant_chunk_ids")) {
            gt.relevant_chunk_ids.insert(id.get<std::string>());
        }
        for (const auto& f : rec.at("facts")) {
            MinimalFact fact;
            fact.fact_id = f.at("fact_id").get<std::string>();
            fact.canonical_text = f.at("canonical_text").get<std::string>();
            for (const auto& s : f.at("sources")) {
                fact.sources.emplace_back(
                    s.at("chunk_id").get<std::string>(),
                    Span{s.at("start").get<size_t>(), s.at("end").get<size_t>()});
            }
            gt.facts.push_back(std::move(fact));
        }
        gts.push_back(std::move(gt));
    });
    return gts;
}

void dump_pools_jsonl(const std::vector<SubsetPool>& pools, const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const SubsetPool& pool : pools) {
        nlohmann::json contributors = nlohmann::json::object();
        for (const auto& [chunk_id, ids] : pool.contributors) {
            contributors[chunk_id] = std::vector<std::string>(ids.begin(), ids.end());
        }
        out.write(nlohmann::json{
            {"query_id", pool.query_id},
            {"chunk_ids", std::vector<std::string>(pool.chunk_ids.begin(), pool.chunk_ids.end())},
            {"contributors", contributors}});
    }
}

void dump_ranked_lists_jsonl(const std::vector<RankedList>& lists,
                             const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const RankedList& list : lists) {
        nlohmann::json entries = nlohmann::json::array();
        for (const RankedEntry& e : list.entries) {
            entries.push_back({{"chunk_id", e.chunk_id}, {"score", e.score}, {"rank", e.rank}});
        }
        out.write(nlohmann::json{{"query_id", list.query_id},
                                 {"retriever_id", list.retriever_id},
                                 {"entries", entries}});
    }
}

std::vector<RankedList> load_ranked_lists_jsonl(const std::filesystem::path& path) {
    std::vector<RankedList> lists;
    jsonl::for_each(path, [&](const nlohmann::json& rec, size_t) {
        RankedList list;
        list.query_id = rec.at("query_id").get<std::string>();
        list.retriever_id = rec.at("retriever_id").get<std::string>();
        for (const auto& e : rec.at("entries")) {
            list.entries.push_back({e.at("chunk_id").get<std::string>(),
                                    e.at("score").get<double>(), e.at("rank").get<int>()});
        }
        lists.push_back(std::move(list));
    });
    return lists;
}

}  // namespace pooleval
