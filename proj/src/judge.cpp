#include "pooleval/judge.hpp"

#include <algorithm>
#include <cctype>

#include "pooleval/jsonl.hpp"
#include "pooleval/log.hpp"
#include "pooleval/text.hpp"
#include "pooleval/utf8.hpp"

namespace pooleval {

namespace {

std::string render_prompt(const std::string& tmpl, const Query& query, const Chunk& chunk) {
    std::string out = tmpl;
    auto replace_all = [&out](const std::string& key, const std::string& value) {
        size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    };
    replace_all("{query}", query.text);
    replace_all("{chunk}", chunk.text);
    return out;
}

std::string strip_word_punct(std::string w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) && w.back() != '-') {
        w.pop_back();
    }
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front())) && w.front() != '-') {
        w.erase(w.begin());
    }
    return w;
}

std::string judge_cache_input(const Query& query, const Chunk& chunk) {
    std::string s;
    s.reserve(query.text.size() + chunk.text.size() + 1);
    s += query.text;
    s += '\x1f';
    s += chunk.text;
    return s;
}

}  // namespace

// --- Oracle adapters ---------------------------------------------------------

std::string OracleJudge::fact_token(const std::string& fact_sentence) {
    size_t start = 0;
    while (start < fact_sentence.size()) {
        size_t end = fact_sentence.find(' ', start);
        if (end == std::string::npos) end = fact_sentence.size();
        const std::string word = strip_word_punct(fact_sentence.substr(start, end - start));
        if (word.rfind("FACT-", 0) == 0) return word;
        start = end + 1;
    }
    return fact_sentence;
}

OracleJudge::OracleJudge(const std::vector<Query>& queries) {
    for (const Query& q : queries) {
        std::vector<std::string> tokens;
        for (const std::string& fact : q.facts) {
            tokens.push_back(text::normalize(fact_token(fact)));
        }
        tokens_by_query_[q.id] = std::move(tokens);
    }
}

Judgment OracleJudge::judge(const Query& query, const Chunk& chunk) {
    const std::vector<std::string>* tokens = nullptr;
    auto it = tokens_by_query_.find(query.id);
    std::vector<std::string> local;
    if (it != tokens_by_query_.end()) {
        tokens = &it->second;
    } else {
        for (const std::string& fact : query.facts) local.push_back(text::normalize(fact_token(fact)));
        tokens = &local;
    }
    const std::string chunk_norm = text::normalize(chunk.text);
    bool relevant = false;
    for (const std::string& token : *tokens) {
        if (!token.empty() && chunk_norm.find(token) != std::string::npos) {
            relevant = true;
            break;
        }
    }
    return Judgment{query.id, chunk.id, relevant, id(), prompt_version()};
}

OracleExtractor::OracleExtractor(const std::vector<Query>& queries) {
    for (const Query& q : queries) facts_by_query_[q.id] = q.facts;
}

FactExtraction OracleExtractor::extract(const Query& query, const Chunk& chunk) {
    const std::vector<std::string>* facts = &query.facts;
    auto it = facts_by_query_.find(query.id);
    if (it != facts_by_query_.end() && !it->second.empty()) facts = &it->second;

    FactExtraction out{query.id, chunk.id, {}};
    for (const std::string& sentence : *facts) {
        if (auto span = locate_span(chunk.text, sentence, 1.0)) {
            out.facts.push_back(
                {std::string(utf8::substr(chunk.text, span->start, span->end)), *span});
            continue;
        }
        // Secondary segmentation may have cut the sentence; the marker alone
        // still identifies the fact.
        const std::string token = OracleJudge::fact_token(sentence);
        if (token != sentence) {
            if (auto span = locate_span(chunk.text, token, 1.0)) {
                out.facts.push_back(
                    {std::string(utf8::substr(chunk.text, span->start, span->end)), *span});
            }
        }
    }
    if (out.facts.empty()) {
        out.facts.push_back({chunk.text, {0, utf8::length(chunk.text)}});
    }
    return out;
}

NoisyJudge::NoisyJudge(std::shared_ptr<RelevanceJudge> inner, double flip_probability,
                       uint64_t seed)
    : inner_(std::move(inner)), flip_probability_(flip_probability), seed_(seed) {}

std::string NoisyJudge::id() const { return inner_->id() + "+noise"; }

Judgment NoisyJudge::judge(const Query& query, const Chunk& chunk) {
    Judgment j = inner_->judge(query, chunk);
    j.judge_id = id();
    if (j.relevant.has_value() && flip_probability_ > 0.0) {
        const uint64_t h =
            text::fnv1a64(query.id + '\x1f' + chunk.id, text::fnv1a64(std::to_string(seed_)));
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        if (u < flip_probability_) j.relevant = !*j.relevant;
    }
    return j;
}

// --- Remote adapters ----------------------------------------------------------

RemoteJudge::RemoteJudge(std::shared_ptr<HttpAdapterClient> client, JudgePrompts prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

std::string RemoteJudge::id() const { return "remote:" + client_->endpoint().model; }
std::string RemoteJudge::prompt_version() const { return client_->endpoint().prompt_version; }

std::optional<bool> RemoteJudge::parse_verdict(const nlohmann::json& output) {
    if (output.is_boolean()) return output.get<bool>();
    if (output.is_object() && output.contains("relevant") && output["relevant"].is_boolean()) {
        return output["relevant"].get<bool>();
    }
    if (!output.is_string()) return std::nullopt;
    std::string s = output.get<std::string>();
    std::string word;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!word.empty()) {
            break;
        }
    }
    if (word == "yes" || word == "true" || word == "relevant") return true;
    if (word == "no" || word == "false" || word == "irrelevant") return false;
    return std::nullopt;
}

Judgment RemoteJudge::judge(const Query& query, const Chunk& chunk) {
    const std::string prompt = render_prompt(prompts_.judge_template, query, chunk);
    Judgment j{query.id, chunk.id, std::nullopt, id(), prompt_version()};
    for (int attempt = 0; attempt < 2; ++attempt) {
        nlohmann::json params;
        if (attempt > 0) params["repair"] = true;
        nlohmann::json outputs =
            client_->call("judge", nlohmann::json::array({prompt}), std::move(params));
        if (outputs.size() == 1) {
            if (auto verdict = parse_verdict(outputs[0])) {
                j.relevant = *verdict;
                return j;
            }
        }
    }
    log_warn("judge verdict unparseable for query " + query.id + " chunk " + chunk.id +
             "; chunk excluded from the pool");
    return j;
}

RemoteExtractor::RemoteExtractor(std::shared_ptr<HttpAdapterClient> client, JudgePrompts prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

std::string RemoteExtractor::id() const { return "remote:" + client_->endpoint().model; }
std::string RemoteExtractor::prompt_version() const { return client_->endpoint().prompt_version; }

FactExtraction RemoteExtractor::extract(const Query& query, const Chunk& chunk) {
    const std::string prompt = render_prompt(prompts_.extract_template, query, chunk);
    nlohmann::json outputs = client_->call("extract", nlohmann::json::array({prompt}), {});
    FactExtraction out{query.id, chunk.id, {}};
    if (outputs.size() == 1 && outputs[0].is_array()) {
        for (const auto& item : outputs[0]) {
            if (!item.is_string()) continue;
            const std::string fact = item.get<std::string>();
            if (fact.empty()) continue;
            if (auto span = locate_span(chunk.text, fact, kFuzzyThreshold)) {
                out.facts.push_back(
                    {std::string(utf8::substr(chunk.text, span->start, span->end)), *span});
            } else {
                log_warn("extracted fact not found in chunk " + chunk.id + " for query " +
                         query.id + "; dropped: \"" + fact + "\"");
            }
        }
    }
    if (out.facts.empty()) {
        log_warn("no extracted fact matched chunk " + chunk.id + " for query " + query.id +
                 "; falling back to the whole chunk");
        out.facts.push_back({chunk.text, {0, utf8::length(chunk.text)}});
    }
    return out;
}

std::optional<Span> locate_span(const std::string& haystack, const std::string& needle,
                                double threshold) {
    if (needle.empty()) return std::nullopt;
    const size_t byte_pos = haystack.find(needle);
    if (byte_pos != std::string::npos) {
        const size_t cp_start = utf8::length(std::string_view(haystack).substr(0, byte_pos));
        return Span{cp_start, cp_start + utf8::length(needle)};
    }
    if (threshold >= 1.0) return std::nullopt;

    const utf8::Index hay(haystack);
    const size_t n = hay.cp_length();
    const size_t m = utf8::length(needle);
    if (n == 0 || m == 0) return std::nullopt;
    const std::string needle_norm = text::normalize(needle);

    double best = 0.0;
    Span best_span{0, 0};
    if (m >= n) {
        best = text::similarity_ratio(text::normalize(haystack), needle_norm);
        best_span = {0, n};
    } else {
        for (size_t start = 0; start + m <= n; ++start) {
            const std::string window_norm = text::normalize(hay.slice(start, start + m));
            const double sim = text::similarity_ratio(window_norm, needle_norm);
            if (sim > best) {
                best = sim;
                best_span = {start, start + m};
            }
        }
    }
    if (best >= threshold) return best_span;
    return std::nullopt;
}

// --- Cache decorators -----------------------------------------------------------

CachedJudge::CachedJudge(std::shared_ptr<RelevanceJudge> inner,
                         std::shared_ptr<AdapterCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

Judgment CachedJudge::judge(const Query& query, const Chunk& chunk) {
    const std::string input = judge_cache_input(query, chunk);
    if (cache_) {
        if (auto hit = cache_->lookup("judge", inner_->id(), inner_->prompt_version(), input)) {
            Judgment j{query.id, chunk.id, std::nullopt, inner_->id(), inner_->prompt_version()};
            if (hit->contains("relevant") && (*hit)["relevant"].is_boolean()) {
                j.relevant = (*hit)["relevant"].get<bool>();
            }
            return j;
        }
    }
    inner_calls_.fetch_add(1);
    Judgment j = inner_->judge(query, chunk);
    // Unjudged verdicts are not cached so a rerun can retry them.
    if (cache_ && j.relevant.has_value()) {
        cache_->store("judge", inner_->id(), inner_->prompt_version(), input,
                      nlohmann::json{{"relevant", *j.relevant}});
    }
    return j;
}

CachedExtractor::CachedExtractor(std::shared_ptr<FactExtractor> inner,
                                 std::shared_ptr<AdapterCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

FactExtraction CachedExtractor::extract(const Query& query, const Chunk& chunk) {
    const std::string input = judge_cache_input(query, chunk);
    if (cache_) {
        if (auto hit = cache_->lookup("extract", inner_->id(), inner_->prompt_version(), input)) {
            FactExtraction out{query.id, chunk.id, {}};
            for (const auto& f : (*hit)["facts"]) {
                out.facts.push_back({f.at("text").get<std::string>(),
                                     {f.at("start").get<size_t>(), f.at("end").get<size_t>()}});
            }
            return out;
        }
    }
    inner_calls_.fetch_add(1);
    FactExtraction out = inner_->extract(query, chunk);
    if (cache_) {
        nlohmann::json facts = nlohmann::json::array();
        for (const auto& f : out.facts) {
            facts.push_back({{"text", f.text}, {"start", f.span.start}, {"end", f.span.end}});
        }
        cache_->store("extract", inner_->id(), inner_->prompt_version(), input,
                      nlohmann::json{{"facts", facts}});
    }
    return out;
}

void dump_judgments_jsonl(const std::vector<Judgment>& judgments,
                          const std::filesystem::path& path) {
    jsonl::Writer out(path);
    for (const Judgment& j : judgments) {
        nlohmann::json rec{{"query_id", j.query_id},
                           {"chunk_id", j.chunk_id},
                           {"judge_id", j.judge_id},
                           {"prompt_version", j.prompt_version}};
        if (j.relevant.has_value()) {
            rec["relevant"] = *j.relevant;
        } else {
            rec["relevant"] = nullptr;
        }
        out.write(rec);
    }
}

}  // namespace pooleval
