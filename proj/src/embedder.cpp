#include "pooleval/embedder.hpp"

#include <cmath>
#include <stdexcept>

#include "pooleval/text.hpp"

namespace pooleval {

namespace {

void unit_normalize(EmbeddingVector& v) {
    double sq = 0.0;
    for (double x : v.values) {
        if (!std::isfinite(x)) throw std::runtime_error("embedding contains non-finite value");
        sq += x * x;
    }
    if (sq == 0.0) {
        // Cosine must stay defined; map degenerate inputs to a fixed basis vector.
        v.values.assign(v.values.size(), 0.0);
        if (!v.values.empty()) v.values[0] = 1.0;
        return;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v.values) x *= inv;
}

}  // namespace

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine undefined for zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashedBowEmbedder::HashedBowEmbedder(std::string id, size_t dim)
    : id_(std::move(id)), dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("embedder dim must be positive");
}

size_t HashedBowEmbedder::bucket_of(const std::string& token, size_t dim,
                                    const std::string& embedder_id) {
    const uint64_t seed = text::fnv1a64(embedder_id);
    return static_cast<size_t>(text::fnv1a64(token, seed) % dim);
}

double HashedBowEmbedder::sign_of(const std::string& token, const std::string& embedder_id) {
    const uint64_t seed = text::fnv1a64(embedder_id);
    return (text::fnv1a64(token, seed) >> 32 & 1ULL) ? 1.0 : -1.0;
}

EmbeddingVector HashedBowEmbedder::embed(const std::string& text_in) {
    if (text_in.empty()) throw std::invalid_argument("cannot embed empty text");
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    for (const std::string& token : text::tokenize(text_in)) {
        v.values[bucket_of(token, dim_, id_)] += sign_of(token, id_);
    }
    unit_normalize(v);
    return v;
}

RemoteEmbedder::RemoteEmbedder(std::string id, size_t dim,
                               std::shared_ptr<HttpAdapterClient> client,
                               std::shared_ptr<AdapterCache> cache)
    : id_(std::move(id)), dim_(dim), client_(std::move(client)), cache_(std::move(cache)) {}

EmbeddingVector RemoteEmbedder::embed(const std::string& text_in) {
    if (text_in.empty()) throw std::invalid_argument("cannot embed empty text");
    const std::string& model = client_->endpoint().model;
    const std::string& pv = client_->endpoint().prompt_version;

    nlohmann::json raw;
    if (cache_) {
        if (auto hit = cache_->lookup("embed", model, pv, text_in)) {
            raw = *hit;
        }
    }
    if (raw.is_null()) {
        nlohmann::json outputs = client_->call("embed", nlohmann::json::array({text_in}), {});
        if (outputs.size() != 1 || !outputs[0].is_array()) {
            throw AdapterError("embed adapter returned malformed outputs");
        }
        raw = outputs[0];
        if (cache_) cache_->store("embed", model, pv, text_in, raw);
    }

    EmbeddingVector v;
    v.values = raw.get<std::vector<double>>();
    if (v.values.size() != dim_) {
        throw AdapterError("embed adapter returned dim " + std::to_string(v.values.size()) +
                           ", expected " + std::to_string(dim_));
    }
    unit_normalize(v);
    return v;
}

}  // namespace pooleval
