#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pooleval/adapter.hpp"

namespace pooleval {

struct EmbeddingVector {
    std::vector<double> values;
    size_t dim() const { return values.size(); }
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual size_t dim() const = 0;
    // Deterministic per (id, text); output is unit-normalized. Throws
    // std::invalid_argument on empty text.
    virtual EmbeddingVector embed(const std::string& text) = 0;
};

// Deterministic hashed bag-of-words embedder for offline runs and tests.
// Tokens hash into `dim` signed buckets (feature hashing); the embedder id
// seeds the hash so two ids with equal dim are still distinct embedders.
class HashedBowEmbedder : public Embedder {
public:
    HashedBowEmbedder(std::string id, size_t dim);

    std::string id() const override { return id_; }
    size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;

    // Exposed so tests can enumerate bucket assignments.
    static size_t bucket_of(const std::string& token, size_t dim, const std::string& embedder_id);
    static double sign_of(const std::string& token, const std::string& embedder_id);

private:
    std::string id_;
    size_t dim_;
};

class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(std::string id, size_t dim, std::shared_ptr<HttpAdapterClient> client,
                   std::shared_ptr<AdapterCache> cache);

    std::string id() const override { return id_; }
    size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;

private:
    std::string id_;
    size_t dim_;
    std::shared_ptr<HttpAdapterClient> client_;
    std::shared_ptr<AdapterCache> cache_;
};

}  // namespace pooleval
