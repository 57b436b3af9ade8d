#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace pooleval {

// Remote adapter failure after all retries were spent.
struct AdapterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A remote call was required while --offline forbids them.
struct OfflineError : AdapterError {
    using AdapterError::AdapterError;
};

// Append-only response cache shared by every remote adapter. Records are
// line-delimited JSON under <dir>/cache.jsonl keyed by a content hash of
// (kind, model, prompt_version, input); lookups verify the full key material
// so hash collisions cannot alias. Replays last-write-wins, which also makes
// hand-edited records (e.g. a flipped judgment) authoritative on reload.
class AdapterCache {
public:
    explicit AdapterCache(const std::filesystem::path& dir);

    std::optional<nlohmann::json> lookup(const std::string& kind, const std::string& model,
                                         const std::string& prompt_version,
                                         const std::string& input);
    void store(const std::string& kind, const std::string& model,
               const std::string& prompt_version, const std::string& input,
               const nlohmann::json& output);

    size_t hits() const { return hits_.load(); }
    size_t misses() const { return misses_.load(); }
    void reset_counters();

    static std::string key_hash(const std::string& kind, const std::string& model,
                                const std::string& prompt_version, const std::string& input);

private:
    struct Entry {
        std::string kind, model, prompt_version, input;
        nlohmann::json output;
    };

    std::filesystem::path file_;
    std::ofstream append_;
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::vector<size_t>> index_;
    mutable std::mutex mutex_;
    std::atomic<size_t> hits_{0};
    std::atomic<size_t> misses_{0};
};

struct RemoteEndpoint {
    std::string url;  // scheme://host:port
    std::string model;
    std::string prompt_version = "v1";
    int timeout_ms = 30000;
    int retries = 2;  // attempts after the first
};

// Minimal HTTP+JSON adapter protocol: POST /v1/adapter with
//   {"kind": ..., "model": ..., "inputs": [...], "params": {...}}
// and a 200 response of {"outputs": [...]} aligned with inputs. Credentials,
// if any, come from the POOLEVAL_ADAPTER_TOKEN environment variable.
class HttpAdapterClient {
public:
    HttpAdapterClient(RemoteEndpoint endpoint,
                      std::shared_ptr<std::counting_semaphore<>> inflight, bool offline);

    // Returns the outputs array. Throws OfflineError in offline mode and
    // AdapterError once retries are exhausted.
    nlohmann::json call(const std::string& kind, const nlohmann::json& inputs,
                        nlohmann::json params);

    const RemoteEndpoint& endpoint() const { return endpoint_; }
    size_t requests_sent() const { return requests_.load(); }

private:
    RemoteEndpoint endpoint_;
    std::shared_ptr<std::counting_semaphore<>> inflight_;
    bool offline_;
    std::atomic<size_t> requests_{0};
};

}  // namespace pooleval
