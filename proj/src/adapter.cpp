#include "pooleval/adapter.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "pooleval/jsonl.hpp"
#include "pooleval/text.hpp"

namespace pooleval {

AdapterCache::AdapterCache(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    file_ = dir / "cache.jsonl";
    if (std::filesystem::exists(file_)) {
        jsonl::for_each(file_, [&](const nlohmann::json& rec, size_t) {
            Entry e;
            e.kind = rec.value("kind", "");
            e.model = rec.value("model", "");
            e.prompt_version = rec.value("prompt_version", "");
            e.input = rec.value("input", "");
            e.output = rec.value("output", nlohmann::json());
            const std::string h = key_hash(e.kind, e.model, e.prompt_version, e.input);
            index_[h].push_back(entries_.size());
            entries_.push_back(std::move(e));
        });
    }
    append_.open(file_, std::ios::app);
    if (!append_) throw std::runtime_error("cannot open cache for append: " + file_.string());
}

std::string AdapterCache::key_hash(const std::string& kind, const std::string& model,
                                   const std::string& prompt_version, const std::string& input) {
    std::string material;
    material.reserve(kind.size() + model.size() + prompt_version.size() + input.size() + 3);
    material += kind;
    material += '\x1f';
    material += model;
    material += '\x1f';
    material += prompt_version;
    material += '\x1f';
    material += input;
    return text::hex64(text::fnv1a64(material));
}

std::optional<nlohmann::json> AdapterCache::lookup(const std::string& kind,
                                                   const std::string& model,
                                                   const std::string& prompt_version,
                                                   const std::string& input) {
    const std::string h = key_hash(kind, model, prompt_version, input);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = index_.find(h);
    if (it != index_.end()) {
        // Last write wins.
        for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit) {
            const Entry& e = entries_[*rit];
            if (e.kind == kind && e.model == model && e.prompt_version == prompt_version &&
                e.input == input) {
                hits_.fetch_add(1);
                return e.output;
            }
        }
    }
    misses_.fetch_add(1);
    return std::nullopt;
}

void AdapterCache::store(const std::string& kind, const std::string& model,
                         const std::string& prompt_version, const std::string& input,
                         const nlohmann::json& output) {
    const std::string h = key_hash(kind, model, prompt_version, input);
    std::lock_guard<std::mutex> lock(mutex_);
    Entry e{kind, model, prompt_version, input, output};
    nlohmann::json rec{{"kind", kind},
                       {"model", model},
                       {"prompt_version", prompt_version},
                       {"input", input},
                       {"output", output}};
    append_ << rec.dump() << '\n';
    append_.flush();
    index_[h].push_back(entries_.size());
    entries_.push_back(std::move(e));
}

void AdapterCache::reset_counters() {
    hits_.store(0);
    misses_.store(0);
}

HttpAdapterClient::HttpAdapterClient(RemoteEndpoint endpoint,
                                     std::shared_ptr<std::counting_semaphore<>> inflight,
                                     bool offline)
    : endpoint_(std::move(endpoint)), inflight_(std::move(inflight)), offline_(offline) {}

nlohmann::json HttpAdapterClient::call(const std::string& kind, const nlohmann::json& inputs,
                                       nlohmann::json params) {
    if (offline_) {
        throw OfflineError("offline mode: remote " + kind + " call to " + endpoint_.url +
                           " is forbidden");
    }
    params["prompt_version"] = endpoint_.prompt_version;
    const nlohmann::json body{
        {"kind", kind}, {"model", endpoint_.model}, {"inputs", inputs}, {"params", params}};
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* token = std::getenv("POOLEVAL_ADAPTER_TOKEN")) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error = "no response";
    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(25 * attempt));
        }
        if (inflight_) inflight_->acquire();
        httplib::Client cli(endpoint_.url);
        cli.set_connection_timeout(0, endpoint_.timeout_ms * 1000LL);
        cli.set_read_timeout(endpoint_.timeout_ms / 1000, (endpoint_.timeout_ms % 1000) * 1000);
        requests_.fetch_add(1);
        auto res = cli.Post("/v1/adapter", headers, payload, "application/json");
        if (inflight_) inflight_->release();

        if (!res) {
            last_error = "transport error (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            nlohmann::json parsed = nlohmann::json::parse(res->body);
            if (!parsed.contains("outputs") || !parsed["outputs"].is_array()) {
                last_error = "response missing outputs array";
                continue;
            }
            return parsed["outputs"];
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response json: ") + e.what();
            continue;
        }
    }
    throw AdapterError(kind + " adapter at " + endpoint_.url + " failed after " +
                       std::to_string(endpoint_.retries + 1) + " attempts: " + last_error);
}

}  // namespace pooleval
