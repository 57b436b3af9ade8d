#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace pooleval::jsonl {

// Calls `fn(record, line_number)` for every non-blank line.
inline void for_each(const std::filesystem::path& path,
                     const std::function<void(const nlohmann::json&, size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": bad record: " + e.what());
        }
        fn(rec, lineno);
    }
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot write file: " + path.string());
    }

    void write(const nlohmann::json& rec) { out_ << rec.dump() << '\n'; }

private:
    std::ofstream out_;
};

}  // namespace pooleval::jsonl
