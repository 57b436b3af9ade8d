#pragma once

#include <iostream>
#include <mutex>
#include <string>

namespace pooleval {

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline void log_warn(const std::string& msg) {
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << "[warn] " << msg << '\n';
}

inline void log_info(const std::string& msg) {
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << "[info] " << msg << '\n';
}

}  // namespace pooleval
