#include "didact/util.hpp"

#include <cctype>
#include <iostream>
#include <mutex>

namespace didact {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_byte = [&h](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    for (int i = 0; i < 8; ++i) {
        mix_byte(static_cast<unsigned char>(seed >> (8 * i)));
    }
    for (char c : tag) {
        mix_byte(static_cast<unsigned char>(c));
    }
    return splitmix64(h);
}

std::string normalize_answer(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc) || c == '$') {
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

void log_warn(const std::string& message) {
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    std::cerr << "[didact] warning: " << message << "\n";
}

} // namespace didact
