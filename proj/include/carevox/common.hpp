#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace carevox {

// Base of all typed pipeline errors. Subclasses carry no payload beyond the
// message so catch sites dispatch on type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct Warning {
    std::string code;
    std::string message;
};

// Non-fatal conditions accumulated while a visit is processed. One log per
// visit; not shared across threads.
class WarningLog {
  public:
    void add(std::string code, std::string message) {
        entries_.push_back({std::move(code), std::move(message)});
    }
    const std::vector<Warning>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

  private:
    std::vector<Warning> entries_;
};

inline void warn(WarningLog* log, std::string code, std::string message) {
    if (log) log->add(std::move(code), std::move(message));
}

// Platform-stable hashing. std::hash is implementation-defined, which would
// break the mock determinism contract across toolchains.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint8_t c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Uniform double in [0,1) from a splitmix stream.
inline double splitmix_unit(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace carevox
