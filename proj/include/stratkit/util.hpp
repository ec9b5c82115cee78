#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace stratkit {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Used for strategy ids and settings fingerprints.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string hex64(std::uint64_t value);

// Unbiased draw from [0, n). Rejection sampling on the raw engine output so
// results do not depend on the standard library's distribution internals.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Fisher-Yates with uniform_index; same cross-platform determinism rationale.
template <typename T>
void shuffle_deterministic(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

// Shortest decimal form that round-trips through a double.
std::string format_double(double value);

double parse_double(std::string_view text);  // throws Error(bad_value)
long parse_long(std::string_view text);      // throws Error(bad_value)

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

std::string read_file(const std::string& path);           // throws Error(io_failure)
void write_file(const std::string& path, std::string_view contents);

}  // namespace stratkit
