#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace hdloa::util {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

// Position of the first case-insensitive occurrence of `needle` at or after
// `from`, or npos.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);
std::size_t irfind(std::string_view haystack, std::string_view needle);

// Collapses every run of ASCII whitespace to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split_words(std::string_view s);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Writes through a uniquely named sibling temp file and renames it into
// place, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Portable seeded generator: mt19937_64 output is fixed by the standard, but
// std::shuffle and the distributions are not, so bounded draws and the
// permutation are done here.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    // Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Runs fn(i) for i in [0, n) on at most `max_parallel` threads. Exceptions
// from fn are rethrown (the first one wins) after all workers finish.
void parallel_for(std::size_t n, std::size_t max_parallel, const std::function<void(std::size_t)>& fn);

}  // namespace hdloa::util
