#pragma once

#include "hdloa/core.hpp"
#include "hdloa/util.hpp"
#include "hdloa/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <vector>

namespace hdloa::data {

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct DatasetManifest {
    TaskKind task = TaskKind::EaeRams;
    std::filesystem::path path;
    Split split = Split::Test;
    std::optional<std::size_t> expected_count;
};

// Canonical line-delimited records; blank lines are ignored. Errors name the
// 1-based line number and field.
std::vector<EAEInstance> load_eae(const DatasetManifest& manifest);
std::vector<ClassificationInstance> load_classification(const DatasetManifest& manifest);

// ceil(fraction * n), computed so that exact products (0.01 * 800) are not
// pushed up by binary rounding.
std::size_t subset_size(std::size_t n, double fraction);

// Picks `count` items by a seeded permutation and returns them in their
// original relative order.
template <typename T>
std::vector<T> sample_count(const std::vector<T>& items, std::size_t count, std::uint64_t seed) {
    if (items.empty()) throw PreconditionError("sample_subset: input is empty");
    count = std::min(count, items.size());
    auto perm = util::seeded_permutation(items.size(), seed);
    perm.resize(count);
    std::sort(perm.begin(), perm.end());
    std::vector<T> out;
    out.reserve(count);
    for (std::size_t i : perm) out.push_back(items[i]);
    return out;
}

template <typename T>
std::vector<T> sample_subset(const std::vector<T>& items, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw PreconditionError("sample_subset: fraction must be in (0, 1]");
    }
    if (items.empty()) throw PreconditionError("sample_subset: input is empty");
    return sample_count(items, subset_size(items.size(), fraction), seed);
}

}  // namespace hdloa::data
