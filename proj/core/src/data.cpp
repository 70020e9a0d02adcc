#include "hdloa/data.hpp"

#include "hdloa/json_io.hpp"

namespace hdloa::data {

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "test";
}

Split parse_split(std::string_view name) {
    const auto n = util::to_lower(util::trim(name));
    if (n == "train") return Split::Train;
    if (n == "validation" || n == "dev") return Split::Validation;
    if (n == "test") return Split::Test;
    throw ConfigError("unknown split: '" + std::string(name) + "'");
}

namespace {

template <typename Record, typename Decode>
std::vector<Record> load_lines(const DatasetManifest& m, Decode decode) {
    if (!std::filesystem::exists(m.path)) throw DataError("dataset file not found: " + m.path.string());
    const auto lines = util::split_lines(util::read_file(m.path));
    std::vector<Record> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (util::trim(lines[i]).empty()) continue;
        const std::string where = m.path.string() + ":" + std::to_string(i + 1) + ": ";
        try {
            out.push_back(decode(Json::parse(lines[i])));
        } catch (const Json::parse_error& e) {
            throw DataError(where + "malformed JSON: " + e.what());
        } catch (const Error& e) {
            throw DataError(where + e.what());
        }
    }
    if (m.expected_count && *m.expected_count != out.size()) {
        throw DataError(m.path.string() + ": expected " + std::to_string(*m.expected_count) + " records, loaded " +
                        std::to_string(out.size()));
    }
    return out;
}

}  // namespace

std::vector<EAEInstance> load_eae(const DatasetManifest& manifest) {
    if (!is_eae(manifest.task)) throw ConfigError("load_eae called for a classification task");
    return load_lines<EAEInstance>(manifest, [](const Json& j) {
        EAEInstance inst = eae_instance_from_json(j);
        const auto violations = validate_instance(inst);
        if (!violations.empty()) throw DataError("instance '" + inst.id + "': " + violations.front());
        return inst;
    });
}

std::vector<ClassificationInstance> load_classification(const DatasetManifest& manifest) {
    if (is_eae(manifest.task)) throw ConfigError("load_classification called for an EAE task");
    const TaskKind task = manifest.task;
    return load_lines<ClassificationInstance>(manifest, [task](const Json& j) {
        ClassificationInstance inst = classification_instance_from_json(j);
        const auto violations = validate_instance(inst, task);
        if (!violations.empty()) throw DataError("instance '" + inst.id + "': " + violations.front());
        return inst;
    });
}

std::size_t subset_size(std::size_t n, double fraction) {
    const double exact = fraction * static_cast<double>(n);
    // A relative slack of a few ulps absorbs representation error in `fraction`.
    auto count = static_cast<std::size_t>(std::ceil(exact - exact * 1e-12));
    return std::clamp<std::size_t>(count, n ? 1 : 0, n);
}

}  // namespace hdloa::data
