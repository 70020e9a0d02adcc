#pragma once

#include "hdloa/core.hpp"

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hdloa::parse {

struct ParseDiagnostics {
    std::set<std::string> matched_roles;
    std::set<std::string> missing_roles;
    int stray_lines = 0;  // answer-shaped lines for roles nobody asked about
    bool used_fallback = false;

    friend bool operator==(const ParseDiagnostics&, const ParseDiagnostics&) = default;
};

struct EaeParse {
    RolePredictions predictions;
    ParseDiagnostics diagnostics;
};

// Reads `[role]: "span", "span"` answer lines. Per role the last such line
// wins; role names match case-insensitively with or without brackets; spans
// may use straight or curly double quotes and may contain commas. The
// "not specified" sentinel (any casing) yields an empty list. Every requested
// role gets an entry in per_role, empty when nothing was found.
EaeParse parse_eae_output(std::string_view text, const std::vector<std::string>& roles, std::size_t max_answers);

// Quoted spans on one answer value, in order: `"a", "b , c"` -> {a, "b , c"}.
std::vector<std::string> extract_quoted_spans(std::string_view value);

// Last label that follows the task's answer cue ("sentiment:" for SA,
// "the answer is" for NLI), canonical casing. Throws ParseError when absent.
std::string parse_label_output(std::string_view text, TaskKind task);

}  // namespace hdloa::parse
