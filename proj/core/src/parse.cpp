#include "hdloa/parse.hpp"

#include "hdloa/error.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace hdloa::parse {

namespace {

constexpr std::string_view kLeftCurly = "\xE2\x80\x9C";   // U+201C
constexpr std::string_view kRightCurly = "\xE2\x80\x9D";  // U+201D

// Length of the double-quote mark starting at `pos`, or 0.
std::size_t quote_at(std::string_view s, std::size_t pos) {
    if (pos >= s.size()) return 0;
    if (s[pos] == '"') return 1;
    const auto rest = s.substr(pos);
    if (rest.starts_with(kLeftCurly) || rest.starts_with(kRightCurly)) return 3;
    return 0;
}

struct AnswerLine {
    std::string role_text;  // what appeared before the colon, brackets removed
    std::string value;
    bool bracketed = false;
};

// Splits "[role]: value" or "role: value". Returns nullopt for lines that
// cannot be answer lines.
std::optional<AnswerLine> split_answer_line(std::string_view line) {
    std::string_view s = line;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    AnswerLine out;
    if (!s.empty() && s.front() == '[') {
        const auto close = s.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        out.role_text = util::trim(s.substr(1, close - 1));
        s.remove_prefix(close + 1);
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        if (s.empty() || s.front() != ':') return std::nullopt;
        out.bracketed = true;
    } else {
        const auto colon = s.find(':');
        if (colon == std::string_view::npos) return std::nullopt;
        out.role_text = util::trim(s.substr(0, colon));
        s.remove_prefix(colon);
    }
    s.remove_prefix(1);  // ':'
    out.value = util::trim(s);
    return out;
}

bool is_sentinel(std::string_view v) {
    std::string t = util::trim(v);
    while (!t.empty() && (t.back() == '.' || t.back() == ',')) t.pop_back();
    return util::iequals(util::trim(t), kNotSpecified);
}

}  // namespace

std::vector<std::string> extract_quoted_spans(std::string_view value) {
    std::vector<std::string> spans;
    std::size_t i = 0;
    while (i < value.size()) {
        const std::size_t open = quote_at(value, i);
        if (!open) {
            ++i;
            continue;
        }
        std::size_t j = i + open;
        std::size_t close = 0;
        while (j < value.size() && !(close = quote_at(value, j))) ++j;
        if (j >= value.size()) break;  // unterminated
        spans.emplace_back(value.substr(i + open, j - (i + open)));
        i = j + close;
    }
    return spans;
}

EaeParse parse_eae_output(std::string_view text, const std::vector<std::string>& roles, std::size_t max_answers) {
    if (roles.empty()) throw PreconditionError("parse_eae_output: role list is empty");
    if (max_answers == 0) throw PreconditionError("parse_eae_output: max_answers must be positive");

    EaeParse result;
    result.predictions.raw_output = std::string(text);
    std::vector<std::optional<std::vector<std::string>>> found(roles.size());

    for (const auto& raw : util::split_lines(text)) {
        const auto line = split_answer_line(raw);
        if (!line) continue;
        auto spans = extract_quoted_spans(line->value);
        const bool sentinel_only = spans.empty() && is_sentinel(line->value);
        if (spans.empty() && !sentinel_only) continue;  // e.g. "[place]: the place is ..."

        std::optional<std::size_t> role_idx;
        for (std::size_t r = 0; r < roles.size(); ++r) {
            if (util::iequals(line->role_text, roles[r])) {
                role_idx = r;
                break;
            }
        }
        if (!role_idx) {
            if (line->bracketed) ++result.diagnostics.stray_lines;
            continue;
        }
        std::vector<std::string> kept;
        for (auto& s : spans) {
            if (s.empty() || is_sentinel(s)) continue;
            if (kept.size() == max_answers) break;
            kept.push_back(std::move(s));
        }
        found[*role_idx] = std::move(kept);  // last line wins
    }

    for (std::size_t r = 0; r < roles.size(); ++r) {
        if (found[r]) {
            result.diagnostics.matched_roles.insert(roles[r]);
            result.predictions.per_role[roles[r]] = std::move(*found[r]);
        } else {
            result.diagnostics.missing_roles.insert(roles[r]);
            result.predictions.per_role[roles[r]] = {};
        }
    }
    result.diagnostics.used_fallback = result.diagnostics.matched_roles.empty();
    return result;
}

std::string parse_label_output(std::string_view text, TaskKind task) {
    std::string_view cue;
    std::vector<std::pair<std::string, std::string>> aliases;  // surface form -> canonical
    switch (task) {
        case TaskKind::Sentiment:
            cue = "sentiment:";
            aliases = {{"positive", "positive"}, {"negative", "negative"}};
            break;
        case TaskKind::Nli:
            cue = "the answer is";
            aliases = {{"it is not possible to tell", "it is not possible to tell"},
                       {"it is impossible to tell", "it is not possible to tell"},
                       {"not possible to tell", "it is not possible to tell"},
                       {"impossible to tell", "it is not possible to tell"},
                       {"yes", "yes"},
                       {"no", "no"}};
            break;
        default:
            throw PreconditionError("parse_label_output: task has no label set");
    }

    // Walk cue occurrences from the last one backwards.
    std::size_t limit = text.size();
    while (true) {
        const std::size_t pos = util::irfind(text.substr(0, limit), cue);
        if (pos == std::string_view::npos) break;
        std::string_view rest = text.substr(pos + cue.size());
        std::size_t k = 0;
        auto skippable = [&](std::size_t at) {
            if (at >= rest.size()) return std::size_t{0};
            const char c = rest[at];
            if (c == ' ' || c == '\t' || c == ':' || c == '\'' || c == '*' || c == '\n' || c == '\r') return std::size_t{1};
            return quote_at(rest, at);
        };
        while (std::size_t n = skippable(k)) k += n;
        rest.remove_prefix(k);
        for (const auto& [surface, canonical] : aliases) {
            if (!util::istarts_with(rest, surface)) continue;
            const std::size_t end = surface.size();
            const bool word_end = end >= rest.size() || !std::isalnum(static_cast<unsigned char>(rest[end]));
            if (word_end) return canonical;
        }
        if (pos == 0) break;
        limit = pos;
    }
    throw ParseError("no " + std::string(to_string(task)) + " label after cue '" + std::string(cue) + "'");
}

}  // namespace hdloa::parse
