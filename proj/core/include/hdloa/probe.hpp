#pragma once

// Tools for checking how many implicit heuristics a few-shot prompt carries
// and how accuracy moves when one of them is taken away.

#include "hdloa/core.hpp"
#include "hdloa/llm.hpp"
#include "hdloa/promptkit.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hdloa::probe {

enum class Category { ER, Comp, KB, Def, Chron, Other };

// "ER", "Comp", "KB", "Def", "Chron", "Other"
std::string_view to_string(Category c);
// Accepts the short names case-insensitively. Throws ConfigError otherwise.
Category parse_category(std::string_view name);
// The five named categories, without Other.
const std::vector<Category>& taxonomy();

// Maps free-text heuristic names onto categories. Labels are compared after
// label_key(); an alias also matches when it occurs inside the key as whole
// words.
class AliasTable {
public:
    AliasTable() = default;
    explicit AliasTable(std::vector<std::pair<std::string, Category>> entries);

    // {"aliases": {"comparison": "Comp", ...}}
    static AliasTable from_json_text(std::string_view text);
    static AliasTable load(const std::filesystem::path& path);

    std::optional<Category> resolve(std::string_view label) const;
    const std::vector<std::pair<std::string, Category>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, Category>> entries_;  // keys normalized
};

// Lowercase, whitespace collapsed, quotes and trailing punctuation removed,
// and a trailing word "heuristic" dropped: "Comparison heuristic," ->
// "comparison".
std::string label_key(std::string_view label);

// ---------------------------------------------------------------- identification

struct IdentifiedHeuristic {
    int example_index = 0;  // 1-based, as the identifier numbers them
    std::string category_label;  // label_key of the quoted heuristic name
    std::set<int> shared_with;

    friend bool operator==(const IdentifiedHeuristic&, const IdentifiedHeuristic&) = default;
};

// "example i\nQ: <question>\nA: <answer>" blocks under the identification
// instruction (templates/probe/identify.txt).
std::string identification_prompt(const prompt::TemplateStore& store, std::span<const prompt::Exemplar> examples);

// Reads "Example N: ..." paragraphs. The first quoted phrase names the
// heuristic. "another instance of" links back to the earliest earlier example
// with the same label, and "example K" mentions link to K; links are made
// symmetric. Throws ParseError when an example in [1, example_count] has no
// paragraph or a paragraph names no heuristic.
std::vector<IdentifiedHeuristic> parse_identification(std::string_view text, std::size_t example_count);

std::vector<IdentifiedHeuristic> identify_prompt_heuristics(llm::Client& client, const prompt::TemplateStore& store,
                                                            std::span<const prompt::Exemplar> examples,
                                                            const llm::CompletionRequest& request_template);

// Equivalence classes under shared_with plus equal category_label.
std::size_t count_distinct_heuristics(std::span<const IdentifiedHeuristic> identified);

// ---------------------------------------------------------------- strategies

struct PoolExample {
    std::string id;
    prompt::Exemplar exemplar;  // question and answer; reasoning unused
    Category category = Category::Other;
};

enum class Strategy { Single, Diverse, Random };
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct StrategyPrompt {
    Strategy strategy = Strategy::Single;
    std::uint64_t seed = 0;
    std::vector<PoolExample> examples;  // pool order
    std::string rendered;               // "Q: ...\nA: ..." blocks
};

// Single: n examples of one category (`category`, or a seeded pick among those
// with enough examples). Diverse: n examples with pairwise distinct
// categories. Random: any n examples. Other never counts as a category.
// Throws PreconditionError stating required vs available.
StrategyPrompt build_strategy_prompt(std::span<const PoolExample> pool, std::size_t n, Strategy strategy,
                                     std::uint64_t seed, std::optional<Category> category = std::nullopt);

std::string render_examples(std::span<const PoolExample> examples);

// Replaces the single example of `remove` with the first pool example (not
// already in the demo) whose category already occurs in the demo. Same
// length, same positions otherwise.
std::vector<PoolExample> deduct_heuristic(std::span<const PoolExample> demo, Category remove,
                                          std::span<const PoolExample> pool);

// ---------------------------------------------------------------- grouping

struct ProbeSample {
    std::string id;
    std::string question;
};

struct Labelling {
    // Every taxonomy category plus Other is present, possibly empty.
    std::map<Category, std::vector<std::string>> groups;
    std::vector<std::string> diagnostics;  // one per sample sent to Other for cause
};

// Category named after the last "heuristic:" cue in a labeller reply, or
// nullopt when the reply cannot be read.
std::optional<Category> parse_label_reply(std::string_view reply, const AliasTable& aliases);

std::string labelling_prompt(const prompt::TemplateStore& store, std::span<const Category> taxonomy,
                             const ProbeSample& sample);

Labelling label_samples_by_heuristic(llm::Client& client, const prompt::TemplateStore& store,
                                     std::span<const ProbeSample> samples, std::span<const Category> taxonomy,
                                     const AliasTable& aliases, const llm::CompletionRequest& request_template,
                                     std::size_t max_parallel = 4);

struct SampleResult {
    std::string sample_id;
    bool correct = false;
};

// correct / total per group. Empty groups are left out. Throws DataError for
// a result whose sample is in no group or in more than one.
std::map<Category, double> grouped_accuracy(std::span<const SampleResult> results,
                                            const std::map<Category, std::vector<std::string>>& groups);

// Line-delimited {sample_id, category} and {sample_id, correct}.
std::map<Category, std::vector<std::string>> load_groups(const std::filesystem::path& path);
std::vector<SampleResult> load_results(const std::filesystem::path& path);

}  // namespace hdloa::probe
