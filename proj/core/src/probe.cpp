#include "hdloa/probe.hpp"

#include "hdloa/data.hpp"
#include "hdloa/error.hpp"
#include "hdloa/json_io.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace hdloa::probe {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::ER: return "ER";
        case Category::Comp: return "Comp";
        case Category::KB: return "KB";
        case Category::Def: return "Def";
        case Category::Chron: return "Chron";
        case Category::Other: return "Other";
    }
    return "Other";
}

Category parse_category(std::string_view name) {
    const auto n = util::trim(name);
    for (Category c : {Category::ER, Category::Comp, Category::KB, Category::Def, Category::Chron, Category::Other}) {
        if (util::iequals(n, to_string(c))) return c;
    }
    throw ConfigError("unknown heuristic category: '" + std::string(name) + "'");
}

const std::vector<Category>& taxonomy() {
    static const std::vector<Category> kAll{Category::ER, Category::Comp, Category::KB, Category::Def, Category::Chron};
    return kAll;
}

namespace {

std::string_view describe(Category c) {
    switch (c) {
        case Category::ER: return "empathetic reasoning";
        case Category::Comp: return "comparison";
        case Category::KB: return "knowledge-based";
        case Category::Def: return "definition-based";
        case Category::Chron: return "chronological";
        case Category::Other: return "other";
    }
    return "other";
}

bool is_edge_punct(char c) {
    return c == '"' || c == '\'' || c == ',' || c == '.' || c == ';' || c == ':' || c == '*' || c == '(' || c == ')';
}

std::string strip_curly_quotes(std::string s) {
    for (std::string_view q : {"“", "”", "‘", "’"}) {
        std::size_t pos;
        while ((pos = s.find(q)) != std::string::npos) s.replace(pos, q.size(), "\"");
    }
    return s;
}

std::string trim_punct(std::string s) {
    while (!s.empty() && (is_edge_punct(s.back()) || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (is_edge_punct(s[i]) || s[i] == ' ')) ++i;
    return s.substr(i);
}

bool contains_words(const std::string& haystack, const std::string& needle) {
    return (" " + haystack + " ").find(" " + needle + " ") != std::string::npos;
}

}  // namespace

std::string label_key(std::string_view label) {
    std::string s = trim_punct(util::to_lower(util::collapse_whitespace(strip_curly_quotes(std::string(label)))));
    static constexpr std::string_view kSuffix = "heuristic";
    if (s.size() > kSuffix.size() && s.ends_with(kSuffix) && s[s.size() - kSuffix.size() - 1] == ' ') {
        s = trim_punct(s.substr(0, s.size() - kSuffix.size()));
    } else if (s == kSuffix) {
        s.clear();
    }
    return s;
}

AliasTable::AliasTable(std::vector<std::pair<std::string, Category>> entries) {
    for (auto& [alias, cat] : entries) {
        auto key = label_key(alias);
        if (key.empty()) throw ConfigError("alias table: empty alias");
        entries_.emplace_back(std::move(key), cat);
    }
}

AliasTable AliasTable::from_json_text(std::string_view text) {
    std::vector<std::pair<std::string, Category>> entries;
    try {
        const Json j = Json::parse(text);
        for (const auto& [alias, cat] : j.at("aliases").items()) {
            entries.emplace_back(alias, parse_category(cat.get<std::string>()));
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed alias table: ") + e.what());
    }
    return AliasTable(std::move(entries));
}

AliasTable AliasTable::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("alias table not found: " + path.string());
    return from_json_text(util::read_file(path));
}

std::optional<Category> AliasTable::resolve(std::string_view label) const {
    const auto key = label_key(label);
    if (key.empty()) return std::nullopt;
    for (Category c : {Category::ER, Category::Comp, Category::KB, Category::Def, Category::Chron, Category::Other}) {
        if (util::iequals(key, to_string(c))) return c;
    }
    for (const auto& [alias, cat] : entries_) {
        if (key == alias) return cat;
    }
    for (const auto& [alias, cat] : entries_) {
        if (contains_words(key, alias)) return cat;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- identification

std::string identification_prompt(const prompt::TemplateStore& store, std::span<const prompt::Exemplar> examples) {
    if (examples.empty()) throw PreconditionError("heuristic identification needs at least one example");
    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        blocks.push_back("example " + std::to_string(i + 1) + "\nQ: " + examples[i].question + "\nA: " +
                         examples[i].answer);
    }
    return prompt::fill_template(store.load("probe", "identify"), {{"examples", util::join(blocks, "\n\n")}});
}

namespace {

// "Example 12: rest" -> (12, "rest").
std::optional<std::pair<int, std::string>> example_header(std::string_view line) {
    std::string s = util::trim(line);
    s.erase(std::remove(s.begin(), s.end(), '*'), s.end());
    s = util::trim(s);
    if (!util::istarts_with(s, "example")) return std::nullopt;
    std::size_t i = 7;
    while (i < s.size() && s[i] == ' ') ++i;
    const std::size_t digits = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == digits || i >= s.size() || s[i] != ':') return std::nullopt;
    return std::make_pair(std::stoi(s.substr(digits, i - digits)), util::trim(std::string_view(s).substr(i + 1)));
}

std::optional<std::string> first_quoted(const std::string& text) {
    const std::string s = strip_curly_quotes(text);
    const auto open = s.find('"');
    if (open == std::string::npos) return std::nullopt;
    const auto close = s.find('"', open + 1);
    if (close == std::string::npos) return std::nullopt;
    return s.substr(open + 1, close - open - 1);
}

std::vector<int> example_mentions(const std::string& text) {
    std::vector<int> out;
    const std::string lower = util::to_lower(text);
    std::size_t pos = 0;
    while ((pos = lower.find("example", pos)) != std::string::npos) {
        std::size_t i = pos + 7;
        if (i < lower.size() && lower[i] == 's') ++i;
        while (i < lower.size() && lower[i] == ' ') ++i;
        const std::size_t digits = i;
        while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) ++i;
        if (i > digits) out.push_back(std::stoi(lower.substr(digits, i - digits)));
        pos = i;
    }
    return out;
}

}  // namespace

std::vector<IdentifiedHeuristic> parse_identification(std::string_view text, std::size_t example_count) {
    std::map<int, std::string> paragraphs;
    int current = 0;
    for (const auto& line : util::split_lines(text)) {
        if (auto h = example_header(line)) {
            current = h->first;
            if (current < 1 || static_cast<std::size_t>(current) > example_count) {
                throw ParseError("identifier output mentions example " + std::to_string(current) + " but the prompt has " +
                                 std::to_string(example_count));
            }
            paragraphs[current] = h->second;
        } else if (current > 0 && !util::trim(line).empty()) {
            paragraphs[current] += " " + util::trim(line);
        }
    }

    std::vector<IdentifiedHeuristic> out;
    for (std::size_t i = 1; i <= example_count; ++i) {
        const int idx = static_cast<int>(i);
        auto it = paragraphs.find(idx);
        if (it == paragraphs.end()) throw ParseError("identifier output has no entry for example " + std::to_string(i));
        const auto quoted = first_quoted(it->second);
        const std::string key = quoted ? label_key(*quoted) : std::string{};
        if (key.empty()) throw ParseError("identifier output names no heuristic for example " + std::to_string(i));
        IdentifiedHeuristic rec;
        rec.example_index = idx;
        rec.category_label = key;
        for (int k : example_mentions(it->second)) {
            if (k != idx && k >= 1 && static_cast<std::size_t>(k) <= example_count) rec.shared_with.insert(k);
        }
        if (util::ifind(it->second, "another instance") != std::string::npos) {
            for (const auto& prev : out) {
                if (prev.category_label == key) {
                    rec.shared_with.insert(prev.example_index);
                    break;
                }
            }
        }
        out.push_back(std::move(rec));
    }
    for (auto& rec : out) {
        for (int k : std::set<int>(rec.shared_with)) out[static_cast<std::size_t>(k - 1)].shared_with.insert(rec.example_index);
    }
    return out;
}

std::vector<IdentifiedHeuristic> identify_prompt_heuristics(llm::Client& client, const prompt::TemplateStore& store,
                                                            std::span<const prompt::Exemplar> examples,
                                                            const llm::CompletionRequest& request_template) {
    llm::CompletionRequest req = request_template;
    req.prompt = identification_prompt(store, examples);
    return parse_identification(client.complete(req).text, examples.size());
}

std::size_t count_distinct_heuristics(std::span<const IdentifiedHeuristic> identified) {
    const std::size_t n = identified.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

    std::map<int, std::size_t> by_index;
    std::map<std::string, std::size_t> by_label;
    for (std::size_t i = 0; i < n; ++i) {
        by_index.emplace(identified[i].example_index, i);
        const auto key = label_key(identified[i].category_label);
        auto [it, fresh] = by_label.emplace(key, i);
        if (!fresh) unite(i, it->second);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int k : identified[i].shared_with) {
            if (auto it = by_index.find(k); it != by_index.end()) unite(i, it->second);
        }
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) roots.insert(find(i));
    return roots.size();
}

// ---------------------------------------------------------------- strategies

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Single: return "single";
        case Strategy::Diverse: return "diverse";
        case Strategy::Random: return "random";
    }
    return "single";
}

Strategy parse_strategy(std::string_view name) {
    const auto n = util::to_lower(util::trim(name));
    if (n == "single") return Strategy::Single;
    if (n == "diverse") return Strategy::Diverse;
    if (n == "random") return Strategy::Random;
    throw ConfigError("unknown strategy: '" + std::string(name) + "' (expected single, diverse or random)");
}

std::string render_examples(std::span<const PoolExample> examples) {
    std::vector<std::string> blocks;
    for (const auto& e : examples) blocks.push_back("Q: " + e.exemplar.question + "\nA: " + e.exemplar.answer);
    return util::join(blocks, "\n\n");
}

StrategyPrompt build_strategy_prompt(std::span<const PoolExample> pool, std::size_t n, Strategy strategy,
                                     std::uint64_t seed, std::optional<Category> category) {
    if (n == 0) throw PreconditionError("strategy prompt needs n >= 1");
    std::map<Category, std::vector<std::size_t>> by_cat;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].category != Category::Other) by_cat[pool[i].category].push_back(i);
    }
    util::SeededRng rng(seed);
    std::vector<std::size_t> chosen;

    switch (strategy) {
        case Strategy::Single: {
            Category pick{};
            if (category) {
                if (*category == Category::Other) throw PreconditionError("single strategy cannot use category Other");
                const std::size_t have = by_cat.count(*category) ? by_cat[*category].size() : 0;
                if (have < n) {
                    throw PreconditionError("single strategy needs " + std::to_string(n) + " examples of " +
                                            std::string(to_string(*category)) + "; pool has " + std::to_string(have));
                }
                pick = *category;
            } else {
                std::vector<Category> eligible;
                std::size_t largest = 0;
                for (const auto& [c, idx] : by_cat) {
                    largest = std::max(largest, idx.size());
                    if (idx.size() >= n) eligible.push_back(c);
                }
                if (eligible.empty()) {
                    throw PreconditionError("single strategy needs " + std::to_string(n) +
                                            " examples of one category; largest category has " +
                                            std::to_string(largest));
                }
                pick = eligible[rng.below(eligible.size())];
            }
            chosen = data::sample_count(by_cat[pick], n, rng.next());
            break;
        }
        case Strategy::Diverse: {
            if (by_cat.size() < n) {
                throw PreconditionError("diverse strategy needs " + std::to_string(n) +
                                        " distinct categories; pool has " + std::to_string(by_cat.size()));
            }
            std::vector<Category> cats;
            for (const auto& [c, idx] : by_cat) cats.push_back(c);
            const auto order = util::seeded_permutation(cats.size(), rng.next());
            for (std::size_t i = 0; i < n; ++i) {
                const auto& idx = by_cat[cats[order[i]]];
                chosen.push_back(idx[rng.below(idx.size())]);
            }
            break;
        }
        case Strategy::Random: {
            if (pool.size() < n) {
                throw PreconditionError("random strategy needs " + std::to_string(n) + " examples; pool has " +
                                        std::to_string(pool.size()));
            }
            std::vector<std::size_t> all(pool.size());
            std::iota(all.begin(), all.end(), 0);
            chosen = data::sample_count(all, n, rng.next());
            break;
        }
    }

    std::sort(chosen.begin(), chosen.end());
    StrategyPrompt out;
    out.strategy = strategy;
    out.seed = seed;
    for (std::size_t i : chosen) out.examples.push_back(pool[i]);
    out.rendered = render_examples(out.examples);
    return out;
}

std::vector<PoolExample> deduct_heuristic(std::span<const PoolExample> demo, Category remove,
                                          std::span<const PoolExample> pool) {
    std::optional<std::size_t> slot;
    std::set<Category> present;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < demo.size(); ++i) {
        ids.insert(demo[i].id);
        if (demo[i].category == remove) {
            if (slot) {
                throw PreconditionError("demonstration has more than one " + std::string(to_string(remove)) +
                                        " example");
            }
            slot = i;
        } else {
            present.insert(demo[i].category);
        }
    }
    if (!slot) throw PreconditionError("demonstration has no " + std::string(to_string(remove)) + " example");
    for (const auto& cand : pool) {
        if (cand.category == remove || cand.category == Category::Other) continue;
        if (!present.count(cand.category) || ids.count(cand.id)) continue;
        std::vector<PoolExample> out(demo.begin(), demo.end());
        out[*slot] = cand;
        return out;
    }
    throw PreconditionError("pool has no replacement for " + std::string(to_string(remove)) +
                            " whose category already occurs in the demonstration");
}

// ---------------------------------------------------------------- grouping

std::optional<Category> parse_label_reply(std::string_view reply, const AliasTable& aliases) {
    static constexpr std::string_view kCue = "heuristic:";
    const auto pos = util::irfind(reply, kCue);
    if (pos == std::string_view::npos) return std::nullopt;
    auto rest = reply.substr(pos + kCue.size());
    rest = rest.substr(0, std::min(rest.find('\n'), rest.size()));
    return aliases.resolve(rest);
}

std::string labelling_prompt(const prompt::TemplateStore& store, std::span<const Category> tax,
                             const ProbeSample& sample) {
    std::vector<std::string> lines;
    for (Category c : tax) lines.push_back("- " + std::string(to_string(c)) + ": " + std::string(describe(c)));
    lines.push_back("- Other: none of the above");
    return prompt::fill_template(store.load("probe", "label"),
                                 {{"taxonomy", util::join(lines, "\n")}, {"question", sample.question}});
}

Labelling label_samples_by_heuristic(llm::Client& client, const prompt::TemplateStore& store,
                                     std::span<const ProbeSample> samples, std::span<const Category> tax,
                                     const AliasTable& aliases, const llm::CompletionRequest& request_template,
                                     std::size_t max_parallel) {
    struct Outcome {
        Category category = Category::Other;
        std::string diagnostic;
    };
    std::vector<Outcome> outcomes(samples.size());
    util::parallel_for(samples.size(), max_parallel, [&](std::size_t i) {
        llm::CompletionRequest req = request_template;
        req.prompt = labelling_prompt(store, tax, samples[i]);
        const auto reply = client.complete(req);
        const auto cat = parse_label_reply(reply.text, aliases);
        if (!cat) {
            outcomes[i].diagnostic = "sample '" + samples[i].id + "': unreadable labeller reply, assigned Other";
        } else if (*cat != Category::Other && std::find(tax.begin(), tax.end(), *cat) != tax.end()) {
            outcomes[i].category = *cat;
        }
    });

    Labelling out;
    for (Category c : tax) out.groups[c];
    out.groups[Category::Other];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out.groups[outcomes[i].category].push_back(samples[i].id);
        if (!outcomes[i].diagnostic.empty()) out.diagnostics.push_back(std::move(outcomes[i].diagnostic));
    }
    return out;
}

std::map<Category, double> grouped_accuracy(std::span<const SampleResult> results,
                                            const std::map<Category, std::vector<std::string>>& groups) {
    std::map<std::string, Category> owner;
    for (const auto& [cat, ids] : groups) {
        for (const auto& id : ids) {
            auto [it, fresh] = owner.emplace(id, cat);
            if (!fresh && it->second != cat) {
                throw DataError("sample '" + id + "' belongs to more than one group");
            }
        }
    }
    std::map<Category, std::pair<std::size_t, std::size_t>> tally;  // correct, total
    for (const auto& r : results) {
        auto it = owner.find(r.sample_id);
        if (it == owner.end()) throw DataError("sample '" + r.sample_id + "' is in no group");
        auto& t = tally[it->second];
        t.first += r.correct ? 1 : 0;
        t.second += 1;
    }
    std::map<Category, double> out;
    for (const auto& [cat, t] : tally) {
        out[cat] = static_cast<double>(t.first) / static_cast<double>(t.second);
    }
    return out;
}

namespace {

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn fn) {
    if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
    const auto lines = util::split_lines(util::read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (util::trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        try {
            fn(Json::parse(lines[i]));
        } catch (const Json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const Error& e) {
            throw DataError(where + ": " + e.what());
        }
    }
}

}  // namespace

std::map<Category, std::vector<std::string>> load_groups(const std::filesystem::path& path) {
    std::map<Category, std::vector<std::string>> out;
    for_each_record(path, [&](const Json& j) {
        out[parse_category(j.at("category").get<std::string>())].push_back(j.at("sample_id").get<std::string>());
    });
    return out;
}

std::vector<SampleResult> load_results(const std::filesystem::path& path) {
    std::vector<SampleResult> out;
    for_each_record(path, [&](const Json& j) {
        out.push_back({j.at("sample_id").get<std::string>(), j.at("correct").get<bool>()});
    });
    return out;
}

}  // namespace hdloa::probe
