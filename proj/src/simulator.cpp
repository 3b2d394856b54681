#include "qcoder/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <sstream>
#include <thread>

#include "qcoder/errors.hpp"
#include "qcoder/hash.hpp"
#include "qcoder/rng.hpp"
#include "qcoder/textutil.hpp"

namespace qcoder {

namespace {

// "N. Name: description" lines.
std::vector<NamedDescription> parse_named_list(const std::string& raw) {
    std::vector<NamedDescription> out;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        std::size_t digits = 0;
        while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
        if (digits == 0 || digits >= t.size()) continue;
        if (t[digits] != '.' && t[digits] != ')') continue;
        std::string content = trim_copy(t.substr(digits + 1));
        std::size_t colon = content.find(':');
        NamedDescription item;
        if (colon == std::string::npos) {
            item.name = content;
        } else {
            item.name = trim_copy(content.substr(0, colon));
            item.description = trim_copy(content.substr(colon + 1));
        }
        if (!item.name.empty()) out.push_back(std::move(item));
    }
    return out;
}

std::vector<std::string> parse_plain_list(const std::string& raw) {
    std::vector<std::string> out;
    for (const auto& item : parse_named_list(raw)) {
        out.push_back(item.description.empty() ? item.name
                                               : item.name + ": " + item.description);
    }
    return out;
}

bool has_meta_commentary(const std::string& text) {
    std::string lowered = to_lower_copy(text);
    static const char* markers[] = {"as an ai", "as a language model", "i cannot fulfill",
                                    "i'm sorry, but"};
    for (const char* m : markers) {
        if (lowered.find(m) != std::string::npos) return true;
    }
    return false;
}

// Recovers "(a-b sentences)" from a formatted writing length; 0/0 when absent.
std::pair<int, int> parse_sentence_band(const std::string& writing_length) {
    std::size_t open = writing_length.find('(');
    std::size_t close = writing_length.find(" sentence");
    if (open == std::string::npos || close == std::string::npos || close < open) return {0, 0};
    std::string inner = writing_length.substr(open + 1, close - open - 1);
    std::size_t dash = inner.find('-');
    try {
        if (dash == std::string::npos) {
            int v = std::stoi(trim_copy(inner));
            return {v, v};
        }
        return {std::stoi(trim_copy(inner.substr(0, dash))),
                std::stoi(trim_copy(inner.substr(dash + 1)))};
    } catch (const std::exception&) {
        return {0, 0};
    }
}

}  // namespace

std::string format_writing_length(const WritingLength& length) {
    std::ostringstream out;
    out << length.name << " (" << length.min_sentences << "-" << length.max_sentences
        << " sentences)";
    return out.str();
}

StudySpec StudySpec::from_json(const json& j) {
    StudySpec spec;
    spec.data_type = j.at("data_type").get<std::string>();
    spec.data_collection_context = j.at("data_collection_context").get<std::string>();
    spec.theme_count = j.value("theme_count", 8);
    spec.subthemes_per_theme = j.value("subthemes_per_theme", 8);
    spec.samples_per_subtheme = j.value("samples_per_subtheme", 18);
    if (j.contains("writing_styles")) {
        spec.writing_styles = j.at("writing_styles").get<std::vector<std::string>>();
    } else {
        spec.writing_styles = {"professional", "casual", "sentence fragments"};
    }
    if (j.contains("writing_lengths")) {
        for (const auto& wl : j.at("writing_lengths")) {
            spec.writing_lengths.push_back(WritingLength{wl.at("name").get<std::string>(),
                                                         wl.at("min_sentences").get<int>(),
                                                         wl.at("max_sentences").get<int>()});
        }
    } else {
        spec.writing_lengths = {{"short", 1, 3}, {"medium", 4, 5}, {"long", 6, 10}};
    }
    if (j.contains("generator_model_ids")) {
        spec.generator_model_ids = j.at("generator_model_ids").get<std::vector<std::string>>();
    }
    if (spec.theme_count < 1 || spec.subthemes_per_theme < 1 || spec.samples_per_subtheme < 1) {
        throw ConfigError("study spec counts must all be >= 1");
    }
    if (spec.writing_styles.empty() || spec.writing_lengths.empty()) {
        throw ConfigError("study spec requires writing styles and lengths");
    }
    return spec;
}

json StudySpec::to_json() const {
    json lengths = json::array();
    for (const auto& wl : writing_lengths) {
        lengths.push_back(json{{"name", wl.name},
                               {"min_sentences", wl.min_sentences},
                               {"max_sentences", wl.max_sentences}});
    }
    return json{{"data_type", data_type},
                {"data_collection_context", data_collection_context},
                {"theme_count", theme_count},
                {"subthemes_per_theme", subthemes_per_theme},
                {"samples_per_subtheme", samples_per_subtheme},
                {"writing_styles", writing_styles},
                {"writing_lengths", lengths},
                {"generator_model_ids", generator_model_ids}};
}

json CriteriaSet::to_json() const {
    json ps = json::array();
    for (const auto& p : personas) {
        ps.push_back(json{{"name", p.name}, {"description", p.description}});
    }
    json cs = json::array();
    for (const auto& c : contexts) {
        cs.push_back(json{{"name", c.name}, {"description", c.description}});
    }
    json ts = json::array();
    for (const auto& t : themes) {
        ts.push_back(json{{"theme", t.theme}, {"subthemes", t.subthemes}});
    }
    return json{{"personas", ps}, {"contexts", cs}, {"themes", ts}};
}

CriteriaSet CriteriaSet::from_json(const json& j) {
    CriteriaSet set;
    for (const auto& p : j.at("personas")) {
        set.personas.push_back(NamedDescription{p.at("name").get<std::string>(),
                                                p.at("description").get<std::string>()});
    }
    for (const auto& c : j.at("contexts")) {
        set.contexts.push_back(NamedDescription{c.at("name").get<std::string>(),
                                                c.at("description").get<std::string>()});
    }
    for (const auto& t : j.at("themes")) {
        set.themes.push_back(ThemeTree{t.at("theme").get<std::string>(),
                                       t.at("subthemes").get<std::vector<std::string>>()});
    }
    return set;
}

CriteriaSet generate_criteria(const StudySpec& spec, const RunConfig& cfg,
                              const TemplateSet& templates, Gateway& gateway,
                              std::vector<std::string>* warnings) {
    auto ask = [&](const std::string& prompt) {
        return gateway.chat(ChatRequest{cfg.chat_model_id, prompt, cfg.temperature});
    };
    auto named_list = [&](const std::string& prompt, int want,
                          const std::string& what) -> std::vector<NamedDescription> {
        auto items = parse_named_list(ask(prompt));
        if (static_cast<int>(items.size()) < want) {
            items = parse_named_list(ask(prompt));
            if (static_cast<int>(items.size()) < want) {
                throw StageError("criteria generation returned " + std::to_string(items.size()) +
                                 " " + what + ", wanted " + std::to_string(want));
            }
            if (warnings) warnings->push_back(what + " list required a retry");
        }
        items.resize(static_cast<std::size_t>(want));
        return items;
    };

    CriteriaSet criteria;
    criteria.personas = named_list(
        render(templates.get("sim_personas"),
               {{"persona_count", std::to_string(kPersonaCount)},
                {"data_type", spec.data_type},
                {"data_collection_context", spec.data_collection_context}}),
        kPersonaCount, "personas");
    criteria.contexts = named_list(
        render(templates.get("sim_contexts"),
               {{"context_count", std::to_string(kContextCount)},
                {"data_type", spec.data_type},
                {"data_collection_context", spec.data_collection_context}}),
        kContextCount, "contexts");

    auto plain_list = [&](const std::string& prompt, int want,
                          const std::string& what) -> std::vector<std::string> {
        auto items = parse_plain_list(ask(prompt));
        if (static_cast<int>(items.size()) < want) {
            items = parse_plain_list(ask(prompt));
            if (static_cast<int>(items.size()) < want) {
                throw StageError("criteria generation returned " + std::to_string(items.size()) +
                                 " " + what + ", wanted " + std::to_string(want));
            }
            if (warnings) warnings->push_back(what + " list required a retry");
        }
        items.resize(static_cast<std::size_t>(want));
        return items;
    };

    auto theme_names = plain_list(
        render(templates.get("sim_themes"),
               {{"theme_count", std::to_string(spec.theme_count)},
                {"data_type", spec.data_type},
                {"data_collection_context", spec.data_collection_context}}),
        spec.theme_count, "themes");

    std::set<std::string> seen_subthemes;
    for (const auto& theme : theme_names) {
        auto subthemes = plain_list(
            render(templates.get("sim_subthemes"),
                   {{"theme", theme},
                    {"subtheme_count", std::to_string(spec.subthemes_per_theme)},
                    {"data_collection_context", spec.data_collection_context}}),
            spec.subthemes_per_theme, "sub-themes");
        ThemeTree tree;
        tree.theme = theme;
        for (const auto& st : subthemes) {
            // Overlapping studies sometimes repeat a sub-theme verbatim under
            // two themes; keep the first.
            if (seen_subthemes.insert(st).second) {
                tree.subthemes.push_back(st);
            } else if (warnings) {
                warnings->push_back("dropped duplicate sub-theme \"" + st + "\"");
            }
        }
        criteria.themes.push_back(std::move(tree));
    }
    return criteria;
}

GenerationPlan sample_plan(const StudySpec& spec, const CriteriaSet& criteria,
                           std::uint64_t seed) {
    if (criteria.personas.empty() || criteria.contexts.empty() || criteria.themes.empty()) {
        throw PreconditionError("sample_plan requires non-empty criteria lists");
    }
    std::vector<std::string> models = spec.generator_model_ids;
    if (models.empty()) models = {""};

    GenerationPlan plan;
    plan.seed = seed;
    std::mt19937_64 rng(seed);

    const std::uint64_t combos = static_cast<std::uint64_t>(criteria.personas.size()) *
                                 criteria.contexts.size() * spec.writing_styles.size() *
                                 spec.writing_lengths.size() * models.size();

    for (const auto& tree : criteria.themes) {
        for (const auto& subtheme : tree.subthemes) {
            // Distinct combination draws per sub-theme; repeats allowed only
            // when the combination space is smaller than the sample count.
            std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>>
                used;
            for (int s = 0; s < spec.samples_per_subtheme; ++s) {
                std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t> pick;
                for (int attempt = 0; attempt < 256; ++attempt) {
                    pick = {rng_below(rng, criteria.personas.size()),
                            rng_below(rng, criteria.contexts.size()),
                            rng_below(rng, spec.writing_styles.size()),
                            rng_below(rng, spec.writing_lengths.size()),
                            rng_below(rng, models.size())};
                    if (combos <= used.size() || used.insert(pick).second) break;
                }
                const auto& persona = criteria.personas[std::get<0>(pick)];
                const auto& context = criteria.contexts[std::get<1>(pick)];
                GenerationCriteria row;
                row.persona = persona.name;
                row.persona_description = persona.description;
                row.context = context.name;
                row.context_description = context.description;
                row.theme = tree.theme;
                row.sub_theme = subtheme;
                row.writing_style = spec.writing_styles[std::get<2>(pick)];
                row.writing_length = format_writing_length(spec.writing_lengths[std::get<3>(pick)]);
                row.generator_model_id = models[std::get<4>(pick)];
                plan.rows.push_back(std::move(row));
            }
        }
    }
    rng_shuffle(rng, plan.rows);
    return plan;
}

SynthesisResult synthesize_documents(const GenerationPlan& plan, const RunConfig& cfg,
                                     const TemplateSet& templates, Gateway& gateway) {
    if (plan.rows.empty()) {
        throw PreconditionError("synthesis requires a non-empty plan");
    }

    struct Slot {
        std::string prompt;
        std::string response;
        std::exception_ptr fatal;
    };
    std::vector<Slot> slots(plan.rows.size());

    const int workers = std::max(1, cfg.workers);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= plan.rows.size()) return;
            const GenerationCriteria& row = plan.rows[i];
            Slot& slot = slots[i];
            try {
                slot.prompt = render(templates.get("sim_response"),
                                     {{"data_type", cfg.data_type},
                                      {"data_collection_context", cfg.data_collection_context},
                                      {"persona", row.persona},
                                      {"persona_description", row.persona_description},
                                      {"context", row.context},
                                      {"context_description", row.context_description},
                                      {"theme", row.theme},
                                      {"sub_theme", row.sub_theme},
                                      {"writing_style", row.writing_style},
                                      {"writing_length", row.writing_length}});
                std::string model =
                    row.generator_model_id.empty() ? cfg.chat_model_id : row.generator_model_id;
                slot.response = gateway.chat(ChatRequest{model, slot.prompt, cfg.temperature});
            } catch (...) {
                slot.fatal = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& slot : slots) {
        if (slot.fatal) std::rethrow_exception(slot.fatal);
    }

    SynthesisResult result;
    result.report.planned = plan.rows.size();
    std::set<std::string> seen_texts;
    for (std::size_t i = 0; i < plan.rows.size(); ++i) {
        const GenerationCriteria& row = plan.rows[i];
        const Slot& slot = slots[i];
        std::string text = trim_copy(slot.response);

        bool valid = !text.empty() && !has_meta_commentary(text);
        if (valid) {
            auto [lo, hi] = parse_sentence_band(row.writing_length);
            if (hi > 0 && count_sentences(text) > 4 * hi) valid = false;
        }
        if (!valid) {
            ++result.report.rejected;
            if (result.report.sample_rejections.size() < 10) {
                result.report.sample_rejections.push_back(text.substr(0, 200));
            }
            continue;
        }
        if (!seen_texts.insert(text).second) {
            ++result.report.duplicates;
            continue;
        }

        Document doc;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "sim-%06zu", i);
        doc.id = buf;
        doc.text = text;
        doc.source = DocumentSource::simulated;
        doc.criteria = row;
        result.exchanges.emplace_back(doc.id, slot.prompt, slot.response);
        result.documents.push_back(std::move(doc));
        ++result.report.accepted;
    }

    if (result.report.rejected * 2 > result.report.planned) {
        std::ostringstream msg;
        msg << "synthesis rejected " << result.report.rejected << "/" << result.report.planned
            << " responses (> 50%). Samples:";
        for (const auto& s : result.report.sample_rejections) msg << "\n  \"" << s << "\"";
        throw StageError(msg.str());
    }
    return result;
}

}  // namespace qcoder
