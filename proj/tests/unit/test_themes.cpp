#include <doctest.h>

#include <set>
#include <sstream>

#include "fakes.hpp"
#include "golden_transcripts.hpp"
#include "qcoder/errors.hpp"
#include "qcoder/themes.hpp"

using namespace qcoder;

namespace {

RunConfig test_config() {
    RunConfig cfg;
    cfg.data_type = "written response";
    cfg.data_collection_context = "a study of worker perspectives on returning to the office";
    cfg.research_question =
        "What factors do you believe affect your organization's culture around ethical behavior?";
    cfg.chat_model_id = "chat-x";
    cfg.embed_model_id = "embed-x";
    return cfg;
}

const TemplateSet& templates() {
    static TemplateSet set = TemplateSet::load("templates");
    return set;
}

Codebook codebook_with(const std::vector<std::string>& labels) {
    Codebook cb;
    for (const auto& l : labels) cb.insert(l, "definition", CodeOrigin::make_starter());
    return cb;
}

// Valid theme JSON for the twelve-codes golden: the five themes the model
// consolidated them into, with codes distributed plausibly.
std::string table_six_json() {
    json j{{"initial_observations", json::array({"Codes concern flexibility and uncertainty."})},
           {"suggested_themes",
            json::array(
                {{{"theme_name", "Flexibility in Work Arrangements"},
                  {"concept", "Desire for adaptable work setups"},
                  {"codes",
                   {"Flexible work arrangements for wellbeing", "Flexible work hours",
                    "Flexible work arrangements for caregivers",
                    "Individualized flexible work arrangements", "Staggered work hours/shifts"}},
                  {"relationship", "All describe flexible arrangements."}},
                 {{"theme_name", "Uncertainty in Work Schedules"},
                  {"concept", "Unclear expectations about schedules"},
                  {"codes",
                   {"In office work frequency and day uncertainty",
                    "Uncertainty about remote work frequency and future schedules",
                    "Break and lunch dynamics uncertainty"}},
                  {"relationship", "All express schedule uncertainty."}},
                 {{"theme_name", "Supportive Work Environment"},
                  {"concept", "Inclusive, supportive workplace"},
                  {"codes", {"Supportive inclusive work environment"}},
                  {"relationship", "Single code about support."}},
                 {{"theme_name", "Clear Guidelines and Boundaries"},
                  {"concept", "Explicit boundaries protecting personal time"},
                  {"codes",
                   {"Clear workday end time and personal time protection guidelines",
                    "Resistance to traditional office hours"}},
                  {"relationship", "Boundary setting."}},
                 {{"theme_name", "Control Over Work Hours"},
                  {"concept", "Worker agency over hours"},
                  {"codes", {"Control over work hours"}},
                  {"relationship", "Single code about control."}}})},
           {"reflection",
            {{"broad_or_narrow_themes", "Balanced."},
             {"contradictions_or_unexpected_patterns", "None."},
             {"potential_subthemes", "None."},
             {"unclassified_codes", json::array()}}}};
    return j.dump(2);
}

}  // namespace

TEST_CASE("single code clusters into a single singleton group") {
    fakes::FakeChat gw([](const ChatRequest&) { return std::string(); });
    auto groups = cluster_codes(codebook_with({"only code"}), test_config(), gw, 1);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == std::vector<std::string>{"only code"});
}

TEST_CASE("code clustering stop-rule arithmetic: 100 codes at size 12 gives 9 groups") {
    std::vector<std::string> labels;
    for (int i = 0; i < 100; ++i) labels.push_back("distinct code number " + std::to_string(i));
    fakes::FakeChat gw([](const ChatRequest&) { return std::string(); });
    auto groups = cluster_codes(codebook_with(labels), test_config(), gw, 99);
    CHECK(groups.size() == 9);
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    CHECK(total == 100);
}

TEST_CASE("theme prompt embeds the code labels and the JSON schema key") {
    auto prompt = build_theme_prompt(golden::twelve_input_codes(), test_config(), templates());
    for (const auto& code : golden::twelve_input_codes()) {
        CHECK(prompt.find(code) != std::string::npos);
    }
    CHECK(prompt.find("\"suggested_themes\"") != std::string::npos);
    CHECK(prompt.find("12. Control over work hours") != std::string::npos);
}

TEST_CASE("theme prompt requires a research question") {
    RunConfig cfg = test_config();
    cfg.research_question.clear();
    CHECK_THROWS_AS(build_theme_prompt({"a code"}, cfg, templates()), PreconditionError);
    CHECK_THROWS_AS(build_theme_prompt({}, test_config(), templates()), PreconditionError);
}

TEST_CASE("the twelve-codes golden parses to its five themes") {
    auto analysis = parse_theme_json(table_six_json());
    REQUIRE(analysis.suggested_themes.size() == 5);
    std::set<std::string> names;
    for (const auto& t : analysis.suggested_themes) names.insert(t.name);
    CHECK(names.count("Flexibility in Work Arrangements") == 1);
    CHECK(names.count("Control Over Work Hours") == 1);
    CHECK(names.count("Uncertainty in Work Schedules") == 1);
    // Code labels come back normalized.
    CHECK(analysis.suggested_themes[0].codes[0] == "flexible work arrangements for wellbeing");
}

TEST_CASE("fenced JSON parses identically to bare JSON") {
    std::string bare = table_six_json();
    auto a = parse_theme_json(bare);
    auto b = parse_theme_json("```json\n" + bare + "\n```");
    auto c = parse_theme_json("```\n" + bare + "\n```");
    CHECK(a.suggested_themes.size() == b.suggested_themes.size());
    CHECK(a.suggested_themes.size() == c.suggested_themes.size());
    CHECK(b.suggested_themes[0].name == "Flexibility in Work Arrangements");
}

TEST_CASE("truncated or structurally wrong JSON raises ParseError") {
    std::string truncated = table_six_json().substr(0, 200);
    CHECK_THROWS_AS(parse_theme_json(truncated), ParseError);
    CHECK_THROWS_AS(parse_theme_json("{\"initial_observations\": []}"), ParseError);
    CHECK_THROWS_AS(parse_theme_json(
                        "{\"initial_observations\": [], \"suggested_themes\": [], "
                        "\"reflection\": {\"broad_or_narrow_themes\": \"\", "
                        "\"contradictions_or_unexpected_patterns\": \"\", "
                        "\"potential_subthemes\": \"\", \"unclassified_codes\": []}}"),
                    ParseError);
}

TEST_CASE("reflection unclassified_codes accepts both array and prose forms") {
    std::string base = table_six_json();
    auto with_string = json::parse(base);
    with_string["reflection"]["unclassified_codes"] = "control over work hours, flexible work hours";
    auto analysis = parse_theme_json(with_string.dump());
    CHECK(analysis.reflection.unclassified_codes.size() == 2);

    with_string["reflection"]["unclassified_codes"] = "None";
    CHECK(parse_theme_json(with_string.dump()).reflection.unclassified_codes.empty());
}

namespace {

// One theme per code cluster, echoing exactly the cluster's labels.
fakes::FakeChat::Handler one_theme_per_cluster() {
    return [](const ChatRequest& req) -> std::string {
        std::size_t open = req.prompt.rfind("<codes>");
        std::size_t close = req.prompt.find("</codes>", open);
        REQUIRE(open != std::string::npos);
        std::string block = req.prompt.substr(open + 7, close - open - 7);
        json codes = json::array();
        std::istringstream in(block);
        std::string line;
        int n = 0;
        std::string first;
        while (std::getline(in, line)) {
            std::size_t dot = line.find(". ");
            if (dot == std::string::npos) continue;
            std::string label = line.substr(dot + 2);
            if (first.empty()) first = label;
            codes.push_back(label);
            ++n;
        }
        json j{{"initial_observations", json::array({"obs"})},
               {"suggested_themes", json::array({{{"theme_name", "Theme about " + first},
                                                  {"concept", "c"},
                                                  {"codes", codes},
                                                  {"relationship", "r"}}})},
               {"reflection",
                {{"broad_or_narrow_themes", ""},
                 {"contradictions_or_unexpected_patterns", ""},
                 {"potential_subthemes", ""},
                 {"unclassified_codes", json::array()}}}};
        return j.dump();
    };
}

}  // namespace

TEST_CASE("consolidate: one theme per cluster gives exact accounting") {
    RunConfig cfg = test_config();
    cfg.theme_cluster_size = 4;
    std::vector<std::string> labels;
    for (int i = 0; i < 17; ++i) labels.push_back("topic " + std::to_string(i) + " matters");
    Codebook cb = codebook_with(labels);

    fakes::FakeChat gw(one_theme_per_cluster());
    auto result = consolidate(cb, cfg, templates(), gw, 3);

    CHECK(result.themes.size() == 5);  // ceil(17/4) clusters, one theme each
    CHECK(result.failed_clusters == 0);

    // Full accounting: every codebook label in exactly one of themes/unclassified.
    std::set<std::string> claimed;
    for (const auto& t : result.themes) {
        for (const auto& c : t.codes) claimed.insert(c);
    }
    std::set<std::string> unclassified(result.unclassified.begin(), result.unclassified.end());
    CHECK(claimed.size() + unclassified.size() == cb.size());
    for (const auto& u : unclassified) CHECK(claimed.count(u) == 0);
    CHECK(unclassified.empty());

    // Theme names unique after normalization.
    std::set<std::string> norm_names;
    for (const auto& t : result.themes) norm_names.insert(normalize_code_label(t.name));
    CHECK(norm_names.size() == result.themes.size());
}

TEST_CASE("consolidate merges duplicate theme names, first occurrence wins") {
    RunConfig cfg = test_config();
    cfg.theme_cluster_size = 2;
    Codebook cb = codebook_with({"alpha code", "beta code", "gamma code", "delta code"});
    fakes::FakeChat gw([](const ChatRequest& req) -> std::string {
        std::size_t open = req.prompt.rfind("<codes>");
        std::size_t close = req.prompt.find("</codes>", open);
        std::string block = req.prompt.substr(open + 7, close - open - 7);
        json codes = json::array();
        std::istringstream in(block);
        std::string line;
        while (std::getline(in, line)) {
            std::size_t dot = line.find(". ");
            if (dot != std::string::npos) codes.push_back(line.substr(dot + 2));
        }
        json j{{"initial_observations", json::array({"obs"})},
               {"suggested_themes", json::array({{{"theme_name", "The Recurring Theme"},
                                                  {"concept", "c"},
                                                  {"codes", codes},
                                                  {"relationship", "r"}}})},
               {"reflection",
                {{"broad_or_narrow_themes", ""},
                 {"contradictions_or_unexpected_patterns", ""},
                 {"potential_subthemes", ""},
                 {"unclassified_codes", json::array()}}}};
        return j.dump();
    });
    auto result = consolidate(cb, cfg, templates(), gw, 3);
    REQUIRE(result.themes.size() == 1);
    CHECK(result.themes[0].codes.size() == 4);  // merged from both clusters
    CHECK(result.unclassified.empty());
}

TEST_CASE("a cluster failing JSON twice routes its codes to unclassified") {
    RunConfig cfg = test_config();
    cfg.theme_cluster_size = 3;
    std::vector<std::string> labels;
    for (int i = 0; i < 6; ++i) labels.push_back("topic " + std::to_string(i) + " matters");
    Codebook cb = codebook_with(labels);

    auto good = one_theme_per_cluster();
    int cluster_calls = 0;
    fakes::FakeChat gw([&](const ChatRequest& req) -> std::string {
        bool is_repair = req.prompt.find("was not a valid JSON object") != std::string::npos;
        if (!is_repair) ++cluster_calls;
        if (cluster_calls == 2) return "not json at all";  // second cluster always fails
        return good(req);
    });
    auto result = consolidate(cb, cfg, templates(), gw, 3);
    CHECK(result.failed_clusters == 1);
    REQUIRE(result.themes.size() == 1);
    // Cluster sizes are whatever the dendrogram gives; the accounting must
    // still be exact and disjoint.
    std::set<std::string> claimed(result.themes[0].codes.begin(), result.themes[0].codes.end());
    std::set<std::string> unclassified(result.unclassified.begin(), result.unclassified.end());
    CHECK(claimed.size() + unclassified.size() == 6);
    CHECK_FALSE(unclassified.empty());
    for (const auto& u : unclassified) CHECK(claimed.count(u) == 0);
}

TEST_CASE("every cluster failing is a stage failure") {
    RunConfig cfg = test_config();
    cfg.theme_cluster_size = 99;
    Codebook cb = codebook_with({"orphan one", "orphan two"});
    fakes::FakeChat gw([](const ChatRequest&) { return std::string("not json at all"); });
    CHECK_THROWS_AS(consolidate(cb, cfg, templates(), gw, 3), StageError);
}

TEST_CASE("repair re-prompt rescues invalid JSON once") {
    RunConfig cfg = test_config();
    cfg.theme_cluster_size = 99;
    Codebook cb = codebook_with({"alpha code", "beta code"});
    int calls = 0;
    auto good = one_theme_per_cluster();
    fakes::FakeChat gw([&](const ChatRequest& req) -> std::string {
        ++calls;
        if (calls == 1) return "```json\n{broken";
        CHECK(req.prompt.find("was not a valid JSON object") != std::string::npos);
        return good(req);
    });
    auto result = consolidate(cb, cfg, templates(), gw, 3);
    CHECK(calls == 2);
    CHECK(result.failed_clusters == 0);
    REQUIRE(result.themes.size() == 1);
}

TEST_CASE("codes the model invents are dropped with a warning") {
    RunConfig cfg = test_config();
    cfg.theme_cluster_size = 99;
    Codebook cb = codebook_with({"real code"});
    fakes::FakeChat gw([](const ChatRequest&) -> std::string {
        json j{{"initial_observations", json::array({"obs"})},
               {"suggested_themes", json::array({{{"theme_name", "A Theme"},
                                                  {"concept", "c"},
                                                  {"codes", {"real code", "invented code"}},
                                                  {"relationship", "r"}}})},
               {"reflection",
                {{"broad_or_narrow_themes", ""},
                 {"contradictions_or_unexpected_patterns", ""},
                 {"potential_subthemes", ""},
                 {"unclassified_codes", json::array()}}}};
        return j.dump();
    });
    auto result = consolidate(cb, cfg, templates(), gw, 3);
    REQUIRE(result.themes.size() == 1);
    CHECK(result.themes[0].codes == std::vector<std::string>{"real code"});
    CHECK_FALSE(result.warnings.empty());
    CHECK(result.unclassified.empty());
}
