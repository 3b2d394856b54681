#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "qcoder/errors.hpp"
#include "qcoder/templates.hpp"

using namespace qcoder;

namespace {

const TemplateSet& shipped_templates() {
    static TemplateSet set = TemplateSet::load("templates");
    return set;
}

}  // namespace

TEST_CASE("shipped templates load and hash-match the manifest") {
    CHECK_NOTHROW(shipped_templates());
}

TEST_CASE("render substitutes every placeholder site") {
    Template t{"demo", "a {x} b {x} c {y}", {"x", "y"}};
    CHECK(render(t, {{"x", "1"}, {"y", "2"}}) == "a 1 b 1 c 2");
}

TEST_CASE("render reports missing placeholders by name") {
    Template t{"demo", "{text} and {other}", {"text", "other"}};
    try {
        render(t, {{"other", "x"}});
        FAIL("expected TemplateError");
    } catch (const TemplateError& e) {
        CHECK(std::string(e.what()).find("{text}") != std::string::npos);
    }
}

TEST_CASE("render treats doubled braces as literal braces") {
    Template t{"demo", "{{\"k\": \"{v}\"}}", {"v"}};
    CHECK(render(t, {{"v", "x"}}) == "{\"k\": \"x\"}");
}

TEST_CASE("undeclared body token is a template error") {
    Template t{"demo", "{declared} {sneaky}", {"declared"}};
    CHECK_THROWS_AS(render(t, {{"declared", "x"}, {"sneaky", "y"}}), TemplateError);
}

TEST_CASE("starter prompt renders the requested code count") {
    const auto& t = shipped_templates().get("starter_codes");
    std::string rendered = render(t, {{"k_to_start", "20"},
                                      {"data_type", "written response"},
                                      {"data_collection_context", "a study"},
                                      {"code_template", "1. Code 1"}});
    CHECK(rendered.find("generate 20 hypothetical codes") != std::string::npos);
    CHECK(rendered.find("{") == std::string::npos);
}

TEST_CASE("summarize prompt holds the document in exactly one <text> block") {
    const auto& t = shipped_templates().get("summarize");
    std::string rendered = render(t, {{"data_type", "written response"},
                                      {"data_collection_context", "a study"},
                                      {"text", "Jared did a great job responding quickly."}});
    // The template prose also mentions the <text> tag, so the content site is
    // identified by its closing tag, which appears exactly once.
    std::size_t close = rendered.find("</text>");
    REQUIRE(close != std::string::npos);
    CHECK(rendered.find("</text>", close + 1) == std::string::npos);
    CHECK(rendered.find("<text>Jared did a great job") != std::string::npos);
}

TEST_CASE("theme prompt embeds the research question at every site") {
    const auto& t = shipped_templates().get("themes");
    const std::string question = "What factors affect ethical culture?";
    std::string rendered = render(t, {{"research_question", question},
                                      {"data_type", "written response"},
                                      {"data_collection_context", "a study"},
                                      {"labels", "1. code one"}});
    std::size_t count = 0;
    for (std::size_t pos = rendered.find(question); pos != std::string::npos;
         pos = rendered.find(question, pos + 1)) {
        ++count;
    }
    CHECK(count >= 2);
    CHECK(rendered.find("\"suggested_themes\"") != std::string::npos);
    // The JSON example block must have real braces after rendering.
    CHECK(rendered.find("{\n") != std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos);
}

TEST_CASE("induction prompt preserves structural tags") {
    const auto& t = shipped_templates().get("induction");
    std::string rendered = render(t, {{"data_type", "written response"},
                                      {"data_collection_context", "a study"},
                                      {"redundancy_example", "example text"},
                                      {"codes", "1. code one"},
                                      {"text", "1. point one"}});
    CHECK(rendered.find("<existing codebook>\n1. code one\n</existing codebook>") !=
          std::string::npos);
    CHECK(rendered.find("<text_to_analyze>\n1. point one\n</text_to_analyze>") !=
          std::string::npos);
    CHECK(rendered.find("FULL ANALYSIS TEMPLATE:") != std::string::npos);
    CHECK(rendered.find("parsimony") != std::string::npos);
    CHECK(rendered.find("{data_type}") == std::string::npos);
}

TEST_CASE("missing text placeholder is a render error") {
    const auto& t = shipped_templates().get("summarize");
    CHECK_THROWS_AS(render(t, {{"data_type", "written response"},
                               {"data_collection_context", "a study"}}),
                    TemplateError);
}

TEST_CASE("rendering distinct substitutions yields distinct prompts (property)") {
    const auto& t = shipped_templates().get("summarize");
    std::set<std::string> rendered;
    int trials = 0;
    for (const std::string& dt : {"written response", "interview note"}) {
        for (const std::string& ctx : {"study one", "study two", "study three"}) {
            for (int i = 0; i < 10; ++i) {
                rendered.insert(render(t, {{"data_type", dt},
                                           {"data_collection_context", ctx},
                                           {"text", "document body " + std::to_string(i)}}));
                ++trials;
            }
        }
    }
    CHECK(rendered.size() == static_cast<std::size_t>(trials));
}

TEST_CASE("tampered template content fails the manifest hash check") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "qcoder_tmpl_test";
    fs::create_directories(dir);
    std::string manifest = R"({"templates": {"demo": {"file": "demo.txt",
        "sha256": "0000000000000000000000000000000000000000000000000000000000000000",
        "placeholders": []}}})";
    {
        std::ofstream(dir / "manifest.json") << manifest;
        std::ofstream(dir / "demo.txt") << "body";
    }
    CHECK_THROWS_AS(TemplateSet::load(dir.string()), TemplateError);
    fs::remove_all(dir);
}
