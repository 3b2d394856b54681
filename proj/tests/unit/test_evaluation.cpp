#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fakes.hpp"
#include "qcoder/errors.hpp"
#include "qcoder/evaluation.hpp"

using namespace qcoder;

namespace {

RunConfig test_config() {
    RunConfig cfg;
    cfg.data_type = "written response";
    cfg.data_collection_context = "a study";
    cfg.embed_model_id = "embed-x";
    cfg.match_threshold = 0.75;
    return cfg;
}

Theme theme_named(const std::string& name) { return Theme{name, "", {}, ""}; }

fakes::FakeChat embeddings_only() {
    return fakes::FakeChat([](const ChatRequest&) -> std::string {
        FAIL("match_themes must not chat");
        return "";
    });
}

}  // namespace

TEST_CASE("a theme equal to the sub-theme string matches at similarity 1") {
    auto gw = embeddings_only();
    std::vector<Theme> themes = {theme_named("unrelated topic entirely"),
                                 theme_named("Effective Use of Feedback Mechanisms")};
    auto rows = match_themes(themes, {"effective use of feedback mechanisms"}, test_config(), gw);
    REQUIRE(rows.size() == 1);
    REQUIRE_FALSE(rows[0].top_matches.empty());
    CHECK(rows[0].top_matches[0].first == "Effective Use of Feedback Mechanisms");
    CHECK(rows[0].top_matches[0].second == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[0].matched);
}

TEST_CASE("match table equals independent pairwise cosine on a 5x5 fixture") {
    auto gw = embeddings_only();
    std::vector<std::string> theme_names = {
        "feedback mechanism effectiveness", "empathetic communication",
        "leadership and initiative", "openness to feedback", "workload distribution fairness"};
    std::vector<std::string> subthemes = {
        "effective use of feedback mechanisms", "empathy and understanding in communication",
        "leadership and initiative taking", "embracing feedback as a learning opportunity",
        "fair division of work"};
    std::vector<Theme> themes;
    for (const auto& n : theme_names) themes.push_back(theme_named(n));

    auto rows = match_themes(themes, subthemes, test_config(), gw);

    // Independent oracle: embed the same normalized strings through the same
    // gateway, then score all pairs with a locally written cosine.
    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    std::vector<std::string> batch;
    for (const auto& n : theme_names) batch.push_back(normalize_code_label(n));
    for (const auto& s : subthemes) batch.push_back(normalize_code_label(s));
    auto vecs = gw.embed(batch, "embed-x");

    REQUIRE(rows.size() == subthemes.size());
    for (std::size_t s = 0; s < subthemes.size(); ++s) {
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t t = 0; t < theme_names.size(); ++t) {
            scored.emplace_back(cosine(vecs[theme_names.size() + s].values, vecs[t].values), t);
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(rows[s].top_matches.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(rows[s].top_matches[i].first == theme_names[scored[i].second]);
            CHECK(rows[s].top_matches[i].second ==
                  doctest::Approx(scored[i].first).epsilon(1e-9));
        }
        CHECK(rows[s].matched == (scored[0].first >= 0.75));
    }
}

TEST_CASE("match_themes is invariant under theme permutation") {
    auto gw = embeddings_only();
    std::vector<Theme> forward = {theme_named("alpha topic"), theme_named("beta topic"),
                                  theme_named("gamma topic")};
    std::vector<Theme> reversed = {theme_named("gamma topic"), theme_named("beta topic"),
                                   theme_named("alpha topic")};
    auto rows_f = match_themes(forward, {"beta topic"}, test_config(), gw);
    auto rows_r = match_themes(reversed, {"beta topic"}, test_config(), gw);
    REQUIRE(rows_f.size() == 1);
    REQUIRE(rows_r.size() == 1);
    std::multiset<std::pair<std::string, double>> a(rows_f[0].top_matches.begin(),
                                                    rows_f[0].top_matches.end());
    std::multiset<std::pair<std::string, double>> b(rows_r[0].top_matches.begin(),
                                                    rows_r[0].top_matches.end());
    CHECK(a == b);
    CHECK(rows_f[0].top_matches[0].first == "beta topic");
    CHECK(rows_r[0].top_matches[0].first == "beta topic");
}

TEST_CASE("match preconditions") {
    auto gw = embeddings_only();
    CHECK_THROWS_AS(match_themes({}, {"s"}, test_config(), gw), PreconditionError);
    CHECK_THROWS_AS(match_themes({theme_named("t")}, {}, test_config(), gw), PreconditionError);
}

namespace {

MatchRow row_with(double top, bool matched) {
    MatchRow r;
    r.sub_theme = "s";
    r.top_matches = {{"t", top}};
    r.matched = matched;
    return r;
}

}  // namespace

TEST_CASE("coverage percentages: 3 unmatched of 60 is exactly 5%") {
    std::vector<MatchRow> rows;
    for (int i = 0; i < 57; ++i) rows.push_back(row_with(0.9, true));
    for (int i = 0; i < 3; ++i) rows.push_back(row_with(0.2, false));
    auto report = coverage_report(rows);
    CHECK(report.pct_unmatched == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(report.pct_matched == doctest::Approx(95.0).epsilon(1e-12));
    CHECK(report.pct_matched + report.pct_unmatched == doctest::Approx(100.0).epsilon(1e-9));
    REQUIRE(report.worst_rows.size() == 5);
    CHECK(report.worst_rows[0].top_matches[0].second == doctest::Approx(0.2));
}

TEST_CASE("all matched gives 100%") {
    std::vector<MatchRow> rows = {row_with(0.8, true), row_with(0.99, true)};
    auto report = coverage_report(rows);
    CHECK(report.pct_matched == doctest::Approx(100.0));
    CHECK(report.pct_unmatched == doctest::Approx(0.0));
    CHECK(report.worst_rows.size() == 2);
}

namespace {

Codebook codebook_with_log(int starters, const std::vector<int>& created_per_cluster) {
    Codebook cb;
    for (int i = 0; i < starters; ++i) {
        cb.insert("starter " + std::to_string(i), "", CodeOrigin::make_starter());
    }
    int n = 0;
    for (std::size_t c = 0; c < created_per_cluster.size(); ++c) {
        for (int k = 0; k < created_per_cluster[c]; ++k) {
            cb.insert("induced " + std::to_string(n++), "",
                      CodeOrigin::induced(static_cast<int>(c) + 1));
        }
        cb.log_cluster(static_cast<int>(c) + 1, created_per_cluster[c]);
    }
    return cb;
}

}  // namespace

TEST_CASE("creation rate prefix sums: [1,0,1,0] on 20 starters") {
    auto report = creation_rate_report(codebook_with_log(20, {1, 0, 1, 0}));
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[0].cumulative_codes == 21);
    CHECK(report.rows[1].cumulative_codes == 21);
    CHECK(report.rows[2].cumulative_codes == 22);
    CHECK(report.rows[3].cumulative_codes == 22);
    CHECK(report.rows[0].cumulative_codes == 20 + 1);  // starts at starters + log[1]
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].cumulative_codes >= report.rows[i - 1].cumulative_codes);
    }
}

TEST_CASE("all-ones creation log runs parallel to the diagonal") {
    std::vector<int> ones(7, 1);
    auto report = creation_rate_report(codebook_with_log(20, ones), 854, 89);
    CHECK(report.final_codes == 27);
    for (const auto& row : report.rows) {
        CHECK(row.cumulative_codes == row.diagonal_reference);
    }
    CHECK(report.responses_per_theme == doctest::Approx(854.0 / 89.0));
}

TEST_CASE("creation rate CSV has the three expected columns") {
    auto report = creation_rate_report(codebook_with_log(2, {1, 0}));
    std::string csv = creation_rate_csv(report);
    CHECK(csv.rfind("cluster_ordinal,cumulative_codes,diagonal_reference\n", 0) == 0);
    CHECK(csv.find("1,3,3\n") != std::string::npos);
    CHECK(csv.find("2,3,4\n") != std::string::npos);
}

TEST_CASE("match table renderers include every row") {
    std::vector<MatchRow> rows = {row_with(0.9, true), row_with(0.1, false)};
    rows[0].sub_theme = "first sub-theme";
    rows[1].sub_theme = "second, with comma";
    std::string csv = match_table_csv(rows);
    CHECK(csv.find("first sub-theme") != std::string::npos);
    CHECK(csv.find("\"second, with comma\"") != std::string::npos);
    std::string md = match_table_markdown(rows);
    CHECK(md.find("| first sub-theme |") != std::string::npos);
    CHECK(md.find("| yes |") != std::string::npos);
    CHECK(md.find("| no |") != std::string::npos);
}
