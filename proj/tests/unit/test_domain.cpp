#include <doctest.h>

#include <random>

#include "qcoder/domain.hpp"
#include "qcoder/errors.hpp"
#include "qcoder/rng.hpp"

using namespace qcoder;

TEST_CASE("normalize_code_label lowercases and collapses whitespace") {
    CHECK(normalize_code_label("Reliable Video Conferencing Tools") ==
          "reliable video conferencing tools");
    CHECK(normalize_code_label("  work-life   balance ") == "work-life balance");
    CHECK(normalize_code_label("examplecode") == "examplecode");
}

TEST_CASE("normalize_code_label strips punctuation at the ends only") {
    CHECK(normalize_code_label("\"team trust.\"") == "team trust");
    CHECK(normalize_code_label("**openness to feedback**") == "openness to feedback");
    CHECK(normalize_code_label("work-life balance.") == "work-life balance");
}

TEST_CASE("normalize_code_label rejects labels that normalize to nothing") {
    CHECK_THROWS_AS(normalize_code_label("  ...  "), ParseError);
    CHECK_THROWS_AS(normalize_code_label("***"), ParseError);
}

TEST_CASE("codebook rejects duplicate labels and stays unchanged") {
    Codebook cb;
    CHECK(cb.insert("Team Trust", "def one", CodeOrigin::make_starter()));
    CHECK_FALSE(cb.insert("team   TRUST", "def two", CodeOrigin::induced(3)));
    CHECK(cb.size() == 1);
    CHECK(cb.entries().front().definition == "def one");
    CHECK(cb.entries().front().creation_index == 1);
}

TEST_CASE("codebook creation indexes are strictly increasing") {
    Codebook cb;
    cb.insert("alpha", "", CodeOrigin::make_starter());
    cb.insert("beta", "", CodeOrigin::make_starter());
    cb.insert("gamma", "", CodeOrigin::induced(1));
    for (std::size_t i = 1; i < cb.entries().size(); ++i) {
        CHECK(cb.entries()[i].creation_index > cb.entries()[i - 1].creation_index);
    }
}

TEST_CASE("creation log cumulative sum equals entries minus starters") {
    Codebook cb;
    for (int i = 0; i < 20; ++i) {
        cb.insert("starter " + std::to_string(i), "", CodeOrigin::make_starter());
    }
    std::mt19937_64 rng(7);
    int cluster = 1;
    for (int round = 0; round < 15; ++round) {
        int created = 0;
        if (rng_below(rng, 2) == 0) {
            cb.insert("induced " + std::to_string(round), "", CodeOrigin::induced(cluster));
            created = 1;
        }
        cb.log_cluster(cluster++, created);
    }
    int total_created = 0;
    for (const auto& [ordinal, created] : cb.creation_log()) total_created += created;
    CHECK(cb.size() - cb.starter_count() == static_cast<std::size_t>(total_created));
}

namespace {

GenerationCriteria sample_criteria(std::mt19937_64& rng) {
    GenerationCriteria c;
    c.persona = "Persona " + std::to_string(rng_below(rng, 100));
    c.persona_description = "A description with \"quotes\" and unicode \xC3\xA9";
    c.context = "Context " + std::to_string(rng_below(rng, 10));
    c.context_description = "desc";
    c.theme = "Theme " + std::to_string(rng_below(rng, 8));
    c.sub_theme = "Sub " + std::to_string(rng_below(rng, 64));
    c.writing_style = "casual";
    c.writing_length = "medium (4-5 sentences)";
    c.generator_model_id = "model-a";
    return c;
}

}  // namespace

TEST_CASE("domain values round-trip through their JSON encodings") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 50; ++i) {
        Document d;
        d.id = "doc-" + std::to_string(i);
        d.text = "line one\nline two with tab\t and \"quotes\"";
        bool simulated = rng_below(rng, 2) == 0;
        d.source = simulated ? DocumentSource::simulated : DocumentSource::imported;
        if (simulated) d.criteria = sample_criteria(rng);
        CHECK(document_from_json(to_json(d)) == d);

        SummaryPoint p{"p-" + std::to_string(i), d.id, static_cast<int>(i % 7) + 1, "idea text"};
        CHECK(summary_point_from_json(to_json(p)) == p);

        EmbeddingVector v;
        v.model_id = "embed-x";
        v.dims = 8;
        for (int k = 0; k < 8; ++k) v.values.push_back(rng_unit(rng) * 2.0 - 1.0);
        CHECK(embedding_from_json(to_json(v)) == v);

        CodeEntry e{"some code", "a definition",
                    i % 2 == 0 ? CodeOrigin::make_starter() : CodeOrigin::induced(i), i + 1};
        CHECK(code_entry_from_json(to_json(e)) == e);

        Cluster c{static_cast<int>(i), {"a", "b", "c"}};
        CHECK(cluster_from_json(to_json(c)) == c);

        Theme t{"Theme Name", "concept text", {"code a", "code b"}, "relationship text"};
        CHECK(theme_from_json(to_json(t)) == t);
    }
}

TEST_CASE("codebook round-trips including its creation log") {
    Codebook cb;
    cb.insert("alpha", "d1", CodeOrigin::make_starter());
    cb.insert("beta", "d2", CodeOrigin::induced(2));
    cb.log_cluster(1, 0);
    cb.log_cluster(2, 1);
    CHECK(Codebook::from_json(cb.to_json()) == cb);
}

TEST_CASE("manifest round-trips") {
    RunManifest m;
    m.config_hash = "abc";
    StageState s;
    s.status = StageStatus::done;
    s.artifact_path = "corpus.jsonl";
    s.content_hash = "deadbeef";
    s.input_hashes = {"config:abc", "spec:123"};
    m.stage_statuses["simulate"] = s;
    m.stage_statuses["summarize"] = StageState{};
    CHECK(manifest_from_json(to_json(m)) == m);
}

TEST_CASE("document criteria presence must match source") {
    json j{{"id", "d1"}, {"text", "t"}, {"source", "simulated"}};
    CHECK_THROWS_AS(document_from_json(j), ParseError);
}

TEST_CASE("origin encoding survives a round trip") {
    CHECK(origin_from_string(origin_to_string(CodeOrigin::make_starter())) ==
          CodeOrigin::make_starter());
    CHECK(origin_from_string(origin_to_string(CodeOrigin::induced(17))) ==
          CodeOrigin::induced(17));
    CHECK_THROWS_AS(origin_from_string("mystery"), ParseError);
}
