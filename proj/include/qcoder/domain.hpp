#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace qcoder {

using json = nlohmann::json;

// Criteria a synthetic document was generated from. Present iff the document
// is simulated; imported documents carry no ground truth.
struct GenerationCriteria {
    std::string persona;
    std::string persona_description;
    std::string context;
    std::string context_description;
    std::string theme;
    std::string sub_theme;
    std::string writing_style;
    std::string writing_length;
    std::string generator_model_id;

    bool operator==(const GenerationCriteria&) const = default;
};

enum class DocumentSource { simulated, imported };

struct Document {
    std::string id;
    std::string text;
    DocumentSource source = DocumentSource::imported;
    std::optional<GenerationCriteria> criteria;

    bool operator==(const Document&) const = default;
};

// One atomic idea extracted from a document. Ordinals are contiguous per
// document, starting at 1.
struct SummaryPoint {
    std::string id;
    std::string doc_id;
    int ordinal = 1;
    std::string text;

    bool operator==(const SummaryPoint&) const = default;
};

struct EmbeddingVector {
    std::string model_id;
    int dims = 0;
    std::vector<double> values;

    bool operator==(const EmbeddingVector&) const = default;
};

// origin: "starter" for the speculative seed codes, or induced with the
// cluster id that produced the code. Encoded as "starter" / "induced:<id>".
struct CodeOrigin {
    bool starter = true;
    int cluster_id = -1;

    static CodeOrigin make_starter() { return CodeOrigin{true, -1}; }
    static CodeOrigin induced(int cluster_id) { return CodeOrigin{false, cluster_id}; }

    bool operator==(const CodeOrigin&) const = default;
};

struct CodeEntry {
    std::string label;       // normalized: lowercase, single-spaced
    std::string definition;
    CodeOrigin origin;
    int creation_index = 0;  // strictly increasing across the codebook

    bool operator==(const CodeEntry&) const = default;
};

// Growing ordered collection of codes plus the per-cluster creation log
// behind the codes-vs-clusters curve.
class Codebook {
  public:
    // Appends an entry, assigning the next creation_index. Returns false and
    // leaves the codebook unchanged if the normalized label already exists.
    bool insert(const std::string& label, const std::string& definition, CodeOrigin origin);

    bool contains(const std::string& normalized_label) const;
    const std::vector<CodeEntry>& entries() const { return entries_; }

    // One entry per cluster processed: (cluster_ordinal, codes_created_count).
    void log_cluster(int cluster_ordinal, int codes_created);
    const std::vector<std::pair<int, int>>& creation_log() const { return creation_log_; }

    std::size_t size() const { return entries_.size(); }
    std::size_t starter_count() const;

    json to_json() const;
    static Codebook from_json(const json& j);

    bool operator==(const Codebook&) const = default;

  private:
    std::vector<CodeEntry> entries_;
    std::vector<std::pair<int, int>> creation_log_;
};

struct Cluster {
    int id = 0;
    std::vector<std::string> member_ids;  // SummaryPoint ids, non-empty

    bool operator==(const Cluster&) const = default;
};

struct Theme {
    std::string name;
    std::string concept_text;
    std::vector<std::string> codes;
    std::string relationship;

    bool operator==(const Theme&) const = default;
};

// Run-wide configuration. Defaults follow the workflow's published knobs:
// k=5 neighbors, 20 starter codes, 90% PCA variance, 5 reduced dims,
// temperature 0, clusters of ~10 summary points.
struct RunConfig {
    std::string data_type;
    std::string data_collection_context;
    std::string research_question;
    int knn_k = 5;
    int starter_code_count = 20;
    double pca_variance_target = 0.90;
    int reduced_dims = 5;
    int target_cluster_size = 10;
    int theme_cluster_size = 12;  // codes per theme-identification prompt
    std::string chat_model_id;
    std::string embed_model_id;
    double temperature = 0.0;
    std::uint64_t seed = 0;
    double match_threshold = 0.75;
    std::string endpoint_url;
    std::string redundancy_example;
    int mock_embed_dims = 256;  // dims of the offline deterministic embedder
    int workers = 4;

    bool operator==(const RunConfig&) const = default;
};

enum class StageStatus { pending, done };

struct StageState {
    StageStatus status = StageStatus::pending;
    std::string artifact_path;
    std::string content_hash;
    std::vector<std::string> input_hashes;

    bool operator==(const StageState&) const = default;
};

struct RunManifest {
    std::map<std::string, StageState> stage_statuses;
    std::string config_hash;

    bool operator==(const RunManifest&) const = default;
};

// Uniqueness key for codes: lowercase, whitespace runs collapsed to single
// spaces, trimmed, punctuation stripped from both ends. Throws ParseError if
// nothing is left.
std::string normalize_code_label(const std::string& raw);

// Imported documents get content-addressed ids so identical texts collapse to
// one id; simulated documents use plan-sequence ids instead.
Document make_imported_document(const std::string& text);

// Canonical JSON (Lines) encodings. Field names are part of the on-disk
// contract; keep them stable.
json to_json(const GenerationCriteria& c);
GenerationCriteria criteria_from_json(const json& j);
json to_json(const Document& d);
Document document_from_json(const json& j);
json to_json(const SummaryPoint& p);
SummaryPoint summary_point_from_json(const json& j);
json to_json(const EmbeddingVector& v);
EmbeddingVector embedding_from_json(const json& j);
json to_json(const CodeEntry& e);
CodeEntry code_entry_from_json(const json& j);
json to_json(const Cluster& c);
Cluster cluster_from_json(const json& j);
json to_json(const Theme& t);
Theme theme_from_json(const json& j);
json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& j);

std::string origin_to_string(const CodeOrigin& o);
CodeOrigin origin_from_string(const std::string& s);

}  // namespace qcoder
