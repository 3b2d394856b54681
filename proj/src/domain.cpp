#include "qcoder/domain.hpp"

#include <algorithm>
#include <cctype>

#include "qcoder/errors.hpp"
#include "qcoder/hash.hpp"

namespace qcoder {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::string normalize_code_label(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    // Strip punctuation from the ends only; internal hyphens etc. stay.
    std::size_t b = 0, e = out.size();
    while (b < e && is_punct(out[b])) ++b;
    while (e > b && is_punct(out[e - 1])) --e;
    std::string result = trim(out.substr(b, e - b));
    if (result.empty()) {
        throw ParseError("code label empty after normalization: \"" + raw + "\"");
    }
    return result;
}

Document make_imported_document(const std::string& text) {
    std::string trimmed = trim(text);
    if (trimmed.empty()) {
        throw ParseError("imported document text is empty");
    }
    Document d;
    d.id = "doc-" + sha256_hex(trimmed).substr(0, 12);
    d.text = trimmed;
    d.source = DocumentSource::imported;
    return d;
}

bool Codebook::insert(const std::string& label, const std::string& definition, CodeOrigin origin) {
    std::string normalized = normalize_code_label(label);
    if (contains(normalized)) {
        return false;
    }
    int next_index = entries_.empty() ? 1 : entries_.back().creation_index + 1;
    entries_.push_back(CodeEntry{normalized, definition, origin, next_index});
    return true;
}

bool Codebook::contains(const std::string& normalized_label) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const CodeEntry& e) { return e.label == normalized_label; });
}

void Codebook::log_cluster(int cluster_ordinal, int codes_created) {
    creation_log_.emplace_back(cluster_ordinal, codes_created);
}

std::size_t Codebook::starter_count() const {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [](const CodeEntry& e) { return e.origin.starter; }));
}

json Codebook::to_json() const {
    json entries = json::array();
    for (const auto& e : entries_) entries.push_back(qcoder::to_json(e));
    json log = json::array();
    for (const auto& [ordinal, created] : creation_log_) {
        log.push_back(json{{"cluster_ordinal", ordinal}, {"codes_created_count", created}});
    }
    return json{{"entries", entries}, {"creation_log", log}};
}

Codebook Codebook::from_json(const json& j) {
    Codebook cb;
    for (const auto& e : j.at("entries")) {
        cb.entries_.push_back(code_entry_from_json(e));
    }
    for (const auto& l : j.at("creation_log")) {
        cb.creation_log_.emplace_back(l.at("cluster_ordinal").get<int>(),
                                      l.at("codes_created_count").get<int>());
    }
    return cb;
}

std::string origin_to_string(const CodeOrigin& o) {
    return o.starter ? "starter" : "induced:" + std::to_string(o.cluster_id);
}

CodeOrigin origin_from_string(const std::string& s) {
    if (s == "starter") return CodeOrigin::make_starter();
    const std::string prefix = "induced:";
    if (s.rfind(prefix, 0) == 0) {
        return CodeOrigin::induced(std::stoi(s.substr(prefix.size())));
    }
    throw ParseError("unknown code origin: " + s);
}

json to_json(const GenerationCriteria& c) {
    return json{{"persona", c.persona},
                {"persona_description", c.persona_description},
                {"context", c.context},
                {"context_description", c.context_description},
                {"theme", c.theme},
                {"sub_theme", c.sub_theme},
                {"writing_style", c.writing_style},
                {"writing_length", c.writing_length},
                {"generator_model_id", c.generator_model_id}};
}

GenerationCriteria criteria_from_json(const json& j) {
    GenerationCriteria c;
    c.persona = j.at("persona").get<std::string>();
    c.persona_description = j.at("persona_description").get<std::string>();
    c.context = j.at("context").get<std::string>();
    c.context_description = j.at("context_description").get<std::string>();
    c.theme = j.at("theme").get<std::string>();
    c.sub_theme = j.at("sub_theme").get<std::string>();
    c.writing_style = j.at("writing_style").get<std::string>();
    c.writing_length = j.at("writing_length").get<std::string>();
    c.generator_model_id = j.at("generator_model_id").get<std::string>();
    return c;
}

json to_json(const Document& d) {
    json j{{"id", d.id},
           {"text", d.text},
           {"source", d.source == DocumentSource::simulated ? "simulated" : "imported"}};
    if (d.criteria) {
        j["criteria"] = to_json(*d.criteria);
    }
    return j;
}

Document document_from_json(const json& j) {
    Document d;
    d.id = j.at("id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    std::string source = j.at("source").get<std::string>();
    if (source == "simulated") {
        d.source = DocumentSource::simulated;
    } else if (source == "imported") {
        d.source = DocumentSource::imported;
    } else {
        throw ParseError("unknown document source: " + source);
    }
    if (j.contains("criteria")) {
        d.criteria = criteria_from_json(j.at("criteria"));
    }
    if ((d.source == DocumentSource::simulated) != d.criteria.has_value()) {
        throw ParseError("document " + d.id + ": criteria must be present iff simulated");
    }
    return d;
}

json to_json(const SummaryPoint& p) {
    return json{{"id", p.id}, {"doc_id", p.doc_id}, {"ordinal", p.ordinal}, {"text", p.text}};
}

SummaryPoint summary_point_from_json(const json& j) {
    SummaryPoint p;
    p.id = j.at("id").get<std::string>();
    p.doc_id = j.at("doc_id").get<std::string>();
    p.ordinal = j.at("ordinal").get<int>();
    p.text = j.at("text").get<std::string>();
    return p;
}

json to_json(const EmbeddingVector& v) {
    return json{{"model_id", v.model_id}, {"dims", v.dims}, {"values", v.values}};
}

EmbeddingVector embedding_from_json(const json& j) {
    EmbeddingVector v;
    v.model_id = j.at("model_id").get<std::string>();
    v.dims = j.at("dims").get<int>();
    v.values = j.at("values").get<std::vector<double>>();
    if (static_cast<int>(v.values.size()) != v.dims) {
        throw ParseError("embedding values length does not match dims");
    }
    return v;
}

json to_json(const CodeEntry& e) {
    return json{{"label", e.label},
                {"definition", e.definition},
                {"origin", origin_to_string(e.origin)},
                {"creation_index", e.creation_index}};
}

CodeEntry code_entry_from_json(const json& j) {
    CodeEntry e;
    e.label = j.at("label").get<std::string>();
    e.definition = j.at("definition").get<std::string>();
    e.origin = origin_from_string(j.at("origin").get<std::string>());
    e.creation_index = j.at("creation_index").get<int>();
    return e;
}

json to_json(const Cluster& c) {
    return json{{"id", c.id}, {"member_ids", c.member_ids}};
}

Cluster cluster_from_json(const json& j) {
    Cluster c;
    c.id = j.at("id").get<int>();
    c.member_ids = j.at("member_ids").get<std::vector<std::string>>();
    return c;
}

json to_json(const Theme& t) {
    return json{{"name", t.name},
                {"concept", t.concept_text},
                {"codes", t.codes},
                {"relationship", t.relationship}};
}

Theme theme_from_json(const json& j) {
    Theme t;
    t.name = j.at("name").get<std::string>();
    t.concept_text = j.at("concept").get<std::string>();
    t.codes = j.at("codes").get<std::vector<std::string>>();
    t.relationship = j.at("relationship").get<std::string>();
    return t;
}

json to_json(const RunManifest& m) {
    json stages = json::object();
    for (const auto& [name, st] : m.stage_statuses) {
        stages[name] = json{{"status", st.status == StageStatus::done ? "done" : "pending"},
                            {"artifact_path", st.artifact_path},
                            {"content_hash", st.content_hash},
                            {"input_hashes", st.input_hashes}};
    }
    return json{{"stage_statuses", stages}, {"config_hash", m.config_hash}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [name, st] : j.at("stage_statuses").items()) {
        StageState s;
        s.status = st.at("status").get<std::string>() == "done" ? StageStatus::done
                                                                : StageStatus::pending;
        s.artifact_path = st.at("artifact_path").get<std::string>();
        s.content_hash = st.at("content_hash").get<std::string>();
        s.input_hashes = st.at("input_hashes").get<std::vector<std::string>>();
        m.stage_statuses[name] = s;
    }
    return m;
}

}  // namespace qcoder
