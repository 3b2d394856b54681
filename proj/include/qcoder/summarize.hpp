#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "qcoder/domain.hpp"
#include "qcoder/gateway.hpp"
#include "qcoder/templates.hpp"

namespace qcoder {

struct SummaryParse {
    std::vector<std::string> points;  // enumeration markers stripped, in order
    std::string preamble;             // the header line that was matched, if any
};

// Renders the summarization prompt for one document. The document text must
// be non-empty.
std::string build_summary_prompt(const Document& doc, const RunConfig& cfg,
                                 const TemplateSet& templates);

// Parses an enumerated summary response. Accepts any header line ending in
// "summary:" (case-insensitive) — models drift between "My summary:" and
// "My expert summary:" — and "N.", "N)" or "-" item markers. Blank lines are
// ignored. Throws ParseError when there is neither a header nor any item.
SummaryParse parse_summary(const std::string& raw);

struct SummaryStats {
    std::size_t documents = 0;
    std::size_t parsed_documents = 0;
    std::size_t failed_documents = 0;
    double mean_points = 0.0;
    double median_points = 0.0;
    std::map<int, int> histogram;  // points-per-document -> document count
    std::vector<std::string> failures;  // doc ids that did not parse
};

struct SummarizeResult {
    std::vector<SummaryPoint> points;
    SummaryStats stats;
    // Deterministic audit trail: (doc_id, prompt, response) per document.
    std::vector<std::tuple<std::string, std::string, std::string>> exchanges;
};

// Summarizes every document (bounded worker pool), assigning per-document
// 1-based ordinals. Unparseable documents are flagged and excluded; the
// stage fails only if more than 20% of documents are unparseable.
SummarizeResult summarize_corpus(const std::vector<Document>& docs, const RunConfig& cfg,
                                 const TemplateSet& templates, Gateway& gateway);

}  // namespace qcoder
