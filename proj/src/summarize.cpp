#include "qcoder/summarize.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>
#include <thread>

#include "qcoder/errors.hpp"
#include "qcoder/textutil.hpp"

namespace qcoder {

namespace {

// Matches "1. text", "1) text", "- text"; returns the content or nullopt.
std::optional<std::string> strip_enumeration(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) return std::nullopt;

    if (line[i] == '-') {
        std::size_t j = i + 1;
        if (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) {
            std::string content = trim_copy(line.substr(j + 1));
            if (!content.empty()) return content;
        }
        return std::nullopt;
    }

    std::size_t digits = 0;
    while (i + digits < line.size() && std::isdigit(static_cast<unsigned char>(line[i + digits])))
        ++digits;
    if (digits == 0) return std::nullopt;
    std::size_t j = i + digits;
    if (j >= line.size() || (line[j] != '.' && line[j] != ')')) return std::nullopt;
    std::string content = trim_copy(line.substr(j + 1));
    if (content.empty()) return std::nullopt;
    return content;
}

bool is_summary_header(const std::string& line) {
    std::string t = to_lower_copy(trim_copy(line));
    const std::string suffix = "summary:";
    return t.size() >= suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string build_summary_prompt(const Document& doc, const RunConfig& cfg,
                                 const TemplateSet& templates) {
    if (trim_copy(doc.text).empty()) {
        throw PreconditionError("document " + doc.id + " has empty text");
    }
    if (cfg.data_type.empty() || cfg.data_collection_context.empty()) {
        throw PreconditionError("data_type and data_collection_context must be configured");
    }
    return render(templates.get("summarize"),
                  {{"data_type", cfg.data_type},
                   {"data_collection_context", cfg.data_collection_context},
                   {"text", doc.text}});
}

SummaryParse parse_summary(const std::string& raw) {
    SummaryParse result;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        if (trim_copy(line).empty()) continue;
        if (result.preamble.empty() && result.points.empty() && is_summary_header(line)) {
            result.preamble = trim_copy(line);
            continue;
        }
        if (auto item = strip_enumeration(line)) {
            result.points.push_back(*item);
        }
    }
    if (result.preamble.empty() && result.points.empty()) {
        throw ParseError("summary response has no recognizable header and no enumerated items");
    }
    if (result.points.empty()) {
        throw ParseError("summary response has a header but no enumerated items");
    }
    return result;
}

SummarizeResult summarize_corpus(const std::vector<Document>& docs, const RunConfig& cfg,
                                 const TemplateSet& templates, Gateway& gateway) {
    if (docs.empty()) {
        throw PreconditionError("summarize_corpus requires a non-empty corpus");
    }

    struct PerDoc {
        std::vector<std::string> points;
        std::string prompt;
        std::string response;
        bool failed = false;
        std::exception_ptr fatal;  // gateway/transport errors abort the stage
    };
    std::vector<PerDoc> results(docs.size());

    const int workers = std::max(1, cfg.workers);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= docs.size()) return;
            PerDoc& slot = results[i];
            try {
                slot.prompt = build_summary_prompt(docs[i], cfg, templates);
                slot.response =
                    gateway.chat(ChatRequest{cfg.chat_model_id, slot.prompt, cfg.temperature});
                slot.points = parse_summary(slot.response).points;
            } catch (const ParseError&) {
                slot.failed = true;
            } catch (const PreconditionError&) {
                slot.failed = true;
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
    for (const auto& slot : results) {
        if (slot.fatal) std::rethrow_exception(slot.fatal);
    }

    // Re-sort by document id for order-deterministic output.
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });

    SummarizeResult out;
    out.stats.documents = docs.size();
    std::vector<int> counts;
    for (std::size_t i : order) {
        const Document& doc = docs[i];
        const PerDoc& slot = results[i];
        out.exchanges.emplace_back(doc.id, slot.prompt, slot.response);
        if (slot.failed) {
            ++out.stats.failed_documents;
            out.stats.failures.push_back(doc.id);
            continue;
        }
        ++out.stats.parsed_documents;
        counts.push_back(static_cast<int>(slot.points.size()));
        out.stats.histogram[static_cast<int>(slot.points.size())] += 1;
        int ordinal = 1;
        for (const auto& text : slot.points) {
            SummaryPoint p;
            p.doc_id = doc.id;
            p.ordinal = ordinal++;
            p.id = doc.id + "#" + std::to_string(p.ordinal);
            p.text = text;
            out.points.push_back(std::move(p));
        }
    }

    if (!counts.empty()) {
        double total = 0.0;
        for (int c : counts) total += c;
        out.stats.mean_points = total / static_cast<double>(counts.size());
        std::vector<int> sorted = counts;
        std::sort(sorted.begin(), sorted.end());
        std::size_t mid = sorted.size() / 2;
        out.stats.median_points = sorted.size() % 2 == 1
                                      ? sorted[mid]
                                      : (sorted[mid - 1] + sorted[mid]) / 2.0;
    }

    double failure_rate =
        static_cast<double>(out.stats.failed_documents) / static_cast<double>(docs.size());
    if (failure_rate > 0.20) {
        std::ostringstream msg;
        msg << "summarization failed for " << out.stats.failed_documents << "/" << docs.size()
            << " documents (> 20%)";
        throw StageError(msg.str());
    }
    return out;
}

}  // namespace qcoder
