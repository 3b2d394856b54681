#include "qcoder/scripted_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qcoder/errors.hpp"
#include "qcoder/textutil.hpp"

namespace qcoder {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string find_between(const std::string& text, const std::string& open,
                         const std::string& close) {
    std::size_t a = text.find(open);
    if (a == std::string::npos) return "";
    a += open.size();
    std::size_t b = text.find(close, a);
    if (b == std::string::npos) return "";
    return text.substr(a, b - a);
}

// Prompt bodies mention their data tags in prose ("...in the <codes> tag"),
// so data blocks are located from the last open-tag occurrence.
std::string find_between_last(const std::string& text, const std::string& open,
                              const std::string& close) {
    std::size_t a = text.rfind(open);
    if (a == std::string::npos) return "";
    a += open.size();
    std::size_t b = text.find(close, a);
    if (b == std::string::npos) return "";
    return text.substr(a, b - a);
}

int find_count_after(const std::string& text, const std::string& prefix) {
    std::size_t pos = text.find(prefix);
    if (pos == std::string::npos) return 0;
    pos += prefix.size();
    int value = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        value = value * 10 + (text[pos] - '0');
        ++pos;
    }
    return value;
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        current.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            std::string t = trim_copy(current);
            if (t.size() > 1) out.push_back(t);
            current.clear();
        }
    }
    std::string t = trim_copy(current);
    if (t.size() > 1) out.push_back(t);
    return out;
}

std::vector<std::string> parse_numbered_lines(const std::string& block) {
    std::vector<std::string> out;
    std::istringstream in(block);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        std::size_t digits = 0;
        while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
        if (digits == 0 || digits >= t.size() || (t[digits] != '.' && t[digits] != ')')) continue;
        std::string content = trim_copy(t.substr(digits + 1));
        if (!content.empty()) out.push_back(content);
    }
    return out;
}

std::string title_case(const std::string& text) {
    std::string out = text;
    bool start = true;
    for (char& c : out) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            start = false;
        } else {
            start = true;
        }
    }
    return out;
}

const std::vector<std::string>& starter_pool() {
    static const std::vector<std::string> pool = {
        "communication clarity",      "workload balance",          "team collaboration",
        "leadership support",         "schedule flexibility",      "recognition and praise",
        "training opportunities",     "resource availability",     "decision transparency",
        "conflict resolution",        "goal alignment",            "feedback quality",
        "trust in management",        "autonomy at work",          "process efficiency",
        "onboarding experience",      "meeting effectiveness",     "career development",
        "peer accountability",        "deadline pressure",         "tool adequacy",
        "role clarity",               "morale and motivation",     "knowledge sharing"};
    return pool;
}

const std::vector<std::string>& persona_pool_names() {
    static const std::vector<std::string> pool = {
        "Team Lead",        "New Hire",           "Remote Veteran",  "Office Enthusiast",
        "Working Parent",   "Skeptical Analyst",  "Union Member",    "Early Career Engineer",
        "Department Manager", "Part Time Contractor"};
    return pool;
}

const std::vector<std::string>& context_pool() {
    static const std::vector<std::string> pool = {
        "Government Agency Workplace", "Growing Tech Startup", "Regional Hospital",
        "Manufacturing Plant"};
    return pool;
}

const std::vector<std::string>& theme_pool() {
    static const std::vector<std::string> pool = {
        "Flexible Scheduling Expectations", "Communication Clarity Concerns",
        "Team Collaboration Dynamics",      "Workspace Comfort and Setup",
        "Career Growth Worries",            "Management Trust Issues",
        "Technology Readiness Gaps",        "Commute and Time Costs",
        "Health and Safety Assurance",      "Social Connection Needs",
        "Workload Distribution Fairness",   "Policy Transparency Demands"};
    return pool;
}

const std::vector<std::string>& subtheme_qualifiers() {
    static const std::vector<std::string> pool = {
        "for new employees",    "in daily routines",    "during busy periods",
        "for remote staff",     "in team meetings",     "for long term planning",
        "with limited resources", "across departments"};
    return pool;
}

std::string respond_summary(const std::string& prompt) {
    std::string text = find_between_last(prompt, "<text>", "</text>");
    auto sentences = split_sentences(text);
    if (sentences.empty()) sentences.push_back(trim_copy(text));
    std::ostringstream out;
    out << "My summary:\n";
    std::size_t count = std::min<std::size_t>(sentences.size(), 6);
    for (std::size_t i = 0; i < count; ++i) {
        std::string point = sentences[i];
        while (!point.empty() && (point.back() == '.' || point.back() == '!' || point.back() == '?'))
            point.pop_back();
        out << (i + 1) << ". " << point << "\n";
    }
    return out.str();
}

std::string respond_starter_codes(const std::string& prompt) {
    int want = find_count_after(prompt, "task is to generate ");
    if (want <= 0) want = 20;
    std::ostringstream out;
    for (int i = 0; i < want; ++i) {
        const auto& pool = starter_pool();
        std::string label = i < static_cast<int>(pool.size())
                                ? pool[static_cast<std::size_t>(i)]
                                : "additional topic " + std::to_string(i + 1);
        out << (i + 1) << ". " << label << "\n";
    }
    return out.str();
}

bool is_stop_token(const std::string& tok) {
    static const std::set<std::string> stop = {"the", "and", "has", "was", "are", "can", "its",
                                               "our", "out", "how", "who", "all", "any", "not",
                                               "this", "that", "with", "have", "about"};
    return tok.size() < 3 || stop.count(tok) > 0;
}

std::string respond_induction(const std::string& prompt) {
    std::string codes_block = find_between_last(prompt, "<existing codebook>", "</existing codebook>");
    std::string text_block = find_between_last(prompt, "<text_to_analyze>", "</text_to_analyze>");
    auto existing = parse_numbered_lines(codes_block);
    auto summaries = parse_numbered_lines(text_block);

    // The cluster's dominant phrase becomes the candidate label: tokens whose
    // count reaches half the top count, in (count, first occurrence) order.
    std::map<std::string, std::pair<int, int>> counts;  // token -> (count, first pos)
    int pos = 0;
    for (const auto& s : summaries) {
        for (const auto& tok : tokenize_lower(s)) {
            if (is_stop_token(tok)) continue;
            auto it = counts.find(tok);
            if (it == counts.end()) {
                counts[tok] = {1, pos++};
            } else {
                it->second.first += 1;
            }
        }
    }
    std::vector<std::pair<std::string, std::pair<int, int>>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.second.second < b.second.second;
    });
    std::string candidate;
    if (!ranked.empty()) {
        int threshold = (ranked.front().second.first + 1) / 2;
        std::size_t taken = 0;
        std::vector<std::pair<int, std::string>> phrase;  // (first pos, token)
        for (const auto& [tok, stat] : ranked) {
            if (stat.first < threshold || taken == 6) break;
            phrase.emplace_back(stat.second, tok);
            ++taken;
        }
        std::sort(phrase.begin(), phrase.end());
        for (std::size_t i = 0; i < phrase.size(); ++i) {
            if (i > 0) candidate += " ";
            candidate += phrase[i].second;
        }
    }
    if (candidate.empty()) candidate = "miscellaneous ideas";

    bool already_covered = false;
    for (const auto& code : existing) {
        if (to_lower_copy(trim_copy(code)) == candidate) {
            already_covered = true;
            break;
        }
    }

    std::ostringstream out;
    out << "My expert analysis:\n";
    out << "Step 1 (codebook examination)\n";
    out << "1. The existing codebook covers " << existing.size() << " nearby ideas.\n";
    out << "Step 2 (current data examination)\n";
    out << "2. The cluster of " << summaries.size() << " summary points centers on "
        << candidate << ".\n";
    out << "Step 3 (analysis part 1)\n";
    if (already_covered) {
        out << "3. The existing code \"" << candidate << "\" already describes this cluster.\n";
    } else {
        out << "3. No existing code describes " << candidate << " directly.\n";
    }
    out << "Step 4 (analysis part 2)\n";
    out << (already_covered ? "4. No new code is required for this cluster.\n"
                            : "4. A new code is required to capture this idea.\n");
    out << "Step 5 (reflection on planned suggestions)\n";
    out << "5. The recommendation satisfies parsimony, abstraction level, and non-redundancy.\n";
    out << "My logical recommendation:\n";
    if (already_covered) {
        out << "No new codes needed\n";
    } else {
        out << "Code: " << candidate << "\n";
        out << "Definition: Summary points in this cluster discuss " << candidate << ".\n";
    }
    return out.str();
}

std::string respond_themes(const std::string& prompt) {
    auto codes = parse_numbered_lines(find_between_last(prompt, "<codes>", "</codes>"));

    // Greedy token-overlap grouping: codes sharing two content tokens belong
    // to one theme, named after the group's longest (most specific) label.
    auto tokens_of = [](const std::string& code) {
        std::set<std::string> out;
        for (const auto& tok : tokenize_lower(code)) {
            if (!is_stop_token(tok)) out.insert(tok);
        }
        return out;
    };
    std::vector<std::set<std::string>> token_sets;
    token_sets.reserve(codes.size());
    for (const auto& c : codes) token_sets.push_back(tokens_of(c));

    std::vector<bool> assigned(codes.size(), false);
    nlohmann::json themes = nlohmann::json::array();
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (assigned[i]) continue;
        std::vector<std::size_t> group = {i};
        assigned[i] = true;
        for (std::size_t j = i + 1; j < codes.size(); ++j) {
            if (assigned[j]) continue;
            std::size_t overlap = 0;
            for (const auto& tok : token_sets[j]) {
                if (token_sets[i].count(tok)) ++overlap;
            }
            if (overlap >= 2) {
                group.push_back(j);
                assigned[j] = true;
            }
        }
        std::size_t name_idx = group.front();
        for (std::size_t idx : group) {
            if (codes[idx].size() > codes[name_idx].size()) name_idx = idx;
        }
        nlohmann::json group_codes = nlohmann::json::array();
        for (std::size_t idx : group) group_codes.push_back(codes[idx]);
        themes.push_back(nlohmann::json{
            {"theme_name", title_case(codes[name_idx])},
            {"concept", "Codes related to " + codes[name_idx] + "."},
            {"codes", group_codes},
            {"relationship",
             "These codes describe related aspects of " + codes[name_idx] + "."}});
    }
    nlohmann::json analysis{
        {"initial_observations",
         nlohmann::json::array(
             {"The codes cover " + std::to_string(codes.size()) + " distinct ideas."})},
        {"suggested_themes", themes},
        {"reflection",
         {{"broad_or_narrow_themes", "Theme breadth follows the provided code groups."},
          {"contradictions_or_unexpected_patterns", "None observed."},
          {"potential_subthemes", "None proposed."},
          {"unclassified_codes", nlohmann::json::array()}}}};
    return analysis.dump(2);
}

std::string respond_personas(const std::string& prompt) {
    int want = find_count_after(prompt, "Generate ");
    if (want <= 0) want = 10;
    std::ostringstream out;
    const auto& names = persona_pool_names();
    for (int i = 0; i < want; ++i) {
        std::string name = names[static_cast<std::size_t>(i) % names.size()];
        if (i >= static_cast<int>(names.size())) name += " " + std::to_string(i + 1);
        out << (i + 1) << ". " << name << ": A respondent who thinks about the study topic as a "
            << to_lower_copy(name) << " would, with their own priorities and concerns.\n";
    }
    return out.str();
}

std::string respond_contexts(const std::string& prompt) {
    int want = find_count_after(prompt, "Generate ");
    if (want <= 0) want = 4;
    std::ostringstream out;
    const auto& pool = context_pool();
    for (int i = 0; i < want; ++i) {
        std::string name = pool[static_cast<std::size_t>(i) % pool.size()];
        if (i >= static_cast<int>(pool.size())) name += " " + std::to_string(i + 1);
        out << (i + 1) << ". " << name
            << ": A setting with its own routines and pressures that shape how people respond.\n";
    }
    return out.str();
}

std::string respond_theme_list(const std::string& prompt) {
    int want = find_count_after(prompt, "Generate ");
    if (want <= 0) want = 8;
    std::ostringstream out;
    const auto& pool = theme_pool();
    for (int i = 0; i < want; ++i) {
        std::string name = pool[static_cast<std::size_t>(i) % pool.size()];
        if (i >= static_cast<int>(pool.size())) name += " " + std::to_string(i + 1);
        out << (i + 1) << ". " << name << "\n";
    }
    return out.str();
}

std::string respond_subtheme_list(const std::string& prompt) {
    int want = find_count_after(prompt, "generate ");
    if (want <= 0) want = 8;
    std::string theme = find_between(prompt, "For the theme \"", "\"");
    std::ostringstream out;
    const auto& quals = subtheme_qualifiers();
    for (int i = 0; i < want; ++i) {
        std::string qual = quals[static_cast<std::size_t>(i) % quals.size()];
        if (i >= static_cast<int>(quals.size())) qual += " " + std::to_string(i + 1);
        out << (i + 1) << ". " << theme << " " << qual << "\n";
    }
    return out.str();
}

std::string respond_simulated_document(const std::string& prompt) {
    std::string persona = find_between(prompt, "Adopt this persona: ", ":");
    std::string setting = find_between(prompt, "The setting is: ", ":");
    std::string style = find_between(prompt, "Write in a ", " style");
    std::string sub_theme = find_between(prompt, "the sub-theme \"", "\"");
    std::string length = find_between(prompt, "with a ", " length");
    if (sub_theme.empty()) sub_theme = "the topic at hand";
    if (persona.empty()) persona = "respondent";
    if (setting.empty()) setting = "workplace";
    if (style.empty()) style = "plain";

    int lo = 1, hi = 3;
    std::size_t open = length.find('(');
    if (open != std::string::npos) {
        int a = find_count_after(length, "(");
        std::string rest = length.substr(open);
        std::size_t dash = rest.find('-');
        int b = dash == std::string::npos ? a : find_count_after(rest, "-");
        if (a > 0) lo = a;
        if (b > 0) hi = b;
    }
    if (hi < lo) hi = lo;

    std::string topic = to_lower_copy(sub_theme);
    // The opening sentence carries every criteria field so distinct plan rows
    // never synthesize identical documents.
    std::string opener = "Speaking as a " + to_lower_copy(persona) + " in a " +
                         to_lower_copy(setting) + ", and keeping this " + to_lower_copy(style) +
                         ", I can say " + topic + " has shaped how I feel about all of this.";
    std::vector<std::string> sentence_pool = {
        "I run into " + topic + " almost every week.",
        "I believe " + topic + " deserves far more attention than it gets.",
        "My colleagues and I keep coming back to " + topic + " whenever we talk.",
        "Honestly, " + topic + " affects my day more than anything else does.",
        "If things are going to improve, " + topic + " has to be taken seriously.",
        "I have seen " + topic + " play out differently for different people here.",
        "Nobody prepared us for how much " + topic + " would matter."};

    std::uint64_t h = fnv1a64(prompt);
    int count = lo + static_cast<int>(h % static_cast<std::uint64_t>(hi - lo + 1));
    std::size_t offset = static_cast<std::size_t>((h >> 8) % sentence_pool.size());
    std::ostringstream out;
    out << opener;
    for (int i = 1; i < count; ++i) {
        out << " "
            << sentence_pool[(offset + static_cast<std::size_t>(i)) % sentence_pool.size()];
    }
    return out.str();
}

}  // namespace

ScriptedGateway::ScriptedGateway(int embed_dims) : embed_dims_(embed_dims) {}

std::string ScriptedGateway::chat_impl(const ChatRequest& req) {
    const std::string& p = req.prompt;
    if (p.find("Start your response with \"My summary:\"") != std::string::npos) {
        return respond_summary(p);
    }
    if (p.find("hypothetical codes") != std::string::npos) {
        return respond_starter_codes(p);
    }
    if (p.find("FULL ANALYSIS TEMPLATE:") != std::string::npos) {
        return respond_induction(p);
    }
    if (p.find("\"suggested_themes\"") != std::string::npos) {
        return respond_themes(p);
    }
    if (p.find("personas that might respond") != std::string::npos) {
        return respond_personas(p);
    }
    if (p.find("imaginary contexts") != std::string::npos) {
        return respond_contexts(p);
    }
    if (p.find("A sub-theme is more specific") != std::string::npos) {
        return respond_subtheme_list(p);
    }
    if (p.find("A theme is a recurring pattern") != std::string::npos) {
        return respond_theme_list(p);
    }
    if (p.find("You are simulating data") != std::string::npos) {
        return respond_simulated_document(p);
    }
    throw GatewayError("scripted gateway does not recognize this prompt");
}

std::vector<std::vector<double>> ScriptedGateway::embed_impl(
    const std::vector<std::string>& texts, const std::string&) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(hash_embedding(t, embed_dims_));
    }
    return out;
}

}  // namespace qcoder
