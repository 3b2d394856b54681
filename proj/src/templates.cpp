#include "qcoder/templates.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcoder/errors.hpp"
#include "qcoder/hash.hpp"
#include "qcoder/jsonl.hpp"

namespace qcoder {

namespace {

bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

std::set<std::string> scan_placeholders(const std::string& body) {
    std::set<std::string> found;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        if (i + 1 < body.size() && body[i + 1] == '{') {
            ++i;  // escaped literal brace
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && is_token_char(body[j])) ++j;
        if (j > i + 1 && j < body.size() && body[j] == '}') {
            found.insert(body.substr(i + 1, j - i - 1));
            i = j;
        }
    }
    return found;
}

std::string render(const Template& tmpl, const std::map<std::string, std::string>& substitutions) {
    std::vector<std::string> missing;
    for (const auto& name : tmpl.placeholders) {
        if (!substitutions.count(name)) missing.push_back(name);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "template \"" << tmpl.name << "\" missing substitutions:";
        for (const auto& m : missing) msg << " {" << m << "}";
        throw TemplateError(msg.str());
    }

    std::string out;
    out.reserve(tmpl.body.size());
    const std::string& body = tmpl.body;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
            out.push_back('{');
            ++i;
            continue;
        }
        if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
            out.push_back('}');
            ++i;
            continue;
        }
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_token_char(body[j])) ++j;
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                std::string name = body.substr(i + 1, j - i - 1);
                if (!tmpl.placeholders.count(name)) {
                    throw TemplateError("template \"" + tmpl.name +
                                        "\" contains undeclared placeholder {" + name + "}");
                }
                out += substitutions.at(name);
                i = j;
                continue;
            }
        }
        out.push_back(c);
    }
    return out;
}

TemplateSet TemplateSet::load(const std::string& dir) {
    std::filesystem::path base(dir);
    std::filesystem::path manifest_path = base / "manifest.json";
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(manifest_path.string()));
    } catch (const nlohmann::json::exception& e) {
        throw TemplateError("template manifest parse failure: " + std::string(e.what()));
    }

    TemplateSet set;
    for (const auto& [name, meta] : manifest.at("templates").items()) {
        std::string file = meta.at("file").get<std::string>();
        std::string body = read_text_file((base / file).string());
        std::string expected_hash = meta.at("sha256").get<std::string>();
        std::string actual_hash = sha256_hex(body);
        if (actual_hash != expected_hash) {
            throw TemplateError("template \"" + name + "\" (" + file +
                                ") does not match its manifest hash; expected " + expected_hash +
                                ", got " + actual_hash);
        }
        Template tmpl;
        tmpl.name = name;
        tmpl.body = body;
        for (const auto& p : meta.at("placeholders")) {
            tmpl.placeholders.insert(p.get<std::string>());
        }
        auto in_body = scan_placeholders(body);
        for (const auto& token : in_body) {
            if (!tmpl.placeholders.count(token)) {
                throw TemplateError("template \"" + name + "\" body token {" + token +
                                    "} is not declared in the manifest");
            }
        }
        set.templates_[name] = std::move(tmpl);
    }
    return set;
}

const Template& TemplateSet::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw TemplateError("unknown template: " + name);
    }
    return it->second;
}

std::string default_template_dir() {
    if (const char* env = std::getenv("QCODER_TEMPLATES")) {
        return env;
    }
    return "templates";
}

}  // namespace qcoder
