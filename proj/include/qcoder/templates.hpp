#pragma once

#include <map>
#include <set>
#include <string>

namespace qcoder {

// Prompt templates are data files, not code constants, so prompts can be
// varied without rebuilding. Brace tokens {name} are substituted; {{ and }}
// are literal braces (the theme prompt embeds a JSON example block).
struct Template {
    std::string name;
    std::string body;
    std::set<std::string> placeholders;
};

// Pure textual substitution. Every byte outside the tokens is preserved.
// Throws TemplateError when the map is missing a declared placeholder or the
// body references an undeclared one.
std::string render(const Template& tmpl, const std::map<std::string, std::string>& substitutions);

// Scans a body for {name} tokens (ignoring {{/}} escapes).
std::set<std::string> scan_placeholders(const std::string& body);

class TemplateSet {
  public:
    // Loads every template listed in <dir>/manifest.json and verifies file
    // hashes against the manifest, guarding accidental edits.
    static TemplateSet load(const std::string& dir);

    const Template& get(const std::string& name) const;

  private:
    std::map<std::string, Template> templates_;
};

// Default template directory: $QCODER_TEMPLATES if set, else "templates"
// relative to the current directory.
std::string default_template_dir();

}  // namespace qcoder
