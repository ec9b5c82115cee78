#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace stratkit {

// Strict INI reader shared by the three config file formats.
//
// Grammar: `[section]` headers, `key = value` lines, blank lines, and
// comments starting with ';' or '#'. Keys and section names are
// case-sensitive. Duplicate keys within a section and duplicate section
// names are errors. Section and key order is preserved.
struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws Error(missing_key)
  std::string get_or(const std::string& key, const std::string& fallback) const;
};

struct IniFile {
  std::vector<IniSection> sections;

  bool has_section(const std::string& name) const;
  const IniSection& section(const std::string& name) const;  // throws Error(missing_key)
};

IniFile parse_ini(const std::string& text);

std::string serialize_ini(const IniFile& file);

}  // namespace stratkit
