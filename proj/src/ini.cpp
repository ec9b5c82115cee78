#include "stratkit/ini.hpp"

#include <set>
#include <sstream>

#include "stratkit/error.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

bool IniSection::has(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

const std::string& IniSection::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw Error(Errc::missing_key, "key '" + key + "' in section [" + name + "]");
}

std::string IniSection::get_or(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return fallback;
}

bool IniFile::has_section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return true;
  }
  return false;
}

const IniSection& IniFile::section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return s;
  }
  throw Error(Errc::missing_key, "section [" + name + "]");
}

IniFile parse_ini(const std::string& text) {
  IniFile file;
  IniSection* current = nullptr;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;  // scoped to the current section

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": unterminated section header");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) {
        throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": empty section name");
      }
      if (!seen_sections.insert(name).second) {
        throw Error(Errc::duplicate_key, "section [" + name + "] declared twice");
      }
      file.sections.push_back(IniSection{name, {}});
      current = &file.sections.back();
      seen_keys.clear();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    if (current == nullptr) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": entry before any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": empty key");
    }
    if (!seen_keys.insert(key).second) {
      throw Error(Errc::duplicate_key, "key '" + key + "' repeated in section [" + current->name + "]");
    }
    current->entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return file;
}

std::string serialize_ini(const IniFile& file) {
  std::string out;
  for (const auto& sec : file.sections) {
    out += "[" + sec.name + "]\n";
    for (const auto& [k, v] : sec.entries) {
      out += k + " = " + v + "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace stratkit
