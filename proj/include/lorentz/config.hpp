// SPDX-License-Identifier: Apache-2.0
// Scenario files, JSON-lines output and atomic file writes.
#pragma once

#include "lorentz/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace lorentz {

/// One `key = value` entry with the position of its value, for errors
/// raised after parsing.
struct ConfigValue {
  std::string text;
  int line = 0;
  int column = 0;   ///< column of the value (1-based)
  int key_column = 0;
};

/// Sections of key/value pairs, in file order.
class Config {
 public:
  using Section = std::map<std::string, ConfigValue>;

  bool has(const std::string& sec) const { return sections_.count(sec) != 0; }
  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    return it != sections_.end() && it->second.count(key) != 0;
  }
  const Section& section(const std::string& sec) const {
    static const Section empty;
    auto it = sections_.find(sec);
    return it == sections_.end() ? empty : it->second;
  }
  const ConfigValue& at(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    if (it == sections_.end() || !it->second.count(key))
      throw ParseError("missing key '" + key + "' in section [" + sec + "]", section_line(sec), 1);
    return it->second.at(key);
  }
  int section_line(const std::string& sec) const {
    auto it = lines_.find(sec);
    return it == lines_.end() ? 1 : it->second;
  }
  std::vector<std::string> section_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : sections_) out.push_back(k);
    return out;
  }

  void set(const std::string& sec, const std::string& key, ConfigValue v) { sections_[sec][key] = std::move(v); }
  void open(const std::string& sec, int line) {
    sections_[sec];
    lines_.emplace(sec, line);
  }

 private:
  std::map<std::string, Section> sections_;
  std::map<std::string, int> lines_;
};

namespace detail {
inline bool key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'; }
}  // namespace detail

/// INI-style text: `[section]` headers, `key = value` lines, `#` or `;`
/// comment lines, trailing ` # comments`. Errors carry 1-based line and
/// column.
inline Config parse_config(std::istream& is) {
  Config cfg;
  std::string line, current;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos || line[i] == '#' || line[i] == ';') continue;
    const int col = static_cast<int>(i) + 1;
    if (line[i] == '[') {
      const std::size_t close = line.find(']', i);
      if (close == std::string::npos) throw ParseError("unterminated section header", ln, static_cast<int>(line.size()) + 1);
      const std::string name = line.substr(i + 1, close - i - 1);
      if (name.empty()) throw ParseError("empty section name", ln, col + 1);
      for (std::size_t k = 0; k < name.size(); ++k)
        if (!detail::key_char(name[k])) throw ParseError("bad character in section name", ln, col + 1 + static_cast<int>(k));
      const std::size_t rest = line.find_first_not_of(" \t", close + 1);
      if (rest != std::string::npos && line[rest] != '#' && line[rest] != ';')
        throw ParseError("unexpected text after section header", ln, static_cast<int>(rest) + 1);
      if (cfg.has(name)) throw ParseError("duplicate section [" + name + "]", ln, col);
      cfg.open(name, ln);
      current = name;
      continue;
    }
    std::size_t k = i;
    while (k < line.size() && detail::key_char(line[k])) ++k;
    if (k == i) throw ParseError("expected a key", ln, col);
    const std::string key = line.substr(i, k - i);
    const std::size_t eq = line.find_first_not_of(" \t", k);
    if (eq == std::string::npos || line[eq] != '=')
      throw ParseError("expected '=' after key '" + key + "'", ln, static_cast<int>(eq == std::string::npos ? line.size() : eq) + 1);
    if (current.empty()) throw ParseError("key '" + key + "' outside any section", ln, col);
    if (cfg.has(current, key)) throw ParseError("duplicate key '" + key + "'", ln, col);
    // A '#' after whitespace starts a trailing comment. ';' does not, since
    // it separates points in lists.
    for (std::size_t h = line.find('#', eq + 1); h != std::string::npos; h = line.find('#', h + 1))
      if (line[h - 1] == ' ' || line[h - 1] == '\t') {
        line.erase(h);
        break;
      }
    std::size_t v = line.find_first_not_of(" \t", eq + 1);
    std::string value;
    if (v != std::string::npos) {
      std::size_t end = line.find_last_not_of(" \t");
      value = line.substr(v, end - v + 1);
    } else {
      v = line.size();
    }
    cfg.set(current, key, ConfigValue{value, ln, static_cast<int>(v) + 1, col});
  }
  return cfg;
}

inline Config parse_config_text(const std::string& s) {
  std::istringstream is(s);
  return parse_config(is);
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return parse_config(is);
}

// Typed access; conversion failures point at the value.

inline double to_double(const ConfigValue& v) {
  const char* s = v.text.c_str();
  char* end = nullptr;
  const double x = std::strtod(s, &end);
  if (end == s || *end != '\0' || !std::isfinite(x)) throw ParseError("expected a number, got '" + v.text + "'", v.line, v.column);
  return x;
}

inline long to_long(const ConfigValue& v) {
  const char* s = v.text.c_str();
  char* end = nullptr;
  const long x = std::strtol(s, &end, 10);
  if (end == s || *end != '\0') throw ParseError("expected an integer, got '" + v.text + "'", v.line, v.column);
  return x;
}

/// Comma-separated numbers, e.g. `0, 0.5`.
inline Vec to_vec(const ConfigValue& v) {
  std::vector<double> xs;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = v.text.find(',', start);
    std::string tok = v.text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t a = tok.find_first_not_of(" \t"), b = tok.find_last_not_of(" \t");
    tok = a == std::string::npos ? "" : tok.substr(a, b - a + 1);
    const ConfigValue part{tok, v.line, v.column + static_cast<int>(start + (a == std::string::npos ? 0 : a)), v.key_column};
    xs.push_back(to_double(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (xs.size() > static_cast<std::size_t>(kMaxDim)) throw ParseError("too many coordinates", v.line, v.column);
  Vec out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) out[static_cast<Eigen::Index>(i)] = xs[i];
  return out;
}

/// Semicolon-separated points, e.g. `0,0; 1,0.5`.
inline std::vector<Vec> to_points(const ConfigValue& v) {
  std::vector<Vec> out;
  std::size_t start = 0;
  while (start <= v.text.size()) {
    const std::size_t semi = v.text.find(';', start);
    const std::string tok = v.text.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
    out.push_back(to_vec(ConfigValue{tok, v.line, v.column + static_cast<int>(start), v.key_column}));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON with every floating-point number printed to 17 significant digits.

using Json = nlohmann::ordered_json;

inline void dump17(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump();
        out += ':';
        dump17(out, it.value());
      }
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump17(out, j[i]);
      }
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      // JSON has no infinities; they travel as strings.
      if (!std::isfinite(x)) out += Json(x > 0 ? "inf" : (x < 0 ? "-inf" : "nan")).dump();
      else out += fmt_double(x);
      return;
    }
    default: out += j.dump();
  }
}

inline std::string dump17(const Json& j) {
  std::string s;
  dump17(s, j);
  return s;
}

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// ---------------------------------------------------------------------------
// Output files.

/// Output directory: explicit choice, else $LORENTZ_OUT_DIR, else ".".
inline std::filesystem::path output_dir(const std::string& explicit_dir = "") {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("LORENTZ_OUT_DIR"); env && *env) return env;
  return ".";
}

/// Writes the file through a temporary sibling and renames it into place,
/// so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << contents;
    os.flush();
    if (!os) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

}  // namespace lorentz
