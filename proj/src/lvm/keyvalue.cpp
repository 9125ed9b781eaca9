#include "logrank/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "logrank/errors.hpp"

namespace logrank {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError("not a finite number: '" + t + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("not an integer: '" + t + "'");
  }
  return v;
}

KeyValueMap KeyValueMap::parse(std::string_view text, std::string source) {
  KeyValueMap out;
  out.source_ = std::move(source);
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(out.source_ + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) {
      throw ParseError(out.source_ + ":" + std::to_string(lineno) + ": empty key");
    }
    if (out.entries_.count(key)) {
      throw ParseError(out.source_ + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                       "' (first on line " + std::to_string(out.entries_[key].line) + ")");
    }
    out.entries_[key] = Entry{std::move(value), lineno};
  }
  return out;
}

KeyValueMap KeyValueMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void KeyValueMap::fail(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
  throw ParseError(where + ": key '" + key + "': " + message);
}

void KeyValueMap::require_known(const std::function<bool(const std::string&)>& is_known) const {
  for (const auto& [key, entry] : entries_) {
    if (!is_known(key)) fail(key, "unknown key");
  }
}

const std::string& KeyValueMap::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing required key");
  return it->second.value;
}

std::optional<std::string> KeyValueMap::find_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

double KeyValueMap::get_double(const std::string& key) const {
  try {
    return parse_double(get_string(key));
  } catch (const ParseError& e) {
    if (!contains(key)) throw;
    fail(key, e.what());
  }
}

std::optional<double> KeyValueMap::find_double(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_double(key);
}

std::int64_t KeyValueMap::get_int(const std::string& key) const {
  try {
    return parse_int(get_string(key));
  } catch (const ParseError& e) {
    if (!contains(key)) throw;
    fail(key, e.what());
  }
}

std::optional<std::int64_t> KeyValueMap::find_int(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_int(key);
}

std::optional<std::uint64_t> KeyValueMap::find_u64(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  const std::string t = trim(get_string(key));
  std::uint64_t v = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) fail(key, "not an unsigned 64-bit integer");
  return v;
}

std::vector<double> KeyValueMap::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get_string(key), ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const ParseError& e) {
      fail(key, e.what());
    }
  }
  return out;
}

std::vector<std::int64_t> KeyValueMap::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split(get_string(key), ',')) {
    try {
      out.push_back(parse_int(item));
    } catch (const ParseError& e) {
      fail(key, e.what());
    }
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

KeyValueWriter& KeyValueWriter::add(std::string key, std::string value) {
  lines_.emplace_back(std::move(key), std::move(value));
  return *this;
}

KeyValueWriter& KeyValueWriter::add(std::string key, double value) {
  return add(std::move(key), format_double(value));
}

KeyValueWriter& KeyValueWriter::add(std::string key, std::uint64_t value) {
  return add(std::move(key), std::to_string(value));
}

KeyValueWriter& KeyValueWriter::add(std::string key, std::int64_t value) {
  return add(std::move(key), std::to_string(value));
}

KeyValueWriter& KeyValueWriter::add(std::string key, bool value) {
  return add(std::move(key), std::string(value ? "true" : "false"));
}

std::string KeyValueWriter::str() const {
  std::string out;
  for (const auto& [k, v] : lines_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << str();
}

}  // namespace logrank
