#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logrank {

// Flat "key = value" text format shared by spec files, scan configs and
// metadata sidecars. Blank lines and lines starting with '#' are ignored;
// duplicate keys are rejected. Values keep their internal whitespace.
class KeyValueMap {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueMap parse(std::string_view text, std::string source = "<string>");
  static KeyValueMap load(const std::filesystem::path& path);

  const std::string& source() const noexcept { return source_; }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  // Rejects any key for which is_known returns false.
  void require_known(const std::function<bool(const std::string&)>& is_known) const;

  const std::string& get_string(const std::string& key) const;
  std::optional<std::string> find_string(const std::string& key) const;

  double get_double(const std::string& key) const;
  std::optional<double> find_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::optional<std::int64_t> find_int(const std::string& key) const;
  std::optional<std::uint64_t> find_u64(const std::string& key) const;

  // Comma-separated lists.
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;

  // Throws ParseError pointing at key's line.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

// Writes "key = value" lines in insertion order.
class KeyValueWriter {
 public:
  KeyValueWriter& add(std::string key, std::string value);
  KeyValueWriter& add(std::string key, double value);
  KeyValueWriter& add(std::string key, std::uint64_t value);
  KeyValueWriter& add(std::string key, std::int64_t value);
  KeyValueWriter& add(std::string key, int value) { return add(std::move(key), static_cast<std::int64_t>(value)); }
  KeyValueWriter& add(std::string key, bool value);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

std::string format_double(double v);

}  // namespace logrank
