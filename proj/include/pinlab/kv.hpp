#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pinlab::kv {

// Sectioned `key = value` text, one level of nesting:
//
//   # comment
//   [section]
//   key = value
//   list = 1, 2, 3
//
// Keys before the first header belong to the unnamed section "".

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
    std::size_t column = 0; // column of the first value character
};

struct Section {
    std::string name;
    std::size_t line = 0;
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const;
};

struct Document {
    std::vector<Section> sections;

    const Section* find(std::string_view name) const;
};

/// Strict parse: malformed lines, duplicate keys and duplicate sections throw
/// ConfigError carrying line and column.
Document parse(std::string_view text);

double to_double(const Entry& e);
std::int64_t to_int(const Entry& e);
std::uint64_t to_u64(const Entry& e);
bool to_bool(const Entry& e);
std::vector<double> to_double_list(const Entry& e);

/// Shortest text that reads back to the identical double.
std::string format_double(double x);
std::string format_double_list(const std::vector<double>& xs);

} // namespace pinlab::kv
