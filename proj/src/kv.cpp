#include "pinlab/kv.hpp"

#include "pinlab/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pinlab::kv {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

bool valid_identifier(std::string_view s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    return true;
}

[[noreturn]] void fail(const std::string& msg, std::size_t line, std::size_t col,
                       const std::string& field = {})
{
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          msg,
                      line, col, field);
}

double parse_number(std::string_view s, const Entry& e)
{
    s = trim(s);
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last)
        fail("field '" + e.key + "' expects a number, got '" + std::string(s) + "'", e.line,
             e.column, e.key);
    if (!std::isfinite(v))
        fail("field '" + e.key + "' must be finite", e.line, e.column, e.key);
    return v;
}

} // namespace

const Entry* Section::find(std::string_view key) const
{
    for (const auto& e : entries)
        if (e.key == key)
            return &e;
    return nullptr;
}

const Section* Document::find(std::string_view name) const
{
    for (const auto& s : sections)
        if (s.name == name)
            return &s;
    return nullptr;
}

Document parse(std::string_view text)
{
    Document doc;
    doc.sections.push_back(Section{"", 0, {}});
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        ++line_no;
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';')
            continue;
        const std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());

        if (line.front() == '[') {
            if (line.back() != ']')
                fail("unterminated section header", line_no, indent + line.size());
            const auto name = trim(line.substr(1, line.size() - 2));
            if (!valid_identifier(name))
                fail("invalid section name '" + std::string(name) + "'", line_no, indent + 2);
            if (doc.find(name))
                fail("duplicate section [" + std::string(name) + "]", line_no, indent + 1);
            doc.sections.push_back(Section{std::string(name), line_no, {}});
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail("expected 'key = value'", line_no, indent + 1);
        const auto key = trim(line.substr(0, eq));
        if (!valid_identifier(key))
            fail("invalid key '" + std::string(key) + "'", line_no, indent + 1);
        std::string_view value = line.substr(eq + 1);
        std::size_t value_col = indent + eq + 2;
        while (!value.empty() && is_space(value.front())) {
            value.remove_prefix(1);
            ++value_col;
        }
        value = trim(value);
        if (value.empty())
            fail("missing value for '" + std::string(key) + "'", line_no, value_col,
                 std::string(key));

        auto& section = doc.sections.back();
        if (section.find(key))
            fail("duplicate key '" + std::string(key) + "'", line_no, indent + 1, std::string(key));
        section.entries.push_back(Entry{std::string(key), std::string(value), line_no, value_col});
    }
    if (doc.sections.front().entries.empty())
        doc.sections.erase(doc.sections.begin());
    return doc;
}

double to_double(const Entry& e) { return parse_number(e.value, e); }

std::int64_t to_int(const Entry& e)
{
    std::int64_t v = 0;
    const auto s = trim(e.value);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail("field '" + e.key + "' expects an integer, got '" + e.value + "'", e.line, e.column,
             e.key);
    return v;
}

std::uint64_t to_u64(const Entry& e)
{
    std::uint64_t v = 0;
    const auto s = trim(e.value);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail("field '" + e.key + "' expects an unsigned 64-bit integer, got '" + e.value + "'",
             e.line, e.column, e.key);
    return v;
}

bool to_bool(const Entry& e)
{
    if (e.value == "true")
        return true;
    if (e.value == "false")
        return false;
    fail("field '" + e.key + "' expects true or false", e.line, e.column, e.key);
}

std::vector<double> to_double_list(const Entry& e)
{
    std::vector<double> out;
    std::string_view rest = e.value;
    while (true) {
        const auto comma = rest.find(',');
        out.push_back(parse_number(rest.substr(0, comma), e));
        if (comma == std::string_view::npos)
            break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

std::string format_double(double x)
{
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x)
            break;
    }
    return buf;
}

std::string format_double_list(const std::vector<double>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            out += ", ";
        out += format_double(xs[i]);
    }
    return out;
}

} // namespace pinlab::kv
