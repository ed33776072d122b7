#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace varnews::csv {

/// One parsed record and the 1-based line it started on.
struct Record {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// RFC-4180 reader: quoted fields may contain commas, doubled quotes and newlines.
/// Blank lines are skipped. Throws ValidationError on an unterminated quote.
[[nodiscard]] std::vector<Record> parse(std::string_view text, const std::string& source_name);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Quotes a field when it holds a comma, quote, CR or LF.
[[nodiscard]] std::string escape(std::string_view field);

/// Round-trip decimal form of a double ("%.17g"); reruns produce identical text.
[[nodiscard]] std::string format_double(double v);

/// Parses a double, rejecting trailing garbage.
[[nodiscard]] bool parse_double(std::string_view text, double& out);
[[nodiscard]] bool parse_int(std::string_view text, std::int64_t& out);

class Writer {
public:
    void row(const std::vector<std::string>& fields);
    [[nodiscard]] const std::string& str() const noexcept { return buffer_; }

private:
    std::string buffer_;
};

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace varnews::csv
