#ifndef KGFLOW_IO_HPP
#define KGFLOW_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kgflow {

/// Shortest round-trippable decimal form of v (printf %.17g semantics).
std::string format_double(double v);

/// Comma-separated table accumulated in memory; all numeric cells use
/// format_double so output is reproducible bit for bit.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header);
    void row(std::span<const double> values);
    void mixed_row(std::span<const std::string> cells);
    std::size_t rows() const { return rows_; }
    const std::string& str() const { return text_; }

  private:
    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string text_;
};

/// Writes via a temporary sibling file and rename, so readers never observe
/// a half-written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace kgflow

#endif
