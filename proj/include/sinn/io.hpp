#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sinn {

std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: parent directories are created,
/// the file is replaced. Throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

/// Minimal CSV builder: fields are written verbatim, comma separated.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  std::size_t width_;
};

}  // namespace sinn
