#pragma once

#include "remest/numerics.hpp"

#include <ostream>
#include <string>
#include <vector>

/// Flat text serialization: matrices as "rows cols" plus row lines, and a
/// small CSV writer. Numbers carry 17 significant digits so every file
/// round-trips bit-exactly.
namespace remest {

/// Shortest-exact formatting for doubles (17 significant digits).
std::string format_double(double v);

void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

  /// Flush and close; throws on I/O failure.
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace remest
