#include "remest/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace remest {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_matrix: cannot open " + path);
  }
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("save_matrix: write failed for " + path);
  }
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_matrix: cannot open " + path);
  }
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) {
    throw std::runtime_error("load_matrix: bad header in " + path);
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw std::runtime_error("load_matrix: truncated data in " + path);
      }
    }
  }
  return m;
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::string path;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl{std::ofstream(path), path}) {
  if (!impl_->out) {
    std::string p = impl_->path;
    delete impl_;
    impl_ = nullptr;
    throw std::runtime_error("CsvWriter: cannot open " + p);
  }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void CsvWriter::close() {
  impl_->out.flush();
  if (!impl_->out) {
    throw std::runtime_error("CsvWriter: write failed for " + impl_->path);
  }
  impl_->out.close();
}

}  // namespace remest
