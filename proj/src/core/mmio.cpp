#include "core/mmio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace nucsel::mmio {

namespace {

struct Header {
  bool coordinate = false;
  bool symmetric = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Header parse_header(std::istream& in, const std::string& path) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "mmio: empty file: " + path);
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  require(banner == "%%MatrixMarket", "mmio: missing MatrixMarket banner in " + path);
  require(lower(object) == "matrix", "mmio: unsupported object '" + object + "' in " + path);
  Header h;
  const std::string fmt = lower(format);
  if (fmt == "coordinate")
    h.coordinate = true;
  else
    require(fmt == "array", "mmio: unsupported format '" + format + "' in " + path);
  const std::string fld = lower(field);
  require(fld == "real" || fld == "integer",
          "mmio: unsupported field '" + field + "' in " + path);
  const std::string sym = lower(symmetry);
  if (sym == "symmetric")
    h.symmetric = true;
  else
    require(sym == "general", "mmio: unsupported symmetry '" + symmetry + "' in " + path);
  return h;
}

// Positions the stream on the sizes line (skipping % comments and blanks).
std::string next_data_line(std::istream& in, const std::string& path) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    return line;
  }
  fail("mmio: unexpected end of file in " + path);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "mmio: cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "mmio: cannot write " + path);
  out.precision(17);
  return out;
}

}  // namespace

Mat read_dense(const std::string& path) {
  std::ifstream in = open_in(path);
  const Header h = parse_header(in, path);
  std::istringstream sizes(next_data_line(in, path));
  Index rows = 0, cols = 0;
  long long nnz = 0;
  if (h.coordinate) {
    sizes >> rows >> cols >> nnz;
    require(rows > 0 && cols > 0 && nnz >= 0, "mmio: bad sizes line in " + path);
    Mat m = Mat::Zero(rows, cols);
    for (long long e = 0; e < nnz; ++e) {
      std::istringstream ls(next_data_line(in, path));
      Index i, j;
      double v;
      ls >> i >> j >> v;
      require(i >= 1 && i <= rows && j >= 1 && j <= cols, "mmio: index out of range in " + path);
      m(i - 1, j - 1) += v;
      if (h.symmetric && i != j) m(j - 1, i - 1) += v;
    }
    return m;
  }
  sizes >> rows >> cols;
  require(rows > 0 && cols > 0, "mmio: bad sizes line in " + path);
  Mat m(rows, cols);
  if (h.symmetric) {
    require(rows == cols, "mmio: symmetric array must be square in " + path);
    for (Index j = 0; j < cols; ++j)
      for (Index i = j; i < rows; ++i) {
        std::istringstream ls(next_data_line(in, path));
        double v;
        ls >> v;
        m(i, j) = v;
        m(j, i) = v;
      }
  } else {
    // Column-major entry order per the format definition.
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) {
        std::istringstream ls(next_data_line(in, path));
        double v;
        ls >> v;
        m(i, j) = v;
      }
  }
  return m;
}

SparseMat read_sparse(const std::string& path) {
  std::ifstream in = open_in(path);
  const Header h = parse_header(in, path);
  require(h.coordinate, "mmio: expected coordinate format in " + path);
  std::istringstream sizes(next_data_line(in, path));
  Index rows = 0, cols = 0;
  long long nnz = 0;
  sizes >> rows >> cols >> nnz;
  require(rows > 0 && cols > 0 && nnz >= 0, "mmio: bad sizes line in " + path);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(h.symmetric ? 2 * nnz : nnz));
  for (long long e = 0; e < nnz; ++e) {
    std::istringstream ls(next_data_line(in, path));
    Index i, j;
    double v;
    ls >> i >> j >> v;
    require(i >= 1 && i <= rows && j >= 1 && j <= cols, "mmio: index out of range in " + path);
    trip.emplace_back(i - 1, j - 1, v);
    if (h.symmetric && i != j) trip.emplace_back(j - 1, i - 1, v);
  }
  return SparseMat(rows, cols, trip);
}

Vec read_vector(const std::string& path) {
  Mat m = read_dense(path);
  require(m.cols() == 1, "mmio: expected an n-by-1 array in " + path);
  return m.col(0);
}

void write_dense(const std::string& path, const Mat& m, bool symmetric) {
  std::ofstream out = open_out(path);
  out << "%%MatrixMarket matrix array real " << (symmetric ? "symmetric" : "general") << "\n";
  if (symmetric) {
    require(m.rows() == m.cols(), "mmio: symmetric write needs a square matrix");
    out << m.rows() << " " << m.cols() << "\n";
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = j; i < m.rows(); ++i) out << m(i, j) << "\n";
  } else {
    out << m.rows() << " " << m.cols() << "\n";
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) out << m(i, j) << "\n";
  }
  require(static_cast<bool>(out), "mmio: write failed for " + path);
}

void write_sparse(const std::string& path, const SpMat& m, bool symmetric) {
  std::ofstream out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general")
      << "\n";
  long long count = 0;
  for (Index j = 0; j < m.outerSize(); ++j)
    for (SpMat::InnerIterator it(m, j); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;
      ++count;
    }
  out << m.rows() << " " << m.cols() << " " << count << "\n";
  for (Index j = 0; j < m.outerSize(); ++j)
    for (SpMat::InnerIterator it(m, j); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;
      out << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
    }
  require(static_cast<bool>(out), "mmio: write failed for " + path);
}

void write_vector(const std::string& path, const Vec& v) {
  write_dense(path, v, /*symmetric=*/false);
}

}  // namespace nucsel::mmio
