#include "subtk/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace subtk {

namespace {
constexpr char kVecMagic[8] = {'S', 'U', 'B', 'T', 'K', 'V', '1', '\0'};
}

void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& a,
                         bool symmetric) {
  std::ostringstream out;
  out << "%%MatrixMarket matrix coordinate real "
      << (symmetric ? "symmetric" : "general") << "\n";
  long nnz = 0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      if (!symmetric || it.row() >= it.col()) ++nnz;
  out << a.rows() << " " << a.cols() << " " << nnz << "\n";
  char buf[64];
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;
      std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n", static_cast<long>(it.row() + 1),
                    static_cast<long>(it.col() + 1), it.value());
      out << buf;
    }
  atomic_write_text(path, out.str());
}

Eigen::SparseMatrix<double> read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error(path + ": missing MatrixMarket banner");
  const bool symmetric = line.find("symmetric") != std::string::npos;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%') break;
  long rows, cols, nnz;
  {
    std::istringstream hdr(line);
    if (!(hdr >> rows >> cols >> nnz)) throw std::runtime_error(path + ": bad size line");
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    long i, j;
    double v;
    if (!(in >> i >> j >> v)) throw std::runtime_error(path + ": truncated entries");
    trips.emplace_back(i - 1, j - 1, v);
    if (symmetric && i != j) trips.emplace_back(j - 1, i - 1, v);
  }
  Eigen::SparseMatrix<double> a(rows, cols);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

void write_node_vector(const std::string& path, const Eigen::VectorXd& v) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out.write(kVecMagic, 8);
    std::uint32_t dtype = 1, ndim = 1, dim0 = static_cast<std::uint32_t>(v.size());
    out.write(reinterpret_cast<const char*>(&dtype), 4);
    out.write(reinterpret_cast<const char*>(&ndim), 4);
    out.write(reinterpret_cast<const char*>(&dim0), 4);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(8 * v.size()));
  }
  std::filesystem::rename(tmp, path);
}

Eigen::VectorXd read_node_vector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kVecMagic, 8) != 0)
    throw std::runtime_error(path + ": not a node-vector file");
  std::uint32_t dtype = 0, ndim = 0;
  in.read(reinterpret_cast<char*>(&dtype), 4);
  in.read(reinterpret_cast<char*>(&ndim), 4);
  if (dtype != 1 || ndim != 1) throw std::runtime_error(path + ": unsupported layout");
  std::uint32_t dim0 = 0;
  in.read(reinterpret_cast<char*>(&dim0), 4);
  Eigen::VectorXd v(dim0);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(8) * dim0);
  if (!in) throw std::runtime_error(path + ": truncated payload");
  return v;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace subtk
