#pragma once

#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace subtk {

/// Matrix Market coordinate format, `symmetric` stores the lower triangle.
void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& a,
                         bool symmetric = true);
Eigen::SparseMatrix<double> read_matrix_market(const std::string& path);

/// Flat binary node-vector files: magic "SUBTKV1\0", u32 dtype tag
/// (1 = float64), u32 ndim, u32 dims[ndim], then row-major little-endian
/// payload.
void write_node_vector(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_node_vector(const std::string& path);

/// Writes to a temp file in the same directory, then renames into place.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace subtk
