// Matrix Market exchange format I/O.
//
// Coordinate (sparse) and array (dense) variants, real general or symmetric.
// Indices are 1-based on disk and 0-based in memory. Symmetric files store
// the lower triangle and are mirrored on read.
#pragma once

#include <string>

#include "core/linops.hpp"

namespace nucsel::mmio {

// Reads either an array file or a coordinate file (densified).
Mat read_dense(const std::string& path);

SparseMat read_sparse(const std::string& path);

// A dense vector stored as an n-by-1 array file.
Vec read_vector(const std::string& path);

void write_dense(const std::string& path, const Mat& m, bool symmetric = false);
void write_sparse(const std::string& path, const SpMat& m, bool symmetric = false);
void write_vector(const std::string& path, const Vec& v);

}  // namespace nucsel::mmio
