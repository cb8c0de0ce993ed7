#pragma once

#include <string>

#include "curv/linalg.hpp"

namespace curv {

// Matrix file format shared across the toolkit: one JSON header line
//   {"rows":R,"cols":C,"dtype":"f64"}
// followed by the raw little-endian row-major payload. dtype may be
// "f32" when a writer downcast the values on export.
enum class MatrixDtype { f64, f32 };

void write_matrix(const std::string& path, const DenseMatrix& m,
                  MatrixDtype dtype = MatrixDtype::f64);
DenseMatrix read_matrix(const std::string& path);

// CSV export, one row per line, 17 significant digits.
void write_matrix_csv(const std::string& path, const DenseMatrix& m);

// Convenience wrappers storing a vector as an n x 1 matrix.
void write_vector(const std::string& path, const DenseVector& v,
                  MatrixDtype dtype = MatrixDtype::f64);
DenseVector read_vector(const std::string& path);

}  // namespace curv
