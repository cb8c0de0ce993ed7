#include "curv/matrix_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <vector>

#include "json.hpp"

namespace curv {

static_assert(std::endian::native == std::endian::little,
              "matrix file payload is little-endian; big-endian hosts are unsupported");
static_assert(sizeof(double) == 8 && sizeof(float) == 4);

void write_matrix(const std::string& path, const DenseMatrix& m, MatrixDtype dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    char header[128];
    std::snprintf(header, sizeof(header), "{\"rows\":%zu,\"cols\":%zu,\"dtype\":\"%s\"}\n",
                  m.rows(), m.cols(), dtype == MatrixDtype::f64 ? "f64" : "f32");
    out << header;
    const std::size_t count = m.rows() * m.cols();
    if (dtype == MatrixDtype::f64) {
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        std::vector<float> narrow(count);
        for (std::size_t i = 0; i < count; ++i) narrow[i] = static_cast<float>(m.data()[i]);
        out.write(reinterpret_cast<const char*>(narrow.data()),
                  static_cast<std::streamsize>(count * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

DenseMatrix read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("missing matrix header: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad matrix header in " + path + ": " + e.what());
    }
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("dtype"))
        throw IoError("matrix header missing rows/cols/dtype: " + path);
    const std::size_t rows = j["rows"].get<std::size_t>();
    const std::size_t cols = j["cols"].get<std::size_t>();
    const std::string dtype = j["dtype"].get<std::string>();
    const std::size_t count = rows * cols;

    DenseMatrix m(rows, cols);
    if (dtype == "f64") {
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
    } else if (dtype == "f32") {
        std::vector<float> narrow(count);
        in.read(reinterpret_cast<char*>(narrow.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        for (std::size_t i = 0; i < count; ++i) m.data()[i] = narrow[i];
    } else {
        throw IoError("unsupported dtype '" + dtype + "' in " + path);
    }
    if (static_cast<std::size_t>(in.gcount()) !=
        count * (dtype == "f64" ? sizeof(double) : sizeof(float)))
        throw IoError("truncated matrix payload: " + path);
    for (std::size_t i = 0; i < count; ++i)
        if (!std::isfinite(m.data()[i]))
            throw IoError("non-finite entry in matrix file: " + path);
    return m;
}

void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw IoError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t jcol = 0; jcol < m.cols(); ++jcol)
            std::fprintf(f, jcol == 0 ? "%.17g" : ",%.17g", m(i, jcol));
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

void write_vector(const std::string& path, const DenseVector& v, MatrixDtype dtype) {
    DenseMatrix m(v.len(), 1, std::vector<double>(v.data(), v.data() + v.len()));
    write_matrix(path, m, dtype);
}

DenseVector read_vector(const std::string& path) {
    DenseMatrix m = read_matrix(path);
    if (m.cols() != 1)
        throw IoError("expected an n x 1 matrix in " + path + ", got " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    return DenseVector(std::vector<double>(m.data(), m.data() + m.rows()));
}

}  // namespace curv
