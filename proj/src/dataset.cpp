#include "curv/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "curv/rng.hpp"

namespace curv {

void write_dataset_csv(const std::string& path, const Batch& data) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw IoError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < data.x.cols(); ++i)
        std::fprintf(f, i == 0 ? "x%zu" : ",x%zu", i + 1);
    for (std::size_t i = 0; i < data.y.cols(); ++i) std::fprintf(f, ",y%zu", i + 1);
    std::fputc('\n', f);
    for (std::size_t n = 0; n < data.size(); ++n) {
        for (std::size_t i = 0; i < data.x.cols(); ++i)
            std::fprintf(f, i == 0 ? "%.17g" : ",%.17g", data.x(n, i));
        for (std::size_t i = 0; i < data.y.cols(); ++i)
            std::fprintf(f, ",%d", data.y(n, i) == 1.0 ? 1 : 0);
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

Batch read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("empty dataset file: " + path);

    std::size_t t1 = 0;
    std::size_t tl = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.rfind("x", 0) == 0 && tl == 0)
                ++t1;
            else if (col.rfind("y", 0) == 0)
                ++tl;
            else
                throw IoError("unexpected dataset column '" + col + "' in " + path);
        }
    }
    if (t1 == 0 || tl == 0) throw IoError("dataset header must list x and y columns: " + path);

    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t idx = 0;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || !std::isfinite(v))
                throw IoError("bad value '" + cell + "' on data row " + std::to_string(n + 1));
            if (idx < t1)
                xs.push_back(v);
            else
                ys.push_back(v);
            ++idx;
        }
        if (idx != t1 + tl)
            throw IoError("data row " + std::to_string(n + 1) + " has " + std::to_string(idx) +
                          " columns, expected " + std::to_string(t1 + tl));
        ++n;
    }
    if (n == 0) throw IoError("dataset has no rows: " + path);
    return Batch{DenseMatrix(n, t1, std::move(xs)), DenseMatrix(n, tl, std::move(ys))};
}

Batch generate_dataset(std::size_t t1, std::size_t tl, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ContractError("generate_dataset: n must be >= 1");
    if (t1 < 1 || tl < 1) throw ContractError("generate_dataset: widths must be >= 1");
    Rng rng(seed);

    // Fixed labelling rule: a random matrix with unit-norm rows, drawn
    // before any example so the rule does not depend on n.
    DenseMatrix rule(tl, t1);
    for (std::size_t r = 0; r < tl; ++r) {
        double nrm = 0.0;
        for (std::size_t c = 0; c < t1; ++c) {
            rule(r, c) = rng.next_normal();
            nrm += rule(r, c) * rule(r, c);
        }
        nrm = std::sqrt(nrm);
        for (std::size_t c = 0; c < t1; ++c) rule(r, c) /= nrm;
    }

    DenseMatrix x(n, t1);
    DenseMatrix y(n, tl, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < t1; ++c) x(i, c) = rng.next_normal();
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < tl; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < t1; ++c) s += rule(r, c) * x(i, c);
            if (s > best_score) {
                best_score = s;
                best = r;
            }
        }
        y(i, best) = 1.0;
    }
    return Batch{std::move(x), std::move(y)};
}

}  // namespace curv
