#pragma once

#include <string>

#include "curv/model.hpp"

namespace curv {

// Dataset CSV: header row x1..xT1,y1..yTL, then one example per line.
// Features are decimal values, labels one-hot 0/1.
void write_dataset_csv(const std::string& path, const Batch& data);
Batch read_dataset_csv(const std::string& path);

// n examples with standard-normal features and a one-hot label from a
// fixed random linear rule, deterministic under seed.
Batch generate_dataset(std::size_t t1, std::size_t tl, std::size_t n, std::uint64_t seed);

}  // namespace curv
