#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kooptx/signal.hpp"

namespace kooptx {

// One manifest row: a signal file and its free-text diagnosis.
struct RawRecord {
    std::string file;
    std::string diagnosis;
    Signal signal;
};

// Directory layout: labels.csv manifest (`file,class` header) next to one
// signal CSV per record. All records must share a sampling rate.
std::vector<RawRecord> load_dataset(const std::string& dir);

struct SplitRatios {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

struct DatasetSplit {
    std::vector<size_t> train, val, test;
};

// Stratified split: per class, indices are shuffled with a single generator
// seeded by split_seed and divided by largest-remainder apportionment of the
// ratios, so each split's class counts are within one record of exact
// proportionality. Classes with fewer than 3 records go whole to train (with
// a warning on stderr). Ratios must sum to 1.
DatasetSplit split_dataset(const std::vector<int>& labels, const SplitRatios& ratios,
                           uint64_t split_seed);

}  // namespace kooptx
