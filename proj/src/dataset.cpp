#include "kooptx/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "kooptx/errors.hpp"
#include "kooptx/rng.hpp"

namespace kooptx {

std::vector<RawRecord> load_dataset(const std::string& dir) {
    const std::string manifest_path = dir + "/labels.csv";
    std::ifstream manifest(manifest_path);
    if (!manifest.good()) throw DataError("cannot open " + manifest_path);

    std::string line;
    if (!std::getline(manifest, line) || line != "file,class")
        throw DataError(manifest_path + ": expected header 'file,class'");

    std::vector<RawRecord> records;
    size_t lineno = 1;
    while (std::getline(manifest, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size())
            throw DataError(manifest_path + ":" + std::to_string(lineno) +
                            ": malformed row '" + line + "'");
        RawRecord rec;
        rec.file = line.substr(0, comma);
        rec.diagnosis = line.substr(comma + 1);
        rec.signal = read_signal_csv(dir + "/" + rec.file);
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw DataError(manifest_path + ": no records listed");

    const double fs = records.front().signal.fs;
    for (const RawRecord& rec : records)
        if (std::fabs(rec.signal.fs - fs) > 1e-9 * fs)
            throw DataError(rec.file + ": sampling rate " +
                            std::to_string(rec.signal.fs) +
                            " differs from the dataset's " + std::to_string(fs));
    return records;
}

namespace {

// Floor of each exact share, then the leftover records go to the splits with
// the largest fractional parts (train, then val, then test on ties).
std::array<size_t, 3> apportion(size_t count, const SplitRatios& ratios) {
    const double exact[3] = {count * ratios.train, count * ratios.val,
                             count * ratios.test};
    std::array<size_t, 3> out{};
    double frac[3];
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        out[static_cast<size_t>(i)] = static_cast<size_t>(std::floor(exact[i]));
        frac[i] = exact[i] - std::floor(exact[i]);
        assigned += out[static_cast<size_t>(i)];
    }
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int a, int b) { return frac[a] > frac[b]; });
    for (size_t leftover = count - assigned, i = 0; i < leftover; ++i)
        ++out[static_cast<size_t>(order[i % 3])];
    return out;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<int>& labels, const SplitRatios& ratios,
                           uint64_t split_seed) {
    for (double r : {ratios.train, ratios.val, ratios.test})
        if (!(r >= 0.0 && r <= 1.0))
            throw ConfigError("split_dataset: ratios must lie in [0, 1]");
    if (std::fabs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw ConfigError("split_dataset: ratios must sum to 1");
    if (labels.empty()) throw DataError("split_dataset: no labeled records");

    int n_classes = 0;
    for (int l : labels) {
        if (l < 0) throw DataError("split_dataset: negative class label");
        n_classes = std::max(n_classes, l + 1);
    }

    Rng rng(split_seed);
    DatasetSplit split;
    for (int cls = 0; cls < n_classes; ++cls) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) idx.push_back(i);
        if (idx.empty()) continue;
        rng.shuffle(idx);

        if (idx.size() < 3) {
            std::fprintf(stderr,
                         "warning: class %d has only %zu record(s); routing all of "
                         "them to the training split\n",
                         cls, idx.size());
            split.train.insert(split.train.end(), idx.begin(), idx.end());
            continue;
        }

        const auto counts = apportion(idx.size(), ratios);
        auto it = idx.begin();
        split.train.insert(split.train.end(), it, it + static_cast<long>(counts[0]));
        it += static_cast<long>(counts[0]);
        split.val.insert(split.val.end(), it, it + static_cast<long>(counts[1]));
        it += static_cast<long>(counts[1]);
        split.test.insert(split.test.end(), it, idx.end());
    }
    return split;
}

}  // namespace kooptx
