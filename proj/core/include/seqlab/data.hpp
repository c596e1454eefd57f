#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seqlab/image.hpp"

namespace seqlab::data {

struct Dataset {
    std::vector<Image> images;
    std::vector<int> labels;
    int num_classes = 0;
    std::string name;

    std::size_t size() const { return images.size(); }
    void validate() const;
};

struct SplitSpec {
    int n_labels = 0;
    bool balanced = true;
    std::uint64_t seed = 0;
    bool include_labeled_in_unlabeled = true;
};

struct LongTailSpec {
    double lambda_imb = 100.0;  // head/tail imbalance ratio, > 1
    int head_count = 1000;      // N1
    int num_classes = 10;
    double beta = 0.2;          // labeled fraction per class
    void validate() const;
};

/// Labeled/unlabeled partition. The unlabeled half keeps its ground-truth
/// labels for diagnostics only; training must not read them as targets.
std::pair<Dataset, Dataset> make_split(const Dataset& ds, const SplitSpec& spec);

/// Exponentially decaying class sizes round(N1 * lambda^-((k-1)/(L-1))),
/// floored at 1. Index 0 of the result is class k=1 (the head).
std::vector<int> long_tail_counts(const LongTailSpec& spec);

/// Subsample class k to N_k, then split round(beta * N_k) (min 1) of each
/// class into the labeled half; the remainder is unlabeled.
std::pair<Dataset, Dataset> make_long_tail(const Dataset& ds, const LongTailSpec& spec,
                                           std::uint64_t seed);

/// Grayscale side x side dataset: class templates (distinct bright shapes on
/// a dark background) plus uniform additive noise of amplitude
/// noise * 255, clamped to [0, 255].
Dataset synth_blobs(int num_classes, int per_class, int side, double noise, std::uint64_t seed);

/// Noise-free class template used by synth_blobs.
Image synth_template(int class_index, int num_classes, int side);

/// Load PPM/PGM files listed in labels.tsv (first line "#classes=<L>", then
/// "filename<TAB>label" rows). All images must share one shape.
Dataset load_directory(const std::filesystem::path& path);

/// Write a dataset in the load_directory layout.
void save_directory(const Dataset& ds, const std::filesystem::path& path);

}  // namespace seqlab::data
