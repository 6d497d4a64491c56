#pragma once

#include <string>
#include <vector>

#include "fpaint/datagen.hpp"

namespace fpaint {

// On-disk layout per sample, under <root>/pair_%05d/:
//   source.ppm, target.ppm
//   signal.pgm (sketch) | signal.ppm (coarse) | signal.txt (drag)
//   corr_res<stride>.bin per token stride
//   meta.txt  (key = value)

std::string pair_dir_name(int index);

void write_pair_dir(const std::string& dir, const SamplePairData& sample, std::uint64_t seed);
SamplePairData read_pair_dir(const std::string& dir);

// loads every pair_* subdirectory in index order; limit 0 = all
std::vector<SamplePairData> load_dataset(const std::string& root, int limit = 0);

// drag signal text format: "sx sy tx ty" per line, '#' comments
std::string format_drag_points(const DragPointSet& points);
DragPointSet parse_drag_points(const std::string& text, int image_w, int image_h);

struct GenDataOptions {
    std::string out_dir;
    int num_pairs = 0;
    DatagenOptions datagen;
    std::uint64_t seed = 0;
};

void generate_dataset(const GenDataOptions& opt);

}  // namespace fpaint
