#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpal/tensor.hpp"

namespace cpal {

// A pair of classes that tend to appear in the same image and whose
// archetypes are built with a controlled cosine similarity.
struct ConfuserPair {
    int first = 0;
    int second = 1;
    double probability = 0.1;
};

struct DatasetSpec {
    std::size_t images = 200;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t depth = 16;
    int classes = 4;
    int attributes_per_class = 2;
    int instances_per_class = 2;
    std::vector<ConfuserPair> confuser_pairs = {ConfuserPair{}};
    double confuser_cos = 0.6;
    double intra_class_cos = 0.08;
    double noise_sigma = 0.05;
    int background_archetypes = 8;
    std::size_t blob_min = 5;
    std::size_t blob_max = 9;
    double presence_prob = 0.15;
    std::uint64_t seed = 2026;
};

struct ImageRecord {
    Tensor features;         // [H,W,D]
    Tensor gt;               // [H,W], class ids; background stored as `classes`
    std::vector<int> labels; // multi-hot, length `classes`
    std::string feature_path;
    std::string gt_path;
};

struct Dataset {
    std::vector<ImageRecord> images;
    Tensor weights; // [classes, D], one classifier row per class
    DatasetSpec spec;
};

// Writes per-image feature tensors, ground-truth masks, classifier weights,
// and a manifest.json into out_dir. Returns the manifest path.
std::string gen_synthetic(const DatasetSpec& spec, const std::string& out_dir);

Dataset load_dataset(const std::string& manifest_path);

// Reads a DatasetSpec from a JSON file; absent keys keep their defaults.
DatasetSpec load_dataset_spec(const std::string& json_path);

} // namespace cpal
