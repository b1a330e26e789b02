#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "irsr/core/mat.hpp"
#include "irsr/train/trainer.hpp"

namespace irsr::probe {

struct ProbeConfig {
    int num_scenes = 16;
    double holdout_frac = 0.25;
    double ridge_lambda = 1e-3;
    int probe_t = 0;  // 0 = T/4
    uint64_t seed = 0;
};

struct LayerProbeResult {
    int layer = 0;  // 1-indexed block output
    double accuracy_category = 0.0;
    double accuracy_instance = 0.0;
    bool degenerate = false;
};

struct ProbeReport {
    std::vector<LayerProbeResult> layers;
};

struct ProbeDegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Frozen-feature extraction over a deterministic labeled scene set. The
// model sees the clean joint latent noised to probe_t with the usual LR
// condition; labels come from the scene masks (category 0 is background,
// 1..4 the shape kinds; instance labels are globally unique per scene+id).
struct Extraction {
    std::vector<Mat> per_layer;  // depth matrices, rows = scenes x patches
    std::vector<int> category;
    std::vector<int> instance;
    int width = 0;
};

Extraction extract_features(train::Trainer& trainer, const ProbeConfig& pc);

// Closed-form one-vs-rest ridge classifier on frozen features; returns
// held-out accuracy. Throws ProbeDegenerateError when the training labels
// carry fewer than two classes.
double linear_probe(const Mat& train_x, const std::vector<int>& train_y, const Mat& test_x,
                    const std::vector<int>& test_y, double ridge_lambda);

ProbeReport probe_all_layers(train::Trainer& trainer, const ProbeConfig& pc);

// trace(between-class scatter) / trace(within-class scatter)
double fisher_ratio(const Mat& x, const std::vector<int>& labels);

// Writes <prefix>.bin (rows x width tensor container) and <prefix>_labels.csv.
void export_features(train::Trainer& trainer, int layer, const ProbeConfig& pc, const std::string& prefix);

}  // namespace irsr::probe
