#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "demcl/checkpoint.hpp"
#include "demcl/features.hpp"
#include "demcl/network.hpp"

namespace demcl {

/// One classifier sample: a TDS window, its gait features, and the label.
struct MclSample {
    RealMat tds_window;  // tds_width rows x D columns
    GaitFeatures features;
    int label = 0;
    bool generated = false;
};

/// Architecture sizes. Paper-scale defaults; desk configs scale the widths
/// while keeping the topology (branch kernels 3/4/5, conv ladder with a
/// final 1x1 layer, RBF 4 -> q -> X).
struct MclArchConfig {
    std::size_t classes = 5;          // X
    std::size_t tds_width = 45;       // sample window columns
    std::size_t doppler_bins = 205;   // D
    std::size_t branch_channels = 8;  // each MCNN branch; trunk widths derive from this
    std::size_t dense_hidden = 128;
    std::array<std::size_t, 2> cn_hidden = {1000, 100};
    std::size_t rbf_hidden = 5;  // q
};

/// FN1 (multi-scale CNN on TDS), FN2 (RBF net on features), CN (fusion
/// weights), plus the input normalization the networks were trained with.
struct MclModel {
    Network fn1;
    Network fn2;
    Network cn;
    MclArchConfig arch;
    double tds_min = 0.0, tds_max = 1.0;
    std::array<double, 4> feat_min{}, feat_max{};
};

/// Flattened TDS plus the four features: tds_width * D + 4.
std::size_t cn_input_size(const MclArchConfig& arch);

Network build_fn1(const MclArchConfig& arch, Rng& rng);
Network build_fn2(const MclArchConfig& arch, const std::vector<Tensor>& norm_features, Rng& rng);
Network build_cn(const MclArchConfig& arch, Rng& rng);

/// Class distribution from the TDS branch.
Tensor fn1_forward(MclModel& model, const RealMat& tds_window);

/// Class distribution from the feature branch.
Tensor fn2_forward(MclModel& model, const GaitFeatures& features);

/// Fusion weights (2X softmax) from the stacked raw inputs.
Tensor cn_forward(MclModel& model, const RealMat& tds_window, const GaitFeatures& features);

/// P_i = p1_i * w_i + p2_i * w_{X+i}. Scores are not renormalized.
Tensor fuse(const Tensor& p1, const Tensor& p2, const Tensor& w);

struct FusionResult {
    Tensor p1, p2, w, fused;
};

FusionResult mcl_forward(MclModel& model, const MclSample& sample);

struct MclHistoryEntry {
    std::size_t epoch = 0;
    double loss_train = 0.0;
    std::optional<double> loss_test;
};

/// Joint training of FN1, FN2 (including centers and widths) and CN by
/// backpropagating CE(label, softmax(P)) through the fusion. Deterministic
/// given cfg.rng_seed.
std::pair<MclModel, std::vector<MclHistoryEntry>> train_mcl(
    const std::vector<MclSample>& train, const MclArchConfig& arch, const TrainConfig& cfg,
    const std::vector<MclSample>* test = nullptr);

struct MclMetrics {
    double accuracy = 0.0;
    std::vector<double> per_class;
    std::vector<std::vector<std::size_t>> confusion;  // [true][decided]
};

MclMetrics evaluate(MclModel& model, const std::vector<MclSample>& samples);

/// Checkpoint entries namespaced fn1/, fn2/, cn/ plus normalization and
/// window-geometry scalars.
void save_mcl(const std::filesystem::path& path, MclModel& model);
MclModel load_mcl(const std::filesystem::path& path);

void write_confusion_csv(const std::filesystem::path& path, const MclMetrics& metrics);

}  // namespace demcl
