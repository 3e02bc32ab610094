#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "demcl/features.hpp"
#include "demcl/mcl.hpp"
#include "demcl/radarproc.hpp"
#include "demcl/rdgan.hpp"
#include "demcl/simkit.hpp"

namespace demcl {

struct RdmStageConfig {
    std::size_t range_bin_lo = 2;
    std::size_t range_bin_hi = 34;  // exclusive
    bool denoise = true;
    DenoiseConfig denoise_cfg;
    double suppress_atten_db = 30.0;
    std::size_t suppress_half_width = 1;
};

struct WindowStageConfig {
    std::size_t tds_width = 45;
    std::size_t train_stride = 15;
    std::size_t test_stride = 3;
    double test_fraction = 0.2;
    FeatureWindowConfig features;
};

struct GanStageConfig {
    GanTrainConfig train;
    std::size_t train_frames = 150;  // leading subsequence used for training; 0 = all
    double generated_ratio = 0.8;    // generated sample count ~ ratio * real count
};

/// Everything one reproducible run needs, loadable from one config file.
struct PipelineConfig {
    RadarParams radar;
    std::vector<PedestrianProfile> pedestrians;
    double duration_s = 60.0;
    RdmStageConfig rdm;
    WindowStageConfig windows;
    GanStageConfig gan;
    MclArchConfig mcl_arch;   // doppler_bins is overwritten from the data
    TrainConfig mcl_train;
    bool augment = true;
    std::uint64_t seed = 1;
};

/// Desk-scale defaults: three distinguishable pedestrians on a small grid.
PipelineConfig desk_config();

/// Flat INI-style parser ([section] + key=value, '#' comments). Unknown
/// keys are rejected so typos surface early.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Serializes every resolved value; parse_config_text round-trips it.
std::string config_to_text(const PipelineConfig& cfg);

void validate_config(const PipelineConfig& cfg);

}  // namespace demcl
