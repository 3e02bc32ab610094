#pragma once

#include <filesystem>
#include <vector>

#include "demcl/radarproc.hpp"

namespace demcl {

/// The four gait statistics of one analysis window.
struct GaitFeatures {
    double f1 = 0.0;  // torso Doppler line, bin units
    double f2 = 0.0;  // total Doppler bandwidth, bins (inclusive span)
    double f3 = 0.0;  // torso bandwidth, bins
    double f4 = 0.0;  // limb-motion period, seconds

    std::vector<double> as_vector() const { return {f1, f2, f3, f4}; }
};

struct FeatureWindowConfig {
    std::size_t window_frames = 165;       // Z consecutive frames per window
    double envelope_threshold_db = 12.0;   // band threshold below the profile peak
    double torso_band_fraction = 0.5;      // torso threshold = peak - threshold*fraction
    double min_period_s = 0.3;             // autocorrelation lag search range
    double max_period_s = 3.0;
    double fallback_period_s = 0.0;        // substituted for f4 on flat windows when > 0
};

/// Raised when the envelope sequence has zero variance and no period exists.
struct FlatWindowError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Computes f1..f4 from a window of exactly cfg.window_frames profiles.
/// f1 is the argmax bin of the time-averaged profile; f2/f3 are
/// peak-relative thresholded bandwidths; f4 is the first autocorrelation
/// peak of the per-frame upper-envelope sequence.
GaitFeatures extract_features(const TimeDopplerSpectrogram& window,
                              const FeatureWindowConfig& cfg);

/// One feature set per sample window: the Z-frame window centered on the
/// sample, shifted to stay inside the spectrogram.
std::vector<GaitFeatures> features_for_samples(const TimeDopplerSpectrogram& tds,
                                               const std::vector<std::size_t>& sample_starts,
                                               std::size_t sample_width,
                                               const FeatureWindowConfig& cfg);

/// Start of the Z-frame feature window for a sample at [start, start+width).
std::size_t feature_window_start(std::size_t n, std::size_t sample_start,
                                 std::size_t sample_width, std::size_t z);

struct FeatureCsvRow {
    std::string sample_id;
    int label = 0;
    GaitFeatures features;
};

/// CSV with header `sample_id,label,f1,f2,f3,f4`.
void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureCsvRow>& rows);

}  // namespace demcl
