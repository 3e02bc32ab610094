#pragma once

#include <cstddef>
#include <vector>

#include "demcl/tensor.hpp"

namespace demcl {

/// One dechirped FMCW data frame: K fast-time samples per chirp (rows),
/// L chirps (columns).
struct RadarFrame {
    ComplexMat samples;  // K x L
    int frame_index = 0;
    double frame_rate = 0.0;  // frames/second
    bool aliasing_warning = false;

    std::size_t k() const { return samples.rows; }
    std::size_t l() const { return samples.cols; }
};

/// Throws if the frame violates its invariants (K,L >= 2; positive rate).
void validate_frame(const RadarFrame& frame);

/// Range-Doppler map: magnitudes in dB, R range bins x D Doppler bins.
/// Doppler axis is fftshifted so the zero-Doppler bin sits at D/2.
struct RangeDopplerMap {
    RealMat magnitude_db;             // R x D
    std::vector<double> range_axis;   // R bin-center ranges, strictly increasing
    std::vector<double> doppler_axis; // D bin-center Doppler values (bin units by default)
    int frame_index = 0;

    std::size_t range_bins() const { return magnitude_db.rows; }
    std::size_t doppler_bins() const { return magnitude_db.cols; }
};

/// Doppler profiles over time. Row i is the profile e_i of frame i,
/// so the matrix is n x D.
struct TimeDopplerSpectrogram {
    RealMat profiles;  // n x D
    double frame_rate = 0.0;  // profiles/second

    std::size_t n() const { return profiles.rows; }
    std::size_t doppler_bins() const { return profiles.cols; }
};

struct DenoiseConfig {
    double percentile = 75.0;  // per-Doppler-bin noise-floor percentile, in (0,100)
    double margin_db = 6.0;    // cells below floor+margin are clamped to the floor
};

// dB floor before log10 so empty cells map to a finite value
inline constexpr double kDbEpsilon = 1e-12;

/// Unnormalized forward 2D DFT of a K x L grid:
///   S(u,v) = sum_l sum_k s(k,l) exp(-j 2 pi (u k / K + v l / L))
ComplexMat fft2d(const ComplexMat& grid);
ComplexMat fft2d(const RadarFrame& frame);

/// Inverse of fft2d (includes the 1/(KL) normalization).
ComplexMat ifft2d(const ComplexMat& spectrum);

/// Half-open range of fast-time bins to keep as the range gate.
struct BinRange {
    std::size_t lo = 0;
    std::size_t hi = 0;  // exclusive
    std::size_t count() const { return hi > lo ? hi - lo : 0; }
};

/// Optional physical axis spacing; defaults give axes in bin units.
struct AxisCalibration {
    double range_m_per_bin = 1.0;
    double doppler_unit_per_bin = 1.0;
};

/// 2D-FFT a frame, keep the selected range bins, convert magnitudes to dB
/// and fftshift the Doppler axis.
RangeDopplerMap to_rdm(const RadarFrame& frame, BinRange keep_range_bins,
                       AxisCalibration cal = {});

/// Per-Doppler-bin percentile noise floor; cells below floor+margin are
/// clamped to the floor, cells above pass through unchanged.
RangeDopplerMap denoise_rdm(const RangeDopplerMap& rdm, const DenoiseConfig& cfg);

/// Attenuate Doppler bins within half_width of the zero-Doppler bin by
/// atten_db. Everything else is bit-identical to the input.
RangeDopplerMap suppress_zero_doppler(const RangeDopplerMap& rdm, double atten_db,
                                      std::size_t half_width);

/// e_v = sum over range bins of magnitude_db(u, v); dB values are summed
/// directly.
std::vector<double> doppler_profile(const RangeDopplerMap& rdm);

/// Stack profiles in order into a spectrogram; all profiles must have the
/// same length.
TimeDopplerSpectrogram build_tds(const std::vector<std::vector<double>>& profiles,
                                 double frame_rate);

/// Contiguous column windows starting at 0, stride, 2*stride, ...
/// Returns an empty list when width exceeds the column count.
std::vector<TimeDopplerSpectrogram> slice_windows(const TimeDopplerSpectrogram& tds,
                                                  std::size_t width, std::size_t stride);

/// Start offsets of the windows slice_windows would produce.
std::vector<std::size_t> window_starts(std::size_t n, std::size_t width, std::size_t stride);

/// Window [start, start+width) of a spectrogram as its own spectrogram.
TimeDopplerSpectrogram tds_window(const TimeDopplerSpectrogram& tds, std::size_t start,
                                  std::size_t width);

/// Linear-interpolation percentile (p in [0,100]) of a non-empty sample set.
double percentile(std::vector<double> xs, double p);

/// Index of the Doppler bin whose axis value is closest to zero.
std::size_t zero_doppler_bin(const RangeDopplerMap& rdm);

}  // namespace demcl
