#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demcl/radarproc.hpp"
#include "demcl/rng.hpp"

namespace demcl {

inline constexpr double kSpeedOfLight = 299792458.0;

/// FMCW waveform and frame geometry. Desk defaults keep grids small.
struct RadarParams {
    double carrier_hz = 24e9;
    double bandwidth_hz = 250e6;
    double chirp_s = 1e-3;
    std::size_t samples_per_chirp = 64;  // K
    std::size_t chirps_per_frame = 64;   // L
    double frame_rate = 15.0;            // frames/second
};

void validate_radar(const RadarParams& radar);

/// Beat-frequency bin for a scatterer at the given range: 2*B*r/c.
double range_bin_of(const RadarParams& radar, double range_m);

/// Signed Doppler bin offset for a range rate (positive when closing):
/// f_D = -2 * range_rate * f_c / c, bin = f_D * T_c * L.
double doppler_bin_of(const RadarParams& radar, double range_rate_mps);

double doppler_bins_per_mps(const RadarParams& radar);

/// Range rate beyond which the Doppler phase wraps.
double unambiguous_speed_mps(const RadarParams& radar);

/// One point scatterer at a frame instant.
struct ScattererState {
    double range_m = 0.0;
    double range_rate_mps = 0.0;  // dr/dt, positive when receding
    double amplitude = 1.0;
};

/// Dechirped frame for a scene of point scatterers:
///   s(k,l) = sum_i a_i exp(j 2 pi (u_i k / K + v_i l / L)) + noise
/// with u_i the beat bin and v_i the Doppler bin. Scatterers beyond the
/// unambiguous speed set the frame's aliasing flag. noise_std is the
/// complex-sample standard deviation (0 disables noise).
RadarFrame synth_frame(const RadarParams& radar, const std::vector<ScattererState>& scene,
                       double noise_std = 0.0, Rng* rng = nullptr, int frame_index = 0);

/// A walking pedestrian: torso scatterer plus two limb scatterers whose
/// radial speed is modulated sinusoidally at the gait frequency, in
/// antiphase. The torso paces back and forth inside the corridor.
struct PedestrianProfile {
    std::string name = "ped";
    int label = 0;
    double base_range_m = 5.0;
    double torso_speed_mps = 1.0;  // starts walking away from the radar
    double gait_hz = 1.0;          // within [0.5, 2.0]
    double limb_amp_mps = 1.0;     // limb speed modulation amplitude
    double torso_reflectivity = 1.0;
    double limb_reflectivity = 0.45;
    double corridor_min_m = 2.0;
    double corridor_max_m = 18.0;
    double snr_db = 20.0;  // unit-amplitude scatterer vs noise floor
    std::uint64_t rng_seed = 1;
};

void validate_profile(const PedestrianProfile& p);

struct LabeledSequence {
    PedestrianProfile profile;
    std::vector<RadarFrame> frames;
};

/// duration*frame_rate frames per pedestrian with the torso advance and
/// limb modulation integrated over time. Deterministic per profile seed.
std::vector<LabeledSequence> make_dataset(const std::vector<PedestrianProfile>& profiles,
                                          const RadarParams& radar, double duration_s);

LabeledSequence make_sequence(const PedestrianProfile& profile, const RadarParams& radar,
                              double duration_s);

/// Writes "<name>.rdf" plus a "<name>.rdf.meta" sidecar with the ground
/// truth (seed, gait frequency, speeds, label) per sequence.
void write_dataset(const std::filesystem::path& dir, const std::vector<LabeledSequence>& seqs);

}  // namespace demcl
