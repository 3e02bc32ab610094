#include "demcl/simkit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "demcl/io.hpp"

namespace demcl {

void validate_radar(const RadarParams& radar) {
    if (!(radar.carrier_hz > 0.0) || !(radar.bandwidth_hz > 0.0) || !(radar.chirp_s > 0.0) ||
        !(radar.frame_rate > 0.0))
        throw std::invalid_argument("RadarParams: all waveform parameters must be positive");
    if (radar.samples_per_chirp < 2 || radar.chirps_per_frame < 2)
        throw std::invalid_argument("RadarParams: K and L must be >= 2");
    if (radar.frame_rate * static_cast<double>(radar.chirps_per_frame) * radar.chirp_s > 1.0)
        throw std::invalid_argument("RadarParams: frames do not fit in real time");
}

double range_bin_of(const RadarParams& radar, double range_m) {
    return 2.0 * radar.bandwidth_hz * range_m / kSpeedOfLight;
}

double doppler_bins_per_mps(const RadarParams& radar) {
    return 2.0 * radar.carrier_hz * radar.chirp_s *
           static_cast<double>(radar.chirps_per_frame) / kSpeedOfLight;
}

double doppler_bin_of(const RadarParams& radar, double range_rate_mps) {
    return -range_rate_mps * doppler_bins_per_mps(radar);
}

double unambiguous_speed_mps(const RadarParams& radar) {
    return kSpeedOfLight / (4.0 * radar.carrier_hz * radar.chirp_s);
}

RadarFrame synth_frame(const RadarParams& radar, const std::vector<ScattererState>& scene,
                       double noise_std, Rng* rng, int frame_index) {
    validate_radar(radar);
    const std::size_t k = radar.samples_per_chirp;
    const std::size_t l = radar.chirps_per_frame;
    RadarFrame frame;
    frame.samples = ComplexMat(k, l);
    frame.frame_index = frame_index;
    frame.frame_rate = radar.frame_rate;

    const double half_l = static_cast<double>(l) / 2.0;
    for (const auto& sc : scene) {
        const double u = range_bin_of(radar, sc.range_m);
        if (u < 0.0 || u >= static_cast<double>(k))
            throw std::invalid_argument("synth_frame: scatterer outside the unambiguous range");
        const double v = doppler_bin_of(radar, sc.range_rate_mps);
        if (std::abs(v) >= half_l) frame.aliasing_warning = true;
        const double wu = 2.0 * M_PI * u / static_cast<double>(k);
        const double wv = 2.0 * M_PI * v / static_cast<double>(l);
        for (std::size_t ki = 0; ki < k; ++ki) {
            const std::complex<double> fast =
                sc.amplitude * std::polar(1.0, wu * static_cast<double>(ki));
            for (std::size_t li = 0; li < l; ++li)
                frame.samples.at(ki, li) += fast * std::polar(1.0, wv * static_cast<double>(li));
        }
    }
    if (noise_std > 0.0) {
        if (!rng) throw std::invalid_argument("synth_frame: noise requested without an RNG");
        const double s = noise_std / std::sqrt(2.0);
        for (auto& z : frame.samples.v) z += std::complex<double>(s * rng->normal(), s * rng->normal());
    }
    return frame;
}

void validate_profile(const PedestrianProfile& p) {
    if (p.gait_hz < 0.5 || p.gait_hz > 2.0)
        throw std::invalid_argument("PedestrianProfile: gait frequency must lie in [0.5, 2.0] Hz");
    if (!(p.torso_speed_mps > 0.0) || p.torso_speed_mps + p.limb_amp_mps >= 3.0)
        throw std::invalid_argument("PedestrianProfile: speeds must stay below 3 m/s");
    if (p.limb_amp_mps < 0.0)
        throw std::invalid_argument("PedestrianProfile: limb amplitude must be >= 0");
    if (!(p.corridor_min_m < p.corridor_max_m) || p.base_range_m < p.corridor_min_m ||
        p.base_range_m > p.corridor_max_m)
        throw std::invalid_argument("PedestrianProfile: base range must sit inside the corridor");
}

LabeledSequence make_sequence(const PedestrianProfile& profile, const RadarParams& radar,
                              double duration_s) {
    validate_profile(profile);
    validate_radar(radar);
    const std::size_t frame_count =
        static_cast<std::size_t>(std::lround(duration_s * radar.frame_rate));
    if (frame_count == 0) throw std::invalid_argument("make_sequence: zero-length dataset");

    LabeledSequence seq;
    seq.profile = profile;
    seq.frames.reserve(frame_count);

    Rng rng(profile.rng_seed);
    const double noise_std = std::pow(10.0, -profile.snr_db / 20.0);
    const double dt = 1.0 / radar.frame_rate;
    const double two_pi = 2.0 * M_PI;
    // The counter-swinging limb gets a smaller amplitude. With equal
    // amplitudes the Doppler envelope repeats every half gait cycle and the
    // extracted period halves.
    const double second_limb_scale = 0.4;

    double torso = profile.base_range_m;
    double dir = 1.0;
    // limb swing displacement amplitude: integral of the velocity modulation
    const double swing_m = profile.limb_amp_mps / (two_pi * profile.gait_hz);
    for (std::size_t i = 0; i < frame_count; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double swing = std::sin(two_pi * profile.gait_hz * t);
        const double osc = std::cos(two_pi * profile.gait_hz * t);
        const double v1 = dir * (profile.torso_speed_mps + profile.limb_amp_mps * swing);
        const double v2 =
            dir * (profile.torso_speed_mps - second_limb_scale * profile.limb_amp_mps * swing);
        const double off1 = -dir * swing_m * osc;
        const double off2 = dir * second_limb_scale * swing_m * osc;
        std::vector<ScattererState> scene = {
            {torso, dir * profile.torso_speed_mps, profile.torso_reflectivity},
            {torso + off1, v1, profile.limb_reflectivity},
            {torso + off2, v2, profile.limb_reflectivity},
        };
        seq.frames.push_back(synth_frame(radar, scene, noise_std, &rng, static_cast<int>(i)));

        torso += dir * profile.torso_speed_mps * dt;
        if (torso >= profile.corridor_max_m) dir = -1.0;
        if (torso <= profile.corridor_min_m) dir = 1.0;
    }
    return seq;
}

std::vector<LabeledSequence> make_dataset(const std::vector<PedestrianProfile>& profiles,
                                          const RadarParams& radar, double duration_s) {
    if (profiles.size() < 2)
        throw std::invalid_argument("make_dataset: need at least two pedestrian profiles");
    std::vector<LabeledSequence> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) out.push_back(make_sequence(p, radar, duration_s));
    return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<LabeledSequence>& seqs) {
    std::filesystem::create_directories(dir);
    for (const auto& seq : seqs) {
        const auto frame_path = dir / (seq.profile.name + ".rdf");
        write_rdf1(frame_path, seq.frames);
        std::ostringstream gait, speed, amp, seed, rate;
        gait.precision(12);
        gait << seq.profile.gait_hz;
        speed.precision(12);
        speed << seq.profile.torso_speed_mps;
        amp.precision(12);
        amp << seq.profile.limb_amp_mps;
        seed << seq.profile.rng_seed;
        rate.precision(12);
        rate << seq.frames.front().frame_rate;
        write_sidecar(frame_path.string() + ".meta",
                      {{"label", std::to_string(seq.profile.label)},
                       {"seed", seed.str()},
                       {"gait_hz", gait.str()},
                       {"torso_speed_mps", speed.str()},
                       {"limb_amp_mps", amp.str()},
                       {"frame_rate", rate.str()}});
    }
}

}  // namespace demcl
