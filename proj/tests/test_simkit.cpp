#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "demcl/pipeline.hpp"
#include "demcl/simkit.hpp"

using namespace demcl;

namespace {

std::pair<std::size_t, std::size_t> rdm_peak(const RangeDopplerMap& rdm) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rdm.magnitude_db.v.size(); ++i)
        if (rdm.magnitude_db.v[i] > rdm.magnitude_db.v[best]) best = i;
    return {best / rdm.doppler_bins(), best % rdm.doppler_bins()};
}

}  // namespace

TEST_CASE("static scatterer peaks at the analytic range bin and zero Doppler") {
    RadarParams radar;
    Rng rng(2);
    for (double range : {3.0, 5.0, 12.0}) {
        RadarFrame f = synth_frame(radar, {{range, 0.0, 1.0}}, 0.1, &rng);
        RangeDopplerMap rdm = to_rdm(f, {0, radar.samples_per_chirp});
        auto [u, v] = rdm_peak(rdm);
        CHECK(std::abs(static_cast<double>(u) - range_bin_of(radar, range)) <= 1.0);
        CHECK(v == zero_doppler_bin(rdm));
    }
}

TEST_CASE("moving scatterer peaks at the analytic Doppler bin") {
    RadarParams radar;
    Rng rng(3);
    for (double rate : {-1.5, -0.5, 0.75, 2.0}) {
        RadarFrame f = synth_frame(radar, {{6.0, rate, 1.0}}, 0.1, &rng);
        RangeDopplerMap rdm = to_rdm(f, {0, radar.samples_per_chirp});
        auto [u, v] = rdm_peak(rdm);
        const double expected =
            static_cast<double>(zero_doppler_bin(rdm)) + doppler_bin_of(radar, rate);
        CHECK(std::abs(static_cast<double>(v) - expected) <= 1.0);
        CHECK(u == static_cast<std::size_t>(std::lround(range_bin_of(radar, 6.0))));
    }
}

TEST_CASE("empty noiseless scene gives the all-zero frame") {
    RadarParams radar;
    RadarFrame f = synth_frame(radar, {});
    for (const auto& z : f.samples.v) CHECK(z == std::complex<double>(0.0, 0.0));
    CHECK(!f.aliasing_warning);
}

TEST_CASE("velocities beyond the unambiguous speed raise the aliasing flag") {
    RadarParams radar;
    const double limit = unambiguous_speed_mps(radar);
    RadarFrame ok = synth_frame(radar, {{5.0, 0.9 * limit, 1.0}});
    CHECK(!ok.aliasing_warning);
    RadarFrame aliased = synth_frame(radar, {{5.0, 1.1 * limit, 1.0}});
    CHECK(aliased.aliasing_warning);
}

TEST_CASE("scatterers outside the unambiguous range are rejected") {
    RadarParams radar;
    CHECK_THROWS_AS(synth_frame(radar, {{1000.0, 0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("make_dataset: counts, labels and determinism") {
    RadarParams radar;
    radar.samples_per_chirp = 16;
    radar.chirps_per_frame = 16;
    std::vector<PedestrianProfile> profiles(3);
    for (int i = 0; i < 3; ++i) {
        profiles[i].name = "p" + std::to_string(i);
        profiles[i].label = i;
        profiles[i].base_range_m = 4.0 + i;
        profiles[i].torso_speed_mps = 0.6 + 0.3 * i;
        profiles[i].gait_hz = 0.8 + 0.3 * i;
        profiles[i].limb_amp_mps = 0.8;
        profiles[i].corridor_max_m = 9.0;  // K=16 caps the unambiguous range
        profiles[i].rng_seed = 100 + static_cast<std::uint64_t>(i);
    }
    auto ds = make_dataset(profiles, radar, 60.0);
    REQUIRE(ds.size() == 3);
    for (const auto& seq : ds) CHECK(seq.frames.size() == 900);  // 60 s x 15 fps

    auto again = make_sequence(profiles[1], radar, 60.0);
    CHECK(again.frames.size() == ds[1].frames.size());
    for (std::size_t i = 0; i < again.frames.size(); i += 97)
        CHECK(again.frames[i].samples.v == ds[1].frames[i].samples.v);
}

TEST_CASE("make_dataset needs at least two profiles") {
    RadarParams radar;
    CHECK_THROWS_AS(make_dataset({PedestrianProfile{}}, radar, 10.0), std::invalid_argument);
}

TEST_CASE("profile validation enforces physical bounds") {
    PedestrianProfile p;
    p.gait_hz = 2.5;
    CHECK_THROWS_AS(validate_profile(p), std::invalid_argument);
    p = PedestrianProfile{};
    p.torso_speed_mps = 2.0;
    p.limb_amp_mps = 1.5;  // 3.5 m/s peak
    CHECK_THROWS_AS(validate_profile(p), std::invalid_argument);
}

TEST_CASE("radar validation rejects frames that overrun real time") {
    RadarParams radar;
    radar.frame_rate = 20.0;
    radar.chirps_per_frame = 64;
    radar.chirp_s = 1e-3;  // 20 * 64 * 1e-3 = 1.28 > 1
    CHECK_THROWS_AS(validate_radar(radar), std::invalid_argument);
}

TEST_CASE("pedestrian stays inside the corridor over a long walk") {
    RadarParams radar;
    radar.samples_per_chirp = 64;
    radar.chirps_per_frame = 8;
    PedestrianProfile p;
    p.torso_speed_mps = 1.4;
    p.limb_amp_mps = 1.0;
    p.base_range_m = 5.0;
    p.corridor_min_m = 2.0;
    p.corridor_max_m = 18.0;
    p.snr_db = 200.0;  // negligible noise
    auto seq = make_sequence(p, radar, 120.0);
    CHECK(seq.frames.size() == 1800);
    for (const auto& f : seq.frames) CHECK(!f.aliasing_warning);
}
