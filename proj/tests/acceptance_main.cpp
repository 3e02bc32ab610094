// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run at desk scale with pinned seeds and tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "demcl/pipeline.hpp"
#include "demcl/rdgan.hpp"
#include "testutil.hpp"

using namespace demcl;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------
// 1. DFT oracle: 200 random grids up to 8x8 vs brute force, <= 1e-9.
bool dft_oracle(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240001);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t rows = 1 + rng.index(8);
        const std::size_t cols = 1 + rng.index(8);
        ComplexMat g = testutil::random_grid(rows, cols, rng);
        worst = std::max(worst, testutil::max_rel_error(fft2d(g), testutil::brute_force_dft2d(g)));
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream ss;
    ss << "max rel err " << worst << ", " << elapsed << " s";
    detail = ss.str();
    return worst <= 1e-9 && elapsed < 5.0;
}

// ---------------------------------------------------------------------
// 2. Gradient suite: every layer kind plus the fused head, <= 1e-4.
bool gradient_suite(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240002);
    double worst = 0.0;
    auto track = [&](double err) { worst = std::max(worst, err); };

    auto probe_check = [&](Network& net, const Tensor& x, std::size_t out_n) {
        Tensor probe = testutil::random_tensor({out_n}, rng);
        auto loss = [&] {
            Tensor y = net.forward(x);
            double acc = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * probe[i];
            return acc;
        };
        auto grad = [&] {
            net.forward(x);
            net.backward(probe);
        };
        track(testutil::gradient_check(net, loss, grad));
    };

    {
        Network net;
        net.add<DenseLayer>(6, 4).init(rng);
        probe_check(net, testutil::random_tensor({6}, rng), 4);
    }
    {
        Network net;
        net.add<Conv2dLayer>(2, 3, 3, 3, true).init(rng);
        net.add<FlattenLayer>();
        probe_check(net, testutil::random_tensor({2, 6, 5}, rng), 3 * 6 * 5);
    }
    {
        Network net;
        net.add<MultiscaleConvLayer>(1, 2).init(rng);
        net.add<FlattenLayer>();
        probe_check(net, testutil::random_tensor({1, 6, 6}, rng), 6 * 36);
    }
    {
        Network net;
        auto& rbf = net.add<RbfLayer>(4, 3, 2);
        std::vector<Tensor> feats;
        for (int i = 0; i < 6; ++i) feats.push_back(testutil::random_tensor({4}, rng));
        rbf.init_from_features(feats, rng);
        probe_check(net, testutil::random_tensor({4}, rng), 2);
    }
    {
        Network net;
        net.add<Conv2dLayer>(1, 2, 3, 3, true).init(rng);
        net.add<MaxPoolLayer>(2, 2);
        net.add<FlattenLayer>();
        probe_check(net, testutil::random_tensor({1, 6, 6}, rng), 2 * 9);
    }
    for (int kind = 0; kind < 4; ++kind) {
        Network net;
        net.add<DenseLayer>(5, 5).init(rng);
        if (kind == 0) net.add<ReluLayer>();
        if (kind == 1) net.add<LeakyReluLayer>(0.2);
        if (kind == 2) net.add<SigmoidLayer>();
        if (kind == 3) net.add<SoftmaxLayer>();
        probe_check(net, testutil::random_tensor({5}, rng), 5);
    }
    {
        // softmax + cross-entropy head
        Network net;
        net.add<DenseLayer>(5, 3).init(rng);
        Tensor x = testutil::random_tensor({5}, rng);
        Tensor label = one_hot(2, 3);
        auto loss = [&] {
            SoftmaxLayer sm;
            Tensor p({1, 3}, sm.forward(net.forward(x)).values);
            return cross_entropy(Tensor({1, 3}, label.values), p);
        };
        auto grad = [&] { net.backward(softmax_ce_grad(label, net.forward(x), 1)); };
        track(testutil::gradient_check(net, loss, grad));
    }
    {
        // end to end through the fusion: every branch of a tiny MCL model
        MclArchConfig arch;
        arch.classes = 2;
        arch.tds_width = 8;
        arch.doppler_bins = 8;
        arch.branch_channels = 1;
        arch.dense_hidden = 6;
        arch.cn_hidden = {12, 6};
        arch.rbf_hidden = 2;
        MclModel m;
        m.arch = arch;
        m.feat_min = {0, 0, 0, 0};
        m.feat_max = {1, 1, 1, 1};
        m.fn1 = build_fn1(arch, rng);
        std::vector<Tensor> feats;
        for (int i = 0; i < 5; ++i) feats.push_back(testutil::random_tensor({4}, rng, 0.0, 1.0));
        m.fn2 = build_fn2(arch, feats, rng);
        m.cn = build_cn(arch, rng);
        MclSample s;
        s.tds_window = RealMat(8, 8);
        for (auto& v : s.tds_window.v) v = rng.uniform(0.0, 1.0);
        s.features = {0.3, 0.7, 0.4, 0.9};
        s.label = 1;
        Tensor label = one_hot(1, 2);
        auto loss = [&] {
            FusionResult r = mcl_forward(m, s);
            SoftmaxLayer sm;
            Tensor p({1, 2}, sm.forward(r.fused).values);
            return cross_entropy(Tensor({1, 2}, label.values), p);
        };
        auto grad = [&] {
            FusionResult r = mcl_forward(m, s);
            Tensor gp = softmax_ce_grad(label, r.fused, 1);
            Tensor gp1({2}), gp2({2}), gw({4});
            for (std::size_t i = 0; i < 2; ++i) {
                gp1[i] = gp[i] * r.w[i];
                gp2[i] = gp[i] * r.w[2 + i];
                gw[i] = gp[i] * r.p1[i];
                gw[2 + i] = gp[i] * r.p2[i];
            }
            m.fn1.backward(gp1);
            m.fn2.backward(gp2);
            m.cn.backward(gw);
        };
        track(testutil::gradient_check(m.fn1, loss, grad));
        track(testutil::gradient_check(m.fn2, loss, grad));
        track(testutil::gradient_check(m.cn, loss, grad));
    }

    const double elapsed = seconds_since(t0);
    std::ostringstream ss;
    ss << "max rel err " << worst << ", " << elapsed << " s";
    detail = ss.str();
    return worst <= 1e-4 && elapsed < 30.0;
}

// ---------------------------------------------------------------------
// 3. GAN equilibrium anchor: ln 2 at D = 0.5; trained losses in [0.55,0.90].
bool gan_equilibrium(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();

    // analytic anchor
    Rng rng(20240003);
    Network g = build_generator(rng);
    Network ds = build_spatial_discriminator(16, 16, rng);
    Network dt = build_temporal_discriminator(16, 16, rng);
    for (Network* d : {&ds, &dt}) {
        auto ps = d->params();
        ps[ps.size() - 2].value->fill(0.0);
        ps[ps.size() - 1].value->fill(0.0);
    }
    std::vector<Tensor> xs, ys, gxs, rtrip, gtrip;
    std::vector<std::array<Tensor, 3>> xtrip;
    for (int i = 0; i < 4; ++i) {
        Tensor a = testutil::random_tensor({1, 16, 16}, rng, 0.0, 1.0);
        Tensor b = testutil::random_tensor({1, 16, 16}, rng, 0.0, 1.0);
        Tensor c = testutil::random_tensor({1, 16, 16}, rng, 0.0, 1.0);
        xs.push_back(a);
        ys.push_back(b);
        gxs.push_back(g.forward(a));
        rtrip.push_back(stack_triple(a, b, c));
        gtrip.push_back(stack_triple(g.forward(a), g.forward(b), g.forward(c)));
        xtrip.push_back({a, b, c});
    }
    const double ln2 = std::log(2.0);
    const double anchor_err =
        std::max({std::abs(ds_loss(ds, xs, ys, gxs) - ln2), std::abs(dt_loss(dt, rtrip, gtrip) - ln2),
                  std::abs(g_loss(ds, dt, g, xs, xtrip) - ln2)});
    if (anchor_err > 1e-12) {
        detail = "anchor error " + std::to_string(anchor_err);
        return false;
    }

    // desk-scale training: 16x16 RDMs, 100 epochs, fixed seed
    RadarParams radar;
    radar.samples_per_chirp = 32;
    radar.chirps_per_frame = 16;
    radar.chirp_s = 1e-3;
    PedestrianProfile p;
    p.base_range_m = 5.0;
    p.torso_speed_mps = 0.5;
    p.gait_hz = 1.0;
    p.limb_amp_mps = 0.8;
    p.corridor_max_m = 17.0;
    p.rng_seed = 41;
    auto seq = make_sequence(p, radar, 64.0 / radar.frame_rate);  // 64 frames

    RdmStageConfig stage;
    stage.range_bin_lo = 2;
    stage.range_bin_hi = 18;  // 16 range bins
    auto rdms = frames_to_rdms(seq.frames, stage);
    std::vector<RealMat> mats;
    for (const auto& r : rdms) mats.push_back(r.magnitude_db);

    GanTrainConfig cfg;
    cfg.epochs = 100;
    cfg.rng_seed = 7;
    auto [models, history] = train_gan(mats, cfg);
    auto losses = evaluate_gan_losses(models, mats);

    const double elapsed = seconds_since(t0);
    std::ostringstream ss;
    ss << "anchor err " << anchor_err << "; converged g=" << losses[0] << " ds=" << losses[1]
       << " dt=" << losses[2] << ", " << elapsed << " s";
    detail = ss.str();
    for (double l : losses)
        if (l < 0.55 || l > 0.90) return false;
    return elapsed < 600.0;
}

// ---------------------------------------------------------------------
// 4. Feature fidelity on known gait periods.
bool feature_fidelity(std::string& detail) {
    RadarParams radar;
    radar.samples_per_chirp = 64;
    radar.chirps_per_frame = 32;
    radar.chirp_s = 1e-3;

    const double periods[] = {0.8, 1.0, 1.25};
    const double speeds[] = {0.5, 0.7, 0.9};
    double worst_f4_err = 0.0, worst_f1_err = 0.0;
    bool band_ok = true;
    std::size_t windows_checked = 0;

    for (int c = 0; c < 3; ++c) {
        PedestrianProfile p;
        p.base_range_m = 4.0;
        p.torso_speed_mps = speeds[c];
        p.gait_hz = 1.0 / periods[c];
        p.limb_amp_mps = 1.0;
        p.corridor_max_m = 19.0;
        p.rng_seed = 300 + static_cast<std::uint64_t>(c);
        auto seq = make_sequence(p, radar, 16.0);

        RdmStageConfig stage;
        stage.range_bin_lo = 2;
        stage.range_bin_hi = 34;
        auto rdms = frames_to_rdms(seq.frames, stage);
        TimeDopplerSpectrogram tds = rdms_to_tds(rdms, radar.frame_rate);

        FeatureWindowConfig fcfg;
        fcfg.window_frames = 165;
        fcfg.envelope_threshold_db = 350.0;  // summed-dB scale of the 32-bin range gate

        // windows inside the first corridor pass (walking away -> negative Doppler)
        const std::size_t zero_bin = radar.chirps_per_frame / 2;
        const double expected_bin =
            static_cast<double>(zero_bin) + doppler_bin_of(radar, speeds[c]);
        for (std::size_t start : {std::size_t{0}, std::size_t{30}, std::size_t{60}}) {
            GaitFeatures f = extract_features(tds_window(tds, start, 165), fcfg);
            worst_f4_err = std::max(worst_f4_err, std::abs(f.f4 - periods[c]) / periods[c]);
            worst_f1_err = std::max(worst_f1_err, std::abs(f.f1 - expected_bin));
            band_ok = band_ok && f.f2 >= f.f3;
            ++windows_checked;
        }
    }

    std::ostringstream ss;
    ss << "f4 max rel err " << worst_f4_err << ", f1 max bin err " << worst_f1_err << ", f2>=f3 on "
       << windows_checked << "/" << windows_checked << " windows";
    detail = ss.str();
    return worst_f4_err <= 0.10 && worst_f1_err <= 1.0 && band_ok;
}

// ---------------------------------------------------------------------
// 5. Desk-scale classification >= 0.90 within 15 minutes.
bool desk_classification(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineConfig cfg = desk_config();
    cfg.augment = false;  // the plain run; augmentation is criterion 6
    PipelineResult result = run_pipeline(cfg);
    const double elapsed = seconds_since(t0);
    std::ostringstream ss;
    ss << "test accuracy " << result.metrics.accuracy << " vs 0.333 chance (train "
       << result.real_train << ", test " << result.test_count << "), " << elapsed << " s";
    detail = ss.str();
    return result.metrics.accuracy >= 0.90 && elapsed < 900.0;
}

// ---------------------------------------------------------------------
// 6. Augmentation non-regression across 3 seeds.
bool augmentation_non_regression(std::string& detail) {
    PipelineConfig cfg = desk_config();
    const auto seqs = make_dataset(cfg.pedestrians, cfg.radar, cfg.duration_s);

    std::ostringstream ss;
    bool ok = true;
    for (std::uint64_t seed : {11u, 22u, 33u}) {
        PipelineConfig plain = cfg;
        plain.augment = false;
        plain.mcl_train.rng_seed = seed;
        PipelineConfig augmented = cfg;
        augmented.augment = true;
        augmented.mcl_train.rng_seed = seed;

        const double base = run_pipeline_on(seqs, plain).metrics.accuracy;
        const double with_gen = run_pipeline_on(seqs, augmented).metrics.accuracy;
        const double delta_pp = 100.0 * (with_gen - base);
        ss << "seed " << seed << ": base " << base << ", augmented " << with_gen << ", delta "
           << delta_pp << "pp; ";
        if (with_gen < base - 0.01 - 1e-9) ok = false;
    }
    detail = ss.str();
    return ok;
}

// ---------------------------------------------------------------------
// 7. Fusion unit contract.
bool fusion_contract(std::string& detail) {
    Tensor p1({2}, {0.9, 0.1});
    Tensor p2({2}, {0.2, 0.8});
    Tensor w({4}, {0.4, 0.1, 0.1, 0.4});
    Tensor fused = fuse(p1, p2, w);
    if (std::abs(fused[0] - 0.38) > 1e-12 || std::abs(fused[1] - 0.33) > 1e-12 ||
        argmax_index(fused) != 0) {
        detail = "worked example mismatch";
        return false;
    }
    // uniform weights: P = p/X
    Tensor p({3}, {0.6, 0.3, 0.1});
    Tensor uw({6});
    uw.fill(1.0 / 6.0);
    Tensor pf = fuse(p, p, uw);
    for (std::size_t i = 0; i < 3; ++i)
        if (std::abs(pf[i] - p[i] / 3.0) > 1e-12) {
            detail = "uniform-weight case mismatch";
            return false;
        }

    Rng rng(20240007);
    double max_sum = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t x = 2 + rng.index(5);
        auto distribution = [&](std::size_t n) {
            Tensor t({n});
            double sum = 0.0;
            for (auto& v : t.values) {
                v = rng.uniform(0.0, 1.0) + 1e-9;
                sum += v;
            }
            for (auto& v : t.values) v /= sum;
            return t;
        };
        Tensor q1 = distribution(x), q2 = distribution(x), qw = distribution(2 * x);
        Tensor f = fuse(q1, q2, qw);
        double total = 0.0;
        for (double v : f.values) {
            if (v < 0.0) {
                detail = "negative fused score";
                return false;
            }
            total += v;
        }
        max_sum = std::max(max_sum, total);
    }
    std::ostringstream ss;
    ss << "hand cases exact; max sum(P) over 1000 triples " << max_sum;
    detail = ss.str();
    return max_sum <= 1.0 + 1e-12;
}

// ---------------------------------------------------------------------
// 8. Determinism and checkpoint round trips.
bool determinism_roundtrip(std::string& detail) {
    PipelineConfig cfg = desk_config();
    cfg.duration_s = 25.0;  // small but full-featured rerun
    cfg.gan.train_frames = 60;
    cfg.gan.train.epochs = 8;
    cfg.mcl_train.epochs = 8;
    cfg.windows.features.window_frames = 100;

    PipelineResult a = run_pipeline(cfg);
    PipelineResult b = run_pipeline(cfg);
    const std::string ja = metrics_json(a.metrics, a.history);
    const std::string jb = metrics_json(b.metrics, b.history);
    if (ja != jb) {
        detail = "seed-fixed reruns produced different metrics JSON";
        return false;
    }

    const fs::path dir = fs::temp_directory_path() / "demcl_acceptance";
    fs::create_directories(dir);
    const fs::path ck1 = dir / "m1.ckpt";
    const fs::path ck2 = dir / "m2.ckpt";
    save_mcl(ck1, a.model);
    MclModel loaded = load_mcl(ck1);
    save_mcl(ck2, loaded);
    std::string bytes1, bytes2;
    {
        std::ifstream f1(ck1, std::ios::binary), f2(ck2, std::ios::binary);
        std::ostringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        bytes1 = s1.str();
        bytes2 = s2.str();
    }
    MclModel reloaded = load_mcl(ck2);
    fs::remove_all(dir);
    if (bytes1 != bytes2) {
        detail = "checkpoint round trip changed bytes";
        return false;
    }
    // parameters loaded from either file are bit-identical
    auto pa = loaded.fn1.params();
    auto pb = reloaded.fn1.params();
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i].value->values != pb[i].value->values) {
            detail = "reloaded parameters differ";
            return false;
        }
    detail = "metrics JSON byte-identical; MDCK round trip bit-exact";
    return true;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "2D-DFT brute-force oracle", dft_oracle},
        {2, "gradient finite-difference suite", gradient_suite},
        {3, "GAN equilibrium anchor and convergence band", gan_equilibrium},
        {4, "gait feature fidelity", feature_fidelity},
        {5, "desk-scale classification accuracy", desk_classification},
        {6, "augmentation non-regression", augmentation_non_regression},
        {7, "fusion contract", fusion_contract},
        {8, "determinism and checkpoint round-trip", determinism_roundtrip},
    };

    int failures = 0;
    for (auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures) std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
