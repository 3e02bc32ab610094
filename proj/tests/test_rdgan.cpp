#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "demcl/pipeline.hpp"
#include "demcl/rdgan.hpp"
#include "testutil.hpp"

using namespace demcl;

namespace {

/// Force a discriminator to output exactly sigmoid(0) = 0.5.
void zero_head(Network& d) {
    auto ps = d.params();
    ps[ps.size() - 2].value->fill(0.0);  // final dense W
    ps[ps.size() - 1].value->fill(0.0);  // final dense b
}

std::vector<RealMat> smooth_sequence(std::size_t count, std::size_t rows, std::size_t cols,
                                     std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RealMat> frames;
    double phase = rng.uniform(0.0, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
        RealMat m(rows, cols, -60.0);
        const double c = phase + 0.15 * static_cast<double>(i);
        for (std::size_t u = 0; u < rows; ++u)
            for (std::size_t v = 0; v < cols; ++v) {
                double du = static_cast<double>(u) - (4.0 + 3.0 * std::sin(c));
                double dv = static_cast<double>(v) - (8.0 + 4.0 * std::cos(c));
                m.at(u, v) += 45.0 * std::exp(-(du * du + dv * dv) / 6.0);
            }
        frames.push_back(std::move(m));
    }
    return frames;
}

}  // namespace

TEST_CASE("all three losses equal ln 2 when the discriminators output 0.5") {
    Rng rng(1);
    Network g = build_generator(rng);
    Network ds = build_spatial_discriminator(16, 16, rng);
    Network dt = build_temporal_discriminator(16, 16, rng);
    zero_head(ds);
    zero_head(dt);

    std::vector<Tensor> xs, ys, gxs, rtrip, gtrip;
    std::vector<std::array<Tensor, 3>> xtrip;
    Rng drng(2);
    for (int i = 0; i < 3; ++i) {
        Tensor a = testutil::random_tensor({1, 16, 16}, drng, 0.0, 1.0);
        Tensor b = testutil::random_tensor({1, 16, 16}, drng, 0.0, 1.0);
        Tensor c = testutil::random_tensor({1, 16, 16}, drng, 0.0, 1.0);
        xs.push_back(a);
        ys.push_back(b);
        gxs.push_back(g.forward(a));
        rtrip.push_back(stack_triple(a, b, c));
        gtrip.push_back(stack_triple(g.forward(a), g.forward(b), g.forward(c)));
        xtrip.push_back({a, b, c});
    }
    const double ln2 = std::log(2.0);
    CHECK(std::abs(ds_loss(ds, xs, ys, gxs) - ln2) < 1e-12);
    CHECK(std::abs(dt_loss(dt, rtrip, gtrip) - ln2) < 1e-12);
    CHECK(std::abs(g_loss(ds, dt, g, xs, xtrip) - ln2) < 1e-12);
}

TEST_CASE("spatial loss matches hand arithmetic") {
    CHECK(real_fake_loss({0.9}, {0.2}) ==
          doctest::Approx((-std::log(0.9) - std::log(0.8)) / 2.0).epsilon(1e-12));
    CHECK(real_fake_loss({1.0 - 1e-15}, {1e-15}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("temporal loss matches hand arithmetic") {
    CHECK(real_fake_loss({0.8}, {0.3}) ==
          doctest::Approx((-std::log(0.8) - std::log(0.7)) / 2.0).epsilon(1e-12));
}

TEST_CASE("generator loss matches hand arithmetic") {
    CHECK(generator_loss_from_probs({0.4}, {0.6}) ==
          doctest::Approx((-std::log(0.4) - std::log(0.6)) / 2.0).epsilon(1e-12));
    CHECK(generator_loss_from_probs({1.0 - 1e-15}, {1.0 - 1e-15}) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("losses stay non-negative and finite on random probabilities") {
    Rng rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> a = {rng.uniform(1e-6, 1.0 - 1e-6)};
        std::vector<double> b = {rng.uniform(1e-6, 1.0 - 1e-6)};
        CHECK(real_fake_loss(a, b) >= 0.0);
        CHECK(std::isfinite(real_fake_loss(a, b)));
        CHECK(generator_loss_from_probs(a, b) >= 0.0);
    }
}

TEST_CASE("generator output shape equals input shape") {
    Rng rng(7);
    Network g = build_generator(rng);
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{16, 16}, {12, 20}, {8, 8}}) {
        Tensor x = testutil::random_tensor({1, r, c}, rng, 0.0, 1.0);
        CHECK(g_predict(g, x).shape == std::vector<std::size_t>{1, r, c});
    }
}

TEST_CASE("zero-initialized final layer produces the all-zero frame") {
    Rng rng(8);
    Network g = build_generator(rng);
    auto ps = g.params();
    ps[ps.size() - 2].value->fill(0.0);
    ps[ps.size() - 1].value->fill(0.0);
    Tensor y = g_predict(g, testutil::random_tensor({1, 8, 8}, rng, 0.0, 1.0));
    for (double v : y.values) CHECK(v == 0.0);
}

TEST_CASE("discriminator outputs stay strictly inside (0,1)") {
    Rng rng(9);
    Network ds = build_spatial_discriminator(8, 8, rng);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor pair = testutil::random_tensor({2, 8, 8}, rng, -3.0, 3.0);
        double p = ds.forward(pair)[0];
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("training loop accounting: n=5 and one epoch give one update each") {
    auto frames = smooth_sequence(5, 8, 8, 3);
    GanTrainConfig cfg;
    cfg.epochs = 1;
    auto [models, history] = train_gan(frames, cfg);
    CHECK(history.ds_updates == 1);
    CHECK(history.dt_updates == 1);
    CHECK(history.g_updates == 1);
    CHECK(history.loss_g.size() == 1);
    CHECK(history.loss_ds.size() == 1);
    CHECK(history.loss_dt.size() == 1);
}

TEST_CASE("k counts multiply the per-epoch updates") {
    auto frames = smooth_sequence(6, 8, 8, 4);
    GanTrainConfig cfg;
    cfg.epochs = 3;
    cfg.k_ds = 2;
    cfg.k_dt = 1;
    cfg.k_g = 4;
    auto [models, history] = train_gan(frames, cfg);
    CHECK(history.ds_updates == 6);
    CHECK(history.dt_updates == 3);
    CHECK(history.g_updates == 12);
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto frames = smooth_sequence(8, 8, 8, 6);
    GanTrainConfig cfg;
    cfg.epochs = 4;
    cfg.rng_seed = 11;
    auto [m1, h1] = train_gan(frames, cfg);
    auto [m2, h2] = train_gan(frames, cfg);
    CHECK(h1.loss_g == h2.loss_g);
    CHECK(h1.loss_ds == h2.loss_ds);
    CHECK(h1.loss_dt == h2.loss_dt);
}

TEST_CASE("train_gan rejects short sequences") {
    auto frames = smooth_sequence(3, 8, 8, 6);
    CHECK_THROWS_AS(train_gan(frames, GanTrainConfig{}), std::invalid_argument);
}

TEST_CASE("one-step generation emits one frame per seed frame") {
    auto frames = smooth_sequence(10, 8, 8, 12);
    GanTrainConfig cfg;
    cfg.epochs = 2;
    auto [models, history] = train_gan(frames, cfg);
    CHECK(generate_one_step(models, frames).size() == 10);
}

TEST_CASE("rollout depth 1 equals one-step on the last seed frame") {
    auto frames = smooth_sequence(6, 8, 8, 13);
    GanTrainConfig cfg;
    cfg.epochs = 2;
    auto [models, history] = train_gan(frames, cfg);
    auto rolled = generate_rollout(models, frames, 1);
    auto stepped = generate_one_step(models, {frames.back()});
    REQUIRE(rolled.size() == 1);
    CHECK(rolled[0].v == stepped[0].v);
    CHECK_THROWS_AS(generate_rollout(models, frames, 0), std::invalid_argument);
}

TEST_CASE("generated frames feed the TDS pipeline with matching dimensions") {
    auto frames = smooth_sequence(12, 8, 8, 14);
    GanTrainConfig cfg;
    cfg.epochs = 2;
    auto [models, history] = train_gan(frames, cfg);
    auto generated = generate_one_step(models, frames);
    TimeDopplerSpectrogram real_tds = mats_to_tds(frames, 15.0);
    TimeDopplerSpectrogram gen_tds = mats_to_tds(generated, 15.0);
    CHECK(gen_tds.n() == real_tds.n());
    CHECK(gen_tds.doppler_bins() == real_tds.doppler_bins());
}

TEST_CASE("checkpoint round trip preserves models and normalization") {
    auto frames = smooth_sequence(8, 8, 8, 15);
    GanTrainConfig cfg;
    cfg.epochs = 2;
    auto [models, history] = train_gan(frames, cfg);
    const auto path = std::filesystem::temp_directory_path() / "demcl_gan.ckpt";
    save_rdgan(path, models);
    RdganModels back = load_rdgan(path);
    CHECK(back.rows == models.rows);
    CHECK(back.norm_min_db == doctest::Approx(models.norm_min_db));
    // identical predictions after reload (weights pass through f32 storage)
    Tensor x = normalize_rdm(frames[2], back.norm_min_db, back.norm_max_db);
    Tensor y1 = models.generator.forward(x);
    Tensor y2 = back.generator.forward(x);
    for (std::size_t i = 0; i < y1.size(); ++i)
        CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-6));
    std::filesystem::remove(path);
}

TEST_CASE("loss CSV export") {
    GanLossHistory h;
    h.loss_g = {0.7, 0.69};
    h.loss_ds = {0.71, 0.7};
    h.loss_dt = {0.72, 0.7};
    const auto path = std::filesystem::temp_directory_path() / "demcl_gan_loss.csv";
    write_gan_loss_csv(path, h);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,loss_g,loss_ds,loss_dt");
    std::getline(in, line);
    CHECK(line == "0,0.7,0.71,0.72");
    std::filesystem::remove(path);
}
