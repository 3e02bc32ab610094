#include "demcl/rdgan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "demcl/io.hpp"

namespace demcl {

namespace {

constexpr double kLogEps = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogEps)); }

Tensor plane(const Tensor& multi, std::size_t channel) {
    const std::size_t h = multi.shape[1], w = multi.shape[2];
    Tensor t({1, h, w});
    std::copy(multi.values.begin() + static_cast<std::ptrdiff_t>(channel * h * w),
              multi.values.begin() + static_cast<std::ptrdiff_t>((channel + 1) * h * w),
              t.values.begin());
    return t;
}

}  // namespace

Network build_generator(Rng& rng) {
    Network g;
    g.add<Conv2dLayer>(1, 32, 3, 3, true, 1).init(rng);
    g.add<LeakyReluLayer>(0.2);
    g.add<Conv2dLayer>(32, 8, 3, 3, true, 1).init(rng);
    g.add<LeakyReluLayer>(0.2);
    g.add<Conv2dLayer>(8, 1, 3, 3, true, 1).init(rng);
    return g;
}

namespace {

Network build_discriminator(std::size_t in_ch, std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows / 4 == 0 || cols / 4 == 0)
        throw std::invalid_argument("discriminator: frame must be at least 4x4");
    Network d;
    d.add<Conv2dLayer>(in_ch, 8, 3, 3, true, 1).init(rng);
    d.add<LeakyReluLayer>(0.2);
    d.add<MaxPoolLayer>(2, 2);
    d.add<Conv2dLayer>(8, 16, 3, 3, true, 1).init(rng);
    d.add<LeakyReluLayer>(0.2);
    d.add<MaxPoolLayer>(2, 2);
    d.add<FlattenLayer>();
    d.add<DenseLayer>(16 * (rows / 4) * (cols / 4), 1).init(rng);
    d.add<SigmoidLayer>();
    return d;
}

}  // namespace

Network build_spatial_discriminator(std::size_t rows, std::size_t cols, Rng& rng) {
    return build_discriminator(2, rows, cols, rng);
}

Network build_temporal_discriminator(std::size_t rows, std::size_t cols, Rng& rng) {
    return build_discriminator(3, rows, cols, rng);
}

Tensor normalize_rdm(const RealMat& rdm, double min_db, double max_db) {
    Tensor t({1, rdm.rows, rdm.cols});
    const double span = max_db > min_db ? max_db - min_db : 1.0;
    for (std::size_t i = 0; i < rdm.v.size(); ++i) t.values[i] = (rdm.v[i] - min_db) / span;
    return t;
}

RealMat denormalize_rdm(const Tensor& t, double min_db, double max_db) {
    RealMat m(t.shape[1], t.shape[2]);
    const double span = max_db > min_db ? max_db - min_db : 1.0;
    for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = t.values[i] * span + min_db;
    return m;
}

double real_fake_loss(const std::vector<double>& real_p, const std::vector<double>& fake_p) {
    if (real_p.empty() || fake_p.empty())
        throw std::invalid_argument("real_fake_loss: empty batch");
    double lr = 0.0, lf = 0.0;
    for (double p : real_p) lr += safe_log(p);
    for (double p : fake_p) lf += safe_log(1.0 - p);
    lr /= static_cast<double>(real_p.size());
    lf /= static_cast<double>(fake_p.size());
    return (-lr - lf) / 2.0;
}

double generator_loss_from_probs(const std::vector<double>& spatial_p,
                                 const std::vector<double>& temporal_p) {
    if (spatial_p.empty() || temporal_p.empty())
        throw std::invalid_argument("generator_loss_from_probs: empty batch");
    double ls = 0.0, lt = 0.0;
    for (double p : spatial_p) ls += safe_log(p);
    for (double p : temporal_p) lt += safe_log(p);
    ls /= static_cast<double>(spatial_p.size());
    lt /= static_cast<double>(temporal_p.size());
    return (-ls - lt) / 2.0;
}

Tensor stack_pair(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b) || a.rank() != 3 || a.shape[0] != 1)
        throw std::invalid_argument("stack_pair: frames must share a (1,H,W) shape");
    Tensor t({2, a.shape[1], a.shape[2]});
    std::copy(a.values.begin(), a.values.end(), t.values.begin());
    std::copy(b.values.begin(), b.values.end(), t.values.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return t;
}

Tensor stack_triple(const Tensor& a, const Tensor& b, const Tensor& c) {
    if (!a.same_shape(b) || !a.same_shape(c) || a.rank() != 3 || a.shape[0] != 1)
        throw std::invalid_argument("stack_triple: frames must share a (1,H,W) shape");
    Tensor t({3, a.shape[1], a.shape[2]});
    auto it = t.values.begin();
    it = std::copy(a.values.begin(), a.values.end(), it);
    it = std::copy(b.values.begin(), b.values.end(), it);
    std::copy(c.values.begin(), c.values.end(), it);
    return t;
}

Tensor g_predict(Network& generator, const Tensor& x) {
    if (x.rank() != 3 || x.shape[0] != 1)
        throw std::invalid_argument("g_predict: input must be a (1,H,W) frame");
    return generator.forward(x);
}

double ds_loss(Network& ds, const std::vector<Tensor>& xs, const std::vector<Tensor>& ys,
               const std::vector<Tensor>& gxs) {
    if (xs.size() != ys.size() || xs.size() != gxs.size())
        throw std::invalid_argument("ds_loss: batch sizes differ");
    std::vector<double> real_p, fake_p;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        real_p.push_back(ds.forward(stack_pair(xs[i], ys[i]))[0]);
        fake_p.push_back(ds.forward(stack_pair(xs[i], gxs[i]))[0]);
    }
    return real_fake_loss(real_p, fake_p);
}

double dt_loss(Network& dt, const std::vector<Tensor>& real_triples,
               const std::vector<Tensor>& gen_triples) {
    std::vector<double> real_p, fake_p;
    for (const auto& y : real_triples) real_p.push_back(dt.forward(y)[0]);
    for (const auto& g : gen_triples) fake_p.push_back(dt.forward(g)[0]);
    return real_fake_loss(real_p, fake_p);
}

double g_loss(Network& ds, Network& dt, Network& g, const std::vector<Tensor>& xs,
              const std::vector<std::array<Tensor, 3>>& x_triples) {
    if (xs.size() != x_triples.size())
        throw std::invalid_argument("g_loss: batch sizes differ");
    std::vector<double> sp, tp;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Tensor gen = g.forward(xs[i]);
        sp.push_back(ds.forward(stack_pair(xs[i], gen))[0]);
        Tensor g0 = g.forward(x_triples[i][0]);
        Tensor g1 = g.forward(x_triples[i][1]);
        Tensor g2 = g.forward(x_triples[i][2]);
        tp.push_back(dt.forward(stack_triple(g0, g1, g2))[0]);
    }
    return generator_loss_from_probs(sp, tp);
}

namespace {

struct GanBatchData {
    std::vector<Tensor> frames;  // normalized (1,R,D)
    std::vector<std::size_t> t_range;  // valid centers: x=f[t], y=f[t+1]
};

// Gradient of -log(p)/(2m) w.r.t. p, with the same floor as the loss.
double dneg_log(double p, std::size_t m) {
    return -1.0 / (2.0 * static_cast<double>(m) * std::max(p, kLogEps));
}

// Gradient of -log(1-p)/(2m) w.r.t. p.
double dneg_log1m(double p, std::size_t m) {
    return 1.0 / (2.0 * static_cast<double>(m) * std::max(1.0 - p, kLogEps));
}

std::vector<std::size_t> pick_batch(const std::vector<std::size_t>& ts, std::size_t batch_size,
                                    Rng& rng) {
    if (batch_size == 0 || batch_size >= ts.size()) return ts;
    std::vector<std::size_t> shuffled = ts;
    rng.shuffle(shuffled);
    shuffled.resize(batch_size);
    std::sort(shuffled.begin(), shuffled.end());
    return shuffled;
}

}  // namespace

std::pair<RdganModels, GanLossHistory> train_gan(const std::vector<RealMat>& frames_db,
                                                 const GanTrainConfig& cfg) {
    if (frames_db.size() < 4)
        throw std::invalid_argument("train_gan: need at least 4 consecutive frames");
    if (cfg.k_ds == 0 || cfg.k_dt == 0 || cfg.k_g == 0 || cfg.epochs == 0)
        throw std::invalid_argument("train_gan: iteration counts must be >= 1");

    const std::size_t rows = frames_db.front().rows;
    const std::size_t cols = frames_db.front().cols;
    for (const auto& f : frames_db)
        if (f.rows != rows || f.cols != cols)
            throw std::invalid_argument("train_gan: frame dimensions differ");

    RdganModels models;
    models.rows = rows;
    models.cols = cols;
    models.norm_min_db = *std::min_element(frames_db.front().v.begin(), frames_db.front().v.end());
    models.norm_max_db = models.norm_min_db;
    for (const auto& f : frames_db) {
        for (double x : f.v) {
            models.norm_min_db = std::min(models.norm_min_db, x);
            models.norm_max_db = std::max(models.norm_max_db, x);
        }
    }

    Rng rng(cfg.rng_seed);
    models.generator = build_generator(rng);
    models.spatial_disc = build_spatial_discriminator(rows, cols, rng);
    models.temporal_disc = build_temporal_discriminator(rows, cols, rng);

    GanBatchData data;
    for (const auto& f : frames_db)
        data.frames.push_back(normalize_rdm(f, models.norm_min_db, models.norm_max_db));
    for (std::size_t t = 1; t + 2 < data.frames.size(); ++t) data.t_range.push_back(t);

    Network& g = models.generator;
    Network& ds = models.spatial_disc;
    Network& dt = models.temporal_disc;
    GanLossHistory history;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double ds_loss_val = 0.0, dt_loss_val = 0.0, g_loss_val = 0.0;

        for (std::size_t it = 0; it < cfg.k_ds; ++it) {
            const auto batch = pick_batch(data.t_range, cfg.batch_size, rng);
            const std::size_t m = batch.size();
            ds.zero_grads();
            std::vector<double> rp, fp;
            for (std::size_t t : batch) {
                Tensor gen = g.forward(data.frames[t]);
                double pr = ds.forward(stack_pair(data.frames[t], data.frames[t + 1]))[0];
                ds.backward(Tensor({1}, {dneg_log(pr, m)}));
                double pf = ds.forward(stack_pair(data.frames[t], gen))[0];
                ds.backward(Tensor({1}, {dneg_log1m(pf, m)}));
                rp.push_back(pr);
                fp.push_back(pf);
            }
            sgd_step(ds, cfg.learning_rate);
            ++history.ds_updates;
            ds_loss_val = real_fake_loss(rp, fp);
        }

        for (std::size_t it = 0; it < cfg.k_dt; ++it) {
            const auto batch = pick_batch(data.t_range, cfg.batch_size, rng);
            const std::size_t m = batch.size();
            dt.zero_grads();
            std::vector<double> rp, fp;
            for (std::size_t t : batch) {
                Tensor real = stack_triple(data.frames[t], data.frames[t + 1], data.frames[t + 2]);
                double pr = dt.forward(real)[0];
                dt.backward(Tensor({1}, {dneg_log(pr, m)}));
                Tensor gen = stack_triple(g.forward(data.frames[t - 1]), g.forward(data.frames[t]),
                                          g.forward(data.frames[t + 1]));
                double pf = dt.forward(gen)[0];
                dt.backward(Tensor({1}, {dneg_log1m(pf, m)}));
                rp.push_back(pr);
                fp.push_back(pf);
            }
            sgd_step(dt, cfg.learning_rate);
            ++history.dt_updates;
            dt_loss_val = real_fake_loss(rp, fp);
        }

        for (std::size_t it = 0; it < cfg.k_g; ++it) {
            const auto batch = pick_batch(data.t_range, cfg.batch_size, rng);
            const std::size_t m = batch.size();
            g.zero_grads();
            std::vector<double> sp, tp;
            for (std::size_t t : batch) {
                // spatial path: grad flows through the candidate channel
                Tensor gen = g.forward(data.frames[t]);
                double p_s = ds.forward(stack_pair(data.frames[t], gen))[0];
                Tensor pair_grad = ds.backward(Tensor({1}, {dneg_log(p_s, m)}));
                Tensor spatial_grad = plane(pair_grad, 1);

                // temporal path: three generated frames judged jointly
                Tensor g0 = g.forward(data.frames[t - 1]);
                Tensor g1 = g.forward(data.frames[t]);
                Tensor g2 = g.forward(data.frames[t + 1]);
                double p_t = dt.forward(stack_triple(g0, g1, g2))[0];
                Tensor triple_grad = dt.backward(Tensor({1}, {dneg_log(p_t, m)}));

                g.forward(data.frames[t - 1]);
                g.backward(plane(triple_grad, 0));
                g.forward(data.frames[t]);
                Tensor mid = plane(triple_grad, 1);
                for (std::size_t i = 0; i < mid.size(); ++i) mid.values[i] += spatial_grad.values[i];
                g.backward(mid);
                g.forward(data.frames[t + 1]);
                g.backward(plane(triple_grad, 2));

                sp.push_back(p_s);
                tp.push_back(p_t);
            }
            // discriminators only ferried gradients here; drop their grads
            ds.zero_grads();
            dt.zero_grads();
            sgd_step(g, cfg.learning_rate);
            ++history.g_updates;
            g_loss_val = generator_loss_from_probs(sp, tp);
        }

        history.loss_ds.push_back(ds_loss_val);
        history.loss_dt.push_back(dt_loss_val);
        history.loss_g.push_back(g_loss_val);
    }
    return {std::move(models), std::move(history)};
}

std::array<double, 3> evaluate_gan_losses(RdganModels& models,
                                          const std::vector<RealMat>& frames_db) {
    if (frames_db.size() < 4)
        throw std::invalid_argument("evaluate_gan_losses: need at least 4 frames");
    std::vector<Tensor> frames;
    for (const auto& f : frames_db)
        frames.push_back(normalize_rdm(f, models.norm_min_db, models.norm_max_db));

    std::vector<Tensor> xs, ys, gxs, real_triples, gen_triples;
    std::vector<std::array<Tensor, 3>> x_triples;
    for (std::size_t t = 1; t + 2 < frames.size(); ++t) {
        xs.push_back(frames[t]);
        ys.push_back(frames[t + 1]);
        gxs.push_back(models.generator.forward(frames[t]));
        real_triples.push_back(stack_triple(frames[t], frames[t + 1], frames[t + 2]));
        gen_triples.push_back(stack_triple(models.generator.forward(frames[t - 1]),
                                           models.generator.forward(frames[t]),
                                           models.generator.forward(frames[t + 1])));
        x_triples.push_back({frames[t - 1], frames[t], frames[t + 1]});
    }
    double l_ds = ds_loss(models.spatial_disc, xs, ys, gxs);
    double l_dt = dt_loss(models.temporal_disc, real_triples, gen_triples);
    double l_g = g_loss(models.spatial_disc, models.temporal_disc, models.generator, xs, x_triples);
    return {l_g, l_ds, l_dt};
}

std::vector<RealMat> generate_one_step(RdganModels& models, const std::vector<RealMat>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("generate_one_step: no seed frames");
    std::vector<RealMat> out;
    out.reserve(seeds.size());
    for (const auto& f : seeds) {
        Tensor x = normalize_rdm(f, models.norm_min_db, models.norm_max_db);
        out.push_back(denormalize_rdm(models.generator.forward(x), models.norm_min_db,
                                      models.norm_max_db));
    }
    return out;
}

std::vector<RealMat> generate_rollout(RdganModels& models, const std::vector<RealMat>& seeds,
                                      std::size_t depth) {
    if (seeds.empty()) throw std::invalid_argument("generate_rollout: no seed frames");
    if (depth < 1) throw std::invalid_argument("generate_rollout: depth must be >= 1");
    std::vector<RealMat> out;
    Tensor x = normalize_rdm(seeds.back(), models.norm_min_db, models.norm_max_db);
    for (std::size_t i = 0; i < depth; ++i) {
        x = models.generator.forward(x);
        out.push_back(denormalize_rdm(x, models.norm_min_db, models.norm_max_db));
    }
    return out;
}

void save_rdgan(const std::filesystem::path& path, RdganModels& models) {
    std::vector<CheckpointEntry> entries;
    for (auto& e : network_entries(models.generator, "g")) entries.push_back(std::move(e));
    for (auto& e : network_entries(models.spatial_disc, "ds")) entries.push_back(std::move(e));
    for (auto& e : network_entries(models.temporal_disc, "dt")) entries.push_back(std::move(e));
    entries.push_back(scalar_entry("norm/min_db", models.norm_min_db));
    entries.push_back(scalar_entry("norm/max_db", models.norm_max_db));
    entries.push_back(scalar_entry("shape/rows", static_cast<double>(models.rows)));
    entries.push_back(scalar_entry("shape/cols", static_cast<double>(models.cols)));
    write_checkpoint(path, entries);
}

RdganModels load_rdgan(const std::filesystem::path& path) {
    const auto entries = read_checkpoint(path);
    RdganModels models;
    models.generator = network_from_entries(entries, "g");
    models.spatial_disc = network_from_entries(entries, "ds");
    models.temporal_disc = network_from_entries(entries, "dt");
    models.norm_min_db = scalar_value(entries, "norm/min_db");
    models.norm_max_db = scalar_value(entries, "norm/max_db");
    models.rows = static_cast<std::size_t>(scalar_value(entries, "shape/rows"));
    models.cols = static_cast<std::size_t>(scalar_value(entries, "shape/cols"));
    return models;
}

void write_gan_loss_csv(const std::filesystem::path& path, const GanLossHistory& history) {
    std::ostringstream ss;
    ss.precision(12);
    ss << "epoch,loss_g,loss_ds,loss_dt\n";
    for (std::size_t i = 0; i < history.loss_g.size(); ++i)
        ss << i << "," << history.loss_g[i] << "," << history.loss_ds[i] << ","
           << history.loss_dt[i] << "\n";
    atomic_write(path, ss.str());
}

}  // namespace demcl
