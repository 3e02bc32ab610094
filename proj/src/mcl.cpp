#include "demcl/mcl.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "demcl/io.hpp"

namespace demcl {

std::size_t cn_input_size(const MclArchConfig& arch) {
    return arch.tds_width * arch.doppler_bins + 4;
}

Network build_fn1(const MclArchConfig& arch, Rng& rng) {
    const std::size_t b = arch.branch_channels;
    Network net;
    net.add<MultiscaleConvLayer>(1, b).init(rng);
    net.add<ReluLayer>();
    net.add<Conv2dLayer>(3 * b, 6 * b, 3, 3, true, 1).init(rng);
    net.add<ReluLayer>();
    net.add<MaxPoolLayer>(2, 2);
    net.add<Conv2dLayer>(6 * b, 12 * b, 3, 3, true, 1).init(rng);
    net.add<ReluLayer>();
    net.add<MaxPoolLayer>(2, 2);
    net.add<Conv2dLayer>(12 * b, 16 * b, 3, 3, true, 1).init(rng);
    net.add<ReluLayer>();
    net.add<MaxPoolLayer>(2, 2);
    net.add<Conv2dLayer>(16 * b, 4 * b, 1, 1, true, 1).init(rng);
    net.add<ReluLayer>();
    net.add<FlattenLayer>();
    const std::size_t ph = arch.tds_width / 2 / 2 / 2;
    const std::size_t pw = arch.doppler_bins / 2 / 2 / 2;
    if (ph == 0 || pw == 0)
        throw std::invalid_argument("build_fn1: TDS window too small for three pooling stages");
    net.add<DenseLayer>(4 * b * ph * pw, arch.dense_hidden).init(rng);
    net.add<ReluLayer>();
    net.add<DenseLayer>(arch.dense_hidden, arch.classes).init(rng);
    net.add<SoftmaxLayer>();
    return net;
}

Network build_fn2(const MclArchConfig& arch, const std::vector<Tensor>& norm_features, Rng& rng) {
    Network net;
    auto& rbf = net.add<RbfLayer>(4, arch.rbf_hidden, arch.classes);
    rbf.init_from_features(norm_features, rng);
    net.add<SoftmaxLayer>();
    return net;
}

Network build_cn(const MclArchConfig& arch, Rng& rng) {
    Network net;
    net.add<DenseLayer>(cn_input_size(arch), arch.cn_hidden[0]).init(rng);
    net.add<ReluLayer>();
    net.add<DenseLayer>(arch.cn_hidden[0], arch.cn_hidden[1]).init(rng);
    net.add<ReluLayer>();
    net.add<DenseLayer>(arch.cn_hidden[1], 2 * arch.classes).init(rng);
    net.add<SoftmaxLayer>();
    return net;
}

namespace {

double norm01(double x, double lo, double hi) {
    const double span = hi > lo ? hi - lo : 1.0;
    return (x - lo) / span;
}

Tensor fn1_input(const MclModel& m, const RealMat& w) {
    if (w.rows != m.arch.tds_width || w.cols != m.arch.doppler_bins)
        throw std::invalid_argument("fn1: TDS window is " + std::to_string(w.rows) + "x" +
                                    std::to_string(w.cols) + ", model expects " +
                                    std::to_string(m.arch.tds_width) + "x" +
                                    std::to_string(m.arch.doppler_bins));
    Tensor t({1, w.rows, w.cols});
    for (std::size_t i = 0; i < w.v.size(); ++i)
        t.values[i] = norm01(w.v[i], m.tds_min, m.tds_max);
    return t;
}

Tensor fn2_input(const MclModel& m, const GaitFeatures& f) {
    const std::array<double, 4> raw = {f.f1, f.f2, f.f3, f.f4};
    Tensor t({4});
    for (std::size_t i = 0; i < 4; ++i) {
        if (!std::isfinite(raw[i]))
            throw std::invalid_argument("fn2: non-finite feature f" + std::to_string(i + 1));
        t[i] = norm01(raw[i], m.feat_min[i], m.feat_max[i]);
    }
    return t;
}

Tensor cn_input(const MclModel& m, const RealMat& w, const GaitFeatures& f) {
    Tensor tds = fn1_input(m, w);
    Tensor feats = fn2_input(m, f);
    Tensor t({tds.size() + 4});
    std::copy(tds.values.begin(), tds.values.end(), t.values.begin());
    std::copy(feats.values.begin(), feats.values.end(), t.values.begin() + static_cast<std::ptrdiff_t>(tds.size()));
    return t;
}

}  // namespace

Tensor fn1_forward(MclModel& model, const RealMat& tds_window) {
    return model.fn1.forward(fn1_input(model, tds_window));
}

Tensor fn2_forward(MclModel& model, const GaitFeatures& features) {
    return model.fn2.forward(fn2_input(model, features));
}

Tensor cn_forward(MclModel& model, const RealMat& tds_window, const GaitFeatures& features) {
    return model.cn.forward(cn_input(model, tds_window, features));
}

Tensor fuse(const Tensor& p1, const Tensor& p2, const Tensor& w) {
    const std::size_t x = p1.size();
    if (p2.size() != x || w.size() != 2 * x)
        throw std::invalid_argument("fuse: need |p1| = |p2| = X and |w| = 2X");
    Tensor fused({x});
    for (std::size_t i = 0; i < x; ++i) fused[i] = p1[i] * w[i] + p2[i] * w[x + i];
    return fused;
}

FusionResult mcl_forward(MclModel& model, const MclSample& sample) {
    FusionResult r;
    r.p1 = fn1_forward(model, sample.tds_window);
    r.p2 = fn2_forward(model, sample.features);
    r.w = cn_forward(model, sample.tds_window, sample.features);
    r.fused = fuse(r.p1, r.p2, r.w);
    return r;
}

namespace {

struct PreparedSample {
    Tensor fn1_in, fn2_in, cn_in, label;
    int label_index;
};

PreparedSample prepare(const MclModel& m, const MclSample& s) {
    PreparedSample p;
    p.fn1_in = fn1_input(m, s.tds_window);
    p.fn2_in = fn2_input(m, s.features);
    p.cn_in = cn_input(m, s.tds_window, s.features);
    p.label = one_hot(static_cast<std::size_t>(s.label), m.arch.classes);
    p.label_index = s.label;
    return p;
}

/// Forward through all three nets; loss gradient hits P, then splits into
/// the three branches through the fusion rule.
double forward_backward(MclModel& m, const PreparedSample& s, std::size_t batch_n) {
    const std::size_t x = m.arch.classes;
    Tensor p1 = m.fn1.forward(s.fn1_in);
    Tensor p2 = m.fn2.forward(s.fn2_in);
    Tensor w = m.cn.forward(s.cn_in);
    Tensor fused = fuse(p1, p2, w);

    Tensor gp = softmax_ce_grad(s.label, fused, batch_n);
    Tensor gp1({x}), gp2({x}), gw({2 * x});
    for (std::size_t i = 0; i < x; ++i) {
        gp1[i] = gp[i] * w[i];
        gp2[i] = gp[i] * w[x + i];
        gw[i] = gp[i] * p1[i];
        gw[x + i] = gp[i] * p2[i];
    }
    m.fn1.backward(gp1);
    m.fn2.backward(gp2);
    m.cn.backward(gw);

    // CE(label, softmax(P)) for the history
    double mx = fused[0];
    for (std::size_t i = 1; i < x; ++i) mx = std::max(mx, fused[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < x; ++i) sum += std::exp(fused[i] - mx);
    double prob = std::exp(fused[static_cast<std::size_t>(s.label_index)] - mx) / sum;
    return -std::log(std::max(prob, 1e-12));
}

double sample_loss(MclModel& m, const PreparedSample& s) {
    Tensor p1 = m.fn1.forward(s.fn1_in);
    Tensor p2 = m.fn2.forward(s.fn2_in);
    Tensor w = m.cn.forward(s.cn_in);
    Tensor fused = fuse(p1, p2, w);
    const std::size_t x = fused.size();
    double mx = fused[0];
    for (std::size_t i = 1; i < x; ++i) mx = std::max(mx, fused[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < x; ++i) sum += std::exp(fused[i] - mx);
    double prob = std::exp(fused[static_cast<std::size_t>(s.label_index)] - mx) / sum;
    return -std::log(std::max(prob, 1e-12));
}

}  // namespace

std::pair<MclModel, std::vector<MclHistoryEntry>> train_mcl(const std::vector<MclSample>& train,
                                                            const MclArchConfig& arch,
                                                            const TrainConfig& cfg,
                                                            const std::vector<MclSample>* test) {
    if (train.empty()) throw std::invalid_argument("train_mcl: empty training set");
    std::set<int> labels;
    for (const auto& s : train) {
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= arch.classes)
            throw std::invalid_argument("train_mcl: label outside [0, X)");
        labels.insert(s.label);
    }
    if (labels.size() < 2)
        throw std::invalid_argument("train_mcl: dataset holds a single class");

    MclModel model;
    model.arch = arch;
    model.tds_min = train.front().tds_window.v.front();
    model.tds_max = model.tds_min;
    model.feat_min = {1e300, 1e300, 1e300, 1e300};
    model.feat_max = {-1e300, -1e300, -1e300, -1e300};
    for (const auto& s : train) {
        for (double v : s.tds_window.v) {
            model.tds_min = std::min(model.tds_min, v);
            model.tds_max = std::max(model.tds_max, v);
        }
        const std::array<double, 4> f = {s.features.f1, s.features.f2, s.features.f3,
                                         s.features.f4};
        for (std::size_t i = 0; i < 4; ++i) {
            model.feat_min[i] = std::min(model.feat_min[i], f[i]);
            model.feat_max[i] = std::max(model.feat_max[i], f[i]);
        }
    }

    Rng rng(cfg.rng_seed);
    model.fn1 = build_fn1(arch, rng);
    std::vector<Tensor> norm_feats;
    norm_feats.reserve(train.size());
    for (const auto& s : train) norm_feats.push_back(fn2_input(model, s.features));
    model.fn2 = build_fn2(arch, norm_feats, rng);
    model.cn = build_cn(arch, rng);

    std::vector<PreparedSample> prepared;
    prepared.reserve(train.size());
    for (const auto& s : train) prepared.push_back(prepare(model, s));
    std::vector<PreparedSample> test_prepared;
    if (test)
        for (const auto& s : *test) test_prepared.push_back(prepare(model, s));

    std::vector<std::size_t> order(prepared.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<MclHistoryEntry> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - pos);
            model.fn1.zero_grads();
            model.fn2.zero_grads();
            model.cn.zero_grads();
            for (std::size_t i = 0; i < n; ++i)
                epoch_loss += forward_backward(model, prepared[order[pos + i]], n);
            sgd_step(model.fn1, cfg.learning_rate);
            sgd_step(model.fn2, cfg.learning_rate);
            sgd_step(model.cn, cfg.learning_rate);
            pos += n;
        }
        MclHistoryEntry entry;
        entry.epoch = epoch;
        entry.loss_train = epoch_loss / static_cast<double>(prepared.size());
        if (test && !test_prepared.empty()) {
            double tl = 0.0;
            for (const auto& s : test_prepared) tl += sample_loss(model, s);
            entry.loss_test = tl / static_cast<double>(test_prepared.size());
        }
        history.push_back(entry);
    }
    return {std::move(model), std::move(history)};
}

MclMetrics evaluate(MclModel& model, const std::vector<MclSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
    const std::size_t x = model.arch.classes;
    MclMetrics m;
    m.confusion.assign(x, std::vector<std::size_t>(x, 0));
    std::size_t correct = 0;
    for (const auto& s : samples) {
        FusionResult r = mcl_forward(model, s);
        const std::size_t decided = argmax_index(r.fused);
        m.confusion[static_cast<std::size_t>(s.label)][decided] += 1;
        if (decided == static_cast<std::size_t>(s.label)) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    m.per_class.assign(x, 0.0);
    for (std::size_t i = 0; i < x; ++i) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < x; ++j) row += m.confusion[i][j];
        m.per_class[i] = row ? static_cast<double>(m.confusion[i][i]) / static_cast<double>(row)
                             : 0.0;
    }
    return m;
}

void save_mcl(const std::filesystem::path& path, MclModel& model) {
    std::vector<CheckpointEntry> entries;
    for (auto& e : network_entries(model.fn1, "fn1")) entries.push_back(std::move(e));
    for (auto& e : network_entries(model.fn2, "fn2")) entries.push_back(std::move(e));
    for (auto& e : network_entries(model.cn, "cn")) entries.push_back(std::move(e));
    entries.push_back(scalar_entry("arch/classes", static_cast<double>(model.arch.classes)));
    entries.push_back(scalar_entry("arch/tds_width", static_cast<double>(model.arch.tds_width)));
    entries.push_back(
        scalar_entry("arch/doppler_bins", static_cast<double>(model.arch.doppler_bins)));
    entries.push_back(
        scalar_entry("arch/branch_channels", static_cast<double>(model.arch.branch_channels)));
    entries.push_back(
        scalar_entry("arch/dense_hidden", static_cast<double>(model.arch.dense_hidden)));
    entries.push_back(scalar_entry("arch/cn_hidden0", static_cast<double>(model.arch.cn_hidden[0])));
    entries.push_back(scalar_entry("arch/cn_hidden1", static_cast<double>(model.arch.cn_hidden[1])));
    entries.push_back(scalar_entry("arch/rbf_hidden", static_cast<double>(model.arch.rbf_hidden)));
    entries.push_back(scalar_entry("norm/tds_min", model.tds_min));
    entries.push_back(scalar_entry("norm/tds_max", model.tds_max));
    for (std::size_t i = 0; i < 4; ++i) {
        entries.push_back(scalar_entry("norm/feat_min" + std::to_string(i), model.feat_min[i]));
        entries.push_back(scalar_entry("norm/feat_max" + std::to_string(i), model.feat_max[i]));
    }
    write_checkpoint(path, entries);
}

MclModel load_mcl(const std::filesystem::path& path) {
    const auto entries = read_checkpoint(path);
    MclModel model;
    model.fn1 = network_from_entries(entries, "fn1");
    model.fn2 = network_from_entries(entries, "fn2");
    model.cn = network_from_entries(entries, "cn");
    model.arch.classes = static_cast<std::size_t>(scalar_value(entries, "arch/classes"));
    model.arch.tds_width = static_cast<std::size_t>(scalar_value(entries, "arch/tds_width"));
    model.arch.doppler_bins = static_cast<std::size_t>(scalar_value(entries, "arch/doppler_bins"));
    model.arch.branch_channels =
        static_cast<std::size_t>(scalar_value(entries, "arch/branch_channels"));
    model.arch.dense_hidden = static_cast<std::size_t>(scalar_value(entries, "arch/dense_hidden"));
    model.arch.cn_hidden[0] = static_cast<std::size_t>(scalar_value(entries, "arch/cn_hidden0"));
    model.arch.cn_hidden[1] = static_cast<std::size_t>(scalar_value(entries, "arch/cn_hidden1"));
    model.arch.rbf_hidden = static_cast<std::size_t>(scalar_value(entries, "arch/rbf_hidden"));
    model.tds_min = scalar_value(entries, "norm/tds_min");
    model.tds_max = scalar_value(entries, "norm/tds_max");
    for (std::size_t i = 0; i < 4; ++i) {
        model.feat_min[i] = scalar_value(entries, "norm/feat_min" + std::to_string(i));
        model.feat_max[i] = scalar_value(entries, "norm/feat_max" + std::to_string(i));
    }
    return model;
}

void write_confusion_csv(const std::filesystem::path& path, const MclMetrics& metrics) {
    std::ostringstream ss;
    for (const auto& row : metrics.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) ss << (j ? "," : "") << row[j];
        ss << "\n";
    }
    atomic_write(path, ss.str());
}

}  // namespace demcl
