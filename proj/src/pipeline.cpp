#include "demcl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "demcl/io.hpp"
#include "demcl/rdgan.hpp"

namespace demcl {

std::vector<RangeDopplerMap> frames_to_rdms(const std::vector<RadarFrame>& frames,
                                            const RdmStageConfig& cfg) {
    std::vector<RangeDopplerMap> rdms;
    rdms.reserve(frames.size());
    for (const auto& f : frames) {
        RangeDopplerMap rdm = to_rdm(f, {cfg.range_bin_lo, cfg.range_bin_hi});
        if (cfg.denoise) rdm = denoise_rdm(rdm, cfg.denoise_cfg);
        if (cfg.suppress_atten_db > 0.0)
            rdm = suppress_zero_doppler(rdm, cfg.suppress_atten_db, cfg.suppress_half_width);
        rdms.push_back(std::move(rdm));
    }
    return rdms;
}

TimeDopplerSpectrogram rdms_to_tds(const std::vector<RangeDopplerMap>& rdms, double frame_rate) {
    std::vector<std::vector<double>> profiles;
    profiles.reserve(rdms.size());
    for (const auto& r : rdms) profiles.push_back(doppler_profile(r));
    return build_tds(profiles, frame_rate);
}

TimeDopplerSpectrogram mats_to_tds(const std::vector<RealMat>& mats, double frame_rate) {
    std::vector<std::vector<double>> profiles;
    profiles.reserve(mats.size());
    for (const auto& m : mats) {
        std::vector<double> e(m.cols, 0.0);
        for (std::size_t u = 0; u < m.rows; ++u)
            for (std::size_t v = 0; v < m.cols; ++v) e[v] += m.at(u, v);
        profiles.push_back(std::move(e));
    }
    return build_tds(profiles, frame_rate);
}

std::vector<MclSample> samples_from_tds(const TimeDopplerSpectrogram& tds, int label,
                                        std::size_t width, std::size_t stride,
                                        const FeatureWindowConfig& features, bool generated) {
    std::vector<MclSample> samples;
    const auto starts = window_starts(tds.n(), width, stride);
    if (starts.empty()) return samples;
    const auto feats = features_for_samples(tds, starts, width, features);
    samples.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        MclSample s;
        s.tds_window = tds_window(tds, starts[i], width).profiles;
        s.features = feats[i];
        s.label = label;
        s.generated = generated;
        samples.push_back(std::move(s));
    }
    return samples;
}

AssembledData assemble_dataset(const std::vector<LabeledSequence>& seqs,
                               const PipelineConfig& cfg) {
    AssembledData out;
    for (const auto& seq : seqs) {
        const auto rdms = frames_to_rdms(seq.frames, cfg.rdm);
        const double fps = seq.frames.front().frame_rate;
        const std::size_t n = rdms.size();
        const std::size_t split =
            static_cast<std::size_t>(std::lround((1.0 - cfg.windows.test_fraction) *
                                                 static_cast<double>(n)));
        if (split == 0 || split >= n)
            throw std::invalid_argument("assemble_dataset: split leaves an empty region");

        ClassSplit cs;
        cs.label = seq.profile.label;
        cs.frame_rate = fps;
        for (std::size_t i = 0; i < n; ++i)
            (i < split ? cs.train_rdms : cs.test_rdms).push_back(rdms[i].magnitude_db);

        TimeDopplerSpectrogram train_tds = mats_to_tds(cs.train_rdms, fps);
        TimeDopplerSpectrogram test_tds = mats_to_tds(cs.test_rdms, fps);
        out.doppler_bins = train_tds.doppler_bins();

        auto train = samples_from_tds(train_tds, cs.label, cfg.windows.tds_width,
                                      cfg.windows.train_stride, cfg.windows.features, false);
        auto test = samples_from_tds(test_tds, cs.label, cfg.windows.tds_width,
                                     cfg.windows.test_stride, cfg.windows.features, false);
        out.train.insert(out.train.end(), train.begin(), train.end());
        out.test.insert(out.test.end(), test.begin(), test.end());
        out.splits.push_back(std::move(cs));
    }
    return out;
}

std::vector<MclSample> generated_samples_for_class(const ClassSplit& split,
                                                   const PipelineConfig& cfg,
                                                   std::size_t real_count) {
    const std::size_t want =
        static_cast<std::size_t>(std::lround(cfg.gan.generated_ratio *
                                             static_cast<double>(real_count)));
    if (want == 0) return {};

    std::vector<RealMat> train_frames = split.train_rdms;
    if (cfg.gan.train_frames > 0 && cfg.gan.train_frames < train_frames.size())
        train_frames.resize(cfg.gan.train_frames);
    if (train_frames.size() < 4) return {};

    GanTrainConfig gan_cfg = cfg.gan.train;
    gan_cfg.rng_seed = cfg.gan.train.rng_seed + static_cast<std::uint64_t>(split.label);
    auto [models, history] = train_gan(train_frames, gan_cfg);

    const auto generated = generate_one_step(models, split.train_rdms);
    TimeDopplerSpectrogram gen_tds = mats_to_tds(generated, split.frame_rate);
    auto samples = samples_from_tds(gen_tds, split.label, cfg.windows.tds_width,
                                    cfg.windows.train_stride, cfg.windows.features, true);
    if (samples.size() > want) samples.resize(want);
    return samples;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    validate_config(cfg);
    const auto seqs = make_dataset(cfg.pedestrians, cfg.radar, cfg.duration_s);
    return run_pipeline_on(seqs, cfg);
}

PipelineResult run_pipeline_on(const std::vector<LabeledSequence>& seqs,
                               const PipelineConfig& cfg) {
    AssembledData data = assemble_dataset(seqs, cfg);

    std::vector<MclSample> train = data.train;
    std::size_t generated_count = 0;
    if (cfg.augment) {
        for (const auto& split : data.splits) {
            std::size_t real_count = 0;
            for (const auto& s : data.train)
                if (s.label == split.label) ++real_count;
            auto gen = generated_samples_for_class(split, cfg, real_count);
            generated_count += gen.size();
            train.insert(train.end(), gen.begin(), gen.end());
        }
    }

    MclArchConfig arch = cfg.mcl_arch;
    arch.tds_width = cfg.windows.tds_width;
    arch.doppler_bins = data.doppler_bins;

    PipelineResult result;
    result.real_train = data.train.size();
    result.generated_train = generated_count;
    result.test_count = data.test.size();
    auto [model, history] = train_mcl(train, arch, cfg.mcl_train, &data.test);
    result.model = std::move(model);
    result.history = std::move(history);
    result.metrics = evaluate(result.model, data.test);
    return result;
}

std::string metrics_json(const MclMetrics& metrics, const std::vector<MclHistoryEntry>& history) {
    nlohmann::json j;
    j["accuracy"] = metrics.accuracy;
    j["per_class"] = metrics.per_class;
    j["confusion"] = metrics.confusion;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : history) {
        nlohmann::json e;
        e["epoch"] = h.epoch;
        e["loss_train"] = h.loss_train;
        if (h.loss_test) e["loss_test"] = *h.loss_test;
        hist.push_back(e);
    }
    j["loss_history"] = hist;
    return j.dump(2) + "\n";
}

void write_metrics_json(const std::filesystem::path& path, const MclMetrics& metrics,
                        const std::vector<MclHistoryEntry>& history) {
    atomic_write(path, metrics_json(metrics, history));
}

void write_report_csvs(const std::filesystem::path& dir, const std::string& metrics_json_text) {
    const auto j = nlohmann::json::parse(metrics_json_text);
    std::filesystem::create_directories(dir);

    std::ostringstream acc;
    acc.precision(12);
    acc << "metric,value\n";
    acc << "accuracy," << j.at("accuracy").get<double>() << "\n";
    const auto& per_class = j.at("per_class");
    for (std::size_t i = 0; i < per_class.size(); ++i)
        acc << "class_" << i << "_accuracy," << per_class[i].get<double>() << "\n";
    atomic_write(dir / "accuracy.csv", acc.str());

    std::ostringstream conf;
    for (const auto& row : j.at("confusion")) {
        for (std::size_t i = 0; i < row.size(); ++i)
            conf << (i ? "," : "") << row[i].get<std::size_t>();
        conf << "\n";
    }
    atomic_write(dir / "confusion.csv", conf.str());

    std::ostringstream loss;
    loss.precision(12);
    loss << "epoch,loss_train,loss_test\n";
    for (const auto& e : j.at("loss_history")) {
        loss << e.at("epoch").get<std::size_t>() << "," << e.at("loss_train").get<double>() << ",";
        if (e.contains("loss_test")) loss << e.at("loss_test").get<double>();
        loss << "\n";
    }
    atomic_write(dir / "loss_curve.csv", loss.str());
}

}  // namespace demcl
