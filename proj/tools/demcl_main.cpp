// demcl: micro-Doppler pedestrian recognition pipeline.
// Subcommands cover simulation, range-Doppler processing, gait features,
// adversarial data enhancement, and the fusion classifier.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "demcl/io.hpp"
#include "demcl/pipeline.hpp"
#include "demcl/rdgan.hpp"

namespace fs = std::filesystem;
using namespace demcl;

namespace {

/// Resolved-parameter provenance written next to every output.
void write_provenance(const fs::path& target, const std::string& text) {
    atomic_write(target.string() + ".run.txt", text);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double sidecar_num(const fs::path& data_file, const std::string& key, double fallback) {
    const fs::path meta = data_file.string() + ".meta";
    if (!fs::exists(meta)) return fallback;
    try {
        return std::stod(sidecar_value(read_sidecar(meta), key));
    } catch (const std::exception&) {
        return fallback;
    }
}

/// Labeled RDM sequences from every .rdm file in a directory.
struct RdmDirEntry {
    fs::path path;
    int label;
    double frame_rate;
    std::vector<RealMat> rdms;
};

std::vector<RdmDirEntry> load_rdm_dir(const fs::path& dir, double default_fps) {
    std::vector<RdmDirEntry> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".rdm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        RdmDirEntry entry;
        entry.path = f;
        entry.label = static_cast<int>(sidecar_num(f, "label", -1));
        entry.frame_rate = sidecar_num(f, "frame_rate", default_fps);
        entry.rdms = read_rdm1(f);
        out.push_back(std::move(entry));
    }
    if (out.empty()) throw std::runtime_error("no .rdm files in " + dir.string());
    return out;
}

std::vector<MclSample> dir_to_samples(const fs::path& dir, const PipelineConfig& cfg,
                                      std::size_t stride, bool generated) {
    std::vector<MclSample> samples;
    for (auto& entry : load_rdm_dir(dir, cfg.radar.frame_rate)) {
        if (entry.label < 0)
            throw std::runtime_error("missing label sidecar for " + entry.path.string());
        TimeDopplerSpectrogram tds = mats_to_tds(entry.rdms, entry.frame_rate);
        auto s = samples_from_tds(tds, entry.label, cfg.windows.tds_width, stride,
                                  cfg.windows.features, generated);
        samples.insert(samples.end(), s.begin(), s.end());
    }
    return samples;
}

void write_history_csv(const fs::path& path, const std::vector<MclHistoryEntry>& history) {
    std::ostringstream ss;
    ss.precision(12);
    ss << "epoch,loss_train,loss_test\n";
    for (const auto& h : history) {
        ss << h.epoch << "," << h.loss_train << ",";
        if (h.loss_test) ss << *h.loss_test;
        ss << "\n";
    }
    atomic_write(path, ss.str());
}

std::vector<MclHistoryEntry> read_history_csv(const fs::path& path) {
    std::vector<MclHistoryEntry> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MclHistoryEntry h;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        h.epoch = std::stoul(field);
        std::getline(ss, field, ',');
        h.loss_train = std::stod(field);
        if (std::getline(ss, field, ',') && !field.empty()) h.loss_test = std::stod(field);
        out.push_back(h);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"micro-Doppler pedestrian recognition pipeline"};
    app.require_subcommand(1);

    // ------------------------------------------------------------ simulate
    auto* sim = app.add_subcommand("simulate", "synthesize labeled pedestrian frame files");
    std::string sim_config, sim_out;
    sim->add_option("--config", sim_config, "pipeline config file")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->callback([&] {
        PipelineConfig cfg = load_config(sim_config);
        const auto seqs = make_dataset(cfg.pedestrians, cfg.radar, cfg.duration_s);
        write_dataset(sim_out, seqs);
        write_provenance(fs::path(sim_out) / "dataset", config_to_text(cfg));
        std::cout << "wrote " << seqs.size() << " sequences to " << sim_out << "\n";
    });

    // ----------------------------------------------------------------- rdm
    auto* rdm = app.add_subcommand("rdm", "frames -> range-Doppler map file");
    std::string rdm_in, rdm_out;
    std::size_t rdm_lo = 2, rdm_hi = 34, rdm_width = 1;
    bool rdm_denoise = false;
    double rdm_pct = 75.0, rdm_margin = 6.0, rdm_atten = 0.0;
    rdm->add_option("--in", rdm_in, "RDF1 frame file")->required();
    rdm->add_option("--out", rdm_out, "output RDM1 file")->required();
    rdm->add_option("--range-lo", rdm_lo, "first kept range bin");
    rdm->add_option("--range-hi", rdm_hi, "one past the last kept range bin");
    rdm->add_flag("--denoise", rdm_denoise, "percentile noise-floor clamping");
    rdm->add_option("--percentile", rdm_pct, "denoise percentile");
    rdm->add_option("--margin", rdm_margin, "denoise margin dB");
    rdm->add_option("--suppress-db", rdm_atten, "zero-Doppler attenuation dB");
    rdm->add_option("--suppress-width", rdm_width, "zero-Doppler half width");
    rdm->callback([&] {
        const auto frames = read_rdf1(rdm_in);
        RdmStageConfig stage;
        stage.range_bin_lo = rdm_lo;
        stage.range_bin_hi = rdm_hi;
        stage.denoise = rdm_denoise;
        stage.denoise_cfg = {rdm_pct, rdm_margin};
        stage.suppress_atten_db = rdm_atten;
        stage.suppress_half_width = rdm_width;
        const auto rdms = frames_to_rdms(frames, stage);
        std::vector<RealMat> mats;
        mats.reserve(rdms.size());
        for (const auto& r : rdms) mats.push_back(r.magnitude_db);
        write_rdm1(rdm_out, mats);
        std::ostringstream fps;
        fps.precision(12);
        fps << frames.front().frame_rate;
        write_sidecar(rdm_out + ".meta",
                      {{"label", std::to_string(static_cast<int>(
                                     sidecar_num(rdm_in, "label", -1)))},
                       {"frame_rate", fps.str()}});
        std::ostringstream prov;
        prov << "command = rdm\nin = " << rdm_in << "\nrange_bin_lo = " << rdm_lo
             << "\nrange_bin_hi = " << rdm_hi << "\ndenoise = " << rdm_denoise
             << "\npercentile = " << rdm_pct << "\nmargin_db = " << rdm_margin
             << "\nsuppress_db = " << rdm_atten << "\nsuppress_width = " << rdm_width << "\n";
        write_provenance(rdm_out, prov.str());
        std::cout << "wrote " << mats.size() << " RDMs to " << rdm_out << "\n";
    });

    // ----------------------------------------------------------------- tds
    auto* tds_cmd = app.add_subcommand("tds", "RDM sequence -> time-Doppler spectrogram");
    std::string tds_in, tds_out;
    tds_cmd->add_option("--in", tds_in, "RDM1 file")->required();
    tds_cmd->add_option("--out", tds_out, "output TDS1 file")->required();
    tds_cmd->callback([&] {
        const auto mats = read_rdm1(tds_in);
        const double fps = sidecar_num(tds_in, "frame_rate", 15.0);
        TimeDopplerSpectrogram tds = mats_to_tds(mats, fps);
        write_tds1(tds_out, tds.profiles);
        std::ostringstream fpss;
        fpss.precision(12);
        fpss << fps;
        write_sidecar(tds_out + ".meta",
                      {{"label", std::to_string(static_cast<int>(
                                     sidecar_num(tds_in, "label", -1)))},
                       {"frame_rate", fpss.str()}});
        write_provenance(tds_out, "command = tds\nin = " + tds_in + "\n");
        std::cout << "wrote " << tds.n() << "x" << tds.doppler_bins() << " TDS to " << tds_out
                  << "\n";
    });

    // ------------------------------------------------------------ features
    auto* feat = app.add_subcommand("features", "TDS -> gait feature CSV");
    std::string feat_in, feat_out;
    std::size_t feat_z = 165, feat_stride = 0;
    double feat_fps = 0.0;
    int feat_label = -1;
    feat->add_option("--in", feat_in, "TDS1 file")->required();
    feat->add_option("--out", feat_out, "output CSV")->required();
    feat->add_option("--window", feat_z, "frames per feature window (Z)");
    feat->add_option("--stride", feat_stride, "window stride (default Z)");
    feat->add_option("--fps", feat_fps, "frame rate override");
    feat->add_option("--label", feat_label, "label override");
    feat->callback([&] {
        RealMat mat = read_tds1(feat_in);
        TimeDopplerSpectrogram tds;
        tds.profiles = mat;
        tds.frame_rate = feat_fps > 0.0 ? feat_fps : sidecar_num(feat_in, "frame_rate", 15.0);
        int label = feat_label >= 0 ? feat_label
                                    : static_cast<int>(sidecar_num(feat_in, "label", 0));
        FeatureWindowConfig fcfg;
        fcfg.window_frames = feat_z;
        fcfg.envelope_threshold_db = 40.0;
        fcfg.fallback_period_s = 1.0;
        const std::size_t stride = feat_stride ? feat_stride : feat_z;
        const auto starts = window_starts(tds.n(), feat_z, stride);
        const auto feats = features_for_samples(tds, starts, feat_z, fcfg);
        std::vector<FeatureCsvRow> rows;
        for (std::size_t i = 0; i < feats.size(); ++i)
            rows.push_back({"w" + std::to_string(starts[i]), label, feats[i]});
        write_features_csv(feat_out, rows);
        write_provenance(feat_out, "command = features\nin = " + feat_in +
                                       "\nwindow = " + std::to_string(feat_z) + "\n");
        std::cout << "wrote " << rows.size() << " feature rows to " << feat_out << "\n";
    });

    // ------------------------------------------------------------ gan-train
    auto* gtrain = app.add_subcommand("gan-train", "per-class RDGAN training");
    std::string gt_data, gt_out;
    GanTrainConfig gt_cfg;
    int gt_label = 0;
    std::size_t gt_frames = 0;
    gtrain->add_option("--data", gt_data, "RDM1 file of one class")->required();
    gtrain->add_option("--out", gt_out, "output checkpoint")->required();
    gtrain->add_option("--label", gt_label, "class label carried by generated data");
    gtrain->add_option("--epochs", gt_cfg.epochs, "training epochs");
    gtrain->add_option("--lr", gt_cfg.learning_rate, "learning rate");
    gtrain->add_option("--batch", gt_cfg.batch_size, "samples per update (0 = all)");
    gtrain->add_option("--seed", gt_cfg.rng_seed, "RNG seed");
    gtrain->add_option("--frames", gt_frames, "leading frames used (0 = all)");
    gtrain->callback([&] {
        auto mats = read_rdm1(gt_data);
        if (gt_frames > 0 && gt_frames < mats.size()) mats.resize(gt_frames);
        auto [models, history] = train_gan(mats, gt_cfg);
        save_rdgan(gt_out, models);
        // label rides in a sidecar so generated data stays labeled
        std::ostringstream fps;
        fps.precision(12);
        fps << sidecar_num(gt_data, "frame_rate", 15.0);
        write_sidecar(gt_out + ".meta",
                      {{"label", std::to_string(gt_label)}, {"frame_rate", fps.str()}});
        write_gan_loss_csv(gt_out + ".loss.csv", history);
        std::ostringstream prov;
        prov << "command = gan-train\ndata = " << gt_data << "\nepochs = " << gt_cfg.epochs
             << "\nlearning_rate = " << gt_cfg.learning_rate << "\nseed = " << gt_cfg.rng_seed
             << "\n";
        write_provenance(gt_out, prov.str());
        std::cout << "final losses g=" << history.loss_g.back() << " ds=" << history.loss_ds.back()
                  << " dt=" << history.loss_dt.back() << "\n";
    });

    // --------------------------------------------------------- gan-generate
    auto* ggen = app.add_subcommand("gan-generate", "generate RDM sequences");
    std::string gg_model, gg_seeds, gg_out, gg_mode = "one-step";
    ggen->add_option("--model", gg_model, "RDGAN checkpoint")->required();
    ggen->add_option("--seed-frames", gg_seeds, "RDM1 file of seed frames")->required();
    ggen->add_option("--out", gg_out, "output RDM1 file")->required();
    ggen->add_option("--mode", gg_mode, "one-step | rollout:N");
    ggen->callback([&] {
        RdganModels models = load_rdgan(gg_model);
        const auto seeds = read_rdm1(gg_seeds);
        std::vector<RealMat> generated;
        if (gg_mode == "one-step") {
            generated = generate_one_step(models, seeds);
        } else if (gg_mode.rfind("rollout:", 0) == 0) {
            generated = generate_rollout(models, seeds,
                                         std::stoul(gg_mode.substr(std::string("rollout:").size())));
        } else {
            throw std::runtime_error("unknown mode '" + gg_mode + "'");
        }
        write_rdm1(gg_out, generated);
        std::ostringstream fps;
        fps.precision(12);
        fps << sidecar_num(gg_seeds, "frame_rate", 15.0);
        write_sidecar(gg_out + ".meta",
                      {{"label", std::to_string(static_cast<int>(
                                     sidecar_num(gg_model, "label", -1)))},
                       {"frame_rate", fps.str()},
                       {"generated", "1"}});
        write_provenance(gg_out, "command = gan-generate\nmodel = " + gg_model +
                                     "\nmode = " + gg_mode + "\n");
        std::cout << "wrote " << generated.size() << " generated RDMs to " << gg_out << "\n";
    });

    // ------------------------------------------------------------ mcl-train
    auto* mtrain = app.add_subcommand("mcl-train", "train the fusion classifier");
    std::string mt_real, mt_generated, mt_out, mt_config;
    TrainConfig mt_cfg;
    mt_cfg.epochs = 60;
    mt_cfg.batch_size = 32;
    double mt_test_frac = 0.2;
    mtrain->add_option("--real", mt_real, "directory of real class .rdm files")->required();
    mtrain->add_option("--generated", mt_generated, "directory of generated .rdm files");
    mtrain->add_option("--out", mt_out, "output checkpoint")->required();
    mtrain->add_option("--config", mt_config, "pipeline config for window parameters");
    mtrain->add_option("--epochs", mt_cfg.epochs, "training epochs");
    mtrain->add_option("--batch", mt_cfg.batch_size, "mini-batch size");
    mtrain->add_option("--lr", mt_cfg.learning_rate, "learning rate");
    mtrain->add_option("--seed", mt_cfg.rng_seed, "RNG seed");
    mtrain->add_option("--test-frac", mt_test_frac, "held-out fraction per class sequence");
    mtrain->callback([&] {
        PipelineConfig cfg = mt_config.empty() ? desk_config() : load_config(mt_config);
        cfg.windows.test_fraction = mt_test_frac;
        // frames were already processed to RDMs; split each class sequence
        std::vector<MclSample> train, test;
        std::size_t doppler_bins = 0;
        std::set<int> labels;
        for (auto& entry : load_rdm_dir(mt_real, cfg.radar.frame_rate)) {
            if (entry.label < 0)
                throw std::runtime_error("missing label sidecar for " + entry.path.string());
            labels.insert(entry.label);
            const std::size_t n = entry.rdms.size();
            const std::size_t split = static_cast<std::size_t>(
                std::lround((1.0 - mt_test_frac) * static_cast<double>(n)));
            std::vector<RealMat> train_rdms(entry.rdms.begin(),
                                            entry.rdms.begin() + static_cast<std::ptrdiff_t>(split));
            std::vector<RealMat> test_rdms(entry.rdms.begin() + static_cast<std::ptrdiff_t>(split),
                                           entry.rdms.end());
            auto tr = samples_from_tds(mats_to_tds(train_rdms, entry.frame_rate), entry.label,
                                       cfg.windows.tds_width, cfg.windows.train_stride,
                                       cfg.windows.features, false);
            auto te = samples_from_tds(mats_to_tds(test_rdms, entry.frame_rate), entry.label,
                                       cfg.windows.tds_width, cfg.windows.test_stride,
                                       cfg.windows.features, false);
            doppler_bins = train_rdms.front().cols;
            train.insert(train.end(), tr.begin(), tr.end());
            test.insert(test.end(), te.begin(), te.end());
        }
        if (!mt_generated.empty())
            for (auto& s : dir_to_samples(mt_generated, cfg, cfg.windows.train_stride, true))
                train.push_back(std::move(s));

        MclArchConfig arch = cfg.mcl_arch;
        arch.classes = labels.size();
        arch.tds_width = cfg.windows.tds_width;
        arch.doppler_bins = doppler_bins;
        auto [model, history] = train_mcl(train, arch, mt_cfg, &test);
        save_mcl(mt_out, model);
        write_history_csv(mt_out + ".history.csv", history);
        const auto metrics = evaluate(model, test);
        write_provenance(mt_out, "command = mcl-train\nreal = " + mt_real + "\ngenerated = " +
                                     mt_generated + "\nepochs = " + std::to_string(mt_cfg.epochs) +
                                     "\nseed = " + std::to_string(mt_cfg.rng_seed) + "\n");
        std::cout << "train samples " << train.size() << ", held-out accuracy "
                  << metrics.accuracy << "\n";
    });

    // ------------------------------------------------------------- mcl-eval
    auto* meval = app.add_subcommand("mcl-eval", "evaluate a trained classifier");
    std::string me_model, me_test, me_report, me_confusion, me_config;
    meval->add_option("--model", me_model, "MCL checkpoint")->required();
    meval->add_option("--test", me_test, "directory of labeled .rdm files")->required();
    meval->add_option("--report", me_report, "metrics JSON output")->required();
    meval->add_option("--confusion", me_confusion, "confusion CSV output");
    meval->add_option("--config", me_config, "pipeline config for window parameters");
    meval->callback([&] {
        PipelineConfig cfg = me_config.empty() ? desk_config() : load_config(me_config);
        MclModel model = load_mcl(me_model);
        cfg.windows.tds_width = model.arch.tds_width;
        auto samples = dir_to_samples(me_test, cfg, cfg.windows.test_stride, false);
        const auto metrics = evaluate(model, samples);
        const auto history = read_history_csv(me_model + ".history.csv");
        atomic_write(me_report, metrics_json(metrics, history));
        if (!me_confusion.empty()) write_confusion_csv(me_confusion, metrics);
        write_provenance(me_report, "command = mcl-eval\nmodel = " + me_model + "\ntest = " +
                                        me_test + "\n");
        std::cout << "accuracy " << metrics.accuracy << " on " << samples.size() << " samples\n";
    });

    // -------------------------------------------------------------- report
    auto* report = app.add_subcommand("report", "metrics JSON -> plottable CSVs");
    std::string rp_metrics, rp_dir;
    report->add_option("--metrics", rp_metrics, "metrics JSON")->required();
    report->add_option("--emit-csv", rp_dir, "output directory")->required();
    report->callback([&] {
        write_report_csvs(rp_dir, slurp(rp_metrics));
        std::cout << "wrote report CSVs to " << rp_dir << "\n";
    });

    // ------------------------------------------------------------- pipeline
    auto* pipe = app.add_subcommand("pipeline", "simulate, train and evaluate end to end");
    std::string pl_config, pl_out;
    pipe->add_option("--config", pl_config, "pipeline config file")->required();
    pipe->add_option("--out", pl_out, "output directory")->required();
    pipe->callback([&] {
        PipelineConfig cfg = load_config(pl_config);
        fs::create_directories(pl_out);
        PipelineResult result = run_pipeline(cfg);
        write_metrics_json(fs::path(pl_out) / "metrics.json", result.metrics, result.history);
        save_mcl(fs::path(pl_out) / "mcl.ckpt", result.model);
        write_provenance(fs::path(pl_out) / "pipeline", config_to_text(cfg));
        std::cout << "accuracy " << result.metrics.accuracy << " (train " << result.real_train
                  << " real + " << result.generated_train << " generated, test "
                  << result.test_count << ")\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
