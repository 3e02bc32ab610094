#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demcl/config.hpp"
#include "demcl/mcl.hpp"
#include "demcl/simkit.hpp"

namespace demcl {

/// 2D-FFT, range gate, optional denoise, zero-Doppler suppression.
std::vector<RangeDopplerMap> frames_to_rdms(const std::vector<RadarFrame>& frames,
                                            const RdmStageConfig& cfg);

TimeDopplerSpectrogram rdms_to_tds(const std::vector<RangeDopplerMap>& rdms, double frame_rate);

/// Same, for bare dB matrices (generated frames carry no axis metadata).
TimeDopplerSpectrogram mats_to_tds(const std::vector<RealMat>& mats, double frame_rate);

/// Windows the spectrogram and attaches per-window gait features.
std::vector<MclSample> samples_from_tds(const TimeDopplerSpectrogram& tds, int label,
                                        std::size_t width, std::size_t stride,
                                        const FeatureWindowConfig& features, bool generated);

/// One class's processed RDMs split by contiguous time blocks.
struct ClassSplit {
    int label = 0;
    double frame_rate = 0.0;
    std::vector<RealMat> train_rdms;
    std::vector<RealMat> test_rdms;
};

struct AssembledData {
    std::vector<MclSample> train;
    std::vector<MclSample> test;
    std::vector<ClassSplit> splits;
    std::size_t doppler_bins = 0;
};

/// Frames -> RDMs -> per-region TDS -> windows+features, with the train /
/// test regions windowed independently so no window straddles the split.
AssembledData assemble_dataset(const std::vector<LabeledSequence>& seqs,
                               const PipelineConfig& cfg);

/// Per-class RDGAN: train on the leading train-region frames, generate
/// one-step over the full train region, window, and trim to
/// round(generated_ratio * real_count) samples.
std::vector<MclSample> generated_samples_for_class(const ClassSplit& split,
                                                   const PipelineConfig& cfg,
                                                   std::size_t real_count);

struct PipelineResult {
    MclModel model;
    MclMetrics metrics;
    std::vector<MclHistoryEntry> history;
    std::size_t real_train = 0;
    std::size_t generated_train = 0;
    std::size_t test_count = 0;
};

/// Synthesize the configured pedestrians and run the full train/eval loop.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Same, on an existing dataset (e.g. loaded from RDF1 files).
PipelineResult run_pipeline_on(const std::vector<LabeledSequence>& seqs,
                               const PipelineConfig& cfg);

/// {accuracy, per_class, confusion, loss_history} as deterministic JSON.
std::string metrics_json(const MclMetrics& metrics, const std::vector<MclHistoryEntry>& history);
void write_metrics_json(const std::filesystem::path& path, const MclMetrics& metrics,
                        const std::vector<MclHistoryEntry>& history);

/// Splits a metrics JSON into plottable CSV files (accuracy.csv,
/// confusion.csv, loss_curve.csv) under dir.
void write_report_csvs(const std::filesystem::path& dir, const std::string& metrics_json_text);

}  // namespace demcl
