#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "demcl/checkpoint.hpp"
#include "demcl/network.hpp"
#include "demcl/radarproc.hpp"
#include "demcl/rng.hpp"

namespace demcl {

/// Inner iteration counts and schedule for adversarial training.
struct GanTrainConfig {
    std::size_t k_ds = 1;
    std::size_t k_dt = 1;
    std::size_t k_g = 1;
    std::size_t epochs = 100;
    double learning_rate = 0.0005;
    std::size_t batch_size = 0;  // samples per update; 0 = the full t-range
    std::uint64_t rng_seed = 1;
};

/// Generator (frame-to-frame FCN), spatial and temporal discriminators,
/// plus the dB normalization constants the generator was trained with.
struct RdganModels {
    Network generator;      // conv ladder 1 -> 32 -> 8 -> 1, 3x3, same padding
    Network spatial_disc;   // conv 2 -> 8 -> 16 with pooling, sigmoid head
    Network temporal_disc;  // conv 3 -> 8 -> 16 with pooling, sigmoid head
    double norm_min_db = 0.0;
    double norm_max_db = 1.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

struct GanLossHistory {
    std::vector<double> loss_g;   // one value per epoch
    std::vector<double> loss_ds;
    std::vector<double> loss_dt;
    std::size_t ds_updates = 0;
    std::size_t dt_updates = 0;
    std::size_t g_updates = 0;
};

Network build_generator(Rng& rng);
Network build_spatial_discriminator(std::size_t rows, std::size_t cols, Rng& rng);
Network build_temporal_discriminator(std::size_t rows, std::size_t cols, Rng& rng);

/// Affine dB -> [0,1] map (and back) using the dataset range.
Tensor normalize_rdm(const RealMat& rdm, double min_db, double max_db);
RealMat denormalize_rdm(const Tensor& t, double min_db, double max_db);

/// (-mean log p_real - mean log(1 - p_fake)) / 2 with eps-floored logs.
double real_fake_loss(const std::vector<double>& real_p, const std::vector<double>& fake_p);

/// (-mean log p_spatial - mean log p_temporal) / 2 on generated data.
double generator_loss_from_probs(const std::vector<double>& spatial_p,
                                 const std::vector<double>& temporal_p);

/// Next-frame prediction; output shape equals input shape.
Tensor g_predict(Network& generator, const Tensor& x);

/// Spatial-discriminator loss over batches of (condition, real, generated).
double ds_loss(Network& ds, const std::vector<Tensor>& xs, const std::vector<Tensor>& ys,
               const std::vector<Tensor>& gxs);

/// Temporal-discriminator loss over real and generated frame triples.
double dt_loss(Network& dt, const std::vector<Tensor>& real_triples,
               const std::vector<Tensor>& gen_triples);

/// Generator loss: both discriminators scored on generated data.
double g_loss(Network& ds, Network& dt, Network& g, const std::vector<Tensor>& xs,
              const std::vector<std::array<Tensor, 3>>& x_triples);

/// Adversarial training over an ordered dB RDM sequence (length >= 4).
/// Per epoch: k_ds spatial-discriminator updates, then k_dt temporal, then
/// k_g generator updates. Deterministic given the seed.
std::pair<RdganModels, GanLossHistory> train_gan(const std::vector<RealMat>& frames_db,
                                                 const GanTrainConfig& cfg);

/// The three losses evaluated on the full t-range without updating.
std::array<double, 3> evaluate_gan_losses(RdganModels& models,
                                          const std::vector<RealMat>& frames_db);

/// One generated frame per input frame.
std::vector<RealMat> generate_one_step(RdganModels& models, const std::vector<RealMat>& seeds);

/// Feed predictions back for depth steps starting from the last seed frame.
std::vector<RealMat> generate_rollout(RdganModels& models, const std::vector<RealMat>& seeds,
                                      std::size_t depth);

/// Checkpoint entries are namespaced g/, ds/, dt/ plus norm constants.
void save_rdgan(const std::filesystem::path& path, RdganModels& models);
RdganModels load_rdgan(const std::filesystem::path& path);

/// CSV `epoch,loss_g,loss_ds,loss_dt`.
void write_gan_loss_csv(const std::filesystem::path& path, const GanLossHistory& history);

/// Channel-stacks for discriminator inputs.
Tensor stack_pair(const Tensor& a, const Tensor& b);
Tensor stack_triple(const Tensor& a, const Tensor& b, const Tensor& c);

}  // namespace demcl
