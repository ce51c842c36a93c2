// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "geopli/egnn.hpp"
#include "geopli/params.hpp"
#include "geopli/trajio.hpp"

namespace geopli {

enum class TrainTask { Pretrain, Finetune };

struct TrainConfig {
    std::size_t max_epochs = 30;
    std::size_t patience = 25;
    std::size_t batch_size = 1;  // gradient accumulation count
    double lr = 1e-4;
    std::uint64_t seed = 1;
    TrainTask task = TrainTask::Pretrain;
    bool freeze_coords = false;   // skip coordinate updates in the forward pass
    bool freeze_encoder = false;  // fine-tune the head only
    std::string checkpoint_path;  // best checkpoint destination ("" = do not write)

    void validate() const;
};

// How raw frames become model inputs.
struct GraphBuildConfig {
    double r_edge_protein = 4.0;
    double r_edge_ligand = 2.0;
    double contact_dist = 5.0;
    std::size_t pocket_hops = 2;
};

// One next-frame regression sample: graphs from the current frame, pocket
// cropped, targets gathered from the next frame by atom serial.
struct PretrainSample {
    MolecularGraph pocket;
    MolecularGraph ligand;
    Tensor next_pocket_xyz;  // [Np x 3]
    Tensor next_ligand_xyz;  // [Nl x 3]
    std::string target_id;
    int t_index = 0;
};

struct FinetuneSample {
    MolecularGraph pocket;
    MolecularGraph ligand;
    double label = 0.0;
    std::string target_id;
};

// Samples for the listed targets only (empty filter = all targets). Frames
// must already be parse_frames-validated.
std::vector<PretrainSample> build_pretrain_samples(const std::vector<ComplexFrame>& frames,
                                                   const std::vector<std::string>& targets,
                                                   const GraphBuildConfig& graph_config);
std::vector<FinetuneSample> build_finetune_samples(const std::vector<ComplexFrame>& frames,
                                                   const std::vector<AffinityRecord>& labels,
                                                   const std::vector<std::string>& targets,
                                                   const GraphBuildConfig& graph_config);

// Mean squared next-frame coordinate error over pocket and ligand atoms.
NodeId pretrain_loss_node(Tape& tape, const PretrainSample& sample, const ParamStore& params,
                          const LayerConfig& config, bool update_coords);
double pretrain_step(const PretrainSample& sample, const ParamStore& params,
                     const LayerConfig& config, bool update_coords = true);

// Squared affinity error of head(sum-pooled embeddings).
NodeId finetune_loss_node(Tape& tape, const FinetuneSample& sample, const ParamStore& params,
                          const LayerConfig& config, bool update_coords);
double finetune_step(const FinetuneSample& sample, const ParamStore& params,
                     const LayerConfig& config, bool update_coords = true);

double predict_affinity(const FinetuneSample& sample, const ParamStore& params,
                        const LayerConfig& config, bool update_coords = true);
// Forward-only batch prediction; `threads` > 1 fans out over complexes
// (outputs are slot-indexed, so thread count does not change the values).
std::vector<double> predict_affinity_batch(const std::vector<FinetuneSample>& samples,
                                           const ParamStore& params, const LayerConfig& config,
                                           bool update_coords = true, std::size_t threads = 1);

// Baseline x_{t+1} = x_t, same normalization as the pretrain loss.
double identity_baseline_mse(const std::vector<PretrainSample>& samples);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    ParamStore best_params;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

struct StepResult {
    double loss = 0.0;
    GradMap grads;
};

// Generic epoch loop: seeded shuffling, gradient accumulation, Adam,
// validation after each epoch, early stop when epochs since the best
// validation loss exceed the patience. Deterministic given (seeds, data).
TrainResult run_training(
    std::size_t n_train, std::size_t n_val,
    const std::function<StepResult(std::size_t, const ParamStore&)>& train_grad,
    const std::function<double(std::size_t, const ParamStore&)>& val_loss, ParamStore params,
    const TrainConfig& config);

TrainResult run_pretraining(const std::vector<PretrainSample>& train,
                            const std::vector<PretrainSample>& val, ParamStore params,
                            const LayerConfig& model_config, const TrainConfig& config);
TrainResult run_finetuning(const std::vector<FinetuneSample>& train,
                           const std::vector<FinetuneSample>& val, ParamStore params,
                           const LayerConfig& model_config, const TrainConfig& config);

struct TransferReport {
    std::vector<std::string> transferred;
    std::vector<std::string> fresh;
};

// Copies every encoder tensor from the checkpoint into `target` (shapes
// checked name by name) and freshly re-initializes the head from a salted
// stream of the target's seed, so even a self-transfer gets a new head.
TransferReport transfer_weights(const ParamStore& checkpoint, ParamStore& target,
                                const LayerConfig& config);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

// Deterministic run summary: config echo, best epoch, seeds.
void write_run_manifest(const std::map<std::string, std::string>& entries,
                        const std::string& path);

}  // namespace geopli
