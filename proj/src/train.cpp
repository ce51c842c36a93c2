// SPDX-License-Identifier: Apache-2.0
#include "geopli/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>

#include "geopli/checkpoint.hpp"
#include "geopli/errors.hpp"
#include "geopli/textio.hpp"

namespace geopli {

namespace {

std::map<int, std::array<double, 3>> positions_by_serial(const ComplexFrame& frame) {
    std::map<int, std::array<double, 3>> out;
    for (const Atom& a : frame.protein_atoms) out[a.serial] = a.position;
    for (const Atom& a : frame.ligand_atoms) out[a.serial] = a.position;
    return out;
}

Tensor gather_next(const std::vector<int>& serials,
                   const std::map<int, std::array<double, 3>>& next) {
    Tensor out({serials.size(), 3});
    for (std::size_t i = 0; i < serials.size(); ++i) {
        auto it = next.find(serials[i]);
        if (it == next.end()) {
            throw IntegrityError("atom serial " + std::to_string(serials[i]) +
                                 " missing from the next frame");
        }
        for (std::size_t c = 0; c < 3; ++c) out.at(i, c) = it->second[c];
    }
    return out;
}

// Coordinate MSE between a forward pass and the next-frame targets.
NodeId coord_mse_node(Tape& tape, const ComplexRefs& refs, const Tensor& next_pocket,
                      const Tensor& next_ligand) {
    const NodeId dp = tape.sub(refs.x_protein, tape.constant(next_pocket));
    const NodeId dl = tape.sub(refs.x_ligand, tape.constant(next_ligand));
    const NodeId total =
        tape.add(tape.sum_all(tape.mul(dp, dp)), tape.sum_all(tape.mul(dl, dl)));
    const double n = static_cast<double>(next_pocket.size() + next_ligand.size());
    return tape.scale(total, 1.0 / n);
}

bool selected(const std::vector<std::string>& filter, const std::string& id) {
    return filter.empty() || std::find(filter.begin(), filter.end(), id) != filter.end();
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) throw ContractError("batch_size must be at least 1");
    if (max_epochs == 0) throw ContractError("max_epochs must be at least 1");
    if (patience > max_epochs) {
        throw ContractError("patience (" + std::to_string(patience) +
                            ") must not exceed max_epochs (" + std::to_string(max_epochs) + ")");
    }
    if (lr < 0.0) throw ContractError("learning rate must be non-negative");
}

std::vector<PretrainSample> build_pretrain_samples(const std::vector<ComplexFrame>& frames,
                                                   const std::vector<std::string>& targets,
                                                   const GraphBuildConfig& graph_config) {
    std::vector<PretrainSample> samples;
    for (const auto& group : group_by_target(frames)) {
        if (!selected(targets, group.front()->target_id)) continue;
        std::vector<ComplexFrame> target_frames;
        target_frames.reserve(group.size());
        for (const ComplexFrame* f : group) target_frames.push_back(*f);
        const PairResult pairs = pair_consecutive(target_frames);
        for (const FramePair& pair : pairs.pairs) {
            PretrainSample s;
            s.target_id = pair.current->target_id;
            s.t_index = pair.current->t_index;
            const MolecularGraph protein =
                build_graph(pair.current->protein_atoms, graph_config.r_edge_protein);
            s.ligand = build_graph(pair.current->ligand_atoms, graph_config.r_edge_ligand);
            PocketCrop crop = crop_pocket(protein, s.ligand, graph_config.contact_dist,
                                          graph_config.pocket_hops);
            s.pocket = std::move(crop.graph);
            const auto next = positions_by_serial(*pair.next);
            s.next_pocket_xyz = gather_next(s.pocket.serials, next);
            s.next_ligand_xyz = gather_next(s.ligand.serials, next);
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

std::vector<FinetuneSample> build_finetune_samples(const std::vector<ComplexFrame>& frames,
                                                   const std::vector<AffinityRecord>& labels,
                                                   const std::vector<std::string>& targets,
                                                   const GraphBuildConfig& graph_config) {
    std::map<std::string, double> label_of;
    for (const AffinityRecord& rec : labels) label_of[rec.target_id] = rec.affinity;

    std::vector<FinetuneSample> samples;
    for (const auto& group : group_by_target(frames)) {
        const std::string& id = group.front()->target_id;
        if (!selected(targets, id)) continue;
        auto it = label_of.find(id);
        if (it == label_of.end()) {
            throw IntegrityError("no affinity label for target '" + id + "'");
        }
        // One structure per target: the earliest frame.
        const ComplexFrame& frame = *group.front();
        FinetuneSample s;
        s.target_id = id;
        s.label = it->second;
        const MolecularGraph protein =
            build_graph(frame.protein_atoms, graph_config.r_edge_protein);
        s.ligand = build_graph(frame.ligand_atoms, graph_config.r_edge_ligand);
        PocketCrop crop = crop_pocket(protein, s.ligand, graph_config.contact_dist,
                                      graph_config.pocket_hops);
        s.pocket = std::move(crop.graph);
        samples.push_back(std::move(s));
    }
    return samples;
}

NodeId pretrain_loss_node(Tape& tape, const PretrainSample& sample, const ParamStore& params,
                          const LayerConfig& config, bool update_coords) {
    const ComplexRefs refs =
        forward_complex(tape, params, sample.pocket, sample.ligand, config, update_coords);
    return coord_mse_node(tape, refs, sample.next_pocket_xyz, sample.next_ligand_xyz);
}

double pretrain_step(const PretrainSample& sample, const ParamStore& params,
                     const LayerConfig& config, bool update_coords) {
    Tape tape;
    return tape.value(pretrain_loss_node(tape, sample, params, config, update_coords))[0];
}

NodeId finetune_loss_node(Tape& tape, const FinetuneSample& sample, const ParamStore& params,
                          const LayerConfig& config, bool update_coords) {
    const ComplexRefs refs =
        forward_complex(tape, params, sample.pocket, sample.ligand, config, update_coords);
    const NodeId pred = affinity_prediction(tape, params, config, refs);
    const NodeId diff = tape.sub(pred, tape.constant(Tensor({1, 1}, {sample.label})));
    return tape.mul(diff, diff);
}

double finetune_step(const FinetuneSample& sample, const ParamStore& params,
                     const LayerConfig& config, bool update_coords) {
    Tape tape;
    return tape.value(finetune_loss_node(tape, sample, params, config, update_coords))[0];
}

double predict_affinity(const FinetuneSample& sample, const ParamStore& params,
                        const LayerConfig& config, bool update_coords) {
    Tape tape;
    const ComplexRefs refs =
        forward_complex(tape, params, sample.pocket, sample.ligand, config, update_coords);
    return tape.value(affinity_prediction(tape, params, config, refs))[0];
}

std::vector<double> predict_affinity_batch(const std::vector<FinetuneSample>& samples,
                                           const ParamStore& params, const LayerConfig& config,
                                           bool update_coords, std::size_t threads) {
    std::vector<double> out(samples.size(), 0.0);
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, samples.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            out[i] = predict_affinity(samples[i], params, config, update_coords);
        }
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < samples.size(); i += workers) {
                out[i] = predict_affinity(samples[i], params, config, update_coords);
            }
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

double identity_baseline_mse(const std::vector<PretrainSample>& samples) {
    if (samples.empty()) throw ContractError("identity baseline needs samples");
    double acc = 0.0;
    for (const PretrainSample& s : samples) {
        double sq = 0.0;
        for (std::size_t i = 0; i < s.next_pocket_xyz.size(); ++i) {
            const double d = s.pocket.coordinates[i] - s.next_pocket_xyz[i];
            sq += d * d;
        }
        for (std::size_t i = 0; i < s.next_ligand_xyz.size(); ++i) {
            const double d = s.ligand.coordinates[i] - s.next_ligand_xyz[i];
            sq += d * d;
        }
        acc += sq / static_cast<double>(s.next_pocket_xyz.size() + s.next_ligand_xyz.size());
    }
    return acc / static_cast<double>(samples.size());
}

TrainResult run_training(
    std::size_t n_train, std::size_t n_val,
    const std::function<StepResult(std::size_t, const ParamStore&)>& train_grad,
    const std::function<double(std::size_t, const ParamStore&)>& val_loss, ParamStore params,
    const TrainConfig& config) {
    config.validate();
    if (n_train == 0 || n_val == 0) {
        throw ContractError("run_training requires nonempty train and validation sets");
    }

    Rng shuffle_rng(config.seed);
    const AdamConfig adam{config.lr, 0.9, 0.999, 1e-8};

    TrainResult result;
    result.best_params = params;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::uint64_t adam_t = params.adam_step_count();
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        double train_acc = 0.0;
        GradMap batch_grads;
        std::size_t in_batch = 0;
        auto flush = [&] {
            if (in_batch == 0) return;
            if (in_batch > 1) {
                const double inv = 1.0 / static_cast<double>(in_batch);
                for (auto& [_, g] : batch_grads) {
                    for (double& v : g.data()) v *= inv;
                }
            }
            adam_step(params, batch_grads, adam, ++adam_t);
            params.set_adam_step_count(adam_t);
            batch_grads.clear();
            in_batch = 0;
        };

        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            StepResult step;
            try {
                step = train_grad(order[pos], params);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(pos / config.batch_size) + " (sample " +
                                   std::to_string(order[pos]) + "): " + e.what());
            }
            if (!std::isfinite(step.loss)) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(pos / config.batch_size) +
                                   ": non-finite loss");
            }
            train_acc += step.loss;
            if (config.freeze_encoder) {
                for (auto it = step.grads.begin(); it != step.grads.end();) {
                    it = is_encoder_param(it->first) ? step.grads.erase(it) : std::next(it);
                }
            }
            for (auto& [name, g] : step.grads) {
                auto it = batch_grads.find(name);
                if (it == batch_grads.end()) {
                    batch_grads.emplace(name, std::move(g));
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
                }
            }
            if (++in_batch == config.batch_size) flush();
        }
        flush();

        double val_acc = 0.0;
        for (std::size_t i = 0; i < n_val; ++i) val_acc += val_loss(i, params);
        const double val_mean = val_acc / static_cast<double>(n_val);
        if (!std::isfinite(val_mean)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": non-finite validation loss");
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = train_acc / static_cast<double>(n_train);
        record.val_loss = val_mean;
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.push_back(record);

        if (val_mean < result.best_val_loss) {
            result.best_val_loss = val_mean;
            result.best_epoch = epoch;
            result.best_params = params;
        }
        if (epoch - result.best_epoch > config.patience) break;
    }

    if (!config.checkpoint_path.empty()) {
        save_checkpoint(result.best_params, config.checkpoint_path);
    }
    return result;
}

TrainResult run_pretraining(const std::vector<PretrainSample>& train,
                            const std::vector<PretrainSample>& val, ParamStore params,
                            const LayerConfig& model_config, const TrainConfig& config) {
    const bool update_coords = !config.freeze_coords;
    auto grad = [&](std::size_t i, const ParamStore& p) {
        Tape tape;
        const NodeId loss = pretrain_loss_node(tape, train[i], p, model_config, update_coords);
        StepResult step;
        step.loss = tape.value(loss)[0];
        step.grads = tape.backward(loss);
        return step;
    };
    auto vloss = [&](std::size_t i, const ParamStore& p) {
        return pretrain_step(val[i], p, model_config, update_coords);
    };
    return run_training(train.size(), val.size(), grad, vloss, std::move(params), config);
}

TrainResult run_finetuning(const std::vector<FinetuneSample>& train,
                           const std::vector<FinetuneSample>& val, ParamStore params,
                           const LayerConfig& model_config, const TrainConfig& config) {
    const bool update_coords = !config.freeze_coords;
    auto grad = [&](std::size_t i, const ParamStore& p) {
        Tape tape;
        const NodeId loss = finetune_loss_node(tape, train[i], p, model_config, update_coords);
        StepResult step;
        step.loss = tape.value(loss)[0];
        step.grads = tape.backward(loss);
        return step;
    };
    auto vloss = [&](std::size_t i, const ParamStore& p) {
        return finetune_step(val[i], p, model_config, update_coords);
    };
    return run_training(train.size(), val.size(), grad, vloss, std::move(params), config);
}

TransferReport transfer_weights(const ParamStore& checkpoint, ParamStore& target,
                                const LayerConfig& config) {
    std::set<std::string> ckpt_encoder, target_encoder;
    for (const auto& [name, _] : checkpoint.entries()) {
        if (is_encoder_param(name)) ckpt_encoder.insert(name);
    }
    for (const auto& [name, _] : target.entries()) {
        if (is_encoder_param(name)) target_encoder.insert(name);
    }
    for (const std::string& name : target_encoder) {
        if (ckpt_encoder.count(name) == 0) {
            throw TransferError("checkpoint is missing encoder parameter '" + name + "'");
        }
    }
    for (const std::string& name : ckpt_encoder) {
        if (target_encoder.count(name) == 0) {
            throw TransferError("checkpoint has unexpected encoder parameter '" + name + "'");
        }
    }

    TransferReport report;
    for (const std::string& name : target_encoder) {
        const Tensor& src = checkpoint.get(name);
        if (!src.same_shape(target.get(name))) {
            throw TransferError("shape mismatch for '" + name + "': checkpoint " +
                                src.shape_str() + " vs model " + target.get(name).shape_str());
        }
        target.set(name, src);
        report.transferred.push_back(name);
    }

    // Salted stream, so a same-seed self-transfer still gets a fresh head.
    ParamStore fresh_head;
    Rng rng(target.seed() ^ 0x68656164ULL);  // "head"
    init_mlp_params(fresh_head, "head", config.head_spec(), rng);
    for (const auto& [name, value] : fresh_head.entries()) {
        target.set(name, value);
        report.fresh.push_back(name);
    }
    return report;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "epoch,train_loss,val_loss,seconds\n";
    for (const EpochRecord& r : history) {
        os << r.epoch << ',' << format_fixed(r.train_loss, 6) << ','
           << format_fixed(r.val_loss, 6) << ',' << format_fixed(r.seconds, 3) << "\n";
    }
    if (!os) throw IoError("failed writing: " + path);
}

void write_run_manifest(const std::map<std::string, std::string>& entries,
                        const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (const auto& [key, value] : entries) os << key << " = " << value << "\n";
    if (!os) throw IoError("failed writing: " + path);
}

}  // namespace geopli
