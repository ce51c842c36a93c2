// SPDX-License-Identifier: Apache-2.0
//
// geopli: synthetic-data generation, ingestion checks, pre-training,
// fine-tuning and evaluation behind one binary.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 numeric abort, 4 data integrity,
// 5 checkpoint/transfer.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include "geopli/checkpoint.hpp"
#include "geopli/errors.hpp"
#include "geopli/evalmetrics.hpp"
#include "geopli/runconfig.hpp"
#include "geopli/synth.hpp"
#include "geopli/textio.hpp"
#include "geopli/train.hpp"
#include "geopli/trajio.hpp"

namespace fs = std::filesystem;
using namespace geopli;

namespace {

struct OverrideBag {
    std::vector<std::pair<std::string, std::string>> entries;
    void set(const std::string& key, const std::string& value) {
        entries.emplace_back(key, value);
    }
};

// Config knobs exposed as flags on every subcommand; flags win over the
// config file and the GEOPLIH_SEED environment override.
void add_common_options(CLI::App* cmd, std::string& config_path, OverrideBag& bag) {
    cmd->add_option("--config", config_path, "key = value config file");
    auto opt = [cmd, &bag](const std::string& flag, const std::string& key,
                           const std::string& desc) {
        cmd->add_option_function<std::string>(
            flag, [&bag, key](const std::string& v) { bag.set(key, v); }, desc);
    };
    opt("--data", "frames_dir", "frame file or directory of *.frames");
    opt("--labels", "labels_csv", "affinity label CSV");
    opt("--out", "out_dir", "output directory");
    opt("--seed", "seed", "run seed (also honors GEOPLIH_SEED)");
    opt("--threads", "threads", "worker cap; 1 keeps runs bit-reproducible");
    opt("--feature-dim", "feature_dim", "node embedding width");
    opt("--n-layers", "n_layers", "message-passing layers");
    opt("--hidden-width", "hidden_width", "MLP hidden width");
    opt("--th-dist", "th_dist", "cross-attention distance cutoff (A)");
    opt("--attention-heads", "attention_heads", "cross-attention heads");
    opt("--coord-update-form", "coord_update_form", "relative_vector|literal_scalar");
    opt("--r-edge-protein", "r_edge_protein", "protein radius-graph cutoff (A)");
    opt("--r-edge-ligand", "r_edge_ligand", "ligand radius-graph cutoff (A)");
    opt("--contact-dist", "contact_dist", "pocket contact distance (A)");
    opt("--pocket-hops", "pocket_hops", "pocket crop hops (k)");
    opt("--max-epochs", "max_epochs", "epoch cap");
    opt("--patience", "patience", "early-stopping patience");
    opt("--batch-size", "batch_size", "gradient accumulation count");
    opt("--lr", "lr", "Adam learning rate");
    opt("--bin-edges", "bin_edges", "space-separated affinity bin edges");
}

RunConfig build_config(const std::string& config_path, const OverrideBag& bag) {
    RunConfig rc;
    if (!config_path.empty()) rc.load_file(config_path);
    rc.apply_env();
    for (const auto& [key, value] : bag.entries) rc.apply_kv(key, value);
    return rc;
}

void ensure_out_dir(const RunConfig& rc) {
    std::error_code ec;
    fs::create_directories(rc.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + rc.out_dir + "': " + ec.message());
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    return (fs::path(rc.out_dir) / name).string();
}

std::vector<std::string> frame_target_ids(const std::vector<ComplexFrame>& frames) {
    std::set<std::string> ids;
    for (const ComplexFrame& f : frames) ids.insert(f.target_id);
    return {ids.begin(), ids.end()};
}

std::map<std::string, std::string> base_manifest(const RunConfig& rc, const std::string& command) {
    std::map<std::string, std::string> m;
    m["command"] = command;
    m["seed"] = std::to_string(rc.train.seed);
    m["frames_dir"] = rc.frames_dir;
    m["labels_csv"] = rc.labels_csv;
    m["model.feature_dim"] = std::to_string(rc.model.feature_dim);
    m["model.n_layers"] = std::to_string(rc.model.n_layers);
    m["model.hidden_width"] = std::to_string(rc.model.hidden_width);
    m["model.th_dist"] = format_double(rc.model.th_dist);
    m["model.attention_heads"] = std::to_string(rc.model.attention_heads);
    m["model.coord_update_form"] = coord_update_form_name(rc.model.coord_update_form);
    m["graph.r_edge_protein"] = format_double(rc.graph.r_edge_protein);
    m["graph.r_edge_ligand"] = format_double(rc.graph.r_edge_ligand);
    m["graph.contact_dist"] = format_double(rc.graph.contact_dist);
    m["graph.pocket_hops"] = std::to_string(rc.graph.pocket_hops);
    m["train.max_epochs"] = std::to_string(rc.train.max_epochs);
    m["train.patience"] = std::to_string(rc.train.patience);
    m["train.batch_size"] = std::to_string(rc.train.batch_size);
    m["train.lr"] = format_double(rc.train.lr);
    m["train.freeze_coords"] = rc.train.freeze_coords ? "true" : "false";
    m["train.freeze_encoder"] = rc.train.freeze_encoder ? "true" : "false";
    return m;
}

int cmd_synth(const RunConfig& rc) {
    ensure_out_dir(rc);
    if (rc.synth_mode == "trajectory") {
        std::size_t total_frames = 0;
        for (std::size_t t = 0; t < rc.synth_targets; ++t) {
            const SynthSpec spec = rc.synth_spec(t);
            const auto frames = gen_trajectory(spec);
            total_frames += frames.size();
            write_frames(frames, out_path(rc, spec.target_id + ".frames"));
        }
        std::cout << "synth wrote " << rc.synth_targets << " targets, " << total_frames
                  << " frames, 0 labels to " << rc.out_dir << "\n";
        return 0;
    }
    const AffinitySet set = gen_affinity_set(rc.synth_complexes, rc.train.seed);
    write_frames(set.frames, out_path(rc, "affinity.frames"));
    write_labels(set.labels, out_path(rc, "labels.csv"));
    std::cout << "synth wrote " << set.frames.size() << " targets, " << set.frames.size()
              << " frames, " << set.labels.size() << " labels to " << rc.out_dir << "\n";
    return 0;
}

int cmd_check(const RunConfig& rc, const std::string& manifest_path) {
    if (rc.frames_dir.empty()) throw UsageError("check requires --data");
    const auto frames = parse_frames_dir(rc.frames_dir);
    const auto ids = frame_target_ids(frames);

    std::size_t total_pairs = 0, total_skipped = 0;
    for (const auto& group : group_by_target(frames)) {
        std::vector<ComplexFrame> target_frames;
        for (const ComplexFrame* f : group) target_frames.push_back(*f);
        const PairResult pairs = pair_consecutive(target_frames);
        total_pairs += pairs.pairs.size();
        total_skipped += pairs.skipped;
    }

    SplitManifest manifest =
        manifest_path.empty() ? split_targets(ids, rc.train.seed) : read_manifest(manifest_path);
    audit_splits(manifest, ids);

    if (!rc.labels_csv.empty()) {
        const auto labels = read_labels(rc.labels_csv);
        std::set<std::string> labeled;
        for (const auto& rec : labels) labeled.insert(rec.target_id);
        for (const std::string& id : ids) {
            if (labeled.count(id) == 0) {
                throw IntegrityError("no affinity label for target '" + id + "'");
            }
        }
    }

    std::cout << "check ok: " << ids.size() << " targets, " << frames.size() << " frames, "
              << total_pairs << " pairs, " << total_skipped << " gaps, splits "
              << manifest.train.size() << "/" << manifest.val.size() << "/"
              << manifest.test.size() << " leak-free\n";
    return 0;
}

int cmd_pretrain(const RunConfig& rc) {
    if (rc.frames_dir.empty()) throw UsageError("pretrain requires --data");
    ensure_out_dir(rc);
    const auto frames = parse_frames_dir(rc.frames_dir);
    const auto ids = frame_target_ids(frames);
    const SplitManifest manifest = split_targets(ids, rc.train.seed);
    audit_splits(manifest, ids);
    write_manifest(manifest, out_path(rc, "split.manifest"));

    const auto train_samples = build_pretrain_samples(frames, manifest.train, rc.graph);
    const auto val_samples = build_pretrain_samples(frames, manifest.val, rc.graph);
    if (train_samples.empty() || val_samples.empty()) {
        throw IntegrityError("pretraining needs at least one frame pair per split");
    }

    TrainConfig tc = rc.train;
    tc.task = TrainTask::Pretrain;
    tc.checkpoint_path = out_path(rc, "pretrain.ckpt");
    ParamStore params = init_model_params(rc.model, rc.train.seed);
    const TrainResult result = run_pretraining(train_samples, val_samples, std::move(params),
                                               rc.model, tc);
    write_history_csv(result.history, out_path(rc, "pretrain_history.csv"));

    const double identity = identity_baseline_mse(val_samples);
    const double ratio = result.best_val_loss / identity;
    auto manifest_entries = base_manifest(rc, "pretrain");
    manifest_entries["best_epoch"] = std::to_string(result.best_epoch);
    manifest_entries["best_val_loss"] = format_double(result.best_val_loss);
    manifest_entries["epochs_run"] = std::to_string(result.history.size());
    manifest_entries["identity_baseline_mse"] = format_double(identity);
    manifest_entries["val_over_identity"] = format_double(ratio);
    write_run_manifest(manifest_entries, out_path(rc, "pretrain_manifest.txt"));

    std::cout << "pretrain done: epochs=" << result.history.size()
              << " best_epoch=" << result.best_epoch
              << " val_mse=" << format_fixed(result.best_val_loss, 6)
              << " identity_mse=" << format_fixed(identity, 6)
              << " ratio=" << format_fixed(ratio, 4) << "\n";
    return 0;
}

int cmd_finetune(const RunConfig& rc) {
    if (rc.frames_dir.empty()) throw UsageError("finetune requires --data");
    if (rc.labels_csv.empty()) throw UsageError("finetune requires --labels");
    ensure_out_dir(rc);
    const auto frames = parse_frames_dir(rc.frames_dir);
    const auto labels = read_labels(rc.labels_csv);
    const auto ids = frame_target_ids(frames);
    const SplitManifest manifest = split_targets(ids, rc.train.seed);
    audit_splits(manifest, ids);
    write_manifest(manifest, out_path(rc, "split.manifest"));

    const auto train_samples = build_finetune_samples(frames, labels, manifest.train, rc.graph);
    const auto val_samples = build_finetune_samples(frames, labels, manifest.val, rc.graph);
    const auto test_samples = build_finetune_samples(frames, labels, manifest.test, rc.graph);
    if (test_samples.empty()) throw IntegrityError("empty test split");

    ParamStore params = init_model_params(rc.model, rc.train.seed);
    std::string init_mode = "scratch";
    std::size_t n_transferred = 0;
    if (!rc.checkpoint_in.empty()) {
        const ParamStore ckpt = load_checkpoint(rc.checkpoint_in);
        const TransferReport report = transfer_weights(ckpt, params, rc.model);
        init_mode = "from_checkpoint";
        n_transferred = report.transferred.size();
        std::cout << "transfer: " << report.transferred.size() << " encoder tensors copied, "
                  << report.fresh.size() << " head tensors fresh\n";
    }

    TrainConfig tc = rc.train;
    tc.task = TrainTask::Finetune;
    tc.checkpoint_path = out_path(rc, "finetune.ckpt");
    const TrainResult result =
        run_finetuning(train_samples, val_samples, std::move(params), rc.model, tc);
    write_history_csv(result.history, out_path(rc, "finetune_history.csv"));

    std::vector<double> preds = predict_affinity_batch(test_samples, result.best_params, rc.model,
                                                       !rc.train.freeze_coords, rc.threads);
    std::vector<double> test_labels, train_labels;
    std::vector<std::string> test_ids;
    for (const auto& s : test_samples) {
        test_labels.push_back(s.label);
        test_ids.push_back(s.target_id);
    }
    for (const auto& s : train_samples) train_labels.push_back(s.label);
    const MetricsReport report =
        build_report(test_ids, preds, test_labels, train_labels, rc.bin_edges);
    write_metrics_csv(report, out_path(rc, "metrics.csv"));
    write_binned_csv(report, out_path(rc, "binned_mae.csv"));
    write_residuals_csv(report, out_path(rc, "residuals.csv"));

    auto manifest_entries = base_manifest(rc, "finetune");
    manifest_entries["init_mode"] = init_mode;
    manifest_entries["from_checkpoint"] = rc.checkpoint_in;
    manifest_entries["transferred_tensors"] = std::to_string(n_transferred);
    manifest_entries["best_epoch"] = std::to_string(result.best_epoch);
    manifest_entries["best_val_loss"] = format_double(result.best_val_loss);
    manifest_entries["epochs_run"] = std::to_string(result.history.size());
    manifest_entries["test_rmse"] = format_double(report.rmse);
    write_run_manifest(manifest_entries, out_path(rc, "finetune_manifest.txt"));

    std::cout << "finetune done (" << init_mode << "): epochs=" << result.history.size()
              << " best_epoch=" << result.best_epoch << " "
              << metrics_summary_line(report) << "\n";
    return 0;
}

int cmd_eval(const RunConfig& rc) {
    if (rc.checkpoint_in.empty()) throw UsageError("eval requires --checkpoint");
    if (rc.frames_dir.empty()) throw UsageError("eval requires --data");
    if (rc.labels_csv.empty()) throw UsageError("eval requires --labels");
    ensure_out_dir(rc);

    const ParamStore params = load_checkpoint(rc.checkpoint_in);
    // The checkpoint must describe the same architecture the config builds.
    const ParamStore expected = init_model_params(rc.model, params.seed());
    for (const auto& [name, tensor] : expected.entries()) {
        if (!params.has(name)) {
            throw TransferError("checkpoint is missing parameter '" + name + "'");
        }
        if (!params.get(name).same_shape(tensor)) {
            throw TransferError("checkpoint shape mismatch for '" + name + "': " +
                                params.get(name).shape_str() + " vs " + tensor.shape_str());
        }
    }
    if (params.entries().size() != expected.entries().size()) {
        throw TransferError("checkpoint carries unexpected parameters for this architecture");
    }

    const auto frames = parse_frames_dir(rc.frames_dir);
    const auto labels = read_labels(rc.labels_csv);
    const auto samples = build_finetune_samples(frames, labels, {}, rc.graph);
    if (samples.empty()) throw IntegrityError("empty evaluation set");

    const std::vector<double> preds = predict_affinity_batch(samples, params, rc.model,
                                                             !rc.train.freeze_coords, rc.threads);
    std::vector<double> ys;
    std::vector<std::string> ids;
    for (const auto& s : samples) {
        ys.push_back(s.label);
        ids.push_back(s.target_id);
    }
    const MetricsReport report = build_report(ids, preds, ys, {}, rc.bin_edges);
    write_metrics_csv(report, out_path(rc, "metrics.csv"));
    write_binned_csv(report, out_path(rc, "binned_mae.csv"));
    write_residuals_csv(report, out_path(rc, "residuals.csv"));
    std::cout << metrics_summary_line(report) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MD-pretrained protein-ligand interaction model pipeline"};
    app.require_subcommand(1);

    std::string config_path, manifest_path;
    OverrideBag bag;

    CLI::App* synth = app.add_subcommand("synth", "generate synthetic frames and labels");
    add_common_options(synth, config_path, bag);
    synth->add_option_function<std::string>(
        "--targets", [&bag](const std::string& v) { bag.set("synth_targets", v); },
        "trajectory targets to generate");
    synth->add_option_function<std::string>(
        "--frames", [&bag](const std::string& v) { bag.set("synth_frames", v); },
        "frames per target");
    synth->add_option_function<std::string>(
        "--complexes", [&bag](const std::string& v) { bag.set("synth_complexes", v); },
        "affinity complexes to generate");
    synth->add_option_function<std::string>(
        "--mode", [&bag](const std::string& v) { bag.set("synth_mode", v); },
        "trajectory|affinity");
    synth->add_option_function<std::string>(
        "--protein-atoms", [&bag](const std::string& v) { bag.set("synth_protein_atoms", v); },
        "protein atoms per complex");
    synth->add_option_function<std::string>(
        "--ligand-atoms", [&bag](const std::string& v) { bag.set("synth_ligand_atoms", v); },
        "ligand atoms per complex");
    synth->add_option_function<std::string>(
        "--dt", [&bag](const std::string& v) { bag.set("synth_dt", v); }, "Euler step size");
    synth->add_option_function<std::string>(
        "--spring-constant", [&bag](const std::string& v) { bag.set("synth_spring_constant", v); },
        "pairwise spring constant");
    synth->add_option_function<std::string>(
        "--noise-sigma", [&bag](const std::string& v) { bag.set("synth_noise_sigma", v); },
        "per-step Gaussian noise");

    CLI::App* check = app.add_subcommand("check", "parse frames and audit splits");
    add_common_options(check, config_path, bag);
    check->add_option("--manifest", manifest_path, "existing split manifest to audit");

    CLI::App* pretrain = app.add_subcommand("pretrain", "next-frame coordinate pre-training");
    add_common_options(pretrain, config_path, bag);
    pretrain->add_flag_callback(
        "--freeze-coords", [&bag] { bag.set("freeze_coords", "true"); },
        "skip coordinate updates in the forward pass");

    CLI::App* finetune = app.add_subcommand("finetune", "binding affinity regression");
    add_common_options(finetune, config_path, bag);
    finetune->add_option_function<std::string>(
        "--from-checkpoint", [&bag](const std::string& v) { bag.set("checkpoint_in", v); },
        "pre-trained checkpoint to transfer the encoder from");
    finetune->add_flag_callback(
        "--freeze-encoder", [&bag] { bag.set("freeze_encoder", "true"); },
        "train the affinity head only");
    finetune->add_flag_callback(
        "--freeze-coords", [&bag] { bag.set("freeze_coords", "true"); },
        "skip coordinate updates in the forward pass");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on labeled complexes");
    add_common_options(eval, config_path, bag);
    eval->add_option_function<std::string>(
        "--checkpoint", [&bag](const std::string& v) { bag.set("checkpoint_in", v); },
        "checkpoint to evaluate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const RunConfig rc = build_config(config_path, bag);
        if (synth->parsed()) return cmd_synth(rc);
        if (check->parsed()) return cmd_check(rc, manifest_path);
        if (pretrain->parsed()) return cmd_pretrain(rc);
        if (finetune->parsed()) return cmd_finetune(rc);
        if (eval->parsed()) return cmd_eval(rc);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const TransferError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 5;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
