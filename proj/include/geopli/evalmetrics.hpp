// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace geopli {

struct BinRow {
    double bin_low = 0.0;
    double bin_high = 0.0;
    std::optional<double> mae;  // absent when no test label falls in the bin
    std::size_t n_train_in_bin = 0;
};

struct ResidualRow {
    std::string target_id;
    double label = 0.0;
    double prediction = 0.0;
    double residual() const { return prediction - label; }
};

struct MetricsReport {
    double rmse = 0.0;
    // Either the value or the reason it is undefined (zero variance / ties
    // everywhere); never a silent NaN.
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::string pearson_note;
    std::string spearman_note;
    std::size_t n = 0;
    std::vector<BinRow> binned;
    std::vector<ResidualRow> residuals;
};

double rmse(const std::vector<double>& preds, const std::vector<double>& labels);
double pearson(const std::vector<double>& preds, const std::vector<double>& labels);
double spearman(const std::vector<double>& preds, const std::vector<double>& labels);

// Average ranks, ties sharing the mean rank (exposed for spearman's tests).
std::vector<double> average_ranks(const std::vector<double>& values);

// Per bin [e_k, e_{k+1}): MAE over test samples whose label falls inside,
// plus the count of train labels there. Empty bins report no MAE.
std::vector<BinRow> binned_mae(const std::vector<double>& preds,
                               const std::vector<double>& labels,
                               const std::vector<double>& train_labels,
                               const std::vector<double>& bin_edges);

// Unit-width integer edges spanning every label seen (train and test).
std::vector<double> default_bin_edges(const std::vector<double>& labels,
                                      const std::vector<double>& train_labels);

MetricsReport build_report(const std::vector<std::string>& target_ids,
                           const std::vector<double>& preds, const std::vector<double>& labels,
                           const std::vector<double>& train_labels,
                           const std::vector<double>& bin_edges = {});

// CSV emission, fixed column order, 6-decimal values.
void write_metrics_csv(const MetricsReport& report, const std::string& path);
void write_binned_csv(const MetricsReport& report, const std::string& path);
void write_residuals_csv(const MetricsReport& report, const std::string& path);
// One-line summary echoed by the CLI.
std::string metrics_summary_line(const MetricsReport& report);

}  // namespace geopli
