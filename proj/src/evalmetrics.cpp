// SPDX-License-Identifier: Apache-2.0
#include "geopli/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "geopli/errors.hpp"
#include "geopli/textio.hpp"

namespace geopli {

namespace {

void check_lengths(const std::vector<double>& preds, const std::vector<double>& labels,
                   std::size_t min_len) {
    if (preds.size() != labels.size()) {
        throw ContractError("prediction/label length mismatch: " + std::to_string(preds.size()) +
                            " vs " + std::to_string(labels.size()));
    }
    if (preds.size() < min_len) {
        throw ContractError("need at least " + std::to_string(min_len) + " samples, got " +
                            std::to_string(preds.size()));
    }
}

}  // namespace

double rmse(const std::vector<double>& preds, const std::vector<double>& labels) {
    check_lengths(preds, labels, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - labels[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(preds.size()));
}

double pearson(const std::vector<double>& preds, const std::vector<double>& labels) {
    check_lengths(preds, labels, 2);
    const auto n = static_cast<double>(preds.size());
    double mp = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        mp += preds[i];
        ml += labels[i];
    }
    mp /= n;
    ml /= n;
    double num = 0.0, vp = 0.0, vl = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        num += (preds[i] - mp) * (labels[i] - ml);
        vp += (preds[i] - mp) * (preds[i] - mp);
        vl += (labels[i] - ml) * (labels[i] - ml);
    }
    if (vp == 0.0 || vl == 0.0) {
        throw UndefinedCorrelationError("pearson undefined: zero variance input");
    }
    return num / std::sqrt(vp * vl);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i + j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& preds, const std::vector<double>& labels) {
    check_lengths(preds, labels, 2);
    try {
        return pearson(average_ranks(preds), average_ranks(labels));
    } catch (const UndefinedCorrelationError&) {
        throw UndefinedCorrelationError("spearman undefined: constant ranks");
    }
}

std::vector<BinRow> binned_mae(const std::vector<double>& preds,
                               const std::vector<double>& labels,
                               const std::vector<double>& train_labels,
                               const std::vector<double>& bin_edges) {
    if (bin_edges.size() < 2) throw ContractError("binned_mae needs at least two bin edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
        if (bin_edges[i] <= bin_edges[i - 1]) {
            throw ContractError("bin edges must be strictly increasing");
        }
    }
    check_lengths(preds, labels, 1);

    std::vector<BinRow> rows(bin_edges.size() - 1);
    std::vector<double> abs_sum(rows.size(), 0.0);
    std::vector<std::size_t> counts(rows.size(), 0);
    auto bin_of = [&](double v) -> std::ptrdiff_t {
        for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b) {
            if (v >= bin_edges[b] && v < bin_edges[b + 1]) return static_cast<std::ptrdiff_t>(b);
        }
        return -1;
    };
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::ptrdiff_t b = bin_of(labels[i]);
        if (b < 0) continue;
        abs_sum[static_cast<std::size_t>(b)] += std::abs(preds[i] - labels[i]);
        ++counts[static_cast<std::size_t>(b)];
    }
    for (std::size_t b = 0; b < rows.size(); ++b) {
        rows[b].bin_low = bin_edges[b];
        rows[b].bin_high = bin_edges[b + 1];
        if (counts[b] > 0) rows[b].mae = abs_sum[b] / static_cast<double>(counts[b]);
        for (double t : train_labels) {
            if (bin_of(t) == static_cast<std::ptrdiff_t>(b)) ++rows[b].n_train_in_bin;
        }
    }
    return rows;
}

std::vector<double> default_bin_edges(const std::vector<double>& labels,
                                      const std::vector<double>& train_labels) {
    double lo = labels.empty() ? 0.0 : labels[0];
    double hi = lo;
    for (double v : labels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : train_labels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double start = std::floor(lo);
    const double stop = std::floor(hi) + 1.0;
    std::vector<double> edges;
    for (double e = start; e <= stop; e += 1.0) edges.push_back(e);
    return edges;
}

MetricsReport build_report(const std::vector<std::string>& target_ids,
                           const std::vector<double>& preds, const std::vector<double>& labels,
                           const std::vector<double>& train_labels,
                           const std::vector<double>& bin_edges) {
    check_lengths(preds, labels, 1);
    if (target_ids.size() != preds.size()) {
        throw ContractError("target id count does not match predictions");
    }
    MetricsReport report;
    report.n = preds.size();
    report.rmse = rmse(preds, labels);
    try {
        report.pearson = pearson(preds, labels);
    } catch (const Error& e) {
        report.pearson_note = e.what();
    }
    try {
        report.spearman = spearman(preds, labels);
    } catch (const Error& e) {
        report.spearman_note = e.what();
    }
    const std::vector<double> edges =
        bin_edges.empty() ? default_bin_edges(labels, train_labels) : bin_edges;
    report.binned = binned_mae(preds, labels, train_labels, edges);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        report.residuals.push_back(ResidualRow{target_ids[i], labels[i], preds[i]});
    }
    return report;
}

namespace {

std::string corr_cell(const std::optional<double>& v) {
    return v.has_value() ? format_fixed(*v, 6) : "undefined";
}

}  // namespace

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "rmse,pearson,spearman,n\n";
    os << format_fixed(report.rmse, 6) << ',' << corr_cell(report.pearson) << ','
       << corr_cell(report.spearman) << ',' << report.n << "\n";
    if (!os) throw IoError("failed writing: " + path);
}

void write_binned_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "bin_low,bin_high,mae,n_train_in_bin\n";
    for (const BinRow& row : report.binned) {
        os << format_fixed(row.bin_low, 6) << ',' << format_fixed(row.bin_high, 6) << ',';
        if (row.mae.has_value()) os << format_fixed(*row.mae, 6);
        os << ',' << row.n_train_in_bin << "\n";
    }
    if (!os) throw IoError("failed writing: " + path);
}

void write_residuals_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "target_id,label,prediction,residual\n";
    for (const ResidualRow& row : report.residuals) {
        os << row.target_id << ',' << format_fixed(row.label, 6) << ','
           << format_fixed(row.prediction, 6) << ',' << format_fixed(row.residual(), 6) << "\n";
    }
    if (!os) throw IoError("failed writing: " + path);
}

std::string metrics_summary_line(const MetricsReport& report) {
    return "metrics rmse=" + format_fixed(report.rmse, 6) +
           " pearson=" + corr_cell(report.pearson) + " spearman=" + corr_cell(report.spearman) +
           " n=" + std::to_string(report.n);
}

}  // namespace geopli
