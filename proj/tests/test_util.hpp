// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "geopli/rng.hpp"
#include "geopli/tensor.hpp"

namespace testutil {

inline geopli::Tensor random_tensor(std::vector<std::size_t> shape, geopli::Rng& rng,
                                    double scale = 1.0) {
    geopli::Tensor t(std::move(shape));
    for (double& v : t.data()) v = scale * rng.gaussian();
    return t;
}

inline double max_abs_diff(const geopli::Tensor& a, const geopli::Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Relative agreement used by the finite-difference checks: the absolute
// floor keeps genuinely-zero gradients from failing on rounding noise.
inline bool close_rel(double a, double b, double rel, double floor = 1e-6) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), floor});
}

// Unique scratch directory under the system temp root; removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / (tag + "_" + std::to_string(std::rand()) + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& child = "") const {
        return child.empty() ? path_.string() : (path_ / child).string();
    }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
