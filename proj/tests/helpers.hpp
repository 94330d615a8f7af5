#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "crbreak/model.hpp"
#include "crbreak/rng.hpp"

namespace testutil {

// y = 1 + z + shift * z * 1{t > tb} + noise * e with z ~ N(1, 1)
inline crbreak::Sample shifted_sample(int T, int tb, double shift, double noise, std::uint64_t seed,
                                      int q = 1, bool constant = true) {
    crbreak::Stream rng(seed);
    Eigen::MatrixXd z(T, q);
    Eigen::VectorXd y(T);
    for (int t = 0; t < T; ++t) {
        double mean = 1.0;
        for (int j = 0; j < q; ++j) {
            z(t, j) = 1.0 + rng.normal();
            mean += z(t, j) * (1.0 + (t + 1 > tb ? shift : 0.0));
        }
        y(t) = mean + noise * rng.normal();
    }
    Eigen::MatrixXd d = constant ? Eigen::MatrixXd::Ones(T, 1) : Eigen::MatrixXd(T, 0);
    return crbreak::Sample(y, d, z);
}

// Mean shift with Z = 1 and no D block.
inline crbreak::Sample mean_shift(int T, int tb, double shift, double noise, std::uint64_t seed) {
    crbreak::Stream rng(seed);
    Eigen::VectorXd y(T);
    for (int t = 0; t < T; ++t) y(t) = (t + 1 > tb ? shift : 0.0) + noise * rng.normal();
    return crbreak::Sample(y, Eigen::MatrixXd(T, 0), Eigen::MatrixXd::Ones(T, 1));
}

inline std::vector<double> random_pmf(crbreak::Stream& rng, int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& x : w) {
        x = rng.uniform() < 0.2 ? 0.0 : -std::log(rng.uniform() + 1e-300);
        total += x;
    }
    if (total == 0.0) {
        w[0] = 1.0;
        total = 1.0;
    }
    for (auto& x : w) x /= total;
    return w;
}

}  // namespace testutil
