#pragma once

#include "regimekit/msvar.hpp"

#include <Eigen/Dense>

#include <vector>

namespace regimekit::msvar::detail {

// Hidden state (s_t, s_{t-1}, ..., s_{t-lags}) packed as sum_j s_{t-j} r^j.
struct StateSpace {
    int r = 0;
    int lags = 0;
    int count = 0;
    int shift = 1;  // r^lags

    StateSpace(int regimes, int state_lags);

    int digit(int state, int j) const;
    int current(int state) const { return state % r; }
    // Successor state when the chain moves to regime `next`.
    int successor(int state, int next) const { return next + r * (state % shift); }
    // Distribution of the first hidden state given the ergodic start.
    Eigen::VectorXd initial(const TransitionMatrix& p) const;
};

StateSpace state_space(const MsVarSpec& spec);

// Log-density of each observation t = q..T-1 (rows) under each hidden state (columns).
Eigen::MatrixXd log_densities(const MsVarModel& model, const Eigen::MatrixXd& data);

// Filter on precomputed densities.
FilterOutput run_filter(const StateSpace& ss, const TransitionMatrix& p, const Eigen::MatrixXd& logf);

}  // namespace regimekit::msvar::detail
