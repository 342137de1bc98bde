#pragma once

#include "regimekit/msvar.hpp"
#include "regimekit/random.hpp"
#include "regimekit/timeseries.hpp"
#include "regimekit/var.hpp"

#include <vector>

namespace regimekit::simulate {

inline constexpr int kDefaultBurnIn = 200;

/// Where the chain starts: a draw from the ergodic distribution or a fixed state.
struct ChainStart {
    bool ergodic = true;
    int state = 0;

    static ChainStart from_ergodic() { return {}; }
    static ChainStart fixed(int s) { return {false, s}; }
};

std::vector<int> sample_markov_chain(const msvar::TransitionMatrix& p, int T, ChainStart start, Seed seed);

struct Simulation {
    TimeSeries series;
    /// Latent regime per observation (all zero for a linear VAR).
    std::vector<int> states;
    /// Some regime has companion spectral radius >= 1, or the path overflowed.
    bool divergent = false;
};

/// Monthly stamps from January 2000, the schema `load_csv` reads back.
std::vector<Instant> synthetic_stamps(int T);

/// Regimes come from substream 0 of `seed`, innovations from substream 1, so the
/// observations do not depend on the chain when all regimes share their parameters.
/// Accepts r = 1 models (transition matrix [[1]]).
Simulation simulate_msvar(const msvar::MsVarModel& model, int T, int burn_in, Seed seed);

Simulation simulate_var(const var::VarModel& model, int T, int burn_in, Seed seed);

/// y1 = w + u, y2 = w with w a Gaussian random walk and u a stationary AR(1) spread.
TimeSeries simulate_cointegrated_pair(int T, Seed seed, double spread_ar);

/// Independent Gaussian random walks (k columns).
TimeSeries simulate_random_walks(int T, int k, Seed seed);

/// The same model as a one-regime intercept-switching model.
msvar::MsVarModel as_single_regime(const var::VarModel& model);

}  // namespace regimekit::simulate
