// scenarios.hpp — named simulation scenarios: run the ensemble for a
// configuration and write its result files (observables, metadata, and the
// scenario's own tables) into an output directory.
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "esln/config.hpp"

namespace esln {

// One sampled correlation estimate against its target kernel value.
//
// Stationary families (one row per time lag, index in `i`):
//   eta_eta  <eta(t_{n+i}) eta(t_n)>      vs the real-time kernel
//   eta_nu   <eta(t_{n+i}) nu(t_n)>       vs the cross kernel
//   mu_mu    <mu(tau_{m+i}) mu(tau_m)>    vs the thermal kernel
//   nu_nu    scalar null check (i = 0): products averaged over every
//            sampled lag; the target is zero
// Cross families (one row per grid pair (i, j) = (n, m)):
//   eta_mu   <eta(t_n) mu(tau_m)>         vs the mixed-domain kernel
//   nu_mu    scalar null check (i = j = 0): the product of the
//            whole-window means <nu-bar mu-bar>; the target is zero
//
// Products are plain (no conjugation), matching the complex pairing of the
// noise construction; `err` is the standard error of the sample mean.
struct CorrelationRow {
    std::string family;
    std::size_t i = 0;
    std::size_t j = 0;
    std::complex<double> target{};
    std::complex<double> mean{};
    double err = 0.0;
};

// Monte-Carlo correlation table over spec.n_samples noise realisations,
// seeded exactly like the dynamics (trajectory i uses the seed derived from
// spec.master_seed and i).  Twenty quadratically spaced lags per stationary
// family, a 5 x 4 node grid for the mixed family, plus the two null rows.
std::vector<CorrelationRow> correlation_table(const EnsembleSpec& spec);

// What run_scenario wrote and whether the sampling stayed trustworthy.
struct ScenarioResult {
    bool unreliable = false;          // replacement budget exhausted
    std::vector<std::string> files;   // paths written, in order
};

// Validates the configuration, runs the ensemble, and writes into
// config.out_dir (created if missing):
//   observables.csv   mean spin components, trace, and error bars per node
//   meta              the effective configuration plus result_* lines
// and per scenario:
//   correlations      correlations.csv (the table above)
//   lz                asymptote (boxed window mean vs the two sweep limits)
//   calibrate         deviations.csv (finite-preparation shift per start time)
//   variance-scan     scan.csv (final trace stderr per splitting ratio)
// Output bytes depend only on the configuration, never on worker count or
// scheduling (the metadata wall-time line aside).  Throws
// std::invalid_argument for a bad configuration and std::runtime_error when
// a file cannot be written.
ScenarioResult run_scenario(const RunConfig& config);

}  // namespace esln
