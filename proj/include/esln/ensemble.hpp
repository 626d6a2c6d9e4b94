// ensemble.hpp — Monte-Carlo averaging of exactly-thermalised stochastic
// trajectories: physical normalisation, batch-mean error bars, asymptote
// estimation, and the noise-splitting variance scan.
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "esln/bath.hpp"
#include "esln/kernels.hpp"
#include "esln/noise.hpp"
#include "esln/propagate.hpp"

namespace esln {

// ---- run description ----

struct EnsembleSpec {
    BathSpec bath{};
    SpinBosonDrive drive{};
    TimeGrid grid{};
    SchemeSpec scheme{};
    ScalingSpec scaling{};
    QuadratureSpec quad{};
    std::size_t n_samples = 10000;
    std::uint64_t master_seed = 1;
    int n_workers = 1;
    int n_batches = 12;  // batch-mean error bars need at least 6
    // true: prepare each trajectory by imaginary-time integration from the
    // identity (thermal state at t0).  false: start from the pure up state
    // and skip the thermal noise channels entirely.
    bool thermal_init = true;
};

// ---- result ----

// Observables of the physical density matrix rho_ph = <rho> / Tr<rho(t0)>,
// one entry per real-time node.  Standard errors come from splitting the
// sample range into n_batches near-equal contiguous batches, normalising
// each batch by its own mean t0 trace, and taking the spread of the batch
// estimates; they are present only when every batch received at least one
// accepted trajectory (a single-sample run reports no error bars).
struct EnsembleResult {
    std::vector<double> time;                       // absolute node times
    std::vector<double> mean_sx, mean_sy, mean_sz;  // physical spin means
    std::vector<std::complex<double>> mean_trace;   // exactly 1 at the first node
    std::vector<double> err_sx, err_sy, err_sz, err_trace;
    std::complex<double> normalisation{1.0, 0.0};  // 1 / (mean raw trace at t0)
    std::size_t n_samples = 0;   // accepted trajectories
    std::size_t n_excluded = 0;  // discarded draws, original and replacement
    bool unreliable = false;     // exclusion budget exhausted
    int n_batches = 0;
    // Per-batch physical z-spin curves, batch-major: batch_sz[b * nodes + n].
    // Empty whenever the error bars are absent.
    std::vector<double> batch_sz;
};

// Runs the full pipeline: build kernels and filters once, then per
// trajectory derive the seed, synthesize noises, thermalise from the
// identity (or take the pure up state), propagate, and accumulate per-node
// sums with compensated summation.  The mean is divided by the ensemble
// mean of the t0 trace, so Tr rho_ph(t0) = 1 exactly.
//
// Trajectories flagged divergent or pathological are excluded and replaced
// by fresh seeds (indices n_samples, n_samples + 1, ...) feeding the batch
// of the trajectory they replace, up to a budget of ceil(0.01 * n_samples)
// replacement draws; when the budget runs out the result is marked
// unreliable.  n_excluded counts every discarded draw.
//
// Results are bitwise independent of n_workers and of thread scheduling:
// worker contributions merge into the batch sums in strict trajectory-index
// order and replacements run single-threaded afterwards.
//
// Throws std::invalid_argument on a bad spec (zero samples, fewer than 6
// batches, no workers, invalid bath/drive/grid) and std::runtime_error when
// no trajectory is accepted at all.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

// ---- late-time asymptote ----

// Boxed-region batch-mean estimate: selects the nodes with
// window_start <= times[i] <= window_end (inclusive to a 1e-9 tolerance),
// splits them into n_batches near-equal contiguous blocks, and returns the
// mean over the window together with the standard error of the block means.
// Throws std::invalid_argument when sizes mismatch, n_batches < 6, or the
// window holds fewer nodes than batches.
std::pair<double, double> asymptote_estimate(const std::vector<double>& times,
                                             const std::vector<double>& values,
                                             double window_start, double window_end,
                                             int n_batches = 12);

// Same estimate applied to the mean z-spin curve of an ensemble result.
std::pair<double, double> asymptote_estimate(const EnsembleResult& result,
                                             double window_start, double window_end,
                                             int n_batches = 12);

// Default boxed window for sweep runs: [0.35 * t_max, t_max].
std::pair<double, double> default_asymptote_window(double t_max);

// ---- stationarity measure ----

// Largest deviation of the mean z-spin from its first node, measured in
// units of the batch standard error of that same difference (the per-batch
// curves remove the common normaliser fluctuation).  Returns 0 for a flat
// curve, +infinity when a nonzero deviation comes with zero batch spread.
// Throws std::invalid_argument when the result carries no batch curves.
double stationarity_score(const EnsembleResult& result);

// ---- Landau-Zener run description ----

enum class LZInit { pure_up, thermal_at_t0 };

// Sweep-run parameters: epsilon(t) = kappa * t from a finite preparation
// time t0 < 0, with the boxed asymptote window [window_start, window_end].
struct LZSpec {
    double kappa = 5.0;
    double t0 = -10.0;
    LZInit init = LZInit::thermal_at_t0;
    double window_start = 3.5;
    double window_end = 10.0;
};

// Throws std::invalid_argument unless t0 < 0 and
// grid.t0 <= window_start < window_end <= grid.t_max (1e-9 tolerance).
void validate_lz(const LZSpec& lz, const TimeGrid& grid);

// ---- noise-splitting variance scan ----

struct VarianceScanPoint {
    double r_nu_eta = 0.0;        // amplitude ratio scanned
    double err_trace_final = 0.0; // stderr of the mean trace at t_max
    bool has_err = false;         // false when batches were too thin
};

// Reruns `base` once per ratio with scaling.r_nu_eta replaced and reports
// the final-node trace stderr.  Each point derives its own master seed from
// base.master_seed and the point index, so points are independent but the
// whole scan is reproducible.  Throws std::invalid_argument on an empty
// ratio list or a non-positive ratio.
std::vector<VarianceScanPoint> variance_scan(const EnsembleSpec& base,
                                             const std::vector<double>& ratios);

}  // namespace esln
