// config.hpp — flat key=value run configuration: defaults, overrides,
// validation, and lowering to an ensemble specification.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "esln/ensemble.hpp"

namespace esln {

// Complete description of one simulator run.  Defaults mirror the workhorse
// parameter set (beta_hbar = 1, dt = dtau = 1e-3, omega_c = 20, delta = 1);
// each scenario overlays its own defaults (see apply_scenario_defaults)
// before explicit overrides apply.
struct RunConfig {
    // bath
    double alpha = 0.05;
    double omega_c = 20.0;
    double beta_hbar = 1.0;

    // drive: constant bias scenarios read epsilon0, sweep scenarios read
    // kappa (epsilon(t) = kappa * t in absolute time)
    double delta = 1.0;
    double epsilon0 = 0.0;
    double kappa = 5.0;

    // grids
    double t0 = 0.0;
    double t_max = 6.0;
    double dt = 1e-3;
    double dtau = 1e-3;

    // scheme
    Stepper stepper = Stepper::heun;
    Variant variant = Variant::original;
    Representation representation = Representation::density;

    // sampling
    std::size_t n_samples = 10000;
    std::uint64_t master_seed = 1;
    unsigned n_workers = 1;
    int n_batches = 12;

    // noise-split scaling
    double r_nu_eta = 0.5;
    double r_mu_eta = 1.0;

    // dispatch
    std::string scenario = "stationary";
    std::string out_dir = ".";

    // sweep-scenario knobs
    std::string init = "thermal";  // thermal | pure (initial state at t0)
    double window_start = 3.5;     // asymptote-averaging window
    double window_end = 10.0;
    std::vector<double> t0_values = {-5.0, -10.0, -20.0, -40.0};
    std::vector<double> r_values = {0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
};

// Known scenario names in dispatch order.
const std::vector<std::string>& scenario_names();

// Applies one key=value override.  Throws std::invalid_argument naming the
// key when it is unknown or its value does not parse.  Keys starting with
// "result_" are skipped so a `meta` block re-feeds as a config file.
void apply_kv(RunConfig& config, const std::string& key, const std::string& value);

// Parses flat key=value text: one pair per line, '#' starts a comment,
// blank lines are skipped, whitespace around key and value is trimmed.
// Returns pairs in file order; a non-empty line without '=' throws
// std::invalid_argument quoting it.
std::vector<std::pair<std::string, std::string>> parse_kv_text(const std::string& text);

// Overlays the scenario's default parameters (bias, window, grid span,
// sample count...) on `config`.  Throws std::invalid_argument for an
// unknown name.  Also records the name in config.scenario.
void apply_scenario_defaults(RunConfig& config, const std::string& scenario);

// Reads a file and applies its pairs onto `base` in order.  Throws
// std::invalid_argument when the file cannot be read or a pair is bad.
RunConfig load_config(const std::string& path, RunConfig base = {});

// Assembles the effective configuration: built-in defaults, then the
// scenario's defaults, then the config file (if `config_path` is
// non-empty), then `overrides` in order.  The scenario is resolved first —
// command-line flag beats the file's `scenario` key beats the built-in
// default — so its defaults sit underneath every explicit setting.
RunConfig assemble_config(
    const std::string& config_path, const std::string& scenario_flag,
    const std::vector<std::pair<std::string, std::string>>& overrides);

// Full validation; throws std::invalid_argument naming the offending key.
void validate_config(const RunConfig& config);

// Serialises every field as re-parseable key=value lines (doubles printed
// with 17 significant digits, exact round trip).  Feeding the result back
// through apply_kv reproduces the configuration bit-identically.
std::string config_echo(const RunConfig& config);

// Lowers a validated configuration to the ensemble specification: sweep
// scenarios (lz, calibrate) build the linear-sweep drive from kappa, all
// others the constant drive from epsilon0; the initial state is thermal
// exactly when init == "thermal".
EnsembleSpec to_ensemble_spec(const RunConfig& config);

}  // namespace esln
