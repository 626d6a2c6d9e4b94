// scenarios.cpp — scenario execution: ensemble runs, sampled correlation
// tables, sweep-limit summaries, and plot-ready CSV output.
#include "esln/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "esln/filters.hpp"
#include "esln/noise.hpp"
#include "esln/rng.hpp"

namespace esln {

namespace {

using cplx = std::complex<double>;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Complex sample-mean accumulator; err is sqrt(var_re + var_im) / sqrt(n),
// one standard error of the complex mean.
struct Acc {
    double sr = 0.0, si = 0.0, srr = 0.0, sii = 0.0;
    long n = 0;
    void add(cplx v) {
        sr += v.real();
        si += v.imag();
        srr += v.real() * v.real();
        sii += v.imag() * v.imag();
        ++n;
    }
    cplx mean() const { return {sr / n, si / n}; }
    double err() const {
        const double vr = srr / n - (sr / n) * (sr / n);
        const double vi = sii / n - (si / n) * (si / n);
        return std::sqrt(std::max(vr, 0.0) + std::max(vi, 0.0)) /
               std::sqrt(static_cast<double>(n));
    }
};

// Twenty quadratically spaced lags in [1, n]: dense near zero where the
// kernels move fastest, reaching the window edge.  Duplicates collapse on
// coarse grids, so the list may be shorter than twenty.
std::vector<std::size_t> quadratic_lags(std::size_t n) {
    std::vector<std::size_t> lags;
    for (int k = 1; k <= 20; ++k) {
        const double f = static_cast<double>(k) / 20.0;
        auto lag = static_cast<std::size_t>(std::llround(f * f * static_cast<double>(n)));
        lag = std::max<std::size_t>(lag, 1);
        lag = std::min(lag, n);
        if (lags.empty() || lags.back() != lag) lags.push_back(lag);
    }
    return lags;
}

// 5 x 4 grid of (t-node, tau-node) pairs for the mixed-domain kernel: the
// t side clusters inside the kernel's support near t = 0, the tau side
// spans the full thermal window.
std::vector<std::pair<std::size_t, std::size_t>> cross_pairs(std::size_t n_max,
                                                             std::size_t m_max) {
    const double nf[] = {0.0, 0.01, 0.04, 0.09, 0.25};
    const double mf[] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (double a : nf) {
        for (double b : mf) {
            const auto n = static_cast<std::size_t>(std::llround(a * static_cast<double>(n_max)));
            const auto m = static_cast<std::size_t>(std::llround(b * static_cast<double>(m_max)));
            const std::pair<std::size_t, std::size_t> p{n, m};
            if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
        }
    }
    return pairs;
}

// Window-averaged plain product at one lag: mean over the window start of
// a(start + lag) * b(start).
cplx lag_product(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t lag) {
    const std::size_t count = b.size() - lag;
    cplx sum{};
    for (std::size_t n = 0; n < count; ++n) sum += a[n + lag] * b[n];
    return sum / static_cast<double>(count);
}

cplx window_mean(const std::vector<cplx>& a) {
    cplx sum{};
    for (const cplx& v : a) sum += v;
    return sum / static_cast<double>(a.size());
}

// ---- file output ----

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

std::string observables_csv(const EnsembleResult& result) {
    std::ostringstream out;
    out << "t, sx_mean, sx_err, sy_mean, sy_err, sz_mean, sz_err, "
           "trace_re, trace_im, trace_err\n";
    const std::size_t nodes = result.time.size();
    const bool has_err = !result.err_sz.empty();
    for (std::size_t n = 0; n < nodes; ++n) {
        out << fmt(result.time[n]) << ", "
            << fmt(result.mean_sx[n]) << ", " << fmt(has_err ? result.err_sx[n] : 0.0) << ", "
            << fmt(result.mean_sy[n]) << ", " << fmt(has_err ? result.err_sy[n] : 0.0) << ", "
            << fmt(result.mean_sz[n]) << ", " << fmt(has_err ? result.err_sz[n] : 0.0) << ", "
            << fmt(result.mean_trace[n].real()) << ", "
            << fmt(result.mean_trace[n].imag()) << ", "
            << fmt(has_err ? result.err_trace[n] : 0.0) << '\n';
    }
    return out.str();
}

std::string meta_text(const RunConfig& config, const EnsembleResult& result, double wall_s) {
    std::ostringstream out;
    out << "# effective configuration (re-runnable as a config file)\n"
        << config_echo(config)
        << "# results\n"
        << "result_accepted = " << result.n_samples << '\n'
        << "result_excluded = " << result.n_excluded << '\n'
        << "result_unreliable = " << (result.unreliable ? 1 : 0) << '\n'
        << "result_batches = " << result.n_batches << '\n'
        << "result_rows = " << result.time.size() << '\n'
        << "result_normalisation_re = " << fmt(result.normalisation.real()) << '\n'
        << "result_normalisation_im = " << fmt(result.normalisation.imag()) << '\n';
    char wall[64];
    std::snprintf(wall, sizeof wall, "%.3f", wall_s);
    out << "result_wall_time_s = " << wall << '\n';
    return out.str();
}

std::string correlations_csv(const std::vector<CorrelationRow>& rows) {
    std::ostringstream out;
    out << "family, i, j, target_re, target_im, mean_re, mean_im, err\n";
    for (const auto& row : rows) {
        out << row.family << ", " << row.i << ", " << row.j << ", "
            << fmt(row.target.real()) << ", " << fmt(row.target.imag()) << ", "
            << fmt(row.mean.real()) << ", " << fmt(row.mean.imag()) << ", "
            << fmt(row.err) << '\n';
    }
    return out.str();
}

std::string asymptote_text(const RunConfig& config, const EnsembleResult& result) {
    const auto [mean, err] =
        asymptote_estimate(result, config.window_start, config.window_end, config.n_batches);
    const double sweep_limit = lz_limit(config.delta, config.kappa);
    const double modified_limit =
        modified_lz_limit(config.delta, config.kappa, config.t0, config.t_max, 1e-4);
    std::ostringstream out;
    out << "window_start = " << fmt(config.window_start) << '\n'
        << "window_end = " << fmt(config.window_end) << '\n'
        << "n_batches = " << config.n_batches << '\n'
        << "mean_sz = " << fmt(mean) << '\n'
        << "stderr = " << fmt(err) << '\n'
        << "lz_limit = " << fmt(sweep_limit) << '\n'
        << "modified_lz_limit = " << fmt(modified_limit) << '\n'
        << "sigmas_from_lz_limit = " << fmt(std::abs(mean - sweep_limit) / err) << '\n'
        << "sigmas_from_modified_limit = " << fmt(std::abs(mean - modified_limit) / err) << '\n';
    return out.str();
}

std::string deviations_csv(const RunConfig& config) {
    const double sweep_limit = lz_limit(config.delta, config.kappa);
    std::ostringstream out;
    out << "t0, modified_limit, sweep_limit, deviation\n";
    for (double start : config.t0_values) {
        const double modified =
            modified_lz_limit(config.delta, config.kappa, start, config.t_max, 1e-4);
        out << fmt(start) << ", " << fmt(modified) << ", " << fmt(sweep_limit) << ", "
            << fmt(modified - sweep_limit) << '\n';
    }
    return out.str();
}

std::string scan_csv(const EnsembleSpec& spec, const std::vector<double>& r_values) {
    std::vector<double> ratios = r_values;
    std::sort(ratios.begin(), ratios.end());
    ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
    const auto points = variance_scan(spec, ratios);
    std::ostringstream out;
    out << "r_nu_eta, err_trace_final, has_err\n";
    for (const auto& point : points) {
        out << fmt(point.r_nu_eta) << ", " << fmt(point.err_trace_final) << ", "
            << (point.has_err ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace

std::vector<CorrelationRow> correlation_table(const EnsembleSpec& spec) {
    if (spec.grid.n_steps < 1) {
        throw std::invalid_argument(
            "correlation table needs a real-time window (t_max > t0)");
    }
    if (spec.n_samples < 1) throw std::invalid_argument("correlation table needs samples");

    const FilterSet filters = build_filters(eval_kernels(spec.bath, spec.grid, spec.quad, true));
    const KernelTable& kernels = filters.kernels;
    const std::size_t n_max = spec.grid.n_steps;
    const std::size_t m_max = spec.grid.m_steps;

    const auto lags_t = quadratic_lags(n_max);
    const auto lags_tau = quadratic_lags(m_max);
    const auto pairs = cross_pairs(n_max, m_max);

    std::vector<Acc> acc_ee(lags_t.size()), acc_en(lags_t.size()), acc_mm(lags_tau.size());
    std::vector<Acc> acc_em(pairs.size());
    Acc acc_nn, acc_nm;

    for (std::size_t sample = 0; sample < spec.n_samples; ++sample) {
        Rng rng(derive_seed(spec.master_seed, sample));
        const NoiseRealisation nz = synthesize(filters, spec.scaling, rng);

        for (std::size_t k = 0; k < lags_t.size(); ++k) {
            acc_ee[k].add(lag_product(nz.eta, nz.eta, lags_t[k]));
            acc_en[k].add(lag_product(nz.eta, nz.nu, lags_t[k]));
        }
        for (std::size_t k = 0; k < lags_tau.size(); ++k) {
            acc_mm[k].add(lag_product(nz.mu, nz.mu, lags_tau[k]));
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            acc_em[k].add(nz.eta[pairs[k].first] * nz.mu[pairs[k].second]);
        }

        // Null checks: both pairings carry no kernel, so average as widely
        // as possible — every sampled lag for nu-nu, the product of the
        // whole-window means for nu-mu.
        cplx nn{};
        for (std::size_t lag : lags_t) nn += lag_product(nz.nu, nz.nu, lag);
        acc_nn.add(nn / static_cast<double>(lags_t.size()));
        acc_nm.add(window_mean(nz.nu) * window_mean(nz.mu));
    }

    std::vector<CorrelationRow> rows;
    for (std::size_t k = 0; k < lags_t.size(); ++k) {
        rows.push_back({"eta_eta", lags_t[k], 0, kernels.k_eta_eta[lags_t[k]],
                        acc_ee[k].mean(), acc_ee[k].err()});
    }
    for (std::size_t k = 0; k < lags_t.size(); ++k) {
        rows.push_back({"eta_nu", lags_t[k], 0, kernels.k_eta_nu[lags_t[k]],
                        acc_en[k].mean(), acc_en[k].err()});
    }
    for (std::size_t k = 0; k < lags_tau.size(); ++k) {
        rows.push_back({"mu_mu", lags_tau[k], 0, kernels.k_mu_mu[lags_tau[k]],
                        acc_mm[k].mean(), acc_mm[k].err()});
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        rows.push_back({"eta_mu", pairs[k].first, pairs[k].second,
                        kernels.eta_mu(pairs[k].first, pairs[k].second),
                        acc_em[k].mean(), acc_em[k].err()});
    }
    rows.push_back({"nu_nu", 0, 0, cplx{}, acc_nn.mean(), acc_nn.err()});
    rows.push_back({"nu_mu", 0, 0, cplx{}, acc_nm.mean(), acc_nm.err()});
    return rows;
}

ScenarioResult run_scenario(const RunConfig& config) {
    validate_config(config);
    const EnsembleSpec spec = to_ensemble_spec(config);

    const auto clock_start = std::chrono::steady_clock::now();
    const EnsembleResult result = run_ensemble(spec);

    // Scenario extras are computed before anything is written so a failure
    // leaves no partial directory behind.
    std::string extra_name;
    std::string extra_text;
    if (config.scenario == "correlations") {
        extra_name = "correlations.csv";
        extra_text = correlations_csv(correlation_table(spec));
    } else if (config.scenario == "lz") {
        extra_name = "asymptote.txt";
        extra_text = asymptote_text(config, result);
    } else if (config.scenario == "calibrate") {
        extra_name = "deviations.csv";
        extra_text = deviations_csv(config);
    } else if (config.scenario == "variance-scan") {
        extra_name = "scan.csv";
        extra_text = scan_csv(spec, config.r_values);
    }

    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - clock_start;

    std::error_code dir_error;
    std::filesystem::create_directories(config.out_dir, dir_error);
    if (dir_error) {
        throw std::runtime_error("cannot create output directory '" + config.out_dir +
                                 "': " + dir_error.message());
    }

    ScenarioResult out;
    out.unreliable = result.unreliable;
    const auto emit = [&out](const std::filesystem::path& dir, const std::string& name,
                             const std::string& text) {
        const std::string path = (dir / name).string();
        write_text(path, text);
        out.files.push_back(path);
    };
    const std::filesystem::path dir(config.out_dir);
    emit(dir, "observables.csv", observables_csv(result));
    emit(dir, "meta", meta_text(config, result, wall.count()));
    if (!extra_name.empty()) emit(dir, extra_name, extra_text);
    return out;
}

}  // namespace esln
