// ensemble.cpp — deterministic Monte-Carlo reduction over stochastic
// trajectories with batch-mean error bars.
#include "esln/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "esln/filters.hpp"
#include "esln/rng.hpp"

namespace esln {

namespace {

using cplx = std::complex<double>;

// ---- compensated accumulation ----

// Neumaier update: sum += v, keeping the lost low-order bits in comp.
void comp_add(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
        comp += (sum - t) + v;
    } else {
        comp += (v - t) + sum;
    }
    sum = t;
}

void comp_add(cplx& sum, cplx& comp, const cplx& v) {
    double re = sum.real(), re_c = comp.real();
    double im = sum.imag(), im_c = comp.imag();
    comp_add(re, re_c, v.real());
    comp_add(im, im_c, v.imag());
    sum = {re, im};
    comp = {re_c, im_c};
}

// One compensated complex sum per time node.
struct SumSeries {
    std::vector<cplx> sum, comp;
    void init(std::size_t nodes) {
        sum.assign(nodes, cplx{});
        comp.assign(nodes, cplx{});
    }
    void add(std::size_t n, const cplx& v) { comp_add(sum[n], comp[n], v); }
    cplx value(std::size_t n) const { return sum[n] + comp[n]; }
};

struct BatchAccum {
    SumSeries sx, sy, sz, tr;
    std::size_t count = 0;
    void init(std::size_t nodes) {
        sx.init(nodes);
        sy.init(nodes);
        sz.init(nodes);
        tr.init(nodes);
    }
};

// One trajectory's per-node contribution; ok = false marks an exclusion.
struct Series4 {
    std::vector<cplx> sx, sy, sz, tr;
    bool ok = false;
};

// Full per-trajectory pipeline for one seed index: derive, synthesize,
// prepare the initial state, propagate.  The normalised variant contributes
// rho / Tr rho per node (its trace entries are exactly one); the other
// variants contribute the raw components.
Series4 compute_series(const EnsembleSpec& spec, const FilterSet& filters,
                       std::uint64_t seed_index) {
    Series4 out;
    Rng rng(derive_seed(spec.master_seed, seed_index));
    NoiseRealisation noise = synthesize(filters, spec.scaling, rng);

    state4 rho0 = up_density();
    if (spec.thermal_init) {
        ThermaliseOutcome prep = thermalise(spec.drive, noise.mu, spec.grid,
                                            spec.scheme, filters.sum_g2_mu_mu);
        if (prep.status != TrajectoryStatus::ok) return out;
        rho0 = prep.rho;
    }
    TrajectoryOutcome traj =
        propagate_trajectory(spec.drive, filters, spec.scheme, noise, rho0);
    if (traj.status != TrajectoryStatus::ok) return out;

    if (spec.scheme.variant == Variant::normalised) {
        const std::size_t nodes = traj.tr.size();
        out.sx.resize(nodes);
        out.sy.resize(nodes);
        out.sz.resize(nodes);
        out.tr.resize(nodes);
        for (std::size_t n = 0; n < nodes; ++n) {
            const cplx t = traj.tr[n];  // |t| is floored by the propagator
            out.sx[n] = traj.sx[n] / t;
            out.sy[n] = traj.sy[n] / t;
            out.sz[n] = traj.sz[n] / t;
            out.tr[n] = cplx(1.0, 0.0);
        }
    } else {
        out.sx = std::move(traj.sx);
        out.sy = std::move(traj.sy);
        out.sz = std::move(traj.sz);
        out.tr = std::move(traj.tr);
    }
    out.ok = true;
    return out;
}

// Standard error of a set of real batch estimates.
double batch_spread(const std::vector<double>& e) {
    const std::size_t B = e.size();
    double m = 0.0, mc = 0.0;
    for (double x : e) comp_add(m, mc, x);
    m = (m + mc) / static_cast<double>(B);
    double ss = 0.0, sc = 0.0;
    for (double x : e) comp_add(ss, sc, (x - m) * (x - m));
    return std::sqrt((ss + sc) / static_cast<double>(B - 1)) /
           std::sqrt(static_cast<double>(B));
}

double batch_spread(const std::vector<cplx>& e) {
    const std::size_t B = e.size();
    cplx m{}, mc{};
    for (const cplx& x : e) comp_add(m, mc, x);
    m = (m + mc) / static_cast<double>(B);
    double ss = 0.0, sc = 0.0;
    for (const cplx& x : e) comp_add(ss, sc, std::norm(x - m));
    return std::sqrt((ss + sc) / static_cast<double>(B - 1)) /
           std::sqrt(static_cast<double>(B));
}

}  // namespace

// ---- ensemble run ----

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    validate(spec.bath);
    validate_drive(spec.drive, spec.grid);
    if (spec.n_samples == 0)
        throw std::invalid_argument("run_ensemble: n_samples must be positive");
    if (spec.n_batches < 6)
        throw std::invalid_argument("run_ensemble: n_batches must be at least 6");
    if (spec.n_workers < 1)
        throw std::invalid_argument("run_ensemble: n_workers must be positive");
    if (!(spec.scaling.r_nu_eta > 0.0) || !(spec.scaling.r_mu_eta > 0.0))
        throw std::invalid_argument("run_ensemble: scaling ratios must be positive");

    const std::size_t S = spec.n_samples;
    const int B = spec.n_batches;
    const std::size_t nodes = spec.grid.n_steps + 1;

    const FilterSet filters =
        build_filters(eval_kernels(spec.bath, spec.grid, spec.quad, spec.thermal_init));

    // Contiguous near-equal batches over the sample indices.
    std::vector<std::size_t> bounds(static_cast<std::size_t>(B) + 1);
    for (int b = 0; b <= B; ++b)
        bounds[static_cast<std::size_t>(b)] = (static_cast<std::size_t>(b) * S) / B;
    auto batch_of = [&](std::size_t i) {
        return static_cast<int>(std::upper_bound(bounds.begin(), bounds.end(), i) -
                                bounds.begin()) -
               1;
    };

    std::vector<BatchAccum> batches(static_cast<std::size_t>(B));
    for (auto& acc : batches) acc.init(nodes);

    auto merge_into = [&](int b, const Series4& s) {
        BatchAccum& acc = batches[static_cast<std::size_t>(b)];
        for (std::size_t n = 0; n < nodes; ++n) {
            acc.sx.add(n, s.sx[n]);
            acc.sy.add(n, s.sy[n]);
            acc.sz.add(n, s.sz[n]);
            acc.tr.add(n, s.tr[n]);
        }
        ++acc.count;
    };

    // Workers compute trajectories concurrently, but contributions enter the
    // batch sums in strict index order through a cursor over parked results,
    // so every floating-point addition happens in the same order no matter
    // how many workers run or how they are scheduled.
    struct Reduce {
        std::mutex m;
        std::condition_variable cv;
        std::map<std::size_t, Series4> parked;
        std::size_t cursor = 0;
        std::vector<std::pair<std::size_t, int>> excluded;  // (index, batch)
        std::atomic<bool> abort{false};
        std::exception_ptr error;
    } red;
    const std::size_t park_cap = 4 * static_cast<std::size_t>(spec.n_workers) + 4;

    auto drain_locked = [&]() {
        while (!red.parked.empty() && red.parked.begin()->first == red.cursor) {
            auto it = red.parked.begin();
            if (it->second.ok) {
                merge_into(batch_of(it->first), it->second);
            } else {
                red.excluded.emplace_back(it->first, batch_of(it->first));
            }
            red.parked.erase(it);
            ++red.cursor;
        }
    };

    std::atomic<std::size_t> next_index{0};
    auto worker = [&]() {
        for (;;) {
            if (red.abort.load()) return;
            const std::size_t i = next_index.fetch_add(1);
            if (i >= S) return;
            Series4 s;
            try {
                s = compute_series(spec, filters, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(red.m);
                if (!red.error) red.error = std::current_exception();
                red.abort.store(true);
                red.cv.notify_all();
                return;
            }
            std::unique_lock<std::mutex> lock(red.m);
            red.cv.wait(lock, [&] {
                return red.abort.load() || red.parked.size() < park_cap ||
                       i == red.cursor;
            });
            if (red.abort.load()) return;
            red.parked.emplace(i, std::move(s));
            drain_locked();
            red.cv.notify_all();
        }
    };

    if (spec.n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(spec.n_workers));
        for (int w = 0; w < spec.n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (red.error) std::rethrow_exception(red.error);

    // Replacements: fresh seed indices S, S+1, ... fill the batches that lost
    // trajectories, first-excluded first, up to ceil(S/100) draws.
    std::deque<int> pending;
    for (const auto& entry : red.excluded) pending.push_back(entry.second);
    std::size_t n_excluded = red.excluded.size();
    const std::size_t budget = (S + 99) / 100;
    std::size_t used = 0;
    while (!pending.empty() && used < budget) {
        const std::uint64_t idx = static_cast<std::uint64_t>(S) + used;
        ++used;
        Series4 s = compute_series(spec, filters, idx);
        if (s.ok) {
            merge_into(pending.front(), s);
            pending.pop_front();
        } else {
            ++n_excluded;
        }
    }

    EnsembleResult result;
    result.n_batches = B;
    result.n_excluded = n_excluded;
    result.unreliable = !pending.empty() || n_excluded > budget;

    std::size_t total = 0;
    for (const auto& acc : batches) total += acc.count;
    result.n_samples = total;
    if (total == 0)
        throw std::runtime_error("run_ensemble: every trajectory was excluded");

    result.time.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) result.time[n] = spec.grid.t(n);

    // Global per-node sums, merged batch by batch in fixed order.
    SumSeries gx, gy, gz, gt;
    gx.init(nodes);
    gy.init(nodes);
    gz.init(nodes);
    gt.init(nodes);
    for (const auto& acc : batches) {
        for (std::size_t n = 0; n < nodes; ++n) {
            gx.add(n, acc.sx.value(n));
            gy.add(n, acc.sy.value(n));
            gz.add(n, acc.sz.value(n));
            gt.add(n, acc.tr.value(n));
        }
    }

    const cplx t0_raw = gt.value(0);
    if (!(std::abs(t0_raw) > 0.0))
        throw std::runtime_error("run_ensemble: degenerate trace normaliser");
    result.normalisation = cplx(static_cast<double>(total), 0.0) / t0_raw;

    result.mean_sx.resize(nodes);
    result.mean_sy.resize(nodes);
    result.mean_sz.resize(nodes);
    result.mean_trace.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        result.mean_sx[n] = (gx.value(n) / t0_raw).real();
        result.mean_sy[n] = (gy.value(n) / t0_raw).real();
        result.mean_sz[n] = (gz.value(n) / t0_raw).real();
        result.mean_trace[n] = gt.value(n) / t0_raw;
    }
    // The normaliser is this very sum, so the first node is one by
    // construction.
    result.mean_trace[0] = cplx(1.0, 0.0);

    // Batch-mean error bars, only when every batch received a sample and has
    // a usable normaliser of its own.
    bool full = B >= 2;
    for (const auto& acc : batches) {
        if (acc.count == 0 || !(std::abs(acc.tr.value(0)) > 0.0)) full = false;
    }
    if (full) {
        const std::size_t nb = static_cast<std::size_t>(B);
        result.err_sx.resize(nodes);
        result.err_sy.resize(nodes);
        result.err_sz.resize(nodes);
        result.err_trace.resize(nodes);
        result.batch_sz.resize(nb * nodes);
        std::vector<double> ex(nb), ey(nb), ez(nb);
        std::vector<cplx> et(nb);
        for (std::size_t n = 0; n < nodes; ++n) {
            for (std::size_t b = 0; b < nb; ++b) {
                const cplx t0b = batches[b].tr.value(0);
                ex[b] = (batches[b].sx.value(n) / t0b).real();
                ey[b] = (batches[b].sy.value(n) / t0b).real();
                ez[b] = (batches[b].sz.value(n) / t0b).real();
                et[b] = (n == 0) ? cplx(1.0, 0.0) : batches[b].tr.value(n) / t0b;
                result.batch_sz[b * nodes + n] = ez[b];
            }
            result.err_sx[n] = batch_spread(ex);
            result.err_sy[n] = batch_spread(ey);
            result.err_sz[n] = batch_spread(ez);
            result.err_trace[n] = batch_spread(et);
        }
    }
    return result;
}

// ---- late-time asymptote ----

std::pair<double, double> asymptote_estimate(const std::vector<double>& times,
                                             const std::vector<double>& values,
                                             double window_start, double window_end,
                                             int n_batches) {
    if (times.size() != values.size())
        throw std::invalid_argument("asymptote_estimate: times and values differ in length");
    if (n_batches < 6)
        throw std::invalid_argument("asymptote_estimate: n_batches must be at least 6");
    if (!(window_end >= window_start))
        throw std::invalid_argument("asymptote_estimate: window is reversed");

    const double tol =
        1e-9 * std::max({1.0, std::abs(window_start), std::abs(window_end)});
    std::vector<std::size_t> sel;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= window_start - tol && times[i] <= window_end + tol)
            sel.push_back(i);
    }
    const std::size_t m = sel.size();
    if (m < static_cast<std::size_t>(n_batches))
        throw std::invalid_argument(
            "asymptote_estimate: window holds fewer nodes than batches");

    double s = 0.0, c = 0.0;
    for (std::size_t i : sel) comp_add(s, c, values[i]);
    const double value = (s + c) / static_cast<double>(m);

    const std::size_t J = static_cast<std::size_t>(n_batches);
    std::vector<double> block(J);
    for (std::size_t j = 0; j < J; ++j) {
        const std::size_t lo = (j * m) / J;
        const std::size_t hi = ((j + 1) * m) / J;
        double bs = 0.0, bc = 0.0;
        for (std::size_t k = lo; k < hi; ++k) comp_add(bs, bc, values[sel[k]]);
        block[j] = (bs + bc) / static_cast<double>(hi - lo);
    }
    return {value, batch_spread(block)};
}

std::pair<double, double> asymptote_estimate(const EnsembleResult& result,
                                             double window_start, double window_end,
                                             int n_batches) {
    return asymptote_estimate(result.time, result.mean_sz, window_start, window_end,
                              n_batches);
}

std::pair<double, double> default_asymptote_window(double t_max) {
    return {0.35 * t_max, t_max};
}

// ---- stationarity measure ----

double stationarity_score(const EnsembleResult& result) {
    const int B = result.n_batches;
    const std::size_t nodes = result.mean_sz.size();
    if (result.batch_sz.empty() || B < 2 ||
        result.batch_sz.size() != static_cast<std::size_t>(B) * nodes)
        throw std::invalid_argument("stationarity_score: result carries no batch curves");

    double worst = 0.0;
    std::vector<double> d(static_cast<std::size_t>(B));
    for (std::size_t n = 1; n < nodes; ++n) {
        const double dev = std::abs(result.mean_sz[n] - result.mean_sz[0]);
        for (std::size_t b = 0; b < d.size(); ++b) {
            d[b] = result.batch_sz[b * nodes + n] - result.batch_sz[b * nodes];
        }
        const double se = batch_spread(d);
        if (se == 0.0) {
            if (dev > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, dev / se);
    }
    return worst;
}

// ---- Landau-Zener run description ----

void validate_lz(const LZSpec& lz, const TimeGrid& grid) {
    if (!(lz.t0 < 0.0))
        throw std::invalid_argument("lz: preparation time t0 must be negative");
    if (!std::isfinite(lz.kappa) || lz.kappa == 0.0)
        throw std::invalid_argument("lz: sweep rate must be finite and nonzero");
    if (!(lz.window_start < lz.window_end))
        throw std::invalid_argument("lz: asymptote window is reversed");
    const double tol =
        1e-9 * std::max({1.0, std::abs(grid.t0), std::abs(grid.t_max)});
    if (lz.window_start < grid.t0 - tol || lz.window_end > grid.t_max + tol)
        throw std::invalid_argument("lz: asymptote window leaves the time grid");
}

// ---- noise-splitting variance scan ----

std::vector<VarianceScanPoint> variance_scan(const EnsembleSpec& base,
                                             const std::vector<double>& ratios) {
    if (ratios.empty())
        throw std::invalid_argument("variance_scan: no ratios given");
    for (double r : ratios) {
        if (!std::isfinite(r) || !(r > 0.0))
            throw std::invalid_argument("variance_scan: ratios must be positive");
    }
    std::vector<VarianceScanPoint> table;
    table.reserve(ratios.size());
    for (std::size_t p = 0; p < ratios.size(); ++p) {
        EnsembleSpec spec = base;
        spec.scaling.r_nu_eta = ratios[p];
        spec.master_seed = derive_seed(base.master_seed, static_cast<std::uint64_t>(p));
        EnsembleResult result = run_ensemble(spec);
        VarianceScanPoint point;
        point.r_nu_eta = ratios[p];
        point.has_err = !result.err_trace.empty();
        point.err_trace_final = point.has_err ? result.err_trace.back() : 0.0;
        table.push_back(point);
    }
    return table;
}

}  // namespace esln
