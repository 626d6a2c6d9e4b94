// config.cpp — key=value run configuration: parsing, scenario defaults,
// validation, echo, and lowering to an ensemble specification.
#include "esln/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace esln {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != v.size() || v.empty()) bad_value(key, value);
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v.empty() || v[0] == '-') bad_value(key, value);
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(v, &used, 0);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != v.size()) bad_value(key, value);
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        const std::string v = trim(item);
        if (v.empty()) bad_value(key, value);
        out.push_back(parse_double(key, v));
    }
    if (out.empty()) bad_value(key, value);
    return out;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_double_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += format_double(xs[i]);
    }
    return out;
}

Stepper parse_stepper(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "heun") return Stepper::heun;
    if (v == "euler-maruyama") return Stepper::euler_maruyama;
    bad_value(key, value);
}

Variant parse_variant(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "original") return Variant::original;
    if (v == "guided") return Variant::guided;
    if (v == "normalised") return Variant::normalised;
    bad_value(key, value);
}

Representation parse_representation(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "density") return Representation::density;
    if (v == "spins") return Representation::spins;
    bad_value(key, value);
}

const char* stepper_name(Stepper s) {
    return s == Stepper::heun ? "heun" : "euler-maruyama";
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::guided: return "guided";
        case Variant::normalised: return "normalised";
        default: return "original";
    }
}

const char* representation_name(Representation r) {
    return r == Representation::density ? "density" : "spins";
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: " + key + " " + why);
}

void require_finite(const std::string& key, double x) {
    if (!std::isfinite(x)) invalid(key, "must be finite");
}

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "correlations", "stationary", "decay", "lz", "calibrate", "variance-scan",
    };
    return names;
}

void apply_kv(RunConfig& config, const std::string& key, const std::string& value) {
    const std::string k = trim(key);
    if (k.rfind("result_", 0) == 0) return;  // meta feedback lines are inert

    if (k == "alpha") config.alpha = parse_double(k, value);
    else if (k == "omega_c") config.omega_c = parse_double(k, value);
    else if (k == "beta_hbar") config.beta_hbar = parse_double(k, value);
    else if (k == "delta") config.delta = parse_double(k, value);
    else if (k == "epsilon0") config.epsilon0 = parse_double(k, value);
    else if (k == "kappa") config.kappa = parse_double(k, value);
    else if (k == "t0") config.t0 = parse_double(k, value);
    else if (k == "t_max") config.t_max = parse_double(k, value);
    else if (k == "dt") config.dt = parse_double(k, value);
    else if (k == "dtau") config.dtau = parse_double(k, value);
    else if (k == "stepper") config.stepper = parse_stepper(k, value);
    else if (k == "variant") config.variant = parse_variant(k, value);
    else if (k == "representation") config.representation = parse_representation(k, value);
    else if (k == "n_samples") {
        const std::uint64_t n = parse_u64(k, value);
        config.n_samples = static_cast<std::size_t>(n);
    } else if (k == "master_seed") config.master_seed = parse_u64(k, value);
    else if (k == "n_workers") {
        const std::uint64_t n = parse_u64(k, value);
        if (n == 0 || n > 4096) bad_value(k, value);
        config.n_workers = static_cast<unsigned>(n);
    } else if (k == "n_batches") {
        const std::uint64_t n = parse_u64(k, value);
        if (n == 0 || n > 100000) bad_value(k, value);
        config.n_batches = static_cast<int>(n);
    } else if (k == "r_nu_eta") config.r_nu_eta = parse_double(k, value);
    else if (k == "r_mu_eta") config.r_mu_eta = parse_double(k, value);
    else if (k == "scenario") config.scenario = trim(value);
    else if (k == "out_dir") config.out_dir = trim(value);
    else if (k == "init") {
        const std::string v = trim(value);
        if (v != "thermal" && v != "pure") bad_value(k, value);
        config.init = v;
    } else if (k == "window_start") config.window_start = parse_double(k, value);
    else if (k == "window_end") config.window_end = parse_double(k, value);
    else if (k == "t0_values") config.t0_values = parse_double_list(k, value);
    else if (k == "r_values") config.r_values = parse_double_list(k, value);
    else throw std::invalid_argument("config: unknown key '" + k + "'");
}

std::vector<std::pair<std::string, std::string>> parse_kv_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: line without '=': '" + stripped + "'");
        }
        pairs.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return pairs;
}

void apply_scenario_defaults(RunConfig& config, const std::string& scenario) {
    const std::string name = trim(scenario);
    bool known = false;
    for (const auto& s : scenario_names()) known = known || s == name;
    if (!known) throw std::invalid_argument("config: unknown scenario '" + name + "'");

    config.scenario = name;
    if (name == "correlations") {
        config.t_max = 2.0;
    } else if (name == "stationary") {
        config.epsilon0 = -1.0;
        config.t_max = 6.0;
    } else if (name == "decay") {
        config.epsilon0 = -1.0;
        config.t_max = 15.0;
        config.init = "pure";
    } else if (name == "lz") {
        config.alpha = 0.01;
        config.t0 = -10.0;
        config.t_max = 10.0;
        config.kappa = 5.0;
        config.window_start = 3.5;
        config.window_end = 10.0;
        config.init = "thermal";
    } else if (name == "calibrate") {
        config.alpha = 0.0;
        config.t0 = -10.0;
        config.t_max = 10.0;
        config.kappa = 5.0;
        config.n_samples = 1;
        config.init = "pure";
    } else if (name == "variance-scan") {
        config.delta = 0.0;
        config.epsilon0 = 0.0;
        config.t_max = 10.0;
        config.n_samples = 10000;
    }
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot read file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    for (const auto& [key, value] : parse_kv_text(text.str())) {
        apply_kv(base, key, value);
    }
    return base;
}

RunConfig assemble_config(
    const std::string& config_path, const std::string& scenario_flag,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::vector<std::pair<std::string, std::string>> file_pairs;
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw std::invalid_argument("config: cannot read file '" + config_path + "'");
        std::ostringstream text;
        text << in.rdbuf();
        file_pairs = parse_kv_text(text.str());
    }

    // The scenario decides the default layer, so resolve it before anything
    // else: explicit flag, else the last scenario key anywhere, else the
    // built-in default.
    std::string scenario = trim(scenario_flag);
    if (scenario.empty()) {
        for (const auto& [key, value] : file_pairs) {
            if (trim(key) == "scenario") scenario = trim(value);
        }
        for (const auto& [key, value] : overrides) {
            if (trim(key) == "scenario") scenario = trim(value);
        }
    }
    if (scenario.empty()) scenario = RunConfig{}.scenario;

    RunConfig config;
    apply_scenario_defaults(config, scenario);
    for (const auto& [key, value] : file_pairs) apply_kv(config, key, value);
    for (const auto& [key, value] : overrides) apply_kv(config, key, value);
    config.scenario = scenario;
    return config;
}

void validate_config(const RunConfig& config) {
    require_finite("alpha", config.alpha);
    require_finite("omega_c", config.omega_c);
    require_finite("beta_hbar", config.beta_hbar);
    require_finite("delta", config.delta);
    require_finite("epsilon0", config.epsilon0);
    require_finite("kappa", config.kappa);
    require_finite("t0", config.t0);
    require_finite("t_max", config.t_max);
    require_finite("dt", config.dt);
    require_finite("dtau", config.dtau);
    require_finite("r_nu_eta", config.r_nu_eta);
    require_finite("r_mu_eta", config.r_mu_eta);

    if (config.dt <= 0.0) invalid("dt", "must be positive");
    if (config.dtau <= 0.0) invalid("dtau", "must be positive");
    if (config.t_max < config.t0) invalid("t_max", "must be >= t0");
    if (config.n_samples == 0) invalid("n_samples", "must be at least 1");
    if (config.n_workers == 0) invalid("n_workers", "must be at least 1");
    if (config.n_batches < 1) invalid("n_batches", "must be at least 1");
    if (config.r_nu_eta <= 0.0) invalid("r_nu_eta", "must be positive");
    if (config.r_mu_eta <= 0.0) invalid("r_mu_eta", "must be positive");
    if (config.init != "thermal" && config.init != "pure") {
        invalid("init", "must be 'thermal' or 'pure'");
    }

    bool known = false;
    for (const auto& s : scenario_names()) known = known || s == config.scenario;
    if (!known) throw std::invalid_argument("config: unknown scenario '" + config.scenario + "'");

    const bool swept = config.scenario == "lz" || config.scenario == "calibrate";
    if (swept) {
        if (config.delta == 0.0) invalid("delta", "must be nonzero for sweep scenarios");
        if (config.kappa <= 0.0) invalid("kappa", "must be positive for sweep scenarios");
        if (!(config.t0 < 0.0)) invalid("t0", "must be negative so the sweep crosses zero");
        if (!(config.t_max > 0.0)) invalid("t_max", "must be positive so the sweep crosses zero");
    }
    if (config.scenario == "lz") {
        require_finite("window_start", config.window_start);
        require_finite("window_end", config.window_end);
        if (!(config.window_start < config.window_end)) {
            invalid("window_start", "must be below window_end");
        }
        if (config.window_start < config.t0 - 1e-9 || config.window_end > config.t_max + 1e-9) {
            invalid("window_end", "window must lie inside [t0, t_max]");
        }
    }
    if (config.scenario == "calibrate") {
        if (config.t0_values.empty()) invalid("t0_values", "must not be empty");
        for (double v : config.t0_values) {
            require_finite("t0_values", v);
            if (!(v < 0.0)) invalid("t0_values", "entries must be negative sweep starts");
        }
    }
    if (config.scenario == "variance-scan") {
        if (config.r_values.empty()) invalid("r_values", "must not be empty");
        for (double v : config.r_values) {
            require_finite("r_values", v);
            if (!(v > 0.0)) invalid("r_values", "entries must be positive ratios");
        }
    }

    // Surface the library-level constraints (bath ranges, grid span
    // divisibility, sweep crossing) with their own messages.
    const EnsembleSpec spec = to_ensemble_spec(config);
    validate(spec.bath);
    validate_drive(spec.drive, spec.grid);
}

std::string config_echo(const RunConfig& config) {
    std::ostringstream out;
    out << "scenario = " << config.scenario << '\n'
        << "out_dir = " << config.out_dir << '\n'
        << "alpha = " << format_double(config.alpha) << '\n'
        << "omega_c = " << format_double(config.omega_c) << '\n'
        << "beta_hbar = " << format_double(config.beta_hbar) << '\n'
        << "delta = " << format_double(config.delta) << '\n'
        << "epsilon0 = " << format_double(config.epsilon0) << '\n'
        << "kappa = " << format_double(config.kappa) << '\n'
        << "t0 = " << format_double(config.t0) << '\n'
        << "t_max = " << format_double(config.t_max) << '\n'
        << "dt = " << format_double(config.dt) << '\n'
        << "dtau = " << format_double(config.dtau) << '\n'
        << "stepper = " << stepper_name(config.stepper) << '\n'
        << "variant = " << variant_name(config.variant) << '\n'
        << "representation = " << representation_name(config.representation) << '\n'
        << "init = " << config.init << '\n'
        << "n_samples = " << config.n_samples << '\n'
        << "master_seed = " << config.master_seed << '\n'
        << "n_workers = " << config.n_workers << '\n'
        << "n_batches = " << config.n_batches << '\n'
        << "r_nu_eta = " << format_double(config.r_nu_eta) << '\n'
        << "r_mu_eta = " << format_double(config.r_mu_eta) << '\n'
        << "window_start = " << format_double(config.window_start) << '\n'
        << "window_end = " << format_double(config.window_end) << '\n'
        << "t0_values = " << format_double_list(config.t0_values) << '\n'
        << "r_values = " << format_double_list(config.r_values) << '\n';
    return out.str();
}

EnsembleSpec to_ensemble_spec(const RunConfig& config) {
    EnsembleSpec spec;
    spec.bath = BathSpec{config.alpha, config.omega_c, config.beta_hbar};
    const bool swept = config.scenario == "lz" || config.scenario == "calibrate";
    spec.drive = swept ? sweep_drive(config.delta, config.kappa)
                       : constant_drive(config.delta, config.epsilon0);
    spec.grid = make_grid(config.t0, config.t_max, config.dt, config.dtau, config.beta_hbar);
    spec.scheme = SchemeSpec{config.stepper, config.variant, config.representation};
    spec.scaling = ScalingSpec{config.r_nu_eta, config.r_mu_eta};
    spec.quad = QuadratureSpec{};
    spec.n_samples = config.n_samples;
    spec.master_seed = config.master_seed;
    spec.n_workers = static_cast<int>(config.n_workers);
    spec.n_batches = config.n_batches;
    spec.thermal_init = config.init == "thermal";
    return spec;
}

}  // namespace esln
