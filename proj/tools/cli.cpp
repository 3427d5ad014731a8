#include "cli.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "switchstab/switchstab.hpp"

namespace switchstab::cli {
namespace {

struct McFlags {
    double T = 1000.0;
    std::optional<double> burn_in;
    std::size_t reps = 100;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
};

std::uint64_t default_seed() {
    const char* env = std::getenv("SWITCHSTAB_SEED");
    if (!env || !*env) return 0;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(env, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != std::string(env).size()) throw InputError("SWITCHSTAB_SEED must be a nonnegative integer");
    return v;
}

void add_mc_flags(CLI::App* cmd, McFlags& f) {
    cmd->add_option("--T", f.T, "horizon after burn-in")->check(CLI::PositiveNumber);
    cmd->add_option("--burn-in", f.burn_in, "discarded initial time (default T/10)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--reps", f.reps, "independent replicas")->check(CLI::Range(2, 100000000));
    cmd->add_option("--seed", f.seed, "master seed (default $SWITCHSTAB_SEED or 0)");
    cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
}

McConfig mc_config(const McFlags& f) {
    McConfig cfg;
    cfg.horizon = f.T;
    cfg.burn_in = f.burn_in;
    cfg.replicas = f.reps;
    cfg.seed = f.seed.value_or(default_seed());
    cfg.threads = f.threads;
    return cfg;
}

/// Writes `body` to `path`, or to `out` when path is empty.
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(out);
        return;
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    body(f);
    if (!f) throw InputError("failed writing '" + path + "'");
}

std::vector<double> parse_log_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw InputError("--r-grid: expected min:max:points");
    double lo = 0.0, hi = 0.0;
    long n = 0;
    try {
        lo = std::stod(parts[0]);
        hi = std::stod(parts[1]);
        n = std::stol(parts[2]);
    } catch (const std::exception&) {
        throw InputError("--r-grid: could not parse '" + text + "'");
    }
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw InputError("--r-grid: need 0 < min <= max");
    if (n < 1 || (n == 1 && hi != lo)) throw InputError("--r-grid: need points >= 2 (or 1 with min == max)");
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k)
        grid[k] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (n - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(p, &used));
            if (used != p.size()) throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw InputError(std::string(flag) + ": could not parse '" + p + "'");
        }
        if (!(out.back() > 0.0)) throw InputError(std::string(flag) + ": values must be positive");
    }
    if (out.empty()) throw InputError(std::string(flag) + ": empty list");
    return out;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

void print_matrix(std::ostream& out, const SquareMatrix& m) {
    out << '[';
    for (std::size_t i = 0; i < m.dim(); ++i) {
        out << (i ? ", [" : "[");
        for (std::size_t j = 0; j < m.dim(); ++j) out << (j ? ", " : "") << io::fmt(m(i, j));
        out << ']';
    }
    out << ']';
}

void cmd_check(const SystemSpecFile& spec, std::ostream& out) {
    const SwitchedSystem& sys = spec.system;
    out << "dimension " << sys.dim() << ", states " << sys.states() << ", r " << io::fmt(sys.rate()) << '\n';
    for (std::size_t i = 0; i < sys.states(); ++i) {
        const auto& a = sys.matrices()[i];
        out << "A_" << i << ": " << to_string(is_hurwitz(a)) << ", spectral abscissa "
            << io::fmt(eigenvalues(a).spectral_abscissa) << ", normal " << yes_no(is_normal(a)) << '\n';
    }
    for (std::size_t i = 0; i < sys.states(); ++i)
        for (std::size_t j = i + 1; j < sys.states(); ++j)
            out << "A_" << i << ", A_" << j << " commute: " << yes_no(commute(sys.matrices()[i], sys.matrices()[j]))
                << '\n';
    out << "pi:";
    for (double p : sys.stationary()) out << ' ' << io::fmt(p);
    out << '\n';
    const SquareMatrix avg = sys.average();
    out << "Abar: ";
    print_matrix(out, avg);
    out << "\nAbar: " << to_string(is_hurwitz(avg)) << ", spectral abscissa "
        << io::fmt(eigenvalues(avg).spectral_abscissa) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stability of linear ODEs switched by a continuous-time Markov chain", "switchstab"};
    app.require_subcommand(1);
    std::function<void()> action;

    // check
    std::string spec_path;
    auto* check = app.add_subcommand("check", "report Hurwitz/normal/commuting properties of a system");
    check->add_option("spec", spec_path, "system spec JSON")->required();
    check->callback([&] { action = [&] { cmd_check(load_spec(spec_path), out); }; });

    // lyapunov
    McFlags lf;
    std::string ly_out, ly_traj;
    auto* lyap = app.add_subcommand("lyapunov", "Monte Carlo top Lyapunov exponent");
    lyap->add_option("spec", spec_path, "system spec JSON")->required();
    add_mc_flags(lyap, lf);
    lyap->add_option("--out", ly_out, "per-replica CSV (replica, estimate)");
    lyap->add_option("--trajectory", ly_traj, "CSV of one polar trajectory (t, state, log_radius, theta)");
    lyap->callback([&] {
        action = [&] {
            const auto spec = load_spec(spec_path);
            const McConfig cfg = mc_config(lf);
            const auto est = lyapunov_mc(spec.system, cfg);
            out << "mean=" << io::fmt(est.mean) << " stderr=" << io::fmt(est.stderr())
                << " verdict=" << to_string(est.verdict()) << " reps=" << est.replicas << " T=" << io::fmt(est.horizon)
                << " burn_in=" << io::fmt(est.burn_in) << '\n';
            if (!ly_out.empty())
                emit(ly_out, out, [&](std::ostream& os) {
                    os << "replica,estimate\n";
                    for (std::size_t k = 0; k < est.values.size(); ++k) os << k << ',' << io::fmt(est.values[k]) << '\n';
                });
            if (!ly_traj.empty()) {
                Stream stream = Stream::derive(cfg.seed, {stream_label::kPathSample, 0});
                const std::size_t i0 = sample_state(spec.system.stationary(), stream);
                const auto path = sample_path(spec.system.generator(), spec.system.rate(), i0, cfg.horizon, stream);
                const auto rows = trajectory(spec.system, path, default_direction(spec.system.dim()));
                emit(ly_traj, out, [&](std::ostream& os) { io::write_trajectory_csv(os, rows); });
            }
        };
    });

    // scan
    McFlags sf;
    std::string grid_text, scan_out;
    bool want_analytic = false, want_mc = false;
    double scan_tol = 1e-10;
    auto* scan = app.add_subcommand("scan", "exponent over a logarithmic grid of switching rates");
    scan->add_option("spec", spec_path, "system spec JSON")->required();
    scan->add_option("--r-grid", grid_text, "min:max:points (logarithmic)")->required();
    scan->add_flag("--analytic", want_analytic, "closed-form exponent (planar and multi families)");
    scan->add_flag("--mc", want_mc, "Monte Carlo exponent");
    scan->add_option("--tol", scan_tol, "quadrature tolerance")->check(CLI::PositiveNumber);
    scan->add_option("--out", scan_out, "CSV output (default stdout)");
    add_mc_flags(scan, sf);
    scan->callback([&] {
        action = [&] {
            const auto spec = load_spec(spec_path);
            const auto grid = parse_log_grid(grid_text);
            const bool analytic = want_analytic || !want_mc;
            std::vector<std::optional<double>> an(grid.size()), mc(grid.size()), se(grid.size());
            for (std::size_t k = 0; k < grid.size(); ++k) {
                if (analytic) an[k] = spec.analytic(grid[k], scan_tol);
                if (want_mc) {
                    const auto est = lyapunov_mc(spec.system.with_rate(grid[k]), mc_config(sf));
                    mc[k] = est.mean;
                    se[k] = est.stderr();
                }
            }
            emit(scan_out, out, [&](std::ostream& os) {
                os << "r,lambda_analytic,lambda_mc,mc_stderr\n";
                for (std::size_t k = 0; k < grid.size(); ++k)
                    os << io::fmt(grid[k]) << ',' << io::fmt(an[k]) << ',' << io::fmt(mc[k]) << ',' << io::fmt(se[k])
                       << '\n';
            });
            if (!scan_out.empty()) out << "wrote " << grid.size() << " rows to " << scan_out << '\n';
        };
    });

    // window
    double w_alpha = 0.0, w_c = 0.0, w_tol = 1e-10;
    std::string w_out;
    auto* window = app.add_subcommand("window", "instability window of the planar family");
    window->add_option("--alpha", w_alpha, "alpha > 0")->required()->check(CLI::PositiveNumber);
    window->add_option("--c", w_c, "c > 0")->required()->check(CLI::PositiveNumber);
    window->add_option("--tol", w_tol, "tolerance")->check(CLI::PositiveNumber);
    window->add_option("--out", w_out, "JSON output (default stdout)");
    window->callback([&] {
        action = [&] {
            const auto w = find_window({w_alpha, w_c}, w_tol);
            emit(w_out, out, [&](std::ostream& os) { os << io::window_to_json(w).dump(2) << '\n'; });
        };
    });

    // construct
    std::size_t c_k = 1;
    double c_alpha1 = 0.0, c_c1 = 0.0;
    std::optional<double> c_N;
    std::string c_out, c_windows_out;
    auto* construct = app.add_subcommand("construct", "block system with k instability windows");
    construct->add_option("--k", c_k, "number of windows")->required()->check(CLI::Range(1, 1000));
    construct->add_option("--alpha1", c_alpha1, "alpha of the first block")->required()->check(CLI::PositiveNumber);
    construct->add_option("--c1", c_c1, "c of the first block")->required()->check(CLI::PositiveNumber);
    construct->add_option("--N", c_N, "scale factor between blocks (default 2 b1/a1)");
    construct->add_option("--out", c_out, "system JSON output")->required();
    construct->add_option("--windows-out", c_windows_out, "windows report JSON (also printed)");
    construct->callback([&] {
        action = [&] {
            const auto spec = multi_transition(c_k, c_alpha1, c_c1, c_N);
            emit(c_out, out, [&](std::ostream& os) { os << io::system_to_json(spec.system(spec.r1)).dump(2) << '\n'; });
            const auto report = io::windows_report(spec).dump(2);
            out << report << '\n';
            if (!c_windows_out.empty()) emit(c_windows_out, out, [&](std::ostream& os) { os << report << '\n'; });
        };
    });

    // density
    double d_lambda = 1.0, d_tol = 1e-10;
    std::size_t d_points = 256;
    std::string d_out;
    auto* density = app.add_subcommand("density", "stationary angular densities p0, p1 of the planar family");
    density->add_option("--lambda", d_lambda, "lambda = r/c")->required()->check(CLI::PositiveNumber);
    density->add_option("--points", d_points, "grid points on [0, 2pi)")->check(CLI::Range(1, 100000000));
    density->add_option("--tol", d_tol, "quadrature tolerance")->check(CLI::PositiveNumber);
    density->add_option("--out", d_out, "CSV output (default stdout)");
    density->callback([&] {
        action = [&] {
            const AngularDensity dens(d_lambda, d_tol);
            emit(d_out, out, [&](std::ostream& os) { io::write_density_csv(os, dens, d_points); });
        };
    });

    // kurtz
    McFlags kf;
    kf.T = 1.0;
    std::string k_rlist = "1,10,100,1000", k_out;
    auto* kurtz = app.add_subcommand("kurtz", "mean propagator norm against the averaged flow");
    kurtz->add_option("spec", spec_path, "system spec JSON")->required();
    kurtz->add_option("--T", kf.T, "propagation time")->check(CLI::PositiveNumber);
    kurtz->add_option("--r-list", k_rlist, "comma-separated rates");
    kurtz->add_option("--reps", kf.reps, "replicas per rate")->check(CLI::Range(2, 100000000));
    kurtz->add_option("--seed", kf.seed, "master seed (default $SWITCHSTAB_SEED or 0)");
    kurtz->add_option("--threads", kf.threads, "worker threads (0 = all cores)");
    kurtz->add_option("--out", k_out, "CSV output (default stdout)");
    kurtz->callback([&] {
        action = [&] {
            const auto spec = load_spec(spec_path);
            const auto rates = parse_list(k_rlist, "--r-list");
            const double limit = operator_norm(mat_exp(spec.system.average(), kf.T));
            const std::uint64_t seed = kf.seed.value_or(default_seed());
            std::vector<NormEstimate> est;
            for (double r : rates) est.push_back(propagator_norm_mc(spec.system.with_rate(r), kf.T, kf.reps, seed, kf.threads));
            emit(k_out, out, [&](std::ostream& os) {
                os << "r,mean_norm,stderr,limit\n";
                for (std::size_t i = 0; i < rates.size(); ++i)
                    os << io::fmt(rates[i]) << ',' << io::fmt(est[i].mean) << ',' << io::fmt(est[i].stderr) << ','
                       << io::fmt(limit) << '\n';
                os << "inf," << io::fmt(limit) << ",0," << io::fmt(limit) << '\n';
            });
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }
    try {
        if (action) action();
        return kOk;
    } catch (const ConstructionError& e) {
        err << "error: " << e.what() << '\n';
        return kConstructionFailure;
    } catch (const OverflowRisk& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kSearchFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace switchstab::cli
