// misrep: fit, diagnose, bootstrap and simulate misreported time series.
//
// Exit codes: 0 success, 1 detect found evidence of misreporting,
// 2 usage error, 3 data error, 4 non-convergence.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "misrep/io.hpp"
#include "misrep/misrep.hpp"

namespace {

using namespace misrep;

constexpr int exit_ok = 0;
constexpr int exit_detected = 1;
constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_nonconvergence = 4;

struct RunConfig {
    std::string input;
    std::string column = "y";
    std::string index_column;
    std::size_t p = 1;
    std::size_t r = 0;
    std::string direction = "under";
    double tolerance = 1e-6;
    std::size_t max_iterations = 100;
    std::size_t replicates = 500;
    double level = 0.95;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    std::string output;
    std::string plots;

    // detect
    std::optional<std::size_t> max_lag;
    double significance = 0.05;

    // simulate
    std::vector<double> alpha;
    std::vector<double> theta;
    double mu_eps = 0.0;
    double sigma2_eps = 1.0;
    double q = 1.0;
    double omega = 0.0;
    std::size_t n = 100;
    bool with_latent = false;

    // simstudy
    std::vector<std::string> structures{"1,0", "0,1", "1,1"};
    std::vector<double> alpha_values{0.3, 0.5, 0.7};
    std::vector<double> theta_values{0.3, 0.5, 0.7};
    std::vector<double> q_values{0.3, 0.5, 0.7};
    std::vector<double> omega_values{0.3, 0.5, 0.7};
    std::vector<std::size_t> sizes;
    std::size_t bootstrap_replicates = 100;
    std::string records;
};

Direction parse_direction(const std::string& s) {
    if (s == "under") return Direction::under;
    if (s == "over") return Direction::over;
    return Direction::automatic;
}

EstimateOptions estimate_options(const RunConfig& cfg) {
    EstimateOptions eo;
    eo.direction = parse_direction(cfg.direction);
    eo.tolerance = cfg.tolerance;
    eo.max_iterations = cfg.max_iterations;
    eo.mixture.seed = *cfg.seed;
    return eo;
}

/// Writes to the named file, or stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

Series load(const RunConfig& cfg) { return io::read_series_file(cfg.input, {cfg.column, cfg.index_column}); }

int cmd_fit(const RunConfig& cfg) {
    const Series y = load(cfg);
    const FitResult f = estimate(y, {cfg.p, cfg.r}, estimate_options(cfg));
    emit(cfg.output, io::to_json(y, f).dump(2) + "\n");
    if (!cfg.plots.empty()) {
        std::filesystem::create_directories(cfg.plots);
        std::ostringstream os;
        io::write_reconstruction_csv(os, y, f);
        emit((std::filesystem::path(cfg.plots) / "reconstruction.csv").string(), os.str());
    }
    for (const auto& w : f.warnings) std::cerr << "warning: " << w << '\n';
    return f.converged ? exit_ok : exit_nonconvergence;
}

int cmd_detect(const RunConfig& cfg) {
    const Series y = load(cfg);
    const AcfEstimate acf = sample_acf(y, cfg.max_lag.value_or(default_max_lag(y.size())));
    DetectOptions opt;
    opt.significance = cfg.significance;
    opt.latent = {cfg.p, cfg.r};
    const DetectionReport rep = log_acf_regression(acf, opt);
    emit(cfg.output, io::to_json(rep).dump(2) + "\n");
    if (!cfg.plots.empty()) {
        std::filesystem::create_directories(cfg.plots);
        std::ostringstream os;
        io::write_detection_csv(os, rep);
        emit((std::filesystem::path(cfg.plots) / "log_acf.csv").string(), os.str());
    }
    if (!rep.applicable) std::cerr << rep.note << '\n';
    return rep.verdict ? exit_detected : exit_ok;
}

int cmd_simulate(const RunConfig& cfg) {
    const MisreportModel m{{cfg.alpha, cfg.theta, cfg.mu_eps, cfg.sigma2_eps}, cfg.q, cfg.omega};
    if (auto v = validate(m); !v) throw InvalidArgument(v.diagnostic);
    const auto s = simulate_observed(m, cfg.n, *cfg.seed);
    std::ostringstream os;
    io::write_simulation_csv(os, s, cfg.with_latent);
    emit(cfg.output, os.str());
    return exit_ok;
}

int cmd_bootstrap(const RunConfig& cfg) {
    const Series y = load(cfg);
    const EstimateOptions eo = estimate_options(cfg);
    const FitResult f = estimate(y, {cfg.p, cfg.r}, eo);
    if (!f.converged) {
        std::cerr << "error: the point estimate did not converge; bootstrap skipped\n";
        return exit_nonconvergence;
    }
    BootstrapOptions bo;
    bo.replicates = cfg.replicates;
    bo.seed = *cfg.seed;
    bo.level = cfg.level;
    bo.threads = cfg.threads;
    bo.estimate = eo;
    const BootstrapSummary s = parametric_bootstrap(f, y.size(), bo);
    emit(cfg.output, io::to_json(s).dump(2) + "\n");
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
    return exit_ok;
}

int cmd_simstudy(const RunConfig& cfg, const CLI::App& sub) {
    GridSpec spec;
    spec.structures.clear();
    for (const auto& s : cfg.structures) {
        const auto parts = io::split_csv_line(s);
        std::size_t p = 0, r = 0;
        if (parts.size() != 2 || !(std::istringstream(parts[0]) >> p) || !(std::istringstream(parts[1]) >> r))
            throw InvalidArgument("structure must be 'p,r', got '" + s + "'");
        spec.structures.push_back({p, r});
    }
    spec.alpha_values = cfg.alpha_values;
    spec.theta_values = cfg.theta_values;
    spec.q_values = cfg.q_values;
    spec.omega_values = cfg.omega_values;
    if (sub.count("--mu-eps")) spec.mu_eps = cfg.mu_eps;
    spec.sigma2_eps = cfg.sigma2_eps;
    if (sub.count("--n")) spec.n = cfg.n;
    if (sub.count("--replicates")) spec.replicates = cfg.replicates;
    spec.bootstrap_replicates = cfg.bootstrap_replicates;
    spec.level = cfg.level;
    spec.seed = *cfg.seed;
    spec.threads = cfg.threads;
    spec.estimate = estimate_options(cfg);

    const StudyResult res = cfg.sizes.empty() ? run_grid(spec) : sample_size_sweep(spec, cfg.sizes);
    std::ostringstream os;
    io::write_metrics_csv(os, res.rows);
    emit(cfg.output, os.str());
    if (!cfg.records.empty()) {
        std::ostringstream rs;
        io::write_records_csv(rs, res.records);
        emit(cfg.records, rs.str());
    }
    for (const auto& sk : res.skipped) std::cerr << "skipped grid point: " << sk.reason << '\n';
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fit, diagnose and bootstrap ARMA models of misreported time series"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("-i,--input", cfg.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
        sub->add_option("-c,--column", cfg.column, "value column name")->capture_default_str();
        sub->add_option("--index-column", cfg.index_column, "label column name (dates, weeks)");
    };
    auto add_orders = [&](CLI::App* sub) {
        sub->add_option("-p,--p", cfg.p, "AR order")->capture_default_str();
        sub->add_option("-r,--r", cfg.r, "MA order")->capture_default_str();
    };
    auto add_estimation = [&](CLI::App* sub) {
        sub->add_option("--direction", cfg.direction, "under | over | auto")
            ->check(CLI::IsMember({"under", "over", "auto"}))
            ->capture_default_str();
        sub->add_option("--tolerance", cfg.tolerance, "convergence tolerance")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--max-iterations", cfg.max_iterations)->check(CLI::Range(1, 100000))->capture_default_str();
    };
    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", cfg.seed, "RNG seed (required)")->required(); };
    auto add_threads = [&](CLI::App* sub) {
        sub->add_option("--threads", cfg.threads, "worker threads; output does not depend on it")
            ->check(CLI::Range(1, 1024))
            ->capture_default_str();
    };

    auto* fit_cmd = app.add_subcommand("fit", "estimate q, omega and the latent ARMA model; reconstruct the series");
    add_input(fit_cmd);
    add_orders(fit_cmd);
    add_estimation(fit_cmd);
    add_seed(fit_cmd);
    fit_cmd->add_option("-o,--output", cfg.output, "JSON report path (default stdout)");
    fit_cmd->add_option("--plots", cfg.plots, "directory for plot-data CSV files");

    auto* det_cmd = app.add_subcommand("detect", "log-ACF regression test for misreporting of an AR(1) process");
    add_input(det_cmd);
    add_orders(det_cmd);
    det_cmd->add_option("--max-lag", cfg.max_lag, "largest lag (default min(10, n/4))");
    det_cmd->add_option("--significance", cfg.significance)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    det_cmd->add_option("-o,--output", cfg.output, "JSON report path (default stdout)");
    det_cmd->add_option("--plots", cfg.plots, "directory for the (k, log rho, fitted) CSV");

    auto* sim_cmd = app.add_subcommand("simulate", "simulate an observed (misreported) series");
    sim_cmd->add_option("--alpha", cfg.alpha, "AR coefficients")->delimiter(',');
    sim_cmd->add_option("--theta", cfg.theta, "MA coefficients")->delimiter(',');
    sim_cmd->add_option("--mu-eps", cfg.mu_eps)->capture_default_str();
    sim_cmd->add_option("--sigma2-eps", cfg.sigma2_eps)->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--q", cfg.q)->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--omega", cfg.omega)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sim_cmd->add_option("-n,--n", cfg.n)->check(CLI::Range(1, 100000000))->capture_default_str();
    sim_cmd->add_flag("--with-latent", cfg.with_latent, "include x and z columns");
    add_seed(sim_cmd);
    sim_cmd->add_option("-o,--output", cfg.output, "CSV path (default stdout)");

    auto* boot_cmd = app.add_subcommand("bootstrap", "parametric bootstrap standard errors and percentile intervals");
    add_input(boot_cmd);
    add_orders(boot_cmd);
    add_estimation(boot_cmd);
    add_seed(boot_cmd);
    add_threads(boot_cmd);
    boot_cmd->add_option("-B,--replicates", cfg.replicates)->check(CLI::Range(2, 1000000))->capture_default_str();
    boot_cmd->add_option("--level", cfg.level)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    boot_cmd->add_option("-o,--output", cfg.output, "JSON path (default stdout)");

    auto* study_cmd = app.add_subcommand("simstudy", "Monte Carlo bias / interval length / coverage study");
    study_cmd->add_option("--structures", cfg.structures, "list of 'p,r' pairs")->capture_default_str();
    study_cmd->add_option("--alpha-values", cfg.alpha_values)->delimiter(',')->capture_default_str();
    study_cmd->add_option("--theta-values", cfg.theta_values)->delimiter(',')->capture_default_str();
    study_cmd->add_option("--q-values", cfg.q_values)->delimiter(',')->capture_default_str();
    study_cmd->add_option("--omega-values", cfg.omega_values)->delimiter(',')->capture_default_str();
    study_cmd->add_option("--mu-eps", cfg.mu_eps)->capture_default_str();
    study_cmd->add_option("--sigma2-eps", cfg.sigma2_eps)->check(CLI::PositiveNumber)->capture_default_str();
    study_cmd->add_option("-n,--n", cfg.n)->check(CLI::Range(30, 100000000))->capture_default_str();
    study_cmd->add_option("--sizes", cfg.sizes, "sweep over these lengths instead of --n")->delimiter(',');
    study_cmd->add_option("--replicates", cfg.replicates, "Monte Carlo replicates per grid point")->check(CLI::Range(1, 1000000));
    study_cmd->add_option("-B,--bootstrap", cfg.bootstrap_replicates, "bootstrap replicates per fit")->check(CLI::Range(2, 1000000))->capture_default_str();
    study_cmd->add_option("--level", cfg.level)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    add_estimation(study_cmd);
    add_seed(study_cmd);
    add_threads(study_cmd);
    study_cmd->add_option("-o,--output", cfg.output, "metrics CSV path (default stdout)");
    study_cmd->add_option("--records", cfg.records, "per-replicate records CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*fit_cmd) return cmd_fit(cfg);
        if (*det_cmd) return cmd_detect(cfg);
        if (*sim_cmd) return cmd_simulate(cfg);
        if (*boot_cmd) return cmd_bootstrap(cfg);
        if (*study_cmd) return cmd_simstudy(cfg, *study_cmd);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_usage;
}
