// Command-line front end: estimation, support analysis, simulation studies,
// CLT checks, oracle verification and timing.
//
// Exit codes: 0 success, 2 malformed input, 3 degenerate spectrum,
// 4 convergence/contour failure, 5 oracle mismatch.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pmx/contour.hpp"
#include "pmx/estimators.hpp"
#include "pmx/matrix_model.hpp"
#include "pmx/montecarlo.hpp"
#include "pmx/serialization.hpp"
#include "pmx/stieltjes.hpp"
#include "pmx/synthetic.hpp"

namespace {

using nlohmann::json;

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw pmx::InputError("cannot parse number: " + item);
        }
    }
    if (out.empty()) throw pmx::InputError("empty numeric list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_double_list(text)) {
        const int i = static_cast<int>(v);
        if (v != i) throw pmx::InputError("expected integer list");
        out.push_back(i);
    }
    return out;
}

// Whitespace- or comma-separated numeric matrix, one row per line.
Eigen::MatrixXd read_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::stringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw pmx::InputError("empty data matrix");
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != cols) throw pmx::InputError("ragged data matrix");
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content << std::endl;
    else
        pmx::write_file(out_path, content);
}

struct EstimateArgs {
    std::string data_path, eigs, mults, out;
    int K = 0;
    bool no_theta = false;
};

int run_estimate(const EstimateArgs& a) {
    const std::vector<int> mults = parse_int_list(a.mults);
    pmx::SampleSpectrum sample;
    if (!a.eigs.empty()) {
        if (a.K <= 0) throw pmx::InputError("--K is required with --eigs");
        sample = pmx::smi_spectrum(parse_double_list(a.eigs), a.K);
    } else if (!a.data_path.empty()) {
        Eigen::MatrixXd raw;
        if (a.data_path == "-") {
            raw = read_matrix(std::cin);
        } else {
            std::ifstream in(a.data_path);
            if (!in) throw pmx::InputError("cannot open data file: " + a.data_path);
            raw = read_matrix(in);
        }
        const int N = static_cast<int>(raw.rows());
        const int K = static_cast<int>(raw.cols());
        if (K <= N) throw pmx::AspectRatioError("data must have more columns than rows");
        // Observations arrive unscaled; the model scaling is applied here.
        pmx::ObservationMatrix obs;
        obs.field = pmx::FieldKind::Real;
        obs.entries = (raw / std::sqrt(static_cast<double>(K))).cast<std::complex<double>>();
        sample = pmx::smi_spectrum(
            pmx::hermitian_eigenvalues(pmx::sample_covariance(obs)), K);
    } else {
        throw pmx::InputError("provide either --eigs or --data");
    }

    pmx::EstimationResult result;
    result.gamma_breve = pmx::estimate_precision_eigs(sample, mults);
    if (!a.no_theta) result.theta_hat = pmx::estimate_clt_covariance(sample, mults);
    result.g1_hat = pmx::estimate_trace_functional(result.gamma_breve, mults);
    emit(a.out, pmx::estimation_result_to_json(result));
    return 0;
}

int run_support(const std::string& spec_path, double c, const std::string& out) {
    const auto spec = pmx::population_from_json(pmx::read_file(spec_path));
    emit(out, pmx::support_report_to_json(pmx::support_clusters(spec, c)));
    return 0;
}

struct SimulateArgs {
    std::string config_path, out, g1_out, dump_trials, dump_eigs, field;
    std::int64_t seed = -1;
    int threads = 0;
    int trials = 0;
};

void dump_trial_tables(const pmx::ExperimentConfig& cfg, const SimulateArgs& a) {
    std::ofstream trials_out, eigs_out;
    if (!a.dump_trials.empty()) {
        trials_out.open(a.dump_trials);
        trials_out << "N,trial,estimator";
        for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) trials_out << ",gamma_" << i + 1;
        trials_out << "\n";
    }
    if (!a.dump_eigs.empty()) {
        eigs_out.open(a.dump_eigs);
        eigs_out << "N,trial,sigma_eigs\n";
    }
    for (int N : cfg.n_grid) {
        const int K = pmx::sample_size_for(cfg, N);
        const auto mults = pmx::mults_for(cfg, N);
        const auto spec = pmx::make_population(cfg.lambdas, mults);
        const std::uint64_t base = pmx::grid_seed(cfg.seed, N);
        for (int t = 0; t < cfg.trials; ++t) {
            const auto sample =
                pmx::sample_spectrum(spec, K, pmx::mix_seed(base, t), cfg.field);
            if (eigs_out.is_open()) {
                eigs_out << N << ',' << t << ',';
                bool first = true;
                for (double s : sample.sigma_hat) {
                    eigs_out << (first ? "" : " ") << pmx::format_g17(s);
                    first = false;
                }
                eigs_out << "\n";
            }
            if (trials_out.is_open()) {
                for (const auto& est : cfg.estimators) {
                    const auto gamma = (est == "proposed")
                                           ? pmx::estimate_precision_eigs(sample, mults)
                                           : pmx::ml_estimate(sample, mults);
                    trials_out << N << ',' << t << ',' << est;
                    for (double g : gamma) trials_out << ',' << pmx::format_g17(g);
                    trials_out << "\n";
                }
            }
        }
    }
}

void apply_field(pmx::ExperimentConfig& cfg, const std::string& field) {
    if (field.empty()) return;
    if (field == "complex")
        cfg.field = pmx::FieldKind::Complex;
    else if (field == "real")
        cfg.field = pmx::FieldKind::Real;
    else
        throw pmx::InputError("--field must be 'complex' or 'real'");
}

int run_simulate(const SimulateArgs& a) {
    pmx::ExperimentConfig cfg =
        pmx::experiment_config_from_json(pmx::read_file(a.config_path));
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    if (a.threads > 0) cfg.threads = a.threads;
    if (a.trials > 0) cfg.trials = a.trials;
    apply_field(cfg, a.field);

    const bool want_biasmse =
        std::find(cfg.outputs.begin(), cfg.outputs.end(), "bias") != cfg.outputs.end() ||
        std::find(cfg.outputs.begin(), cfg.outputs.end(), "mse") != cfg.outputs.end();
    const bool want_g1 =
        std::find(cfg.outputs.begin(), cfg.outputs.end(), "g1") != cfg.outputs.end();

    if (want_biasmse) {
        std::ostringstream ss;
        pmx::write_bias_mse_csv(ss, pmx::run_bias_mse(cfg));
        emit(a.out, ss.str());
    }
    if (want_g1) {
        std::ostringstream ss;
        pmx::write_g1_csv(ss, pmx::run_g1_comparison(cfg));
        emit(a.g1_out.empty() ? (want_biasmse ? std::string() : a.out) : a.g1_out, ss.str());
    }
    if (!a.dump_trials.empty() || !a.dump_eigs.empty()) dump_trial_tables(cfg, a);
    return 0;
}

int run_clt_check(const std::string& config_path, const std::string& out,
                  std::int64_t seed, int threads, int trials, const std::string& field) {
    pmx::ExperimentConfig cfg =
        pmx::experiment_config_from_json(pmx::read_file(config_path));
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) cfg.threads = threads;
    if (trials > 0) cfg.trials = trials;
    apply_field(cfg, field);
    const auto result = pmx::run_clt_study(cfg);
    if (!out.empty()) {
        std::ostringstream ss;
        pmx::write_clt_samples_csv(ss, result);
        pmx::write_file(out, ss.str());
    }
    json j;
    j["N"] = result.N;
    j["K"] = result.K;
    j["included"] = result.included;
    j["excluded"] = result.excluded;
    j["sufficient"] = result.sufficient;
    if (result.sufficient) {
        json rows = json::array();
        for (std::size_t m = 0; m < result.summary.size(); ++m)
            rows.push_back({{"m", m + 1},
                            {"mean", result.summary[m].mean},
                            {"variance", result.summary[m].variance},
                            {"ks", result.summary[m].ks}});
        j["summary"] = rows;
    }
    std::cout << j.dump(2) << std::endl;
    return 0;
}

int run_oracle_check(int instances, int nodes, std::uint64_t seed, double tol_estimate,
                     double tol_cov, const std::string& out) {
    double worst_estimate = 0.0, worst_cov = 0.0, worst_i1 = 0.0;
    for (int t = 0; t < instances; ++t) {
        const auto inst = pmx::make_synthetic_instance(pmx::mix_seed(seed, t));
        const auto closed = pmx::estimate_precision_eigs(inst.sample, inst.mults);
        const int L = static_cast<int>(inst.mults.size());
        for (int m = 0; m < L; ++m) {
            const auto contour = pmx::group_contour(inst.sample, inst.mults, m, nodes);
            const double quad = pmx::contour_estimate(inst.sample, inst.mults, m, contour);
            worst_estimate = std::max(
                worst_estimate, std::abs(quad - closed[m]) / std::max(1e-300, std::abs(closed[m])));
        }
        // Covariance path on a subset; the double quadrature dominates runtime.
        if (t % 3 == 0) {
            const Eigen::MatrixXd closed_cov =
                pmx::estimate_clt_covariance(inst.sample, inst.mults);
            for (int m = 0; m < L; ++m)
                for (int n = m; n < L; ++n) {
                    const auto [ca, cb] =
                        pmx::group_contour_pair(inst.sample, inst.mults, m, n, nodes / 2);
                    const auto parts =
                        pmx::contour_clt_parts(inst.sample, inst.mults, m, n, ca, cb);
                    worst_cov = std::max(worst_cov,
                                         std::abs(parts.theta - closed_cov(m, n)) /
                                             std::max(1e-300, std::abs(closed_cov(m, n))));
                    worst_i1 = std::max(worst_i1, std::abs(parts.i1));
                }
        }
    }
    json j;
    j["instances"] = instances;
    j["max_rel_dev_estimate"] = worst_estimate;
    j["max_rel_dev_covariance"] = worst_cov;
    j["max_abs_i1"] = worst_i1;
    j["tol_estimate"] = tol_estimate;
    j["tol_covariance"] = tol_cov;
    const bool ok = worst_estimate <= tol_estimate && worst_cov <= tol_cov && worst_i1 <= tol_cov;
    j["pass"] = ok;
    emit(out, j.dump(2));
    return ok ? 0 : 5;
}

int run_timing_cmd(const std::string& config_path, const std::string& out,
                   std::int64_t seed) {
    pmx::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = pmx::experiment_config_from_json(pmx::read_file(config_path));
    } else {
        cfg.lambdas = {1.0, 2.0, 3.0};
        cfg.mult_fractions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        cfg.ratio_num = 3;
        cfg.ratio_den = 8;
        cfg.n_grid = {30, 120, 300};
        cfg.trials = 10;
        cfg.estimators = {"proposed", "ml"};
        cfg.seed = 1;
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    std::ostringstream ss;
    pmx::write_timing_csv(ss, pmx::run_timing(cfg));
    emit(out, ss.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral estimation for large-dimensional precision matrices"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand("estimate", "Estimate precision eigenvalues");
    cmd_est->add_option("--data", est.data_path,
                        "Numeric matrix of raw observations as columns ('-' for stdin)");
    cmd_est->add_option("--eigs", est.eigs, "Precomputed SCM eigenvalues, ascending CSV");
    cmd_est->add_option("--mults", est.mults, "Multiplicities, descending-gamma order")
        ->required();
    cmd_est->add_option("--K", est.K, "Sample count (required with --eigs)");
    cmd_est->add_flag("--no-theta", est.no_theta, "Skip the covariance estimate");
    cmd_est->add_option("--out", est.out, "Output path (default stdout)");

    std::string sup_spec, sup_out;
    double sup_c = 0.0;
    auto* cmd_sup = app.add_subcommand("support", "Limiting support and separability");
    cmd_sup->add_option("--spec", sup_spec, "Population JSON {lambdas, mults}")->required();
    cmd_sup->add_option("--c", sup_c, "Aspect ratio N/K in (0,1)")->required();
    cmd_sup->add_option("--out", sup_out, "Output path (default stdout)");

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Bias/MSE and trace-functional sweeps");
    cmd_sim->add_option("--config", sim.config_path, "Experiment config JSON")->required();
    cmd_sim->add_option("--out", sim.out, "Primary CSV output (default stdout)");
    cmd_sim->add_option("--g1-out", sim.g1_out, "Trace-functional CSV output");
    cmd_sim->add_option("--dump-trials", sim.dump_trials, "Per-trial estimate CSV");
    cmd_sim->add_option("--dump-eigs", sim.dump_eigs, "Per-trial SCM eigenvalue CSV");
    cmd_sim->add_option("--seed", sim.seed, "Override config seed");
    cmd_sim->add_option("--threads", sim.threads, "Worker threads");
    cmd_sim->add_option("--trials", sim.trials, "Override config trial count");
    cmd_sim->add_option("--field", sim.field, "Override config field (complex|real)");

    std::string clt_config, clt_out, clt_field;
    std::int64_t clt_seed = -1;
    int clt_threads = 0, clt_trials = 0;
    auto* cmd_clt = app.add_subcommand("clt-check", "Standardized-fluctuation study");
    cmd_clt->add_option("--config", clt_config, "Experiment config JSON")->required();
    cmd_clt->add_option("--out", clt_out, "Samples CSV output");
    cmd_clt->add_option("--seed", clt_seed, "Override config seed");
    cmd_clt->add_option("--threads", clt_threads, "Worker threads");
    cmd_clt->add_option("--trials", clt_trials, "Override config trial count");
    cmd_clt->add_option("--field", clt_field, "Override config field (complex|real)");

    int orc_instances = 12, orc_nodes = 512;
    std::int64_t orc_seed = 20260809;
    double orc_tol_est = 1e-8, orc_tol_cov = 1e-6;
    std::string orc_out;
    auto* cmd_orc =
        app.add_subcommand("oracle-check", "Closed forms vs contour quadrature");
    cmd_orc->add_option("--trials", orc_instances, "Random instances");
    cmd_orc->add_option("--nodes", orc_nodes, "Quadrature nodes per edge");
    cmd_orc->add_option("--seed", orc_seed, "Instance seed");
    cmd_orc->add_option("--tol-estimate", orc_tol_est, "Relative tolerance, eigenvalue path");
    cmd_orc->add_option("--tol-cov", orc_tol_cov, "Relative tolerance, covariance path");
    cmd_orc->add_option("--out", orc_out, "Output path (default stdout)");

    std::string tim_config, tim_out;
    std::int64_t tim_seed = -1;
    auto* cmd_tim = app.add_subcommand("timing", "Per-realization wall-clock table");
    cmd_tim->add_option("--config", tim_config, "Experiment config JSON (optional)");
    cmd_tim->add_option("--out", tim_out, "Output path (default stdout)");
    cmd_tim->add_option("--seed", tim_seed, "Override config seed");

    try {
        app.parse(argc, argv);
        if (cmd_est->parsed()) return run_estimate(est);
        if (cmd_sup->parsed()) return run_support(sup_spec, sup_c, sup_out);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_clt->parsed())
            return run_clt_check(clt_config, clt_out, clt_seed, clt_threads, clt_trials,
                                 clt_field);
        if (cmd_orc->parsed())
            return run_oracle_check(orc_instances, orc_nodes,
                                    static_cast<std::uint64_t>(orc_seed), orc_tol_est,
                                    orc_tol_cov, orc_out);
        if (cmd_tim->parsed()) return run_timing_cmd(tim_config, tim_out, tim_seed);
        return 2;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" ? 0 : 2;
    } catch (const pmx::DegenerateSpectrumError& e) {
        std::cerr << "error (degenerate spectrum): " << e.what() << std::endl;
        return 3;
    } catch (const pmx::SingularScmError& e) {
        std::cerr << "error (degenerate spectrum): " << e.what() << std::endl;
        return 3;
    } catch (const pmx::ConvergenceError& e) {
        std::cerr << "error (convergence): " << e.what() << std::endl;
        return 4;
    } catch (const pmx::ContourError& e) {
        std::cerr << "error (contour): " << e.what() << std::endl;
        return 4;
    } catch (const pmx::PoleError& e) {
        std::cerr << "error (pole): " << e.what() << std::endl;
        return 4;
    } catch (const pmx::Error& e) {
        std::cerr << "error (input): " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
