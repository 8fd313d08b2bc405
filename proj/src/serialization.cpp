#include "pmx/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pmx {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputError("malformed JSON document");
    return j;
}

// Non-finite doubles (the L = 1 separation margin) serialize as JSON null.
json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

PopulationSpectrum population_from_json(const std::string& text) {
    const json j = parse(text);
    if (!j.contains("lambdas") || !j.contains("mults"))
        throw InputError("population spec needs 'lambdas' and 'mults'");
    try {
        const auto lambdas = j.at("lambdas").get<std::vector<double>>();
        const auto mults = j.at("mults").get<std::vector<int>>();
        return make_population(lambdas, mults);
    } catch (const json::exception& e) {
        throw InputError(std::string("population spec: ") + e.what());
    }
}

std::string population_to_json(const PopulationSpectrum& spec) {
    json j;
    j["lambdas"] = spec.lambdas;
    j["mults"] = spec.mults;
    return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    const json j = parse(text);
    ExperimentConfig cfg;
    try {
        cfg.lambdas = j.at("lambdas").get<std::vector<double>>();
        cfg.mult_fractions = j.at("mult_fractions").get<std::vector<double>>();
        const auto ratio = j.at("n_over_k").get<std::vector<int>>();
        if (ratio.size() != 2) throw InputError("n_over_k must be [num, den]");
        cfg.ratio_num = ratio[0];
        cfg.ratio_den = ratio[1];
        cfg.n_grid = j.at("n_grid").get<std::vector<int>>();
        cfg.trials = j.at("trials").get<int>();
        cfg.estimators = j.value("estimators", std::vector<std::string>{"proposed"});
        cfg.seed = j.value("seed", std::uint64_t{1});
        const std::string field = j.value("field", std::string("complex"));
        if (field == "complex")
            cfg.field = FieldKind::Complex;
        else if (field == "real")
            cfg.field = FieldKind::Real;
        else
            throw InputError("field must be 'complex' or 'real'");
        cfg.outputs = j.value("outputs", std::vector<std::string>{"bias", "mse"});
        cfg.threads = j.value("threads", 0);
    } catch (const json::exception& e) {
        throw InputError(std::string("experiment config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

std::string support_report_to_json(const SupportReport& rep) {
    json j;
    j["c"] = rep.c;
    j["L"] = rep.L;
    j["Q"] = rep.Q;
    j["separable"] = rep.separable;
    j["cluster_separable"] = rep.cluster_separable;
    json phi = json::array();
    for (double p : rep.phi) phi.push_back(finite_or_null(p));
    j["phi"] = phi;
    j["f_crit"] = rep.f_crit;
    j["omega_bar"] = rep.omega_bar;
    if (!rep.clusters.empty()) {
        json omega = json::array(), prec = json::array(), cov = json::array();
        json members = json::array(), merged = json::array();
        for (const auto& cl : rep.clusters) {
            omega.push_back({cl.omega_lo, cl.omega_hi});
            prec.push_back({cl.prec_lo, cl.prec_hi});
            cov.push_back({cl.cov_lo, cl.cov_hi});
            members.push_back(cl.members);
            merged.push_back(cl.merged);
        }
        j["omega_crit"] = omega;
        j["clusters_prec"] = prec;
        j["clusters_cov"] = cov;
        j["cluster_members"] = members;
        j["cluster_merged"] = merged;
        j["gamma_to_cluster"] = rep.gamma_to_cluster;
        j["eta"] = rep.eta;
    }
    return j.dump(2);
}

std::string estimation_result_to_json(const EstimationResult& result) {
    json j;
    j["gamma_breve"] = result.gamma_breve;
    if (result.theta_hat) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < result.theta_hat->rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < result.theta_hat->cols(); ++k)
                row.push_back((*result.theta_hat)(i, k));
            rows.push_back(row);
        }
        j["theta_hat"] = rows;
    }
    if (result.g1_hat) j["g1_hat"] = *result.g1_hat;
    return j.dump(2);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_bias_mse_csv(std::ostream& os, const std::vector<BiasMseRow>& rows) {
    os << "N,K,estimator,bias,mse,excluded_trials\n";
    for (const auto& r : rows)
        os << r.N << ',' << r.K << ',' << r.estimator << ',' << format_g17(r.bias) << ','
           << format_g17(r.mse) << ',' << r.excluded << '\n';
}

void write_g1_csv(std::ostream& os, const std::vector<G1Row>& rows) {
    os << "N,K,estimator,g1_mse,excluded_trials\n";
    for (const auto& r : rows)
        os << r.N << ',' << r.K << ',' << r.estimator << ',' << format_g17(r.g1_mse) << ','
           << r.excluded << '\n';
}

void write_clt_samples_csv(std::ostream& os, const CltStudyResult& result) {
    os << "trial,m,s_value\n";
    for (const auto& s : result.samples)
        os << s.trial << ',' << s.m << ',' << format_g17(s.s) << '\n';
}

void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
    os << "N,K,estimator,median_seconds,end_to_end_seconds\n";
    for (const auto& r : rows)
        os << r.N << ',' << r.K << ',' << r.estimator << ',' << format_g17(r.median_seconds)
           << ',' << format_g17(r.end_to_end_seconds) << '\n';
}

}  // namespace pmx
