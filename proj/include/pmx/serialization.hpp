#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pmx/estimators.hpp"
#include "pmx/matrix_model.hpp"
#include "pmx/montecarlo.hpp"
#include "pmx/stieltjes.hpp"

namespace pmx {

/// {"lambdas":[...], "mults":[...]}
PopulationSpectrum population_from_json(const std::string& text);
std::string population_to_json(const PopulationSpectrum& spec);

ExperimentConfig experiment_config_from_json(const std::string& text);

std::string support_report_to_json(const SupportReport& report);
std::string estimation_result_to_json(const EstimationResult& result);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// All floating-point CSV output carries 17 significant digits.
std::string format_g17(double v);

void write_bias_mse_csv(std::ostream& os, const std::vector<BiasMseRow>& rows);
void write_g1_csv(std::ostream& os, const std::vector<G1Row>& rows);
void write_clt_samples_csv(std::ostream& os, const CltStudyResult& result);
void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows);

}  // namespace pmx
