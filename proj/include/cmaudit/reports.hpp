#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cmaudit/pipeline.hpp"

namespace cmaudit {

void write_eer_csv(const std::vector<EerRow>& rows, const std::filesystem::path& path);
std::string eer_markdown(const std::vector<EerRow>& rows);

// One row per (intervention, model) with estimates and standard errors.
void write_regression_csv(const std::vector<InterventionAnalysis>& analyses,
                          const std::filesystem::path& path);
// Constrained fit in (mu, d, beta*, sigma_eps) columns, then the full fit.
std::string regression_markdown(const std::vector<InterventionAnalysis>& analyses);
// Per-configuration class-conditional models and mean differences.
std::string config_models_markdown(const std::vector<InterventionAnalysis>& analyses);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cmaudit
