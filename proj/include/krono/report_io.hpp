#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "krono/experiments.hpp"

namespace krono::io {

inline constexpr const char* kVersion = "0.1.0";

enum class ReportFormat { csv, json };
// DomainError("unknown format ...") for anything but csv or json.
ReportFormat report_format_from_string(const std::string& name);

// Columns: trial,n,k,N,p,q,eta,kappa,grid_points,sup_m_dev,sup_count_dev,ks,atom0_err,seed,wall_ms
inline constexpr const char* kReportColumns =
    "trial,n,k,N,p,q,eta,kappa,grid_points,sup_m_dev,sup_count_dev,ks,atom0_err,seed,wall_ms";

nlohmann::json config_to_json(const experiments::ExperimentConfig& config);
experiments::ExperimentConfig config_from_json(const nlohmann::json& j);

std::string report_csv(const experiments::DeviationReport& report);
nlohmann::json report_to_json(const experiments::DeviationReport& report);
experiments::DeviationReport report_from_json(const nlohmann::json& j);

void write_report(const experiments::DeviationReport& report, const std::filesystem::path& path, ReportFormat format);
void write_report(const experiments::DeviationReport& report, const std::filesystem::path& path,
                  const std::string& format);

// Parses a JSON report written by write_report.
experiments::DeviationReport read_report(const std::filesystem::path& path);
// Re-runs the configuration stored in a JSON report.
experiments::DeviationReport replay_report(const std::filesystem::path& path);

nlohmann::json convergence_to_json(const experiments::ConvergenceReport& report);
nlohmann::json concentration_to_json(const experiments::ConcentrationReport& report);

}  // namespace krono::io
