#include "krono/report_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "krono/errors.hpp"
#include "krono/json_writer.hpp"

namespace krono::io {

namespace {

using experiments::DeviationReport;
using experiments::ExperimentConfig;
using nlohmann::json;

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

std::string eigen_method_name(spectra::EigenMethod m) { return m == spectra::EigenMethod::gram ? "gram" : "dense"; }

spectra::EigenMethod eigen_method_from(const std::string& name) {
  if (name == "gram") return spectra::EigenMethod::gram;
  if (name == "dense") return spectra::EigenMethod::dense;
  throw DataError(fmt::format("unknown eigen method '{}'", name));
}

json aggregate_json(const experiments::Aggregate& a) { return {{"mean", a.mean}, {"max", a.max}}; }

}  // namespace

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw DomainError(fmt::format("unknown format '{}' (csv | json)", name));
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = experiments::to_string(c.mode);
  j["n"] = c.n;
  j["k"] = c.k;
  j["p"] = c.p;
  j["q"] = c.q;
  j["N"] = c.dimension();
  j["left_projection"] = ensembles::to_string(c.left_kind);
  j["right_projection"] = ensembles::to_string(c.right_kind);
  j["frame"] = experiments::to_string(c.frame);
  j["v"] = {{"spec", c.v.describe()}, {"size", c.v.size}};
  j["eta"] = c.eta ? json(*c.eta) : json(nullptr);
  j["schedule"] = {{"s", c.schedule.s}, {"beta", c.schedule.beta}, {"rho", c.schedule.rho}, {"c0", c.schedule.c0}};
  j["alpha"] = c.alpha();
  j["kappa"] = c.kappa;
  j["eta_ceiling"] = c.eta_ceiling;
  j["grid_points"] = c.grid_points;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["eigen_method"] = eigen_method_name(c.eigen_method);
  j["per_energy"] = c.per_energy;
  j["timing"] = c.timing;
  j["dense_cap"] = c.dense_cap;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.mode = experiments::mode_from_string(j.at("mode").get<std::string>());
    c.n = j.at("n").get<Index>();
    c.k = j.at("k").get<int>();
    c.p = j.at("p").get<double>();
    c.q = j.at("q").get<double>();
    c.left_kind = ensembles::projection_kind_from_string(j.at("left_projection").get<std::string>());
    c.right_kind = ensembles::projection_kind_from_string(j.at("right_projection").get<std::string>());
    c.frame = experiments::frame_from_string(j.at("frame").get<std::string>());
    c.v = experiments::VSpec::parse(j.at("v").at("spec").get<std::string>(), j.at("v").at("size").get<Index>());
    if (!j.at("eta").is_null()) c.eta = j.at("eta").get<double>();
    const auto& s = j.at("schedule");
    c.schedule = {s.at("s").get<double>(), s.at("beta").get<double>(), s.at("rho").get<double>(),
                  s.at("c0").get<double>()};
    c.kappa = j.at("kappa").get<double>();
    c.eta_ceiling = j.at("eta_ceiling").get<double>();
    c.grid_points = j.at("grid_points").get<std::size_t>();
    c.trials = j.at("trials").get<std::size_t>();
    c.master_seed = j.at("master_seed").get<Seed>();
    c.eigen_method = eigen_method_from(j.value("eigen_method", std::string("gram")));
    c.per_energy = j.value("per_energy", false);
    c.timing = j.value("timing", false);
    c.dense_cap = j.value("dense_cap", kDenseCapLimit);
    return c;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed config: {}", e.what()));
  } catch (const DomainError& e) {
    throw DataError(fmt::format("invalid config: {}", e.what()));
  }
}

std::string report_csv(const DeviationReport& report) {
  const auto& c = report.config;
  std::ostringstream out;
  out << kReportColumns << '\n';
  for (const auto& t : report.trials) {
    out << t.trial << ',' << c.n << ',' << c.k << ',' << c.dimension() << ',' << format_double(c.p) << ','
        << format_double(c.q) << ',' << format_double(report.eta) << ',' << format_double(c.kappa) << ','
        << c.grid_points << ',' << format_double(t.sup_m_dev) << ',' << format_double(t.sup_count_dev) << ','
        << format_double(t.ks) << ',' << format_double(t.atom0_err) << ',' << t.seed << ','
        << format_double(t.wall_ms) << '\n';
  }
  return out.str();
}

json report_to_json(const DeviationReport& r) {
  json j;
  j["schema"] = "krono.report/1";
  j["version"] = kVersion;
  j["config"] = config_to_json(r.config);
  j["eta"] = r.eta;
  j["reference_bound"] = r.reference_bound;
  j["interrupted"] = r.interrupted;
  j["warnings"] = r.warnings;
  j["aggregate"] = {{"sup_m_dev", aggregate_json(r.sup_m_dev)},
                    {"sup_count_dev", aggregate_json(r.sup_count_dev)},
                    {"ks", aggregate_json(r.ks)},
                    {"atom0_err", aggregate_json(r.atom0_err)}};
  if (r.config.per_energy) j["energies"] = r.energies;
  json trials = json::array();
  for (const auto& t : r.trials) {
    json row = {{"trial", t.trial},         {"seed", t.seed}, {"sup_m_dev", t.sup_m_dev},
                {"sup_count_dev", t.sup_count_dev}, {"ks", t.ks},     {"atom0_err", t.atom0_err},
                {"wall_ms", t.wall_ms}};
    if (r.config.per_energy) {
      row["m_dev"] = t.m_dev;
      row["count_dev"] = t.count_dev;
    }
    trials.push_back(std::move(row));
  }
  j["trials"] = std::move(trials);
  return j;
}

DeviationReport report_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != "krono.report/1") {
      throw DataError(fmt::format("unsupported report schema '{}'", j.at("schema").get<std::string>()));
    }
    ExperimentConfig config = config_from_json(j.at("config"));
    std::vector<experiments::TrialResult> trials;
    for (const auto& row : j.at("trials")) {
      experiments::TrialResult t;
      t.trial = row.at("trial").get<std::size_t>();
      t.seed = row.at("seed").get<Seed>();
      t.sup_m_dev = row.at("sup_m_dev").get<double>();
      t.sup_count_dev = row.at("sup_count_dev").get<double>();
      t.ks = row.at("ks").get<double>();
      t.atom0_err = row.at("atom0_err").get<double>();
      t.wall_ms = row.at("wall_ms").get<double>();
      if (row.contains("m_dev")) t.m_dev = row["m_dev"].get<std::vector<double>>();
      if (row.contains("count_dev")) t.count_dev = row["count_dev"].get<std::vector<double>>();
      trials.push_back(std::move(t));
    }
    std::vector<double> energies = j.contains("energies") ? j["energies"].get<std::vector<double>>()
                                                          : std::vector<double>{};
    auto report = DeviationReport::assemble(std::move(config), j.at("eta").get<double>(), std::move(energies),
                                            std::move(trials), j.value("warnings", std::vector<std::string>{}));
    report.interrupted = j.value("interrupted", false);
    return report;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed report: {}", e.what()));
  } catch (const DomainError& e) {
    throw DataError(fmt::format("invalid report: {}", e.what()));
  }
}

void write_report(const DeviationReport& report, const std::filesystem::path& path, ReportFormat format) {
  if (format == ReportFormat::json) {
    write_json_file(path, report_to_json(report));
    return;
  }
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << report_csv(report);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

void write_report(const DeviationReport& report, const std::filesystem::path& path, const std::string& format) {
  write_report(report, path, report_format_from_string(format));
}

DeviationReport read_report(const std::filesystem::path& path) {
  try {
    return report_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

DeviationReport replay_report(const std::filesystem::path& path) {
  const auto stored = read_report(path);
  return experiments::run_verification(stored.config);
}

json convergence_to_json(const experiments::ConvergenceReport& report) {
  json j;
  j["schema"] = "krono.convergence/1";
  j["version"] = kVersion;
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back({{"n", p.n},
                      {"k", p.k},
                      {"N", p.dimension},
                      {"mean_sup_m_dev", p.mean_sup_m_dev},
                      {"mean_sup_count_dev", p.mean_sup_count_dev}});
  }
  j["points"] = std::move(points);
  const auto fit = [](const experiments::SlopeFit& f) {
    return json{{"slope", f.slope}, {"intercept", f.intercept}, {"slope_stderr", f.slope_stderr}, {"points", f.points}};
  };
  j["fit_sup_m_dev"] = fit(report.m_fit);
  j["fit_sup_count_dev"] = fit(report.count_fit);
  json reports = json::array();
  for (const auto& r : report.reports) reports.push_back(report_to_json(r));
  j["reports"] = std::move(reports);
  return j;
}

json concentration_to_json(const experiments::ConcentrationReport& r) {
  json j;
  j["schema"] = "krono.concentration/1";
  j["version"] = kVersion;
  j["z"] = complex_json(r.z);
  j["n"] = r.n;
  j["k"] = r.k;
  j["N"] = r.dimension;
  j["draws"] = r.draws;
  j["distinct_indices"] = r.distinct_indices.size();
  j["repeated_indices"] = r.repeated_indices.size();
  j["d_hat"] = complex_json(r.d_hat);
  j["d_theory"] = complex_json(r.d_theory);
  j["delta_hat"] = r.delta_hat;
  j["delta_draws"] = r.delta_draws;
  j["draw_mean_variance"] = r.draw_mean_variance;
  j["identity_defect"] = r.identity_defect;
  json means = json::array();
  for (std::size_t i = 0; i < r.index_mean.size(); ++i) {
    means.push_back({{"index", r.distinct_indices[i]},
                     {"mean", complex_json(r.index_mean[i])},
                     {"stderr", r.index_stderr[i]}});
  }
  j["index_means"] = std::move(means);
  json repeated = json::array();
  for (const auto& draw : r.repeated_forms) {
    json row = json::array();
    for (const Complex& v : draw) row.push_back(complex_json(v));
    repeated.push_back(std::move(row));
  }
  j["repeated_forms"] = std::move(repeated);
  return j;
}

}  // namespace krono::io
