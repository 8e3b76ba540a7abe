#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "krono/errors.hpp"
#include "krono/experiments.hpp"
#include "krono/json_writer.hpp"
#include "krono/matrix_io.hpp"
#include "krono/plot.hpp"
#include "krono/report_io.hpp"
#include "krono/spectra.hpp"
#include "krono/theory.hpp"

namespace krono::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  Index n = 64;
  int k = 1;
  double p = 0.5;
  double q = 0.5;
  std::optional<double> eta;
  double kappa = 0.1;
  std::size_t trials = 10;
  Seed seed = 0;
  std::size_t grid = 201;
  std::string proj = "coord";
  std::string frame = "shared";
  std::string v;
  Index n2 = 0;
  std::string out = ".";
  std::string format = "csv";
  std::string method = "gram";
  bool plot = false;
  bool timing = false;
  bool per_e = false;
  double s = 1.0;
  double beta = 0.1;
  double rho = 1.0;
  double c0 = 0.25;
  std::vector<Index> sizes;
  double z_re = 0.5;
  double z_im = 0.5;
  std::size_t draws = 10;
  std::size_t trial = 0;
  std::optional<std::size_t> bins;
  std::string input;
};

struct Outcome {
  int code = exit_ok;
  json config;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;
};

void add_law_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--p", o.p, "Rank fraction of the left projection, in (0, 1)");
  cmd->add_option("--q", o.q, "Rank fraction of the right projection, in (0, 1)");
}

void add_model_flags(CLI::App* cmd, Options& o) {
  add_law_flags(cmd, o);
  cmd->add_option("--n", o.n, "Factor size n (n1 for the U (x) V model)");
  cmd->add_option("--k", o.k, "Tensor power k");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--proj", o.proj, "Projection kind")->check(CLI::IsMember({"coord", "rotated"}));
  cmd->add_option("--frame", o.frame, "Rotated projections share one Haar frame or use independent ones")
      ->check(CLI::IsMember({"shared", "independent"}));
  cmd->add_option("--method", o.method, "Eigensolver path")->check(CLI::IsMember({"gram", "dense"}));
  cmd->add_option("--out", o.out, "Output directory");
}

void add_v_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--v", o.v, "Fixed factor V: identity | dft | haar[:SEED] | file:PATH");
  cmd->add_option("--n2", o.n2, "Size of V (taken from the file for file:PATH)");
}

void add_run_flags(CLI::App* cmd, Options& o) {
  add_model_flags(cmd, o);
  cmd->add_option("--eta", o.eta, "Imaginary part eta; the schedule is used when omitted");
  cmd->add_option("--kappa", o.kappa, "Edge margin of the energy window");
  cmd->add_option("--trials", o.trials, "Number of trials");
  cmd->add_option("--grid", o.grid, "Energy grid points");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--plot", o.plot, "Also write an overlay SVG of trial 0");
  cmd->add_flag("--timing", o.timing, "Record wall-clock times (outputs are then not reproducible)");
  cmd->add_flag("--per-e", o.per_e, "Keep per-energy deviations in JSON output");
  cmd->add_option("--s", o.s, "Schedule exponent s");
  cmd->add_option("--beta", o.beta, "Schedule exponent beta");
  cmd->add_option("--rho", o.rho, "Schedule constant rho");
  cmd->add_option("--c0", o.c0, "Hypothesis constant c0 in (0, 1/2)");
}

Index infer_v_size(const Options& o) {
  if (o.n2 > 0) return o.n2;
  if (o.v.rfind("file:", 0) == 0) return io::read_matrix(o.v.substr(5)).entries.rows();
  if (o.v.empty() || o.v == "identity") return 1;
  throw DomainError("--n2 is required for this --v");
}

experiments::ExperimentConfig make_config(const Options& o, experiments::Mode mode) {
  if (!(o.p > 0.0 && o.p < 1.0) || !(o.q > 0.0 && o.q < 1.0)) {
    throw DomainError(fmt::format("--p and --q must lie in (0, 1), got p = {}, q = {}", o.p, o.q));
  }
  experiments::ExperimentConfig c;
  c.mode = mode;
  c.n = o.n;
  c.k = mode == experiments::Mode::theorem2 ? 1 : o.k;
  c.p = o.p;
  c.q = o.q;
  c.left_kind = c.right_kind = ensembles::projection_kind_from_string(o.proj);
  c.frame = experiments::frame_from_string(o.frame);
  if (mode == experiments::Mode::theorem2) {
    c.v = experiments::VSpec::parse(o.v.empty() ? "identity" : o.v, infer_v_size(o));
  }
  c.eta = o.eta;
  c.schedule = {o.s, o.beta, o.rho, o.c0};
  c.kappa = o.kappa;
  c.grid_points = o.grid;
  c.trials = o.trials;
  c.master_seed = o.seed;
  c.eigen_method = o.method == "dense" ? spectra::EigenMethod::dense : spectra::EigenMethod::gram;
  c.per_energy = o.per_e;
  c.timing = o.timing;
  return c;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory '{}': {}", dir, ec.message()));
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  f << text;
  if (!f) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

json spectrum_summary(const spectra::Spectrum& s, const theory::LawParams& params) {
  const auto& v = s.values();
  const auto below = std::lower_bound(v.begin(), v.end(), plot::kAtomCut) - v.begin();
  const auto above = v.end() - std::upper_bound(v.begin(), v.end(), 1.0 - plot::kAtomCut);
  const double n = static_cast<double>(v.size());
  return {{"N", v.size()},
          {"fraction_at_zero", static_cast<double>(below) / n},
          {"fraction_at_one", static_cast<double>(above) / n},
          {"ks", spectra::ks_distance(s, params)}};
}

// --- subcommands -----------------------------------------------------------

Outcome cmd_law(const Options& o, std::ostream& out) {
  const theory::LawParams params(o.p, o.q);
  if (o.grid < 2) throw DomainError("--grid must be at least 2");
  const double eta = o.eta.value_or(0.05);
  if (!(eta > 0.0)) throw DomainError("--eta must be positive");
  const auto edges = theory::support_edges(params);
  const auto atoms = theory::atom_masses(params);
  out << fmt::format("edges {:.6f} {:.6f}\n", edges.lambda_minus, edges.lambda_plus);
  out << fmt::format("atoms {:.6f} {:.6f}\n", atoms.at_zero, atoms.at_one);
  out << fmt::format("continuous {:.6f}\n", atoms.continuous());

  const fs::path dir = prepare_dir(o.out);
  std::string density = "x,density\n";
  std::string transform = "E,re_m,im_m\n";
  for (std::size_t i = 0; i < o.grid; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(o.grid - 1);
    density += io::format_double(x) + ',' + io::format_double(theory::density(params, x)) + '\n';
    const Complex m = theory::stieltjes_mM(params, Complex(x, eta));
    transform += io::format_double(x) + ',' + io::format_double(m.real()) + ',' + io::format_double(m.imag()) + '\n';
  }
  Outcome r;
  write_text(dir / "law_density.csv", density);
  write_text(dir / "law_transform.csv", transform);
  r.outputs = {"law_density.csv", "law_transform.csv"};
  if (o.plot) {
    plot::write_svg(dir / "law.svg", plot::spectrum_svg(spectra::Spectrum{}, params,
                                                        {std::nullopt, 800, 480, fmt::format("p = {}, q = {}", o.p, o.q)}));
    r.outputs.push_back("law.svg");
  }
  r.config = {{"p", o.p},
              {"q", o.q},
              {"grid", o.grid},
              {"eta", eta},
              {"lambda_minus", edges.lambda_minus},
              {"lambda_plus", edges.lambda_plus},
              {"atom_zero", atoms.at_zero},
              {"atom_one", atoms.at_one}};
  return r;
}

Outcome cmd_sample(const Options& o, std::ostream& out) {
  const bool pair = !o.v.empty();
  auto config = make_config(o, pair ? experiments::Mode::theorem2 : experiments::Mode::theorem1);
  config.trials = o.trial + 1;
  const auto spectrum = experiments::trial_spectrum(config, o.trial);
  const theory::LawParams params(o.p, o.q);
  const fs::path dir = prepare_dir(o.out);
  spectra::write_spectrum(dir / "spectrum.csv", spectrum);
  Outcome r;
  r.outputs = {"spectrum.csv", "spectrum.csv.meta.json"};
  r.config = io::config_to_json(config);
  r.config["trial"] = o.trial;
  r.warnings = experiments::config_warnings(config);
  const json summary = spectrum_summary(spectrum, params);
  out << fmt::format("N {} at_zero {:.6f} at_one {:.6f} ks {:.6f}\n", spectrum.size(),
                     summary["fraction_at_zero"].get<double>(), summary["fraction_at_one"].get<double>(),
                     summary["ks"].get<double>());
  if (o.plot) {
    plot::write_svg(dir / "spectrum.svg", plot::spectrum_svg(spectrum, params, {o.bins, 800, 480, ""}));
    r.outputs.push_back("spectrum.svg");
  }
  return r;
}

Outcome cmd_verify(const Options& o, experiments::Mode mode, std::ostream& out, const std::atomic<bool>* cancel) {
  const auto config = make_config(o, mode);
  const auto format = io::report_format_from_string(o.format);
  const fs::path dir = prepare_dir(o.out);
  const auto report = experiments::run_verification(config, cancel);

  Outcome r;
  const std::string name = format == io::ReportFormat::csv ? "report.csv" : "report.json";
  io::write_report(report, dir / name, format);
  r.outputs.push_back(name);
  r.config = io::config_to_json(report.config);
  r.config["eta_used"] = report.eta;
  r.warnings = report.warnings;
  out << fmt::format("N {} eta {:.6g} trials {}\n", report.config.dimension(), report.eta, report.trials.size());
  out << fmt::format("sup_m_dev mean {:.6g} max {:.6g}\n", report.sup_m_dev.mean, report.sup_m_dev.max);
  out << fmt::format("sup_count_dev mean {:.6g} max {:.6g}\n", report.sup_count_dev.mean, report.sup_count_dev.max);
  out << fmt::format("ks mean {:.6g} atom0_err mean {:.6g}\n", report.ks.mean, report.atom0_err.mean);
  if (report.interrupted) {
    r.code = exit_interrupted;
    return r;
  }
  if (o.plot) {
    const auto spectrum = experiments::trial_spectrum(report.config, 0);
    const theory::LawParams params(o.p, o.q);
    plot::write_svg(dir / "overlay.svg", plot::spectrum_svg(spectrum, params, {o.bins, 800, 480, ""}));
    spectra::write_spectrum(dir / "spectrum.csv", spectrum);
    r.outputs.insert(r.outputs.end(), {"overlay.svg", "spectrum.csv", "spectrum.csv.meta.json"});
  }
  return r;
}

Outcome cmd_converge(const Options& o, std::ostream& out, const std::atomic<bool>* cancel) {
  if (o.sizes.size() < 3) throw DomainError("--sizes needs at least 3 values");
  std::vector<experiments::ExperimentConfig> configs;
  for (Index n : o.sizes) {
    Options each = o;
    each.n = n;
    configs.push_back(make_config(each, experiments::Mode::theorem1));
  }
  const fs::path dir = prepare_dir(o.out);
  const auto sweep = experiments::convergence_sweep(configs, cancel);
  io::write_json_file(dir / "convergence.json", io::convergence_to_json(sweep));
  std::string csv = "n,k,N,mean_sup_m_dev,mean_sup_count_dev\n";
  for (const auto& p : sweep.points) {
    csv += fmt::format("{},{},{},{},{}\n", p.n, p.k, p.dimension, io::format_double(p.mean_sup_m_dev),
                       io::format_double(p.mean_sup_count_dev));
  }
  write_text(dir / "convergence.csv", csv);
  for (const auto& p : sweep.points) {
    out << fmt::format("N {} sup_m_dev {:.6g} sup_count_dev {:.6g}\n", p.dimension, p.mean_sup_m_dev,
                       p.mean_sup_count_dev);
  }
  out << fmt::format("slope sup_m_dev {:.4f} +- {:.4f}\n", sweep.m_fit.slope, sweep.m_fit.slope_stderr);
  out << fmt::format("slope sup_count_dev {:.4f} +- {:.4f}\n", sweep.count_fit.slope, sweep.count_fit.slope_stderr);
  Outcome r;
  r.outputs = {"convergence.json", "convergence.csv"};
  r.config = io::config_to_json(configs.front());
  r.config["sizes"] = o.sizes;
  for (const auto& rep : sweep.reports) {
    r.warnings.insert(r.warnings.end(), rep.warnings.begin(), rep.warnings.end());
  }
  return r;
}

Outcome cmd_probe(const Options& o, std::ostream& out) {
  const bool pair = !o.v.empty();
  const auto config = make_config(o, pair ? experiments::Mode::theorem2 : experiments::Mode::theorem1);
  const fs::path dir = prepare_dir(o.out);
  const auto report = experiments::concentration_probe(config, Complex(o.z_re, o.z_im), o.draws);
  io::write_json_file(dir / "probe.json", io::concentration_to_json(report));
  out << fmt::format("N {} draws {} delta_hat {:.6g}\n", report.dimension, report.draws, report.delta_hat);
  out << fmt::format("D_hat {:.6g}{:+.6g}i D_theory {:.6g}{:+.6g}i\n", report.d_hat.real(), report.d_hat.imag(),
                     report.d_theory.real(), report.d_theory.imag());
  Outcome r;
  r.outputs = {"probe.json"};
  r.config = io::config_to_json(config);
  r.config["z"] = {o.z_re, o.z_im};
  r.config["draws"] = o.draws;
  r.warnings = experiments::config_warnings(config);
  return r;
}

Outcome cmd_plot(const Options& o, std::ostream& out) {
  const fs::path input(o.input);
  spectra::Spectrum spectrum;
  std::optional<theory::LawParams> params;
  if (input.extension() == ".json") {
    const auto report = io::read_report(input);
    spectrum = experiments::trial_spectrum(report.config, 0);
    params.emplace(report.config.p, report.config.q);
  } else {
    spectrum = spectra::read_spectrum(input);
    const auto& m = spectrum.metadata();
    if (m.p > 0.0 && m.q > 0.0) params.emplace(m.p, m.q);
  }
  if (!params) params.emplace(o.p, o.q);

  fs::path target(o.out);
  if (target.extension() != ".svg") target = prepare_dir(o.out) / "plot.svg";
  plot::write_svg(target, plot::spectrum_svg(spectrum, *params, {o.bins, 800, 480, ""}));
  out << fmt::format("wrote {} ({} eigenvalues)\n", target.string(), spectrum.size());
  Outcome r;
  r.outputs = {target.filename().string()};
  r.config = {{"input", o.input}, {"p", params->p()}, {"q", params->q()}};
  if (o.bins) r.config["bins"] = *o.bins;
  return r;
}

// --- manifest and replay ---------------------------------------------------

fs::path manifest_path(const std::string& subcommand, const Options& o) {
  if (subcommand == "plot") {
    fs::path target(o.out);
    if (target.extension() == ".svg") return fs::path(target.string() + ".manifest.json");
    return fs::path(o.out) / "plot.manifest.json";
  }
  return fs::path(o.out) / "manifest.json";
}

void write_manifest(const std::string& subcommand, const std::vector<std::string>& args, const Options& o,
                    const Outcome& outcome) {
  json m;
  m["schema"] = "krono.manifest/1";
  m["version"] = io::kVersion;
  m["subcommand"] = subcommand;
  // Arguments without --out, so a replay can target any directory.
  json kept = json::array();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  m["args"] = kept;
  m["config"] = outcome.config;
  m["warnings"] = outcome.warnings;
  m["outputs"] = outcome.outputs;
  m["interrupted"] = outcome.code == exit_interrupted;
  io::write_json_file(manifest_path(subcommand, o), m);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* cancel) {
  Options o;
  CLI::App app{"Compressed Kronecker-unitary ensembles against the MANOVA law", "krono"};
  app.require_subcommand(1);

  auto* law = app.add_subcommand("law", "Tabulate the limit density, Stieltjes transform, edges and atoms");
  add_law_flags(law, o);
  law->add_option("--grid", o.grid, "Grid points on [0, 1]");
  law->add_option("--eta", o.eta, "Imaginary part for the transform table (default 0.05)");
  law->add_option("--out", o.out, "Output directory");
  law->add_flag("--plot", o.plot, "Also write law.svg");

  auto* sample = app.add_subcommand("sample", "Draw one ensemble and write its spectrum");
  add_model_flags(sample, o);
  add_v_flags(sample, o);
  sample->add_option("--trial", o.trial, "Trial index whose seeds are used");
  sample->add_flag("--plot", o.plot, "Also write spectrum.svg");
  sample->add_option("--bins", o.bins, "Histogram bins (Freedman-Diaconis by default)");

  auto* verify = app.add_subcommand("verify", "Monte Carlo check of the U^(x)k model against the limit law");
  add_run_flags(verify, o);
  verify->add_option("--bins", o.bins, "Histogram bins for --plot");

  auto* verify2 = app.add_subcommand("verify2", "Monte Carlo check of the U (x) V model");
  add_run_flags(verify2, o);
  add_v_flags(verify2, o);
  verify2->add_option("--bins", o.bins, "Histogram bins for --plot");

  auto* converge = app.add_subcommand("converge", "Deviation against N over several n and a log-log fit");
  add_run_flags(converge, o);
  converge->add_option("--sizes", o.sizes, "Factor sizes n, comma separated")->delimiter(',')->required();

  auto* probe = app.add_subcommand("probe", "Leave-one-out quadratic form concentration");
  add_model_flags(probe, o);
  add_v_flags(probe, o);
  probe->add_option("--z-re", o.z_re, "Re z");
  probe->add_option("--z-im", o.z_im, "Im z (at least 0.3)");
  probe->add_option("--draws", o.draws, "Independent draws");

  auto* plot_cmd = app.add_subcommand("plot", "SVG histogram of a spectrum CSV or a JSON report against the law");
  plot_cmd->add_option("input", o.input, "Spectrum CSV or JSON report")->required();
  add_law_flags(plot_cmd, o);
  plot_cmd->add_option("--out", o.out, "SVG path, or a directory for plot.svg");
  plot_cmd->add_option("--bins", o.bins, "Histogram bins (Freedman-Diaconis by default)");

  std::string manifest_in;
  auto* replay = app.add_subcommand("replay", "Re-run the invocation recorded in a manifest");
  replay->add_option("manifest", manifest_in, "manifest.json")->required();
  replay->add_option("--out", o.out, "Output directory for the replay");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return exit_usage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (name == "replay") {
      const auto manifest = io::read_json_file(manifest_in);
      std::vector<std::string> again;
      try {
        for (const auto& a : manifest.at("args")) again.push_back(a.get<std::string>());
        if (again.empty() || again.front() != manifest.at("subcommand").get<std::string>())
          throw DataError(fmt::format("{}: args do not start with the subcommand", manifest_in));
      } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: malformed manifest: {}", manifest_in, e.what()));
      }
      if (again.front() == "replay") throw DataError("a manifest cannot replay a replay");
      if (o.out != ".") {
        again.push_back("--out");
        again.push_back(o.out);
      }
      return run_cli(again, out, err, cancel);
    }

    Outcome outcome;
    if (name == "law") {
      outcome = cmd_law(o, out);
    } else if (name == "sample") {
      outcome = cmd_sample(o, out);
    } else if (name == "verify") {
      outcome = cmd_verify(o, experiments::Mode::theorem1, out, cancel);
    } else if (name == "verify2") {
      outcome = cmd_verify(o, experiments::Mode::theorem2, out, cancel);
    } else if (name == "converge") {
      outcome = cmd_converge(o, out, cancel);
    } else if (name == "probe") {
      outcome = cmd_probe(o, out);
    } else if (name == "plot") {
      outcome = cmd_plot(o, out);
    }
    for (const auto& w : outcome.warnings) err << "warning: " << w << '\n';
    std::vector<std::string> invocation{name};
    invocation.insert(invocation.end(), args.begin() + 1, args.end());
    write_manifest(name, invocation, o, outcome);
    if (outcome.code == exit_interrupted) err << "interrupted; partial results written\n";
    return outcome.code;
  } catch (const Interrupted& e) {
    err << "interrupted: " << e.what() << '\n';
    return exit_interrupted;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n' << chosen->help();
    return exit_usage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace krono::cli
