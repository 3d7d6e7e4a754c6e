#ifndef SPECFACT_CLI_HPP
#define SPECFACT_CLI_HPP

// Command-line front end. run() returns the process exit status:
//   0 success, 1 candidate rejected by verify, 2 validation failure,
//   3 unreadable or malformed input.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specfact/divisors.hpp"
#include "specfact/errors.hpp"
#include "specfact/example_model.hpp"
#include "specfact/factors.hpp"
#include "specfact/io.hpp"
#include "specfact/spectral.hpp"
#include "specfact/statespace.hpp"

namespace specfact::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kValidation = 2, kParse = 3 };

inline int exit_code_for(Errc code) { return code == Errc::ParseError ? kParse : kValidation; }

struct GlobalOptions {
  std::optional<double> tol;
  std::optional<std::size_t> samples;
  bool moebius = false;
  std::optional<double> moebius_parameter;
};

namespace detail {

inline std::string fmt(double x) { return format_number(x); }

inline std::string points_text(const std::vector<SpectralPoint>& pts) {
  if (pts.empty()) return "-";
  std::ostringstream os;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ' ';
    const complex v = pts[i].value;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", std::abs(v.real()) < 1e-14 ? 0.0 : v.real());
    os << buf;
    if (std::abs(v.imag()) > 1e-14) {
      std::snprintf(buf, sizeof buf, "%.6g", std::abs(v.imag()));
      os << (v.imag() < 0 ? "-" : "+") << buf << 'i';
    }
    if (pts[i].multiplicity > 1) os << "^" << pts[i].multiplicity;
  }
  return os.str();
}

/// Tolerances from the model file, then from the command line.
inline ToleranceConfig tolerances(const io::ModelFile& f, const GlobalOptions& g) {
  ToleranceConfig tol;
  f.tolerances.apply(tol);
  if (g.tol) tol.residual_tol = *g.tol;
  if (g.samples) tol.circle_samples = *g.samples;
  tol.validate();
  return tol;
}

/// Outer validation, with the optional Moebius preprocessing. Returns the
/// parameter used (0 when none).
inline double prepare_outer(const Realization& w, const GlobalOptions& g,
                            const ToleranceConfig& tol) {
  if (!g.moebius) {
    validate_outer(w, tol, true);
    return 0.0;
  }
  validate_outer(w, tol, false);
  const double a = g.moebius_parameter ? *g.moebius_parameter : moebius_parameter_for(w, tol);
  validate_outer(moebius(w, a, tol), tol, true);
  return a;
}

inline io::Json blocks_json(const Matrix& m) {
  io::Json out = io::Json::array();
  for (const EigenBlock& b : spectral_blocks(m)) {
    io::Json e;
    e["value"] = io::Json::array({b.value.real(), b.value.imag()});
    e["multiplicity"] = b.multiplicity;
    e["dimension"] = b.dimension();
    out.push_back(std::move(e));
  }
  return out;
}

struct Check {
  std::string what;
  double residual;
  double limit;
  bool ok() const { return residual <= limit; }
};

inline double entry_error(const Matrix& got, const Matrix& want) {
  if (got.rows() != want.rows() || got.cols() != want.cols())
    return std::numeric_limits<double>::infinity();
  return max_abs(got - want);
}

inline Matrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v.asDiagonal();
}

}  // namespace detail

// ----------------------------------------------------------------- analyze

inline int cmd_analyze(const std::string& model_path, const std::string& out_path,
                       const GlobalOptions& g, std::ostream& out) {
  const io::ModelFile f = io::read_model(model_path);
  const ToleranceConfig tol = detail::tolerances(f, g);
  const double a = detail::prepare_outer(f.model, g, tol);
  const Realization w = a == 0.0 ? f.model : moebius(f.model, a, tol);
  const ConjugatePhase cp = conjugate_phase(w, tol);
  const ExtremalSet& es = cp.extremal;

  io::Json r;
  r["name"] = f.name;
  r["degree"] = w.states();
  if (g.moebius) r["moebius_parameter"] = a;
  r["outer_factor"] = io::realization_json(w);
  r["w_plus"] = io::realization_json(es.w_plus);
  r["w_bar_plus"] = io::realization_json(es.w_bar_plus);
  r["conjugate_phase"] = io::realization_json(cp.t);
  r["X"] = io::matrix_json(es.x);
  r["Y"] = io::matrix_json(es.y);
  r["Z"] = io::matrix_json(es.z);
  r["P0_inv"] = io::matrix_json(cp.p0_inv);
  r["P0"] = io::matrix_json(cp.p0);
  io::Json gr;
  gr["stein_p0"] = cp.gramians.stein_p0;
  gr["cross"] = cp.gramians.cross;
  gr["feedthrough"] = cp.gramians.feedthrough;
  gr["stein_p0_inv"] = cp.gramians.stein_p0_inv;
  gr["inverse_check"] = cp.gramians.inverse_check;
  gr["pass"] = cp.gramians.pass;
  r["gramian_residuals"] = std::move(gr);
  io::Json eig;
  eig["A"] = io::complex_list_json(eigenvalues(w.a()));
  eig["zero_matrix"] = io::complex_list_json(eigenvalues(cp.gamma));
  eig["conjugate_phase"] = io::complex_list_json(eigenvalues(cp.t.a()));
  r["eigenvalues"] = std::move(eig);
  io::Json blocks;
  blocks["gamma"] = detail::blocks_json(cp.gamma);
  blocks["a"] = detail::blocks_json(cp.a_inv_t);
  r["invariant_blocks"] = std::move(blocks);

  const std::string text = io::to_text(r);
  if (out_path.empty()) {
    out << text;
  } else {
    io::write_file(out_path, text);
    out << "wrote " << out_path << " (degree " << w.states() << ", Gramian residual "
        << detail::fmt(cp.gramians.worst()) << ")\n";
  }
  return kOk;
}

// ----------------------------------------------------------------- factors

inline int cmd_factors(const std::string& model_path, const std::string& specs_path,
                       const std::string& out_dir, const GlobalOptions& g, std::ostream& out) {
  const io::ModelFile f = io::read_model(model_path);
  const std::vector<io::SpecEntry> entries = io::read_specs(specs_path);
  const ToleranceConfig tol = detail::tolerances(f, g);
  const double a = detail::prepare_outer(f.model, g, tol);
  if (entries.empty()) {
    out << "no specs: 0 factors\n";
    return kOk;
  }
  const Realization w = a == 0.0 ? f.model : moebius(f.model, a, tol);
  const ConjugatePhase cp = conjugate_phase(w, tol);
  const std::vector<SubspaceSpec> specs = io::resolve_specs(cp, entries, tol);
  const std::vector<FamilyMember> members =
      a == 0.0 ? factor_family(cp, specs, tol) : factor_family_moebius(f.model, specs, a, tol);

  std::filesystem::create_directories(out_dir);
  std::ostringstream table;
  table << "index,file,divisor_degree,degree,spectrum_residual,allpass_residual,poles,zeros,pass\n";
  bool all_pass = true;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const FamilyMember& m = members[k];
    const std::string file = "factor_" + std::to_string(k) + ".json";
    io::ModelFile mf{(f.name.empty() ? "factor" : f.name + " factor") + " " + std::to_string(k),
                     m.factor.w, {}};
    io::write_file((std::filesystem::path(out_dir) / file).string(), io::write_model(mf));
    std::string zeros = "n/a";
    try {
      zeros = detail::points_text(poles_zeros(m.factor.w, tol, true).zeros);
    } catch (const Error&) {
    }
    const FactorReport& rep = m.factor.report;
    all_pass = all_pass && rep.pass;
    table << k << ',' << file << ',' << m.divisor.t_ell.states() << ',' << rep.degree << ','
          << detail::fmt(rep.spectrum_residual) << ','
          << detail::fmt(rep.allpass_residual.value_or(m.divisor.allpass_residual)) << ','
          << detail::points_text(rep.poles_zeros.poles) << ',' << zeros << ','
          << (rep.pass ? "yes" : "no") << '\n';
  }
  io::write_file((std::filesystem::path(out_dir) / "summary.csv").string(), table.str());
  out << table.str();
  out << members.size() << " factors written to " << out_dir << '\n';
  return all_pass ? kOk : kValidation;
}

// ------------------------------------------------------------------ verify

inline int cmd_verify(const std::string& model_path, const std::string& candidate_path,
                      const GlobalOptions& g, std::ostream& out) {
  const io::ModelFile f = io::read_model(model_path);
  const io::ModelFile cand = io::read_model(candidate_path);
  const ToleranceConfig tol = detail::tolerances(f, g);
  const double a = detail::prepare_outer(f.model, g, tol);

  const FactorReport rep = verify_factor(cand.model, f.model, tol);
  out << "candidate:          " << (cand.name.empty() ? candidate_path : cand.name) << '\n'
      << "McMillan degree:    " << rep.degree << " (expected " << rep.expected_degree << ")\n"
      << "spectrum residual:  " << detail::fmt(rep.spectrum_residual) << " (limit "
      << detail::fmt(tol.residual_tol) << ")\n"
      << "poles:              " << detail::points_text(rep.poles_zeros.poles) << '\n';
  std::vector<std::string> reasons = rep.reasons;
  if (rep.pass) {
    try {
      const Realization wm = a == 0.0 ? f.model : moebius(f.model, a, tol);
      const Realization wc = a == 0.0 ? cand.model : moebius(cand.model, a, tol);
      const ExtractedDivisor ex = extract_left_divisor(wm, wc, tol);
      out << "left divisor:       degree " << ex.report.degree << ", complement degree "
          << ex.complement_degree << ", all-pass residual "
          << detail::fmt(ex.report.allpass_residual.value_or(0.0)) << '\n';
    } catch (const Error& e) {
      reasons.push_back(std::string("divisor extraction failed: ") + e.what());
    }
  }
  if (reasons.empty()) {
    out << "verdict:            PASS\n";
    return kOk;
  }
  out << "verdict:            FAIL\n";
  for (const std::string& r : reasons) out << "  - " << r << '\n';
  return kVerifyFailed;
}

// ---------------------------------------------------------------- spectrum

inline int cmd_spectrum(const std::string& model_path, std::size_t samples,
                        const std::string& csv_path, const GlobalOptions& g, std::ostream& out) {
  const io::ModelFile f = io::read_model(model_path);
  const ToleranceConfig tol = detail::tolerances(f, g);
  if (samples == 0) fail(Errc::InvalidArgument, "sample count must be positive");
  if (f.model.outputs() == 0) fail(Errc::InvalidArgument, "model has no outputs");
  const Index p = f.model.outputs();

  std::ostringstream csv;
  csv << "theta";
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) {
      const std::string idx = std::to_string(i + 1) + std::to_string(j + 1);
      if (i == j)
        csv << ",phi" << idx;
      else
        csv << ",re_phi" << idx << ",im_phi" << idx;
    }
  csv << '\n';
  const TransferEvaluator ev(f.model, tol);
  for (std::size_t k = 0; k < samples; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(samples);
    const CMatrix g_z = ev(std::polar(1.0, theta));
    const CMatrix phi = g_z * g_z.adjoint();
    csv << io::format_double(theta);
    for (Index i = 0; i < p; ++i)
      for (Index j = i; j < p; ++j) {
        if (i == j)
          csv << ',' << io::format_double(phi(i, i).real());
        else
          csv << ',' << io::format_double(phi(i, j).real()) << ','
              << io::format_double(phi(i, j).imag());
      }
    csv << '\n';
  }
  if (csv_path.empty())
    out << csv.str();
  else
    io::write_file(csv_path, csv.str());
  return kOk;
}

// ----------------------------------------------------------------- example

/// Runs the two-channel worked example end to end and compares every stage
/// with its reference values.
inline int cmd_example(std::ostream& out) {
  using detail::Check;
  using detail::diag;
  using detail::entry_error;
  const auto start = std::chrono::steady_clock::now();
  std::vector<Check> checks;

  const Realization w_minus = example::outer_factor();
  const ConjugatePhase cp = conjugate_phase(w_minus);
  const example::PhaseReference ref = example::conjugate_phase_reference();
  checks.push_back({"conjugate phase A = diag(0.25, 0.333.., 2, 2)", entry_error(cp.t.a(), ref.a), 1e-10});
  checks.push_back({"conjugate phase B", entry_error(cp.t.b(), ref.b), 1e-10});
  checks.push_back({"conjugate phase C", entry_error(cp.t.c(), ref.c), 1e-10});
  checks.push_back({"conjugate phase D = diag(0.5, 0.666..)", entry_error(cp.t.d(), ref.d), 1e-10});

  const Matrix eye = Matrix::Identity(2, 2);
  const Matrix& pi0 = cp.p0_inv;
  checks.push_back({"P0^{-1} off-diagonal blocks = -I",
                    std::max(entry_error(pi0.topRightCorner(2, 2), -eye),
                             entry_error(pi0.bottomLeftCorner(2, 2), -eye)),
                    1e-10});
  checks.push_back({"P0^{-1} bottom-right block = (4/3) I",
                    entry_error(pi0.bottomRightCorner(2, 2), 4.0 / 3.0 * eye), 1e-10});
  checks.push_back({"P0^{-1} top-left block = diag(-1/15, -1/32)",
                    entry_error(pi0.topLeftCorner(2, 2), diag({-1.0 / 15.0, -1.0 / 32.0})),
                    1e-10});
  checks.push_back({"Stein identity A^T P0^{-1} A - P0^{-1} = C^T C", cp.gramians.stein_p0_inv,
                    1e-12});

  const AllPassDivisor d2 = divisor_from_projector(cp, diag({0, 0, 1, 1}));
  const Realization bar = example::bar_divisor();
  checks.push_back({"P for Pi = diag(0, 0, 1, 1) equals diag(0, 0, 0.75, 0.75)",
                    entry_error(d2.p, diag({0, 0, 0.75, 0.75})), 1e-10});
  checks.push_back({"divisor (2I, 1.5I, 2I, 2I)",
                    std::max({entry_error(d2.t_ell.a(), bar.a()), entry_error(d2.t_ell.b(), bar.b()),
                              entry_error(d2.t_ell.c(), bar.c()), entry_error(d2.t_ell.d(), bar.d())}),
                    1e-10});

  for (double theta : {0.0, std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 2}) {
    Matrix basis(2, 1);
    basis << std::cos(theta), std::sin(theta);
    const AllPassDivisor d = divisor_from_spec(cp, SubspaceSpec{BlockSelection{}, basis});
    const Factor fac = minimal_factor(w_minus, d);
    std::ostringstream name;
    name << std::setprecision(4) << "theta = " << theta << ": D_theta formula";
    checks.push_back({name.str(), entry_error(d.d_p, example::theta_divisor_feedthrough(theta)),
                      1e-10});
    name.str("");
    name << std::setprecision(4) << "theta = " << theta << ": degree-" << fac.report.degree
         << " factor spectrum";
    checks.push_back({name.str(), fac.report.degree == 2 ? fac.report.spectrum_residual
                                                         : std::numeric_limits<double>::infinity(),
                      1e-8});
  }

  const FactorReport bar_rep = verify_factor(example::bar_minus_factor(), w_minus);
  checks.push_back({"Wbar_- candidate spectrum (degree 2)",
                    bar_rep.pass ? bar_rep.spectrum_residual : std::numeric_limits<double>::infinity(),
                    1e-8});
  const ExtractedDivisor ex = extract_left_divisor(w_minus, example::bar_minus_factor());
  checks.push_back({"Wbar_- divisor all-pass, degrees 2 + 2",
                    ex.report.degree == 2 && ex.complement_degree == 2
                        ? ex.report.allpass_residual.value_or(0.0)
                        : std::numeric_limits<double>::infinity(),
                    1e-8});

  const CMatrix phi1 = spectrum_sample(w_minus, 1.0);
  checks.push_back({"Phi(1) = diag(9/4, 16/9)",
                    entry_error(Matrix(phi1.real()), diag({9.0 / 4.0, 16.0 / 9.0})) +
                        max_abs(Matrix(phi1.imag())),
                    1e-12});
  double phi22 = 0.0;
  double phi11 = 0.0;
  for (int k = 0; k < 16; ++k) {
    const complex z = std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / 16.0);
    const CMatrix phi = density_eval(w_minus, z);
    phi22 = std::max(phi22, std::abs(phi(1, 1) - example::density_22(z)));
    phi11 = std::max(phi11, std::abs(phi(0, 0) - example::density_11(z)));
  }
  checks.push_back({"Phi_22 = (2/3 z^2 - 20/9 z + 2/3) / (z^2 - 5/2 z + 1)", phi22, 1e-10});
  checks.push_back({"Phi_11 = (1/2 z^2 - 17/8 z + 1/2) / (z^2 - 5/2 z + 1)", phi11, 1e-10});

  std::size_t passed = 0;
  for (const Check& c : checks) {
    out << (c.ok() ? "match     " : "MISMATCH  ") << c.what << "  (residual "
        << detail::fmt(c.residual) << ")\n";
    passed += c.ok();
  }
  out << "note: the top-left block of P0^{-1} is the Stein solution X, which is negative\n"
         "      definite; diag(+1/15, +1/32) would violate the Stein identity above.\n"
         "note: Phi_11 is recomputed from the model; a numerator of 1/2 z^2 - 17/8 z + 1/2\n"
         "      is the one consistent with Phi_11(1) = 9/4.\n";
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << passed << " of " << checks.size() << " comparisons match (" << std::setprecision(3)
      << secs << " s)\n";
  return passed == checks.size() ? kOk : kVerifyFailed;
}

// --------------------------------------------------------------------- run

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimal spectral factors of discrete-time spectral densities", "specfact"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::string moebius_text;
  app.add_option("--tol", g.tol, "Residual tolerance for spectrum and identity checks");
  app.add_option("--samples", g.samples, "Unit-circle samples used by residual checks");
  CLI::Option* moebius_opt =
      app.add_option("--moebius", moebius_text,
                     "Accept poles or zeros at the origin by a Moebius change of variable "
                     "(optional parameter a in (-1, 1); write --moebius=a)")
          ->expected(0, 1);

  std::string model, specs, candidate, out_path, out_dir = ".", csv_path;
  std::size_t spectrum_samples = 256;

  CLI::App* analyze = app.add_subcommand("analyze", "Extremal factors and conjugate phase report");
  analyze->add_option("model", model, "Model file")->required();
  analyze->add_option("-o,--output", out_path, "Report file (default: standard output)");

  CLI::App* factors = app.add_subcommand("factors", "Minimal spectral factors for divisor specs");
  factors->add_option("model", model, "Model file")->required();
  factors->add_option("specs", specs, "Divisor spec file")->required();
  factors->add_option("-d,--dir", out_dir, "Output directory")->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "Check a candidate minimal spectral factor");
  verify->add_option("model", model, "Model file of the outer factor")->required();
  verify->add_option("candidate", candidate, "Candidate model file")->required();

  CLI::App* spectrum = app.add_subcommand("spectrum", "Spectral density samples as CSV");
  spectrum->add_option("model", model, "Model file")->required();
  spectrum->add_option("-n", spectrum_samples, "Number of angles in [0, 2 pi)")->capture_default_str();
  spectrum->add_option("-o,--output", csv_path, "CSV file (default: standard output)");

  CLI::App* example_cmd = app.add_subcommand("example", "Run the built-in two-channel example");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (moebius_opt->count() > 0) {
      g.moebius = true;
      if (!moebius_text.empty()) {
        std::size_t used = 0;
        double a = 0.0;
        try {
          a = std::stod(moebius_text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != moebius_text.size() || !(std::abs(a) < 1.0) || a == 0.0)
          fail(Errc::InvalidArgument, "--moebius expects a nonzero parameter in (-1, 1)");
        g.moebius_parameter = a;
      }
    }
    if (*analyze) return cmd_analyze(model, out_path, g, out);
    if (*factors) return cmd_factors(model, specs, out_dir, g, out);
    if (*verify) return cmd_verify(model, candidate, g, out);
    if (*spectrum) return cmd_spectrum(model, spectrum_samples, csv_path, g, out);
    if (*example_cmd) return cmd_example(out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

}  // namespace specfact::cli

#endif  // SPECFACT_CLI_HPP
