// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "specfact/divisors.hpp"
#include "specfact/example_model.hpp"
#include "specfact/factors.hpp"
#include "specfact/spectral.hpp"
#include "support/random_models.hpp"

namespace {

using namespace specfact;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      detail << (pass ? " | failures: " : "; ");
      detail << what;
      pass = false;
    }
  }
};

double entry_error(const Matrix& got, const Matrix& want) {
  if (got.rows() != want.rows() || got.cols() != want.cols())
    return std::numeric_limits<double>::infinity();
  return max_abs(got - want);
}

Matrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v.asDiagonal();
}

// 1. Conjugate phase realization of the worked example.
void criterion_phase(Outcome& out) {
  const ConjugatePhase cp = conjugate_phase(example::outer_factor());
  const example::PhaseReference ref = example::conjugate_phase_reference();
  const double err = std::max({entry_error(cp.t.a(), ref.a), entry_error(cp.t.b(), ref.b),
                               entry_error(cp.t.c(), ref.c), entry_error(cp.t.d(), ref.d)});
  out.detail << "max entry error " << err;
  out.require(err <= 1e-10, "phase matrices deviate");
}

// 2. Inverse Gramian blocks and the Stein identity it must satisfy.
void criterion_gramian(Outcome& out) {
  const ConjugatePhase cp = conjugate_phase(example::outer_factor());
  const Matrix& p = cp.p0_inv;
  const Matrix eye = Matrix::Identity(2, 2);
  const double off = std::max(entry_error(p.topRightCorner(2, 2), -eye),
                              entry_error(p.bottomLeftCorner(2, 2), -eye));
  const double br = entry_error(p.bottomRightCorner(2, 2), 4.0 / 3.0 * eye);
  const double tl = entry_error(p.topLeftCorner(2, 2), diag({-1.0 / 15.0, -1.0 / 32.0}));

  // A^T P0^{-1} A - P0^{-1} = C^T C on the reference matrices themselves.
  const example::PhaseReference ref = example::conjugate_phase_reference();
  const Matrix pr = example::p0_inverse_reference();
  const double stein =
      max_abs(ref.a.transpose() * pr * ref.a - pr - ref.c.transpose() * ref.c);
  const double stein_computed = cp.gramians.stein_p0_inv;
  out.detail << "off-diagonal " << off << ", bottom-right " << br << ", top-left " << tl
             << ", Stein residual " << stein << " (computed " << stein_computed << ")";
  out.require(off <= 1e-10, "off-diagonal blocks");
  out.require(br <= 1e-10, "bottom-right block");
  out.require(tl <= 1e-10, "top-left block");
  out.require(stein <= 1e-12 && stein_computed <= 1e-12, "Stein identity residual");
}

// 3. Divisor generated by the whole A^{-T} block.
void criterion_class2(Outcome& out) {
  const ConjugatePhase cp = conjugate_phase(example::outer_factor());
  const AllPassDivisor d = divisor_from_projector(cp, diag({0, 0, 1, 1}));
  const Realization want = example::bar_divisor();
  const double p_err = entry_error(d.p, diag({0, 0, 0.75, 0.75}));
  const double t_err =
      std::max({entry_error(d.t_ell.a(), want.a()), entry_error(d.t_ell.b(), want.b()),
                entry_error(d.t_ell.c(), want.c()), entry_error(d.t_ell.d(), want.d())});
  out.detail << "P error " << p_err << ", divisor error " << t_err;
  out.require(p_err <= 1e-10, "compressed Gramian");
  out.require(t_err <= 1e-10, "divisor realization");
}

// 4. Theta family inside the repeated A^{-T} eigenspace.
void criterion_theta(Outcome& out) {
  const Realization w_minus = example::outer_factor();
  const ConjugatePhase cp = conjugate_phase(w_minus);
  ToleranceConfig tol;
  tol.circle_samples = 512;
  double worst_d = 0.0;
  double worst_spec = 0.0;
  for (double theta : {0.0, std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 2}) {
    Matrix basis(2, 1);
    basis << std::cos(theta), std::sin(theta);
    const SubspaceSpec spec{BlockSelection{}, basis};
    const AllPassDivisor d = divisor_from_spec(cp, spec, tol);
    worst_d = std::max(worst_d, entry_error(d.d_p, example::theta_divisor_feedthrough(theta)));
    const Realization w = minimal(series(w_minus, d.t_ell), tol);
    const Index degree = mcmillan_degree(w, tol);
    const double res = spectrum_residual(w, w_minus, tol);
    worst_spec = std::max(worst_spec, res);
    out.require(degree == 2, "degree " + std::to_string(degree) + " at theta " +
                                 std::to_string(theta));
  }
  out.detail << "feedthrough error " << worst_d << ", spectrum residual " << worst_spec;
  out.require(worst_d <= 1e-10, "feedthrough formula");
  out.require(worst_spec <= 1e-8, "spectrum residual");
}

// 5. The printed unstable minimum-phase factor.
void criterion_bar_minus(Outcome& out) {
  const Realization w_minus = example::outer_factor();
  const Realization candidate = example::bar_minus_factor();
  const FactorReport rep = verify_factor(candidate, w_minus);
  const ExtractedDivisor ex = extract_left_divisor(w_minus, candidate);
  out.detail << "degree " << rep.degree << ", spectrum residual " << rep.spectrum_residual
             << ", divisor degree " << ex.report.degree << " + complement "
             << ex.complement_degree << ", all-pass residual " << *ex.report.allpass_residual;
  out.require(rep.pass && rep.degree == 2 && rep.spectrum_residual <= 1e-8, "verify_factor");
  out.require(ex.report.degree == 2 && ex.complement_degree == 2, "degree additivity 2+2");
  out.require(*ex.report.allpass_residual <= 1e-8, "extracted divisor is not all-pass");
}

struct RandomCase {
  std::uint64_t seed;
  Index n;
  Index m;
};

std::vector<RandomCase> random_cases() {
  std::vector<RandomCase> cases;
  for (std::uint64_t seed = 1; seed <= 50; ++seed)
    cases.push_back({seed, static_cast<Index>(1 + (seed - 1) % 5),
                     static_cast<Index>(1 + ((seed - 1) / 5) % 2)});
  return cases;
}

// 6 and 7 share one pass over the randomized models.
struct SuiteTotals {
  std::size_t models = 0;
  std::size_t divisors = 0;
  double worst_spectrum = 0.0;
  double worst_round_trip = 0.0;
  std::vector<std::string> theorem_failures;
  std::vector<std::string> additivity_failures;
};

SuiteTotals run_random_suite() {
  SuiteTotals t;
  // 128 circle samples per check keeps the 50-model sweep (about 1700
  // divisors) well inside the time budget.
  ToleranceConfig tol;
  tol.circle_samples = 128;
  for (const RandomCase& rc : random_cases()) {
    const std::string tag = "seed " + std::to_string(rc.seed) + " (n=" + std::to_string(rc.n) +
                            ", m=" + std::to_string(rc.m) + ")";
    try {
      const Realization w_minus = testing::random_outer_model(rc.seed, rc.n, rc.m);
      const ConjugatePhase cp = conjugate_phase(w_minus, tol);
      const DivisorEnumeration en = enumerate_divisors(cp, tol);
      ++t.models;
      for (const EnumeratedDivisor& item : en.divisors) {
        ++t.divisors;
        const AllPassDivisor& d = item.divisor;
        const Index right = d.right_complement ? d.right_complement->states() : -1;
        if (d.degree + right != 2 * rc.n)
          t.additivity_failures.push_back(tag + ": " + std::to_string(d.degree) + " + " +
                                          std::to_string(right));

        const Realization w = minimal(series(w_minus, d.t_ell), tol);
        const Index degree = w.states();
        const double res = spectrum_residual(w, w_minus, tol);
        t.worst_spectrum = std::max(t.worst_spectrum, res);
        if (degree != rc.n) t.theorem_failures.push_back(tag + ": factor degree " +
                                                         std::to_string(degree));
        if (!(res <= 1e-7)) t.theorem_failures.push_back(tag + ": spectrum residual " +
                                                         format_number(res));
        const ExtractedDivisor ex = extract_left_divisor(w_minus, w, tol);
        const double rt = orthogonal_factor_distance(d.t_ell, ex.t_minus, tol);
        t.worst_round_trip = std::max(t.worst_round_trip, rt);
        if (!(rt <= 1e-7)) t.theorem_failures.push_back(tag + ": round trip " + format_number(rt));
        if (ex.report.degree + ex.complement_degree != 2 * rc.n)
          t.additivity_failures.push_back(tag + ": extracted " +
                                          std::to_string(ex.report.degree) + " + " +
                                          std::to_string(ex.complement_degree));
      }
    } catch (const Error& e) {
      t.theorem_failures.push_back(tag + ": " + e.what());
    }
  }
  return t;
}

const SuiteTotals& random_suite() {
  static const SuiteTotals totals = run_random_suite();
  return totals;
}

void criterion_theorem(Outcome& out) {
  const SuiteTotals& t = random_suite();
  out.detail << t.models << " models, " << t.divisors << " divisors, worst spectrum residual "
             << t.worst_spectrum << ", worst round trip " << t.worst_round_trip;
  out.require(t.models == 50, "not every model completed");
  for (const std::string& f : t.theorem_failures) out.require(false, f);
}

void criterion_additivity(Outcome& out) {
  const SuiteTotals& t = random_suite();
  out.detail << t.divisors << " enumerated divisors checked";
  out.require(t.divisors > 0, "no divisors");
  for (const std::string& f : t.additivity_failures) out.require(false, f);
}

// 8. Moebius route versus the direct pipeline: proper models are pushed
// through the change of variable as if they were improper, factored there,
// and mapped back. Each mapped-back factor must share the spectrum of every
// direct factor and coincide with one of them up to an orthogonal factor.
void criterion_moebius(Outcome& out) {
  ToleranceConfig tol;
  double worst = 0.0;
  double worst_match = 0.0;
  std::size_t factors = 0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const std::uint64_t seed = 1000 + k;
    const Index n = static_cast<Index>(1 + k % 4);
    const Index m = static_cast<Index>(1 + (k / 4) % 2);
    const std::string tag = "case " + std::to_string(k);
    try {
      const Realization w_minus = testing::random_outer_model(seed, n, m);
      const double a = moebius_parameter_for(w_minus, tol);
      const ConjugatePhase mapped = conjugate_phase(moebius(w_minus, a, tol), tol);
      std::vector<SubspaceSpec> specs;
      for (const EnumeratedDivisor& item : enumerate_divisors(mapped, tol).divisors)
        specs.push_back(SubspaceSpec::select(item.gamma_selection, item.a_selection));
      const auto via_moebius = factor_family_moebius(w_minus, specs, a, tol);

      std::vector<Realization> direct;
      const ConjugatePhase cp = conjugate_phase(w_minus, tol);
      for (const EnumeratedDivisor& item : enumerate_divisors(cp, tol).divisors)
        direct.push_back(minimal(series(w_minus, item.divisor.t_ell), tol));
      out.require(direct.size() == via_moebius.size(), tag + ": family sizes differ");

      for (const FamilyMember& mem : via_moebius) {
        ++factors;
        out.require(mem.factor.report.degree == n, tag + ": mapped-back degree " +
                                                       std::to_string(mem.factor.report.degree));
        double best = std::numeric_limits<double>::infinity();
        for (const Realization& d : direct) {
          const double res = spectrum_residual(mem.factor.w, d, tol);
          worst = std::max(worst, res);
          if (!(res <= 1e-7)) out.require(false, tag + ": spectrum residual " + format_number(res));
          best = std::min(best, orthogonal_factor_distance(d, mem.factor.w, tol));
        }
        worst_match = std::max(worst_match, best);
        if (!(best <= 1e-6)) out.require(false, tag + ": no matching direct factor (" +
                                                    format_number(best) + ")");
      }
    } catch (const Error& e) {
      out.require(false, tag + ": " + e.what());
    }
  }
  out.detail << factors << " mapped-back factors, worst spectrum residual " << worst
             << ", worst match to a direct factor " << worst_match;
}

// 9. Spectral density of the worked example.
void criterion_density(Outcome& out) {
  const Realization w = example::outer_factor();
  const CMatrix phi1 = spectrum_sample(w, complex(1.0, 0.0));
  const double at_one = max_abs(CMatrix(phi1 - CMatrix(diag({9.0 / 4.0, 16.0 / 9.0}).cast<complex>())));
  double worst22 = 0.0;
  double worst11 = 0.0;
  for (int k = 0; k < 16; ++k) {
    // Eight points on the circle and eight off it.
    const double radius = k < 8 ? 1.0 : 1.8;
    const complex z = std::polar(radius, 2.0 * std::numbers::pi * (k % 8 + 0.25) / 8.0);
    const CMatrix phi = density_eval(w, z);
    worst22 = std::max(worst22, std::abs(phi(1, 1) - example::density_22(z)));
    worst11 = std::max(worst11, std::abs(phi(0, 0) - example::density_11(z)));
  }
  out.detail << "error at z=1 " << at_one << ", Phi22 error " << worst22
             << ", Phi11 (recomputed form) error " << worst11;
  out.require(at_one <= 1e-12, "density at z=1");
  out.require(worst22 <= 1e-10, "Phi22 rational form");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"1 conjugate phase matrices", criterion_phase},
      {"2 inverse Gramian blocks", criterion_gramian},
      {"3 divisor class {0}+R^2", criterion_class2},
      {"4 theta family", criterion_theta},
      {"5 printed Wbar_- candidate", criterion_bar_minus},
      {"6 minimal factor property suite", criterion_theorem},
      {"7 degree additivity", criterion_additivity},
      {"8 Moebius commutation", criterion_moebius},
      {"9 spectral density", criterion_density},
  };
  int failures = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& [name, run] : criteria) {
    Outcome out;
    try {
      run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    if (!out.pass) ++failures;
    std::printf("%s  criterion %s: %s\n", out.pass ? "PASS" : "FAIL", name.c_str(),
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of %zu criteria passed in %.2f s\n",
              static_cast<int>(criteria.size()) - failures, criteria.size(), secs);
  return failures == 0 ? 0 : 1;
}
