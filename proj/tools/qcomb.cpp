// qcomb: command-line front end for the comb library. Every report is JSON
// on stdout. Exit codes: 0 success / valid / feasible, 1 invalid (validate),
// 2 infeasible, 3 undetermined, 64 usage or input errors, 70 numerical
// failures (diagnostic JSON on stderr).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcomb/qcomb.hpp"

namespace {

using qcomb::Json;

constexpr int kExitInvalid = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUndetermined = 3;
constexpr int kExitUsage = 64;
constexpr int kExitNumerical = 70;

struct Common {
  std::uint64_t seed = 1;
  double tol = -1;  // negative: subcommand default
  int restarts = 20;

  double tol_or(double fallback) const { return tol > 0 ? tol : fallback; }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  sub->add_option("--tol", c.tol, "Tolerance (subcommand-specific default)");
  sub->add_option("--restarts", c.restarts, "Random restarts for iterative solvers")->capture_default_str()->check(
      CLI::PositiveNumber);
}

// Rejects non-finite numbers so that every report stays valid JSON.
void check_finite(const Json& j, const std::string& where = "report") {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>())) throw qcomb::NumericalError(where + ": non-finite value");
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) check_finite(j[k], where + "/" + std::to_string(k));
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) check_finite(it.value(), where + "/" + it.key());
  }
}

void emit(const Json& j) {
  check_finite(j);
  std::cout << j.dump(2) << "\n";
}

Json comb_validation_json(const qcomb::CombValidation& v) {
  return {{"valid", v.valid},
          {"hermitian", v.hermitian},
          {"level_residuals", v.level_residuals},
          {"normalization_residual", v.normalization_residual},
          {"min_eigenvalue", v.min_eigenvalue},
          {"max_residual", v.max_residual}};
}

Json tester_validation_json(const qcomb::TesterValidation& v) {
  return {{"valid", v.valid},
          {"hermitian", v.hermitian},
          {"sum_residual", v.sum_residual},
          {"chain_residuals", v.chain_residuals},
          {"trace_residual", v.trace_residual},
          {"min_element_eigenvalue", v.min_element_eigenvalue},
          {"min_chain_eigenvalue", v.min_chain_eigenvalue},
          {"max_residual", v.max_residual}};
}

bool monotone(const std::vector<double>& h) {
  for (std::size_t k = 1; k < h.size(); ++k)
    if (h[k] > h[k - 1]) return false;
  return true;
}

Json feasibility_json(const qcomb::FeasibilityReport& r, bool with_witness) {
  Json j = {{"verdict", qcomb::to_string(r.verdict)},
            {"residual", r.residual},
            {"iterations", r.iterations},
            {"restarts", r.restarts},
            {"history_length", r.history.size()},
            {"monotone", monotone(r.history)}};
  if (with_witness) j["witness"] = qcomb::to_json(r.witness);
  return j;
}

int verdict_exit(qcomb::Verdict v) {
  switch (v) {
    case qcomb::Verdict::feasible: return 0;
    case qcomb::Verdict::infeasible: return kExitInfeasible;
    default: return kExitUndetermined;
  }
}

int run_validate(const std::string& path, const Common& c) {
  const qcomb::OperatorFile f = qcomb::load_operator_file(path);
  const double tol = c.tol_or(1e-9);
  Json out = {{"file", path}, {"kind", qcomb::to_string(f.kind)}, {"tol", tol}};
  bool valid = false;
  if (f.kind == qcomb::FileKind::tester) {
    const auto v = qcomb::validate_tester(f.tester, tol);
    out["tester"] = tester_validation_json(v);
    valid = v.valid;
  } else if (f.kind == qcomb::FileKind::matrix) {
    throw qcomb::FormatError(path + ": kind matrix has no validation rule; use choi, comb, channel or tester");
  } else {
    const auto v = qcomb::validate_comb(qcomb::memory_channel_of(f), tol);
    out["comb"] = comb_validation_json(v);
    valid = v.valid;
  }
  out["valid"] = valid;
  emit(out);
  return valid ? 0 : kExitInvalid;
}

int run_discriminate(const std::string& mode, const std::string& p0, const std::string& p1, bool witness,
                     const Common& c) {
  const qcomb::MemoryChannel c0 = qcomb::memory_channel_of(qcomb::load_operator_file(p0));
  const qcomb::MemoryChannel c1 = qcomb::memory_channel_of(qcomb::load_operator_file(p1));
  qcomb::SolverOptions opt;
  opt.seed = c.seed;
  opt.restarts = c.restarts;
  opt.feasible_tol = c.tol_or(opt.feasible_tol);
  const qcomb::FeasibilityReport r =
      mode == "parallel" ? qcomb::parallel_discriminable(c0, c1, opt) : qcomb::causal_discriminable(c0, c1, opt);
  Json out = feasibility_json(r, witness);
  out["mode"] = mode;
  if (r.feasible()) {
    const qcomb::LabeledOperator xi =
        mode == "parallel" ? qcomb::embed_parallel_witness(r.witness, c0.dims()) : r.witness;
    const qcomb::Tester t = qcomb::synthesize_tester(c0, c1, xi);
    out["tester_delta_error"] = qcomb::delta_error(t, c0, c1);
  }
  emit(out);
  return verdict_exit(r.verdict);
}

int run_distance(const std::string& kind, const std::string& p0, const std::string& p1, bool witness,
                 const Common& c) {
  const qcomb::MemoryChannel c0 = qcomb::memory_channel_of(qcomb::load_operator_file(p0));
  const qcomb::MemoryChannel c1 = qcomb::memory_channel_of(qcomb::load_operator_file(p1));
  qcomb::DistanceOptions opt;
  opt.seed = c.seed;
  opt.restarts = c.restarts;
  const qcomb::DistanceEstimate e =
      kind == "cb" ? qcomb::cb_distance(c0, c1, opt) : qcomb::memory_distance(c0, c1, opt);
  const double tol = c.tol_or(1e-6);
  Json out = {{"kind", kind},
              {"value", e.value},
              {"iterations", e.iterations},
              {"restarts", e.restarts},
              {"saturated", e.value >= 2.0 - tol}};
  if (witness) out["achiever"] = qcomb::to_json(e.achiever);
  emit(out);
  return 0;
}

int run_theta(const std::string& path, const Common& c) {
  const qcomb::OperatorFile f = qcomb::load_operator_file(path);
  if (f.kind != qcomb::FileKind::matrix) throw qcomb::FormatError(path + ": expected kind matrix");
  if (!qcomb::is_unitary(f.matrix, 1e-8)) throw qcomb::FormatError(path + ": matrix is not unitary");
  const double tol = c.tol_or(1e-9);
  const auto phases = qcomb::eigenphases(f.matrix);
  const double theta = qcomb::spread_of(phases);
  emit({{"dim", f.matrix.rows()},
        {"theta", theta},
        {"eigenphases", phases.phases},
        {"distinct_eigenvalues", qcomb::distinct_eigenvalues(f.matrix, tol)},
        {"discriminability", qcomb::discriminability(f.matrix)},
        {"perfectly_discriminable_from_identity", theta >= std::numbers::pi - tol}});
  return 0;
}

int run_theta_laws(std::size_t samples, std::size_t dim, const Common& c) {
  const double tol = c.tol_or(1e-9);
  const auto s = qcomb::run_spread_suite(samples, dim, c.seed, tol);
  const auto m = qcomb::run_matching_suite(samples, c.seed + 1, tol);
  emit({{"samples", samples},
        {"max_dim", dim},
        {"tol", tol},
        {"spread",
         {{"guarded", s.guarded},
          {"conjugation_failures", s.conjugation_failures},
          {"subadditivity_failures", s.subadditivity_failures},
          {"tensor_failures", s.tensor_failures},
          {"worst_conjugation_gap", s.worst_conjugation_gap},
          {"worst_subadditivity_slack", s.worst_subadditivity_slack},
          {"worst_tensor_gap", s.worst_tensor_gap},
          {"half_guarded", s.half_guarded},
          {"half_subadditivity_failures", s.half_subadditivity_failures},
          {"half_tensor_failures", s.half_tensor_failures}}},
        {"matching",
         {{"samples", m.samples},
          {"guarded", m.guarded},
          {"failures", m.failures},
          {"worst_gap", m.worst_gap},
          {"half_guarded", m.half_guarded},
          {"half_failures", m.half_failures}}}});
  return 0;
}

int run_paper_example(std::size_t d, const std::string& psi_path, const std::string& emit_dir, const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  if (d < 2) throw qcomb::DomainError("paper-example: d must be at least 2");
  qcomb::ComplexMatrix psi = qcomb::ComplexMatrix::column(std::vector<qcomb::cplx>(d, 0.0));
  psi(0, 0) = 1.0;
  if (!psi_path.empty()) {
    const qcomb::OperatorFile f = qcomb::load_operator_file(psi_path);
    if (f.kind != qcomb::FileKind::matrix || f.matrix.rows() != d || f.matrix.cols() != 1)
      throw qcomb::FormatError(psi_path + ": expected a matrix file holding a " + std::to_string(d) + "x1 column");
    psi = f.matrix;
  }
  const qcomb::ExampleInstance inst = qcomb::build_example(d);
  qcomb::SolverOptions opt;
  opt.seed = c.seed;
  opt.restarts = c.restarts;
  const auto par = qcomb::verify_parallel_impossible(inst, opt);
  const auto pro = qcomb::causal_protocol(inst, psi);
  const double tol = c.tol_or(1e-10);

  double off_diag = 0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      if (i != j) off_diag = std::max(off_diag, std::abs(pro.probabilities[i][j]));

  if (!emit_dir.empty()) {
    std::filesystem::create_directories(emit_dir);
    const std::string tag = "d=" + std::to_string(d);
    qcomb::save_operator_file(emit_dir + "/c0.json", qcomb::comb_file(inst.c0, "C0, " + tag));
    qcomb::save_operator_file(emit_dir + "/c1.json", qcomb::comb_file(inst.c1, "C1, " + tag));
    qcomb::save_operator_file(emit_dir + "/protocol_tester.json", qcomb::tester_file(pro.tester, "protocol, " + tag));
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit({{"d", d},
        {"construction_residual", inst.construction_residual},
        {"combs",
         {{"c0", comb_validation_json(qcomb::validate_comb(inst.c0))},
          {"c1", comb_validation_json(qcomb::validate_comb(inst.c1))}}},
        {"parallel",
         {{"identity_target", "I/d^2"},
          {"identity_residual", par.identity_residual},
          {"fitted_scale", par.fitted_scale},
          {"fitted_scale_times_d3", par.fitted_scale * double(d * d * d)},
          {"fitted_residual", par.fitted_residual},
          {"one_based_identity_residual", par.one_based_identity_residual},
          {"one_based_comb_residual", par.one_based_comb_residual},
          {"solver", feasibility_json(par.solver, false)}}},
        {"protocol",
         {{"delta_matrix", pro.probabilities},
          {"delta_error", pro.delta_error},
          {"max_off_diagonal", off_diag},
          {"hand_built_gap", pro.hand_built_gap},
          {"simulation_gap", pro.simulation_gap},
          {"tester", tester_validation_json(pro.validation)}}},
        {"checks",
         {{"identity_within_1e-12", par.identity_residual <= 1e-12},
          {"parallel_solver_not_feasible", !par.solver.feasible()},
          {"protocol_delta_within_tol", pro.delta_error <= tol},
          {"protocol_tester_valid", pro.validation.valid}}},
        {"runtime_seconds", seconds}});
  return 0;
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << Json({{"error", kind}, {"message", message}}).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum combs: validation, discrimination, distances and the adaptive-separation example"};
  app.require_subcommand(1);
  Common common;

  std::string file, p0, p1, mode = "parallel", kind = "cb", psi_path, emit_dir;
  bool witness = false;
  std::size_t samples = 1000, dim = 4, d = 2;

  auto* validate = app.add_subcommand("validate", "Check the comb or tester normalization constraints");
  validate->add_option("file", file, "Operator file (choi, comb, channel or tester)")->required();
  add_common(validate, common);

  auto* disc = app.add_subcommand("discriminate", "Decide perfect discriminability of two combs");
  disc->add_option("--mode", mode, "parallel or causal")->check(CLI::IsMember({"parallel", "causal"}))->capture_default_str();
  disc->add_option("c0", p0, "First comb")->required();
  disc->add_option("c1", p1, "Second comb")->required();
  disc->add_flag("--witness", witness, "Include the witness operator in the report");
  add_common(disc, common);

  auto* dist = app.add_subcommand("distance", "Estimate the cb or memory-channel distance");
  dist->add_option("--kind", kind, "cb or memory")->check(CLI::IsMember({"cb", "memory"}))->capture_default_str();
  dist->add_option("c0", p0, "First comb")->required();
  dist->add_option("c1", p1, "Second comb")->required();
  dist->add_flag("--witness", witness, "Include the achieving state or normalization");
  add_common(dist, common);

  auto* theta = app.add_subcommand("theta", "Angular spread of a unitary");
  theta->add_option("unitary", file, "Matrix file")->required();
  add_common(theta, common);

  auto* laws = app.add_subcommand("theta-laws", "Property suite for the angular spread");
  laws->add_option("--samples", samples, "Random pairs")->capture_default_str()->check(CLI::PositiveNumber);
  laws->add_option("--dim", dim, "Largest dimension (at least 2)")->capture_default_str()->check(CLI::Range(2, 16));
  add_common(laws, common);

  auto* paper = app.add_subcommand("paper-example", "Memory channels separable only by an adaptive tester");
  paper->add_option("--d", d, "Dimension d")->capture_default_str()->check(CLI::Range(2, 6));
  paper->add_option("--psi", psi_path, "Matrix file with the d x 1 input state (default |0>)");
  paper->add_option("--emit", emit_dir, "Directory to write c0.json, c1.json and protocol_tester.json");
  add_common(paper, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate) return run_validate(file, common);
    if (*disc) return run_discriminate(mode, p0, p1, witness, common);
    if (*dist) return run_distance(kind, p0, p1, witness, common);
    if (*theta) return run_theta(file, common);
    if (*laws) return run_theta_laws(samples, dim, common);
    if (*paper) return run_paper_example(d, psi_path, emit_dir, common);
  } catch (const qcomb::NumericalError& e) {
    report_error("numerical", e.what());
    return kExitNumerical;
  } catch (const qcomb::Error& e) {
    report_error("input", e.what());
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("io", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
