#pragma once

// Verification suites and subcommands behind the hyperlie tool. Kept in a
// header so tests can drive run() in-process.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperlie/curvature.hpp"
#include "hyperlie/error.hpp"
#include "hyperlie/leaf.hpp"
#include "hyperlie/nahm.hpp"
#include "hyperlie/poisson.hpp"
#include "hyperlie/sampling.hpp"
#include "hyperlie/su2.hpp"

namespace hyperlie::cli {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Status { Pass, Fail, Skip };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Skip: return "SKIP";
  }
  return "FAIL";
}

/// Finite values as numbers, the rest as "inf", "-inf", "nan".
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

struct Record {
  std::string name;
  Status status = Status::Skip;
  double measured = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.0;
  std::string note;
};

/// PASS iff measured <= tolerance. NaN fails.
inline Record check_le(std::string name, double measured, double tolerance, std::string note = {}) {
  return {std::move(name), measured <= tolerance ? Status::Pass : Status::Fail, measured, tolerance, std::move(note)};
}

struct ReportDocument {
  std::string command;
  json parameters = json::object();
  std::vector<Record> records;
  json environment = json::object();
  /// Command-specific payload, emitted under "results".
  json results = json::object();

  bool any_fail() const {
    return std::any_of(records.begin(), records.end(), [](const Record& r) { return r.status == Status::Fail; });
  }

  json to_json() const {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = command;
    doc["parameters"] = parameters;
    json recs = json::array();
    std::size_t pass = 0, fail = 0, skip = 0;
    for (const auto& r : records) {
      json j;
      j["name"] = r.name;
      j["status"] = to_string(r.status);
      j["measured"] = number(r.measured);
      j["tolerance"] = number(r.tolerance);
      if (!r.note.empty()) j["note"] = r.note;
      recs.push_back(j);
      (r.status == Status::Pass ? pass : r.status == Status::Fail ? fail : skip) += 1;
    }
    doc["records"] = recs;
    doc["summary"] = {{"pass", pass}, {"fail", fail}, {"skip", skip}};
    doc["environment"] = environment;
    if (!results.empty()) doc["results"] = results;
    return doc;
  }
};

/// Runs a group of checks; a library error becomes one FAIL record carrying the message.
inline void guarded(std::vector<Record>& out, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const GeometryError& e) {
    out.push_back({name, Status::Fail, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()});
  }
}

struct VerifyOptions {
  std::uint64_t seed = 7;
  int samples = 100;
  double fd_step = 1e-5;
  /// Overrides the per-kind Nahm step and horizon when set.
  std::optional<double> step;
  std::optional<double> horizon;

  double tol_jacobi = 1e-6;
  double tol_casimir = 1e-12;
  double tol_covariance = 1e-10;
  double tol_pr12 = 1e-12;
  double tol_hypersymplectic = 1e-8;
  double tol_scaling = 1e-10;
  double tol_canonical = 1e-9;
  double tol_flat = 1e-8;
  double tol_curvature = 1e-12;
  double tol_kappa = 1e-6;
  double tol_residual = 1e-12;
  double tol_ode = 1e-8;
  double tol_order = 1.5;
  double tol_linearized = 1e-6;
  double tol_nilpotent = 1e-6;
  double tol_isometry = 1e-4;
  double tol_offdiag = 1e-6;
  double tol_tail = 1e-6;
  double tol_frame = 1e-8;
  double tol_quadric = 1e-10;
  double tol_event = 1e-10;
  double tol_crossing = 1e-9;
  double tol_rate = 1e-2;
  double tol_drift = 1e-10;
};

inline std::vector<Record> poisson_suite(const VerifyOptions& o) {
  std::vector<Record> out;
  Rng rng = make_rng(o.seed, 1);
  std::vector<Triple> pts;
  for (int n = 0; n < o.samples; ++n) pts.push_back(random_triple(rng, 0.1));

  guarded(out, "poisson.jacobi", [&] {
    double worst = 0.0;
    for (const auto& t : pts)
      for (int k = 1; k <= 3; ++k)
        worst = std::max(worst, jacobi_residual(k, t, o.fd_step) / std::max(1.0, pi_matrix(k, t).m.norm()));
    out.push_back(check_le("poisson.jacobi", worst, o.tol_jacobi));
  });

  double cas = 0.0;
  int rank_bad = 0;
  double pr12 = 0.0;
  for (const auto& t : pts) {
    const auto grads = casimir_gradients(t);
    for (int k = 1; k <= 3; ++k) {
      const Mat9 m = pi_matrix(k, t).m;
      for (const Vec9& g : grads) cas = std::max(cas, (m * g).norm() / (m.norm() * g.norm()));
      Eigen::FullPivLU<Mat9> lu(m);
      lu.setThreshold(1e-10);
      if (lu.rank() != 4) ++rank_bad;
    }
    pr12 = std::max(pr12, pr12_pushforward_check(t) / t.scale());
  }
  out.push_back(check_le("poisson.casimir_kernel", cas, o.tol_casimir));
  out.push_back(check_le("poisson.rank_four", rank_bad, 0.0));

  const Mat9 p = cyclic_permutation_matrix();
  double cyc = 0.0, cov = 0.0;
  Rng rng2 = make_rng(o.seed, 2);
  for (int n = 0; n < 50; ++n) {
    const Triple& t = pts[static_cast<std::size_t>(n) % pts.size()];
    const Triple st = Triple::from_vector(p * t.to_vector());
    for (int k = 1; k <= 2; ++k) {
      const Mat9 pushed = p * pi_matrix(k, t).m * p.transpose();
      cyc = std::max(cyc, (pi_matrix(k + 1, st).m - pushed).cwiseAbs().maxCoeff() / (1 + pushed.cwiseAbs().maxCoeff()));
    }
    const Mat3 rot = random_orthogonal(rng2, n % 2 == 0 ? 1 : -1);
    const Mat9 s = sigma_matrix(rot);
    const Triple rt = sigma_map(rot, t);
    const Mat3 inv = rot.transpose();
    for (int j = 0; j < 3; ++j) {
      const Mat9 pushed = s * pi_matrix(j + 1, t).m * s.transpose();
      Mat9 combo = Mat9::Zero();
      for (int i = 0; i < 3; ++i) combo += inv(i, j) * pi_matrix(i + 1, rt).m;
      cov = std::max(cov, (pushed - combo).cwiseAbs().maxCoeff() / (1 + pushed.cwiseAbs().maxCoeff()));
    }
  }
  out.push_back(check_le("poisson.cyclic_pushforward", cyc, o.tol_covariance));
  out.push_back(check_le("poisson.sigma_covariance", cov, o.tol_covariance));
  out.push_back(check_le("poisson.pr12_poisson_map", pr12, o.tol_pr12));
  return out;
}

inline std::vector<Record> leaf_suite(const VerifyOptions& o) {
  std::vector<Record> out;
  const ComplexStructures cs = complex_structures(Triple(basis(0), basis(1), -basis(2)));
  const IntMat4 id = IntMat4::Identity();
  int quat_bad = 0;
  for (const IntMat4& m : {IntMat4(cs.i * cs.i), IntMat4(cs.j * cs.j), IntMat4(cs.k * cs.k), IntMat4(cs.i * cs.j * cs.k)})
    if (m != IntMat4(-id)) ++quat_bad;
  out.push_back(check_le("leaf.quaternion_relations", quat_bad, 0.0));

  guarded(out, "leaf.hypersymplectic", [&] {
    Rng rng = make_rng(o.seed, 3);
    double cond = 0.0, defect = 0.0, from_omega = 0.0;
    int wrong_sign = 0;
    const std::array<IntMat4, 3> tables{cs.i, cs.j, cs.k};
    for (int n = 0; n < 40; ++n) {
      const int region = n % 2 == 0 ? 1 : -1;
      const Triple t = random_triple(rng, 0.1, region);
      const HypersymplecticReport rep = hypersymplectic_check(t);
      cond = std::max(cond, rep.condition1);
      defect = std::max(defect, rep.metric_defect);
      if (region > 0 ? !rep.negative_definite : !rep.positive_definite) ++wrong_sign;
      const auto w = complex_structures_from_omega(t);
      for (std::size_t c = 0; c < 3; ++c)
        from_omega = std::max(from_omega, (w[c] - tables[c].cast<double>()).cwiseAbs().maxCoeff());
    }
    out.push_back(check_le("leaf.hypersymplectic_condition", cond, o.tol_hypersymplectic));
    out.push_back(check_le("leaf.metric_is_minus_phi", defect, o.tol_hypersymplectic));
    out.push_back(check_le("leaf.metric_sign_by_region", wrong_sign, 0.0));
    out.push_back(check_le("leaf.complex_structures_from_omega", from_omega, o.tol_hypersymplectic));
  });

  guarded(out, "leaf.charts", [&] {
    Rng rng = make_rng(o.seed, 4);
    double scaling = 0.0, canon = 0.0, member = 0.0;
    for (int n = 0; n < 20; ++n) {
      const LeafParams p{uniform(rng, 0.0, 3.0), uniform(rng, 0.0, 3.0)};
      const Triple t = leaf_point(p, {uniform(rng, 0.2, 3.0), random_rotation(rng)});
      const CasimirVector f = casimirs(t);
      const double sc = t.scale() * t.scale();
      member = std::max({member, std::abs(f[0]) / sc, std::abs(f[1]) / sc, std::abs(f[2]) / sc,
                         std::abs(f[3] - p.q) / sc, std::abs(f[4] - p.r) / sc});
      const CanonicalForm cf = canonicalize_leaf(t);
      const auto back = leaf_coords(sigma_map(cf.o, t)).first;
      canon = std::max({canon, std::abs(cf.params.q - p.q), std::abs(cf.params.r - p.r), std::abs(back.q - p.q),
                        std::abs(back.r - p.r)});
      const TangentFrame fr = distribution_frame(t);
      const Vec9 u = fr.matrix() * Vec4(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
      const Vec9 w = fr.matrix() * Vec4(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
      const double base = leaf_metric(t, u, u) + leaf_metric(t, u, w);
      for (double tau : {0.25, 4.0}) {
        const double st = std::sqrt(tau);
        const Triple rt = rho_scale(tau, t);
        const double moved = leaf_metric(rt, st * u, st * u) + leaf_metric(rt, st * u, st * w);
        scaling = std::max(scaling, std::abs(moved / base - st) / st);
      }
    }
    out.push_back(check_le("leaf.casimir_membership", member, o.tol_canonical));
    out.push_back(check_le("leaf.canonicalize_roundtrip", canon, o.tol_canonical));
    out.push_back(check_le("leaf.rho_scaling", scaling, o.tol_scaling));
  });
  return out;
}

inline std::vector<double> geometric_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

inline std::vector<Record> curvature_suite(const VerifyOptions& o) {
  std::vector<Record> out;
  const auto s_grid = geometric_grid(0.1, 10.0, 20);
  guarded(out, "curvature.flatness", [&] {
    double analytic = 0.0, derived = 0.0;
    for (double s : s_grid) {
      const LeafScalars l = leaf_scalars({0, 0}, s);
      analytic = std::max(analytic, riemann_analytic({0, 0}, l).max_abs());
      derived = std::max(derived, riemann_from_connection(l).max_abs() / riemann_scale(l));
    }
    out.push_back(check_le("curvature.flat_analytic", analytic, 0.0));
    out.push_back(check_le("curvature.flat_from_connection", derived, o.tol_flat));
  });
  guarded(out, "curvature.analytic_vs_connection", [&] {
    Rng rng = make_rng(o.seed, 5);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
      const LeafParams p{uniform(rng, 0.0, 3.0), uniform(rng, 0.0, 3.0)};
      const LeafScalars l = leaf_scalars(p, uniform(rng, 0.1, 3.0));
      const RiemannTable a = riemann_analytic(p, l);
      worst = std::max(worst, riemann_discrepancy(a, riemann_from_connection(l)) / std::max(a.max_abs(), riemann_scale(l)));
    }
    out.push_back(check_le("curvature.analytic_vs_connection", worst, o.tol_flat));
  });
  guarded(out, "curvature.type1", [&] {
    double ratio = 0.0;
    for (double s : s_grid) {
      const LeafScalars l = leaf_scalars({1, 0}, s);
      const double expect = -1.0 / (2.0 * std::pow(l.x, 1.5));
      ratio = std::max(ratio, std::abs(riemann_table({1, 0}, l)(1, 2, 2, 1) / (l.phi * l.phi) - expect) / std::abs(expect));
    }
    out.push_back(check_le("curvature.type1_frame_ratio", ratio, o.tol_curvature));
    const CurvatureScan scan = curvature_scan({1, 0}, s_grid, 500, o.seed);
    out.push_back(check_le("curvature.type1_bound", std::max(std::abs(scan.summary.min), std::abs(scan.summary.max)),
                           scan.summary.bound, std::to_string(scan.rows.size()) + " planes"));
  });
  guarded(out, "curvature.type2", [&] {
    const double k = kappa01({0, 1}, 1e-2);
    out.push_back(check_le("curvature.type2_kappa_closed_form", std::abs(k / 5e5 - 1.0), o.tol_kappa));
    int below = 0;
    for (int i = 1; i <= 40; ++i)
      if (!(kappa01({0, 1}, std::sqrt(6.3e-3 * std::pow(10.0, -i / 10.0))) > 1e3)) ++below;
    out.push_back(check_le("curvature.type2_divergence", below, 0.0, "Z = 6.3e-3 * 10^(-k/10), k = 1..40"));
  });
  return out;
}

struct NahmDefaults {
  double regular_step = 1e-3;
  double nilpotent_step = 1e-2;
  double regular_T = 40.0;
  double nilpotent_T = 150.0;
  double order_T = 20.0;
};

inline double sup_error(const Trajectory& tr, const ExactSolution& ex) {
  double m = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    m = std::max(m, (tr.states[i].to_vector() - ex(tr.t[i]).to_vector()).cwiseAbs().maxCoeff());
  return m;
}

/// Largest change of the Casimirs of the image triple (B2, B3, B1) along the run.
inline double trajectory_casimir_drift(const Trajectory& tr) {
  const auto img = [](const NahmState& s) { return casimirs(Triple(s[1], s[2], s[0])); };
  const CasimirVector c0 = img(tr.states.front());
  double d = 0.0;
  for (const auto& s : tr.states) {
    const CasimirVector c = img(s);
    for (int k = 0; k < 5; ++k) d = std::max(d, std::abs(c[k] - c0[k]));
  }
  return d;
}

/// |f4 - expected| and |f1| at the image, i.e. real and imaginary part of the orbit quadric.
inline double quadric_defect(const Trajectory& tr, double expected) {
  const CasimirVector f = casimirs(h_map(tr));
  return std::max(std::abs(f[3] - expected), std::abs(f[0]));
}

inline std::vector<Record> nahm_suite(const VerifyOptions& o) {
  std::vector<Record> out;
  const NahmDefaults d;
  const double T_reg = o.horizon.value_or(d.regular_T);
  const double T_nil = o.horizon.value_or(d.nilpotent_T);
  const double T_ord = o.horizon.value_or(d.order_T);
  const double h_reg = o.step.value_or(d.regular_step);
  const double h_nil = o.step.value_or(d.nilpotent_step);
  const ExactSolution reg = exact_solution(ExactKind::Regular, 1.0, 1.0);
  const ExactSolution nil = exact_solution(ExactKind::Nilpotent, 0.0, 1.0);

  guarded(out, "nahm.solver_order", [&] {
    std::vector<double> times;
    for (int i = 0; i <= 1000; ++i) times.push_back(-T_ord * i / 1000.0);
    out.push_back(check_le("nahm.oracle_residual", std::max(reg.residual(times), nil.residual(times)), o.tol_residual));
    const Trajectory tr = integrate(reg(0.0), T_ord, h_reg);
    out.push_back(check_le("nahm.sup_error", sup_error(tr, reg), o.tol_ode));
    const double e1 = sup_error(integrate(reg(0.0), T_ord, 0.04), reg);
    const double e2 = sup_error(integrate(reg(0.0), T_ord, 0.02), reg);
    const double e3 = sup_error(integrate(reg(0.0), T_ord, 0.01), reg);
    out.push_back(check_le("nahm.order_ratio", std::max(std::abs(e1 / e2 - 16.0), std::abs(e2 / e3 - 16.0)), o.tol_order,
                           "deviation of the halving ratio from 16"));
    out.push_back(check_le("nahm.casimir_drift", trajectory_casimir_drift(tr), o.tol_drift));
  });

  double frame = 0.0;
  bool intertwine = true;
  guarded(out, "nahm.nilpotent_isometry", [&] {
    const Trajectory tr = integrate(nil(0.0), T_nil, h_nil);
    const IsometryReport rep = isometry_check(tr, {o.tol_frame});
    out.push_back(check_le("nahm.nilpotent_diag", *std::max_element(rep.diag_errors.begin(), rep.diag_errors.end()),
                           o.tol_nilpotent));
    out.push_back(check_le("nahm.nilpotent_offdiag", rep.offdiag_max, o.tol_offdiag));
    out.push_back(check_le("nahm.nilpotent_tail", rep.tail_fraction, o.tol_tail, "tail / value"));
    out.push_back(check_le("nahm.nilpotent_quadric", quadric_defect(tr, 0.0), o.tol_quadric));
    frame = std::max(frame, rep.frame_table_error);
    intertwine = intertwine && rep.intertwine_ok;
  });
  guarded(out, "nahm.regular_isometry", [&] {
    double diag = 0.0, off = 0.0, tail = 0.0, lin = 0.0, quad = 0.0;
    for (double t0 : {1.0, 2.0}) {
      const Trajectory tr = integrate(exact_solution(ExactKind::Regular, 1.0, t0)(0.0), T_reg, h_reg);
      const IsometryReport rep = isometry_check(tr, {o.tol_frame});
      diag = std::max(diag, *std::max_element(rep.diag_errors.begin(), rep.diag_errors.end()));
      off = std::max(off, rep.offdiag_max);
      tail = std::max(tail, rep.tail_fraction);
      lin = std::max(lin, rep.linearized_residual);
      quad = std::max(quad, quadric_defect(tr, 1.0));
      frame = std::max(frame, rep.frame_table_error);
      intertwine = intertwine && rep.intertwine_ok;
    }
    out.push_back(check_le("nahm.regular_diag", diag, o.tol_isometry));
    out.push_back(check_le("nahm.regular_offdiag", off, o.tol_offdiag));
    out.push_back(check_le("nahm.regular_tail", tail, o.tol_tail, "tail / value"));
    out.push_back(check_le("nahm.linearized_residual", lin, o.tol_linearized));
    out.push_back(check_le("nahm.regular_quadric", quad, o.tol_quadric));
  });
  out.push_back(check_le("nahm.frame_table", frame, o.tol_frame));
  out.push_back(check_le("nahm.intertwining", intertwine && intertwining_identities_hold() ? 0.0 : 1.0, 0.0));

  double drift = 0.0;
  guarded(out, "flow.type2", [&] {
    const FlowResult r = v0_flow(leaf_point({0, 1}, {1.0, Mat3::Identity()}), 1, 10.0);
    drift = std::max(drift, r.casimir_drift);
    const bool hit = r.branch == FlowBranch::PhiZero;
    out.push_back(check_le("flow.type2_bracket", hit ? r.D_bracket : std::numeric_limits<double>::infinity(), o.tol_event));
    // w = sqrt(Z) solves w' = -(w^2 + r): D = atan(w0 / sqrt r) / sqrt r.
    out.push_back(check_le("flow.type2_crossing_time", hit ? std::abs(r.D - std::atan(1.0)) : std::numeric_limits<double>::infinity(),
                           o.tol_crossing));
  });
  guarded(out, "flow.type1", [&] {
    const FlowResult r = v0_flow(leaf_point({1, 0}, {1.0, Mat3::Identity()}), 1, 100.0);
    drift = std::max(drift, r.casimir_drift);
    const bool ok = r.branch == FlowBranch::Converged && r.fit.kind == DecayKind::Exponential;
    out.push_back(check_le("flow.type1_exponential", ok ? std::abs(r.fit.rate - 1.0) : std::numeric_limits<double>::infinity(),
                           o.tol_rate, "fitted rate vs sqrt(q)"));
  });
  guarded(out, "flow.type0", [&] {
    FlowOptions fo;
    fo.step = 1e-2;
    const FlowResult r = v0_flow(leaf_point({0, 0}, {1.0, Mat3::Identity()}), 1, 5000.0, fo);
    drift = std::max(drift, r.casimir_drift);
    const bool ok = r.branch == FlowBranch::Converged && r.fit.kind == DecayKind::Polynomial;
    out.push_back(check_le("flow.type0_polynomial", ok ? std::abs(r.fit.exponent - 2.0) : std::numeric_limits<double>::infinity(),
                           o.tol_rate, "fitted exponent vs 2"));
  });
  out.push_back(check_le("flow.casimir_drift", drift, o.tol_drift));
  return out;
}

inline json verify_environment(const VerifyOptions& o) {
  const NahmDefaults d;
  return {{"seed", o.seed},
          {"samples", o.samples},
          {"fd_step", o.fd_step},
          {"step_regular", o.step.value_or(d.regular_step)},
          {"step_nilpotent", o.step.value_or(d.nilpotent_step)},
          {"T_regular", o.horizon.value_or(d.regular_T)},
          {"T_nilpotent", o.horizon.value_or(d.nilpotent_T)},
          {"T_order", o.horizon.value_or(d.order_T)}};
}

inline ReportDocument verify(const std::string& suite, const VerifyOptions& o) {
  ReportDocument doc;
  doc.command = "verify";
  doc.parameters = {{"suite", suite}};
  auto add = [&](std::vector<Record> r) { doc.records.insert(doc.records.end(), r.begin(), r.end()); };
  if (suite == "poisson" || suite == "all") add(poisson_suite(o));
  if (suite == "leaf" || suite == "all") add(leaf_suite(o));
  if (suite == "curvature" || suite == "all") add(curvature_suite(o));
  if (suite == "nahm" || suite == "all") add(nahm_suite(o));
  doc.environment = verify_environment(o);
  return doc;
}

inline std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v + 0.0;
  return s.str();
}

inline void write_curvature_csv(std::ostream& os, const CurvatureScan& scan) {
  os << "q,r,s,plane_id,kappa\n";
  for (const auto& row : scan.rows) {
    os << format_double(row.q) << ',' << format_double(row.r) << ',' << format_double(row.s) << ',' << row.plane_id << ','
       << format_double(row.kappa) << '\n';
  }
}

inline json curvature_summary_json(const CurvatureScan& scan) {
  const auto& s = scan.summary;
  return {{"min", number(s.min)},
          {"max", number(s.max)},
          {"bound", std::isfinite(s.bound) ? json(s.bound) : json(nullptr)},
          {"bound_respected", s.bound_respected}};
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,B1x,B1y,B1z,B2x,B2y,B2z,B3x,B3y,B3z\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    os << format_double(tr.t[i]);
    const Vec9 v = tr.states[i].to_vector();
    for (int k = 0; k < 9; ++k) os << ',' << format_double(v(k));
    os << '\n';
  }
}

inline json isometry_json(const IsometryReport& rep) {
  json diag = json::array();
  for (double e : rep.diag_errors) diag.push_back(number(e));
  return {{"diag_errors", diag},
          {"offdiag_max", number(rep.offdiag_max)},
          {"frame_table_error", number(rep.frame_table_error)},
          {"intertwine_ok", rep.intertwine_ok},
          {"expected", number(rep.expected)},
          {"tail_fraction", number(rep.tail_fraction)},
          {"quadrature_error", number(rep.quadrature_error)},
          {"linearized_residual", number(rep.linearized_residual)}};
}

struct NahmCommand {
  std::string kind = "regular";
  double c = 1.0;
  double t0 = 1.0;
  std::optional<double> horizon;
  std::optional<double> step;
  std::optional<double> tol_diag;
  double tol_offdiag = 1e-6;
  double tol_tail = 1e-6;
  double tol_frame = 1e-8;
};

/// Returns the report; the trajectory is written to csv when non-null.
inline ReportDocument run_nahm(const NahmCommand& cmd, std::ostream* csv) {
  const bool regular = cmd.kind == "regular";
  const NahmDefaults d;
  const double T = cmd.horizon.value_or(regular ? d.regular_T : d.nilpotent_T);
  const double h = cmd.step.value_or(regular ? d.regular_step : d.nilpotent_step);
  const double tol_diag = cmd.tol_diag.value_or(regular ? 1e-4 : 1e-6);
  ReportDocument doc;
  doc.command = "nahm";
  doc.parameters = {{"kind", cmd.kind}, {"c", regular ? cmd.c : 0.0}, {"t0", cmd.t0}};
  doc.environment = {{"step", h}, {"T", T}};
  const ExactSolution ex = exact_solution(regular ? ExactKind::Regular : ExactKind::Nilpotent, regular ? cmd.c : 0.0, cmd.t0);
  guarded(doc.records, "nahm.solver", [&] {
    const Trajectory tr = integrate(ex(0.0), T, h);
    if (csv) write_trajectory_csv(*csv, tr);
    json lim = json::array();
    for (int k = 0; k < 9; ++k) lim.push_back(tr.limit.to_vector()(k));
    doc.results["trajectory"] = {{"nodes", tr.size()},
                                 {"decay_kind", to_string(tr.fit.kind)},
                                 {"decay_rate", number(tr.decay_rate)},
                                 {"decay_exponent", number(tr.fit.exponent)},
                                 {"limit", lim}};
    const IsometryReport rep = isometry_check(tr, {cmd.tol_frame});
    doc.results["isometry"] = isometry_json(rep);
    for (std::size_t i = 0; i < 4; ++i)
      doc.records.push_back(check_le("nahm.diag_" + std::to_string(i), rep.diag_errors[i], tol_diag));
    doc.records.push_back(check_le("nahm.offdiag", rep.offdiag_max, cmd.tol_offdiag));
    doc.records.push_back(check_le("nahm.tail", rep.tail_fraction, cmd.tol_tail, "tail / value"));
    doc.records.push_back(check_le("nahm.frame_table", rep.frame_table_error, cmd.tol_frame));
    doc.records.push_back(check_le("nahm.intertwining", rep.intertwine_ok ? 0.0 : 1.0, 0.0));
  });
  return doc;
}

inline json canonicalize_json(const Triple& t) {
  const CanonicalForm cf = canonicalize_any(t);
  json o = json::array();
  for (int i = 0; i < 3; ++i) o.push_back({cf.o(i, 0), cf.o(i, 1), cf.o(i, 2)});
  return {{"O", o}, {"q", cf.params.q}, {"r", cf.params.r}, {"type", type_of(cf.params)}, {"anti", cf.anti}};
}

inline void emit(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << doc.dump(2) << '\n';
}

/// Exit codes: 0 all PASS, 1 any FAIL, 2 configuration error.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyper-Lie Poisson structures on su(2)^3: verification and data export"};
  app.require_subcommand(1);

  VerifyOptions vo;
  std::string suite, verify_out;
  double step = 0.0, horizon = 0.0;
  auto* verify_cmd = app.add_subcommand("verify", "run invariant suites and emit a JSON report");
  verify_cmd->add_option("suite", suite, "poisson|leaf|curvature|nahm|all")
      ->required()
      ->check(CLI::IsMember({"poisson", "leaf", "curvature", "nahm", "all"}));
  verify_cmd->add_option("--seed", vo.seed, "RNG seed")->capture_default_str();
  verify_cmd->add_option("--samples", vo.samples, "random points per Poisson check")->capture_default_str()->check(CLI::PositiveNumber);
  verify_cmd->add_option("--fd-step", vo.fd_step, "finite-difference step for Jacobi")->capture_default_str()->check(CLI::PositiveNumber);
  auto* step_opt = verify_cmd->add_option("--step", step, "Nahm step (default 1e-3 regular, 1e-2 nilpotent)")->check(CLI::PositiveNumber);
  auto* T_opt = verify_cmd->add_option("--T", horizon, "Nahm horizon (default 40 regular, 150 nilpotent, 20 order test)")
                    ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--out", verify_out, "report path (default stdout)");
  const std::vector<std::pair<const char*, double*>> tols{
      {"jacobi", &vo.tol_jacobi},       {"casimir", &vo.tol_casimir},     {"covariance", &vo.tol_covariance},
      {"pr12", &vo.tol_pr12},           {"hypersymplectic", &vo.tol_hypersymplectic},
      {"scaling", &vo.tol_scaling},     {"canonical", &vo.tol_canonical}, {"flat", &vo.tol_flat},
      {"curvature", &vo.tol_curvature}, {"kappa", &vo.tol_kappa},         {"residual", &vo.tol_residual},
      {"ode", &vo.tol_ode},             {"order", &vo.tol_order},         {"linearized", &vo.tol_linearized},
      {"nilpotent", &vo.tol_nilpotent}, {"isometry", &vo.tol_isometry},   {"offdiag", &vo.tol_offdiag},
      {"tail", &vo.tol_tail},           {"frame", &vo.tol_frame},         {"quadric", &vo.tol_quadric},
      {"event", &vo.tol_event},         {"crossing", &vo.tol_crossing},   {"rate", &vo.tol_rate},
      {"drift", &vo.tol_drift}};
  for (const auto& [name, ptr] : tols)
    verify_cmd->add_option(std::string("--tol-") + name, *ptr)->capture_default_str()->check(CLI::NonNegativeNumber);

  LeafParams cp{1.0, 0.0};
  double s_min = 0.05, s_max = 5.0;
  int s_count = 20, samples = 500;
  std::uint64_t curv_seed = 7;
  std::string curv_out, curv_summary;
  auto* curv_cmd = app.add_subcommand("curvature", "sectional curvature samples on N_{q,r} as CSV");
  curv_cmd->add_option("--q", cp.q)->capture_default_str()->check(CLI::NonNegativeNumber);
  curv_cmd->add_option("--r", cp.r)->capture_default_str()->check(CLI::NonNegativeNumber);
  curv_cmd->add_option("--s-min", s_min)->capture_default_str()->check(CLI::PositiveNumber);
  curv_cmd->add_option("--s-max", s_max)->capture_default_str()->check(CLI::PositiveNumber);
  curv_cmd->add_option("--s-count", s_count)->capture_default_str()->check(CLI::PositiveNumber);
  curv_cmd->add_option("--samples", samples, "random planes per s")->capture_default_str()->check(CLI::NonNegativeNumber);
  curv_cmd->add_option("--seed", curv_seed)->capture_default_str();
  curv_cmd->add_option("--out", curv_out, "CSV path")->required();
  curv_cmd->add_option("--summary", curv_summary, "summary JSON path (default stdout)");

  NahmCommand nc;
  double n_step = 0.0, n_T = 0.0, n_tol = 0.0;
  std::string nahm_out, nahm_report;
  auto* nahm_cmd = app.add_subcommand("nahm", "integrate a closed-form Nahm solution and check the isometry");
  nahm_cmd->add_option("--kind", nc.kind)->capture_default_str()->check(CLI::IsMember({"regular", "nilpotent"}));
  nahm_cmd->add_option("--c", nc.c)->capture_default_str();
  nahm_cmd->add_option("--t0", nc.t0)->capture_default_str();
  auto* n_T_opt = nahm_cmd->add_option("--T", n_T)->check(CLI::PositiveNumber);
  auto* n_step_opt = nahm_cmd->add_option("--step", n_step)->check(CLI::PositiveNumber);
  auto* n_tol_opt = nahm_cmd->add_option("--tol-diag", n_tol, "default 1e-4 regular, 1e-6 nilpotent")->check(CLI::NonNegativeNumber);
  nahm_cmd->add_option("--tol-offdiag", nc.tol_offdiag)->capture_default_str();
  nahm_cmd->add_option("--tol-tail", nc.tol_tail)->capture_default_str();
  nahm_cmd->add_option("--tol-frame", nc.tol_frame)->capture_default_str();
  nahm_cmd->add_option("--out", nahm_out, "trajectory CSV path");
  nahm_cmd->add_option("--report", nahm_report, "report path (default stdout)");

  std::vector<double> entries;
  auto* canon_cmd = app.add_subcommand("canonicalize", "canonical leaf parameters of a triple a1x a1y a1z a2x ... a3z");
  canon_cmd->add_option("entries", entries)->required()->expected(9);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (verify_cmd->parsed()) {
      if (*step_opt) vo.step = step;
      if (*T_opt) vo.horizon = horizon;
      const ReportDocument doc = verify(suite, vo);
      emit(doc.to_json(), verify_out, out);
      return doc.any_fail() ? 1 : 0;
    }
    if (curv_cmd->parsed()) {
      if (s_min > s_max) throw GeometryError(ErrorCode::InvalidArgument, "--s-min exceeds --s-max");
      const CurvatureScan scan = curvature_scan(cp, geometric_grid(s_min, s_max, s_count), samples, curv_seed);
      std::ofstream f(curv_out);
      if (!f) throw std::runtime_error("cannot open " + curv_out);
      write_curvature_csv(f, scan);
      emit(curvature_summary_json(scan), curv_summary, out);
      return scan.summary.bound_respected ? 0 : 1;
    }
    if (nahm_cmd->parsed()) {
      if (*n_T_opt) nc.horizon = n_T;
      if (*n_step_opt) nc.step = n_step;
      if (*n_tol_opt) nc.tol_diag = n_tol;
      std::ofstream csv;
      if (!nahm_out.empty()) {
        csv.open(nahm_out);
        if (!csv) throw std::runtime_error("cannot open " + nahm_out);
      }
      const ReportDocument doc = run_nahm(nc, nahm_out.empty() ? nullptr : &csv);
      emit(doc.to_json(), nahm_report, out);
      return doc.any_fail() ? 1 : 0;
    }
    if (canon_cmd->parsed()) {
      const Triple t = Triple::from_vector(Eigen::Map<const Vec9>(entries.data()));
      out << canonicalize_json(t).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"hyperlie"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hyperlie::cli
