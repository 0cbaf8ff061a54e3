#pragma once

// Command-line front end. run_cli() is kept in a header so the test suite can
// drive it in-process; tools/oscillab.cpp only forwards argv.
//
// Exit codes: 0 success, 1 a verified property failed (the report is still
// written), 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oscillab/classify.hpp"
#include "oscillab/flows.hpp"
#include "oscillab/invariants.hpp"
#include "oscillab/poisson.hpp"

namespace oscillab::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr double kDefaultOrbitTmax = 40.0;
inline constexpr double kDefaultOrbitDt = 0.01;
inline constexpr double kDefaultFlowTauMax = kTwoPi;
inline constexpr double kDefaultFlowDtau = 0.01;
inline constexpr double kDefaultScanIMin = 0.2;
inline constexpr double kDefaultScanIMax = 2.0;
inline constexpr double kDefaultDiagonalTau = 100.0;
inline constexpr double kDefaultHopfEnergy = 1.5;
inline constexpr std::size_t kDefaultHopfCount = 1000;
inline constexpr double kHopfTolerance = 1e-12;
inline constexpr int kHopfFiberPhases = 8;

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Every tunable of every subcommand; defaults come from the library constants.
struct RunConfig {
  std::vector<int> m;
  double omega = 1.0;
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  std::string out;
  std::string report;

  // verify
  std::string relation = "su2";
  std::size_t samples = kDefaultSamples;
  double h = kDefaultBracketStep;
  double tol = kDefaultBracketTol;
  bool exact = false;

  // orbit / flow
  std::string alpha;
  double t_max = kDefaultOrbitTmax;
  double dt = kDefaultOrbitDt;
  std::string space = "gamma";
  std::string generator = "direction";
  std::vector<double> n;
  double tau_max = kDefaultFlowTauMax;
  double dtau = kDefaultFlowDtau;
  double eps_sing = kDefaultSingularEps;
  double atol = kDefaultFlowAtol;
  double rtol = kDefaultFlowRtol;
  double h_max = kDefaultFlowMaxStep;

  // scan-singular
  double i_min = kDefaultScanIMin;
  double i_max = kDefaultScanIMax;
  double diagonal_tau = kDefaultDiagonalTau;

  // hopf
  double energy = kDefaultHopfEnergy;
  std::size_t count = kDefaultHopfCount;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be positive");
    };
    positive(omega, "--omega");
    positive(h, "--h");
    positive(tol, "--tol");
    positive(t_max, "--t-max");
    positive(dt, "--dt");
    positive(tau_max, "--tau-max");
    positive(eps_sing, "--eps-sing");
    positive(atol, "--atol");
    positive(rtol, "--rtol");
    positive(h_max, "--h-max");
    positive(energy, "--energy");
    positive(diagonal_tau, "--diagonal-tau");
    if (dtau < 0.0) throw UsageError("--dtau must be non-negative");
    if (!(i_min > 0.0) || !(i_max > i_min)) throw UsageError("--imin/--imax must satisfy 0 < imin < imax");
    if (jobs == 0) throw UsageError("--jobs must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// Parsing helpers

inline double parse_real(std::string_view s, std::string_view whole) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) throw UsageError("malformed complex literal '" + std::string(whole) + "'");
  return v;
}

/// Complex literal a+bi or a-bi (decimal reals, no whitespace).
inline Complex parse_complex(std::string_view s) {
  if (s.size() < 4 || s.back() != 'i') throw UsageError("malformed complex literal '" + std::string(s) + "' (expected a+bi or a-bi)");
  const std::string_view body = s.substr(0, s.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t k = body.size() - 1; k > 0; --k) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string_view::npos) throw UsageError("malformed complex literal '" + std::string(s) + "' (expected a+bi or a-bi)");
  const double re = parse_real(body.substr(0, split), s);
  std::string_view im_text = body.substr(split);
  const double im = parse_real(im_text, s);
  return {re, im};
}

inline PhasePoint parse_point(const std::string& list) {
  std::vector<Complex> values;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(parse_complex(item));
  if (values.empty()) throw UsageError("--alpha needs at least one complex literal");
  PhasePoint x{CVector(static_cast<Eigen::Index>(values.size()))};
  for (std::size_t k = 0; k < values.size(); ++k) x.alpha(static_cast<Eigen::Index>(k)) = values[k];
  return x;
}

inline FrequencySignature signature_of(const RunConfig& cfg) {
  if (cfg.m.empty()) throw UsageError("--m is required");
  try {
    return make_signature(std::span<const int>(cfg.m), cfg.omega);
  } catch (const InvalidSignature& e) {
    throw UsageError(e.what());
  }
}

inline Vec3 direction_of(const std::vector<double>& n) {
  if (n.size() != 3) throw UsageError("--n needs three components");
  const Vec3 v{n[0], n[1], n[2]};
  if (!(norm(v) > 0.0)) throw UsageError("--n must be nonzero");
  return unit(v);
}

/// Generator names: j0, j3, direction (uses --n), js:a:b, ja:a:b, jd:a (1-based modes).
inline Generator generator_of(const RunConfig& cfg, std::size_t dim) {
  const std::string& g = cfg.generator;
  auto indices = [&](std::size_t want) {
    std::vector<std::size_t> out;
    std::stringstream ss(g.substr(3));
    std::string item;
    while (std::getline(ss, item, ':')) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size() || v < 1 || v > dim)
        throw UsageError("bad mode index in --generator " + g);
      out.push_back(v - 1);
    }
    if (out.size() != want) throw UsageError("bad --generator " + g);
    return out;
  };
  if (g == "j0") return Generator::j0(dim);
  if (g == "j3") {
    if (dim != 2) throw UsageError("j3 generator needs two modes");
    return Generator::j3();
  }
  if (g == "direction") {
    if (dim != 2) throw UsageError("direction generator needs two modes");
    return Generator::direction(direction_of(cfg.n));
  }
  if (g.rfind("js:", 0) == 0) {
    const auto ix = indices(2);
    if (ix[0] == ix[1]) throw UsageError("js needs two distinct modes");
    return Generator::symmetric(dim, ix[0], ix[1]);
  }
  if (g.rfind("ja:", 0) == 0) {
    const auto ix = indices(2);
    if (ix[0] == ix[1]) throw UsageError("ja needs two distinct modes");
    return Generator::antisymmetric(dim, ix[0], ix[1]);
  }
  if (g.rfind("jd:", 0) == 0) {
    const auto ix = indices(1);
    if (ix[0] + 1 >= dim) throw UsageError("jd index must be below the number of modes");
    return Generator::diagonal(dim, ix[0]);
  }
  throw UsageError("unknown --generator " + g);
}

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const CVector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(to_json(v(k)));
  return a;
}

inline json to_json(const InvariantSet& s) {
  json j;
  j["j0"] = s.j0;
  json rows = json::array();
  for (Eigen::Index r = 0; r < s.jmat.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < s.jmat.cols(); ++c) row.push_back(to_json(s.jmat(r, c)));
    rows.push_back(row);
  }
  j["jmat"] = rows;
  if (s.jvec) j["jvec"] = *s.jvec;
  return j;
}

inline json to_json(const AlgebraReport& r) {
  return json{{"relation", r.relation},
              {"samples", r.samples},
              {"failed_samples", r.failed_samples},
              {"h", r.h},
              {"tol", r.tol},
              {"exact_gradients", r.exact_gradients},
              {"max_residual", r.max_residual},
              {"worst_check", r.worst_check},
              {"worst_point", to_json(r.worst_point.alpha)},
              {"pass", r.pass}};
}

inline json to_json(const SingularityReport& r) {
  json j{{"hit", r.hit}, {"tau_star", r.hit ? json(r.tau_star) : json(nullptr)}, {"min_action", r.min_action}};
  j["plane"] = r.plane ? json(*r.plane + 1) : json(nullptr);
  j["diagnostic"] = r.diagnostic;
  j["actions_at_hit"] = r.actions_at_hit;
  if (r.normals) j["normals"] = json{{"v_plus", (*r.normals)[0]}, {"v_minus", (*r.normals)[1]}};
  return j;
}

inline json to_json(const OscillatorClass& c, const PeriodCensus& p, const FrequencySignature& sig) {
  json j;
  j["m"] = sig.m();
  j["omega"] = sig.omega();
  j["kind"] = to_string(c.kind);
  j["subtype"] = c.subtype ? json(*c.subtype) : json(nullptr);
  if (c.subtype) j["subtype_basis"] = "pairwise gcd pattern";
  j["gcd_matrix"] = c.gcd_matrix;
  j["M"] = p.revolutions;
  j["w"] = p.winding;
  json periods = json::array();
  for (const auto& e : p.periods) {
    std::vector<std::size_t> one_based;
    for (std::size_t k : e.subset) one_based.push_back(k + 1);
    periods.push_back(json{{"subset", one_based}, {"lcm", e.lcm}, {"T", e.period}});
  }
  j["periods"] = periods;
  j["distinct_periods"] = p.distinct_count();
  return j;
}

/// Shortest round-trip decimal form.
inline std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

inline std::string csv_header(const char* param, const char* var, std::size_t dim, bool states, bool jvec) {
  std::string h = param;
  if (states)
    for (std::size_t k = 1; k <= dim; ++k) h += std::string(",re_") + var + std::to_string(k) + ",im_" + var + std::to_string(k);
  h += ",J0";
  if (jvec) h += ",J1,J2,J3";
  h += ",drift";
  return h;
}

inline void write_trace_csv(std::ostream& os, const OrbitTrace& tr, const char* param, const char* var, std::size_t dim) {
  const bool states = !tr.states.empty();
  const bool jvec = !tr.invariants.empty() && tr.invariants.front().jvec.has_value();
  os << csv_header(param, var, dim, states, jvec) << '\n';
  for (std::size_t i = 0; i < tr.tau.size(); ++i) {
    os << num(tr.tau[i]);
    if (states)
      for (Eigen::Index k = 0; k < tr.states[i].size(); ++k)
        os << ',' << num(tr.states[i](k).real()) << ',' << num(tr.states[i](k).imag());
    const InvariantSet& inv = tr.invariants[i];
    os << ',' << num(inv.j0);
    if (jvec)
      for (double v : *inv.jvec) os << ',' << num(v);
    os << ',' << num(tr.drift[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Output routing

class Outputs {
 public:
  Outputs(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  std::ostream& primary(const std::string& path) {
    if (path.empty() || path == "-") return out_;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw UsageError("cannot open output file " + path);
    return *file_;
  }

  std::ostream& secondary(const std::string& path, bool primary_on_stdout) {
    if (!path.empty() && path != "-") {
      second_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*second_) throw UsageError("cannot open report file " + path);
      return *second_;
    }
    return primary_on_stdout ? err_ : out_;
  }

  std::ostream& err() { return err_; }

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::unique_ptr<std::ofstream> file_;
  std::unique_ptr<std::ofstream> second_;
};

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_verify(const RunConfig& cfg, Outputs& io) {
  const FrequencySignature sig = signature_of(cfg);
  Relation rel{};
  try {
    rel = parse_relation(cfg.relation);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  VerifyOptions opt;
  opt.samples = cfg.samples;
  opt.seed = cfg.seed;
  opt.h = cfg.h;
  opt.tol = cfg.tol;
  opt.exact_gradients = cfg.exact;
  opt.jobs = cfg.jobs;
  const AlgebraReport rep = verify_algebra(sig, rel, opt);
  json j = to_json(rep);
  j["m"] = sig.m();
  j["omega"] = sig.omega();
  j["seed"] = cfg.seed;
  io.primary(cfg.out) << j.dump(2) << '\n';
  return rep.pass ? kExitOk : kExitFailure;
}

inline int cmd_orbit(const RunConfig& cfg, Outputs& io) {
  const FrequencySignature sig = signature_of(cfg);
  const PhasePoint x0 = parse_point(cfg.alpha);
  require_dim(x0.dim(), sig.dim(), "--alpha");
  std::ostream& os = io.primary(cfg.out);
  OrbitTrace tr;
  const auto count = static_cast<std::size_t>(std::floor(cfg.t_max / cfg.dt + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const PhasePoint x = evolve_time(x0, sig, t);
    tr.tau.push_back(t);
    tr.states.push_back(x.alpha);
    tr.invariants.push_back(invariant_set(reduce(x, sig)));
    tr.drift.push_back(invariant_distance(x0, x, sig));
  }
  write_trace_csv(os, tr, "t", "alpha", sig.dim());
  return kExitOk;
}

inline int cmd_flow(const RunConfig& cfg, const CLI::App& sub, Outputs& io) {
  const FrequencySignature sig = signature_of(cfg);
  const PhasePoint x0 = parse_point(cfg.alpha);
  require_dim(x0.dim(), sig.dim(), "--alpha");
  RunConfig local = cfg;
  if (sub.count("--generator") == 0 && sub.count("--n") == 0) local.generator = "j0";
  const Generator g = generator_of(local, sig.dim());

  const bool to_file = !cfg.out.empty() && cfg.out != "-";
  std::ostream& os = io.primary(cfg.out);
  json report;
  report["space"] = cfg.space;
  if (cfg.space == "gamma") {
    FlowOptions opt;
    opt.eps_sing = cfg.eps_sing;
    opt.atol = cfg.atol;
    opt.rtol = cfg.rtol;
    opt.h_max = cfg.h_max;
    opt.sample_dtau = cfg.dtau;
    const GammaFlowResult res = flow_gamma(x0, sig, g, cfg.tau_max, opt);
    write_trace_csv(os, res.trace, "tau", "alpha", sig.dim());
    report.update(to_json(res.report));
    report["steps"] = res.trace.steps;
    report["rejected"] = res.trace.rejected;
    double drift = 0.0;
    for (double d : res.trace.drift) drift = std::max(drift, d);
    report["max_drift"] = drift;
    if (!res.report.hit) {
      double rec = 0.0, mod = 0.0;
      for (double v : res.trace.reconstruction_error) rec = std::max(rec, v);
      for (double v : res.trace.moduli_error) mod = std::max(mod, v);
      report["max_reconstruction_error"] = rec;
      report["max_moduli_error"] = mod;
    }
  } else if (cfg.space == "reduced") {
    const ReducedPoint b = reduce(x0, sig);
    const OrbitTrace tr = sample_reduced(b, g, cfg.tau_max, cfg.dtau > 0.0 ? cfg.dtau : kDefaultFlowDtau);
    write_trace_csv(os, tr, "tau", "beta", sig.dim());
    report["hit"] = false;
    double drift = 0.0;
    for (double d : tr.drift) drift = std::max(drift, d);
    report["max_drift"] = drift;
  } else if (cfg.space == "upsilon") {
    if (sig.dim() != 2) throw UsageError("upsilon space needs two modes");
    if (!g.axis() && g.kind() != Generator::Kind::J0) throw UsageError("upsilon flow needs j0, j3 or a direction");
    const InvariantSet inv = invariant_set(reduce(x0, sig));
    // J0 acts trivially on the invariants: a rotation by 0
    const Vec3 axis = g.axis() ? *g.axis() : Vec3{0.0, 0.0, 1.0};
    const double scale = g.axis() ? 1.0 : 0.0;
    OrbitTrace tr = sample_upsilon(inv, axis, cfg.tau_max, cfg.dtau > 0.0 ? cfg.dtau : kDefaultFlowDtau);
    if (scale == 0.0)
      for (auto& s : tr.invariants) s = inv;
    write_trace_csv(os, tr, "tau", "beta", sig.dim());
    report["hit"] = false;
    double drift = 0.0;
    for (double d : tr.drift) drift = std::max(drift, d);
    report["max_drift"] = drift;
  } else {
    throw UsageError("--space must be gamma, reduced or upsilon");
  }
  os.flush();
  io.secondary(cfg.report, !to_file) << report.dump(2) << '\n';
  return kExitOk;
}

struct ScanRow {
  std::size_t sample = 0;
  double i1 = 0.0, i2 = 0.0;
  std::size_t target = 0;
  double theta = 0.0;
  Vec3 n{};
  SingularityReport rep;
  bool j0_hit = false, j3_hit = false;
  bool ok = false;
};

/// For each random point: flow along one direction of each singular plane and along J0 and J3.
inline std::vector<ScanRow> scan_singular(const FrequencySignature& sig, std::size_t samples, std::uint64_t seed,
                                          double i_min, double i_max, double diagonal_tau, const FlowOptions& opt,
                                          unsigned jobs) {
  require_dim(sig.dim(), 2, "scan-singular");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> theta_dist(0.25 * kPi, 0.75 * kPi);
  std::vector<PhasePoint> points;
  std::vector<std::array<double, 2>> thetas;
  for (std::size_t s = 0; s < samples; ++s) {
    points.push_back(sample_point(rng, 2, i_min, i_max));
    thetas.push_back({theta_dist(rng), theta_dist(rng)});
  }
  std::vector<ScanRow> rows(2 * samples);
  parallel_for(samples, jobs, [&](std::size_t s) {
    const PhasePoint& x = points[s];
    const SingularDirections dirs = singular_planes(x, sig);
    const bool j0_hit = flow_gamma(x, sig, Generator::j0(2), diagonal_tau, opt).report.hit;
    const bool j3_hit = flow_gamma(x, sig, Generator::j3(), diagonal_tau, opt).report.hit;
    for (std::size_t p = 0; p < 2; ++p) {
      ScanRow& r = rows[2 * s + p];
      r.sample = s;
      r.i1 = x.action(0);
      r.i2 = x.action(1);
      r.target = p;
      r.theta = thetas[s][p];
      r.n = dirs.planes[p].direction(r.theta);
      r.rep = flow_gamma(x, sig, Generator::direction(unit(r.n)), kTwoPi, opt).report;
      r.j0_hit = j0_hit;
      r.j3_hit = j3_hit;
      r.ok = r.rep.hit && r.rep.plane == p && r.rep.min_action < opt.eps_sing && r.rep.tau_star < kTwoPi && !j0_hit &&
             !j3_hit;
    }
  });
  return rows;
}

inline int cmd_scan(const RunConfig& cfg, Outputs& io) {
  const FrequencySignature sig = signature_of(cfg);
  if (sig.dim() != 2) throw UsageError("scan-singular needs two modes");
  FlowOptions opt;
  opt.eps_sing = cfg.eps_sing;
  opt.atol = cfg.atol;
  opt.rtol = cfg.rtol;
  opt.h_max = cfg.h_max;
  const auto rows = scan_singular(sig, cfg.samples, cfg.seed, cfg.i_min, cfg.i_max, cfg.diagonal_tau, opt, cfg.jobs);
  std::ostream& os = io.primary(cfg.out);
  os << "sample,I1,I2,target_plane,theta,n1,n2,n3,hit,plane,tau_star,min_action,j0_hit,j3_hit,ok\n";
  std::size_t good = 0;
  for (const auto& r : rows) {
    good += r.ok ? 1 : 0;
    os << r.sample << ',' << num(r.i1) << ',' << num(r.i2) << ",P" << r.target + 1 << ',' << num(r.theta) << ','
       << num(r.n[0]) << ',' << num(r.n[1]) << ',' << num(r.n[2]) << ',' << (r.rep.hit ? 1 : 0) << ','
       << (r.rep.plane ? "P" + std::to_string(*r.rep.plane + 1) : std::string("none")) << ','
       << (r.rep.hit ? num(r.rep.tau_star) : std::string("")) << ',' << num(r.rep.min_action) << ','
       << (r.j0_hit ? 1 : 0) << ',' << (r.j3_hit ? 1 : 0) << ',' << (r.ok ? 1 : 0) << '\n';
  }
  io.err() << "scan-singular: " << good << "/" << rows.size() << " flows hit their plane; diagonal flows regular\n";
  return good == rows.size() ? kExitOk : kExitFailure;
}

inline int cmd_classify(const RunConfig& cfg, Outputs& io) {
  const FrequencySignature sig = signature_of(cfg);
  const json j = to_json(classify(sig), period_census(sig), sig);
  io.primary(cfg.out) << j.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_hopf(const RunConfig& cfg, Outputs& io) {
  const FrequencySignature sig = signature_of(cfg);
  if (sig.dim() != 2) throw UsageError("hopf needs two modes");
  const auto samples = hopf_sample(sig, cfg.energy, cfg.count, cfg.seed);
  const double radius = cfg.energy / (2.0 * sig.omega());
  std::ostream& os = io.primary(cfg.out);
  os << "index,re_beta1,im_beta1,re_beta2,im_beta2,J0,J1,J2,J3,sphere_residual,fiber_residual\n";
  bool ok = true;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const Vec3& j = *s.invariants.jvec;
    const double sphere = std::abs(norm(j) - radius);
    double fiber = 0.0;
    for (int f = 0; f < kHopfFiberPhases; ++f) {
      const InvariantSet r = invariant_set(fiber_rotate(s.beta, kTwoPi * f / kHopfFiberPhases));
      fiber = std::max(fiber, norm(*r.jvec - j));
    }
    ok = ok && sphere < kHopfTolerance && fiber < kHopfTolerance;
    os << k << ',' << num(s.beta.beta(0).real()) << ',' << num(s.beta.beta(0).imag()) << ','
       << num(s.beta.beta(1).real()) << ',' << num(s.beta.beta(1).imag()) << ',' << num(s.invariants.j0) << ','
       << num(j[0]) << ',' << num(j[1]) << ',' << num(j[2]) << ',' << num(sphere) << ',' << num(fiber) << '\n';
  }
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Invariants, symmetry flows and singular orbits of commensurate harmonic oscillators"};
  app.name("oscillab");
  app.require_subcommand(1, 1);

  auto add_signature = [&](CLI::App* s) {
    s->add_option("--m", cfg.m, "frequency divisors m_1,...,m_N (frequencies omega/m_n)")->delimiter(',')->required();
    s->add_option("--omega", cfg.omega, "base frequency")->capture_default_str();
  };
  auto add_seed = [&](CLI::App* s) {
    s->add_option("--seed", cfg.seed, "RNG seed (env OSCILLAB_SEED applies when absent)")->capture_default_str();
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", cfg.out, "output file (default stdout)"); };
  auto add_jobs = [&](CLI::App* s) { s->add_option("--jobs", cfg.jobs, "worker threads")->capture_default_str(); };
  const char* alpha_help = "initial point as complex literals a+bi or a-bi, comma separated, e.g. 1+0i,0.5-2i";
  auto add_flow_tols = [&](CLI::App* s) {
    s->add_option("--eps-sing", cfg.eps_sing, "action threshold for a singular hit")->capture_default_str();
    s->add_option("--atol", cfg.atol, "integrator absolute tolerance")->capture_default_str();
    s->add_option("--rtol", cfg.rtol, "integrator relative tolerance")->capture_default_str();
    s->add_option("--h-max", cfg.h_max, "largest integrator step")->capture_default_str();
  };

  CLI::App* verify = app.add_subcommand("verify", "check bracket relations at random points; writes an AlgebraReport");
  verify->set_help_flag("--help", "print this help and exit");
  add_signature(verify);
  verify->add_option("--relation", cfg.relation, "su2 | uN | IK")->capture_default_str();
  verify->add_option("--samples", cfg.samples, "number of random points")->capture_default_str();
  verify->add_option("--h", cfg.h, "finite-difference step")->capture_default_str();
  verify->add_option("--tol", cfg.tol, "pass threshold on the max residual")->capture_default_str();
  verify->add_flag("--exact", cfg.exact, "use exact chain-rule gradients instead of differences");
  add_seed(verify);
  add_jobs(verify);
  add_out(verify);

  CLI::App* orbit = app.add_subcommand("orbit", "time evolution; CSV t,re/im alpha_n,J...,drift");
  add_signature(orbit);
  orbit->add_option("--alpha", cfg.alpha, alpha_help)->required();
  orbit->add_option("--t-max", cfg.t_max, "final time")->capture_default_str();
  orbit->add_option("--dt", cfg.dt, "sample spacing")->capture_default_str();
  add_out(orbit);

  CLI::App* flow = app.add_subcommand("flow", "symmetry flow; CSV trace plus a JSON singularity report");
  add_signature(flow);
  flow->add_option("--alpha", cfg.alpha, alpha_help)->required();
  flow->add_option("--space", cfg.space, "gamma | reduced | upsilon")->capture_default_str();
  flow->add_option("--generator", cfg.generator, "j0 | j3 | direction | js:a:b | ja:a:b | jd:a (default direction when --n is given, else j0)");
  flow->add_option("--n", cfg.n, "rotation axis n1,n2,n3 (normalized)")->delimiter(',');
  flow->add_option("--tau-max", cfg.tau_max, "final flow parameter")->capture_default_str();
  flow->add_option("--dtau", cfg.dtau, "sample spacing (gamma: 0 records every step)")->capture_default_str();
  flow->add_option("--report", cfg.report, "JSON report file (default: stdout after the CSV when --out is set, else stderr)");
  add_flow_tols(flow);
  add_out(flow);

  CLI::App* scan = app.add_subcommand("scan-singular", "flow random points along singular directions; CSV table");
  add_signature(scan);
  scan->add_option("--samples", cfg.samples, "number of random points")->capture_default_str();
  scan->add_option("--imin", cfg.i_min, "smallest sampled action")->capture_default_str();
  scan->add_option("--imax", cfg.i_max, "largest sampled action")->capture_default_str();
  scan->add_option("--diagonal-tau", cfg.diagonal_tau, "flow length for the J0/J3 regularity check")->capture_default_str();
  add_flow_tols(scan);
  add_seed(scan);
  add_jobs(scan);
  add_out(scan);

  CLI::App* cls = app.add_subcommand("classify", "class label, gcd matrix and period census as JSON");
  add_signature(cls);
  add_out(cls);

  CLI::App* hopf = app.add_subcommand("hopf", "sample the energy sphere and project to invariants; CSV table");
  add_signature(hopf);
  hopf->add_option("--energy", cfg.energy, "energy E")->capture_default_str();
  hopf->add_option("--count", cfg.count, "number of samples")->capture_default_str();
  add_seed(hopf);
  add_out(hopf);

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  if (active->get_option_no_throw("--seed") && active->count("--seed") == 0) {
    if (const char* env = std::getenv("OSCILLAB_SEED")) {
      std::uint64_t v = 0;
      const std::string_view s(env);
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        err << "error: OSCILLAB_SEED must be an unsigned integer\n";
        return kExitUsage;
      }
      cfg.seed = v;
    }
  }

  Outputs io(out, err);
  try {
    cfg.validate();
    if (active == verify) return cmd_verify(cfg, io);
    if (active == orbit) return cmd_orbit(cfg, io);
    if (active == flow) return cmd_flow(cfg, *flow, io);
    if (active == scan) return cmd_scan(cfg, io);
    if (active == cls) return cmd_classify(cfg, io);
    if (active == hopf) return cmd_hopf(cfg, io);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

inline int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace oscillab::cli
