#pragma once

// Batch front end: structured run configs, the run kinds behind the CLI
// subcommands, and file emission. Exit contract: 0 success, 2 config error,
// 3 partial branch, 4 oracle failure.

#include <hbcheb/adaptive.hpp>
#include <hbcheb/beam.hpp>
#include <hbcheb/io.hpp>
#include <hbcheb/models.hpp>
#include <hbcheb/stability.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hbcheb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string out_dir = "out";
  int threads = 1;
  int repeat = 100;
};

struct RunConfig {
  std::string kind;
  std::string model_name;
  nlohmann::json model_params;

  double lo = 0.0, hi = 0.0;
  int direction = 1;
  int H = 9;
  bool has_H = false;
  ContinuationSettings continuation;

  bool adaptive = false;
  AdaptiveHSettings adaptive_settings;

  std::string backend = "cheby";
  int resolution = 0;  // 0: backend default

  std::optional<nlohmann::json> seed;
  double point_Omega = 0.0;
  bool has_point = false;

  struct Sweep {
    std::string method;
    std::vector<int> resolutions;
  };
  std::vector<Sweep> sweeps;
  std::string oracle_method = "shooting";
  int oracle_resolution = 0;

  nlohmann::json raw;
  std::string config_hash;
};

namespace detail {

template <class T>
[[nodiscard]] T get_or(const nlohmann::json& j, const char* key, T def) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return def;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("bad value for key '") + key + "'");
  }
}

[[nodiscard]] inline Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError("expected a matrix (array of rows)");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) {
      throw ConfigError("ragged matrix rows");
    }
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

[[nodiscard]] inline Eigen::VectorXd vector_from(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("expected an array");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

inline const std::vector<std::string> kKinds = {
    "frf", "stab-convergence", "urabe-branch",
    "urabe-point", "selftest", "bench"};

inline const std::vector<std::string> kBackends = {"cheby", "mexp", "ntp",
                                                   "shooting", "none"};

}  // namespace detail

[[nodiscard]] inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.config_hash = hex64(fnv1a(text));
  try {
    cfg.raw = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  const nlohmann::json& j = cfg.raw;
  if (!j.is_object()) throw ConfigError("config must be an object");

  cfg.kind = detail::get_or<std::string>(j, "kind", "");
  if (std::find(detail::kKinds.begin(), detail::kKinds.end(), cfg.kind) ==
      detail::kKinds.end()) {
    throw ConfigError("unknown run kind '" + cfg.kind + "'");
  }

  if (!j.contains("model") || !j["model"].is_object() ||
      !j["model"].contains("name")) {
    throw ConfigError("config needs model.name");
  }
  cfg.model_params = j["model"];
  cfg.model_name = cfg.model_params["name"].get<std::string>();

  cfg.H = detail::get_or(j, "H", 9);
  cfg.has_H = j.contains("H");
  if (cfg.H < 1) throw ConfigError("H must be positive");

  if (j.contains("window")) {
    const nlohmann::json& w = j["window"];
    cfg.lo = w.at("lo").get<double>();
    cfg.hi = w.at("hi").get<double>();
    cfg.direction = detail::get_or(w, "direction", 1);
    if (!(cfg.lo < cfg.hi)) throw ConfigError("degenerate frequency window");
    if (cfg.direction != 1 && cfg.direction != -1) {
      throw ConfigError("direction must be +1 or -1");
    }
  } else if (cfg.kind == "frf" || cfg.kind == "urabe-branch") {
    throw ConfigError("run kind '" + cfg.kind + "' needs a window");
  }
  cfg.continuation.Omega_start = cfg.lo;
  cfg.continuation.Omega_end = cfg.hi;
  cfg.continuation.direction = cfg.direction;

  if (j.contains("continuation")) {
    const nlohmann::json& c = j["continuation"];
    cfg.continuation.ds0 = detail::get_or(c, "ds0", cfg.continuation.ds0);
    cfg.continuation.ds_min =
        detail::get_or(c, "ds_min", cfg.continuation.ds_min);
    cfg.continuation.ds_max =
        detail::get_or(c, "ds_max", cfg.continuation.ds_max);
    cfg.continuation.target_iterations = detail::get_or(
        c, "target_iterations", cfg.continuation.target_iterations);
    cfg.continuation.max_points =
        detail::get_or(c, "max_points", cfg.continuation.max_points);
    cfg.continuation.corrector.tol =
        detail::get_or(c, "tol", cfg.continuation.corrector.tol);
    cfg.continuation.corrector.max_iter =
        detail::get_or(c, "max_iter", cfg.continuation.corrector.max_iter);
  }

  if (j.contains("adaptive")) {
    const nlohmann::json& a = j["adaptive"];
    cfg.adaptive = detail::get_or(a, "enabled", true);
    AdaptiveHSettings& as = cfg.adaptive_settings;
    as.H_min = detail::get_or(a, "H_min", as.H_min);
    as.H_max = detail::get_or(a, "H_max", as.H_max);
    as.step = detail::get_or(a, "step", as.step);
    as.threshold = detail::get_or(a, "threshold", as.threshold);
    const std::string crit =
        detail::get_or<std::string>(a, "criterion", "delta");
    if (crit == "delta") {
      as.criterion = AdaptiveCriterion::delta;
    } else if (crit == "residual") {
      as.criterion = AdaptiveCriterion::residual;
    } else {
      throw ConfigError("criterion must be 'delta' or 'residual'");
    }
    as.certify.c_factor = detail::get_or(a, "c_factor", as.certify.c_factor);
    as.certify.c_min = detail::get_or(a, "c_min", as.certify.c_min);
  }
  cfg.adaptive_settings.corrector = cfg.continuation.corrector;

  if (j.contains("stability")) {
    const nlohmann::json& s = j["stability"];
    cfg.backend = detail::get_or<std::string>(s, "backend", cfg.backend);
    cfg.resolution = detail::get_or(s, "resolution", 0);
    if (cfg.resolution < 0) throw ConfigError("resolution must be positive");
  }
  if (std::find(detail::kBackends.begin(), detail::kBackends.end(),
                cfg.backend) == detail::kBackends.end()) {
    throw ConfigError("unknown stability backend '" + cfg.backend + "'");
  }

  if (j.contains("seed")) cfg.seed = j["seed"];
  if (j.contains("point")) {
    cfg.point_Omega = j["point"].at("Omega").get<double>();
    cfg.has_point = true;
  }

  if (j.contains("sweeps")) {
    for (const nlohmann::json& s : j["sweeps"]) {
      RunConfig::Sweep sw;
      sw.method = s.at("method").get<std::string>();
      if (std::find(detail::kBackends.begin(), detail::kBackends.end(),
                    sw.method) == detail::kBackends.end() ||
          sw.method == "none") {
        throw ConfigError("unknown sweep method '" + sw.method + "'");
      }
      for (const nlohmann::json& r : s.at("resolutions")) {
        const int n = r.get<int>();
        if (n < 1) throw ConfigError("resolutions must be positive");
        sw.resolutions.push_back(n);
      }
      cfg.sweeps.push_back(std::move(sw));
    }
  }
  if (j.contains("oracle")) {
    cfg.oracle_method =
        detail::get_or<std::string>(j["oracle"], "method", "shooting");
    cfg.oracle_resolution = detail::get_or(j["oracle"], "resolution", 0);
  }

  const bool needs_anchor = cfg.kind == "urabe-point" ||
                            cfg.kind == "stab-convergence" ||
                            cfg.kind == "bench";
  if (needs_anchor && !cfg.has_point && !cfg.seed) {
    throw ConfigError("run kind '" + cfg.kind + "' needs point.Omega or seed");
  }
  return cfg;
}

[[nodiscard]] inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

[[nodiscard]] inline ModelSpec make_model(const RunConfig& cfg) {
  const nlohmann::json& p = cfg.model_params;
  if (cfg.model_name == "duffing") return duffing();
  if (cfg.model_name == "two_dof_stop") {
    return two_dof_stop(detail::get_or(p, "eps_reg", 0.2));
  }
  if (cfg.model_name == "linear") {
    if (!p.contains("D") || !p.contains("K") || !p.contains("f_ex")) {
      throw ConfigError("linear model needs D, K, f_ex");
    }
    const Eigen::MatrixXd D = detail::matrix_from(p["D"]);
    const Eigen::MatrixXd K = detail::matrix_from(p["K"]);
    const Eigen::VectorXd f = detail::vector_from(p["f_ex"]);
    if (D.rows() != D.cols() || K.rows() != K.cols() ||
        D.rows() != K.rows() || f.size() != K.rows()) {
      throw ConfigError("linear model dimensions disagree");
    }
    return linear_model(D, K, f);
  }
  if (cfg.model_name == "ecl") {
    EclBeamConfig bc;
    bc.modes = detail::get_or(p, "modes", 1);
    bc.elements = detail::get_or(p, "elements", 200);
    bc.f_ex = detail::get_or(p, "f_ex", 1.0);
    bc.alpha = detail::get_or(p, "alpha", bc.alpha);
    bc.beta = detail::get_or(p, "beta", bc.beta);
    bc.k2 = detail::get_or(p, "k2", bc.k2);
    bc.k3 = detail::get_or(p, "k3", bc.k3);
    try {
      return ecl_modal_reduce(bc);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("ecl model: ") + e.what());
    }
  }
  throw ConfigError("unknown model '" + cfg.model_name + "'");
}

namespace detail {

[[nodiscard]] inline FourierSeries seed_series(const RunConfig& cfg,
                                               const ModelSpec& m) {
  if (cfg.seed) {
    const nlohmann::json& s = *cfg.seed;
    if (s.contains("re")) {
      try {
        return fourier_from_json(s);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("seed series: ") + e.what());
      }
    }
    const double Om = s.at("Omega").get<double>();
    const int H = get_or(s, "H", cfg.H);
    if (H < 1) throw ConfigError("seed H must be positive");
    if (s.contains("coef")) {
      FourierSeries q(m.d, H, Om);
      for (const nlohmann::json& c : s["coef"]) {
        const int k = c.at("k").get<int>();
        const int dof = get_or(c, "dof", 0);
        if (k < 0 || k > H || dof < 0 || dof >= m.d) {
          throw ConfigError("seed coefficient out of range");
        }
        q.coef(dof, k) = std::complex<double>(c.at("re").get<double>(),
                                              get_or(c, "im", 0.0));
      }
      return q;
    }
    return initial_guess(m, Om, H);
  }
  const double Om = cfg.direction > 0 ? cfg.lo : cfg.hi;
  return initial_guess(m, Om, cfg.H);
}

[[nodiscard]] inline FloquetResult point_stability(const ModelSpec& m,
                                                   const FourierSeries& q,
                                                   const std::string& backend,
                                                   int res) {
  if (backend == "cheby") {
    const int C = res > 0 ? res : std::max(32, 5 * q.harmonics());
    return monodromy_cheby(m, sample_jacobian(m, q, cheb_grid(C)));
  }
  if (backend == "mexp") {
    const int N = res > 0 ? res : 201;
    return monodromy_mexp(m, sample_jacobian(m, q, mexp_grid(N)));
  }
  if (backend == "ntp") {
    const int N = res > 0 ? res : 2001;
    return monodromy_ntp(m, sample_jacobian(m, q, ntp_grid(N)));
  }
  if (backend == "shooting") {
    const int N = res > 0 ? res : 4096;
    return shoot_periodic(m, q, N).floquet;
  }
  throw ConfigError("unknown stability backend '" + backend + "'");
}

[[nodiscard]] inline bool conclusive_for(const UrabeMeasures& um,
                                         const AdaptiveHSettings& as) {
  if (as.criterion == AdaptiveCriterion::residual) {
    return um.r <= as.threshold;
  }
  return um.feasible && *um.delta <= as.threshold;
}

inline void attach_stability(const ModelSpec& m, BranchResult& br,
                             const RunConfig& cfg) {
  if (cfg.backend == "none") return;
  for (BranchPoint& p : br.points) {
    p.stability = point_stability(m, p.q, cfg.backend, cfg.resolution);
  }
}

inline void write_branch_outputs(const ModelSpec& m, const BranchResult& br,
                                 const RunConfig& cfg,
                                 const RunOptions& opts) {
  CsvTable t({"Omega", "Omega_over_omega1", "amplitude", "max_lambda",
              "stable", "H", "delta", "r", "M"});
  for (const BranchPoint& p : br.points) {
    t.begin_row();
    t.push(p.Omega);
    t.push(p.Omega / m.omega1);
    t.push(p.amplitude);
    if (p.stability && p.stability->multipliers.size() > 0) {
      t.push(std::abs(p.stability->multipliers(0)));
      t.push(static_cast<int>(p.stability->stable));
    } else {
      t.push_empty();
      t.push_empty();
    }
    t.push(p.H_used);
    if (p.urabe && p.urabe->feasible) {
      t.push(*p.urabe->delta);
    } else {
      t.push_empty();
    }
    if (p.urabe) {
      t.push(p.urabe->r);
    } else {
      t.push_empty();
    }
    if (p.urabe && p.urabe->M > 0.0) {
      t.push(p.urabe->M);
    } else {
      t.push_empty();
    }
  }
  const std::filesystem::path out(opts.out_dir);
  atomic_write_file(out / "branch.csv", t.render(cfg.config_hash));

  nlohmann::json s;
  s["tool"] = "hbcheb";
  s["version"] = kVersion;
  s["config_hash"] = cfg.config_hash;
  s["kind"] = cfg.kind;
  s["model"] = m.name;
  s["omega1"] = m.omega1;
  s["points"] = br.points.size();
  s["complete"] = br.complete;
  s["closed"] = br.closed;
  s["turning_points"] = br.turning_points;
  s["warning"] = br.warning;
  atomic_write_file(out / "summary.json", s.dump(2) + "\n");
}

template <class Fn>
[[nodiscard]] double mean_ms(Fn&& fn, int repeat) {
  fn();  // warm-up excluded from the mean
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < std::max(1, repeat); ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() /
         std::max(1, repeat);
}

}  // namespace detail

[[nodiscard]] inline int run_frf(const RunConfig& cfg,
                                 const RunOptions& opts) {
  const ModelSpec m = make_model(cfg);
  BranchResult br;
  try {
    br = trace_branch(m, cfg.continuation, detail::seed_series(cfg, m));
  } catch (const SolverFailure& e) {
    br.warning = e.what();
  }
  detail::attach_stability(m, br, cfg);
  detail::write_branch_outputs(m, br, cfg, opts);
  return br.complete ? 0 : 3;
}

[[nodiscard]] inline int run_urabe(const RunConfig& cfg,
                                   const RunOptions& opts) {
  const ModelSpec m = make_model(cfg);
  const std::filesystem::path out(opts.out_dir);
  const AdaptiveHSettings& as = cfg.adaptive_settings;
  const std::string crit = to_string(as.criterion);

  if (cfg.kind == "urabe-point") {
    FourierSeries q = detail::seed_series(cfg, m);
    if (cfg.has_point) q.Omega = cfg.point_Omega;
    try {
      q = newton_solve(m, q, as.corrector).q;
    } catch (const SolverFailure& e) {
      nlohmann::json s;
      s["tool"] = "hbcheb";
      s["version"] = kVersion;
      s["config_hash"] = cfg.config_hash;
      s["kind"] = cfg.kind;
      s["warning"] = e.what();
      atomic_write_file(out / "summary.json", s.dump(2) + "\n");
      return 3;
    }
    const AdaptivePointResult res = adapt_point(m, q, as);
    nlohmann::json cert = certification_to_json(
        res.q.Omega, res.measures, res.conclusive, crit);
    cert["flagged"] = res.flagged;
    cert["config_hash"] = cfg.config_hash;
    cert["version"] = kVersion;
    atomic_write_file(out / "cert.json", cert.dump(2) + "\n");
    atomic_write_file(out / "orbit.json",
                      fourier_to_json(res.q).dump(2) + "\n");
    return 0;
  }

  BranchResult br;
  try {
    br = trace_branch(m, cfg.continuation, detail::seed_series(cfg, m),
                      cfg.adaptive ? adaptive_refiner(m, as) : PointRefiner{});
  } catch (const SolverFailure& e) {
    br.warning = e.what();
  }
  detail::attach_stability(m, br, cfg);
  detail::write_branch_outputs(m, br, cfg, opts);
  for (std::size_t i = 0; i < br.points.size(); ++i) {
    const BranchPoint& p = br.points[i];
    if (!p.urabe) continue;
    char name[32];
    std::snprintf(name, sizeof name, "cert_%05zu.json", i);
    nlohmann::json cert = certification_to_json(
        p.Omega, *p.urabe, detail::conclusive_for(*p.urabe, as), crit);
    cert["config_hash"] = cfg.config_hash;
    cert["version"] = kVersion;
    atomic_write_file(out / name, cert.dump(2) + "\n");
  }
  return br.complete ? 0 : 3;
}

[[nodiscard]] inline int run_convergence(const RunConfig& cfg,
                                         const RunOptions& opts) {
  const ModelSpec m = make_model(cfg);
  if (cfg.sweeps.empty()) throw ConfigError("stab-convergence needs sweeps");
  int finest = 0;
  for (const RunConfig::Sweep& s : cfg.sweeps) {
    for (int r : s.resolutions) finest = std::max(finest, r);
  }
  if (cfg.oracle_resolution < 4 * finest) {
    throw ConfigError("oracle resolution must be at least 4x the finest");
  }

  FourierSeries q = detail::seed_series(cfg, m);
  if (cfg.has_point) q.Omega = cfg.point_Omega;
  // an explicit truncation order overrides whatever the seed carries
  if (cfg.has_H) q = detail::resize_series(q, cfg.H);
  FloquetResult ref;
  try {
    q = newton_solve(m, q, cfg.continuation.corrector).q;
    ref = detail::point_stability(m, q, cfg.oracle_method,
                                  cfg.oracle_resolution);
  } catch (const SolverFailure& e) {
    throw OracleError(std::string("oracle: ") + e.what());
  }
  const std::complex<double> lam_ref = ref.multipliers(0);

  CsvTable t({"method", "resolution", "eps_lambda", "mean_ms"});
  for (const RunConfig::Sweep& s : cfg.sweeps) {
    for (int res : s.resolutions) {
      FloquetResult fr;
      const double ms = detail::mean_ms(
          [&] { fr = detail::point_stability(m, q, s.method, res); },
          opts.repeat);
      t.begin_row();
      t.push(s.method);
      t.push(res);
      t.push(std::abs(fr.multipliers(0) - lam_ref));
      t.push(ms);
    }
  }
  const std::filesystem::path out(opts.out_dir);
  atomic_write_file(out / "convergence.csv", t.render(cfg.config_hash));

  nlohmann::json s;
  s["tool"] = "hbcheb";
  s["version"] = kVersion;
  s["config_hash"] = cfg.config_hash;
  s["kind"] = cfg.kind;
  s["model"] = m.name;
  s["Omega"] = q.Omega;
  s["H"] = q.harmonics();
  s["amplitude"] = max_abs_output(q, m.output);
  s["lambda_ref_re"] = lam_ref.real();
  s["lambda_ref_im"] = lam_ref.imag();
  s["oracle_method"] = cfg.oracle_method;
  s["oracle_resolution"] = cfg.oracle_resolution;
  atomic_write_file(out / "summary.json", s.dump(2) + "\n");
  return 0;
}

[[nodiscard]] inline int run_bench(const RunConfig& cfg,
                                   const RunOptions& opts) {
  const ModelSpec m = make_model(cfg);
  if (cfg.sweeps.empty()) throw ConfigError("bench needs sweeps");
  FourierSeries q = detail::seed_series(cfg, m);
  if (cfg.has_point) q.Omega = cfg.point_Omega;
  if (cfg.has_H) q = detail::resize_series(q, cfg.H);
  try {
    q = newton_solve(m, q, cfg.continuation.corrector).q;
  } catch (const SolverFailure& e) {
    throw OracleError(std::string("bench orbit: ") + e.what());
  }

  CsvTable t({"section", "resolution", "mean_ms"});
  for (const RunConfig::Sweep& s : cfg.sweeps) {
    for (int res : s.resolutions) {
      const double ms = detail::mean_ms(
          [&] { (void)detail::point_stability(m, q, s.method, res); },
          opts.repeat);
      t.begin_row();
      t.push(s.method);
      t.push(res);
      t.push(ms);
    }
  }
  const std::filesystem::path out(opts.out_dir);
  atomic_write_file(out / "bench.csv", t.render(cfg.config_hash));
  std::printf("bench: timings are informational and hardware-dependent\n");
  return 0;
}

/// Quick invariant checks behind the `selftest` subcommand. Prints one line
/// per check; returns 0 only if all pass.
[[nodiscard]] inline int run_selftest() {
  struct Check {
    const char* name;
    double residual;
    double bound;
  };
  std::vector<Check> checks;

  {
    const auto ops = cheb_ops(48);
    const Eigen::VectorXd f = ops->grid.array().sin();
    const Eigen::VectorXd c = ops->lu.solve(f);
    const Eigen::VectorXd F = ops->Gt * c;
    double worst = 0.0;
    for (int i = 0; i < ops->C; ++i) {
      worst = std::max(worst, std::abs(cheb_eval(F, ops->grid(i)) -
                                       (1.0 - std::cos(ops->grid(i)))));
    }
    checks.push_back({"cheb-integration", worst, 1e-12});

    const Eigen::VectorXd a = ops->lu.solve(ops->grid.array().cos().matrix());
    const Eigen::VectorXd p = product_matrix(a) * c;
    const Eigen::VectorXd lhs = ops->eval * p;
    const Eigen::VectorXd rhs =
        (ops->grid.array().cos() * ops->grid.array().sin()).matrix();
    checks.push_back({"cheb-product", (lhs - rhs).cwiseAbs().maxCoeff(),
                      1e-12});
  }

  Eigen::Matrix2d D;
  D << 0.1, 0.02, 0.02, 0.3;
  Eigen::Matrix2d K;
  K << 2.0, -1.0, -1.0, 3.0;
  const ModelSpec lin = linear_model(D, K, Eigen::Vector2d(0.5, 0.25));
  {
    const double Om = 0.8;
    const FourierSeries q = newton_solve(lin, initial_guess(lin, Om, 3)).q;
    const Eigen::Matrix2cd S =
        (K - Om * Om * Eigen::Matrix2d::Identity())
            .cast<std::complex<double>>() +
        std::complex<double>(0, Om) * D.cast<std::complex<double>>();
    const Eigen::Vector2cd c1 = S.lu().solve(lin.f_ex.col(1));
    const double closed = 2.0 * std::abs(c1(0));
    checks.push_back({"hb-linear-frf",
                      std::abs(max_abs_output(q, lin.output) - closed),
                      5e-5});

    const FloquetResult fl =
        monodromy_mexp(lin, sample_jacobian(lin, q, mexp_grid(64)));
    const double det = fl.monodromy.determinant();
    const double liouville = std::exp(-kTwoPi * D.trace() / Om);
    checks.push_back({"liouville-determinant",
                      std::abs(det - liouville) / liouville, 1e-12});
  }

  {
    const ModelSpec duf = duffing();
    FourierSeries q(1, 4, 1.0);
    q.coef(0, 0) = 0.3;
    q.coef(0, 1) = std::complex<double>(0.4, -0.2);
    q.coef(0, 3) = std::complex<double>(-0.05, 0.11);
    const Eigen::MatrixXcd tight = aft(duf.f_nl, q, 17, 4);
    const Eigen::MatrixXcd wide = aft(duf.f_nl, q, 64, 4);
    checks.push_back(
        {"aft-alias-exactness", (tight - wide).cwiseAbs().maxCoeff(), 1e-14});
  }

  {
    ChebFlow flow;
    flow.dim = 1;
    flow.Omega = 1.0;
    flow.ops = cheb_ops(40);
    flow.coef = flow.ops->lu.solve((-flow.ops->grid).array().exp().matrix());
    flow.monodromy = Eigen::MatrixXd::Constant(1, 1, std::exp(-kTwoPi));
    const double rho = std::exp(-kTwoPi);
    const double closed = std::sqrt(kPi * (1.0 + rho) / (1.0 - rho));
    checks.push_back({"kernel-measure-scalar",
                      std::abs(m_measure(flow).M - closed) / closed, 1e-8});
  }

  int failures = 0;
  for (const Check& c : checks) {
    const bool ok = c.residual < c.bound;
    failures += !ok;
    std::printf("%s %s (%.3e < %.0e)\n", ok ? "ok  " : "FAIL", c.name,
                c.residual, c.bound);
  }
  std::printf("%zu checks, %d failures\n", checks.size(), failures);
  return failures == 0 ? 0 : 1;
}

/// Subcommand dispatch used by the binary; returns the process exit code.
[[nodiscard]] inline int run_cli(const std::string& subcommand,
                                 const std::string& config_path,
                                 const RunOptions& opts) {
  if (subcommand == "selftest") return run_selftest();
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    const bool match =
        (subcommand == "frf" && cfg.kind == "frf") ||
        (subcommand == "stab-convergence" &&
         cfg.kind == "stab-convergence") ||
        (subcommand == "urabe" &&
         (cfg.kind == "urabe-branch" || cfg.kind == "urabe-point")) ||
        (subcommand == "bench" && cfg.kind == "bench");
    if (!match) {
      throw ConfigError("config kind '" + cfg.kind +
                        "' does not fit subcommand '" + subcommand + "'");
    }
    if (subcommand == "frf") return run_frf(cfg, opts);
    if (subcommand == "stab-convergence") return run_convergence(cfg, opts);
    if (subcommand == "urabe") return run_urabe(cfg, opts);
    return run_bench(cfg, opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const OracleError& e) {
    std::fprintf(stderr, "oracle error: %s\n", e.what());
    return 4;
  }
}

}  // namespace hbcheb
