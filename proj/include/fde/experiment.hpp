#pragma once

// Experiment configuration and the simulate / sensitivity / density /
// fbm-sample pipelines behind the command line tool.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fde/coefficient.hpp"
#include "fde/delay.hpp"
#include "fde/fbm.hpp"
#include "fde/io.hpp"
#include "fde/malliavin.hpp"
#include "fde/parallel.hpp"
#include "fde/sensitivity.hpp"

namespace fde {

using json = nlohmann::json;

struct KernelSpec {
  std::string type = "uniform";  // uniform | weighted | discrete
  std::size_t points = 5;        // uniform
  double level = 1.0;            // uniform
  std::vector<double> density;   // weighted
  std::vector<std::pair<double, double>> lags;  // discrete: (lag, weight)
};

struct SigmaSpec {
  std::string name = "scalar-sin";
  std::vector<double> params{1.0, 0.5};
};

/// Initial segment xi(theta) = value + slope * theta on [-h, 0].
struct XiSpec {
  std::string type = "constant";  // constant | linear
  std::vector<double> value{1.0};
  std::vector<double> slope;
};

struct ExperimentConfig {
  double H = 0.75;
  double T = 1.0;
  double h = 0.25;
  std::size_t n_steps = 256;
  std::size_t dim = 1;
  KernelSpec kernel;
  SigmaSpec sigma;
  XiSpec xi;
  std::size_t mc_paths = 10;
  std::uint64_t seed = 1;
  std::string output_dir = "fde_out";
  double gamma = 0.7;
  double lambda = 0.6;
  double t_eval = 1.0;
  std::size_t r_stride = 1;
  std::size_t malliavin_paths = 0;  // 0: same as mc_paths
  std::string fbm_method = "auto";  // auto | cholesky | circulant
  double tol = 1e-12;
  std::size_t max_iter = 200;
  std::size_t window_steps = 0;
  std::size_t threads = 1;
};

inline json to_json(const ExperimentConfig& c) {
  json k;
  k["type"] = c.kernel.type;
  if (c.kernel.type == "uniform") {
    k["points"] = c.kernel.points;
    k["level"] = c.kernel.level;
  } else if (c.kernel.type == "weighted") {
    k["density"] = c.kernel.density;
  } else {
    json lags = json::array();
    for (const auto& [lag, w] : c.kernel.lags) lags.push_back({lag, w});
    k["lags"] = lags;
  }
  json xi{{"type", c.xi.type}, {"value", c.xi.value}};
  if (c.xi.type == "linear") xi["slope"] = c.xi.slope;
  return json{{"H", c.H},
              {"T", c.T},
              {"h", c.h},
              {"n_steps", c.n_steps},
              {"dim", c.dim},
              {"kernel", k},
              {"sigma", {{"name", c.sigma.name}, {"params", c.sigma.params}}},
              {"xi", xi},
              {"mc_paths", c.mc_paths},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"gamma", c.gamma},
              {"lambda", c.lambda},
              {"t_eval", c.t_eval},
              {"r_stride", c.r_stride},
              {"malliavin_paths", c.malliavin_paths},
              {"fbm_method", c.fbm_method},
              {"tol", c.tol},
              {"max_iter", c.max_iter},
              {"window_steps", c.window_steps},
              {"threads", c.threads}};
}

namespace detail {

inline bool grid_aligned(double span, double dt) {
  const double x = span / dt;
  return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, x);
}

}  // namespace detail

/// Checks every invariant and throws one ValidationError listing all failures.
inline void validate(const ExperimentConfig& c) {
  std::vector<std::string> bad;
  auto need = [&bad](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  need(c.H > 0.5 && c.H < 1.0, "H: must lie in (1/2, 1)");
  need(c.lambda > 0.5, "lambda: must exceed 1/2");
  need(c.gamma > c.lambda, "gamma: must exceed lambda");
  need(c.gamma < c.H, "gamma: must be below H");
  need(c.T > 0.0, "T: must be positive");
  need(c.h > 0.0, "h: must be positive");
  need(c.n_steps >= 1, "n_steps: must be at least 1");
  need(c.dim >= 1, "dim: must be at least 1");
  need(c.mc_paths >= 1, "mc_paths: must be at least 1");
  need(c.tol > 0.0, "tol: must be positive");
  need(c.max_iter >= 1, "max_iter: must be at least 1");
  need(c.threads >= 1, "threads: must be at least 1");
  need(c.fbm_method == "auto" || c.fbm_method == "cholesky" || c.fbm_method == "circulant",
       "fbm_method: expected auto, cholesky or circulant");
  need(c.malliavin_paths <= c.mc_paths, "malliavin_paths: cannot exceed mc_paths");
  if (c.T > 0.0 && c.n_steps >= 1) {
    const double dt = c.T / static_cast<double>(c.n_steps);
    need(c.h <= 0.0 || detail::grid_aligned(c.h, dt), "h: must be an integer multiple of dt = T / n_steps");
    need(c.t_eval > 0.0 && c.t_eval <= c.T * (1.0 + 1e-12) && detail::grid_aligned(c.t_eval, dt),
         "t_eval: must be a grid node in (0, T]");
    need(c.r_stride >= 1 && c.n_steps % std::max<std::size_t>(c.r_stride, 1) == 0,
         "r_stride: must divide n_steps");
    if (c.r_stride >= 1 && c.t_eval > 0.0)
      need(detail::grid_aligned(c.t_eval, dt * static_cast<double>(c.r_stride)), "t_eval: must be a node of the r-grid");
    if (c.kernel.type == "uniform") {
      need(c.kernel.points >= 2, "kernel.points: need at least 2");
      need(c.kernel.level >= 0.0, "kernel.level: must be >= 0");
      if (c.kernel.points >= 2 && c.h > 0.0)
        need(detail::grid_aligned(c.h / static_cast<double>(c.kernel.points - 1), dt),
             "kernel.points: sub-grid spacing must be a multiple of dt");
    } else if (c.kernel.type == "weighted") {
      need(c.kernel.density.size() >= 2, "kernel.density: need at least 2 values");
      for (double v : c.kernel.density) need(v >= 0.0, "kernel.density: values must be >= 0");
      if (c.kernel.density.size() >= 2 && c.h > 0.0)
        need(detail::grid_aligned(c.h / static_cast<double>(c.kernel.density.size() - 1), dt),
             "kernel.density: sub-grid spacing must be a multiple of dt");
    } else if (c.kernel.type == "discrete") {
      need(!c.kernel.lags.empty(), "kernel.lags: need at least one lag");
      for (const auto& [lag, w] : c.kernel.lags) {
        need(lag >= 0.0 && lag <= c.h * (1.0 + 1e-12), "kernel.lags: lag " + format_double(lag) + " outside [0, h]");
        need(detail::grid_aligned(lag, dt), "kernel.lags: lag " + format_double(lag) + " is not a multiple of dt");
      }
    } else {
      bad.push_back("kernel.type: expected uniform, weighted or discrete");
    }
  }
  if (c.xi.type == "constant" || c.xi.type == "linear") {
    need(c.xi.value.size() == c.dim, "xi.value: needs dim entries");
    if (c.xi.type == "linear") need(c.xi.slope.size() == c.dim, "xi.slope: needs dim entries");
  } else {
    bad.push_back("xi.type: expected constant or linear");
  }
  try {
    (void)make_builtin_coefficient(c.sigma.name, c.sigma.params, std::max<std::size_t>(c.dim, 1));
  } catch (const ValidationError& e) {
    bad.push_back(std::string("sigma: ") + e.what());
  }
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw ValidationError(msg);
  }
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  std::vector<std::string> bad;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception&) {
      bad.push_back(std::string(key) + ": wrong type");
    }
  };
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
  static const std::vector<std::string> known{"H",       "T",          "h",        "n_steps",  "dim",
                                              "kernel",  "sigma",      "xi",       "mc_paths", "seed",
                                              "output_dir", "gamma",   "lambda",   "t_eval",   "r_stride",
                                              "malliavin_paths", "fbm_method", "tol", "max_iter", "window_steps",
                                              "threads"};
  for (const auto& [key, v] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) bad.push_back(key + ": unknown field");
  get("H", c.H);
  get("T", c.T);
  get("h", c.h);
  get("n_steps", c.n_steps);
  get("dim", c.dim);
  get("mc_paths", c.mc_paths);
  get("seed", c.seed);
  get("output_dir", c.output_dir);
  get("gamma", c.gamma);
  get("lambda", c.lambda);
  get("t_eval", c.t_eval);
  get("r_stride", c.r_stride);
  get("malliavin_paths", c.malliavin_paths);
  get("fbm_method", c.fbm_method);
  get("tol", c.tol);
  get("max_iter", c.max_iter);
  get("window_steps", c.window_steps);
  get("threads", c.threads);
  if (j.contains("t_eval") == false && j.contains("T")) c.t_eval = c.T;
  try {
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      c.kernel.type = k.value("type", c.kernel.type);
      c.kernel.points = k.value("points", c.kernel.points);
      c.kernel.level = k.value("level", c.kernel.level);
      if (k.contains("density")) c.kernel.density = k.at("density").get<std::vector<double>>();
      if (k.contains("lags"))
        for (const auto& e : k.at("lags")) c.kernel.lags.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    }
  } catch (const json::exception&) {
    bad.push_back("kernel: malformed");
  }
  try {
    if (j.contains("sigma")) {
      c.sigma.name = j.at("sigma").value("name", c.sigma.name);
      if (j.at("sigma").contains("params")) c.sigma.params = j.at("sigma").at("params").get<std::vector<double>>();
    }
  } catch (const json::exception&) {
    bad.push_back("sigma: malformed");
  }
  try {
    if (j.contains("xi")) {
      const auto& x = j.at("xi");
      c.xi.type = x.value("type", c.xi.type);
      if (x.contains("value")) {
        const auto& v = x.at("value");
        c.xi.value = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>(c.dim, v.get<double>());
      } else {
        c.xi.value.assign(c.dim, c.xi.value.empty() ? 0.0 : c.xi.value.front());
      }
      if (x.contains("slope")) {
        const auto& v = x.at("slope");
        c.xi.slope = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>(c.dim, v.get<double>());
      }
    } else {
      c.xi.value.assign(c.dim, 1.0);
    }
  } catch (const json::exception&) {
    bad.push_back("xi: malformed");
  }
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw ValidationError(msg);
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_text(file));
  } catch (const json::parse_error& e) {
    throw ValidationError("configuration " + file.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// "smooth-density regime" when the density is expected to be C^infinity:
/// discrete delays for any H > 1/2, continuous delays only above hurst_threshold().
inline std::string regime_label(double H, bool discrete_kernel) {
  if (discrete_kernel ? H > 0.5 : H > hurst_threshold()) return "smooth-density regime";
  return "existence-only regime";
}

inline std::string regime_label(const ExperimentConfig& c) { return regime_label(c.H, c.kernel.type == "discrete"); }

/// Objects shared by every Monte-Carlo path of one configuration.
struct Problem {
  ExperimentConfig config;
  UniformGrid grid;  // [0, T]
  DelayKernel kernel;
  Coefficient sigma;
  GridPath xi;
  FbmSampler sampler;
  SolveOptions solve_options;

  explicit Problem(const ExperimentConfig& c)
      : config(c),
        grid(0.0, c.T, c.n_steps),
        kernel(make_kernel(c)),
        sigma(make_builtin_coefficient(c.sigma.name, c.sigma.params, c.dim)),
        xi(make_xi(c)),
        sampler(grid, c.H, make_method(c)) {
    solve_options.tol = c.tol;
    solve_options.max_iter = c.max_iter;
    solve_options.gamma = c.gamma;
    solve_options.lambda = c.lambda;
    solve_options.window_steps = c.window_steps;
  }

  GridPath driver(std::size_t path_index) const { return sampler.sample(config.dim, config.seed, path_index).path; }

  SolveReport solve(const GridPath& x) const { return solve_delay(x, xi, sigma, kernel, solve_options); }

  std::size_t t_index() const { return grid.index_of(config.t_eval); }

private:
  static DelayKernel make_kernel(const ExperimentConfig& c) {
    if (c.kernel.type == "discrete") return DelayKernel::discrete(c.kernel.lags, c.h);
    if (c.kernel.type == "weighted") return DelayKernel::weighted(c.kernel.density, c.h);
    return DelayKernel::uniform(c.h, c.kernel.points, c.kernel.level);
  }
  static GridPath make_xi(const ExperimentConfig& c) {
    const std::size_t steps = static_cast<std::size_t>(std::llround(c.h / (c.T / static_cast<double>(c.n_steps))));
    GridPath p(UniformGrid(-c.h, 0.0, steps), c.dim);
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t k = 0; k < c.dim; ++k)
        p(i, k) = c.xi.value[k] + (c.xi.type == "linear" ? c.xi.slope[k] * p.grid().node(i) : 0.0);
    return p;
  }
  static FbmMethod make_method(const ExperimentConfig& c) {
    if (c.fbm_method == "cholesky") return FbmMethod::cholesky;
    if (c.fbm_method == "circulant") return FbmMethod::circulant;
    return default_fbm_method(c.n_steps);
  }
};

inline std::string path_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%05zu.csv", i);
  return buf;
}

struct RunResult {
  std::filesystem::path dir;
  std::vector<std::string> files;  // relative to dir, excluding the manifest
  json summary;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Writes manifest.json: config echo, regime, seed, hash of the listed files, wall time.
inline void write_manifest(RunResult& r, const ExperimentConfig& c, const std::string& verb, double wall_seconds) {
  std::string all;
  for (const auto& f : r.files) all += f + "\n" + read_text(r.dir / f);
  json m{{"verb", verb},
         {"config", to_json(c)},
         {"seed", c.seed},
         {"regime", regime_label(c)},
         {"hurst_threshold", hurst_threshold()},
         {"content_hash", content_hash(all)},
         {"files", r.files},
         {"wall_seconds", wall_seconds},
         {"summary", r.summary}};
  write_text(r.dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace detail

/// Samples drivers, solves one delay equation per path and writes one CSV per
/// path (t, y1..yn over [-h, T]) plus solve reports and a manifest.
inline RunResult run_simulate(const ExperimentConfig& c) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Problem prob(c);
  RunResult r;
  r.dir = c.output_dir;
  std::filesystem::create_directories(r.dir);

  std::vector<json> reports(c.mc_paths);
  parallel_for(c.mc_paths, c.threads, [&](std::size_t i) {
    const SolveReport rep = prob.solve(prob.driver(i));
    write_text(r.dir / path_file_name(i), path_to_csv(rep.y, "y"));
    std::size_t iters = 0;
    for (const auto& w : rep.windows) iters = std::max(iters, w.iterations);
    reports[i] = json{{"path", i},
                      {"epsilon_used", rep.epsilon_used},
                      {"eta_used", rep.eta_used},
                      {"windows", rep.windows.size()},
                      {"max_picard_iterations", iters},
                      {"seminorm_lambda", rep.seminorm_lambda},
                      {"x_seminorm_gamma", rep.x_seminorm}};
  });
  for (std::size_t i = 0; i < c.mc_paths; ++i) r.files.push_back(path_file_name(i));
  r.summary = json{{"paths", c.mc_paths}, {"solve_reports", reports}};
  detail::write_manifest(r, c, "simulate", detail::seconds_since(t0));
  return r;
}

/// Phi_t(r) for the first path: phi.csv, phi.fde1 and a JSON report.
inline RunResult run_sensitivity(const ExperimentConfig& c) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Problem prob(c);
  RunResult r;
  r.dir = c.output_dir;
  std::filesystem::create_directories(r.dir);
  const GridPath x = prob.driver(0);
  const SolveReport rep = prob.solve(x);
  const GradCoefficient g = grad_coefficient(rep, x, prob.sigma, prob.kernel);
  const SensitivityField f = sensitivity_field(g, prob.grid, c.r_stride);
  write_text(r.dir / "phi.csv", sensitivity_to_csv(f));
  write_text(r.dir / "phi.fde1", fde1_encode(sensitivity_to_fde1(f, c.H)));
  write_text(r.dir / "solution.csv", path_to_csv(rep.y, "y"));
  r.files = {"phi.csv", "phi.fde1", "solution.csv"};
  r.summary = json{{"r_nodes", f.n_r()}, {"t_nodes", prob.grid.n_nodes()}, {"n", f.n}, {"d", f.d}};
  detail::write_manifest(r, c, "sensitivity", detail::seconds_since(t0));
  return r;
}

/// fBm drivers as fbm_XXXXX.csv and fbm_XXXXX.fde1.
inline RunResult run_fbm_sample(const ExperimentConfig& c) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Problem prob(c);
  RunResult r;
  r.dir = c.output_dir;
  std::filesystem::create_directories(r.dir);
  parallel_for(c.mc_paths, c.threads, [&](std::size_t i) {
    const GridPath x = prob.driver(i);
    char stem[32];
    std::snprintf(stem, sizeof stem, "fbm_%05zu", i);
    write_text(r.dir / (std::string(stem) + ".csv"), path_to_csv(x, "B"));
    write_text(r.dir / (std::string(stem) + ".fde1"), fde1_encode(path_to_fde1(x, c.H)));
  });
  for (std::size_t i = 0; i < c.mc_paths; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "fbm_%05zu", i);
    r.files.push_back(std::string(stem) + ".csv");
    r.files.push_back(std::string(stem) + ".fde1");
  }
  r.summary = json{{"paths", c.mc_paths}, {"method", to_string(prob.sampler.method())}};
  detail::write_manifest(r, c, "fbm-sample", detail::seconds_since(t0));
  return r;
}

/// Monte-Carlo density of y_{t_eval}: samples, Malliavin matrices at
/// t_eval / 4, t_eval / 2 and t_eval (those on the r-grid), the lower bound
/// L_t when sigma declares eps > 0, the kernel density estimate and its
/// bandwidth-halving stability.
inline RunResult run_density(const ExperimentConfig& c) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Problem prob(c);
  RunResult r;
  r.dir = c.output_dir;
  std::filesystem::create_directories(r.dir);

  const std::size_t ti = prob.t_index();
  const std::size_t n_mall = c.malliavin_paths == 0 ? c.mc_paths : c.malliavin_paths;
  const UniformGrid coarse = prob.grid.coarsen(c.r_stride);
  const KStarMatrix kstar(coarse, HurstParams(c.H, c.T));
  std::vector<std::size_t> t_nodes;
  for (std::size_t div : {4, 2, 1})
    if (ti % (div * c.r_stride) == 0 && ti / div > 0) t_nodes.push_back(ti / div);

  Eigen::MatrixXd samples(static_cast<Eigen::Index>(c.mc_paths), static_cast<Eigen::Index>(c.dim));
  std::vector<std::vector<MalliavinMatrix>> mats(n_mall);
  std::vector<int> lb_pass(n_mall, 1);
  std::vector<double> lb_min(n_mall, 0.0);
  parallel_for(c.mc_paths, c.threads, [&](std::size_t i) {
    const GridPath x = prob.driver(i);
    const SolveReport rep = prob.solve(x);
    samples.row(static_cast<Eigen::Index>(i)) = rep.y.row(rep.origin + ti);
    if (i >= n_mall) return;
    const GradCoefficient g = grad_coefficient(rep, x, prob.sigma, prob.kernel);
    const SensitivityField f = sensitivity_field(g, prob.grid, c.r_stride);
    for (std::size_t tn : t_nodes) mats[i].push_back(malliavin_matrix(f, tn, kstar));
    if (prob.sigma.nondeg_eps > 0.0) {
      const auto lb = lower_bound_Lt(g.q, prob.grid, c.r_stride, ti, kstar, prob.sigma.nondeg_eps);
      lb_pass[i] = lb.pass ? 1 : 0;
      lb_min[i] = lb.lambda_min;
    }
  });

  std::vector<MalliavinMatrix> batch;
  for (const auto& v : mats) batch.insert(batch.end(), v.begin(), v.end());
  json mall;
  if (!batch.empty()) {
    const DetQTailReport tail = detQ_tail_report(batch);
    json per = json::array();
    for (const auto& s : tail.per_time)
      per.push_back({{"t", s.t},
                     {"count", s.count},
                     {"probabilities", tail.probabilities},
                     {"det_quantiles", s.det_quantiles},
                     {"lambda_min_quantiles", s.lambda_min_quantiles},
                     {"min_det", s.min_det}});
    mall = json{{"per_time", per},
                {"slope_log_lambda_min_vs_log_t", std::isfinite(tail.slope) ? json(tail.slope) : json(nullptr)},
                {"reference_slope_2H", 2.0 * c.H},
                {"all_det_positive", tail.all_det_positive}};
    if (prob.sigma.nondeg_eps > 0.0) {
      std::size_t passed = 0;
      for (int p : lb_pass) passed += static_cast<std::size_t>(p);
      mall["lower_bound"] = {{"eps", prob.sigma.nondeg_eps}, {"paths", n_mall}, {"passed", passed}, {"lambda_min_L", lb_min}};
    }
  }

  json dens;
  if (c.mc_paths >= 100) {
    const DensityEstimate est = density_estimate(samples);
    std::string csv;
    for (std::size_t k = 0; k < est.axes.size(); ++k) csv += "y" + std::to_string(k + 1) + ",";
    csv += "density\n";
    if (est.axes.size() == 1) {
      for (std::size_t i = 0; i < est.values.size(); ++i)
        csv += format_double(est.axes[0][i]) + "," + format_double(est.values[i]) + "\n";
    } else if (est.axes.size() == 2) {
      const std::size_t m = est.axes[1].size();
      for (std::size_t i = 0; i < est.axes[0].size(); ++i)
        for (std::size_t j = 0; j < m; ++j)
          csv += format_double(est.axes[0][i]) + "," + format_double(est.axes[1][j]) + "," +
                 format_double(est.values[i * m + j]) + "\n";
    }
    if (!est.axes.empty()) {
      write_text(r.dir / "density.csv", csv);
      r.files.push_back("density.csv");
    }
    DensityOptions half;
    std::vector<double> hb = est.bandwidth;
    for (double& b : hb) b *= 0.5;
    half.bandwidth = hb;
    double change = 0.0;
    if (!est.axes.empty()) {
      const DensityEstimate est2 = density_estimate(samples, half);
      // Compare on the first estimate's grid.
      if (est.axes.size() == 1) {
        for (std::size_t i = 0; i < est.values.size(); ++i)
          change = std::max(change, std::abs(est.values[i] - est2.evaluate(Eigen::VectorXd::Constant(1, est.axes[0][i]))));
      } else {
        const std::size_t m = est.axes[1].size();
        for (std::size_t i = 0; i < est.axes[0].size(); ++i)
          for (std::size_t j = 0; j < m; ++j)
            change = std::max(change, std::abs(est.values[i * m + j] -
                                               est2.evaluate(Eigen::Vector2d(est.axes[0][i], est.axes[1][j]))));
      }
    }
    dens = json{{"samples", est.sample_count},
                {"bandwidth", est.bandwidth},
                {"integral", est.axes.empty() ? json(nullptr) : json(est.integral())},
                {"sup_change_under_bandwidth_halving", change}};
  } else {
    dens = json{{"skipped", "density estimation needs mc_paths >= 100"}};
  }

  std::string sample_csv;
  for (std::size_t k = 0; k < c.dim; ++k) sample_csv += (k ? ",y" : "y") + std::to_string(k + 1);
  sample_csv += "\n";
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index k = 0; k < samples.cols(); ++k) sample_csv += (k ? "," : "") + format_double(samples(i, k));
    sample_csv += "\n";
  }
  write_text(r.dir / "samples.csv", sample_csv);
  r.files.push_back("samples.csv");

  r.summary = json{{"t_eval", c.t_eval}, {"regime", regime_label(c)}, {"malliavin", mall}, {"density", dens}};
  write_text(r.dir / "malliavin.json", r.summary.dump(2) + "\n");
  r.files.push_back("malliavin.json");
  detail::write_manifest(r, c, "density", detail::seconds_since(t0));
  return r;
}

}  // namespace fde
