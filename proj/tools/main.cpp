// Command-line front end: phantom simulation, bi-directional displacement
// estimation, least-squares strain, image-quality evaluation, and the
// finite-difference gradient self-check.
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strainflow/config.hpp"
#include "strainflow/gradcheck.hpp"
#include "strainflow/io.hpp"
#include "strainflow/metrics.hpp"
#include "strainflow/phantom.hpp"
#include "strainflow/solver.hpp"
#include "strainflow/stats.hpp"
#include "strainflow/strain.hpp"

namespace fs = std::filesystem;
using namespace strainflow;

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Config sources for one subcommand: file, generic --set overrides, and one
// dedicated flag per accepted key. Applied in that order.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "Override any config key as key=value (repeatable)");
    for (const std::string& key : ExperimentConfig::key_names()) {
      std::string names = "--" + key;
      if (key == "loss.lambda") names += ",--lambda";
      if (key == "loss.gamma") names += ",--gamma";
      if (key == "output_dir") names += ",--output-dir";
      options[key] = cmd->add_option(names, values[key], "Override " + key);
    }
    cmd->footer(ExperimentConfig::key_help());
  }

  ExperimentConfig build() const {
    ConfigMap map;
    if (!config_path.empty()) map = ConfigMap::parse_file(config_path);
    for (const std::string& s : sets) {
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      map.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const std::string& key : ExperimentConfig::key_names())
      if (options.at(key)->count() > 0) map.set(key, values.at(key));
    return ExperimentConfig::from_config(map);
  }
};

fs::path ensure_outdir(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  return dir;
}

int run_simulate(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_outdir(cfg);
  const PhantomSpec& s = cfg.phantom;
  const PhantomPair pair = render_pair(s);
  write_frame(dir / "i1.grid", pair.i1);
  write_frame(dir / "i2.grid", pair.i2);
  const auto wg = [&](const char* name, const RealGrid& g) {
    write_evgrid(dir / name, g, s.fs, s.fc, s.c, s.line_pitch);
  };
  wg("gt_forward_a.grid", pair.truth.forward.w_a);
  wg("gt_forward_l.grid", pair.truth.forward.w_l);
  wg("gt_backward_a.grid", pair.truth.backward.w_a);
  wg("gt_backward_l.grid", pair.truth.backward.w_l);
  wg("gt_strain.grid", pair.truth.local_axial_strain);
  write_manifest(dir / "manifest.txt", "simulate", cfg.canonical(), s.seed, {});
  std::cout << "simulate: " << s.rows << "x" << s.cols << " pair and ground truth written to "
            << dir.string() << "\n";
  return 0;
}

int run_estimate(const ExperimentConfig& cfg, const std::string& p1, const std::string& p2) {
  const fs::path dir = ensure_outdir(cfg);
  const RfFrame i1 = read_frame(p1);
  const RfFrame i2 = read_frame(p2);
  const EstimateResult r = estimate(i1, i2, cfg.solver);
  const auto wg = [&](const char* name, const RealGrid& g) {
    write_evgrid(dir / name, g, i1.fs, i1.fc, i1.c, i1.line_pitch);
  };
  wg("forward_a.grid", r.fields.forward.w_a);
  wg("forward_l.grid", r.fields.forward.w_l);
  wg("backward_a.grid", r.fields.backward.w_a);
  wg("backward_l.grid", r.fields.backward.w_l);
  write_trace_csv(dir / "trace.csv", r.trace);
  write_breakdown_csv(dir / "loss.csv", r.trace.back().loss);
  write_manifest(dir / "manifest.txt", "estimate", cfg.canonical(), cfg.solver.seed, {p1, p2});
  std::cout << "estimate: final loss " << fmt_g(r.trace.back().loss.total) << ", "
            << (r.converged ? "converged" : "stopped at the iteration cap") << ", fields in "
            << dir.string() << "\n";
  return r.converged ? 0 : 2;
}

int run_strain(const ExperimentConfig& cfg, const std::string& path,
               const std::string& direction) {
  const fs::path dir = ensure_outdir(cfg);
  const RfFrame f = read_frame(path);
  const StrainDirection d =
      direction == "lateral" ? StrainDirection::lateral : StrainDirection::axial;
  for (int w : cfg.strain_windows) {
    const StrainField s = lsq_strain(f.samples, w, d);
    const std::string stem = "strain_w" + std::to_string(w);
    write_evgrid(dir / (stem + ".grid"), s.values, f.fs, f.fc, f.c, f.line_pitch);
    write_pgm(dir / (stem + ".pgm"), s.values);
  }
  write_manifest(dir / "manifest.txt", "strain", cfg.canonical(), 0, {path});
  std::cout << "strain: " << cfg.strain_windows.size() << " window(s) written to " << dir.string()
            << "\n";
  return 0;
}

struct MethodRun {
  std::string name;
  std::string path;
  RfFrame frame;  // samples = axial displacement; metadata reused for outputs
};

// "NAME=PATH", or a bare path whose stem becomes the name.
MethodRun parse_method(const std::string& spec) {
  MethodRun m;
  const std::size_t eq = spec.find('=');
  if (eq != std::string::npos && eq > 0) {
    m.name = spec.substr(0, eq);
    m.path = spec.substr(eq + 1);
  } else {
    m.path = spec;
    m.name = fs::path(spec).stem().string();
  }
  m.frame = read_frame(m.path);
  return m;
}

void write_pvalue_matrix(const fs::path& path, const std::vector<std::string>& names,
                         const std::vector<std::vector<double>>& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const std::string& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i];
    for (std::size_t j = 0; j < names.size(); ++j) out << ',' << fmt_g(p[i][j]);
    out << '\n';
  }
}

int run_evaluate(const ExperimentConfig& cfg, const std::vector<std::string>& specs,
                 const std::string& truth_path, int jobs) {
  const fs::path dir = ensure_outdir(cfg);
  std::vector<MethodRun> methods;
  for (const std::string& s : specs) methods.push_back(parse_method(s));
  const int rows = methods.front().frame.rows(), cols = methods.front().frame.cols();
  for (const MethodRun& m : methods)
    if (m.frame.rows() != rows || m.frame.cols() != cols)
      throw std::invalid_argument("evaluate: '" + m.name +
                                  "' has a different grid shape; paired comparisons need one "
                                  "patch grid across methods");
  cfg.metrics.validate(rows, cols);

  std::optional<RealGrid> truth;
  if (!truth_path.empty()) {
    truth = read_frame(truth_path).samples;
    if (truth->rows() != rows || truth->cols() != cols)
      throw std::invalid_argument("evaluate: ground truth shape differs from the method grids");
  }

  const std::vector<int>& wins = cfg.strain_windows;
  std::vector<RealGrid> truth_strain;
  if (truth)
    for (int w : wins) truth_strain.push_back(lsq_strain(*truth, w, StrainDirection::axial).values);

  struct Cell {
    RealGrid strain;
    MetricReport report;
  };
  std::vector<Cell> cells(methods.size() * wins.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  const auto worker = [&](std::size_t slot) {
    try {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) break;
        const std::size_t mi = i / wins.size(), wi = i % wins.size();
        Cell& c = cells[i];
        c.strain = lsq_strain(methods[mi].frame.samples, wins[wi], StrainDirection::axial).values;
        c.report = patch_sweep(c.strain, cfg.metrics);
        if (truth) c.report.ssim = ssim(c.strain, truth_strain[wi]);
      }
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker, static_cast<std::size_t>(j));
  worker(0);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  nlohmann::json summary;
  summary["config_hash"] = std::to_string(fnv1a64(cfg.canonical()));
  summary["windows"] = wins;
  summary["methods"] = nlohmann::json::array();

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    nlohmann::json jm;
    jm["name"] = methods[mi].name;
    if (truth) {
      double abs_sum = 0.0, sq_sum = 0.0;
      for (int a = 0; a < rows; ++a)
        for (int l = 0; l < cols; ++l) {
          const double d = methods[mi].frame.samples(a, l) - (*truth)(a, l);
          abs_sum += std::abs(d);
          sq_sum += d * d;
        }
      const double n = static_cast<double>(rows) * cols;
      jm["displacement_mae"] = abs_sum / n;
      jm["displacement_rmse"] = std::sqrt(sq_sum / n);
    }
    jm["windows"] = nlohmann::json::array();
    for (std::size_t wi = 0; wi < wins.size(); ++wi) {
      const Cell& c = cells[mi * wins.size() + wi];
      const std::string stem = "strain_" + methods[mi].name + "_w" + std::to_string(wins[wi]);
      const RfFrame& meta = methods[mi].frame;
      write_evgrid(dir / (stem + ".grid"), c.strain, meta.fs, meta.fc, meta.c,
                   meta.line_pitch);
      write_pgm(dir / (stem + ".pgm"), c.strain);

      std::ofstream rep(dir / ("report_" + methods[mi].name + "_w" + std::to_string(wins[wi]) +
                               ".csv"),
                        std::ios::binary);
      if (!rep) throw std::runtime_error("cannot write report CSV in " + dir.string());
      rep << "cnr_mean,cnr_std,sr_mean,sr_std,cnr_degenerate,sr_degenerate,patches";
      if (c.report.ssim) rep << ",ssim";
      rep << '\n'
          << fmt_g(c.report.cnr_mean) << ',' << fmt_g(c.report.cnr_std) << ','
          << fmt_g(c.report.sr_mean) << ',' << fmt_g(c.report.sr_std) << ','
          << c.report.cnr_degenerate << ',' << c.report.sr_degenerate << ','
          << c.report.cnr_values.size();
      if (c.report.ssim) rep << ',' << fmt_g(*c.report.ssim);
      rep << '\n' << "patch,cnr,sr\n";
      for (std::size_t p = 0; p < c.report.cnr_values.size(); ++p)
        rep << p << ',' << fmt_g(c.report.cnr_values[p]) << ',' << fmt_g(c.report.sr_values[p])
            << '\n';

      nlohmann::json jw;
      jw["window"] = wins[wi];
      jw["cnr_mean"] = c.report.cnr_mean;
      jw["cnr_std"] = c.report.cnr_std;
      jw["sr_mean"] = c.report.sr_mean;
      jw["sr_std"] = c.report.sr_std;
      if (c.report.ssim) jw["ssim"] = *c.report.ssim;
      jm["windows"].push_back(jw);
    }
    summary["methods"].push_back(jm);
  }

  if (methods.size() >= 2) {
    // Pairwise two-treatment rank tests; blocks are (window, patch) pairs.
    std::vector<std::string> names;
    for (const MethodRun& m : methods) names.push_back(m.name);
    const auto matrix_for = [&](bool use_cnr) {
      std::vector<std::vector<double>> p(methods.size(),
                                         std::vector<double>(methods.size(), 1.0));
      for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
          std::vector<std::vector<double>> blocks;
          for (std::size_t wi = 0; wi < wins.size(); ++wi) {
            const MetricReport& ri = cells[i * wins.size() + wi].report;
            const MetricReport& rj = cells[j * wins.size() + wi].report;
            const auto& vi = use_cnr ? ri.cnr_values : ri.sr_values;
            const auto& vj = use_cnr ? rj.cnr_values : rj.sr_values;
            for (std::size_t k = 0; k < vi.size(); ++k) blocks.push_back({vi[k], vj[k]});
          }
          const FriedmanResult f = friedman(blocks);
          p[i][j] = p[j][i] = f.p_value;
        }
      return p;
    };
    const auto cnr_p = matrix_for(true);
    const auto sr_p = matrix_for(false);
    write_pvalue_matrix(dir / "friedman_cnr.csv", names, cnr_p);
    write_pvalue_matrix(dir / "friedman_sr.csv", names, sr_p);
    summary["friedman"] = {{"names", names}, {"cnr_p", cnr_p}, {"sr_p", sr_p}};
  }

  {
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write summary.json in " + dir.string());
    out << summary.dump(2) << '\n';
  }
  std::vector<std::string> inputs = specs;
  if (!truth_path.empty()) inputs.push_back(truth_path);
  write_manifest(dir / "manifest.txt", "evaluate", cfg.canonical(), 0, inputs);
  std::cout << "evaluate: " << methods.size() << " method(s) x " << wins.size()
            << " window(s) written to " << dir.string() << "\n";
  return 0;
}

int run_gradcheck(std::uint64_t seed, int rows, int cols, bool perturb) {
  const GradCheckReport r = gradcheck(seed, rows, cols, perturb);
  std::cout << r.text();
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "strainflow: quasi-static ultrasound strain imaging via direct minimization of a "
      "regularized bi-directional motion objective"};
  app.require_subcommand(1);

  ConfigArgs sim_cfg, est_cfg, str_cfg, eval_cfg;

  CLI::App* sim = app.add_subcommand("simulate", "Render a compressed speckle phantom pair");
  sim_cfg.attach(sim);

  CLI::App* est = app.add_subcommand(
      "estimate", "Estimate forward and backward displacement between two frames");
  std::string est_i1, est_i2;
  est->add_option("i1", est_i1, "Pre-compression frame (EVGRID or CSV)")->required();
  est->add_option("i2", est_i2, "Post-compression frame (EVGRID or CSV)")->required();
  est_cfg.attach(est);

  CLI::App* str = app.add_subcommand(
      "strain", "Least-squares strain of a displacement component at each configured window");
  std::string str_input, str_direction = "axial";
  str->add_option("displacement", str_input, "Displacement component EVGRID")->required();
  str->add_option("--direction", str_direction, "Derivative direction")
      ->check(CLI::IsMember({"axial", "lateral"}));
  str_cfg.attach(str);

  CLI::App* eval = app.add_subcommand(
      "evaluate", "Strain, CNR/SR reports, and rank tests for one or more method runs");
  std::vector<std::string> eval_specs;
  std::string eval_truth;
  int eval_jobs = 1;
  eval->add_option("methods", eval_specs,
                   "Axial displacement EVGRIDs, each NAME=PATH (or a bare path)")
      ->required();
  eval->add_option("--truth", eval_truth, "Ground-truth axial displacement EVGRID")
      ->check(CLI::ExistingFile);
  eval->add_option("--jobs", eval_jobs, "Worker threads for (method, window) cells")
      ->check(CLI::PositiveNumber);
  eval_cfg.attach(eval);

  CLI::App* grad = app.add_subcommand(
      "gradcheck", "Compare analytic loss gradients against central finite differences");
  std::uint64_t grad_seed = 0;
  int grad_rows = 16, grad_cols = 12;
  bool grad_perturb = false;
  grad->add_option("--seed", grad_seed, "Random instance seed");
  grad->add_option("--rows", grad_rows, "Frame rows (>= 12)");
  grad->add_option("--cols", grad_cols, "Frame cols (>= 12)");
  grad->add_flag("--perturb", grad_perturb,
                 "Deliberately corrupt one gradient entry (negative control, exits 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_cfg.build());
    if (est->parsed()) return run_estimate(est_cfg.build(), est_i1, est_i2);
    if (str->parsed()) return run_strain(str_cfg.build(), str_input, str_direction);
    if (eval->parsed()) return run_evaluate(eval_cfg.build(), eval_specs, eval_truth, eval_jobs);
    if (grad->parsed()) return run_gradcheck(grad_seed, grad_rows, grad_cols, grad_perturb);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
