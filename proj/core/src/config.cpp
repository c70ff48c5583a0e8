#include "strainflow/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace strainflow {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-integer value '" + v + "'");
  }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::istringstream s(v);
  std::string cell;
  while (std::getline(s, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) continue;
    out.push_back(static_cast<int>(to_int(key, cell)));
  }
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' has an empty list");
  return out;
}

Rect to_rect(const std::string& key, const std::string& v) {
  std::istringstream s(v);
  Rect r;
  if (!(s >> r.a0 >> r.l0 >> r.height >> r.width))
    throw std::invalid_argument("config: key '" + key +
                                "' must be four integers \"a0 l0 height width\", got '" + v + "'");
  std::string rest;
  if (s >> rest)
    throw std::invalid_argument("config: key '" + key + "' has trailing content '" + rest + "'");
  return r;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "phantom.rows", "phantom.cols", "phantom.scatterer_density", "phantom.psf_axial_sigma",
      "phantom.psf_lateral_sigma", "phantom.psf_center_freq_cycles", "phantom.background_strain",
      "phantom.noise_snr_db", "phantom.seed",
      "frame.fs", "frame.fc", "frame.c", "frame.line_pitch",
      "solver.pyramid_levels", "solver.iterations_per_level", "solver.base_step",
      "solver.moment_decay", "solver.convergence_tol", "solver.convergence_window", "solver.seed",
      "loss.alpha_data", "loss.alpha_reg", "loss.epsilon", "loss.beta", "loss.lambda",
      "loss.gamma", "loss.window",
      "strain.windows",
      "metrics.target", "metrics.background", "metrics.patch", "metrics.stride",
      "output_dir",
  };
  return keys;
}

const std::set<std::string>& inclusion_keys() {
  static const std::set<std::string> keys = {"center_a", "center_l", "radius", "strain_ratio"};
  return keys;
}

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool in_block = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t == "[inclusion]") {
        map.inclusions.emplace_back();
        in_block = true;
        continue;
      }
      throw std::invalid_argument("config: unknown section '" + t + "' (line " +
                                  std::to_string(line_no) + ")");
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected 'key = value' (line " +
                                  std::to_string(line_no) + "): '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key (line " + std::to_string(line_no) + ")");
    if (in_block)
      map.inclusions.back()[key] = value;
    else
      map.values[key] = value;
  }
  return map;
}

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_string(text.str());
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  values[trim(key)] = trim(value);
}

ExperimentConfig ExperimentConfig::from_config(const ConfigMap& map) {
  for (const auto& [key, value] : map.values)
    if (!known_keys().count(key))
      throw std::invalid_argument("config: unknown key '" + key + "'");
  for (const auto& block : map.inclusions)
    for (const auto& [key, value] : block)
      if (!inclusion_keys().count(key))
        throw std::invalid_argument("config: unknown inclusion key '" + key + "'");

  ExperimentConfig cfg;
  const auto get = [&](const char* key) -> const std::string* {
    const auto it = map.values.find(key);
    return it == map.values.end() ? nullptr : &it->second;
  };
  const auto set_d = [&](const char* key, double& dst) {
    if (const std::string* v = get(key)) dst = to_double(key, *v);
  };
  const auto set_i = [&](const char* key, int& dst) {
    if (const std::string* v = get(key)) dst = static_cast<int>(to_int(key, *v));
  };
  const auto set_u64 = [&](const char* key, std::uint64_t& dst) {
    if (const std::string* v = get(key)) dst = static_cast<std::uint64_t>(to_int(key, *v));
  };

  set_i("phantom.rows", cfg.phantom.rows);
  set_i("phantom.cols", cfg.phantom.cols);
  set_d("phantom.scatterer_density", cfg.phantom.scatterer_density);
  set_d("phantom.psf_axial_sigma", cfg.phantom.psf_axial_sigma);
  set_d("phantom.psf_lateral_sigma", cfg.phantom.psf_lateral_sigma);
  set_d("phantom.psf_center_freq_cycles", cfg.phantom.psf_center_freq_cycles);
  set_d("phantom.background_strain", cfg.phantom.background_strain);
  set_d("phantom.noise_snr_db", cfg.phantom.noise_snr_db);
  set_u64("phantom.seed", cfg.phantom.seed);

  set_d("frame.fs", cfg.phantom.fs);
  set_d("frame.fc", cfg.phantom.fc);
  set_d("frame.c", cfg.phantom.c);
  set_d("frame.line_pitch", cfg.phantom.line_pitch);

  set_i("solver.pyramid_levels", cfg.solver.pyramid_levels);
  set_i("solver.iterations_per_level", cfg.solver.iterations_per_level);
  set_d("solver.base_step", cfg.solver.base_step);
  set_d("solver.moment_decay", cfg.solver.moment_decay);
  set_d("solver.convergence_tol", cfg.solver.convergence_tol);
  set_i("solver.convergence_window", cfg.solver.convergence_window);
  set_u64("solver.seed", cfg.solver.seed);

  set_d("loss.alpha_data", cfg.solver.weights.alpha_data);
  set_d("loss.alpha_reg", cfg.solver.weights.alpha_reg);
  set_d("loss.epsilon", cfg.solver.weights.epsilon);
  set_d("loss.beta", cfg.solver.weights.beta);
  set_d("loss.lambda", cfg.solver.weights.lambda);
  set_d("loss.gamma", cfg.solver.weights.gamma);
  set_i("loss.window", cfg.solver.weights.window);

  if (const std::string* v = get("strain.windows"))
    cfg.strain_windows = to_int_list("strain.windows", *v);

  if (const std::string* v = get("metrics.target")) cfg.metrics.target = to_rect("metrics.target", *v);
  if (const std::string* v = get("metrics.background"))
    cfg.metrics.background = to_rect("metrics.background", *v);
  set_i("metrics.patch", cfg.metrics.patch);
  set_i("metrics.stride", cfg.metrics.stride);

  if (const std::string* v = get("output_dir")) cfg.output_dir = *v;

  for (const auto& block : map.inclusions) {
    Inclusion inc;
    const auto bget = [&](const char* key, double& dst) {
      const auto it = block.find(key);
      if (it != block.end()) dst = to_double(key, it->second);
    };
    bget("center_a", inc.center_a);
    bget("center_l", inc.center_l);
    bget("radius", inc.radius);
    bget("strain_ratio", inc.strain_ratio);
    cfg.phantom.inclusions.push_back(inc);
  }
  return cfg;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "phantom.rows = " << phantom.rows << '\n';
  out << "phantom.cols = " << phantom.cols << '\n';
  out << "phantom.scatterer_density = " << fmt_double(phantom.scatterer_density) << '\n';
  out << "phantom.psf_axial_sigma = " << fmt_double(phantom.psf_axial_sigma) << '\n';
  out << "phantom.psf_lateral_sigma = " << fmt_double(phantom.psf_lateral_sigma) << '\n';
  out << "phantom.psf_center_freq_cycles = " << fmt_double(phantom.psf_center_freq_cycles)
      << '\n';
  out << "phantom.background_strain = " << fmt_double(phantom.background_strain) << '\n';
  out << "phantom.noise_snr_db = " << fmt_double(phantom.noise_snr_db) << '\n';
  out << "phantom.seed = " << phantom.seed << '\n';
  out << "frame.fs = " << fmt_double(phantom.fs) << '\n';
  out << "frame.fc = " << fmt_double(phantom.fc) << '\n';
  out << "frame.c = " << fmt_double(phantom.c) << '\n';
  out << "frame.line_pitch = " << fmt_double(phantom.line_pitch) << '\n';
  out << "solver.pyramid_levels = " << solver.pyramid_levels << '\n';
  out << "solver.iterations_per_level = " << solver.iterations_per_level << '\n';
  out << "solver.base_step = " << fmt_double(solver.base_step) << '\n';
  out << "solver.moment_decay = " << fmt_double(solver.moment_decay) << '\n';
  out << "solver.convergence_tol = " << fmt_double(solver.convergence_tol) << '\n';
  out << "solver.convergence_window = " << solver.convergence_window << '\n';
  out << "solver.seed = " << solver.seed << '\n';
  out << "loss.alpha_data = " << fmt_double(solver.weights.alpha_data) << '\n';
  out << "loss.alpha_reg = " << fmt_double(solver.weights.alpha_reg) << '\n';
  out << "loss.epsilon = " << fmt_double(solver.weights.epsilon) << '\n';
  out << "loss.beta = " << fmt_double(solver.weights.beta) << '\n';
  out << "loss.lambda = " << fmt_double(solver.weights.lambda) << '\n';
  out << "loss.gamma = " << fmt_double(solver.weights.gamma) << '\n';
  out << "loss.window = " << solver.weights.window << '\n';
  out << "strain.windows = ";
  for (std::size_t i = 0; i < strain_windows.size(); ++i)
    out << (i ? "," : "") << strain_windows[i];
  out << '\n';
  out << "metrics.target = " << metrics.target.a0 << ' ' << metrics.target.l0 << ' '
      << metrics.target.height << ' ' << metrics.target.width << '\n';
  out << "metrics.background = " << metrics.background.a0 << ' ' << metrics.background.l0 << ' '
      << metrics.background.height << ' ' << metrics.background.width << '\n';
  out << "metrics.patch = " << metrics.patch << '\n';
  out << "metrics.stride = " << metrics.stride << '\n';
  out << "output_dir = " << output_dir << '\n';
  for (const Inclusion& inc : phantom.inclusions) {
    out << "[inclusion]\n";
    out << "center_a = " << fmt_double(inc.center_a) << '\n';
    out << "center_l = " << fmt_double(inc.center_l) << '\n';
    out << "radius = " << fmt_double(inc.radius) << '\n';
    out << "strain_ratio = " << fmt_double(inc.strain_ratio) << '\n';
  }
  return out.str();
}

std::vector<std::string> ExperimentConfig::key_names() {
  return {known_keys().begin(), known_keys().end()};
}

std::string ExperimentConfig::key_help() {
  std::string help = "Config keys (key = value):\n";
  for (const std::string& k : known_keys()) help += "  " + k + "\n";
  help +=
      "Repeatable [inclusion] blocks accept: center_a, center_l, radius, strain_ratio.\n"
      "strain.windows is a comma list; metrics.target/background are \"a0 l0 height width\".\n";
  return help;
}

}  // namespace strainflow
