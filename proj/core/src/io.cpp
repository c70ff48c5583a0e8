#include "strainflow/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace strainflow {

static_assert(std::endian::native == std::endian::little,
              "EVGRID payload I/O assumes a little-endian host");

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::invalid_argument(path.string() + ": " + what);
}

}  // namespace

void write_evgrid(const std::filesystem::path& path, const RealGrid& grid, double fs,
                  double fc, double c, double line_pitch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "EVGRID " << grid.rows() << ' ' << grid.cols() << ' ' << fmt_double(fs) << ' '
      << fmt_double(fc) << ' ' << fmt_double(c) << ' ' << fmt_double(line_pitch) << '\n';
  out.write(reinterpret_cast<const char*>(grid.data()),
            static_cast<std::streamsize>(grid.size() * sizeof(double)));
  if (!out) fail(path, "write failed");
}

RfFrame read_evgrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  std::string header;
  if (!std::getline(in, header)) fail(path, "missing header line");

  std::istringstream hs(header);
  std::string magic;
  int rows = 0, cols = 0;
  RfFrame frame;
  hs >> magic >> rows >> cols >> frame.fs >> frame.fc >> frame.c >> frame.line_pitch;
  if (!hs || magic != "EVGRID")
    fail(path, "bad EVGRID header: \"" + header + "\"");
  if (rows < 1 || cols < 1)
    fail(path, "bad EVGRID dimensions in header: \"" + header + "\"");

  frame.samples = RealGrid(rows, cols);
  in.read(reinterpret_cast<char*>(frame.samples.data()),
          static_cast<std::streamsize>(frame.samples.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(frame.samples.size() * sizeof(double)))
    fail(path, "truncated payload (expected " + std::to_string(rows) + "x" +
                   std::to_string(cols) + " float64 samples)");
  return frame;
}

void write_frame(const std::filesystem::path& path, const RfFrame& frame) {
  write_evgrid(path, frame.samples, frame.fs, frame.fc, frame.c, frame.line_pitch);
}

RfFrame read_frame(const std::filesystem::path& path) {
  if (path.extension() != ".csv") return read_evgrid(path);

  std::ifstream in(path);
  if (!in) fail(path, "cannot open for reading");
  std::vector<std::vector<double>> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(path, "non-numeric CSV cell \"" + cell + "\"");
      }
    }
    if (!table.empty() && row.size() != table.front().size())
      fail(path, "ragged CSV row (line " + std::to_string(table.size() + 1) + ")");
    table.push_back(std::move(row));
  }
  if (table.empty() || table.front().empty()) fail(path, "empty CSV");

  RfFrame frame;  // default acquisition metadata
  frame.samples = RealGrid(static_cast<int>(table.size()), static_cast<int>(table.front().size()));
  for (int a = 0; a < frame.rows(); ++a)
    for (int l = 0; l < frame.cols(); ++l)
      frame.samples(a, l) = table[static_cast<std::size_t>(a)][static_cast<std::size_t>(l)];
  return frame;
}

void write_pgm(const std::filesystem::path& path, const RealGrid& grid) {
  double lo = grid(0, 0), hi = grid(0, 0);
  for (double x : grid) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double range = hi - lo;

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
  for (double x : grid) {
    const int v = range > 0.0 ? static_cast<int>(std::lround(255.0 * (x - lo) / range)) : 0;
    out.put(static_cast<char>(static_cast<unsigned char>(v)));
  }
  if (!out) fail(path, "write failed");
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out << "iteration,level,data,smoothness,consistency,total\n";
  for (const TraceRow& row : trace)
    out << row.iteration << ',' << row.level << ',' << fmt_double(row.loss.data) << ','
        << fmt_double(row.loss.smoothness) << ',' << fmt_double(row.loss.consistency) << ','
        << fmt_double(row.loss.total) << '\n';
  if (!out) fail(path, "write failed");
}

void write_breakdown_csv(const std::filesystem::path& path, const LossBreakdown& loss) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out << "data,smoothness,consistency,total\n";
  out << fmt_double(loss.data) << ',' << fmt_double(loss.smoothness) << ','
      << fmt_double(loss.consistency) << ',' << fmt_double(loss.total) << '\n';
  if (!out) fail(path, "write failed");
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::string& canonical_config, std::uint64_t seed,
                    const std::vector<std::string>& inputs) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config)));
  out << "command = " << command << '\n';
  out << "config_hash = " << hash << '\n';
  out << "seed = " << seed << '\n';
  for (const std::string& in_path : inputs) out << "input = " << in_path << '\n';
  out << "[config]\n" << canonical_config;
  if (!out) fail(path, "write failed");
}

}  // namespace strainflow
