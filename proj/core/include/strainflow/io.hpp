#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "strainflow/grid.hpp"
#include "strainflow/rf_frame.hpp"
#include "strainflow/solver.hpp"

namespace strainflow {

// EVGRID: one ASCII header line
//   "EVGRID <rows> <cols> <fs> <fc> <c> <line_pitch>\n"
// followed by row-major 64-bit little-endian floating-point samples.
void write_evgrid(const std::filesystem::path& path, const RealGrid& grid, double fs,
                  double fc, double c, double line_pitch);
RfFrame read_evgrid(const std::filesystem::path& path);

// Writes frame samples + metadata as EVGRID.
void write_frame(const std::filesystem::path& path, const RfFrame& frame);

// Reads EVGRID, or for a ".csv" suffix a comma-separated table (one row per
// axial sample) with default acquisition metadata.
RfFrame read_frame(const std::filesystem::path& path);

// 8-bit binary PGM, min-max normalized; constant input renders black.
void write_pgm(const std::filesystem::path& path, const RealGrid& grid);

// Convergence trace CSV: header + one row per accepted iterate.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

// Loss breakdown CSV: header + a single row.
void write_breakdown_csv(const std::filesystem::path& path, const LossBreakdown& loss);

// FNV-1a 64-bit hash, used to fingerprint canonical config text.
std::uint64_t fnv1a64(std::string_view text);

// Plain-text run manifest: command, config hash, seed, inputs, and the full
// canonical config. Contains nothing volatile, so identical runs produce
// identical bytes.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::string& canonical_config, std::uint64_t seed,
                    const std::vector<std::string>& inputs);

}  // namespace strainflow
