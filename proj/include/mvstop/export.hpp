#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/hjb_regularized.hpp"
#include "mvstop/vi_limit.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvstop {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Header `t,x,value`, one row per lattice node, time-major. stride > 1
/// keeps every stride-th time slice plus the last one.
void write_field_csv(const std::filesystem::path& path, const GridField& field, int stride = 1);
void write_mask_csv(const std::filesystem::path& path, const MaskMatrix& mask, const Grid& grid,
                    double horizon, int stride = 1);
/// Header `t,c`, one row per crossing.
void write_boundary_csv(const std::filesystem::path& path, const BoundaryCurve& curve,
                        const Grid& grid, double horizon, int stride = 1);

/// Reads a full-resolution field written by write_field_csv; the (t, x)
/// columns must reproduce the lattice exactly.
GridField read_field_csv(const std::filesystem::path& path, const Grid& grid, double horizon);
MaskMatrix read_mask_csv(const std::filesystem::path& path, const Grid& grid, double horizon);
BoundaryCurve read_boundary_csv(const std::filesystem::path& path, const Grid& grid,
                                double horizon);

/// V.csv, g.csv, h.csv, pi.csv.
std::vector<std::string> export_hjb(const HJBSolution& sol, const std::filesystem::path& dir,
                                    int stride = 1);
/// V.csv, g.csv, h.csv, stop_mask.csv, boundary.csv.
std::vector<std::string> export_vi(const VISolution& sol, const std::filesystem::path& dir,
                                   int stride = 1);

VISolution import_vi(const std::filesystem::path& dir, const ProblemSpec& spec, const Grid& grid);
/// Loads V, g and pi; h is recomputed.
HJBSolution import_hjb(const std::filesystem::path& dir, const ProblemSpec& spec,
                       const Grid& grid);

}  // namespace mvstop
