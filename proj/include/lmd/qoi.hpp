#pragma once
// Morphology metrics extracted from field snapshots, and the
// surrogate-vs-reference error table computed from them.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "lmd/field.hpp"

namespace lmd {

struct Polyline {
  // (x, y) in physical units. x is continuous (unwrapped) across the
  // periodic seam; for closed polylines the last point repeats the first
  // (possibly shifted by one period).
  std::vector<std::array<double, 2>> pts;
  bool closed = false;
};

struct InterfaceContour {
  std::vector<Polyline> lines;
  double period = 0.0;  // W * dx

  bool empty() const { return lines.empty(); }
};

// Marching-squares extraction of the phi = 0.5 level set with linear
// interpolation; periodic in x, saddle cells resolved by the cell-average
// rule. Uniform fields yield an empty contour.
InterfaceContour extract_interface(const std::vector<double>& phi, int H,
                                   int W, double dx);
InterfaceContour extract_interface(const FieldState& s);

double perimeter(const InterfaceContour& contour);

// Mean |kappa| by the three-point Menger formula, evaluated at each
// contour vertex with neighbors one `spacing` (typically dx) of arclength
// to either side; open-polyline vertices closer than that to an endpoint
// are excluded. Throws when no vertex qualifies.
double mean_abs_curvature(const InterfaceContour& contour, double spacing);

// Deepest liquid row below the initial interface row r0, in length units.
double penetration_depth(const FieldState& s, int r0);

// Concentrations integrated over the solid region (phi >= 0.5).
void species_volumes(const FieldState& s, double& vol_A, double& vol_B);

// Per column: solid cells strictly above the deepest liquid row, averaged
// over columns where that count is positive.
double mean_ligament_height(const FieldState& s);

struct QoiRecord {
  double time = 0.0;
  double perimeter = 0.0;
  double mean_abs_curvature = 0.0;
  double penetration_depth = 0.0;
  double vol_A = 0.0;
  double vol_B = 0.0;
  double mean_ligament_height = 0.0;
};

inline constexpr const char* kQoiNames[6] = {
    "perimeter",         "mean_abs_curvature", "penetration_depth",
    "vol_A",             "vol_B",              "mean_ligament_height"};

QoiRecord qoi_record(const FieldState& s, int r0);
std::vector<QoiRecord> qoi_series(const std::vector<FieldState>& traj, int r0);

// Per-QoI relative L2 between series; the reference is linearly
// interpolated onto the prediction times. Throws when the time ranges
// do not overlap the prediction samples.
std::map<std::string, double> qoi_errors(const std::vector<QoiRecord>& pred,
                                         const std::vector<QoiRecord>& ref);

// CSV with the fixed header
// time,perimeter,mean_abs_curvature,penetration_depth,vol_A,vol_B,mean_ligament_height
void write_qoi_csv(const std::vector<QoiRecord>& series,
                   const std::string& path);
std::vector<QoiRecord> read_qoi_csv(const std::string& path);

}  // namespace lmd
