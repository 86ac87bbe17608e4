#pragma once
// Binary snapshot ("LMDF") and model checkpoint ("LMDW") formats, and
// PNG rendering of field snapshots.

#include <memory>
#include <string>

#include "lmd/field.hpp"
#include "lmd/unet.hpp"

namespace lmd {

enum class SnapshotDtype : std::uint32_t { f32 = 0, f64 = 1 };

// Little-endian layout: magic "LMDF", version u32 = 1, H u32, W u32,
// n_fields u32 = 3, dtype u32, time f64, cA_ref f64, dx f64, then
// row-major field data in order phi, c_A, c_B.
void write_snapshot(const FieldState& s, const std::string& path,
                    double cA_ref = 0.0,
                    SnapshotDtype dtype = SnapshotDtype::f64);
FieldState read_snapshot(const std::string& path, double* cA_ref = nullptr);

// Checkpoint: magic "LMDW", version u32 = 1, length-prefixed manifest of
// (name, rank, dims) in lexicographic name order, f64 weight data in the
// same order, then the network configuration and theta normalization
// constants.
void save_checkpoint(UNet& net, const std::string& path);
std::unique_ptr<UNet> load_checkpoint(const std::string& path);

// Three side-by-side heatmaps (phi, c_A, c_B) with the phi = 0.5
// contour drawn in black. Deterministic output bytes for a given state.
void render_field(const FieldState& s, const std::string& path);

}  // namespace lmd
