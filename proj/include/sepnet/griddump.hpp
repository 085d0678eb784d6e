#pragma once

#include <string>

#include "sepnet/refsolve.hpp"

namespace sepnet {

// Binary grid container shared by the reference solvers, the test-set cache,
// and the benchmark harness. Layout: magic "SEPG", a little-endian uint64
// header length, a JSON header {shape, axes, dtype: "f64le", descriptor},
// then the values row-major as little-endian 64-bit floats.
void save_grid(const std::string& path, const GridSolution& grid);
GridSolution load_grid(const std::string& path);

}  // namespace sepnet
