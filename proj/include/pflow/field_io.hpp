#pragma once

#include "pflow/grid.hpp"

#include <string>
#include <vector>

namespace pflow {

// Snapshot format PFLOW1, little-endian:
//   magic "PFLOW1" (6 bytes), u32 nx, u32 ny, u32 ncomp,
//   f64 origin_x, f64 origin_y, f64 h,
//   then ncomp * nx * ny f64 samples row-major (component planes in order).

void write_snapshot(const std::string& path, const ScalarField& f);
void write_snapshot(const std::string& path, const VectorField& f);

struct Snapshot {
    Grid grid; // boundary defaults to open; the format does not carry it
    int ncomp = 0;
    std::vector<ArrayXd> components;
};

Snapshot read_snapshot(const std::string& path);

} // namespace pflow
