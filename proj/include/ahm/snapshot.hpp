#pragma once

#include <string>
#include <vector>

#include "ahm/grid2d.hpp"

namespace ahm {

struct NamedComponent {
    std::string name;
    ScalarField2 values;
};

struct Snapshot {
    Grid2 grid;
    std::vector<NamedComponent> components;

    const ScalarField2& component(const std::string& name) const;
};

// AHMF1 binary layout: magic "AHMF0001", then little-endian u32 points_per_axis,
// f64 half_width, u32 component_count, per component u32 length + UTF-8 name,
// then component_count row-major f64 arrays.
void write_snapshot(const std::string& path, const Snapshot& s);
Snapshot read_snapshot(const std::string& path);

// Plot-ready table: x, y, then one column per component.
void write_snapshot_csv(const std::string& path, const Snapshot& s);

}  // namespace ahm
