#pragma once

#include <string>
#include <string_view>

#include "edgeform/common.hpp"

namespace edgeform {

enum class Shape { grid, circle, square, cross, line, cube, spiral };

std::string_view to_string(Shape shape);
/// Throws UnsupportedShape for names outside the known set.
Shape parse_shape(std::string_view name);

struct FormationTemplate {
  Shape shape = Shape::grid;
  Points offsets;  ///< 3 x N, relative to the formation center

  int size() const { return static_cast<int>(offsets.cols()); }
};

/// Deterministic formation geometry with neighbors roughly `spacing` apart.
/// Planar shapes sit at z = height; the cube is centered on z = height.
FormationTemplate formation_offsets(Shape shape, int count, double spacing, double height);

}  // namespace edgeform
