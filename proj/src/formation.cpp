#include "edgeform/formation.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

namespace edgeform {
namespace {

constexpr std::array<std::pair<Shape, std::string_view>, 7> kShapeNames{{
    {Shape::grid, "grid"},
    {Shape::circle, "circle"},
    {Shape::square, "square"},
    {Shape::cross, "cross"},
    {Shape::line, "line"},
    {Shape::cube, "cube"},
    {Shape::spiral, "spiral"},
}};

void center_xy(Points& p) {
  const Eigen::Vector2d c = p.topRows(2).rowwise().mean();
  p.topRows(2).colwise() -= c;
}

Points grid(int n, double s) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  Points p = Points::Zero(3, n);
  for (int i = 0; i < n; ++i) {
    p(0, i) = (i % cols) * s;
    p(1, i) = (i / cols) * s;
  }
  center_xy(p);
  return p;
}

Points circle(int n, double s) {
  Points p = Points::Zero(3, n);
  if (n == 1) return p;
  const double radius = s / (2.0 * std::sin(std::numbers::pi / n));
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    p(0, i) = radius * std::cos(a);
    p(1, i) = radius * std::sin(a);
  }
  return p;
}

// Points walk the perimeter counter-clockwise from the lower-left corner,
// `s` apart along the boundary.
Points square(int n, double s) {
  Points p = Points::Zero(3, n);
  if (n == 1) return p;
  const double side = n * s / 4.0;
  for (int i = 0; i < n; ++i) {
    const double arc = i * s;
    const int leg = std::min(3, static_cast<int>(arc / side));
    const double along = arc - leg * side;
    double x = 0.0, y = 0.0;
    switch (leg) {
      case 0: x = along; y = 0.0; break;
      case 1: x = side; y = along; break;
      case 2: x = side - along; y = side; break;
      default: x = 0.0; y = side - along; break;
    }
    p(0, i) = x - side / 2.0;
    p(1, i) = y - side / 2.0;
  }
  return p;
}

Points cross(int n, double s) {
  Points p = Points::Zero(3, n);
  int first = 0;
  if (n % 2 == 1) first = 1;  // odd counts keep a center point
  constexpr std::array<std::array<int, 2>, 4> arms{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  for (int i = first; i < n; ++i) {
    const int k = i - first;
    const auto& arm = arms[k % 4];
    const double dist = (k / 4 + 1) * s;
    p(0, i) = arm[0] * dist;
    p(1, i) = arm[1] * dist;
  }
  return p;
}

Points line(int n, double s) {
  Points p = Points::Zero(3, n);
  for (int i = 0; i < n; ++i) p(0, i) = (i - (n - 1) / 2.0) * s;
  return p;
}

Points cube(int n, double s) {
  int side = 1;
  while (side * side * side < n) ++side;
  Points p = Points::Zero(3, n);
  for (int i = 0; i < n; ++i) {
    p(0, i) = (i % side) * s;
    p(1, i) = ((i / side) % side) * s;
    p(2, i) = (i / (side * side)) * s;
  }
  const Eigen::Vector3d c = p.rowwise().mean();
  p.colwise() -= c;
  return p;
}

// Archimedean spiral r = b * theta with turn spacing s; consecutive points are
// placed an arc length of about s apart.
Points spiral(int n, double s) {
  Points p = Points::Zero(3, n);
  const double b = s / (2.0 * std::numbers::pi);
  double theta = 2.0 * std::numbers::pi;  // start one turn out, radius s
  for (int i = 0; i < n; ++i) {
    const double r = b * theta;
    p(0, i) = r * std::cos(theta);
    p(1, i) = r * std::sin(theta);
    theta += s / r;
  }
  center_xy(p);
  return p;
}

}  // namespace

std::string_view to_string(Shape shape) {
  for (const auto& [s, name] : kShapeNames)
    if (s == shape) return name;
  return "grid";
}

Shape parse_shape(std::string_view name) {
  for (const auto& [s, n] : kShapeNames)
    if (n == name) return s;
  throw UnsupportedShape(fmt::format("unsupported formation shape '{}'", name));
}

FormationTemplate formation_offsets(Shape shape, int count, double spacing, double height) {
  if (count < 1) throw ParameterError("formation needs at least one drone");
  if (!(spacing > 0.0)) throw ParameterError("formation spacing must be positive");
  FormationTemplate t{shape, {}};
  switch (shape) {
    case Shape::grid: t.offsets = grid(count, spacing); break;
    case Shape::circle: t.offsets = circle(count, spacing); break;
    case Shape::square: t.offsets = square(count, spacing); break;
    case Shape::cross: t.offsets = cross(count, spacing); break;
    case Shape::line: t.offsets = line(count, spacing); break;
    case Shape::cube: t.offsets = cube(count, spacing); break;
    case Shape::spiral: t.offsets = spiral(count, spacing); break;
  }
  t.offsets.row(2).array() += height;
  return t;
}

}  // namespace edgeform
