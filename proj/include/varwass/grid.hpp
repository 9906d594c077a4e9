#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace varwass {

/// One value per cell.
struct CellField {
  std::vector<double> values;

  CellField() = default;
  explicit CellField(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit CellField(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// One value per face, boundary faces included (n_cells + 1 entries).
/// Face i sits at a + i*dx.
struct FaceField {
  std::vector<double> values;

  FaceField() = default;
  explicit FaceField(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit FaceField(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Uniform cell-centered grid on [a, b].
class Grid {
 public:
  Grid(double a, double b, std::size_t n_cells);

  double a() const { return a_; }
  double b() const { return b_; }
  double length() const { return b_ - a_; }
  std::size_t n_cells() const { return centers_.size(); }
  std::size_t n_faces() const { return centers_.size() + 1; }
  double dx() const { return dx_; }
  std::span<const double> centers() const { return centers_; }
  double center(std::size_t i) const { return centers_[i]; }
  double face(std::size_t i) const { return a_ + static_cast<double>(i) * dx_; }

  bool operator==(const Grid& other) const {
    return a_ == other.a_ && b_ == other.b_ && n_cells() == other.n_cells();
  }

 private:
  double a_;
  double b_;
  double dx_;
  std::vector<double> centers_;
};

/// Throws Error{invalid_domain} unless a < b and n_cells >= 2.
Grid make_grid(double a, double b, std::size_t n_cells);

/// Face differences (u[i+1]-u[i])/dx on interior faces, zero on the two
/// boundary faces.
FaceField gradient(const CellField& u, const Grid& g);

/// (f[i+1]-f[i])/dx. The flux must vanish on both boundary faces.
CellField divergence(const FaceField& f, const Grid& g);

/// Midpoint rule: sum u[i]*dx.
double integrate(const CellField& u, const Grid& g);

/// Arithmetic mean of the two adjacent cell values on interior faces, zero on
/// boundary faces.
FaceField face_average(const CellField& u, const Grid& g);

/// Mean of the two faces bounding each cell.
CellField cell_average(const FaceField& f, const Grid& g);

}  // namespace varwass
