#include "varwass/grid.hpp"

#include <cmath>
#include <string>

#include "varwass/error.hpp"

namespace varwass {

namespace {

void require_cells(std::size_t got, const Grid& g) {
  if (got != g.n_cells()) {
    throw Error(ErrorCode::size_mismatch,
                "cell field has " + std::to_string(got) + " entries, grid has " +
                    std::to_string(g.n_cells()) + " cells");
  }
}

void require_faces(std::size_t got, const Grid& g) {
  if (got != g.n_faces()) {
    throw Error(ErrorCode::size_mismatch,
                "face field has " + std::to_string(got) + " entries, grid has " +
                    std::to_string(g.n_faces()) + " faces");
  }
}

}  // namespace

Grid::Grid(double a, double b, std::size_t n_cells)
    : a_(a), b_(b), dx_(0.0) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b) || n_cells < 2) {
    throw Error(ErrorCode::invalid_domain,
                "grid needs a < b and at least two cells");
  }
  dx_ = (b - a) / static_cast<double>(n_cells);
  centers_.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    centers_[i] = a + (static_cast<double>(i) + 0.5) * dx_;
  }
}

Grid make_grid(double a, double b, std::size_t n_cells) {
  return Grid(a, b, n_cells);
}

FaceField gradient(const CellField& u, const Grid& g) {
  require_cells(u.size(), g);
  const std::size_t n = g.n_cells();
  FaceField f(n + 1);
  for (std::size_t i = 1; i < n; ++i) {
    f[i] = (u[i] - u[i - 1]) / g.dx();
  }
  return f;
}

CellField divergence(const FaceField& f, const Grid& g) {
  require_faces(f.size(), g);
  const std::size_t n = g.n_cells();
  if (f[0] != 0.0 || f[n] != 0.0) {
    throw Error(ErrorCode::nonzero_boundary_flux,
                "divergence of a flux with nonzero boundary values");
  }
  CellField d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = (f[i + 1] - f[i]) / g.dx();
  }
  return d;
}

double integrate(const CellField& u, const Grid& g) {
  require_cells(u.size(), g);
  double s = 0.0;
  for (double v : u.values) s += v;
  return s * g.dx();
}

FaceField face_average(const CellField& u, const Grid& g) {
  require_cells(u.size(), g);
  const std::size_t n = g.n_cells();
  FaceField f(n + 1);
  for (std::size_t i = 1; i < n; ++i) f[i] = 0.5 * (u[i - 1] + u[i]);
  return f;
}

CellField cell_average(const FaceField& f, const Grid& g) {
  require_faces(f.size(), g);
  const std::size_t n = g.n_cells();
  CellField c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = 0.5 * (f[i] + f[i + 1]);
  return c;
}

}  // namespace varwass
