#include "cocylab/projective.hpp"

#include "cocylab/rng.hpp"

#include <cmath>
#include <numbers>

namespace cocylab {

namespace {

VectorXd random_direction(CounterRng& rng, int d) {
  VectorXd v(d);
  do {
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
  } while (v.norm() == 0.0);
  return v.normalized();
}

// Sampled covering radius, doubled.
double sampled_diameter(const ProjectiveGrid& grid, std::size_t samples) {
  CounterRng rng(0xd1a3e7e5ULL + static_cast<std::uint64_t>(grid.dim()));
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const VectorXd v = random_direction(rng, grid.dim());
    worst = std::max(worst, sine_distance(v, grid.rep(grid.nearest(v))));
  }
  return std::min(1.0, 2.0 * worst);
}

}  // namespace

ProjectiveGrid ProjectiveGrid::make(int d, std::size_t cells) {
  require(d >= 1, "projective grid: dimension must be positive");
  ProjectiveGrid g;
  g.dim_ = d;
  if (d == 1) {
    g.reps_.push_back(VectorXd::Ones(1));
    return g;
  }
  require(cells >= 2, "projective grid: need at least 2 cells");
  g.reps_.reserve(cells);
  const double pi = std::numbers::pi;
  if (d == 2) {
    for (std::size_t c = 0; c < cells; ++c) {
      const double t = (static_cast<double>(c) + 0.5) * pi / static_cast<double>(cells);
      VectorXd v(2);
      v << std::cos(t), std::sin(t);
      g.reps_.push_back(v);
    }
    g.diameter_ = std::sin(pi / static_cast<double>(cells));
    return g;
  }
  if (d == 3) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    const double n = static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      const double z = (static_cast<double>(i) + 0.5) / n;
      const double r = std::sqrt(1.0 - z * z);
      const double phi = golden * static_cast<double>(i);
      VectorXd v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      g.reps_.push_back(v);
    }
    g.band_ = 2.0 * std::sqrt(2.0 * pi / n);
    g.diameter_ = sampled_diameter(g, 4 * cells);
    return g;
  }
  CounterRng rng(0x9f0e5ULL + static_cast<std::uint64_t>(d));
  for (std::size_t c = 0; c < cells; ++c) {
    VectorXd v = random_direction(rng, d);
    if (v(0) < 0) v = -v;
    g.reps_.push_back(v);
  }
  g.diameter_ = sampled_diameter(g, 4 * cells);
  return g;
}

ProjectiveGrid ProjectiveGrid::standard(int d) {
  switch (d) {
    case 1: return make(1, 1);
    case 2: return make(2, 720);
    case 3: return make(3, 20'000);
    default: return make(d, 4096);
  }
}

std::size_t ProjectiveGrid::nearest(const VectorXd& v) const {
  const std::size_t n = reps_.size();
  if (dim_ == 1) return 0;
  if (dim_ == 2) {
    const double pi = std::numbers::pi;
    double t = std::atan2(v(1), v(0));
    if (t < 0) t += pi;
    if (t >= pi) t -= pi;
    const auto c = static_cast<std::size_t>(t / pi * static_cast<double>(n));
    return std::min(c, n - 1);
  }
  const double norm = v.norm();
  auto best_in = [&](std::size_t lo, std::size_t hi, std::size_t& best, double& best_dot) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double dot = std::abs(reps_[i].dot(v)) / norm;
      if (dot > best_dot) {
        best_dot = dot;
        best = i;
      }
    }
  };
  std::size_t best = 0;
  double best_dot = -1.0;
  if (dim_ == 3) {
    const double z = std::abs(v(2)) / norm;
    const double dn = static_cast<double>(n);
    const double lo = std::max(0.0, (z - band_) * dn - 0.5);
    const double hi = std::min(dn, (z + band_) * dn + 0.5);
    best_in(static_cast<std::size_t>(lo), static_cast<std::size_t>(std::ceil(hi)), best, best_dot);
    // Exact unless the nearest point lies outside the band.
    if (std::sqrt(std::max(0.0, 2.0 - 2.0 * best_dot)) <= band_) return best;
  }
  best_dot = -1.0;
  best_in(0, n, best, best_dot);
  return best;
}

}  // namespace cocylab
