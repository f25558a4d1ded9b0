#include "cocylab/examples.hpp"

#include <cmath>
#include <numbers>

namespace cocylab {

MatrixXd rotation(double angle) {
  MatrixXd r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

MatrixXd diag2(double a, double b) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

namespace examples {

namespace {

MarkovBase fair_coin() { return MarkovBase::bernoulli({0.5, 0.5}); }

MatrixXd twisted(double angle, double stretch) { return rotation(angle) * diag2(stretch, 1.0 / stretch); }

}  // namespace

Example diagonal() {
  return {"diagonal", fair_coin(), Cocycle(2, 1, {diag2(3.0, 1.0 / 3.0), diag2(2.0, 0.5)})};
}

Example scalar() {
  return {"scalar", fair_coin(), Cocycle(2, 1, {MatrixXd::Constant(1, 1, 2.0), MatrixXd::Constant(1, 1, 0.5)})};
}

Example trace3() {
  MatrixXd m(2, 2);
  m << 3, -1, 1, 0;
  return {"trace3", fair_coin(), Cocycle::constant(2, m)};
}

Example typical() {
  return {"typical", fair_coin(),
          Cocycle(2, 1, {diag2(3.0, 1.0 / 3.0), twisted(std::numbers::pi / 3.0, 3.0)})};
}

Example bunched() {
  MatrixXd p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  return {"bunched", MarkovBase::chain(p),
          Cocycle(2, 2, {twisted(0.3, 1.25), twisted(1.1, 1.1), twisted(2.0, 1.3), twisted(2.7, 1.15)})};
}

Example future() {
  MatrixXd p(2, 2);
  p << 0.6, 0.4, 0.3, 0.7;
  return {"future", MarkovBase::chain(p),
          Cocycle(2, 2, {twisted(0.2, 1.2), twisted(0.9, 1.3), twisted(1.7, 1.1), twisted(2.4, 1.25)}, 1.0, 2)};
}

Example rotations() {
  MatrixXd quarter(2, 2);
  quarter << 0, -1, 1, 0;
  return {"rotation", fair_coin(), Cocycle(2, 1, {quarter, -MatrixXd::Identity(2, 2)})};
}

MarkovBase schrodinger_base() {
  MatrixXd p(2, 2);
  p << 0.6, 0.4, 0.4, 0.6;
  return MarkovBase::chain(p);
}

std::vector<double> schrodinger_potential() { return {1.0, 2.0}; }

std::vector<Example> all() { return {diagonal(), scalar(), trace3(), typical(), bunched(), future(), rotations()}; }

}  // namespace examples
}  // namespace cocylab
