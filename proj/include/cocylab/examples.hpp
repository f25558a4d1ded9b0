#ifndef COCYLAB_EXAMPLES_HPP
#define COCYLAB_EXAMPLES_HPP

#include "cocylab/cocycle.hpp"
#include "cocylab/symbolic.hpp"

#include <string>
#include <vector>

namespace cocylab {

/// A base and a cocycle over it; the shipped configs mirror these.
struct Example {
  std::string name;
  MarkovBase base;
  Cocycle cocycle;
};

MatrixXd rotation(double angle);
MatrixXd diag2(double a, double b);

namespace examples {

/// gen(0) = diag(3, 1/3), gen(1) = diag(2, 1/2), Bernoulli(1/2, 1/2).
Example diagonal();
/// a(0) = 2, a(1) = 1/2, Bernoulli(1/2, 1/2).
Example scalar();
/// Constant [[3, -1], [1, 0]].
Example trace3();
/// Depth 1, gen(0) = diag(3, 1/3), gen(1) = R(pi/3) diag(3, 1/3).
Example typical();
/// Depth-2 near-conformal cocycle over a Markov chain.
Example bunched();
/// Depth 2, lead 2: reads x_1 and x_2.
Example future();
/// gen(0) = R(pi/2), gen(1) = R(pi).
Example rotations();
/// Chain for the Schrodinger potential v(0) = 1, v(1) = 2.
MarkovBase schrodinger_base();
std::vector<double> schrodinger_potential();

/// Every shipped cocycle example.
std::vector<Example> all();

}  // namespace examples
}  // namespace cocylab

#endif  // COCYLAB_EXAMPLES_HPP
