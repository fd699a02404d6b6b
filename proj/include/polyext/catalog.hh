#pragma once

#include <polyext/bundle.hh>

#include <string>
#include <vector>

namespace polyext::catalog {

/// r(x) = (3x-1)(3x-2)^2; the example 1 polynomial is (t - r)(t + r) on [0, 1].
extern const char * const example1_r;
extern const char * const example1_map;
std::vector<std::string> example1_roots();

/// The five root functions of the quintic over the circle, as expressions in theta.
/// lambda_1, lambda_2 trace a 2-strip in the closed upper half plane plus [0, 1];
/// lambda_3..lambda_5 trace a 3-strip in the closed lower half plane plus [-1, 0].
std::vector<std::string> example2_roots();
extern const char * const example2_map;
extern const double example2_continuity_bound;
extern const char * const example3_map;

extern const char * const torus_coeff0; ///< t^2 - e^{i theta1}: c0 = -exp(1i*theta1)
extern const char * const torus_swap_map[2];

MonicPolynomial example1_polynomial(const BasePtr & interval);
MonicPolynomial example2_polynomial(const BasePtr & circle);

struct Assertion {
    std::string name;
    bool ok;
    std::string detail;
};

/// Numerical checks of the stated example 2 constraints: endpoint identifications, the local
/// formulas on [pi-1, pi+1], and lambda_i = lambda_j exactly for {i, j} = {2, 5} at theta = pi.
std::vector<Assertion> check_example2_roots(const std::vector<std::string> & roots, int grid = 20000);

}
