#include <polyext/catalog.hh>

#include <cmath>
#include <numbers>

namespace polyext::catalog {

const char * const example1_r = "(3*x - 1)*(3*x - 2)^2";
const char * const example1_map = "1 - x";

std::vector<std::string> example1_roots()
{
    return {example1_r, std::string("-(") + example1_r + ")"};
}

namespace {

// 2-strip circle piece: centre 1 + i, radius 1, parameter u in [0, 4pi - 2]
std::string upper(const std::string & u)
{
    return "1 + 1i - 1i*exp(1i*(2*pi/(4*pi - 2))*(" + u + "))";
}

// 3-strip circle piece: centre -1 - i, radius 1, parameter u in [0, 6pi - 2]
std::string lower(const std::string & u)
{
    return "-1 - 1i + 1i*exp(1i*(2*pi/(6*pi - 2))*(" + u + "))";
}

}

std::vector<std::string> example2_roots()
{
    return {
        upper("theta + pi - 1"),
        "piecewise(theta <= pi - 1, " + upper("theta + 3*pi - 1") + ", piecewise(theta <= pi + 1, (theta - pi)^2, "
            + upper("theta - pi - 1") + "))",
        lower("theta + pi - 1"),
        lower("theta + 3*pi - 1"),
        "piecewise(theta <= pi - 1, " + lower("theta + 5*pi - 1") + ", piecewise(theta <= pi + 1, -(theta - pi)^2, "
            + lower("theta - pi - 1") + "))",
    };
}

const char * const example2_map
    = "piecewise(theta <= pi - 1, theta, piecewise(theta <= pi, pi - sqrt(pi - theta), "
      "piecewise(theta <= pi + 1, pi + sqrt(theta - pi), theta)))";
const double example2_continuity_bound = 64.0;
const char * const example3_map = "theta + pi";

const char * const torus_coeff0 = "-exp(1i*theta1)";
const char * const torus_swap_map[2] = {"theta2", "theta1"};

MonicPolynomial example1_polynomial(const BasePtr & interval)
{
    std::vector<Expr> roots;
    for (const auto & r : example1_roots())
        roots.push_back(parse(r));
    return polynomial_from_roots(interval, roots);
}

MonicPolynomial example2_polynomial(const BasePtr & circle)
{
    std::vector<Expr> roots;
    for (const auto & r : example2_roots())
        roots.push_back(parse(r));
    return polynomial_from_roots(circle, roots);
}

std::vector<Assertion> check_example2_roots(const std::vector<std::string> & texts, int grid)
{
    constexpr double pi = std::numbers::pi;
    std::vector<Assertion> out;
    if (texts.size() != 5) {
        out.push_back({"five roots", false, std::to_string(texts.size()) + " root expressions"});
        return out;
    }
    std::vector<Expr> roots;
    for (const auto & t : texts)
        roots.push_back(parse(t));
    auto lam = [&](int j, double theta) { return eval(roots[j - 1], BaseKind::circle, {theta, 0.0}); };
    auto fmt = [](double v) { return format_double(v); };

    const int pairs[5][2] = {{1, 2}, {2, 1}, {3, 4}, {4, 5}, {5, 3}};
    for (const auto & pr : pairs) {
        double d = std::abs(lam(pr[0], 2 * pi) - lam(pr[1], 0.0));
        out.push_back({"lambda" + std::to_string(pr[0]) + "(2pi) = lambda" + std::to_string(pr[1]) + "(0)", d < 1e-12,
            "difference " + fmt(d)});
    }

    double e2 = 0.0, e5 = 0.0, jump = 0.0;
    std::vector<double> min_gap(36, INFINITY);
    double min_25_outside = INFINITY, at_pi = std::abs(lam(2, pi) - lam(5, pi));
    bool positive_off_pi = true;
    for (int k = 0; k <= grid; ++k) {
        double theta = 2 * pi * k / grid;
        if (theta >= pi - 1 && theta <= pi + 1) {
            double h2 = (theta - pi) * (theta - pi);
            e2 = std::max(e2, std::abs(lam(2, theta) - h2));
            e5 = std::max(e5, std::abs(lam(5, theta) + h2));
        }
        for (int i = 1; i <= 5; ++i) {
            if (k > 0)
                jump = std::max(jump, std::abs(lam(i, theta) - lam(i, 2 * pi * (k - 1) / grid)));
            for (int j = i + 1; j <= 5; ++j) {
                double g = std::abs(lam(i, theta) - lam(j, theta));
                if (i == 2 && j == 5) {
                    if (std::abs(theta - pi) > 1e-12 && ! (g > 0.0))
                        positive_off_pi = false;
                    if (std::abs(theta - pi) >= 1.0)
                        min_25_outside = std::min(min_25_outside, g);
                }
                else
                    min_gap[i * 6 + j] = std::min(min_gap[i * 6 + j], g);
            }
        }
    }
    out.push_back({"lambda2 = (theta - pi)^2 on [pi-1, pi+1]", e2 < 1e-12, "max error " + fmt(e2)});
    out.push_back({"lambda5 = -(theta - pi)^2 on [pi-1, pi+1]", e5 < 1e-12, "max error " + fmt(e5)});
    out.push_back({"lambda2(pi) = lambda5(pi)", at_pi < 1e-15, "difference " + fmt(at_pi)});
    out.push_back({"lambda2 != lambda5 away from pi", positive_off_pi && min_25_outside > 1e-3,
        "min gap outside [pi-1, pi+1] " + fmt(min_25_outside)});
    double worst = INFINITY;
    std::string which;
    for (int i = 1; i <= 5; ++i)
        for (int j = i + 1; j <= 5; ++j)
            if (! (i == 2 && j == 5) && min_gap[i * 6 + j] < worst) {
                worst = min_gap[i * 6 + j];
                which = std::to_string(i) + "," + std::to_string(j);
            }
    out.push_back({"no other coincidences", worst > 1e-3, "closest other pair (" + which + ") gap " + fmt(worst)});
    out.push_back({"continuous on the grid", jump < 100.0 * 2 * pi / grid, "largest step " + fmt(jump)});
    return out;
}

}
