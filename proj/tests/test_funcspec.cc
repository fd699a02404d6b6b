#include <doctest.h>

#include <polyext/error.hh>
#include <polyext/funcspec.hh>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

using namespace polyext;

namespace {

constexpr double pi = std::numbers::pi;

// r(x) = (3x-1)(3x-2)^2 written out directly
double r_direct(double x) { return (3 * x - 1) * (3 * x - 2) * (3 * x - 2); }

std::string random_sentence(std::mt19937 & rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 11 : 3);
    auto sub = [&] { return random_sentence(rng, depth - 1); };
    const char * nums[] = {"0", "1", "2.5", "1e-05", "0.125", "3"};
    switch (pick(rng)) {
    case 0: return nums[rng() % 6];
    case 1: return std::string(nums[rng() % 6]) + "i";
    case 2: return "theta";
    case 3: return "pi";
    case 4: return "(" + sub() + ") + (" + sub() + ")";
    case 5: return "(" + sub() + ") - (" + sub() + ")";
    case 6: return "(" + sub() + ")*(" + sub() + ")";
    case 7: return "(" + sub() + ")/(" + sub() + ")";
    case 8: return "-(" + sub() + ")";
    case 9: return "(" + sub() + ")^" + std::to_string(rng() % 4);
    case 10: {
        const char * f[] = {"sin", "cos", "exp", "sqrt", "abs"};
        return std::string(f[rng() % 5]) + "(" + sub() + ")";
    }
    default: return "piecewise(theta " + std::string(rng() % 2 ? "<=" : ">=") + " " + nums[rng() % 6] + ", " + sub() + ", " + sub() + ")";
    }
}

}

TEST_CASE("parse and evaluate the cubic r")
{
    auto e = parse("(3*x-1)*(3*x-2)^2");
    CHECK(eval(e, BaseKind::interval, {0.0, 0.0}) == cplx(r_direct(0.0)));
    CHECK(eval(e, BaseKind::interval, {0.0, 0.0}) == cplx(-4.0));
}

TEST_CASE("theta - theta is zero")
{
    auto e = parse("theta - theta");
    auto f = evaluate(e, make_circle(17));
    for (cplx v : f.values)
        CHECK(v == cplx(0.0));
}

TEST_CASE("doubled operator is a syntax error at the second caret")
{
    try {
        parse("(3*x-1)*(3*x-2)^^2");
        FAIL("expected a parse error");
    }
    catch (const ParseError & err) {
        CHECK(err.line() == 1);
        CHECK(err.column() == 17);
    }
}

TEST_CASE("parse errors report positions")
{
    auto column_of = [](const char * text) {
        try {
            parse(text);
        }
        catch (const ParseError & err) {
            return std::pair{err.line(), err.column()};
        }
        return std::pair{0, 0};
    };
    CHECK(column_of("1 + foo") == std::pair{1, 5});
    CHECK(column_of("sin(x, x)") == std::pair{1, 6});
    CHECK(column_of("x +\n  * 2") == std::pair{2, 3});
    CHECK(column_of("(x") == std::pair{1, 3});
    CHECK(column_of("x^1.5") == std::pair{1, 3});
    CHECK(column_of("piecewise(x <= x, 1, 2)") == std::pair{1, 16});
    CHECK(column_of("2 $ 3") == std::pair{1, 3});
    CHECK(column_of("") == std::pair{1, 1});
}

TEST_CASE("evaluate on samples")
{
    auto one = evaluate(parse("1+0i"), make_torus2(3, 4));
    for (cplx v : one.values)
        CHECK(v == cplx(1.0));

    auto r = evaluate(parse("(3*x-1)*(3*x-2)^2"), make_interval(4));
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(r[i] - r_direct(i / 3.0)) < 1e-12);
    CHECK(std::abs(r[0] - -4.0) < 1e-15);
    CHECK(std::abs(r[3] - 2.0) < 1e-15);

    auto w = evaluate(parse("exp(1i*theta)"), make_circle(4));
    const cplx expect[] = {1.0, {0.0, 1.0}, -1.0, {0.0, -1.0}};
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(w[i] - expect[i]) < 1e-15);
}

TEST_CASE("eval_at interpolates the coordinate, not the values")
{
    auto b = make_interval(5);
    CHECK(eval_at(parse("x"), *b, {1, 0.5}).real() == doctest::Approx(0.375));
    auto b4 = make_interval(4);
    CHECK(std::abs(eval_at(parse("(3*x-1)*(3*x-2)^2"), *b4, {2, 0.0})) < 1e-15);
    CHECK(eval_at(parse("x^2"), *b, {0, 0.5}).real() == doctest::Approx(0.125 * 0.125));
    auto c = make_circle(4);
    CHECK(std::abs(eval_at(parse("exp(1i*theta)"), *c, {2, 0.0}) - cplx(-1.0)) < 1e-15);
    CHECK(std::abs(eval_at(parse("exp(1i*theta)"), *c, {1, 1.0}) - cplx(-1.0)) < 1e-15);
}

TEST_CASE("evaluate agrees bit for bit with eval_at at samples")
{
    auto b = make_circle(33);
    auto e = parse("sqrt(theta)*exp(2i*theta) - piecewise(theta <= pi, cos(theta)^3, 1/(1+theta))");
    auto f = evaluate(e, b);
    for (int s = 0; s < b->sample_count(); ++s) {
        cplx v = eval_at(e, *b, b->sample_location(s));
        CHECK(v == f[s]);
    }
}

TEST_CASE("evaluation errors")
{
    CHECK_THROWS_AS(evaluate(parse("theta"), make_interval(3)), EvalError);
    CHECK_THROWS_AS(evaluate(parse("1/x"), make_interval(3)), EvalError);
    CHECK_THROWS_AS(evaluate(parse("x"), make_graph(2, {{0, 1}}, 2)), EvalError);
    CHECK_NOTHROW(evaluate(parse("2 + 1i"), make_graph(2, {{0, 1}}, 2)));
}

TEST_CASE("functions and literals")
{
    auto at = [](const char * text, double theta) { return eval(parse(text), BaseKind::circle, {theta, 0.0}); };
    CHECK(std::abs(at("sqrt(-4)", 0) - cplx(0, 2)) < 1e-15);
    CHECK(std::abs(at("abs(3 + 4i)", 0) - cplx(5)) < 1e-15);
    CHECK(std::abs(at("sin(theta)^2 + cos(theta)^2", 1.3) - cplx(1)) < 1e-15);
    CHECK(std::abs(at("2.5e2 + .5", 0) - cplx(250.5)) < 1e-12);
    CHECK(std::abs(at("1e-3i", 0) - cplx(0, 1e-3)) < 1e-18);
}

TEST_CASE("piecewise branches")
{
    auto e = parse("piecewise(theta <= pi - 1, 1, piecewise(theta >= pi + 1, 3, 2))");
    CHECK(eval(e, BaseKind::circle, {0.5, 0}) == cplx(1));
    CHECK(eval(e, BaseKind::circle, {pi - 1, 0}) == cplx(1));
    CHECK(eval(e, BaseKind::circle, {pi, 0}) == cplx(2));
    CHECK(eval(e, BaseKind::circle, {pi + 1, 0}) == cplx(3));
}

TEST_CASE("canonical printing")
{
    CHECK(print(parse("(3*x-1)*(3*x-2)^2")) == "(3*x - 1)*(3*x - 2)^2");
}

TEST_CASE("print then parse is stable on random sentences")
{
    std::mt19937 rng(20240611);
    for (int k = 0; k < 500; ++k) {
        std::string text = random_sentence(rng, 4);
        Expr e = parse(text);
        std::string once = print(e);
        std::string twice = print(parse(once));
        CHECK_MESSAGE(once == twice, text);
        double theta = 0.1 + 0.01 * k;
        cplx a = eval(e, BaseKind::circle, {theta, 0});
        cplx b = eval(parse(once), BaseKind::circle, {theta, 0});
        bool same = std::memcmp(&a, &b, sizeof a) == 0;
        CHECK_MESSAGE(same, text);
    }
}

TEST_CASE("evaluation is deterministic")
{
    auto e = parse("exp(sin(theta)*1i)/(2 + cos(3*theta))");
    for (double t : {0.0, 0.7, 2.0, 6.0})
        CHECK(eval(e, BaseKind::circle, {t, 0}) == eval(parse(print(e)), BaseKind::circle, {t, 0}));
}
