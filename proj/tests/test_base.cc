#include <doctest.h>

#include <polyext/base.hh>
#include <polyext/error.hh>
#include <polyext/funcspec.hh>

#include <cmath>
#include <numbers>

using namespace polyext;

namespace {

constexpr double pi = std::numbers::pi;

void check_loops_closed(const BaseSpace & b)
{
    for (const auto & loop : b.loop_basis())
        CHECK(b.is_closed_walk(loop));
}

}

TEST_CASE("interval bases")
{
    auto b2 = make_interval(2);
    CHECK(b2->sample_count() == 2);
    CHECK(b2->edge_count() == 1);
    CHECK(b2->coordinate(0).u == 0.0);
    CHECK(b2->coordinate(1).u == 1.0);

    auto b5 = make_interval(5);
    const double expect[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int i = 0; i < 5; ++i)
        CHECK(b5->coordinate(i).u == expect[i]);
    CHECK(b5->edge_count() == 4);
    CHECK(b5->loop_basis().empty());

    auto big = make_interval(1001);
    CHECK(big->sample_count() == 1001);
    CHECK(big->edge_count() == 1000);

    CHECK_THROWS_AS(make_interval(1), InvalidArgument);
}

TEST_CASE("circle bases")
{
    auto c4 = make_circle(4);
    for (int i = 0; i < 4; ++i)
        CHECK(c4->coordinate(i).u == doctest::Approx(i * pi / 2));
    CHECK(c4->edge_count() == 4);
    REQUIRE(c4->loop_basis().size() == 1);
    CHECK(c4->loop_basis()[0].size() == 4);
    check_loops_closed(*c4);

    auto c3 = make_circle(3);
    CHECK(c3->edge_count() == 3);
    check_loops_closed(*c3);

    auto c2000 = make_circle(2000);
    CHECK(c2000->edge_count() == 2000);
    CHECK(c2000->loop_basis()[0].size() == 2000);

    CHECK_THROWS_AS(make_circle(2), InvalidArgument);
}

TEST_CASE("graph bases follow the Euler count")
{
    struct Case {
        int v;
        std::vector<Edge> e;
        int k;
    };
    std::vector<Case> cases = {
        {3, {{0, 1}, {1, 2}, {2, 0}}, 10},
        {2, {{0, 1}}, 4},
        {1, {{0, 0}, {0, 0}}, 5},
        {4, {{0, 1}, {0, 2}, {0, 3}}, 3},
        {2, {{0, 1}, {0, 1}, {1, 0}}, 2},
    };
    for (const auto & c : cases) {
        auto g = make_graph(c.v, c.e, c.k);
        int expected_loops = static_cast<int>(c.e.size()) - c.v + 1;
        CHECK(static_cast<int>(g->loop_basis().size()) == expected_loops);
        CHECK(g->sample_count() == c.v + static_cast<int>(c.e.size()) * (c.k - 1));
        CHECK(g->edge_count() == static_cast<int>(c.e.size()) * c.k);
        check_loops_closed(*g);
        for (const auto & ed : g->edges())
            CHECK(ed.tail != ed.head);
    }
    CHECK_THROWS_AS(make_graph(3, {{0, 1}}, 3), InvalidArgument);
    CHECK_THROWS_AS(make_graph(1, {{0, 0}}, 1), InvalidArgument);
}

TEST_CASE("graph coordinates report vertices on their first edge")
{
    auto g = make_graph(3, {{0, 1}, {1, 2}}, 4);
    CHECK(g->coordinate(0).u == 0.0);
    CHECK(g->coordinate(0).v == 0.0);
    CHECK(g->coordinate(1).u == 0.0);
    CHECK(g->coordinate(1).v == 1.0);
    CHECK(g->coordinate(2).u == 1.0);
    CHECK(g->coordinate(2).v == 1.0);
    CHECK(g->coordinate(3).v == 0.25);
}

TEST_CASE("torus bases")
{
    auto t33 = make_torus2(3, 3);
    CHECK(t33->sample_count() == 9);
    CHECK(t33->edge_count() == 18);
    CHECK(t33->loop_basis().size() == 2);
    check_loops_closed(*t33);

    auto t43 = make_torus2(4, 3);
    CHECK(t43->sample_count() == 12);
    CHECK(t43->loop_basis()[0].size() == 4);
    CHECK(t43->loop_basis()[1].size() == 3);

    CHECK(make_torus2(64, 64)->sample_count() == 4096);
    CHECK_THROWS_AS(make_torus2(2, 5), InvalidArgument);
}

TEST_CASE("every edge relation is symmetric once orientation is dropped")
{
    for (auto b : {make_interval(7), make_circle(9), make_torus2(4, 5), make_graph(2, {{0, 1}, {1, 0}}, 3)}) {
        for (int e = 0; e < b->edge_count(); ++e) {
            const auto & ed = b->edge(e);
            bool tail_sees = false, head_sees = false;
            for (const auto & inc : b->incident(ed.tail))
                tail_sees = tail_sees || (inc.edge == e && inc.other == ed.head);
            for (const auto & inc : b->incident(ed.head))
                head_sees = head_sees || (inc.edge == e && inc.other == ed.tail);
            CHECK(tail_sees);
            CHECK(head_sees);
        }
    }
}

TEST_CASE("identity self-maps land on samples")
{
    for (auto b : {make_interval(11), make_circle(12)}) {
        auto id = sample_selfmap(b, {parse(variable_for(b->kind()))});
        CHECK(id.is_identity());
        for (int s = 0; s < b->sample_count(); ++s) {
            const auto & p = id.image(s);
            CHECK((p.t == 0.0 || p.t == 1.0));
            CHECK(b->sample_at(p).value() == s);
        }
    }
    auto t = make_torus2(5, 4);
    CHECK(sample_selfmap(t, {parse("theta1"), parse("theta2")}).is_identity());
}

TEST_CASE("reflection of the interval")
{
    auto b = make_interval(5);
    auto phi = sample_selfmap(b, {parse("1 - x")});
    CHECK(b->coordinate_at(phi.image(1)).u == doctest::Approx(0.75));
    CHECK(b->sample_at(phi.image(1)).value() == 3);

    auto twice = compose(phi, phi);
    for (int s = 0; s < b->sample_count(); ++s)
        CHECK(b->edge_distance(twice.image(s), b->sample_location(s)) <= 1.0);
}

TEST_CASE("half-turn of the circle")
{
    auto b = make_circle(4);
    auto phi = sample_selfmap(b, {parse("theta + pi")});
    CHECK(b->sample_at(phi.image(0)).value() == 2);
    CHECK(b->coordinate_at(phi.image(0)).u == doctest::Approx(pi));
}

TEST_CASE("off-sample images keep their edge parameter")
{
    auto b = make_interval(5);
    auto phi = sample_selfmap(b, {parse("x/2 + 0.1")});
    // sample 0 maps to 0.1 = 0.4 of the way along edge 0
    CHECK(phi.image(0).edge == 0);
    CHECK(phi.image(0).t == doctest::Approx(0.4));
    CHECK(b->coordinate_at(phi.image(0)).u == doctest::Approx(0.1));
}

TEST_CASE("self-map errors")
{
    auto b = make_interval(11);
    CHECK_THROWS_AS(sample_selfmap(b, {parse("x + 2")}), InvalidArgument);
    CHECK_THROWS_AS(sample_selfmap(b, {parse("piecewise(x <= 0.5, 0, 1)")}), ContinuityError);
    CHECK_NOTHROW(sample_selfmap(b, {parse("piecewise(x <= 0.5, 0, 1)")}, 20.0));
    auto c = make_circle(40);
    CHECK_THROWS_AS(sample_selfmap(c, {parse("17*theta")}), ContinuityError);
    CHECK_NOTHROW(sample_selfmap(c, {parse("-3*theta")}, 4.0));
    CHECK_THROWS_AS(sample_selfmap(c, {parse("x")}), EvalError);
}

TEST_CASE("edge distance on the circle wraps")
{
    auto b = make_circle(10);
    CHECK(b->edge_distance({0, 0.0}, {9, 0.5}) == doctest::Approx(0.5));
    CHECK(b->edge_distance({2, 0.0}, {7, 0.0}) == doctest::Approx(5.0));
}

TEST_CASE("simple_cycle peels back-and-forth stems")
{
    auto g = make_graph(3, {{0, 1}, {1, 2}, {2, 1}}, 2);
    for (const auto & loop : g->loop_basis()) {
        auto cyc = simple_cycle(loop);
        CHECK(g->is_closed_walk(cyc));
        CHECK(cyc.size() <= loop.size());
        CHECK_FALSE((cyc.front().edge == cyc.back().edge && cyc.front().forward != cyc.back().forward));
    }
}
