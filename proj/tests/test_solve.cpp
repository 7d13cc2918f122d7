#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kms/parse.hpp"
#include "kms/random_graphs.hpp"
#include "kms/solve.hpp"
#include "oracles.hpp"

using namespace kms;

namespace {
GraphSource make_uvw() {
    return parse_graph("kmsgraph v1\n[edges]\nu v 1\nv w 1\nw v 1\n");
}
}  // namespace

TEST_CASE("solve_finite: tail into a two-cycle") {
    auto g = make_uvw();
    auto cone = solve_finite<Rational>(g, Rational(1), VertexId("u"));
    REQUIRE(cone.extreme_points.size() == 1);
    const auto& pt = cone.extreme_points[0];
    CHECK(pt.values.at(VertexId("u")) == Rational(1));
    CHECK(pt.values.at(VertexId("v")) == Rational(1));
    CHECK(pt.values.at(VertexId("w")) == Rational(1));
    CHECK(pt.label == "harmonic-type");

    for (const Rational lam : {Rational(1, 2), Rational(2), Rational(5)}) {
        auto empty = solve_finite<Rational>(g, lam, VertexId("u"));
        CHECK(empty.extreme_points.empty());
    }
}

TEST_CASE("solve_finite: sink normalization") {
    auto g = parse_graph("kmsgraph v1\n[edges]\nv s 1\n");
    auto cone = solve_finite<Rational>(g, Rational(2), VertexId("s"));
    REQUIRE(cone.extreme_points.size() == 1);
    CHECK(cone.extreme_points[0].values.at(VertexId("s")) == Rational(1));
    CHECK(cone.extreme_points[0].values.at(VertexId("v")) == Rational(1, 2));
    CHECK(cone.extreme_points[0].label == "sink-type");

    // the sink value pins the whole vector, for every lambda
    auto cone3 = solve_finite<Rational>(g, Rational(3), VertexId("s"));
    REQUIRE(cone3.extreme_points.size() == 1);
    CHECK(cone3.extreme_points[0].values.at(VertexId("v")) == Rational(1, 3));
}

TEST_CASE("solve_finite: preconditions") {
    auto loops = parse_graph("kmsgraph v1\n[edges]\nv v 1\nw w 1\n");
    CHECK_THROWS_AS(solve_finite<Rational>(loops, Rational(1), VertexId("v")), DomainError);
    auto g = make_uvw();
    CHECK_THROWS_AS(solve_finite<Rational>(g, Rational(1), VertexId("zz")), UnknownVertexError);
    CHECK_THROWS_AS(solve_finite<Rational>(g, Rational(0), VertexId("u")),
                    std::invalid_argument);
}

TEST_CASE("solve_finite matches brute-force vertex enumeration") {
    SeqRng rng(41);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    int nonempty_seen = 0;
    for (int t = 0; t < 60; ++t) {
        FiniteGraph fg;
        try {
            fg = (t % 2 == 0) ? random_cofinal_graph(rng, opt)
                              : random_cofinal_graph(rng, opt, true);
        } catch (const std::runtime_error&) {
            continue;
        }
        GraphSource g(fg);
        auto verts = fg.vertices();
        // candidate lambdas: small rationals plus the exact critical value
        std::vector<Rational> lambdas = {Rational(1), Rational(2), Rational(1, 2),
                                         Rational(3, 2)};
        auto nwres = nonwandering_set(fg);
        if (!nwres.nw.empty()) {
            auto b0 = beta0_estimate(g);
            if (b0.lambda0_exact) lambdas.push_back(*b0.lambda0_exact);
        }
        for (const auto& lam : lambdas) {
            const VertexId v0 = verts[rng.below(verts.size())];
            auto cone = solve_finite<Rational>(g, lam, v0);
            auto brute = oracle::bruteforce_cone_vertices(fg, lam, v0);
            REQUIRE(cone.extreme_points.size() == brute.size());
            if (!brute.empty()) ++nonempty_seen;
            for (const auto& pt : cone.extreme_points) {
                bool matched = false;
                for (const auto& b : brute) {
                    if (b == pt.values) {
                        matched = true;
                        break;
                    }
                }
                CHECK(matched);
            }
        }
    }
    CHECK(nonempty_seen > 5);
}

TEST_CASE("solve_finite in float mode tolerates an inexact critical value") {
    SeqRng rng(43);
    RandomGraphOptions opt;
    opt.max_vertices = 7;
    for (int t = 0; t < 15; ++t) {
        FiniteGraph fg = random_strongly_connected_graph(rng, opt);
        GraphSource g(fg, ArithmeticMode::Float);
        auto b0 = beta0_estimate(g);
        double lam0 = b0.lambda0();
        auto cone = solve_finite<double>(g, lam0, fg.vertices().front());
        REQUIRE(cone.extreme_points.size() == 1);
        double mn = 1e300;
        for (const auto& [v, val] : cone.extreme_points[0].values) mn = std::min(mn, val);
        CHECK(mn > 0);
    }
}

TEST_CASE("extreme points are sorted and distinct") {
    // a graph whose cone at lambda = 1 has two extreme points: two sinks
    // would break cofinality, so use a cofinal graph with one sink and check
    // the ordering contract on a multi-point fixture instead.
    SeqRng rng(47);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    for (int t = 0; t < 30; ++t) {
        FiniteGraph fg;
        try {
            fg = random_cofinal_graph(rng, opt, true);
        } catch (const std::runtime_error&) {
            continue;
        }
        GraphSource g(fg);
        auto cone = solve_finite<Rational>(g, Rational(2), fg.vertices().front());
        for (std::size_t i = 1; i < cone.extreme_points.size(); ++i) {
            std::vector<Rational> prev, cur;
            for (const auto& [_, val] : cone.extreme_points[i - 1].values) prev.push_back(val);
            for (const auto& [_, val] : cone.extreme_points[i].values) cur.push_back(val);
            CHECK(prev < cur);
        }
    }
}

TEST_CASE("certify_no_solution: worked examples") {
    auto loop = parse_generator_spec("gen:loop a=2 mode=exact");
    auto cert = certify_no_solution<Rational>(loop, Rational(1));
    REQUIRE(cert.has_value());
    CHECK(cert->witness == VertexId("v"));
    CHECK(cert->exponent == 1);
    CHECK(cert->value == doctest::Approx(2.0));

    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2 mode=exact");
    auto cert2 = certify_no_solution<Rational>(gz, Rational(1, 2));
    REQUIRE(cert2.has_value());
    CHECK(cert2->exponent == 2);
    CHECK(cert2->value == doctest::Approx(std::sqrt(0.5)));

    // a solution exists at lambda = 4 > 2, so no witness can ever be found
    auto none = certify_no_solution<Rational>(loop, Rational(4));
    CHECK_FALSE(none.has_value());
}

TEST_CASE("certificate is sound: no witness at or above the critical value") {
    SeqRng rng(53);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    for (int t = 0; t < 10; ++t) {
        FiniteGraph fg = random_strongly_connected_graph(rng, opt);
        GraphSource g(fg);
        auto b0 = beta0_estimate(g);
        REQUIRE(b0.lambda0_upper.has_value());
        Rational above = rational_from_double(*b0.lambda0_upper * (1 + 1e-9)) + Rational(1, 1000);
        CHECK_FALSE(certify_no_solution<Rational>(g, above).has_value());
        // strictly below the certified lower bound a witness must exist
        Rational below = rational_from_double(b0.lambda0_lower) / 2;
        if (below > 0) {
            auto cert = certify_no_solution<Rational>(g, below);
            CHECK(cert.has_value());
        }
    }
}
