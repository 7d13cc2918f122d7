#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kms/parse.hpp"
#include "kms/random_graphs.hpp"
#include "kms/series.hpp"
#include "oracles.hpp"

using namespace kms;

namespace {
GraphSource make_uvw() {
    return parse_graph("kmsgraph v1\n[edges]\nu v 1\nv w 1\nw v 1\n");
}
}  // namespace

TEST_CASE("power_entry: worked examples") {
    auto loop = parse_generator_spec("gen:loop a=2 mode=exact");
    auto p = power_entry<Rational>(loop, VertexId("v"), VertexId("v"), 5);
    CHECK(p.value == Rational(32));
    CHECK(p.exact);

    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2 mode=exact");
    auto p2 = power_entry<Rational>(gz, VertexId("0"), VertexId("0"), 2);
    CHECK(p2.value == Rational(1, 2));

    auto p0 = power_entry<Rational>(gz, VertexId("0"), VertexId("0"), 0);
    CHECK(p0.value == Rational(1));
    auto p0b = power_entry<Rational>(gz, VertexId("0"), VertexId("3"), 0);
    CHECK(p0b.value == Rational(0));
}

TEST_CASE("power_entry agrees with the dense oracle") {
    SeqRng rng(3);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    for (int t = 0; t < 10; ++t) {
        FiniteGraph fg = random_finite_graph(rng, opt);
        GraphSource g(fg);
        auto d = oracle::Dense<Rational>::from(fg);
        auto verts = fg.vertices();
        for (std::size_t n : {1u, 3u, 6u}) {
            auto m = d.power(n);
            for (const auto& v : verts) {
                for (const auto& w : verts) {
                    auto pe = power_entry<Rational>(g, v, w, n);
                    CHECK(pe.exact);
                    CHECK(pe.value == m[d.index(v)][d.index(w)]);
                }
            }
        }
    }
}

TEST_CASE("green_series: geometric, single path, divergent") {
    TruncationConfig cfg;
    auto loop = parse_generator_spec("gen:loop a=2");
    auto est = green_series<double>(loop, VertexId("v"), VertexId("v"), 4.0, cfg);
    CHECK(est.lower == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(est.converged);
    CHECK_FALSE(est.diverged);

    // halfline: a single length-3 path, so the series is exactly lambda^-3
    auto half = parse_generator_spec("gen:halfline mode=exact");
    auto est2 = green_series<Rational>(half, VertexId("0"), VertexId("3"), Rational(3, 2), cfg);
    CHECK(est2.lower == Rational(8, 27));

    auto est3 = green_series<double>(loop, VertexId("v"), VertexId("v"), 2.0, cfg);
    CHECK(est3.diverged);
    CHECK_FALSE(est3.converged);
    for (const auto& t : est3.partial_terms) CHECK(t == 1.0);

    // far below the critical value the series blows up fast
    auto est4 = green_series<double>(loop, VertexId("v"), VertexId("v"), 1.0, cfg);
    CHECK(est4.diverged);
}

TEST_CASE("green_series: tail certificate") {
    TruncationConfig cfg;
    cfg.tail_ratio_bound = 0.5;
    auto loop = parse_generator_spec("gen:loop a=2");
    auto est = green_series<double>(loop, VertexId("v"), VertexId("v"), 4.0, cfg);
    REQUIRE(est.upper.has_value());
    CHECK(*est.upper >= est.lower);
    CHECK(*est.upper == doctest::Approx(2.0).epsilon(1e-10));

    // an envelope the observed terms violate is rejected
    cfg.tail_ratio_bound = 0.25;
    auto est2 = green_series<double>(loop, VertexId("v"), VertexId("v"), 4.0, cfg);
    CHECK_FALSE(est2.upper.has_value());
}

TEST_CASE("green_series agrees with the dense oracle and stays monotone") {
    SeqRng rng(5);
    RandomGraphOptions opt;
    opt.max_vertices = 5;
    opt.no_sinks = true;
    for (int t = 0; t < 6; ++t) {
        FiniteGraph fg = random_finite_graph(rng, opt);
        GraphSource g(fg);
        auto d = oracle::Dense<Rational>::from(fg);
        auto verts = fg.vertices();
        Rational lam(9, 2);
        TruncationConfig c1, c2;
        c1.depth = 12;
        c2.depth = 24;
        for (const auto& v : verts) {
            for (const auto& w : verts) {
                auto e1 = green_series<Rational>(g, v, w, lam, c1);
                auto e2 = green_series<Rational>(g, v, w, lam, c2);
                CHECK(e1.lower == d.green(v, w, lam, 12));
                CHECK(e2.lower >= e1.lower);
            }
        }
    }
}

TEST_CASE("first_passage: worked examples") {
    auto loop = parse_generator_spec("gen:loop a=2 mode=exact");
    CHECK(first_passage<Rational>(loop, VertexId("v"), VertexId("v"), 1) == Rational(2));
    CHECK(first_passage<Rational>(loop, VertexId("v"), VertexId("v"), 2) == Rational(0));
    CHECK(first_passage<Rational>(loop, VertexId("v"), VertexId("v"), 0) == Rational(0));

    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2 mode=exact");
    CHECK(first_passage<Rational>(gz, VertexId("0"), VertexId("0"), 2) == Rational(1, 2));
}

TEST_CASE("first_passage_series agrees with the literal recursion") {
    SeqRng rng(17);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    opt.no_sinks = true;
    for (int t = 0; t < 8; ++t) {
        FiniteGraph fg = random_finite_graph(rng, opt);
        GraphSource g(fg);
        auto d = oracle::Dense<Rational>::from(fg);
        auto verts = fg.vertices();
        const VertexId w = verts[rng.below(verts.size())];
        const std::size_t depth = 10;
        auto table = d.first_passage_table(w, depth);
        Rational lam(3);
        TruncationConfig cfg;
        cfg.depth = depth;
        auto fps = first_passage_series<Rational>(g, w, verts, lam, cfg);
        for (const auto& v : verts) {
            Rational expect(0);
            for (std::size_t n = 1; n <= depth; ++n)
                expect += table[n][d.index(v)] / num::pow_int(lam, static_cast<long long>(n));
            CHECK(fps.sums.at(v) == expect);
        }
        // per-n values agree too
        for (std::size_t n = 0; n <= depth; ++n) {
            for (const auto& v : verts) {
                TruncationConfig c;
                c.depth = depth;
                CHECK(first_passage<Rational>(g, v, w, n, c) == table[n][d.index(v)]);
            }
        }
    }
}

TEST_CASE("beta0: worked examples") {
    auto loop = parse_graph("kmsgraph v1\n[edges]\nv v 2\n");
    auto b = beta0_estimate(loop);
    CHECK(b.exact);
    REQUIRE(b.lambda0_exact.has_value());
    CHECK(*b.lambda0_exact == Rational(2));

    auto uvw = make_uvw();
    auto b2 = beta0_estimate(uvw);
    CHECK(b2.exact);
    REQUIRE(b2.lambda0_exact.has_value());
    CHECK(*b2.lambda0_exact == Rational(1));
    CHECK(nonwandering_set(uvw.finite()).nw.count(b2.witness) == 1);

    TruncationConfig cfg;
    cfg.use_closed_forms = false;
    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2");
    auto b3 = beta0_estimate(gz, cfg);
    CHECK_FALSE(b3.exact);
    CHECK(b3.lambda0_lower > 0.95);
    CHECK(b3.lambda0_lower <= 1.0);
    CHECK_FALSE(b3.lambda0_upper.has_value());

    auto b4 = beta0_estimate(gz);  // closed form: 2 sqrt(pq) = 1
    CHECK(b4.exact);
    REQUIRE(b4.lambda0_exact.has_value());
    CHECK(*b4.lambda0_exact == Rational(1));

    auto acyclic = parse_graph("kmsgraph v1\n[edges]\nv s 1\n");
    CHECK_THROWS_AS(beta0_estimate(acyclic), DomainError);
}

TEST_CASE("beta0 matches the dense power-iteration oracle") {
    SeqRng rng(23);
    RandomGraphOptions opt;
    opt.max_vertices = 8;
    for (int t = 0; t < 25; ++t) {
        FiniteGraph fg = random_strongly_connected_graph(rng, opt);
        GraphSource g(fg);
        auto b = beta0_estimate(g);
        double expected = oracle::power_iteration_radius(fg, fg.vertices());
        CHECK(b.lambda0() == doctest::Approx(expected).epsilon(1e-9));
        REQUIRE(b.lambda0_upper.has_value());
        CHECK(b.lambda0_lower <= expected + 1e-9);
        CHECK(*b.lambda0_upper >= expected - 1e-9);
    }
}

TEST_CASE("beta0 on a periodic block does not oscillate") {
    // pure two-cycle: spectral radius 1 despite A^n alternating
    auto two = parse_graph("kmsgraph v1\n[edges]\nv w 1\nw v 1\n");
    auto b = beta0_estimate(two);
    CHECK(b.exact);
    REQUIRE(b.lambda0_exact.has_value());
    CHECK(*b.lambda0_exact == Rational(1));

    // weighted two-cycle: radius sqrt(6) is irrational, bounds must bracket it
    auto wtwo = parse_graph("kmsgraph v1\n[edges]\nv w 2\nw v 3\n");
    auto b2 = beta0_estimate(wtwo);
    double root = std::sqrt(6.0);
    CHECK(b2.lambda0_lower <= root + 1e-12);
    REQUIRE(b2.lambda0_upper.has_value());
    CHECK(*b2.lambda0_upper >= root - 1e-12);
    CHECK(*b2.lambda0_upper - b2.lambda0_lower < 1e-9);
}

TEST_CASE("classify_recurrence") {
    auto loop = parse_graph("kmsgraph v1\n[edges]\nv v 2\n");
    auto r = classify_recurrence(loop);
    CHECK(r.verdict == Recurrence::Recurrent);
    CHECK(r.evidence == "finite non-wandering set");

    auto uvw = make_uvw();
    CHECK(classify_recurrence(uvw).verdict == Recurrence::Recurrent);

    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2");
    auto r2 = classify_recurrence(gz);
    CHECK(r2.verdict == Recurrence::Recurrent);
    CHECK(r2.evidence.find("closed form") != std::string::npos);

    TruncationConfig cfg;
    cfg.use_closed_forms = false;
    auto r3 = classify_recurrence(gz, cfg);
    CHECK(r3.verdict == Recurrence::Unknown);
    CHECK(r3.partial_sum > 1.0);

    auto acyclic = parse_graph("kmsgraph v1\n[edges]\nv s 1\n");
    CHECK_THROWS_AS(classify_recurrence(acyclic), DomainError);
}

TEST_CASE("vere-jones identity residual") {
    TruncationConfig cfg;
    cfg.depth = 40;
    auto loop = parse_generator_spec("gen:loop a=2");
    auto r = vere_jones_residual<double>(loop, VertexId("v"), VertexId("v"), 4.0, cfg);
    CHECK(r < 1e-9);

    TruncationConfig cfg64;
    cfg64.depth = 64;
    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2");
    auto r2 = vere_jones_residual<double>(gz, VertexId("0"), VertexId("0"), 1.25, cfg64);
    CHECK(r2 < 1e-9);

    // in exact arithmetic the identity holds term-by-term
    auto gze = parse_generator_spec("gen:zwalk p=1/2 q=1/2 mode=exact");
    TruncationConfig cfg32;
    cfg32.depth = 32;
    auto r3 = vere_jones_residual<Rational>(gze, VertexId("0"), VertexId("0"), Rational(5, 4),
                                            cfg32);
    CHECK(r3 == Rational(0));

    // only the n = 0 terms survive at a very large lambda
    auto r4 = vere_jones_residual<double>(loop, VertexId("v"), VertexId("v"), 1e6, cfg);
    CHECK(r4 < 1e-9);

    // preconditions: v outside NW, or lambda below lambda0
    auto uvw = make_uvw();
    CHECK_THROWS_AS(vere_jones_residual<Rational>(uvw, VertexId("u"), VertexId("v"),
                                                  Rational(2), cfg),
                    DomainError);
    CHECK_THROWS_AS(vere_jones_residual<double>(loop, VertexId("v"), VertexId("v"), 1.0, cfg),
                    DomainError);
}

TEST_CASE("supermultiplicativity and Chapman-Kolmogorov") {
    SeqRng rng(29);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    opt.no_sinks = true;
    for (int t = 0; t < 6; ++t) {
        FiniteGraph fg = random_finite_graph(rng, opt);
        GraphSource g(fg);
        auto d = oracle::Dense<Rational>::from(fg);
        auto p2 = d.power(2), p4 = d.power(4), p6 = d.power(6);
        auto verts = fg.vertices();
        for (const auto& v : verts) {
            auto iv = d.index(v);
            CHECK(p6[iv][iv] >= p2[iv][iv] * p4[iv][iv]);
            for (const auto& w : verts) {
                Rational conv(0);
                for (const auto& u : verts) conv += p2[iv][d.index(u)] * p4[d.index(u)][d.index(w)];
                CHECK(p6[iv][d.index(w)] == conv);
                CHECK(power_entry<Rational>(g, v, w, 6).value == p6[iv][d.index(w)]);
            }
        }
    }
}

TEST_CASE("divergence transfer: flags agree across sources on cofinal graphs") {
    SeqRng rng(31);
    RandomGraphOptions opt;
    opt.max_vertices = 6;
    opt.no_sinks = true;
    int tested = 0;
    for (int t = 0; t < 10 && tested < 5; ++t) {
        FiniteGraph fg = random_cofinal_graph(rng, opt);
        GraphSource g(fg);
        auto nwres = nonwandering_set(fg);
        if (nwres.nw.empty()) continue;
        ++tested;
        auto b0 = beta0_estimate(g);
        double lam = b0.lambda0() / 2;
        const VertexId w0 = *nwres.nw.begin();
        TruncationConfig cfg;
        cfg.depth = 300;
        std::optional<bool> first;
        for (const auto& v : fg.vertices()) {
            auto est = green_series<double>(g, v, w0, lam, cfg);
            if (!first)
                first = est.diverged;
            else
                CHECK(est.diverged == *first);
        }
        CHECK(first.value_or(false));
    }
    CHECK(tested > 0);
}

TEST_CASE("emitter row truncation is monotone in the row limit") {
    auto star = parse_generator_spec("gen:star_emitter r=1/2");
    VertexId u("u");
    TruncationConfig c8, c16, c64;
    c8.row_limit = 8;
    c16.row_limit = 16;
    c64.row_limit = 64;
    auto e8 = green_series<double>(star, u, u, 2.0, c8);
    auto e16 = green_series<double>(star, u, u, 2.0, c16);
    auto e64 = green_series<double>(star, u, u, 2.0, c64);
    CHECK(e8.rows_truncated);
    CHECK(e8.lower <= e16.lower);
    CHECK(e16.lower <= e64.lower);
    CHECK(e64.lower == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}
