#pragma once

#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kms/harmonic.hpp"
#include "kms/martin.hpp"
#include "kms/parse.hpp"
#include "kms/random_graphs.hpp"
#include "kms/rng.hpp"
#include "kms/solve.hpp"

namespace kms {

struct SuiteResult {
    std::string name;
    int checks = 0;
    int failures = 0;
    std::vector<std::string> messages;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (!ok) {
            ++failures;
            if (messages.size() < 20) messages.push_back(what);
        }
    }
};

namespace selfcheck_detail {

// ---- brute-force subset machinery (independent of the closure code) ----

inline bool mask_hereditary(const FiniteGraph& g, const std::vector<VertexId>& verts,
                            std::uint32_t mask) {
    for (std::size_t i = 0; i < verts.size(); ++i) {
        if (!(mask & (1u << i))) continue;
        for (const auto& e : g.out_edges(verts[i])) {
            std::size_t j = 0;
            while (verts[j] != e.dst) ++j;
            if (!(mask & (1u << j))) return false;
        }
    }
    return true;
}

inline bool mask_saturated(const FiniteGraph& g, const std::vector<VertexId>& verts,
                           std::uint32_t mask) {
    for (std::size_t i = 0; i < verts.size(); ++i) {
        if (mask & (1u << i)) continue;
        const auto& row = g.out_edges(verts[i]);
        if (row.empty()) continue;  // sinks belong to V_inf
        bool all_in = true;
        for (const auto& e : row) {
            std::size_t j = 0;
            while (verts[j] != e.dst) ++j;
            if (!(mask & (1u << j))) {
                all_in = false;
                break;
            }
        }
        if (all_in) return false;
    }
    return true;
}

inline std::uint32_t set_to_mask(const std::vector<VertexId>& verts,
                                 const std::set<VertexId>& s) {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        if (s.count(verts[i])) m |= (1u << i);
    }
    return m;
}

inline std::set<VertexId> random_subset(SeqRng& rng, const std::vector<VertexId>& verts) {
    std::set<VertexId> s;
    for (const auto& v : verts) {
        if (rng.uniform() < 0.4) s.insert(v);
    }
    return s;
}

template <typename T>
std::map<VertexId, std::map<VertexId, T>> dense_power(const FiniteGraph& g, std::size_t n) {
    auto verts = g.vertices();
    std::map<VertexId, std::map<VertexId, T>> m;
    for (const auto& v : verts) m[v][v] = T(1);
    for (std::size_t step = 0; step < n; ++step) {
        std::map<VertexId, std::map<VertexId, T>> next;
        for (const auto& v : verts) {
            for (const auto& [w, val] : m[v]) {
                for (const auto& e : g.out_edges(w)) {
                    next[v][e.dst] += val * num::from_rational<T>(e.weight);
                }
            }
        }
        m = std::move(next);
    }
    return m;
}

}  // namespace selfcheck_detail

inline SuiteResult suite_closure_laws(std::uint64_t seed) {
    SuiteResult r{"closure-laws"};
    SeqRng rng(seed ^ 0x11);
    for (int t = 0; t < 25; ++t) {
        RandomGraphOptions opt;
        opt.max_vertices = 10;
        FiniteGraph g = random_finite_graph(rng, opt);
        auto verts = g.vertices();
        r.expect(hereditary_saturated_closure(g, {}).empty(), "closure of empty set not empty");
        for (int k = 0; k < 5; ++k) {
            auto s = selfcheck_detail::random_subset(rng, verts);
            auto t1 = selfcheck_detail::random_subset(rng, verts);
            std::set<VertexId> st = s;
            st.insert(t1.begin(), t1.end());
            auto cs = hereditary_saturated_closure(g, s);
            r.expect(hereditary_saturated_closure(g, cs) == cs, "closure not idempotent");
            auto cst = hereditary_saturated_closure(g, st);
            r.expect(std::includes(cst.begin(), cst.end(), cs.begin(), cs.end()),
                     "closure not monotone");
        }
    }
    return r;
}

inline SuiteResult suite_cofinality_bruteforce(std::uint64_t seed) {
    SuiteResult r{"cofinality-bruteforce"};
    SeqRng rng(seed ^ 0x22);
    for (int t = 0; t < 25; ++t) {
        RandomGraphOptions opt;
        opt.max_vertices = 12;
        FiniteGraph g = random_finite_graph(rng, opt);
        auto verts = g.vertices();
        const auto n = verts.size();
        bool proper_found = false;
        const std::uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);
        for (std::uint32_t mask = 1; mask < full && !proper_found; ++mask) {
            if (selfcheck_detail::mask_hereditary(g, verts, mask) &&
                selfcheck_detail::mask_saturated(g, verts, mask))
                proper_found = true;
        }
        Verdict v = is_cofinal(GraphSource(g));
        r.expect((v == Verdict::Yes) == !proper_found, "cofinality disagrees with brute force");

        if (n <= 8) {
            auto s = selfcheck_detail::random_subset(rng, verts);
            std::uint32_t smask = selfcheck_detail::set_to_mask(verts, s);
            std::uint32_t meet = full;
            for (std::uint32_t mask = 0; mask <= full; ++mask) {
                if ((mask & smask) != smask) continue;
                if (selfcheck_detail::mask_hereditary(g, verts, mask) &&
                    selfcheck_detail::mask_saturated(g, verts, mask))
                    meet &= mask;
            }
            auto cs = hereditary_saturated_closure(g, s);
            r.expect(selfcheck_detail::set_to_mask(verts, cs) == meet,
                     "closure differs from the smallest hereditary+saturated superset");
        }
    }
    return r;
}

inline SuiteResult suite_nonwandering_laws(std::uint64_t seed) {
    SuiteResult r{"nonwandering-laws"};
    SeqRng rng(seed ^ 0x33);
    for (int t = 0; t < 25; ++t) {
        RandomGraphOptions opt;
        opt.max_vertices = 9;
        opt.no_sinks = true;
        FiniteGraph g;
        try {
            g = random_cofinal_graph(rng, opt);
        } catch (const std::runtime_error&) {
            continue;
        }
        auto res = nonwandering_set(g);
        for (const auto& v : res.nw) {
            for (const auto& e : g.out_edges(v)) {
                r.expect(res.nw.count(e.dst) > 0, "NW is not hereditary on a cofinal graph");
            }
        }
        if (!res.nw.empty())
            r.expect(res.strongly_connected, "G^NW not strongly connected on a cofinal graph");
        // independent cycle detection via boolean reachability
        auto verts = g.vertices();
        auto m = selfcheck_detail::dense_power<Rational>(g, 1);
        std::map<VertexId, std::set<VertexId>> reach;
        for (const auto& v : verts) {
            for (const auto& [w, val] : m[v]) {
                if (val > 0) reach[v].insert(w);
            }
        }
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& v : verts) {
                auto cur = reach[v];
                for (const auto& w : cur) {
                    for (const auto& x : reach[w]) {
                        if (reach[v].insert(x).second) grew = true;
                    }
                }
            }
        }
        for (const auto& v : verts) {
            bool on_cycle = reach[v].count(v) > 0;
            r.expect(on_cycle == (res.nw.count(v) > 0), "NW disagrees with reachability");
        }
    }
    return r;
}

inline SuiteResult suite_stream_determinism(std::uint64_t /*seed*/) {
    SuiteResult r{"stream-determinism"};
    for (const std::string spec :
         {"gen:loop a=2", "gen:zwalk p=1/2 q=1/2", "gen:star_emitter r=1/2", "gen:halfline",
          "gen:cycle_with_tail n=3"}) {
        auto g = parse_generator_spec(spec);
        VertexId start = g.generator().metadata().start;
        bool t1 = false, t2 = false, t3 = false;
        auto a = g.out_edges(start, 6, t1);
        auto b = g.out_edges(start, 6, t2);
        r.expect(a.size() == b.size() && t1 == t2, "stream not deterministic: " + spec);
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
            r.expect(a[i].dst == b[i].dst && a[i].weight == b[i].weight,
                     "stream entries differ: " + spec);
        }
        auto c = g.out_edges(start, 3, t3);
        for (std::size_t i = 0; i < c.size(); ++i) {
            r.expect(c[i].dst == a[i].dst && c[i].weight == a[i].weight,
                     "limit does not truncate to a prefix: " + spec);
        }
    }
    return r;
}

inline SuiteResult suite_series_laws(std::uint64_t seed) {
    SuiteResult r{"series-laws"};
    SeqRng rng(seed ^ 0x44);
    TruncationConfig cfg;
    for (int t = 0; t < 10; ++t) {
        RandomGraphOptions opt;
        opt.max_vertices = 6;
        opt.no_sinks = true;
        FiniteGraph fg = random_finite_graph(rng, opt);
        GraphSource g(fg);
        auto verts = fg.vertices();
        auto p3 = selfcheck_detail::dense_power<Rational>(fg, 3);
        auto p2 = selfcheck_detail::dense_power<Rational>(fg, 2);
        auto p5 = selfcheck_detail::dense_power<Rational>(fg, 5);
        for (const auto& v : verts) {
            // supermultiplicativity on the diagonal
            r.expect(p5[v][v] >= p2[v][v] * p3[v][v], "diagonal supermultiplicativity fails");
            // Chapman-Kolmogorov, exact
            for (const auto& w : verts) {
                Rational conv(0);
                for (const auto& u : verts) conv += p2[v][u] * p3[u][w];
                r.expect(p5[v][w] == conv, "Chapman-Kolmogorov fails");
                auto pe = power_entry<Rational>(g, v, w, 5, cfg);
                r.expect(pe.exact && pe.value == p5[v][w], "power_entry departs from dense oracle");
            }
        }
        // propagation identity at every truncation depth (lambda = 2)
        Rational lam(2);
        const VertexId w0 = verts[rng.below(verts.size())];
        for (std::size_t N = 0; N <= 4; ++N) {
            for (const auto& v : verts) {
                Rational lhs(0);
                for (const auto& e : fg.out_edges(v)) {
                    Rational gn(0);
                    for (std::size_t n = 0; n <= N; ++n) {
                        auto pn = selfcheck_detail::dense_power<Rational>(fg, n);
                        gn += pn[e.dst][w0] / num::pow_int(lam, static_cast<long long>(n));
                    }
                    lhs += e.weight * gn;
                }
                Rational rhs(0);
                for (std::size_t n = 0; n <= N + 1; ++n) {
                    auto pn = selfcheck_detail::dense_power<Rational>(fg, n);
                    rhs += pn[v][w0] / num::pow_int(lam, static_cast<long long>(n));
                }
                rhs = lam * rhs - lam * Rational(v == w0 ? 1 : 0);
                r.expect(lhs == rhs, "Green propagation identity fails at depth N");
            }
        }
    }
    // monotone truncation on an emitter family
    {
        auto star = parse_generator_spec("gen:star_emitter r=1/2");
        VertexId u("u");
        TruncationConfig c1, c2, c3;
        c1.depth = 64;
        c1.row_limit = 8;
        c2.depth = 128;
        c2.row_limit = 8;
        c3.depth = 128;
        c3.row_limit = 32;
        auto e1 = green_series<double>(star, u, u, 2.0, c1);
        auto e2 = green_series<double>(star, u, u, 2.0, c2);
        auto e3 = green_series<double>(star, u, u, 2.0, c3);
        r.expect(e1.lower <= e2.lower + 1e-15, "deeper truncation lowered the bound");
        r.expect(e2.lower <= e3.lower + 1e-15, "wider rows lowered the bound");
    }
    // divergence transfer: flags agree across sources on a cofinal graph
    {
        RandomGraphOptions opt;
        opt.max_vertices = 6;
        opt.no_sinks = true;
        for (int t = 0; t < 5; ++t) {
            FiniteGraph fg = random_cofinal_graph(rng, opt);
            GraphSource g(fg);
            auto nwres = nonwandering_set(fg);
            if (nwres.nw.empty()) continue;
            auto b0 = beta0_estimate(g, cfg);
            double lam = b0.lambda0() / 2.0;
            if (lam <= 0) continue;
            const VertexId w0 = *nwres.nw.begin();
            TruncationConfig dcfg;
            dcfg.depth = 200;
            std::optional<bool> flag;
            bool agree = true;
            for (const auto& v : fg.vertices()) {
                auto est = green_series<double>(g, v, w0, lam, dcfg);
                if (!flag) flag = est.diverged;
                agree = agree && (est.diverged == *flag);
            }
            r.expect(agree, "diverged flag differs across sources");
            r.expect(flag.value_or(false), "series at lambda0/2 not flagged divergent");
        }
    }
    return r;
}

inline SuiteResult suite_collatz_wielandt(std::uint64_t seed) {
    SuiteResult r{"collatz-wielandt"};
    SeqRng rng(seed ^ 0x55);
    TruncationConfig cfg;
    for (int t = 0; t < 15; ++t) {
        RandomGraphOptions opt;
        opt.max_vertices = 8;
        FiniteGraph fg = random_strongly_connected_graph(rng, opt);
        GraphSource g(fg);
        auto b0 = beta0_estimate(g, cfg);
        r.expect(b0.lambda0_upper.has_value(), "finite graph must get two-sided bounds");
        if (!b0.lambda0_upper) continue;
        r.expect(b0.lambda0_lower <= *b0.lambda0_upper + 1e-15, "bounds out of order");
        double lam0 = b0.lambda0();
        // the sandwich holds for every positive vector
        auto verts = fg.vertices();
        const auto n = verts.size();
        for (int k = 0; k < 5; ++k) {
            std::vector<Rational> x(n);
            for (auto& xi : x) xi = Rational(1 + static_cast<long>(rng.below(5)),
                                             1 + static_cast<long>(rng.below(5)));
            std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n, Rational(0)));
            for (std::size_t i = 0; i < n; ++i) {
                for (const auto& e : fg.out_edges(verts[i])) {
                    std::size_t j = 0;
                    while (verts[j] != e.dst) ++j;
                    m[i][j] = e.weight;
                }
            }
            auto cw = detail::collatz_wielandt(m, x);
            r.expect(num::to_double(cw.lower) <= lam0 + 1e-9, "CW lower bound above lambda0");
            r.expect(lam0 <= num::to_double(cw.upper) + 1e-9, "CW upper bound below lambda0");
        }
    }
    return r;
}

inline SuiteResult suite_positivity_subinvariance(std::uint64_t seed) {
    SuiteResult r{"positivity-subinvariance"};
    SeqRng rng(seed ^ 0x66);
    TruncationConfig cfg;
    for (int t = 0; t < 12; ++t) {
        RandomGraphOptions opt;
        opt.max_vertices = 7;
        opt.no_sinks = true;
        FiniteGraph fg;
        try {
            fg = random_cofinal_graph(rng, opt);
        } catch (const std::runtime_error&) {
            continue;
        }
        GraphSource g(fg);
        auto nwres = nonwandering_set(fg);
        if (nwres.nw.empty()) continue;
        auto b0 = beta0_estimate(g, cfg);
        double lam0 = b0.lambda0();
        auto verts = fg.vertices();
        VertexId v0 = verts.front();
        auto cone = solve_finite<double>(g, lam0, v0, cfg);
        for (const auto& pt : cone.extreme_points) {
            double mn = std::numeric_limits<double>::infinity();
            for (const auto& [v, val] : pt.values) mn = std::min(mn, val);
            r.expect(mn > 0, "extreme point with a non-positive entry");
            // sub-invariance at several truncation depths
            double ratio_floor = pt.values.at(v0);
            for (std::size_t depth : {8u, 32u, 128u}) {
                TruncationConfig dcfg;
                dcfg.depth = depth;
                auto fps = first_passage_series<double>(g, v0, verts, lam0, dcfg);
                for (const auto& v : verts) {
                    double bound = pt.values.at(v) / ratio_floor;
                    r.expect(fps.sums.at(v) <= bound + 1e-7,
                             "sub-invariance bound violated at depth " + std::to_string(depth));
                }
            }
        }
    }
    return r;
}

inline SuiteResult suite_meet_join_laws(std::uint64_t seed) {
    SuiteResult r{"meet-join-laws"};
    (void)seed;
    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2");
    TruncationConfig cfg;
    cfg.depth = 400;
    double lam = 1.25;
    std::vector<VertexId> window;
    for (int i = -6; i <= 6; ++i) window.push_back(VertexId(std::to_string(i)));
    auto xi = VertexValueSource<double>::from_fn(geometric_vertex_fn<double>(2.0));
    auto mu = VertexValueSource<double>::from_fn(geometric_vertex_fn<double>(0.5));

    auto res = lattice_meet<double>(gz, lam, xi, mu, window, cfg);
    for (const auto& v : window) {
        double m = res.meet.values.at(v);
        r.expect(m <= *xi.at(v) + 1e-9 && m <= *mu.at(v) + 1e-9, "meet above an argument");
        r.expect(m >= -1e-12, "meet negative");
        double j = res.join.at(v);
        r.expect(std::abs((m + j) - (*xi.at(v) + *mu.at(v))) < 1e-9,
                 "meet + join != xi + mu");
    }

    // meet(xi, xi) = xi and meet(xi, 2 xi) = xi
    auto res2 = lattice_meet<double>(gz, lam, xi, xi, window, cfg);
    auto two_xi = VertexValueSource<double>::from_fn(
        [](const VertexId& v) -> std::optional<double> {
            auto f = geometric_vertex_fn<double>(2.0);
            auto x = f(v);
            if (!x) return std::nullopt;
            return 2.0 * *x;
        });
    auto res3 = lattice_meet<double>(gz, lam, xi, two_xi, window, cfg);
    for (const auto& v : window) {
        r.expect(std::abs(res2.meet.values.at(v) - *xi.at(v)) < 1e-6 * (1 + *xi.at(v)),
                 "meet(xi,xi) != xi");
        r.expect(std::abs(res3.meet.values.at(v) - *xi.at(v)) < 1e-6 * (1 + *xi.at(v)),
                 "meet(xi,2xi) != xi");
    }
    // the join of comparable elements passes the defining equations
    auto repj = check_vector<double>(gz, lam, res3.join, 1e-8, cfg);
    r.expect(repj.is_almost_harmonic, "join fails check_vector");
    return r;
}

inline SuiteResult suite_kernel_laws(std::uint64_t seed) {
    SuiteResult r{"kernel-laws"};
    (void)seed;
    TruncationConfig cfg;
    cfg.depth = 400;
    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2");
    double lam = 1.25;
    VertexId v0("0");

    // normalization and the constructive bound N_v = lambda^l / A^l_{v0 v}
    for (int vi = -4; vi <= 4; ++vi) {
        VertexId v(std::to_string(vi));
        for (int wi = 5; wi <= 12; ++wi) {
            VertexId w(std::to_string(wi));
            auto kv = martin_kernel<double>(gz, lam, v0, v, w, cfg);
            if (vi == 0) r.expect(kv.value == 1.0, "K_{v0}(w) != 1");
            std::size_t l = static_cast<std::size_t>(std::abs(vi));
            if (l == 0) l = 2;  // any power with a nonzero entry works
            auto al = power_entry<double>(gz, v0, v, l == 0 ? 2 : l, cfg);
            if (al.value > 0) {
                double bound = std::pow(lam, static_cast<double>(l)) / al.value;
                r.expect(kv.value <= bound + 1e-9, "kernel exceeds the constructive bound");
            }
        }
    }
    // harmonicity of kernels away from the target
    for (int vi = -3; vi <= 3; ++vi) {
        VertexId v(std::to_string(vi));
        VertexId w("9");
        auto kv = martin_kernel<double>(gz, lam, v0, v, w, cfg);
        double row = 0;
        bool trunc = false;
        for (const auto& e : gz.out_edges(v, cfg.row_limit, trunc)) {
            auto ku = martin_kernel<double>(gz, lam, v0, e.dst, w, cfg);
            row += num::to_double(e.weight) * ku.value;
        }
        r.expect(std::abs(row - lam * kv.value) < 1e-6, "kernel not harmonic away from target");
    }
    // emitter extremal agrees with the normalized potential
    {
        auto star = parse_generator_spec("gen:star_emitter r=1/2");
        auto win = probe_window(star, VertexId("u"), 2, cfg);
        VertexId base("w1"), u("u");
        auto ext = emitter_extremal<double>(star, 2.0, base, u, win, cfg);
        std::map<VertexId, double> delta{{u, 1.0}};
        auto pot = potential_hat<double>(star, 2.0, delta, win, cfg);
        double norm = pot.k_hat.values.at(base);
        for (const auto& v : win) {
            double a = ext.values.at(v);
            double b = pot.k_hat.values.at(v) / norm;
            r.expect(std::abs(a - b) < 1e-8 * (1 + std::abs(b)),
                     "emitter extremal differs from normalized potential");
        }
    }
    // h-transform rows sum to 1
    {
        std::vector<VertexId> probe;
        for (int i = -4; i <= 4; ++i) probe.push_back(VertexId(std::to_string(i)));
        auto psi = VertexValueSource<double>::from_fn(geometric_vertex_fn<double>(2.0));
        auto ht = h_transform<double>(gz, lam, psi, probe, cfg);
        for (const auto& v : probe) {
            double s = 0;
            for (const auto& e : ht.row(v)) s += num::to_double(e.probability);
            r.expect(std::abs(s - 1.0) <= 1e-12, "h-transform row sum departs from 1");
        }
        // exact rational row sums on the same family
        auto gze = parse_generator_spec("gen:zwalk p=1/2 q=1/2 mode=exact");
        auto psir = VertexValueSource<Rational>::from_fn(geometric_vertex_fn<Rational>(Rational(2)));
        auto hte = h_transform<Rational>(gze, Rational(5, 4), psir, probe, cfg);
        for (const auto& v : probe) {
            Rational s(0);
            for (const auto& e : hte.row(v)) s += e.probability;
            r.expect(s == 1, "exact h-transform row sum != 1");
        }
    }
    return r;
}

inline SuiteResult suite_sampling_determinism(std::uint64_t seed) {
    SuiteResult r{"sampling-determinism"};
    auto gz = parse_generator_spec("gen:zwalk p=1/2 q=1/2");
    TruncationConfig cfg;
    cfg.depth = 300;
    std::vector<VertexId> window;
    for (int i = -3; i <= 3; ++i) window.push_back(VertexId(std::to_string(i)));
    auto psi = VertexValueSource<double>::from_fn(geometric_vertex_fn<double>(2.0));
    auto ht = h_transform<double>(gz, 1.25, psi, window, cfg);
    auto a = sample_boundary_paths<double>(ht, VertexId("0"), 20, 100, seed, window, cfg);
    auto b = sample_boundary_paths<double>(ht, VertexId("0"), 20, 100, seed, window, cfg);
    r.expect(a.fraction_converged == b.fraction_converged, "sampling fraction not reproducible");
    r.expect(a.paths == b.paths ? true : false, "sampled paths not reproducible");
    for (std::size_t i = 0; i < a.final_deviation.size(); ++i)
        r.expect(a.final_deviation[i] == b.final_deviation[i], "deviations not reproducible");
    return r;
}

inline std::vector<SuiteResult> run_core_suites(std::uint64_t seed) {
    return {
        suite_closure_laws(seed),        suite_cofinality_bruteforce(seed),
        suite_nonwandering_laws(seed),   suite_stream_determinism(seed),
        suite_series_laws(seed),         suite_collatz_wielandt(seed),
        suite_positivity_subinvariance(seed), suite_meet_join_laws(seed),
        suite_kernel_laws(seed),         suite_sampling_determinism(seed),
    };
}

}  // namespace kms
