#pragma once

#include <string>

#include "kms/graph.hpp"
#include "kms/graph_algo.hpp"
#include "kms/rng.hpp"

namespace kms {

struct RandomGraphOptions {
    std::size_t min_vertices = 2;
    std::size_t max_vertices = 8;
    double edge_prob = 0.35;
    int max_weight_num = 4;
    int max_weight_den = 3;
    bool no_sinks = false;
};

inline FiniteGraph random_finite_graph(SeqRng& rng, const RandomGraphOptions& opt = {}) {
    std::size_t n = opt.min_vertices + rng.below(opt.max_vertices - opt.min_vertices + 1);
    auto name = [](std::size_t i) { return VertexId(std::string(1, static_cast<char>('a' + i))); };
    FiniteGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_vertex(name(i));
    auto weight = [&]() {
        return Rational(1 + static_cast<long>(rng.below(opt.max_weight_num)),
                        1 + static_cast<long>(rng.below(opt.max_weight_den)));
    };
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (rng.uniform() < opt.edge_prob) {
                g.add_edge(name(i), name(j), weight());
                any = true;
            }
        }
    }
    if (!any) g.add_edge(name(0), name(n == 1 ? 0 : 1), weight());
    if (opt.no_sinks) {
        for (std::size_t i = 0; i < n; ++i) {
            if (g.out_edges(name(i)).empty()) g.add_edge(name(i), name(rng.below(n)), weight());
        }
    }
    return g;
}

/// Rejection-samples until the graph is cofinal. `with_sink` additionally
/// demands at least one sink.
inline FiniteGraph random_cofinal_graph(SeqRng& rng, const RandomGraphOptions& opt = {},
                                        bool with_sink = false, int max_attempts = 5000) {
    for (int a = 0; a < max_attempts; ++a) {
        FiniteGraph g = random_finite_graph(rng, opt);
        if (with_sink && finite_sinks(g).empty()) continue;
        if (!with_sink && !finite_sinks(g).empty()) continue;
        if (is_cofinal(GraphSource(g)) == Verdict::Yes) return g;
    }
    throw std::runtime_error("random_cofinal_graph: rejection sampling exhausted");
}

/// A random permutation cycle through all vertices plus extra random edges:
/// strongly connected by construction.
inline FiniteGraph random_strongly_connected_graph(SeqRng& rng,
                                                   const RandomGraphOptions& opt = {}) {
    std::size_t n = opt.min_vertices + rng.below(opt.max_vertices - opt.min_vertices + 1);
    auto name = [](std::size_t i) { return VertexId(std::string(1, static_cast<char>('a' + i))); };
    auto weight = [&]() {
        return Rational(1 + static_cast<long>(rng.below(opt.max_weight_num)),
                        1 + static_cast<long>(rng.below(opt.max_weight_den)));
    };
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    FiniteGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_vertex(name(i));
    for (std::size_t i = 0; i < n; ++i) g.add_edge(name(perm[i]), name(perm[(i + 1) % n]), weight());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (g.edge_weight(name(i), name(j)) != 0) continue;
            if (rng.uniform() < opt.edge_prob * 0.5) g.add_edge(name(i), name(j), weight());
        }
    }
    return g;
}

}  // namespace kms
