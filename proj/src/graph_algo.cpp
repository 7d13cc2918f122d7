#include "kms/graph_algo.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stack>

namespace kms {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        case Verdict::DeclaredYes: return "declared(yes)";
        case Verdict::DeclaredNo: return "declared(no)";
        case Verdict::Unknown: return "unknown";
    }
    return "unknown";
}

std::vector<VertexId> finite_sinks(const FiniteGraph& g) {
    std::vector<VertexId> out;
    for (const auto& v : g.vertices()) {
        if (g.out_edges(v).empty()) out.push_back(v);
    }
    return out;
}

std::set<VertexId> hereditary_saturated_closure(const FiniteGraph& g,
                                                const std::set<VertexId>& s) {
    for (const auto& v : s) {
        if (!g.has_vertex(v)) throw UnknownVertexError(v);
    }
    std::set<VertexId> h = s;
    auto verts = g.vertices();
    bool changed = true;
    while (changed) {
        changed = false;
        // hereditary sweep: follow edges out of h
        std::vector<VertexId> frontier(h.begin(), h.end());
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            for (const auto& e : g.out_edges(frontier[i])) {
                if (h.insert(e.dst).second) frontier.push_back(e.dst);
            }
        }
        // saturation sweep: pull in non-sinks whose whole out-row lies in h
        for (const auto& v : verts) {
            if (h.count(v)) continue;
            const auto& row = g.out_edges(v);
            if (row.empty()) continue;  // sinks are in V_inf, never saturated in
            bool all_in = std::all_of(row.begin(), row.end(),
                                      [&](const WeightedEdge& e) { return h.count(e.dst) > 0; });
            if (all_in) {
                h.insert(v);
                changed = true;
            }
        }
    }
    return h;
}

Verdict is_cofinal(const GraphSource& g) {
    if (!g.is_finite()) {
        return g.generator().metadata().cofinal ? Verdict::DeclaredYes : Verdict::DeclaredNo;
    }
    const auto& fg = g.finite();
    auto verts = fg.vertices();
    for (const auto& v : verts) {
        if (hereditary_saturated_closure(fg, {v}).size() != verts.size()) return Verdict::No;
    }
    return Verdict::Yes;
}

NonWanderingResult nonwandering_set(const FiniteGraph& g) {
    auto verts = g.vertices();
    std::map<VertexId, int> index;
    for (std::size_t i = 0; i < verts.size(); ++i) index[verts[i]] = static_cast<int>(i);
    const int n = static_cast<int>(verts.size());

    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& e : g.out_edges(verts[i])) adj[i].push_back(index.at(e.dst));
    }

    // Iterative Tarjan.
    std::vector<int> disc(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stk;
    int timer = 0, ncomp = 0;

    struct Frame {
        int v;
        std::size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        disc[root] = low[root] = timer++;
        stk.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& fr = call.back();
            if (fr.edge < adj[fr.v].size()) {
                int w = adj[fr.v][fr.edge++];
                if (disc[w] == -1) {
                    disc[w] = low[w] = timer++;
                    stk.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[fr.v] = std::min(low[fr.v], disc[w]);
                }
            } else {
                int v = fr.v;
                call.pop_back();
                if (low[v] == disc[v]) {
                    while (true) {
                        int w = stk.back();
                        stk.pop_back();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if (w == v) break;
                    }
                    ++ncomp;
                }
                if (!call.empty()) {
                    int parent = call.back().v;
                    low[parent] = std::min(low[parent], low[v]);
                }
            }
        }
    }

    // A component is cyclic iff it has more than one vertex or a self-loop.
    std::vector<int> comp_size(ncomp, 0);
    for (int i = 0; i < n; ++i) comp_size[comp[i]]++;
    std::vector<bool> cyclic(ncomp, false);
    for (int i = 0; i < n; ++i) {
        if (comp_size[comp[i]] > 1) {
            cyclic[comp[i]] = true;
            continue;
        }
        for (int w : adj[i]) {
            if (w == i) cyclic[comp[i]] = true;
        }
    }

    NonWanderingResult res;
    res.strongly_connected = true;
    int first_cyclic = -1;
    bool single_component = true;
    for (int i = 0; i < n; ++i) {
        if (cyclic[comp[i]]) {
            res.nw.insert(verts[i]);
            if (first_cyclic == -1)
                first_cyclic = comp[i];
            else if (comp[i] != first_cyclic)
                single_component = false;
        }
    }
    if (!res.nw.empty()) {
        // The induced subgraph on NW is strongly connected iff NW is one SCC
        // and no NW edge leaves NW into another part of it... one SCC suffices:
        // every pair is mutually reachable inside the component.
        res.strongly_connected = single_component;
    }
    return res;
}

bool AssumptionReport::ok() const {
    auto positive = [](Verdict v) { return v == Verdict::Yes || v == Verdict::DeclaredYes; };
    return positive(cofinal) && positive(powers_finite) && notes.empty();
}

AssumptionReport classify_vertices(const GraphSource& g, std::size_t probe_limit) {
    AssumptionReport rep;
    if (g.is_finite()) {
        const auto& fg = g.finite();
        rep.cofinal = is_cofinal(g);
        rep.sinks = finite_sinks(fg);
        rep.no_sinks = rep.sinks.empty() ? Verdict::Yes : Verdict::No;
        rep.powers_finite = Verdict::Yes;  // finite sums of finite entries
        auto nwres = nonwandering_set(fg);
        rep.nw_kind = nwres.nw.empty() ? NWKind::Empty : NWKind::Finite;
        rep.nw_declared = false;
        // infinite emitters cannot occur in a finite table
        return rep;
    }

    const auto& meta = g.generator().metadata();
    rep.cofinal = meta.cofinal ? Verdict::DeclaredYes : Verdict::DeclaredNo;
    rep.no_sinks = meta.no_sinks ? Verdict::DeclaredYes : Verdict::DeclaredNo;
    rep.powers_finite = Verdict::DeclaredYes;
    rep.nw_kind = meta.nw_kind;
    rep.nw_declared = true;
    rep.infinite_emitters = meta.v_infinity;

    // Probe declared infinite emitters: a terminating row shorter than the
    // probe limit contradicts the declaration.
    for (const auto& u : meta.v_infinity) {
        bool truncated = false;
        auto row = g.out_edges(u, probe_limit, truncated);
        if (!truncated && row.size() < probe_limit) {
            rep.notes.push_back("inconsistent metadata: declared infinite emitter '" + u.token +
                                "' has a finite out-row (" + std::to_string(row.size()) +
                                " edges)");
        }
    }
    // The sinks-and-emitters locus must sit inside a non-empty NW set.
    if (!meta.v_infinity.empty() && meta.nw_kind == NWKind::Empty) {
        rep.notes.push_back(
            "inconsistent metadata: V_inf is non-empty but NW is declared empty");
    }
    return rep;
}

}  // namespace kms
