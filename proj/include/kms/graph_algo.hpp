#pragma once

#include <set>
#include <string>
#include <vector>

#include "kms/graph.hpp"

namespace kms {

enum class Verdict { Yes, No, DeclaredYes, DeclaredNo, Unknown };

std::string to_string(Verdict v);

/// Sinks of a finite graph (empty out-row).
std::vector<VertexId> finite_sinks(const FiniteGraph& g);

/// Smallest superset of S that is hereditary (closed under out-edges) and
/// saturated (absorbs every non-sink vertex all of whose out-neighbours it
/// already contains). Alternates the two sweeps to a fixpoint.
std::set<VertexId> hereditary_saturated_closure(const FiniteGraph& g,
                                                const std::set<VertexId>& s);

/// Finite graphs: decided by testing closure({v}) = V for every v.
/// Generators: echoes the declared metadata.
Verdict is_cofinal(const GraphSource& g);

struct NonWanderingResult {
    std::set<VertexId> nw;        // vertices lying on some cycle
    bool strongly_connected;      // is the induced subgraph on nw strongly connected?
};

/// Tarjan over the finite graph; a vertex is non-wandering iff its strongly
/// connected component has an internal edge (including self-loops).
NonWanderingResult nonwandering_set(const FiniteGraph& g);

struct AssumptionReport {
    Verdict cofinal = Verdict::Unknown;
    std::vector<VertexId> sinks;
    std::vector<VertexId> infinite_emitters;
    Verdict no_sinks = Verdict::Unknown;
    Verdict powers_finite = Verdict::Unknown;
    NWKind nw_kind = NWKind::Empty;
    bool nw_declared = false;
    std::vector<std::string> notes;
    bool ok() const;
};

/// Validates the standing assumptions. Finite graphs get decided verdicts;
/// generators echo declared metadata (marked declared) after probing each
/// declared infinite emitter up to probe_limit for consistency.
AssumptionReport classify_vertices(const GraphSource& g, std::size_t probe_limit = 64);

}  // namespace kms
