#pragma once

#include <compare>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kms/rational.hpp"

namespace kms {

/// Vertex label. Unique within a graph; ordered lexicographically by token so
/// every enumeration in the library is deterministic.
struct VertexId {
    std::string token;

    VertexId() = default;
    explicit VertexId(std::string t) : token(std::move(t)) {}

    auto operator<=>(const VertexId&) const = default;
};

inline std::string to_string(const VertexId& v) { return v.token; }

struct WeightedEdge {
    VertexId dst;
    Rational weight;
};

enum class ArithmeticMode { Exact, Float };

/// Finite weighted digraph given as an explicit table. No multiple edges:
/// one (src,dst) pair carries at most one weight, and all weights are > 0.
class FiniteGraph {
public:
    FiniteGraph() = default;

    /// Inserts an edge; throws on duplicate (src,dst) or weight <= 0.
    void add_edge(const VertexId& src, const VertexId& dst, const Rational& weight);
    void add_vertex(const VertexId& v);

    bool has_vertex(const VertexId& v) const { return adjacency_.count(v) > 0; }
    std::size_t vertex_count() const { return adjacency_.size(); }

    /// Vertices in lexicographic order.
    std::vector<VertexId> vertices() const;

    /// Out-edges of v sorted by destination token. Throws on unknown vertex.
    const std::vector<WeightedEdge>& out_edges(const VertexId& v) const;

    Rational edge_weight(const VertexId& src, const VertexId& dst) const;

private:
    std::map<VertexId, std::vector<WeightedEdge>> adjacency_;
};

enum class NWKind { Empty, Finite, Infinite };
enum class RecurrenceClosedForm { Recurrent, Transient, Unknown };

/// Trusted declarations shipped with a generator family. The library cannot
/// decide these properties for an infinite graph from finite data, so reports
/// echo them marked "declared".
struct GeneratorMetadata {
    bool cofinal = false;
    bool no_sinks = true;
    NWKind nw_kind = NWKind::Empty;
    std::vector<VertexId> v_infinity;        // sinks and infinite emitters
    std::vector<VertexId> nw_probes;         // sample vertices inside NW
    std::optional<Rational> lambda0_exact;   // closed-form critical value, when rational
    std::optional<double> lambda0_value;     // closed-form value as a float
    RecurrenceClosedForm recurrence_at_beta0 = RecurrenceClosedForm::Unknown;
    VertexId start;                          // canonical base vertex
};

/// A lazily enumerated infinite (or finite) graph. Implementations must be
/// pure and re-entrant: row(v) depends only on (family parameters, v).
class GeneratorFamily {
public:
    virtual ~GeneratorFamily() = default;

    virtual const std::string& name() const = 0;
    virtual const GeneratorMetadata& metadata() const = 0;
    virtual bool has_vertex(const VertexId& v) const = 0;

    /// First `limit` out-edges of v in the family's canonical order.
    /// Sets `truncated` when the row has more entries than `limit`.
    virtual std::vector<WeightedEdge> row_prefix(const VertexId& v, std::size_t limit,
                                                 bool& truncated) const = 0;

    /// Round-trippable "gen:NAME key=value ..." spec.
    virtual std::string spec_string() const = 0;
};

using GeneratorFactory =
    std::function<std::shared_ptr<GeneratorFamily>(const std::map<std::string, std::string>&)>;

/// Registry of generator families addressable from graph documents. Built-in
/// families are pre-registered; hosts may add their own.
class GeneratorRegistry {
public:
    static GeneratorRegistry& instance();

    void register_family(const std::string& name, GeneratorFactory factory);
    bool has_family(const std::string& name) const;
    std::shared_ptr<GeneratorFamily> make(const std::string& name,
                                          const std::map<std::string, std::string>& params) const;
    std::vector<std::string> family_names() const;

private:
    GeneratorRegistry();
    std::map<std::string, GeneratorFactory> factories_;
};

/// Either a finite table or a generator family. Immutable after construction.
class GraphSource {
public:
    explicit GraphSource(FiniteGraph g, ArithmeticMode mode = ArithmeticMode::Exact);
    explicit GraphSource(std::shared_ptr<GeneratorFamily> family,
                         ArithmeticMode mode = ArithmeticMode::Float);

    bool is_finite() const { return finite_.has_value(); }
    const FiniteGraph& finite() const;
    const GeneratorFamily& generator() const;
    ArithmeticMode mode() const { return mode_; }

    /// Same graph, different arithmetic mode.
    GraphSource with_mode(ArithmeticMode m) const;

    bool has_vertex(const VertexId& v) const;

    /// Out-edges of v, truncated to `limit` entries. `truncated` reports
    /// whether entries were dropped; truncation keeps the canonical prefix so
    /// repeated calls agree and row sums are monotone in `limit`.
    std::vector<WeightedEdge> out_edges(const VertexId& v, std::size_t limit,
                                        bool& truncated) const;

    std::string describe() const;

private:
    std::optional<FiniteGraph> finite_;
    std::shared_ptr<GeneratorFamily> generator_;
    ArithmeticMode mode_;
};

struct UnknownVertexError : std::runtime_error {
    explicit UnknownVertexError(const VertexId& v)
        : std::runtime_error("unknown vertex: '" + v.token + "'") {}
};

}  // namespace kms
