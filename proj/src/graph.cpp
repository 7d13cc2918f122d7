#include "kms/graph.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace kms {

void FiniteGraph::add_vertex(const VertexId& v) {
    if (v.token.empty()) throw std::invalid_argument("empty vertex token");
    adjacency_.try_emplace(v);
}

void FiniteGraph::add_edge(const VertexId& src, const VertexId& dst, const Rational& weight) {
    if (weight <= 0)
        throw std::invalid_argument("non-positive weight on edge " + src.token + " -> " +
                                    dst.token);
    add_vertex(src);
    add_vertex(dst);
    auto& row = adjacency_[src];
    for (const auto& e : row) {
        if (e.dst == dst)
            throw std::invalid_argument("duplicate edge " + src.token + " -> " + dst.token);
    }
    row.push_back({dst, weight});
    std::sort(row.begin(), row.end(),
              [](const WeightedEdge& a, const WeightedEdge& b) { return a.dst < b.dst; });
}

std::vector<VertexId> FiniteGraph::vertices() const {
    std::vector<VertexId> out;
    out.reserve(adjacency_.size());
    for (const auto& [v, _] : adjacency_) out.push_back(v);
    return out;
}

const std::vector<WeightedEdge>& FiniteGraph::out_edges(const VertexId& v) const {
    auto it = adjacency_.find(v);
    if (it == adjacency_.end()) throw UnknownVertexError(v);
    return it->second;
}

Rational FiniteGraph::edge_weight(const VertexId& src, const VertexId& dst) const {
    for (const auto& e : out_edges(src)) {
        if (e.dst == dst) return e.weight;
    }
    return Rational(0);
}

namespace {

bool parse_int_token(const std::string& s, long long& out) {
    if (s.empty()) return false;
    std::size_t start = (s[0] == '-') ? 1 : 0;
    if (start == s.size()) return false;
    if (s.find_first_not_of("0123456789", start) != std::string::npos) return false;
    // reject "-0", leading zeros: tokens must round-trip
    auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) return false;
    if (s[0] == '-') out = -out;
    return std::to_string(out) == s;
}

VertexId int_vertex(long long i) { return VertexId(std::to_string(i)); }

Rational require_param(const std::map<std::string, std::string>& params, const std::string& key,
                       const std::string& family) {
    auto it = params.find(key);
    if (it == params.end())
        throw std::invalid_argument("generator '" + family + "' needs parameter '" + key + "'");
    return parse_rational(it->second);
}

void reject_extras(const std::map<std::string, std::string>& params,
                   const std::set<std::string>& known, const std::string& family) {
    for (const auto& [k, _] : params) {
        if (!known.count(k))
            throw std::invalid_argument("generator '" + family + "': unknown parameter '" + k +
                                        "'");
    }
}

/// Single vertex "v" with a self-loop of weight a.
class LoopFamily final : public GeneratorFamily {
public:
    explicit LoopFamily(Rational a) : a_(std::move(a)) {
        if (a_ <= 0) throw std::invalid_argument("loop: a must be > 0");
        meta_.cofinal = true;
        meta_.nw_kind = NWKind::Finite;
        meta_.nw_probes = {VertexId("v")};
        meta_.lambda0_exact = a_;
        meta_.lambda0_value = num::to_double(a_);
        meta_.recurrence_at_beta0 = RecurrenceClosedForm::Recurrent;
        meta_.start = VertexId("v");
    }
    const std::string& name() const override {
        static const std::string n = "loop";
        return n;
    }
    const GeneratorMetadata& metadata() const override { return meta_; }
    bool has_vertex(const VertexId& v) const override { return v.token == "v"; }
    std::vector<WeightedEdge> row_prefix(const VertexId& v, std::size_t limit,
                                         bool& truncated) const override {
        if (!has_vertex(v)) throw UnknownVertexError(v);
        truncated = false;
        if (limit == 0) {
            truncated = true;
            return {};
        }
        return {{VertexId("v"), a_}};
    }
    std::string spec_string() const override { return "gen:loop a=" + rational_to_string(a_); }

private:
    Rational a_;
    GeneratorMetadata meta_;
};

/// Vertices 0,1,2,...; i -> i+1 with weight 1. No cycles, no sinks.
class HalflineFamily final : public GeneratorFamily {
public:
    HalflineFamily() {
        meta_.cofinal = true;
        meta_.nw_kind = NWKind::Empty;
        meta_.start = VertexId("0");
    }
    const std::string& name() const override {
        static const std::string n = "halfline";
        return n;
    }
    const GeneratorMetadata& metadata() const override { return meta_; }
    bool has_vertex(const VertexId& v) const override {
        long long i;
        return parse_int_token(v.token, i) && i >= 0;
    }
    std::vector<WeightedEdge> row_prefix(const VertexId& v, std::size_t limit,
                                         bool& truncated) const override {
        long long i;
        if (!parse_int_token(v.token, i) || i < 0) throw UnknownVertexError(v);
        truncated = false;
        if (limit == 0) {
            truncated = true;
            return {};
        }
        return {{int_vertex(i + 1), Rational(1)}};
    }
    std::string spec_string() const override { return "gen:halfline"; }

private:
    GeneratorMetadata meta_;
};

/// Vertices are the integers; i -> i+1 with weight p and i -> i-1 with
/// weight q. Critical value 2*sqrt(pq); divergence of the diagonal series at
/// the critical value follows from the central binomial asymptotics.
class ZWalkFamily final : public GeneratorFamily {
public:
    ZWalkFamily(Rational p, Rational q) : p_(std::move(p)), q_(std::move(q)) {
        if (p_ <= 0 || q_ <= 0) throw std::invalid_argument("zwalk: p and q must be > 0");
        meta_.cofinal = true;
        meta_.nw_kind = NWKind::Infinite;
        meta_.nw_probes = {VertexId("0")};
        if (auto s = exact_sqrt(p_ * q_)) meta_.lambda0_exact = Rational(2) * *s;
        meta_.lambda0_value = 2.0 * std::sqrt(num::to_double(p_) * num::to_double(q_));
        meta_.recurrence_at_beta0 = RecurrenceClosedForm::Recurrent;
        meta_.start = VertexId("0");
    }
    const std::string& name() const override {
        static const std::string n = "zwalk";
        return n;
    }
    const GeneratorMetadata& metadata() const override { return meta_; }
    bool has_vertex(const VertexId& v) const override {
        long long i;
        return parse_int_token(v.token, i);
    }
    std::vector<WeightedEdge> row_prefix(const VertexId& v, std::size_t limit,
                                         bool& truncated) const override {
        long long i;
        if (!parse_int_token(v.token, i)) throw UnknownVertexError(v);
        std::vector<WeightedEdge> row = {{int_vertex(i + 1), p_}, {int_vertex(i - 1), q_}};
        truncated = limit < row.size();
        if (truncated) row.resize(limit);
        return row;
    }
    std::string spec_string() const override {
        return "gen:zwalk p=" + rational_to_string(p_) + " q=" + rational_to_string(q_);
    }

private:
    Rational p_, q_;
    GeneratorMetadata meta_;
};

/// One infinite emitter "u" with edges u -> w_i of weight r^i (i >= 1), and
/// w_i -> u of weight 1. Diagonal powers at u are (r/(1-r))^m for length 2m,
/// so the critical value is sqrt(r/(1-r)) and the diagonal series diverges
/// there (constant terms).
class StarEmitterFamily final : public GeneratorFamily {
public:
    explicit StarEmitterFamily(Rational r) : r_(std::move(r)) {
        if (r_ <= 0 || r_ >= 1) throw std::invalid_argument("star_emitter: need 0 < r < 1");
        meta_.cofinal = true;
        meta_.nw_kind = NWKind::Infinite;
        meta_.v_infinity = {VertexId("u")};
        meta_.nw_probes = {VertexId("u")};
        Rational ratio = r_ / (Rational(1) - r_);
        if (auto s = exact_sqrt(ratio)) meta_.lambda0_exact = *s;
        meta_.lambda0_value = std::sqrt(num::to_double(ratio));
        meta_.recurrence_at_beta0 = RecurrenceClosedForm::Recurrent;
        meta_.start = VertexId("u");
    }
    const std::string& name() const override {
        static const std::string n = "star_emitter";
        return n;
    }
    const GeneratorMetadata& metadata() const override { return meta_; }
    bool has_vertex(const VertexId& v) const override {
        if (v.token == "u") return true;
        if (v.token.size() < 2 || v.token[0] != 'w') return false;
        long long i;
        return parse_int_token(v.token.substr(1), i) && i >= 1;
    }
    std::vector<WeightedEdge> row_prefix(const VertexId& v, std::size_t limit,
                                         bool& truncated) const override {
        if (!has_vertex(v)) throw UnknownVertexError(v);
        if (v.token == "u") {
            truncated = true;  // the row is infinite
            std::vector<WeightedEdge> row;
            row.reserve(limit);
            Rational w = r_;
            for (std::size_t i = 1; i <= limit; ++i) {
                row.push_back({VertexId("w" + std::to_string(i)), w});
                w *= r_;
            }
            return row;
        }
        truncated = false;
        if (limit == 0) {
            truncated = true;
            return {};
        }
        return {{VertexId("u"), Rational(1)}};
    }
    std::string spec_string() const override {
        return "gen:star_emitter r=" + rational_to_string(r_);
    }

private:
    Rational r_;
    GeneratorMetadata meta_;
};

/// A weight-1 cycle c0..c{n-1} fed by an infinite inbound tail
/// ... -> t2 -> t1 -> c0. Non-wandering set is the cycle, so the critical
/// value is 1 and the matrix is recurrent.
class CycleWithTailFamily final : public GeneratorFamily {
public:
    explicit CycleWithTailFamily(long long n) : n_(n) {
        if (n_ < 1) throw std::invalid_argument("cycle_with_tail: need n >= 1");
        meta_.cofinal = true;
        meta_.nw_kind = NWKind::Finite;
        meta_.nw_probes = {VertexId("c0")};
        meta_.lambda0_exact = Rational(1);
        meta_.lambda0_value = 1.0;
        meta_.recurrence_at_beta0 = RecurrenceClosedForm::Recurrent;
        meta_.start = VertexId("c0");
    }
    const std::string& name() const override {
        static const std::string n = "cycle_with_tail";
        return n;
    }
    const GeneratorMetadata& metadata() const override { return meta_; }
    bool has_vertex(const VertexId& v) const override {
        if (v.token.size() < 2) return false;
        long long i;
        if (v.token[0] == 'c')
            return parse_int_token(v.token.substr(1), i) && i >= 0 && i < n_;
        if (v.token[0] == 't') return parse_int_token(v.token.substr(1), i) && i >= 1;
        return false;
    }
    std::vector<WeightedEdge> row_prefix(const VertexId& v, std::size_t limit,
                                         bool& truncated) const override {
        if (!has_vertex(v)) throw UnknownVertexError(v);
        truncated = false;
        if (limit == 0) {
            truncated = true;
            return {};
        }
        long long i = std::stoll(v.token.substr(1));
        if (v.token[0] == 'c')
            return {{VertexId("c" + std::to_string((i + 1) % n_)), Rational(1)}};
        if (i == 1) return {{VertexId("c0"), Rational(1)}};
        return {{VertexId("t" + std::to_string(i - 1)), Rational(1)}};
    }
    std::string spec_string() const override {
        return "gen:cycle_with_tail n=" + std::to_string(n_);
    }

private:
    long long n_;
    GeneratorMetadata meta_;
};

}  // namespace

GeneratorRegistry::GeneratorRegistry() {
    register_family("loop", [](const std::map<std::string, std::string>& params) {
        reject_extras(params, {"a"}, "loop");
        return std::make_shared<LoopFamily>(require_param(params, "a", "loop"));
    });
    register_family("halfline", [](const std::map<std::string, std::string>& params) {
        reject_extras(params, {}, "halfline");
        return std::make_shared<HalflineFamily>();
    });
    register_family("zwalk", [](const std::map<std::string, std::string>& params) {
        reject_extras(params, {"p", "q"}, "zwalk");
        return std::make_shared<ZWalkFamily>(require_param(params, "p", "zwalk"),
                                             require_param(params, "q", "zwalk"));
    });
    register_family("star_emitter", [](const std::map<std::string, std::string>& params) {
        reject_extras(params, {"r"}, "star_emitter");
        return std::make_shared<StarEmitterFamily>(require_param(params, "r", "star_emitter"));
    });
    register_family("cycle_with_tail", [](const std::map<std::string, std::string>& params) {
        reject_extras(params, {"n"}, "cycle_with_tail");
        Rational n = require_param(params, "n", "cycle_with_tail");
        if (boost::multiprecision::denominator(n) != 1)
            throw std::invalid_argument("cycle_with_tail: n must be an integer");
        return std::make_shared<CycleWithTailFamily>(
            boost::multiprecision::numerator(n).convert_to<long long>());
    });
}

GeneratorRegistry& GeneratorRegistry::instance() {
    static GeneratorRegistry reg;
    return reg;
}

void GeneratorRegistry::register_family(const std::string& name, GeneratorFactory factory) {
    factories_[name] = std::move(factory);
}

bool GeneratorRegistry::has_family(const std::string& name) const {
    return factories_.count(name) > 0;
}

std::shared_ptr<GeneratorFamily> GeneratorRegistry::make(
    const std::string& name, const std::map<std::string, std::string>& params) const {
    auto it = factories_.find(name);
    if (it == factories_.end())
        throw std::invalid_argument("unknown generator family: '" + name + "'");
    return it->second(params);
}

std::vector<std::string> GeneratorRegistry::family_names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) out.push_back(k);
    return out;
}

GraphSource::GraphSource(FiniteGraph g, ArithmeticMode mode)
    : finite_(std::move(g)), mode_(mode) {}

GraphSource::GraphSource(std::shared_ptr<GeneratorFamily> family, ArithmeticMode mode)
    : generator_(std::move(family)), mode_(mode) {
    if (!generator_) throw std::invalid_argument("null generator family");
}

const FiniteGraph& GraphSource::finite() const {
    if (!finite_) throw std::logic_error("graph source is not finite");
    return *finite_;
}

const GeneratorFamily& GraphSource::generator() const {
    if (!generator_) throw std::logic_error("graph source is not a generator");
    return *generator_;
}

GraphSource GraphSource::with_mode(ArithmeticMode m) const {
    if (finite_) return GraphSource(*finite_, m);
    return GraphSource(generator_, m);
}

bool GraphSource::has_vertex(const VertexId& v) const {
    return finite_ ? finite_->has_vertex(v) : generator_->has_vertex(v);
}

std::vector<WeightedEdge> GraphSource::out_edges(const VertexId& v, std::size_t limit,
                                                 bool& truncated) const {
    if (finite_) {
        const auto& row = finite_->out_edges(v);
        truncated = row.size() > limit;
        if (!truncated) return row;
        return std::vector<WeightedEdge>(row.begin(), row.begin() + limit);
    }
    return generator_->row_prefix(v, limit, truncated);
}

std::string GraphSource::describe() const {
    if (finite_) {
        std::ostringstream os;
        os << "finite graph with " << finite_->vertex_count() << " vertices";
        return os.str();
    }
    return generator_->spec_string();
}

}  // namespace kms
