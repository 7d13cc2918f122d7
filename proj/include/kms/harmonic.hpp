#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kms/series.hpp"

namespace kms {

enum class VectorKind { Harmonic, AlmostHarmonic, Candidate };

inline std::string to_string(VectorKind k) {
    switch (k) {
        case VectorKind::Harmonic: return "harmonic";
        case VectorKind::AlmostHarmonic: return "almost_harmonic";
        case VectorKind::Candidate: return "candidate";
    }
    return "candidate";
}

/// A non-negative vector on an explored support.
template <typename T>
struct HarmonicVector {
    T lambda{};
    std::map<VertexId, T> values;
    VectorKind kind = VectorKind::Candidate;
};

/// Vertex-indexed values given by a finite table, an expression, or both.
/// Operations that iterate the matrix beyond a fixed window evaluate the
/// fallback lazily.
template <typename T>
struct VertexValueSource {
    std::map<VertexId, T> values;
    std::function<std::optional<T>(const VertexId&)> fallback;

    std::optional<T> at(const VertexId& v) const {
        auto it = values.find(v);
        if (it != values.end()) return it->second;
        if (fallback) return fallback(v);
        return std::nullopt;
    }

    static VertexValueSource from_map(std::map<VertexId, T> m) {
        VertexValueSource s;
        s.values = std::move(m);
        return s;
    }
    static VertexValueSource from_fn(std::function<std::optional<T>(const VertexId&)> f) {
        VertexValueSource s;
        s.fallback = std::move(f);
        return s;
    }
};

/// base^i on graphs whose vertex tokens are integers (zwalk, halfline).
template <typename T>
std::function<std::optional<T>(const VertexId&)> geometric_vertex_fn(const T& base) {
    return [base](const VertexId& v) -> std::optional<T> {
        try {
            std::size_t pos = 0;
            long long i = std::stoll(v.token, &pos);
            if (pos != v.token.size()) return std::nullopt;
            return num::pow_int(base, i);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
}

/// Sinks and infinite emitters of the source: computed for finite tables,
/// declared for generators.
inline std::set<VertexId> v_infinity_of(const GraphSource& g) {
    std::set<VertexId> out;
    if (g.is_finite()) {
        for (const auto& s : finite_sinks(g.finite())) out.insert(s);
    } else {
        for (const auto& u : g.generator().metadata().v_infinity) out.insert(u);
    }
    return out;
}

template <typename T>
struct CheckReport {
    bool is_almost_harmonic = true;
    bool is_harmonic = true;
    bool positivity_ok = true;
    std::map<VertexId, T> residuals;  // (A xi)_v - lambda xi_v at fully checkable vertices
    std::vector<VertexId> checked;
    std::vector<VertexId> skipped;  // boundary: some out-neighbour is unvalued
    std::vector<std::string> violations;
};

/// Defining (in)equalities on the explored support: equality within tol off
/// V_inf, one-sided slack on V_inf. Truncated rows under-approximate the row
/// sum, so a violation of the slack inequality is certified even at an
/// infinite emitter.
template <typename T>
CheckReport<T> check_vector(const GraphSource& g, const T& lambda,
                            const std::map<VertexId, T>& xi, double tol,
                            const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    if (xi.empty()) throw DomainError("empty vector");
    bool all_zero = true;
    for (const auto& [v, val] : xi) {
        if (val < T(0)) throw std::invalid_argument("vector has a negative value at " + v.token);
        if (val > T(0)) all_zero = false;
    }
    if (all_zero) throw DomainError("zero vector rejected: the statements concern non-zero vectors");

    auto vinf = v_infinity_of(g);
    CheckReport<T> rep;
    T max_val(0);
    for (const auto& [v, val] : xi) {
        if (val > max_val) max_val = val;
    }
    for (const auto& [v, val] : xi) {
        if (val == T(0)) rep.positivity_ok = false;
        bool truncated = false;
        auto row = g.out_edges(v, cfg.row_limit, truncated);
        T partial(0);
        bool missing = false;
        for (const auto& e : row) {
            auto it = xi.find(e.dst);
            if (it == xi.end()) {
                missing = true;
                continue;
            }
            partial += num::from_rational<T>(e.weight) * it->second;
        }
        const bool in_vinf = vinf.count(v) > 0;
        T bound = lambda * val;
        T slack = partial - bound;  // >0 means the inequality is violated
        if (missing || truncated) {
            // partial is a certified lower bound of the row sum
            if (num::to_double(slack) > tol) {
                rep.is_almost_harmonic = false;
                rep.is_harmonic = false;
                rep.violations.push_back("row sum at " + v.token +
                                         " exceeds lambda*xi (certified from a partial row)");
                rep.residuals[v] = slack;
                rep.checked.push_back(v);
                continue;
            }
            if (missing) {
                rep.skipped.push_back(v);
                continue;
            }
            // truncated emitter row, all enumerated neighbours valued: the
            // one-sided condition is decidable, equality only heuristically
            rep.residuals[v] = slack;
            rep.checked.push_back(v);
            if (num::abs_val(slack) > T(0) && num::to_double(num::abs_val(slack)) > tol)
                rep.is_harmonic = false;
            continue;
        }
        rep.residuals[v] = slack;
        rep.checked.push_back(v);
        if (in_vinf) {
            if (num::to_double(slack) > tol) {
                rep.is_almost_harmonic = false;
                rep.is_harmonic = false;
                rep.violations.push_back("slack inequality violated at " + v.token);
            } else if (num::to_double(num::abs_val(slack)) > tol) {
                rep.is_harmonic = false;  // strict slack
            }
        } else {
            if (num::to_double(num::abs_val(slack)) > tol) {
                rep.is_almost_harmonic = false;
                rep.is_harmonic = false;
                rep.violations.push_back("equality violated at " + v.token);
            }
        }
    }
    return rep;
}

enum class SweepOrder { Lexicographic, ReverseLexicographic };

/// Unique extension of values from a hereditary set: repeatedly adjoin a
/// finite-emitting vertex whose whole out-row is already valued and give it
/// the forced value lambda^{-1} * (row sum). Candidate order does not affect
/// the result; two orders are exposed so tests can assert that.
template <typename T>
HarmonicVector<T> extend_from_hereditary(const GraphSource& g, const T& lambda,
                                         const std::set<VertexId>& hereditary,
                                         const std::map<VertexId, T>& eta,
                                         const std::vector<VertexId>& candidates,
                                         const TruncationConfig& cfg = {},
                                         SweepOrder order = SweepOrder::Lexicographic) {
    cfg.validate();
    if (hereditary.empty()) throw DomainError("hereditary set must be non-empty");
    for (const auto& v : hereditary) {
        if (!eta.count(v)) throw DomainError("eta is missing a value at " + v.token);
    }
    for (const auto& [v, _] : eta) {
        if (!hereditary.count(v))
            throw DomainError("eta assigns a value outside the hereditary set at " + v.token);
    }
    auto vinf = v_infinity_of(g);
    for (const auto& v : hereditary) {
        bool truncated = false;
        auto row = g.out_edges(v, cfg.row_limit, truncated);
        if (truncated && !vinf.count(v))
            throw DomainError("cannot verify the hereditary property: row of " + v.token +
                              " is truncated");
        for (const auto& e : row) {
            if (!hereditary.count(e.dst))
                throw DomainError("set is not hereditary: edge " + v.token + " -> " +
                                  e.dst.token + " leaves it");
        }
        if (truncated)
            throw DomainError("set is not hereditary: infinite emitter " + v.token +
                              " cannot have its whole row inside a finite set");
    }
    auto rep = check_vector(g, lambda, eta, cfg.tol, cfg);
    if (!rep.is_almost_harmonic)
        throw DomainError("eta violates the defining (in)equalities inside the hereditary set: " +
                          (rep.violations.empty() ? std::string("see residuals")
                                                  : rep.violations.front()));

    std::vector<VertexId> order_list = candidates;
    std::sort(order_list.begin(), order_list.end());
    if (order == SweepOrder::ReverseLexicographic)
        std::reverse(order_list.begin(), order_list.end());

    std::map<VertexId, T> values = eta;
    T inv_lambda = T(1) / lambda;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& v : order_list) {
            if (values.count(v) || vinf.count(v)) continue;
            bool truncated = false;
            auto row = g.out_edges(v, cfg.row_limit, truncated);
            if (truncated) continue;
            T sum(0);
            bool ready = true;
            for (const auto& e : row) {
                auto it = values.find(e.dst);
                if (it == values.end()) {
                    ready = false;
                    break;
                }
                sum += num::from_rational<T>(e.weight) * it->second;
            }
            if (!ready) continue;
            values.emplace(v, sum * inv_lambda);
            changed = true;
        }
    }
    HarmonicVector<T> out;
    out.lambda = lambda;
    out.values = std::move(values);
    out.kind = VectorKind::AlmostHarmonic;
    return out;
}

/// Finite-graph convenience: candidates default to all vertices.
template <typename T>
HarmonicVector<T> extend_from_hereditary(const GraphSource& g, const T& lambda,
                                         const std::set<VertexId>& hereditary,
                                         const std::map<VertexId, T>& eta,
                                         const TruncationConfig& cfg = {},
                                         SweepOrder order = SweepOrder::Lexicographic) {
    if (!g.is_finite())
        throw std::invalid_argument("generator sources need an explicit candidate window");
    return extend_from_hereditary(g, lambda, hereditary, eta, g.finite().vertices(), cfg, order);
}

template <typename T>
struct RecurrentConstruction {
    HarmonicVector<T> vector;  // normalized so that the base vertex carries 1
    T diagnostic{};            // truncated sum_n r_ww(n) lambda0^{-n}; tends to 1
    bool diagnostic_converged = false;
};

/// The recurrent-case construction: xi_v = sum_n r_{vw}(n) lambda0^{-n} over
/// the window, normalized at w. Requires a recurrent verdict and an exactly
/// known lambda0.
template <typename T>
RecurrentConstruction<T> recurrent_harmonic(const GraphSource& g, const VertexId& w,
                                            const std::vector<VertexId>& window,
                                            const TruncationConfig& cfg = {}) {
    cfg.validate();
    auto verdict = classify_recurrence(g, cfg);
    if (verdict.verdict != Recurrence::Recurrent)
        throw DomainError("recurrent construction requires a recurrent verdict (got " +
                          to_string(verdict.verdict) + ")");
    auto b0 = beta0_estimate(g, cfg);
    T lambda0;
    if constexpr (num::is_exact_v<T>) {
        if (!b0.lambda0_exact)
            throw DomainError("exact lambda0 unavailable for this graph; use float mode");
        lambda0 = num::from_rational<T>(*b0.lambda0_exact);
    } else {
        if (!b0.exact)
            throw DomainError("lambda0 is only known as a one-sided bound; the construction "
                              "needs its exact value");
        lambda0 = static_cast<T>(b0.lambda0());
    }
    if (g.is_finite()) {
        auto nwres = nonwandering_set(g.finite());
        if (!nwres.nw.count(w))
            throw DomainError("base vertex " + w.token + " is not non-wandering");
    }

    std::vector<VertexId> sources = window;
    if (std::find(sources.begin(), sources.end(), w) == sources.end()) sources.push_back(w);
    auto fps = first_passage_series<T>(g, w, sources, lambda0, cfg);
    if (fps.diagnostic <= T(0))
        throw DomainError("no first-passage mass returned to " + w.token +
                          " within the depth budget");

    RecurrentConstruction<T> out;
    out.diagnostic = fps.diagnostic;
    out.diagnostic_converged =
        std::abs(num::to_double(fps.diagnostic) - 1.0) <= std::max(cfg.tol * 100, 1e-6);
    out.vector.lambda = lambda0;
    for (const auto& [v, s] : fps.sums) out.vector.values[v] = s / fps.diagnostic;
    out.vector.values[w] = T(1);
    out.vector.kind = out.diagnostic_converged ? VectorKind::Harmonic : VectorKind::Candidate;
    return out;
}

template <typename T>
struct Potential {
    HarmonicVector<T> k_hat;
    T summability{};  // truncated sum_u G(u,u) k_u
};

/// k_hat_v = sum_{u in V_inf} G_lambda(v,u) k_u over the window. The charge
/// must live on V_inf and pass the (truncated) summability diagnostic.
template <typename T>
Potential<T> potential_hat(const GraphSource& g, const T& lambda,
                           const std::map<VertexId, T>& charge,
                           const std::vector<VertexId>& window,
                           const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    auto vinf = v_infinity_of(g);
    bool nonzero = false;
    for (const auto& [u, k] : charge) {
        if (k < T(0)) throw std::invalid_argument("charge must be non-negative");
        if (k == T(0)) continue;
        nonzero = true;
        if (!vinf.count(u))
            throw DomainError("charge must be supported on V_inf; " + u.token +
                              " is neither a sink nor an infinite emitter");
    }
    Potential<T> out;
    out.k_hat.lambda = lambda;
    out.k_hat.kind = VectorKind::AlmostHarmonic;
    if (!nonzero) {
        for (const auto& v : window) out.k_hat.values[v] = T(0);
        out.summability = T(0);
        return out;
    }

    for (const auto& [u, k] : charge) {
        if (k == T(0)) continue;
        auto diag = green_series<T>(g, u, u, lambda, cfg);
        if (diag.diverged)
            throw DomainError("summability diagnostic diverges at " + u.token);
        out.summability += diag.lower * k;
    }

    std::set<VertexId> targets;
    for (const auto& v : window) targets.insert(v);
    for (const auto& [u, k] : charge) {
        if (k > T(0)) targets.insert(u);
    }
    for (const auto& v : targets) {
        LocalView<T> view(g, cfg.row_limit, cfg.max_region);
        int iv = view.intern(v);
        std::vector<std::pair<int, T>> charge_idx;
        for (const auto& [u, k] : charge) {
            if (k > T(0)) charge_idx.emplace_back(view.intern(u), k);
        }
        detail::ForwardWalk<T> walk(view, iv, T(1) / lambda);
        T acc(0);
        detail::DivergenceMonitor<T> monitor;
        for (std::size_t n = 0; n <= cfg.depth; ++n) {
            T term(0);
            for (const auto& [iu, k] : charge_idx) term += walk.at(iu) * k;
            acc += term;
            monitor.observe(term, acc, cfg);
            if (monitor.flagged())
                throw DomainError("potential series diverges at " + v.token);
            if (n < cfg.depth) walk.step();
            if (walk.empty()) break;
        }
        out.k_hat.values[v] = acc;
    }
    return out;
}

template <typename T>
struct RieszPair {
    HarmonicVector<T> phi;
    std::map<VertexId, T> charge;
    T lambda{};
    double reconstruction_residual = 0;  // sup over window of |psi - phi - k_hat|
    std::size_t iterations = 0;
};

/// Splits an almost harmonic psi into its harmonic part (the monotone limit
/// of lambda^{-n} A^n psi) and the charge k_u = psi_u - lambda^{-1}(A psi)_u
/// on V_inf. The iterates are non-increasing; a violation beyond rounding
/// slack signals arithmetic breakdown and aborts.
template <typename T>
RieszPair<T> riesz_decompose(const GraphSource& g, const T& lambda,
                             const std::map<VertexId, T>& psi,
                             const std::vector<VertexId>& window,
                             const TruncationConfig& cfg = {}) {
    cfg.validate();
    auto rep = check_vector(g, lambda, psi, std::max(cfg.tol, 1e-9), cfg);
    if (!rep.is_almost_harmonic)
        throw DomainError("psi is not almost harmonic: " +
                          (rep.violations.empty() ? std::string("violations found")
                                                  : rep.violations.front()));

    RieszPair<T> out;
    out.lambda = lambda;
    T inv_lambda = T(1) / lambda;

    auto vinf = v_infinity_of(g);
    for (const auto& u : vinf) {
        auto it = psi.find(u);
        if (it == psi.end()) continue;
        bool truncated = false;
        auto row = g.out_edges(u, cfg.row_limit, truncated);
        T sum(0);
        for (const auto& e : row) {
            auto jt = psi.find(e.dst);
            if (jt == psi.end())
                throw DomainError("psi must be valued on the explored out-row of " + u.token);
            sum += num::from_rational<T>(e.weight) * jt->second;
        }
        T k = it->second - sum * inv_lambda;
        if (k < T(0)) k = T(0);  // rounding at an equality vertex
        out.charge[u] = k;
    }

    // monotone plain iterates on a (possibly shrinking) domain
    std::map<VertexId, T> x = psi;
    std::set<VertexId> window_set(window.begin(), window.end());
    double slack = num::is_exact_v<T> ? 0.0 : 1e-12;
    std::size_t n = 0;
    for (; n < cfg.depth; ++n) {
        std::map<VertexId, T> y;
        for (const auto& [v, val] : x) {
            bool truncated = false;
            auto row = g.out_edges(v, cfg.row_limit, truncated);
            T sum(0);
            bool ready = true;
            for (const auto& e : row) {
                auto it = x.find(e.dst);
                if (it == x.end()) {
                    ready = false;
                    break;
                }
                sum += num::from_rational<T>(e.weight) * it->second;
            }
            if (!ready) continue;
            T next = sum * inv_lambda;
            double scale = std::max(1.0, std::abs(num::to_double(val)));
            if (num::to_double(next - val) > slack * scale)
                throw DomainError("non-monotone iterate at " + v.token +
                                  ": arithmetic breakdown");
            y.emplace(v, next);
        }
        bool covers_window = true;
        for (const auto& w : window_set) {
            if (!y.count(w)) {
                covers_window = false;
                break;
            }
        }
        if (!covers_window) break;
        double change = 0;
        for (const auto& [v, val] : y) {
            if (!window_set.count(v)) continue;
            change = std::max(change, std::abs(num::to_double(val - x.at(v))));
        }
        x = std::move(y);
        if (change <= cfg.tol) {
            ++n;
            break;
        }
    }
    out.iterations = n;
    out.phi.lambda = lambda;
    out.phi.kind = VectorKind::Harmonic;
    for (const auto& v : window) {
        auto it = x.find(v);
        if (it == x.end())
            throw DomainError("phi iteration lost the probe window before converging; "
                              "provide psi on a larger support or lower the depth");
        out.phi.values[v] = it->second;
    }

    auto khat = potential_hat(g, lambda, out.charge, window, cfg);
    double resid = 0;
    for (const auto& v : window) {
        auto ps = psi.find(v);
        if (ps == psi.end()) continue;
        T delta = ps->second - out.phi.values.at(v) - khat.k_hat.values.at(v);
        resid = std::max(resid, std::abs(num::to_double(delta)));
    }
    out.reconstruction_residual = resid;
    return out;
}

template <typename T>
struct MeetResult {
    HarmonicVector<T> meet;
    std::map<VertexId, T> join;  // xi + mu - meet
    std::size_t iterations = 0;
    double final_change = 0;
};

/// Greatest lower bound in the cone order: iterate lambda^{-n} A^n against
/// the pointwise minimum and take the monotone limit.
template <typename T>
MeetResult<T> lattice_meet(const GraphSource& g, const T& lambda,
                           const VertexValueSource<T>& xi, const VertexValueSource<T>& mu,
                           const std::vector<VertexId>& window,
                           const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (window.empty()) throw std::invalid_argument("empty probe window");

    // materialize min(xi, mu) on the reachable region
    LocalView<T> view(g, cfg.row_limit, cfg.max_region);
    std::vector<int> srcs;
    for (const auto& v : window) srcs.push_back(view.intern(v));
    view.grow_region(srcs, cfg.depth);
    const auto region = static_cast<std::size_t>(view.size());

    std::vector<T> x(region, T(0));
    std::vector<char> valued(region, 0);
    for (std::size_t i = 0; i < region; ++i) {
        auto a = xi.at(view.id(static_cast<int>(i)));
        auto b = mu.at(view.id(static_cast<int>(i)));
        if (a && b) {
            if (*a < T(0) || *b < T(0))
                throw std::invalid_argument("inputs must be non-negative");
            x[i] = std::min(*a, *b);
            valued[i] = 1;
        }
    }
    {
        // the window itself must be valued and the inputs nonzero there
        bool any_pos = false;
        for (int s : srcs) {
            if (!valued[static_cast<std::size_t>(s)])
                throw DomainError("inputs are unvalued at window vertex " +
                                  view.id(s).token);
            if (x[static_cast<std::size_t>(s)] > T(0)) any_pos = true;
        }
        (void)any_pos;
    }

    T inv_lambda = T(1) / lambda;
    double slack = num::is_exact_v<T> ? 0.0 : 1e-12;
    std::size_t n = 0;
    double change = 0;
    for (; n < cfg.depth; ++n) {
        std::vector<T> y(region, T(0));
        std::vector<char> next_valued(region, 0);
        for (std::size_t i = 0; i < region; ++i) {
            if (!valued[i] || !view.row_built(static_cast<int>(i))) continue;
            T sum(0);
            bool ready = true;
            for (const auto& e : view.out_row(static_cast<int>(i))) {
                if (static_cast<std::size_t>(e.dst) >= region ||
                    !valued[static_cast<std::size_t>(e.dst)]) {
                    ready = false;
                    break;
                }
                sum += e.weight * x[static_cast<std::size_t>(e.dst)];
            }
            if (!ready) continue;
            T next = sum * inv_lambda;
            double scale = std::max(1.0, std::abs(num::to_double(x[i])));
            if (num::to_double(next - x[i]) > slack * scale)
                throw DomainError("non-monotone meet iterate at " +
                                  view.id(static_cast<int>(i)).token);
            y[i] = next;
            next_valued[i] = 1;
        }
        bool covers = true;
        change = 0;
        for (int s : srcs) {
            auto i = static_cast<std::size_t>(s);
            if (!next_valued[i]) {
                covers = false;
                break;
            }
            change = std::max(change, std::abs(num::to_double(x[i] - y[i])));
        }
        if (!covers) break;
        x = std::move(y);
        valued = std::move(next_valued);
        if (change <= cfg.tol) {
            ++n;
            break;
        }
    }

    MeetResult<T> out;
    out.iterations = n;
    out.final_change = change;
    out.meet.lambda = lambda;
    out.meet.kind = VectorKind::Candidate;
    bool meet_zero = true;
    for (const auto& v : window) {
        T val = x[static_cast<std::size_t>(*view.find(v))];
        out.meet.values[v] = val;
        if (val > T(0)) meet_zero = false;
        T a = *xi.at(v), b = *mu.at(v);
        out.join[v] = a + b - val;
    }
    if (!meet_zero) out.meet.kind = VectorKind::AlmostHarmonic;
    return out;
}

/// Out-ball of the given radius around base, lexicographically sorted: the
/// default probe window for generator-backed operations.
inline std::vector<VertexId> probe_window(const GraphSource& g, const VertexId& base,
                                          std::size_t radius,
                                          const TruncationConfig& cfg = {}) {
    LocalView<double> view(g, cfg.row_limit, cfg.max_region);
    int b = view.intern(base);
    view.grow_region({b}, radius);
    std::vector<VertexId> out;
    out.reserve(static_cast<std::size_t>(view.size()));
    for (int i = 0; i < view.size(); ++i) out.push_back(view.id(i));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace kms
