#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kms/errors.hpp"
#include "kms/explore.hpp"
#include "kms/graph.hpp"
#include "kms/graph_algo.hpp"

namespace kms {

struct TruncationConfig {
    std::size_t depth = 256;       // max series index
    std::size_t row_limit = 64;    // max enumerated entries per row
    double tol = 1e-10;
    std::optional<double> tail_ratio_bound;  // rho < 1 certifying a geometric tail
    double blowup_threshold = 1e12;
    std::size_t max_region = 4'000'000;
    std::size_t beta0_max_iter = 20'000;
    bool use_closed_forms = true;

    void validate() const {
        if (row_limit < 1) throw std::invalid_argument("row_limit must be >= 1");
        if (tol < 0) throw std::invalid_argument("tol must be >= 0");
        if (tail_ratio_bound && (*tail_ratio_bound <= 0 || *tail_ratio_bound >= 1))
            throw std::invalid_argument("tail_ratio_bound must lie in (0,1)");
    }
};

/// Truncated value of a non-negative series. `lower` is always a true lower
/// bound (truncation only drops non-negative terms); `upper` is present only
/// when a geometric tail certificate applies. `converged`/`diverged` are
/// labelled heuristics and never feed certified bounds.
template <typename T>
struct SeriesEstimate {
    T lower{};
    std::optional<T> upper;
    std::vector<T> partial_terms;  // first terms, capped
    bool converged = false;
    bool diverged = false;
    bool rows_truncated = false;
};

namespace detail {

constexpr std::size_t kStoredTerms = 16;

/// Forward dynamic program: maintains scale^n * (A^n)_{source,*} as a sparse
/// wavefront over the interned region. With a taboo vertex, mass never
/// steps into it and step() returns what tried to (first-passage weight).
template <typename T>
class ForwardWalk {
public:
    ForwardWalk(LocalView<T>& view, int source, T scale = T(1))
        : view_(&view), scale_(std::move(scale)) {
        values_.assign(static_cast<std::size_t>(view.size()), T(0));
        values_[static_cast<std::size_t>(source)] = T(1);
        support_ = {source};
    }

    void set_taboo(int idx) { taboo_ = idx; }

    /// Advances one power; returns the (scaled) mass that stepped into the
    /// taboo vertex, when one is set.
    T step() {
        T hit(0);
        std::vector<T> next(static_cast<std::size_t>(view_->size()), T(0));
        std::vector<int> next_support;
        for (int s : support_) {
            const T& mass = values_[static_cast<std::size_t>(s)];
            for (const auto& e : view_->out_row(s)) {
                T contrib = mass * e.weight * scale_;
                if (taboo_ && e.dst == *taboo_) {
                    hit += contrib;
                    continue;
                }
                if (static_cast<std::size_t>(view_->size()) > next.size())
                    next.resize(static_cast<std::size_t>(view_->size()), T(0));
                T& slot = next[static_cast<std::size_t>(e.dst)];
                if (slot == T(0) && contrib != T(0))
                    next_support.push_back(e.dst);
                slot += contrib;
            }
        }
        values_ = std::move(next);
        support_ = std::move(next_support);
        std::sort(support_.begin(), support_.end());
        return hit;
    }

    T at(int idx) const {
        auto i = static_cast<std::size_t>(idx);
        return i < values_.size() ? values_[i] : T(0);
    }
    const std::vector<int>& support() const { return support_; }
    bool empty() const { return support_.empty(); }

private:
    LocalView<T>* view_;
    T scale_;
    std::optional<int> taboo_;
    std::vector<T> values_;
    std::vector<int> support_;
};

/// Heuristic divergence watch, fed one term at a time. Zero terms neither
/// advance nor reset the state (periodic series interleave zeros), so the
/// rules act on the subsequence of non-zero terms: blow-up past the
/// configured threshold on a rising run, or a long run of non-vanishing
/// non-decreasing terms (a convergent series must have terms tending to 0).
/// A single spike (one non-zero term, as on a path graph) never triggers.
template <typename T>
class DivergenceMonitor {
public:
    void observe(const T& term, const T& partial, const TruncationConfig& cfg) {
        if (flagged_ || term == T(0)) return;
        run_ = (run_ > 0 && term >= prev_) ? run_ + 1 : 1;
        prev_ = term;
        if (run_ >= 3 && num::to_double(partial) > cfg.blowup_threshold) {
            flagged_ = true;
            return;
        }
        double scale = std::max(1.0, std::abs(num::to_double(partial)));
        if (run_ >= 16 && num::to_double(term) > std::max(cfg.tol, 1e-9) * scale)
            flagged_ = true;
    }
    bool flagged() const { return flagged_; }

private:
    T prev_{};
    int run_ = 0;
    bool flagged_ = false;
};

template <typename T>
bool looks_converged(const std::vector<T>& terms, const T& partial,
                     const TruncationConfig& cfg) {
    if (terms.size() < 8) return false;
    double scale = std::max(1.0, std::abs(num::to_double(partial)));
    for (std::size_t i = terms.size() - 8; i < terms.size(); ++i) {
        if (num::to_double(terms[i]) > cfg.tol * scale) return false;
    }
    return true;
}

}  // namespace detail

/// A^n_{vw}, with exactness tracking. Exact whenever no row truncation
/// occurred along the way (finite graphs, row-finite exploration); a
/// certified lower bound otherwise.
template <typename T>
struct PowerValue {
    T value{};
    bool exact = true;
};

template <typename T>
PowerValue<T> power_entry(const GraphSource& g, const VertexId& v, const VertexId& w,
                          std::size_t n, const TruncationConfig& cfg = {}) {
    cfg.validate();
    LocalView<T> view(g, cfg.row_limit, cfg.max_region);
    int iv = view.intern(v);
    int iw = view.intern(w);
    detail::ForwardWalk<T> walk(view, iv);
    for (std::size_t k = 0; k < n; ++k) walk.step();
    return {walk.at(iw), !view.truncation_seen()};
}

template <typename T>
SeriesEstimate<T> green_series(const GraphSource& g, const VertexId& v, const VertexId& w,
                               const T& lambda, const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    LocalView<T> view(g, cfg.row_limit, cfg.max_region);
    int iv = view.intern(v);
    int iw = view.intern(w);
    detail::ForwardWalk<T> walk(view, iv, T(1) / lambda);
    SeriesEstimate<T> est;
    std::vector<T> tail_window;  // last few terms, for the certificates
    const std::size_t window_cap = 16;
    detail::DivergenceMonitor<T> monitor;
    T sum(0);
    for (std::size_t n = 0; n <= cfg.depth; ++n) {
        T term = walk.at(iw);
        sum += term;
        tail_window.push_back(term);
        if (tail_window.size() > window_cap) tail_window.erase(tail_window.begin());
        monitor.observe(term, sum, cfg);
        if (est.partial_terms.size() < detail::kStoredTerms) est.partial_terms.push_back(term);
        if (n < cfg.depth) walk.step();
        if (walk.empty() && n < cfg.depth) {
            // wavefront died: every later term is exactly zero
            est.lower = sum;
            est.converged = true;
            est.upper = sum;
            est.rows_truncated = view.truncation_seen();
            return est;
        }
    }
    est.lower = sum;
    est.rows_truncated = view.truncation_seen();
    est.diverged = monitor.flagged();
    if (!est.diverged) {
        est.converged = detail::looks_converged(tail_window, sum, cfg);
        if (cfg.tail_ratio_bound) {
            double rho = *cfg.tail_ratio_bound;
            bool envelope_ok = true;
            std::optional<std::size_t> prev;
            for (std::size_t i = 0; i < tail_window.size(); ++i) {
                if (tail_window[i] == T(0)) continue;
                if (prev) {
                    double allowed = num::to_double(tail_window[*prev]) *
                                     std::pow(rho, static_cast<double>(i - *prev));
                    if (num::to_double(tail_window[i]) > allowed * (1 + 1e-12))
                        envelope_ok = false;
                }
                prev = i;
            }
            if (envelope_ok) {
                T last = prev ? tail_window[*prev] : T(0);
                T rho_t = num::from_rational<T>(rational_from_double(rho));
                est.upper = sum + last * rho_t / (T(1) - rho_t);
            }
        }
    }
    return est;
}

/// r_{vw}(n): weight of the length-n paths from v to w that avoid w strictly
/// before the final step. r(0) = 0, r(1) = A_{vw}.
template <typename T>
T first_passage(const GraphSource& g, const VertexId& v, const VertexId& w, std::size_t n,
                const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (n == 0) {
        LocalView<T> view(g, cfg.row_limit, cfg.max_region);
        view.intern(v);
        view.intern(w);
        return T(0);
    }
    LocalView<T> view(g, cfg.row_limit, cfg.max_region);
    int iv = view.intern(v);
    int iw = view.intern(w);
    detail::ForwardWalk<T> walk(view, iv);
    walk.set_taboo(iw);
    T hit(0);
    for (std::size_t k = 1; k <= n; ++k) hit = walk.step();
    return hit;
}

/// Sum_{n=1}^{depth} r_{vw}(n) lambda^{-n} for every requested source at
/// once, via the backward recursion over a frozen exploration region, plus
/// the diagnostic value at w itself.
template <typename T>
struct FirstPassageSums {
    std::map<VertexId, T> sums;
    T diagnostic{};  // sum at v = w
    bool rows_truncated = false;
};

template <typename T>
FirstPassageSums<T> first_passage_series(const GraphSource& g, const VertexId& w,
                                         const std::vector<VertexId>& sources, const T& lambda,
                                         const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    LocalView<T> view(g, cfg.row_limit, cfg.max_region);
    int iw = view.intern(w);
    std::vector<int> srcs{iw};
    for (const auto& s : sources) srcs.push_back(view.intern(s));
    view.grow_region(srcs, cfg.depth);
    const auto region = static_cast<std::size_t>(view.size());

    T inv_lambda = T(1) / lambda;
    // level 1: r[v] = A_{vw} / lambda
    std::vector<T> r(region, T(0));
    for (std::size_t i = 0; i < region; ++i) {
        if (!view.row_built(static_cast<int>(i))) continue;
        for (const auto& e : view.out_row(static_cast<int>(i))) {
            if (e.dst == iw) r[i] += e.weight * inv_lambda;
        }
    }
    std::vector<T> acc(region, T(0));
    for (std::size_t i = 0; i < region; ++i) acc[i] += r[i];

    for (std::size_t n = 2; n <= cfg.depth; ++n) {
        std::vector<T> next(region, T(0));
        for (std::size_t i = 0; i < region; ++i) {
            if (!view.row_built(static_cast<int>(i))) continue;
            T s(0);
            for (const auto& e : view.out_row(static_cast<int>(i))) {
                if (e.dst == iw) continue;
                if (static_cast<std::size_t>(e.dst) < region) s += e.weight * r[static_cast<std::size_t>(e.dst)];
            }
            next[i] = s * inv_lambda;
        }
        r = std::move(next);
        bool all_zero = true;
        for (std::size_t i = 0; i < region; ++i) {
            acc[i] += r[i];
            if (r[i] != T(0)) all_zero = false;
        }
        if (all_zero) break;
    }

    FirstPassageSums<T> out;
    out.rows_truncated = view.truncation_seen();
    out.diagnostic = acc[static_cast<std::size_t>(iw)];
    for (const auto& s : sources) {
        out.sums[s] = acc[static_cast<std::size_t>(*view.find(s))];
    }
    return out;
}

/// Bounds on the critical value lambda0 = e^{beta0}. Finite graphs: power
/// iteration on the non-wandering block with a Collatz-Wielandt sandwich
/// evaluated exactly in exact mode. Generators: a certified lower bound
/// sup_n (A^n_vv)^{1/n} (valid since the diagonal powers are
/// supermultiplicative), with closed-form values when the family registers
/// them.
struct Beta0Report {
    bool exact = false;  // bounds coincide up to tolerance
    double lambda0_lower = 0;
    std::optional<double> lambda0_upper;
    std::optional<Rational> lambda0_exact;
    VertexId witness;
    std::string method;

    double lambda0() const {
        if (lambda0_exact) return num::to_double(*lambda0_exact);
        if (lambda0_upper) return 0.5 * (lambda0_lower + *lambda0_upper);
        return lambda0_lower;
    }
};

namespace detail {

struct CwBounds {
    Rational lower, upper;
    bool equal() const { return lower == upper; }
};

/// min/max of (Mx)_v / x_v over the block, exact.
inline CwBounds collatz_wielandt(const std::vector<std::vector<Rational>>& m,
                                 const std::vector<Rational>& x) {
    CwBounds b{Rational(0), Rational(0)};
    bool first = true;
    for (std::size_t i = 0; i < m.size(); ++i) {
        Rational num(0);
        for (std::size_t j = 0; j < m.size(); ++j) num += m[i][j] * x[j];
        Rational ratio = num / x[i];
        if (first) {
            b.lower = b.upper = ratio;
            first = false;
        } else {
            if (ratio < b.lower) b.lower = ratio;
            if (ratio > b.upper) b.upper = ratio;
        }
    }
    return b;
}

}  // namespace detail

inline Beta0Report beta0_estimate(const GraphSource& g, const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (g.is_finite()) {
        const auto& fg = g.finite();
        auto nwres = nonwandering_set(fg);
        if (nwres.nw.empty()) throw DomainError("beta0 undefined: non-wandering set is empty");
        std::vector<VertexId> nw(nwres.nw.begin(), nwres.nw.end());
        const std::size_t n = nw.size();
        std::map<VertexId, std::size_t> pos;
        for (std::size_t i = 0; i < n; ++i) pos[nw[i]] = i;
        std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n, Rational(0)));
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& e : fg.out_edges(nw[i])) {
                auto it = pos.find(e.dst);
                if (it != pos.end()) m[i][it->second] = e.weight;
            }
        }
        // Shifted double-precision power iteration to locate the eigenvector;
        // the shift keeps periodic blocks (e.g. two-cycles) from oscillating.
        std::vector<std::vector<double>> md(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) md[i][j] = num::to_double(m[i][j]);
        std::vector<double> x(n, 1.0);
        double width = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < cfg.beta0_max_iter && width > cfg.tol * 0.5; ++it) {
            std::vector<double> y(n, 0.0);
            double norm = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = x[i];  // +I shift
                for (std::size_t j = 0; j < n; ++j) s += md[i][j] * x[j];
                y[i] = s;
                norm = std::max(norm, s);
            }
            double lo = std::numeric_limits<double>::infinity(), hi = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double ratio = y[i] / x[i];
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            width = hi - lo;
            for (std::size_t i = 0; i < n; ++i) x[i] = std::max(y[i] / norm, 1e-300);
        }
        // Exact Collatz-Wielandt sandwich at the final iterate.
        std::vector<Rational> xr(n);
        for (std::size_t i = 0; i < n; ++i) {
            Rational r = rational_from_double(x[i]);
            xr[i] = r > 0 ? r : Rational(1);
        }
        auto bounds = detail::collatz_wielandt(m, xr);
        Beta0Report rep;
        rep.lambda0_lower = num::to_double(bounds.lower);
        rep.lambda0_upper = num::to_double(bounds.upper);
        rep.witness = nw.front();
        rep.method = "power iteration with exact Collatz-Wielandt sandwich on the "
                     "non-wandering block";
        if (bounds.equal()) {
            rep.exact = true;
            rep.lambda0_exact = bounds.lower;
        } else {
            rep.exact = (num::to_double(bounds.upper - bounds.lower) <=
                         cfg.tol * std::max(1.0, rep.lambda0_lower));
        }
        return rep;
    }

    const auto& meta = g.generator().metadata();
    if (meta.nw_kind == NWKind::Empty)
        throw DomainError("beta0 undefined: non-wandering set is empty (declared)");
    if (meta.nw_probes.empty())
        throw DomainError("generator family declares no non-wandering probe vertex");
    const VertexId probe = meta.nw_probes.front();

    LocalView<double> view(g, cfg.row_limit, cfg.max_region);
    int ip = view.intern(probe);
    detail::ForwardWalk<double> walk(view, ip);
    double best = 0;
    for (std::size_t n = 1; n <= cfg.depth; ++n) {
        walk.step();
        double diag = walk.at(ip);
        if (diag > 0 && std::isfinite(diag)) {
            double root = std::pow(diag, 1.0 / static_cast<double>(n));
            best = std::max(best, root);
        }
        if (!std::isfinite(diag)) break;
    }
    Beta0Report rep;
    rep.lambda0_lower = best;
    rep.witness = probe;
    rep.method = "sup over n <= depth of (A^n_vv)^(1/n), certified lower bound";
    if (cfg.use_closed_forms && (meta.lambda0_value || meta.lambda0_exact)) {
        rep.lambda0_exact = meta.lambda0_exact;
        double v = meta.lambda0_exact ? num::to_double(*meta.lambda0_exact)
                                      : *meta.lambda0_value;
        rep.lambda0_upper = v;
        rep.lambda0_lower = std::max(rep.lambda0_lower, v);
        rep.lambda0_lower = std::min(rep.lambda0_lower, v);  // collapse onto closed form
        rep.exact = true;
        rep.method += "; closed form registered by the family";
    }
    return rep;
}

enum class Recurrence { Recurrent, Transient, Unknown };

inline std::string to_string(Recurrence r) {
    switch (r) {
        case Recurrence::Recurrent: return "recurrent";
        case Recurrence::Transient: return "transient";
        case Recurrence::Unknown: return "unknown";
    }
    return "unknown";
}

struct RecurrenceVerdict {
    Recurrence verdict = Recurrence::Unknown;
    double partial_sum = 0;
    std::string evidence;
};

/// Classifies the matrix at its critical value. A finite non-wandering set
/// forces recurrence outright; otherwise the diagonal series at lambda0 is
/// summed and a registered closed form (when allowed) settles the verdict.
inline RecurrenceVerdict classify_recurrence(const GraphSource& g,
                                             const TruncationConfig& cfg = {}) {
    cfg.validate();
    RecurrenceVerdict out;
    if (g.is_finite()) {
        const auto& fg = g.finite();
        auto nwres = nonwandering_set(fg);
        if (nwres.nw.empty()) throw DomainError("recurrence undefined: non-wandering set is empty");
        out.verdict = Recurrence::Recurrent;
        out.evidence = "finite non-wandering set";
        return out;
    }
    const auto& meta = g.generator().metadata();
    if (meta.nw_kind == NWKind::Empty)
        throw DomainError("recurrence undefined: non-wandering set is empty (declared)");
    if (meta.nw_kind == NWKind::Finite) {
        out.verdict = Recurrence::Recurrent;
        out.evidence = "finite non-wandering set (declared)";
        return out;
    }

    auto b0 = beta0_estimate(g, cfg);
    const VertexId probe = meta.nw_probes.front();
    double lam0 = b0.lambda0();
    if (lam0 <= 0) throw DomainError("cannot evaluate the diagonal series: lambda0 estimate is 0");
    auto est = green_series<double>(g, probe, probe, lam0, cfg);
    out.partial_sum = est.lower;

    if (cfg.use_closed_forms && meta.recurrence_at_beta0 != RecurrenceClosedForm::Unknown) {
        out.verdict = meta.recurrence_at_beta0 == RecurrenceClosedForm::Recurrent
                          ? Recurrence::Recurrent
                          : Recurrence::Transient;
        out.evidence = "registered closed form for the family";
        return out;
    }
    if (est.upper) {
        out.verdict = Recurrence::Transient;
        out.evidence = "certified upper bound on the diagonal series is finite";
        return out;
    }
    out.verdict = Recurrence::Unknown;
    out.evidence = b0.exact
                       ? "partial diagonal sums at lambda0 are inconclusive"
                       : "partial diagonal sums at a certified lower bound of lambda0 are "
                         "inconclusive";
    return out;
}

/// Residual of the renewal identity
///     G(v,w) = I_{vw} + R(v,w) * G(w,w)
/// checked coefficient-by-coefficient up to the truncation depth: the n-th
/// term of the product series is sum_{s<=n} r(s) A^{n-s}, so the identity
/// holds exactly at every depth and the residual measures arithmetic error
/// (and the consistency of the two dynamic programs).
template <typename T>
T vere_jones_residual(const GraphSource& g, const VertexId& v, const VertexId& w,
                      const T& lambda, const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    // membership in NW is decidable for finite graphs
    if (g.is_finite()) {
        auto nwres = nonwandering_set(g.finite());
        if (!nwres.nw.count(v) || !nwres.nw.count(w))
            throw DomainError("vere-jones identity requires v, w in the non-wandering set");
        auto b0 = beta0_estimate(g, cfg);
        if (num::to_double(lambda) <= b0.lambda0_lower - cfg.tol)
            throw DomainError("vere-jones identity requires lambda > lambda0");
    } else {
        const auto& meta = g.generator().metadata();
        if (meta.nw_kind == NWKind::Empty)
            throw DomainError("vere-jones identity requires a non-empty non-wandering set");
        if (cfg.use_closed_forms && meta.lambda0_value &&
            num::to_double(lambda) <= *meta.lambda0_value - cfg.tol)
            throw DomainError("vere-jones identity requires lambda > lambda0");
    }

    const std::size_t n = cfg.depth;
    // lhs coefficients A^k_{vw}, diag coefficients A^k_{ww}
    std::vector<T> lhs(n + 1, T(0)), diag(n + 1, T(0)), r(n + 1, T(0));
    {
        LocalView<T> view(g, cfg.row_limit, cfg.max_region);
        int iv = view.intern(v), iw = view.intern(w);
        detail::ForwardWalk<T> walk(view, iv);
        lhs[0] = walk.at(iw);
        for (std::size_t k = 1; k <= n; ++k) {
            walk.step();
            lhs[k] = walk.at(iw);
        }
    }
    {
        LocalView<T> view(g, cfg.row_limit, cfg.max_region);
        int iw = view.intern(w);
        detail::ForwardWalk<T> walk(view, iw);
        diag[0] = walk.at(iw);
        for (std::size_t k = 1; k <= n; ++k) {
            walk.step();
            diag[k] = walk.at(iw);
        }
    }
    {
        LocalView<T> view(g, cfg.row_limit, cfg.max_region);
        int iv = view.intern(v), iw = view.intern(w);
        detail::ForwardWalk<T> walk(view, iv);
        walk.set_taboo(iw);
        for (std::size_t k = 1; k <= n; ++k) r[k] = walk.step();
    }
    T inv_lambda = T(1) / lambda;
    T lampow(1);
    T residual(0);
    bool vw_equal = (v == w);
    for (std::size_t k = 0; k <= n; ++k) {
        T rhs_k = (k == 0 && vw_equal) ? T(1) : T(0);
        if (k == 0 && !vw_equal) rhs_k = T(0);
        for (std::size_t s = 1; s <= k; ++s) rhs_k += r[s] * diag[k - s];
        T defect = lhs[k] - rhs_k;
        residual += num::abs_val(defect) * lampow;
        lampow *= inv_lambda;
    }
    return residual;
}

}  // namespace kms
