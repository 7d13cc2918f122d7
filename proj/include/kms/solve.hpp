#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kms/harmonic.hpp"
#include "kms/series.hpp"

namespace kms {

namespace dd {

/// Double description over the non-negative orthant: maintains the extreme
/// rays of {x >= 0} cut by a growing list of hyperplanes h.x = 0. The cone
/// stays pointed (it lives inside the orthant), so the combinatorial
/// adjacency test applies. Exact in rational arithmetic; double runs use a
/// scaled zero threshold.
template <typename T>
class ConeBuilder {
public:
    ConeBuilder(std::size_t dim, double eps) : dim_(dim), eps_(eps) {
        if (dim_ + 1 > 64) throw std::invalid_argument("cone dimension too large (max 63)");
        for (std::size_t i = 0; i < dim_; ++i) {
            Ray r;
            r.coords.assign(dim_, T(0));
            r.coords[i] = T(1);
            rays_.push_back(std::move(r));
        }
        refresh_masks();
    }

    bool empty() const { return rays_.empty(); }

    void add_hyperplane(const std::vector<T>& h) {
        hyperplanes_.push_back(h);
        if (hyperplanes_.size() + dim_ > 64)
            throw std::invalid_argument("too many constraints for the mask width");
        std::vector<Ray> zero, pos, neg;
        std::vector<T> pos_dot, neg_dot;
        for (auto& r : rays_) {
            T d = dot(h, r.coords);
            int s = sign(d, h, r.coords);
            if (s == 0) {
                zero.push_back(std::move(r));
            } else if (s > 0) {
                pos.push_back(std::move(r));
                pos_dot.push_back(d);
            } else {
                neg.push_back(std::move(r));
                neg_dot.push_back(d);
            }
        }
        std::vector<Ray> all_old;
        all_old.reserve(zero.size() + pos.size() + neg.size());
        for (const auto& r : zero) all_old.push_back(r);
        for (const auto& r : pos) all_old.push_back(r);
        for (const auto& r : neg) all_old.push_back(r);

        std::vector<Ray> next = zero;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            for (std::size_t j = 0; j < neg.size(); ++j) {
                if (!adjacent(pos[i], neg[j], all_old)) continue;
                Ray combo;
                combo.coords.assign(dim_, T(0));
                // pos_dot > 0 > neg_dot: the mix lands on the hyperplane
                for (std::size_t k = 0; k < dim_; ++k)
                    combo.coords[k] =
                        pos_dot[i] * neg[j].coords[k] - neg_dot[j] * pos[i].coords[k];
                normalize(combo.coords);
                next.push_back(std::move(combo));
            }
        }
        rays_ = std::move(next);
        refresh_masks();
    }

    const std::vector<std::vector<T>>& rays() const {
        rays_out_.clear();
        for (const auto& r : rays_) rays_out_.push_back(r.coords);
        return rays_out_;
    }

private:
    struct Ray {
        std::vector<T> coords;
        std::uint64_t zero_mask = 0;
    };

    static T dot(const std::vector<T>& a, const std::vector<T>& b) {
        T s(0);
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }

    int sign(const T& d, const std::vector<T>& h, const std::vector<T>& x) const {
        if constexpr (num::is_exact_v<T>) {
            (void)h;
            (void)x;
            if (d == T(0)) return 0;
            return d > T(0) ? 1 : -1;
        } else {
            double scale = 0;
            for (std::size_t i = 0; i < h.size(); ++i)
                scale = std::max(scale, std::abs(num::to_double(h[i])));
            double xs = 0;
            for (std::size_t i = 0; i < x.size(); ++i)
                xs = std::max(xs, std::abs(num::to_double(x[i])));
            double thresh = eps_ * std::max(1.0, scale) * std::max(1.0, xs);
            double dv = num::to_double(d);
            if (std::abs(dv) <= thresh) return 0;
            return dv > 0 ? 1 : -1;
        }
    }

    void normalize(std::vector<T>& coords) const {
        T big(0);
        for (const auto& c : coords) {
            T a = num::abs_val(c);
            if (a > big) big = a;
        }
        if (big == T(0)) return;
        for (auto& c : coords) c = c / big;
        if constexpr (!num::is_exact_v<T>) {
            for (auto& c : coords) {
                if (std::abs(num::to_double(c)) <= eps_) c = T(0);
            }
        }
    }

    void refresh_masks() {
        for (auto& r : rays_) {
            std::uint64_t m = 0;
            for (std::size_t i = 0; i < dim_; ++i) {
                bool z;
                if constexpr (num::is_exact_v<T>) {
                    z = (r.coords[i] == T(0));
                } else {
                    double xs = 0;
                    for (const auto& c : r.coords) xs = std::max(xs, std::abs(num::to_double(c)));
                    z = std::abs(num::to_double(r.coords[i])) <= eps_ * std::max(1.0, xs);
                }
                if (z) m |= (std::uint64_t{1} << i);
            }
            for (std::size_t j = 0; j < hyperplanes_.size(); ++j) {
                T d = dot(hyperplanes_[j], r.coords);
                if (sign(d, hyperplanes_[j], r.coords) == 0)
                    m |= (std::uint64_t{1} << (dim_ + j));
            }
            r.zero_mask = m;
        }
    }

    bool adjacent(const Ray& a, const Ray& b, const std::vector<Ray>& all) const {
        std::uint64_t meet = a.zero_mask & b.zero_mask;
        for (const auto& r : all) {
            if (&r == &a || &r == &b) continue;
            if (r.coords == a.coords || r.coords == b.coords) continue;
            if ((r.zero_mask & meet) == meet) return false;
        }
        return true;
    }

    std::size_t dim_;
    double eps_;
    std::vector<Ray> rays_;
    std::vector<std::vector<T>> hyperplanes_;
    mutable std::vector<std::vector<T>> rays_out_;
};

}  // namespace dd

template <typename T>
struct ConePoint {
    std::map<VertexId, T> values;
    std::string label;  // harmonic-type | sink-type | emitter-type(u)
};

template <typename T>
struct ConeDescription {
    VertexId base;
    T lambda{};
    std::vector<ConePoint<T>> extreme_points;
    std::vector<std::string> notes;
};

/// Extreme points of {xi >= 0, xi_{v0} = 1, (A xi)_v = lambda xi_v at
/// non-sinks} on a finite cofinal graph, by double description on the
/// homogenization. Empty when infeasible.
template <typename T>
ConeDescription<T> solve_finite(const GraphSource& g, const T& lambda, const VertexId& v0,
                                const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (!g.is_finite()) throw std::invalid_argument("solve_finite needs a finite graph");
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    const auto& fg = g.finite();
    if (!fg.has_vertex(v0)) throw UnknownVertexError(v0);
    if (is_cofinal(g) != Verdict::Yes)
        throw DomainError("solve_finite requires a cofinal graph");

    auto verts = fg.vertices();
    const std::size_t n = verts.size();
    std::map<VertexId, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[verts[i]] = i;

    const double eps = num::is_exact_v<T> ? 0.0 : 1e-9;
    dd::ConeBuilder<T> cone(n + 1, eps);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = fg.out_edges(verts[i]);
        if (row.empty()) continue;  // sink: only the orthant constraint
        std::vector<T> h(n + 1, T(0));
        for (const auto& e : row) h[pos.at(e.dst)] += num::from_rational<T>(e.weight);
        h[i] -= lambda;
        cone.add_hyperplane(h);
        if (cone.empty()) break;
    }
    if (!cone.empty()) {
        std::vector<T> h(n + 1, T(0));
        h[pos.at(v0)] = T(1);
        h[n] = T(-1);
        cone.add_hyperplane(h);
    }

    ConeDescription<T> out;
    out.base = v0;
    out.lambda = lambda;

    std::vector<std::vector<T>> points;
    for (const auto& ray : cone.rays()) {
        T t = ray[n];
        double scale = 0;
        for (const auto& c : ray) scale = std::max(scale, std::abs(num::to_double(c)));
        bool t_zero = num::is_exact_v<T> ? (t == T(0))
                                         : (std::abs(num::to_double(t)) <= 1e-9 * scale);
        if (t_zero) {
            out.notes.push_back("dropped a ray at infinity (unbounded direction)");
            continue;
        }
        std::vector<T> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = ray[i] / t;
        points.push_back(std::move(p));
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [&](const std::vector<T>& a, const std::vector<T>& b) {
                                 if constexpr (num::is_exact_v<T>) {
                                     return a == b;
                                 } else {
                                     for (std::size_t i = 0; i < a.size(); ++i) {
                                         if (std::abs(num::to_double(a[i] - b[i])) > 1e-8)
                                             return false;
                                     }
                                     return true;
                                 }
                             }),
                 points.end());

    for (const auto& p : points) {
        ConePoint<T> pt;
        bool harmonic = true;
        for (std::size_t i = 0; i < n; ++i) {
            pt.values[verts[i]] = p[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            T row_sum(0);
            for (const auto& e : fg.out_edges(verts[i]))
                row_sum += num::from_rational<T>(e.weight) * p[pos.at(e.dst)];
            T resid = row_sum - lambda * p[i];
            double tolr = num::is_exact_v<T> ? 0.0 : 1e-8;
            if (std::abs(num::to_double(resid)) > tolr) harmonic = false;
        }
        pt.label = harmonic ? "harmonic-type" : "sink-type";
        out.extreme_points.push_back(std::move(pt));
    }
    return out;
}

/// Witness that no almost harmonic vector can exist at this lambda:
/// a diagonal power with (A^n_vv)^{1/n} > lambda.
struct NoSolutionCertificate {
    VertexId witness;
    std::size_t exponent = 0;
    double value = 0;  // (A^n_vv)^{1/n}
    double lambda = 0;
};

template <typename T>
std::optional<NoSolutionCertificate> certify_no_solution(const GraphSource& g, const T& lambda,
                                                         const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    std::vector<VertexId> probes;
    if (g.is_finite()) {
        auto nwres = nonwandering_set(g.finite());
        probes.assign(nwres.nw.begin(), nwres.nw.end());
    } else {
        probes = g.generator().metadata().nw_probes;
    }
    if (probes.empty()) return std::nullopt;

    // One walk per probe, scanned in order of increasing exponent.
    std::vector<std::vector<T>> diag(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        LocalView<T> view(g, cfg.row_limit, cfg.max_region);
        int ip = view.intern(probes[p]);
        detail::ForwardWalk<T> walk(view, ip);
        diag[p].reserve(cfg.depth);
        for (std::size_t k = 1; k <= cfg.depth; ++k) {
            walk.step();
            diag[p].push_back(walk.at(ip));
            if (walk.empty()) break;
        }
    }
    T lampow(1);
    for (std::size_t k = 1; k <= cfg.depth; ++k) {
        lampow = lampow * lambda;
        if constexpr (!num::is_exact_v<T>) {
            if (!std::isfinite(num::to_double(lampow))) break;
        }
        for (std::size_t p = 0; p < probes.size(); ++p) {
            if (diag[p].size() < k) continue;
            const T& d = diag[p][k - 1];
            if constexpr (!num::is_exact_v<T>) {
                if (!std::isfinite(num::to_double(d))) continue;
            }
            if (d > lampow) {
                NoSolutionCertificate cert;
                cert.witness = probes[p];
                cert.exponent = k;
                cert.value = std::pow(num::to_double(d), 1.0 / static_cast<double>(k));
                cert.lambda = num::to_double(lambda);
                return cert;
            }
        }
    }
    return std::nullopt;
}

}  // namespace kms
