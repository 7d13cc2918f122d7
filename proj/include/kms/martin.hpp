#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kms/harmonic.hpp"
#include "kms/rng.hpp"
#include "kms/series.hpp"

namespace kms {

/// Full Green row from one source: acc[idx] = sum_{n<=depth} lambda^{-n} A^n_{src,idx}.
/// One forward walk serves every target at once.
template <typename T>
class GreenRow {
public:
    GreenRow(const GraphSource& g, const VertexId& source, const T& lambda,
             const TruncationConfig& cfg)
        : view_(g, cfg.row_limit, cfg.max_region) {
        int is = view_.intern(source);
        detail::ForwardWalk<T> walk(view_, is, T(1) / lambda);
        acc_.assign(static_cast<std::size_t>(view_.size()), T(0));
        monitors_.resize(acc_.size());
        for (std::size_t n = 0; n <= cfg.depth; ++n) {
            if (static_cast<std::size_t>(view_.size()) > acc_.size()) {
                acc_.resize(static_cast<std::size_t>(view_.size()), T(0));
                monitors_.resize(acc_.size());
            }
            for (int i : walk.support()) {
                auto idx = static_cast<std::size_t>(i);
                acc_[idx] += walk.at(i);
                monitors_[idx].observe(walk.at(i), acc_[idx], cfg);
            }
            if (n < cfg.depth) walk.step();
            if (walk.empty()) break;
        }
    }

    /// Green value toward w; zero when w was never reached.
    T at(const VertexId& w) const {
        auto idx = view_.find(w);
        if (!idx) return T(0);
        auto i = static_cast<std::size_t>(*idx);
        return i < acc_.size() ? acc_[i] : T(0);
    }

    bool reached(const VertexId& w) const { return at(w) > T(0); }

    /// Per-target divergence flag (heuristic).
    bool diverged_at(const VertexId& w) const {
        auto idx = view_.find(w);
        if (!idx) return false;
        auto i = static_cast<std::size_t>(*idx);
        return i < monitors_.size() && monitors_[i].flagged();
    }

    bool any_diverged() const {
        for (const auto& m : monitors_) {
            if (m.flagged()) return true;
        }
        return false;
    }

private:
    LocalView<T> view_;
    std::vector<T> acc_;
    std::vector<detail::DivergenceMonitor<T>> monitors_;
};

template <typename T>
struct KernelValue {
    VertexId v, w;
    T value{};  // G(v,w) / G(v0,w), from the two truncated series
    T numerator{}, denominator{};
    std::optional<T> upper;  // when tail certificates bound both series
};

/// Martin kernel K_v(w) for a single pair. The target must be reachable from
/// the base vertex within the depth budget and both series must not blow up.
template <typename T>
KernelValue<T> martin_kernel(const GraphSource& g, const T& lambda, const VertexId& v0,
                             const VertexId& v, const VertexId& w,
                             const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    auto num_est = green_series<T>(g, v, w, lambda, cfg);
    auto den_est = green_series<T>(g, v0, w, lambda, cfg);
    if (den_est.lower == T(0))
        throw DomainError("target " + w.token + " is not reached from " + v0.token +
                          " within the depth budget");
    if (num_est.diverged || den_est.diverged)
        throw DomainError("Green series diverges; the kernel is undefined here");
    KernelValue<T> out;
    out.v = v;
    out.w = w;
    out.numerator = num_est.lower;
    out.denominator = den_est.lower;
    out.value = num_est.lower / den_est.lower;
    if (num_est.upper && den_est.lower > T(0)) out.upper = *num_est.upper / den_est.lower;
    return out;
}

enum class LimitVerdict { Converged, Inconclusive };

template <typename T>
struct KernelLimitReport {
    std::vector<VertexId> targets;
    // trajectories[v][k] = K_v(targets[k])
    std::map<VertexId, std::vector<T>> trajectories;
    HarmonicVector<T> limit_estimate;
    double cauchy_gap = 0;  // sup over the window of the last two evaluations
    LimitVerdict verdict = LimitVerdict::Inconclusive;
};

/// Kernel values along a sequence of distinct targets, with a two-point
/// Cauchy gap on the probe window as the (labelled heuristic) convergence
/// test. The limit estimate is the kernel vector at the last target.
template <typename T>
KernelLimitReport<T> kernel_limit(const GraphSource& g, const T& lambda, const VertexId& v0,
                                  const std::vector<VertexId>& targets,
                                  const std::vector<VertexId>& window,
                                  const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (targets.empty()) throw std::invalid_argument("no targets given");
    {
        std::set<VertexId> uniq(targets.begin(), targets.end());
        if (uniq.size() != targets.size())
            throw DomainError("target sequence must consist of distinct vertices");
    }
    if (window.empty()) throw std::invalid_argument("empty probe window");

    GreenRow<T> base(g, v0, lambda, cfg);
    for (const auto& w : targets) {
        if (!base.reached(w))
            throw DomainError("target " + w.token + " is not reached from " + v0.token +
                              " within the depth budget");
        if (base.diverged_at(w))
            throw DomainError("Green series from " + v0.token + " to " + w.token + " diverges");
    }

    KernelLimitReport<T> out;
    out.targets = targets;
    std::vector<VertexId> probe = window;
    std::sort(probe.begin(), probe.end());
    probe.erase(std::unique(probe.begin(), probe.end()), probe.end());

    for (const auto& v : probe) {
        GreenRow<T> row(g, v, lambda, cfg);
        std::vector<T> traj;
        traj.reserve(targets.size());
        for (const auto& w : targets) {
            if (row.diverged_at(w))
                throw DomainError("Green series from " + v.token + " to " + w.token +
                                  " diverges");
            traj.push_back(row.at(w) / base.at(w));
        }
        out.trajectories[v] = std::move(traj);
    }

    out.limit_estimate.lambda = lambda;
    for (const auto& v : probe)
        out.limit_estimate.values[v] = out.trajectories.at(v).back();

    if (targets.size() >= 2) {
        double gap = 0;
        for (const auto& v : probe) {
            const auto& tr = out.trajectories.at(v);
            gap = std::max(gap,
                           std::abs(num::to_double(tr[tr.size() - 1] - tr[tr.size() - 2])));
        }
        out.cauchy_gap = gap;
        out.verdict = gap < cfg.tol ? LimitVerdict::Converged : LimitVerdict::Inconclusive;
    }
    if (out.verdict == LimitVerdict::Converged) {
        auto rep = check_vector(g, lambda, out.limit_estimate.values,
                                std::max(cfg.tol, 1e-8), cfg);
        out.limit_estimate.kind = rep.is_harmonic          ? VectorKind::Harmonic
                                  : rep.is_almost_harmonic ? VectorKind::AlmostHarmonic
                                                           : VectorKind::Candidate;
    } else {
        out.limit_estimate.kind = VectorKind::Candidate;
    }
    return out;
}

/// The extremal vector attached to a sink or infinite emitter u: the kernel
/// column K_.(u), which is the normalized potential of the Dirac charge at u.
template <typename T>
HarmonicVector<T> emitter_extremal(const GraphSource& g, const T& lambda, const VertexId& v0,
                                   const VertexId& u, const std::vector<VertexId>& window,
                                   const TruncationConfig& cfg = {}) {
    cfg.validate();
    auto vinf = v_infinity_of(g);
    if (vinf.empty()) throw DomainError("the graph has no sinks or infinite emitters");
    if (!vinf.count(u))
        throw DomainError(u.token + " is not in V_inf (not a sink or infinite emitter)");
    GreenRow<T> base(g, v0, lambda, cfg);
    if (!base.reached(u))
        throw DomainError("emitter " + u.token + " is not reached from " + v0.token +
                          " within the depth budget");
    if (base.diverged_at(u))
        throw DomainError("Green series from " + v0.token + " to " + u.token + " diverges");

    HarmonicVector<T> out;
    out.lambda = lambda;
    out.kind = VectorKind::AlmostHarmonic;
    T den = base.at(u);
    for (const auto& v : window) {
        GreenRow<T> row(g, v, lambda, cfg);
        if (row.diverged_at(u))
            throw DomainError("Green series from " + v.token + " to " + u.token + " diverges");
        out.values[v] = row.at(u) / den;
    }
    return out;
}

/// Transition kernel of the conditioned chain: B_{vw} = lambda^{-1}
/// psi_v^{-1} A_{vw} psi_w. Rows are materialized on demand and validated to
/// sum to 1 within tol (exactly, in exact row-finite arithmetic).
template <typename T>
class StochasticKernel {
public:
    StochasticKernel(const GraphSource& g, T lambda, VertexValueSource<T> psi, double tol,
                     std::size_t row_limit)
        : g_(&g), lambda_(std::move(lambda)), psi_(std::move(psi)), tol_(tol),
          row_limit_(row_limit) {}

    struct RowEntry {
        VertexId dst;
        T probability;
    };

    std::vector<RowEntry> row(const VertexId& v) const {
        auto pv = psi_.at(v);
        if (!pv || *pv <= T(0))
            throw DomainError("base vector is unvalued or non-positive at " + v.token);
        bool truncated = false;
        auto edges = g_->out_edges(v, row_limit_, truncated);
        std::vector<RowEntry> out;
        out.reserve(edges.size());
        T sum(0);
        for (const auto& e : edges) {
            auto pw = psi_.at(e.dst);
            if (!pw)
                throw DomainError("base vector is unvalued at " + e.dst.token +
                                  " (reached from " + v.token + ")");
            T p = num::from_rational<T>(e.weight) * (*pw) / (lambda_ * (*pv));
            sum += p;
            out.push_back({e.dst, p});
        }
        if (num::to_double(num::abs_val(sum - T(1))) > tol_)
            throw DomainError("row at " + v.token + " sums to " + num::to_display(sum) +
                              ", not 1: the base vector is not harmonic there");
        return out;
    }

    const T& lambda() const { return lambda_; }
    const VertexValueSource<T>& psi() const { return psi_; }
    const GraphSource& graph() const { return *g_; }
    double tol() const { return tol_; }

private:
    const GraphSource* g_;
    T lambda_;
    VertexValueSource<T> psi_;
    double tol_;
    std::size_t row_limit_;
};

/// Builds the conditioned-chain kernel, validating harmonicity of psi on the
/// probe set; a sub-stochastic row names the offending vertex.
template <typename T>
StochasticKernel<T> h_transform(const GraphSource& g, const T& lambda,
                                const VertexValueSource<T>& psi,
                                const std::vector<VertexId>& probe,
                                const TruncationConfig& cfg = {}) {
    cfg.validate();
    if (lambda <= T(0)) throw std::invalid_argument("lambda must be > 0");
    StochasticKernel<T> kernel(g, lambda, psi, std::max(cfg.tol, 1e-12), cfg.row_limit);
    for (const auto& v : probe) (void)kernel.row(v);  // throws with the offending vertex
    return kernel;
}

struct PathSampleReport {
    std::size_t n_paths = 0;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    double fraction_converged = 0;
    double deviation_tolerance = 0;
    std::vector<std::vector<VertexId>> paths;          // checkpointed vertices per path
    std::vector<std::vector<double>> deviation_traj;   // sup-window relative deviation
    std::vector<double> final_deviation;               // per path, at the horizon
    std::vector<std::string> notes;
};

/// Simulates the conditioned chain and watches the window kernels along each
/// trajectory: for an extremal base vector they approach it along almost
/// every path. Checkpoints are horizon/8 steps apart.
template <typename T>
PathSampleReport sample_boundary_paths(const StochasticKernel<T>& kernel, const VertexId& v0,
                                       std::size_t n_paths, std::size_t horizon,
                                       std::uint64_t seed,
                                       const std::vector<VertexId>& window,
                                       const TruncationConfig& cfg = {},
                                       double deviation_tol = 0.05) {
    cfg.validate();
    if (n_paths == 0 || horizon == 0)
        throw std::invalid_argument("need at least one path and one step");

    const GraphSource& g = kernel.graph();
    const T& lambda = kernel.lambda();

    // Green rows from the window and the base vertex, evaluated once; path
    // endpoints index into them.
    std::map<VertexId, GreenRow<T>> rows;
    GreenRow<T> base(g, v0, lambda, cfg);
    for (const auto& v : window) rows.try_emplace(v, g, v, lambda, cfg);

    std::vector<T> psi_window;
    for (const auto& v : window) {
        auto p = kernel.psi().at(v);
        if (!p || *p <= T(0))
            throw DomainError("base vector is unvalued or non-positive at window vertex " +
                              v.token);
        psi_window.push_back(*p);
    }

    PathSampleReport rep;
    rep.n_paths = n_paths;
    rep.horizon = horizon;
    rep.seed = seed;
    rep.deviation_tolerance = deviation_tol;
    CounterRng rng(seed);

    const std::size_t checkpoint_every = std::max<std::size_t>(1, horizon / 8);
    std::size_t converged = 0;

    auto deviation_at = [&](const VertexId& x) -> double {
        T den = base.at(x);
        if (den <= T(0)) return std::numeric_limits<double>::infinity();
        double worst = 0;
        for (std::size_t i = 0; i < window.size(); ++i) {
            T kv = rows.at(window[i]).at(x) / den;
            double rel = std::abs(num::to_double(kv / psi_window[i]) - 1.0);
            worst = std::max(worst, rel);
        }
        return worst;
    };

    for (std::size_t p = 0; p < n_paths; ++p) {
        VertexId cur = v0;
        std::vector<VertexId> checkpoints{cur};
        std::vector<double> devs;
        for (std::size_t step = 1; step <= horizon; ++step) {
            auto row = kernel.row(cur);
            if (row.empty()) throw DomainError("path reached a sink at " + cur.token);
            double u = rng.uniform(p, step);
            double cum = 0;
            const double total = [&]() {
                double t = 0;
                for (const auto& e : row) t += num::to_double(e.probability);
                return t;
            }();
            if (total < 1.0 - kernel.tol() - 1e-9)
                throw DomainError("sub-stochastic row at " + cur.token +
                                  ": truncation too aggressive for sampling");
            VertexId next = row.back().dst;
            for (const auto& e : row) {
                cum += num::to_double(e.probability) / total;
                if (u < cum) {
                    next = e.dst;
                    break;
                }
            }
            cur = next;
            if (step % checkpoint_every == 0 || step == horizon) {
                checkpoints.push_back(cur);
                devs.push_back(deviation_at(cur));
            }
        }
        double final_dev = devs.empty() ? std::numeric_limits<double>::infinity() : devs.back();
        if (final_dev <= deviation_tol) ++converged;
        rep.paths.push_back(std::move(checkpoints));
        rep.deviation_traj.push_back(std::move(devs));
        rep.final_deviation.push_back(final_dev);
    }
    rep.fraction_converged = static_cast<double>(converged) / static_cast<double>(n_paths);
    return rep;
}

}  // namespace kms
