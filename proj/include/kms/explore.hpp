#pragma once

#include <map>
#include <optional>
#include <vector>

#include "kms/errors.hpp"
#include "kms/graph.hpp"

namespace kms {

/// Interned, weight-converted view of the part of a graph an operation
/// explores. Rows are materialized on first use and truncated at `row_limit`
/// entries, always keeping the canonical prefix, so repeated runs see the
/// same finite sub-table.
template <typename T>
class LocalView {
public:
    struct OutEntry {
        int dst;
        T weight;
    };

    LocalView(const GraphSource& g, std::size_t row_limit, std::size_t max_vertices)
        : g_(&g), row_limit_(row_limit), max_vertices_(max_vertices) {}

    int intern(const VertexId& v) {
        auto it = index_.find(v);
        if (it != index_.end()) return it->second;
        if (!g_->has_vertex(v)) throw UnknownVertexError(v);
        return intern_unchecked(v);
    }

    std::optional<int> find(const VertexId& v) const {
        auto it = index_.find(v);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const VertexId& id(int idx) const { return ids_[static_cast<std::size_t>(idx)]; }
    int size() const { return static_cast<int>(ids_.size()); }

    bool row_built(int idx) const { return row_built_[static_cast<std::size_t>(idx)] != 0; }

    /// The interned out-row; materializes (and interns destinations) on
    /// first call.
    const std::vector<OutEntry>& out_row(int idx) {
        auto i = static_cast<std::size_t>(idx);
        if (!row_built_[i]) {
            bool truncated = false;
            auto edges = g_->out_edges(ids_[i], row_limit_, truncated);
            std::vector<OutEntry> row;
            row.reserve(edges.size());
            for (const auto& e : edges) {
                int d = index_.count(e.dst) ? index_.at(e.dst) : intern_unchecked(e.dst);
                row.push_back({d, num::from_rational<T>(e.weight)});
            }
            rows_[i] = std::move(row);
            row_truncated_[i] = truncated ? 1 : 0;
            row_built_[i] = 1;
            truncation_seen_ = truncation_seen_ || truncated;
        }
        return rows_[i];
    }

    bool row_truncated(int idx) {
        out_row(idx);
        return row_truncated_[static_cast<std::size_t>(idx)] != 0;
    }

    /// Whether any materialized row dropped edges.
    bool truncation_seen() const { return truncation_seen_; }

    /// Breadth-first materialization of `steps` layers of rows starting from
    /// the given vertices. After the call, every vertex within `steps` hops
    /// of a source is interned, and rows of vertices at distance < steps are
    /// built. Returns the number of interned vertices.
    int grow_region(const std::vector<int>& sources, std::size_t steps) {
        std::vector<int> frontier = sources;
        std::vector<char> seen(static_cast<std::size_t>(size()), 0);
        for (int s : frontier) seen[static_cast<std::size_t>(s)] = 1;
        for (std::size_t layer = 0; layer < steps && !frontier.empty(); ++layer) {
            std::vector<int> next;
            for (int v : frontier) {
                for (const auto& e : out_row(v)) {
                    if (static_cast<std::size_t>(e.dst) >= seen.size())
                        seen.resize(static_cast<std::size_t>(size()), 0);
                    if (!seen[static_cast<std::size_t>(e.dst)]) {
                        seen[static_cast<std::size_t>(e.dst)] = 1;
                        next.push_back(e.dst);
                    }
                }
            }
            frontier = std::move(next);
        }
        return size();
    }

private:
    int intern_unchecked(const VertexId& v) {
        if (ids_.size() >= max_vertices_)
            throw DomainError("exploration exceeded the vertex budget (" +
                              std::to_string(max_vertices_) + "); lower depth or row limit");
        int idx = static_cast<int>(ids_.size());
        ids_.push_back(v);
        index_.emplace(v, idx);
        rows_.emplace_back();
        row_built_.push_back(0);
        row_truncated_.push_back(0);
        return idx;
    }

    const GraphSource* g_;
    std::size_t row_limit_;
    std::size_t max_vertices_;
    std::vector<VertexId> ids_;
    std::map<VertexId, int> index_;
    std::vector<std::vector<OutEntry>> rows_;
    std::vector<char> row_built_;
    std::vector<char> row_truncated_;
    bool truncation_seen_ = false;
};

}  // namespace kms
