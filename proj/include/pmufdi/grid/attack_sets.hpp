#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "pmufdi/grid/case.hpp"
#include "pmufdi/grid/measurement.hpp"

namespace pmufdi {

/// Attacked-state set I with its subgraph S = I plus neighbors, the boundary
/// S \ I, and the measurement rows J an attack on I can touch.
struct AttackSetValidation {
    std::vector<BusId> attacked;   // I, sorted
    std::vector<BusId> subgraph;   // S, sorted
    std::vector<BusId> boundary;   // S \ I, sorted
    std::vector<int> measurements; // J, 0-based rows of H, ascending
    bool valid = false;
    std::vector<std::string> reasons;
};

namespace detail {

inline std::vector<int> sorted_indices(const GridCase& grid, const std::vector<BusId>& ids) {
    std::vector<int> idx;
    idx.reserve(ids.size());
    for (BusId b : ids) idx.push_back(grid.bus_index(b));
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline AttackSetValidation validate_indices(const GridCase& grid, const DependencyMatrix& dm,
                                            const std::vector<std::vector<int>>& adj,
                                            const std::vector<int>& attacked) {
    AttackSetValidation v;
    std::set<int> in_i(attacked.begin(), attacked.end());
    std::set<int> s = in_i;
    for (int i : attacked) s.insert(adj[static_cast<std::size_t>(i)].begin(),
                                    adj[static_cast<std::size_t>(i)].end());
    const auto& buses = grid.buses();
    for (int i : in_i) v.attacked.push_back(buses[static_cast<std::size_t>(i)].id);
    for (int i : s) v.subgraph.push_back(buses[static_cast<std::size_t>(i)].id);
    v.valid = true;
    for (int i : s) {
        if (in_i.count(i)) continue;
        const BusId id = buses[static_cast<std::size_t>(i)].id;
        v.boundary.push_back(id);
        if (!grid.is_load_bus(id)) {
            v.valid = false;
            v.reasons.push_back("boundary bus " + std::to_string(id.value) + " carries no load");
        }
    }
    std::sort(v.attacked.begin(), v.attacked.end());
    std::sort(v.subgraph.begin(), v.subgraph.end());
    std::sort(v.boundary.begin(), v.boundary.end());
    const ComplexMatrix& h = dm.h();
    for (Eigen::Index r = 0; r < h.rows(); ++r)
        for (int i : attacked)
            if (h(r, i) != Complex(0.0, 0.0)) {
                v.measurements.push_back(static_cast<int>(r));
                break;
            }
    return v;
}

}  // namespace detail

/// Valid iff every boundary bus of the closed neighborhood of I is a load bus.
inline AttackSetValidation validate_attack_set(const GridCase& grid, const DependencyMatrix& dm,
                                               const std::vector<BusId>& attacked) {
    if (attacked.empty()) throw ValidationError("attacked-state set must be nonempty");
    if (dm.state_count() != grid.bus_count())
        throw DimensionError("dependency matrix does not match the case");
    std::vector<int> idx = detail::sorted_indices(grid, attacked);
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
        throw ValidationError("attacked-state set contains duplicates");
    return detail::validate_indices(grid, dm, grid.adjacency(), idx);
}

inline AttackSetValidation validate_attack_set(const GridCase& grid, const PmuPlan& plan,
                                               const std::vector<BusId>& attacked) {
    return validate_attack_set(grid, build_measurement_matrix(grid, plan), attacked);
}

/// All connected valid sets with 1 <= |I| <= max_size, lexicographic by sorted bus ids.
inline std::vector<std::vector<BusId>> enumerate_attack_sets(const GridCase& grid,
                                                             const DependencyMatrix& dm,
                                                             int max_size) {
    if (max_size < 1) throw ValidationError("max_size must be >= 1");
    const auto adj = grid.adjacency();
    const int nb = grid.bus_count();

    // Grow connected sets one neighbor at a time; each level is deduplicated.
    std::set<std::vector<int>> level;
    for (int i = 0; i < nb; ++i) level.insert({i});
    std::set<std::vector<int>> all = level;
    for (int size = 2; size <= max_size && !level.empty(); ++size) {
        std::set<std::vector<int>> next;
        for (const auto& s : level)
            for (int i : s)
                for (int j : adj[static_cast<std::size_t>(i)]) {
                    if (std::binary_search(s.begin(), s.end(), j)) continue;
                    std::vector<int> grown = s;
                    grown.insert(std::upper_bound(grown.begin(), grown.end(), j), j);
                    next.insert(std::move(grown));
                }
        all.insert(next.begin(), next.end());
        level = std::move(next);
    }

    std::vector<std::vector<BusId>> out;
    for (const auto& s : all) {
        if (!detail::validate_indices(grid, dm, adj, s).valid) continue;
        std::vector<BusId> ids;
        for (int i : s) ids.push_back(grid.buses()[static_cast<std::size_t>(i)].id);
        std::sort(ids.begin(), ids.end());
        out.push_back(std::move(ids));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::vector<BusId>> enumerate_attack_sets(const GridCase& grid,
                                                             const PmuPlan& plan, int max_size) {
    return enumerate_attack_sets(grid, build_measurement_matrix(grid, plan), max_size);
}

}  // namespace pmufdi
