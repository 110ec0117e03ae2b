#pragma once

/**
 * @file space.hpp
 * @brief Global numbering of the displacement space V_h and the pressure
 *        space Q_h, with homogeneous boundary DoFs eliminated.
 */

#include "sge/element.hpp"
#include "sge/mesh.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace sge {

inline constexpr int kEliminated = -1;

/// Displacement DoF map. Free DoFs are numbered entity by entity: interior
/// vertices, then interior edges (midpoint value, normal-derivative mean),
/// then cells, two components each.
struct VDofMap {
    int n_free = 0;
    std::vector<std::array<int, kLocalDofs>> local_to_global;
    /// Eliminated DoFs as (triangle, local index) pairs, one entry per first occurrence.
    std::vector<std::array<int, 2>> eliminated;

    [[nodiscard]] const std::array<int, kLocalDofs>& cell(std::size_t k) const { return local_to_global.at(k); }
};

struct QDofMap {
    int n_free = 0;
    /// Global pressure index per vertex, kEliminated on the boundary.
    std::vector<int> vertex_to_global;
    std::vector<std::array<int, 3>> local_to_global;
    std::vector<int> eliminated_vertices;
    /// Q_h also requires zero mean; enforced by a multiplier in the solver.
    bool needs_mean_constraint = true;

    [[nodiscard]] const std::array<int, 3>& cell(std::size_t k) const { return local_to_global.at(k); }
};

inline VDofMap build_vdofmap(const Mesh& mesh)
{
    VDofMap map;
    int next = 0;
    std::vector<int> vertex_base(mesh.num_vertices(), kEliminated);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary_vertex(v)) {
            vertex_base[v] = next;
            next += 2;
        }
    }
    // Per interior edge: midpoint (2) then normal derivative (2).
    std::vector<int> edge_base(mesh.num_edges(), kEliminated);
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        if (!mesh.is_boundary_edge(e)) {
            edge_base[e] = next;
            next += 4;
        }
    }
    std::vector<int> cell_base(mesh.num_triangles());
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        cell_base[k] = next;
        next += 2;
    }
    map.n_free = next;

    std::vector<bool> vertex_seen(mesh.num_vertices(), false);
    std::vector<bool> edge_seen(mesh.num_edges(), false);
    map.local_to_global.resize(mesh.num_triangles());
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        auto& l2g = map.local_to_global[k];
        const auto& tri = mesh.triangle(k);
        const auto& refs = mesh.edges_of_triangle(k);
        for (int i = 0; i < 3; ++i) {
            const auto v = static_cast<std::size_t>(tri[i]);
            const auto e = static_cast<std::size_t>(refs[i].edge);
            for (int c = 0; c < 2; ++c) {
                l2g[local_dof(i, c)] = vertex_base[v] == kEliminated ? kEliminated : vertex_base[v] + c;
                l2g[local_dof(3 + i, c)] = edge_base[e] == kEliminated ? kEliminated : edge_base[e] + c;
                l2g[local_dof(6 + i, c)] = edge_base[e] == kEliminated ? kEliminated : edge_base[e] + 2 + c;
            }
            if (vertex_base[v] == kEliminated && !vertex_seen[v]) {
                vertex_seen[v] = true;
                for (int c = 0; c < 2; ++c) map.eliminated.push_back({static_cast<int>(k), local_dof(i, c)});
            }
            if (edge_base[e] == kEliminated && !edge_seen[e]) {
                edge_seen[e] = true;
                for (int c = 0; c < 2; ++c) {
                    map.eliminated.push_back({static_cast<int>(k), local_dof(3 + i, c)});
                    map.eliminated.push_back({static_cast<int>(k), local_dof(6 + i, c)});
                }
            }
        }
        for (int c = 0; c < 2; ++c) l2g[local_dof(9, c)] = cell_base[k] + c;
    }
    return map;
}

inline QDofMap build_qdofmap(const Mesh& mesh)
{
    QDofMap map;
    map.vertex_to_global.assign(mesh.num_vertices(), kEliminated);
    int next = 0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_boundary_vertex(v)) {
            map.eliminated_vertices.push_back(static_cast<int>(v));
        } else {
            map.vertex_to_global[v] = next++;
        }
    }
    if (next == 0) {
        throw std::invalid_argument("build_qdofmap: mesh has no interior vertex, pressure space is empty");
    }
    map.n_free = next;
    map.local_to_global.resize(mesh.num_triangles());
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& tri = mesh.triangle(k);
        for (int t = 0; t < 3; ++t) map.local_to_global[k][t] = map.vertex_to_global[static_cast<std::size_t>(tri[t])];
    }
    return map;
}

/// Local DoF values of a global coefficient vector (zeros for eliminated DoFs).
inline Vector20d gather(const VDofMap& map, std::size_t k, const Eigen::VectorXd& u)
{
    Vector20d local = Vector20d::Zero();
    const auto& l2g = map.cell(k);
    for (int i = 0; i < kLocalDofs; ++i) {
        if (l2g[i] != kEliminated) local(i) = u(l2g[i]);
    }
    return local;
}

inline Eigen::Vector3d gather(const QDofMap& map, std::size_t k, const Eigen::VectorXd& p)
{
    Eigen::Vector3d local = Eigen::Vector3d::Zero();
    const auto& l2g = map.cell(k);
    for (int t = 0; t < 3; ++t) {
        if (l2g[t] != kEliminated) local(t) = p(l2g[t]);
    }
    return local;
}

} // namespace sge
