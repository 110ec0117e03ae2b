#pragma once

/**
 * @file mesh.hpp
 * @brief Conforming triangulations of planar domains: entities, adjacency,
 *        canonical edge orientation and per-triangle affine geometry.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sge {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Edge slot of a triangle: local edge i is opposite local vertex i.
struct EdgeRef {
    int edge = -1;
    /// +1 if the local direction (vertex i+1 -> vertex i+2) agrees with the
    /// canonical global direction (lower vertex index first), -1 otherwise.
    int sign = 1;
};

/**
 * Immutable triangulation. Triangles are stored counterclockwise for meshes
 * built by the generator; imported meshes are stored as given so that
 * `validate` can report orientation problems instead of hiding them.
 */
class Mesh {
public:
    Mesh() = default;

    /// Builds edges, adjacency and boundary flags from raw vertex/triangle data.
    Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles))
    {
        for (const auto& t : triangles_) {
            for (int v : t) {
                if (v < 0 || static_cast<std::size_t>(v) >= vertices_.size()) {
                    throw std::invalid_argument("Mesh: triangle references vertex out of range");
                }
            }
        }
        build_topology();
    }

    [[nodiscard]] std::size_t num_vertices() const { return vertices_.size(); }
    [[nodiscard]] std::size_t num_edges() const { return edges_.size(); }
    [[nodiscard]] std::size_t num_triangles() const { return triangles_.size(); }

    [[nodiscard]] const std::vector<Point2>& vertices() const { return vertices_; }
    [[nodiscard]] const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    [[nodiscard]] const std::vector<std::array<int, 2>>& edges() const { return edges_; }

    [[nodiscard]] const Point2& vertex(std::size_t i) const { return vertices_.at(i); }
    [[nodiscard]] const std::array<int, 3>& triangle(std::size_t k) const { return triangles_.at(k); }
    [[nodiscard]] const std::array<int, 2>& edge(std::size_t e) const { return edges_.at(e); }

    [[nodiscard]] const std::array<EdgeRef, 3>& edges_of_triangle(std::size_t k) const
    {
        return edge_of_triangle_.at(k);
    }
    [[nodiscard]] const std::vector<int>& triangles_of_edge(std::size_t e) const
    {
        return triangles_of_edge_.at(e);
    }

    [[nodiscard]] bool is_boundary_vertex(std::size_t v) const { return boundary_vertex_.at(v); }
    [[nodiscard]] bool is_boundary_edge(std::size_t e) const { return boundary_edge_.at(e); }

    [[nodiscard]] std::size_t num_boundary_edges() const
    {
        return static_cast<std::size_t>(std::count(boundary_edge_.begin(), boundary_edge_.end(), true));
    }
    [[nodiscard]] std::size_t num_interior_edges() const { return num_edges() - num_boundary_edges(); }
    [[nodiscard]] std::size_t num_interior_vertices() const
    {
        return static_cast<std::size_t>(std::count(boundary_vertex_.begin(), boundary_vertex_.end(), false));
    }

    /// Maximum triangle diameter.
    [[nodiscard]] double h() const { return h_; }

    [[nodiscard]] double signed_area(std::size_t k) const
    {
        const auto& t = triangle(k);
        const Point2 a = vertices_[t[0]];
        return 0.5 * cross(vertices_[t[1]] - a, vertices_[t[2]] - a);
    }

    [[nodiscard]] double edge_length(std::size_t e) const
    {
        const auto& ed = edge(e);
        return norm(vertices_[ed[1]] - vertices_[ed[0]]);
    }

    /// Unit tangent from the lower-index endpoint to the higher-index one.
    [[nodiscard]] Point2 edge_tangent(std::size_t e) const
    {
        const auto& ed = edge(e);
        const Point2 d = vertices_[ed[1]] - vertices_[ed[0]];
        return (1.0 / norm(d)) * d;
    }

    /// Global edge normal: the canonical tangent rotated by -90 degrees.
    [[nodiscard]] Point2 edge_normal(std::size_t e) const
    {
        const Point2 t = edge_tangent(e);
        return {t.y, -t.x};
    }

    [[nodiscard]] Point2 edge_midpoint(std::size_t e) const
    {
        const auto& ed = edge(e);
        return 0.5 * (vertices_[ed[0]] + vertices_[ed[1]]);
    }

private:
    void build_topology()
    {
        std::map<std::pair<int, int>, int> edge_index;
        edge_of_triangle_.resize(triangles_.size());
        for (std::size_t k = 0; k < triangles_.size(); ++k) {
            const auto& t = triangles_[k];
            for (int i = 0; i < 3; ++i) {
                const int a = t[(i + 1) % 3];
                const int b = t[(i + 2) % 3];
                const auto key = std::minmax(a, b);
                auto [it, inserted] = edge_index.try_emplace({key.first, key.second},
                                                             static_cast<int>(edges_.size()));
                if (inserted) {
                    edges_.push_back({key.first, key.second});
                    triangles_of_edge_.emplace_back();
                }
                edge_of_triangle_[k][i] = EdgeRef{it->second, a < b ? 1 : -1};
                triangles_of_edge_[it->second].push_back(static_cast<int>(k));
            }
        }

        boundary_edge_.assign(edges_.size(), false);
        boundary_vertex_.assign(vertices_.size(), false);
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            if (triangles_of_edge_[e].size() == 1) {
                boundary_edge_[e] = true;
                boundary_vertex_[edges_[e][0]] = true;
                boundary_vertex_[edges_[e][1]] = true;
            }
        }

        h_ = 0.0;
        for (const auto& t : triangles_) {
            for (int i = 0; i < 3; ++i) {
                h_ = std::max(h_, norm(vertices_[t[(i + 1) % 3]] - vertices_[t[i]]));
            }
        }
    }

    std::vector<Point2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<EdgeRef, 3>> edge_of_triangle_;
    std::vector<std::vector<int>> triangles_of_edge_;
    std::vector<bool> boundary_vertex_;
    std::vector<bool> boundary_edge_;
    double h_ = 0.0;
};

/**
 * Uniform mesh of the unit square with n x n cells, each split by the
 * diagonal from its lower-left to its upper-right corner.
 */
inline Mesh build_uniform_unit_square(int n)
{
    if (n < 1) {
        throw std::invalid_argument("build_uniform_unit_square: n must be >= 1");
    }
    std::vector<Point2> vertices;
    vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(2 * n * n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int ll = id(i, j);
            const int lr = id(i + 1, j);
            const int ul = id(i, j + 1);
            const int ur = id(i + 1, j + 1);
            triangles.push_back({ll, lr, ur});
            triangles.push_back({ll, ur, ul});
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

/**
 * Per-triangle affine data. Barycentric coordinate s is
 * lambda_s(x) = c0[s] + grad[s] . x.
 */
struct AffineFrame {
    std::array<Point2, 3> vertices{};
    std::array<Point2, 3> grad_lambda{};
    std::array<double, 3> c0{};
    double area = 0.0;
    double diameter = 0.0;

    /// Local edge i is opposite vertex i; all edge data uses the global orientation.
    std::array<int, 3> edge_index{};
    std::array<int, 3> edge_sign{};
    std::array<Point2, 3> edge_normal{};
    std::array<Point2, 3> edge_tangent{};
    std::array<double, 3> edge_length{};
    std::array<Point2, 3> edge_midpoint{};

    [[nodiscard]] std::array<double, 3> barycentric(Point2 x) const
    {
        return {c0[0] + dot(grad_lambda[0], x), c0[1] + dot(grad_lambda[1], x),
                c0[2] + dot(grad_lambda[2], x)};
    }

    [[nodiscard]] Point2 point(const std::array<double, 3>& bary) const
    {
        return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
    }
};

/// Affine frame of a free-standing triangle; edge_index is left at -1.
inline AffineFrame make_frame(Point2 a, Point2 b, Point2 c)
{
    AffineFrame f;
    f.vertices = {a, b, c};
    const double twice_area = cross(b - a, c - a);
    if (!(std::abs(twice_area) > 0.0)) {
        throw std::domain_error("make_frame: degenerate triangle");
    }
    f.area = 0.5 * std::abs(twice_area);
    for (int s = 0; s < 3; ++s) {
        const Point2 p = f.vertices[(s + 1) % 3];
        const Point2 q = f.vertices[(s + 2) % 3];
        // lambda_s vanishes on the edge pq and equals 1 at vertex s.
        const Point2 g{(p.y - q.y) / twice_area, (q.x - p.x) / twice_area};
        f.grad_lambda[s] = g;
        f.c0[s] = -dot(g, p);
    }
    f.diameter = 0.0;
    for (int i = 0; i < 3; ++i) {
        const int s = (i + 1) % 3;
        const int t = (i + 2) % 3;
        const Point2 d = f.vertices[t] - f.vertices[s];
        const double len = norm(d);
        f.diameter = std::max(f.diameter, len);
        f.edge_index[i] = -1;
        f.edge_sign[i] = 1;
        f.edge_length[i] = len;
        f.edge_tangent[i] = (1.0 / len) * d;
        f.edge_normal[i] = {f.edge_tangent[i].y, -f.edge_tangent[i].x};
        f.edge_midpoint[i] = 0.5 * (f.vertices[s] + f.vertices[t]);
    }
    return f;
}

inline AffineFrame frame(const Mesh& mesh, std::size_t k)
{
    const auto& t = mesh.triangle(k);
    AffineFrame f = make_frame(mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2]));
    const auto& refs = mesh.edges_of_triangle(k);
    for (int i = 0; i < 3; ++i) {
        const auto e = static_cast<std::size_t>(refs[i].edge);
        f.edge_index[i] = refs[i].edge;
        f.edge_sign[i] = refs[i].sign;
        f.edge_tangent[i] = mesh.edge_tangent(e);
        f.edge_normal[i] = mesh.edge_normal(e);
    }
    return f;
}

struct MeshReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Checks the structural invariants of a triangulation; never throws.
inline MeshReport validate(const Mesh& mesh)
{
    MeshReport report;
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const double a = mesh.signed_area(k);
        if (!(a > 0.0)) {
            std::ostringstream os;
            os << "triangle " << k << " has non-positive signed area " << a;
            report.violations.push_back(os.str());
        }
    }
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        if (!(ed[0] < ed[1])) {
            std::ostringstream os;
            os << "edge " << e << " endpoints not in ascending index order";
            report.violations.push_back(os.str());
        }
        const std::size_t incident = mesh.triangles_of_edge(e).size();
        if (incident > 2) {
            std::ostringstream os;
            os << "nonconforming edge " << e << " (" << ed[0] << "," << ed[1] << ") has " << incident
               << " incident triangles";
            report.violations.push_back(os.str());
        }
    }
    const long euler = static_cast<long>(mesh.num_vertices()) - static_cast<long>(mesh.num_edges())
                       + static_cast<long>(mesh.num_triangles());
    if (euler != 1) {
        std::ostringstream os;
        os << "Euler characteristic V-E+T = " << euler << " (expected 1)";
        report.violations.push_back(os.str());
    }
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangle(k);
        const bool touches_interior = std::any_of(t.begin(), t.end(), [&](int v) {
            return !mesh.is_boundary_vertex(static_cast<std::size_t>(v));
        });
        if (!touches_interior) {
            std::ostringstream os;
            os << "triangle " << k << " has no interior vertex";
            report.warnings.push_back(os.str());
        }
    }
    return report;
}

/// Plain-text mesh format: "V E T", then V coordinate lines, E edge pairs and
/// T triangle triples, 0-based.
inline void write_mesh(std::ostream& os, const Mesh& mesh)
{
    os.precision(17);
    os << mesh.num_vertices() << ' ' << mesh.num_edges() << ' ' << mesh.num_triangles() << '\n';
    for (const auto& p : mesh.vertices()) os << p.x << ' ' << p.y << '\n';
    for (const auto& e : mesh.edges()) os << e[0] << ' ' << e[1] << '\n';
    for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline Mesh read_mesh(std::istream& is)
{
    std::size_t nv = 0;
    std::size_t ne = 0;
    std::size_t nt = 0;
    if (!(is >> nv >> ne >> nt)) throw std::runtime_error("read_mesh: bad header");
    std::vector<Point2> vertices(nv);
    for (auto& p : vertices) {
        if (!(is >> p.x >> p.y)) throw std::runtime_error("read_mesh: truncated vertex block");
    }
    std::vector<std::array<int, 2>> edges(ne);
    for (auto& e : edges) {
        if (!(is >> e[0] >> e[1])) throw std::runtime_error("read_mesh: truncated edge block");
        if (e[0] > e[1]) std::swap(e[0], e[1]);
    }
    std::vector<std::array<int, 3>> triangles(nt);
    for (auto& t : triangles) {
        if (!(is >> t[0] >> t[1] >> t[2])) throw std::runtime_error("read_mesh: truncated triangle block");
    }
    Mesh mesh(std::move(vertices), std::move(triangles));
    auto derived = mesh.edges();
    std::sort(derived.begin(), derived.end());
    std::sort(edges.begin(), edges.end());
    if (derived != edges) {
        throw std::runtime_error("read_mesh: edge list does not match the triangles");
    }
    return mesh;
}

inline void save_mesh(const std::string& path, const Mesh& mesh)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_mesh: cannot open " + path);
    write_mesh(os, mesh);
}

inline Mesh load_mesh(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_mesh: cannot open " + path);
    return read_mesh(is);
}

} // namespace sge
