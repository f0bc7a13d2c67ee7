// ============================================================================
// qinsk/mesh.hpp - simplicial meshes (1D intervals, 2D triangles) and the
// facet skeleton.
//
// Element maps are affine: x = v0 + J * xi with xi in the reference cell.
// Triangles are stored counter-clockwise so det J > 0.
//
// The skeleton enumerates every facet once.  Interior facets store both
// neighbours (K1, K2); the unit normal points out of K1.  Boundary facets
// store only K1 and the outward normal.  The facet mesh size h is
// max(h_K1, h_K2), matching the penalty weight used by the interior
// penalty forms.
//
// Builders:
//   build_interval_mesh(a, b, n)                    uniform interval mesh
//   build_rectangle_mesh(x0,x1,y0,y1,nx,ny)         criss-cross triangles
//                                                   (4 per cell, cell centre
//                                                   added as a vertex)
//   build_disk_mesh(radius, refinement)             concentric rings over a
//                                                   regular polygon: ring i
//                                                   carries 6i vertices, so
//                                                   the boundary is a regular
//                                                   6*refinement-gon inscribed
//                                                   in the circle
// ============================================================================
#pragma once

#include "qinsk/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

namespace qinsk {

struct Facet {
    std::array<int, 2> verts{-1, -1};  // 1D facets use verts[0] only
    std::array<int, 2> elem{-1, -1};   // K1, K2 (K2 = -1 on the boundary)
    std::array<int, 2> local{-1, -1};  // local facet index within K1, K2
    Vec normal = Vec::Zero();          // unit, outward from K1
    double measure = 1.0;              // length in 2D, 1 for point facets
    double h = 0.0;                    // max of the neighbouring diameters

    bool boundary() const { return elem[1] < 0; }
};

struct ElementGeometry {
    Vec origin = Vec::Zero();  // image of the reference origin
    Mat2 J = Mat2::Identity();
    Mat2 Jinv = Mat2::Identity();
    double det = 1.0;       // |det J| (1D: element length)
    double volume = 0.0;    // measure of the element
    double diameter = 0.0;  // h_K
};

struct Mesh {
    int dim = 1;
    std::vector<Vec> vertices;
    std::vector<std::array<int, 3>> elements;  // 1D elements use [0],[1]
    std::vector<ElementGeometry> geom;
    std::vector<Facet> facets;
    // facet ids per element, aligned with local facet numbering
    std::vector<std::array<int, 3>> element_facets;

    int num_elements() const { return static_cast<int>(elements.size()); }
    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_facets() const { return static_cast<int>(facets.size()); }
    int vertices_per_element() const { return dim + 1; }

    Vec map_to_physical(int e, const Vec& xi) const
    {
        return geom[e].origin + geom[e].J * xi;
    }
    Vec map_to_reference(int e, const Vec& x) const
    {
        return geom[e].Jinv * (x - geom[e].origin);
    }
};

namespace detail {

// Local facet v-indices: 1D facet i = endpoint i; 2D facet i = edge opposite
// vertex i, oriented (i+1, i+2) mod 3.
inline std::array<int, 2> local_facet_vertices(int dim, int lf)
{
    if (dim == 1) return {lf, -1};
    return {(lf + 1) % 3, (lf + 2) % 3};
}

inline void finish_element_geometry(Mesh& mesh)
{
    mesh.geom.resize(mesh.elements.size());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto& g = mesh.geom[e];
        const auto& el = mesh.elements[e];
        g.origin = mesh.vertices[el[0]];
        if (mesh.dim == 1) {
            double len = mesh.vertices[el[1]][0] - mesh.vertices[el[0]][0];
            if (len <= 0.0) throw std::runtime_error("mesh: non-positive element length");
            g.J = Mat2::Identity();
            g.J(0, 0) = len;
            g.Jinv = Mat2::Identity();
            g.Jinv(0, 0) = 1.0 / len;
            g.det = len;
            g.volume = len;
            g.diameter = len;
        } else {
            Vec e1 = mesh.vertices[el[1]] - mesh.vertices[el[0]];
            Vec e2 = mesh.vertices[el[2]] - mesh.vertices[el[0]];
            double det = e1[0] * e2[1] - e1[1] * e2[0];
            if (det <= 0.0) throw std::runtime_error("mesh: triangle not counter-clockwise or degenerate");
            g.J << e1[0], e2[0], e1[1], e2[1];
            g.Jinv << e2[1] / det, -e2[0] / det, -e1[1] / det, e1[0] / det;
            g.det = det;
            g.volume = 0.5 * det;
            Vec e3 = e2 - e1;
            g.diameter = std::max({e1.norm(), e2.norm(), e3.norm()});
        }
    }
}

inline void build_skeleton(Mesh& mesh)
{
    mesh.facets.clear();
    mesh.element_facets.assign(mesh.elements.size(), {-1, -1, -1});
    const int nlf = mesh.dim + 1;

    std::map<std::array<int, 2>, int> lookup;  // sorted vertex key -> facet id
    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int lf = 0; lf < nlf; ++lf) {
            auto lv = local_facet_vertices(mesh.dim, lf);
            std::array<int, 2> key{mesh.elements[e][lv[0]],
                                   lv[1] >= 0 ? mesh.elements[e][lv[1]] : -1};
            std::array<int, 2> sorted = key;
            std::sort(sorted.begin(), sorted.end());
            auto it = lookup.find(sorted);
            if (it == lookup.end()) {
                Facet f;
                f.verts = key;
                f.elem[0] = e;
                f.local[0] = lf;
                lookup[sorted] = mesh.num_facets();
                mesh.element_facets[e][lf] = mesh.num_facets();
                mesh.facets.push_back(f);
            } else {
                Facet& f = mesh.facets[it->second];
                if (f.elem[1] >= 0)
                    throw std::runtime_error("mesh: facet shared by more than two elements");
                f.elem[1] = e;
                f.local[1] = lf;
                mesh.element_facets[e][lf] = it->second;
            }
        }
    }

    for (auto& f : mesh.facets) {
        int e = f.elem[0];
        if (mesh.dim == 1) {
            f.measure = 1.0;
            // outward from K1: +1 at the right endpoint, -1 at the left
            double xm = 0.5 * (mesh.vertices[mesh.elements[e][0]][0] +
                               mesh.vertices[mesh.elements[e][1]][0]);
            f.normal = Vec(mesh.vertices[f.verts[0]][0] > xm ? 1.0 : -1.0, 0.0);
        } else {
            Vec a = mesh.vertices[f.verts[0]], b = mesh.vertices[f.verts[1]];
            Vec t = b - a;
            f.measure = t.norm();
            if (f.measure <= 0.0) throw std::runtime_error("mesh: degenerate facet");
            Vec n(t[1] / f.measure, -t[0] / f.measure);
            // orient away from K1's opposite vertex
            Vec opp = mesh.vertices[mesh.elements[e][f.local[0]]];
            if (n.dot(a - opp) < 0.0) n = -n;
            f.normal = n;
        }
        f.h = mesh.geom[f.elem[0]].diameter;
        if (f.elem[1] >= 0) f.h = std::max(f.h, mesh.geom[f.elem[1]].diameter);
    }
}

// Conformity check: a vertex lying strictly inside a facet classified as
// boundary is a hanging vertex (the facet failed to pair up).
inline void check_conformity(const Mesh& mesh)
{
    if (mesh.dim == 1) {
        // every interior vertex must be shared by exactly two elements
        std::vector<int> count(mesh.num_vertices(), 0);
        for (const auto& el : mesh.elements) {
            ++count[el[0]];
            ++count[el[1]];
        }
        int nb = 0;
        for (int c : count) {
            if (c == 1) ++nb;
            else if (c != 2 && c != 0)
                throw std::runtime_error("mesh: non-conforming 1D mesh (vertex shared by more than two elements)");
        }
        if (nb != 2) throw std::runtime_error("mesh: non-conforming 1D mesh (hanging vertex)");
        return;
    }
    for (const auto& f : mesh.facets) {
        if (!f.boundary()) continue;
        Vec a = mesh.vertices[f.verts[0]], b = mesh.vertices[f.verts[1]];
        Vec t = b - a;
        double len2 = t.squaredNorm();
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (v == f.verts[0] || v == f.verts[1]) continue;
            Vec p = mesh.vertices[v] - a;
            double s = p.dot(t) / len2;
            if (s <= 1e-12 || s >= 1.0 - 1e-12) continue;
            Vec closest = a + s * t;
            if ((mesh.vertices[v] - closest).norm() < 1e-10 * std::sqrt(len2))
                throw std::runtime_error("mesh: non-conforming mesh (hanging vertex on a facet)");
        }
    }
}

inline void finalize_mesh(Mesh& mesh)
{
    finish_element_geometry(mesh);
    build_skeleton(mesh);
    check_conformity(mesh);
}

} // namespace detail

// Throws when the mesh has hanging vertices (runs on every built mesh).
using detail::check_conformity;

inline Mesh build_interval_mesh(double a, double b, int n)
{
    if (!(b > a)) throw std::invalid_argument("build_interval_mesh: need b > a");
    if (n < 1) throw std::invalid_argument("build_interval_mesh: need n >= 1");
    Mesh mesh;
    mesh.dim = 1;
    for (int i = 0; i <= n; ++i)
        mesh.vertices.push_back(Vec(a + (b - a) * i / n, 0.0));
    for (int i = 0; i < n; ++i) mesh.elements.push_back({i, i + 1, -1});
    detail::finalize_mesh(mesh);
    return mesh;
}

inline Mesh build_rectangle_mesh(double x0, double x1, double y0, double y1,
                                 int nx, int ny)
{
    if (!(x1 > x0) || !(y1 > y0))
        throw std::invalid_argument("build_rectangle_mesh: empty rectangle");
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rectangle_mesh: need nx, ny >= 1");
    Mesh mesh;
    mesh.dim = 2;
    auto grid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.vertices.push_back(Vec(x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny));
    // cell centres
    const int c0 = mesh.num_vertices();
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            mesh.vertices.push_back(Vec(x0 + (x1 - x0) * (i + 0.5) / nx,
                                        y0 + (y1 - y0) * (j + 0.5) / ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int bl = grid(i, j), br = grid(i + 1, j);
            int tl = grid(i, j + 1), tr = grid(i + 1, j + 1);
            int c = c0 + j * nx + i;
            mesh.elements.push_back({bl, br, c});
            mesh.elements.push_back({br, tr, c});
            mesh.elements.push_back({tr, tl, c});
            mesh.elements.push_back({tl, bl, c});
        }
    detail::finalize_mesh(mesh);
    return mesh;
}

inline Mesh build_disk_mesh(double radius, int refinement)
{
    if (!(radius > 0.0)) throw std::invalid_argument("build_disk_mesh: need radius > 0");
    if (refinement < 1) throw std::invalid_argument("build_disk_mesh: need refinement >= 1");
    Mesh mesh;
    mesh.dim = 2;
    // ring i has 6i vertices at radius i*radius/R; ring 0 is the centre
    std::vector<int> ring_start{0};
    mesh.vertices.push_back(Vec(0.0, 0.0));
    for (int i = 1; i <= refinement; ++i) {
        ring_start.push_back(mesh.num_vertices());
        double r = radius * i / refinement;
        for (int j = 0; j < 6 * i; ++j) {
            double th = 2.0 * M_PI * j / (6.0 * i);
            mesh.vertices.push_back(Vec(r * std::cos(th), r * std::sin(th)));
        }
    }
    auto ring_vertex = [&](int ring, int j) {
        if (ring == 0) return 0;
        return ring_start[ring] + ((j % (6 * ring)) + 6 * ring) % (6 * ring);
    };
    auto maybe_flip = [&](int v0, int v1, int v2) {
        Vec e1 = mesh.vertices[v1] - mesh.vertices[v0];
        Vec e2 = mesh.vertices[v2] - mesh.vertices[v0];
        if (e1[0] * e2[1] - e1[1] * e2[0] < 0.0) std::swap(v1, v2);
        mesh.elements.push_back({v0, v1, v2});
    };
    // innermost fan
    for (int j = 0; j < 6; ++j) maybe_flip(0, ring_vertex(1, j), ring_vertex(1, j + 1));
    // annuli: walk inner (6i pts) and outer (6(i+1) pts) rings by angle
    for (int i = 1; i < refinement; ++i) {
        int ni = 6 * i, no = 6 * (i + 1);
        int ia = 0, io = 0;
        auto inner_angle = [&](int j) { return 2.0 * M_PI * j / ni; };
        auto outer_angle = [&](int j) { return 2.0 * M_PI * j / no; };
        while (ia < ni || io < no) {
            bool advance_outer;
            if (ia == ni) advance_outer = true;
            else if (io == no) advance_outer = false;
            else advance_outer = outer_angle(io + 1) <= inner_angle(ia + 1) + 1e-12;
            if (advance_outer) {
                maybe_flip(ring_vertex(i, ia), ring_vertex(i + 1, io), ring_vertex(i + 1, io + 1));
                ++io;
            } else {
                maybe_flip(ring_vertex(i, ia), ring_vertex(i + 1, io), ring_vertex(i, ia + 1));
                ++ia;
            }
        }
    }
    detail::finalize_mesh(mesh);
    return mesh;
}

// Mesh size at a point: max diameter over all elements whose closure
// contains x.  On facet points this is the max over both neighbours.
inline double meshsize_at(const Mesh& mesh, const Vec& x)
{
    double h = -1.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        Vec xi = mesh.map_to_reference(e, x);
        double tol = 1e-12;
        bool inside;
        if (mesh.dim == 1)
            inside = xi[0] >= -tol && xi[0] <= 1.0 + tol;
        else
            inside = xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol;
        if (inside) h = std::max(h, mesh.geom[e].diameter);
    }
    if (h < 0.0) throw std::domain_error("meshsize_at: point outside the mesh");
    return h;
}

// Plain-text mesh dump: vertex coordinates then element connectivity,
// 0-based indices.
inline std::string dump_mesh(const Mesh& mesh)
{
    std::ostringstream os;
    os << "dim " << mesh.dim << "\n";
    os << "vertices " << mesh.num_vertices() << "\n";
    char buf[80];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v[0], v[1]);
        os << buf;
    }
    os << "elements " << mesh.num_elements() << "\n";
    for (const auto& el : mesh.elements) {
        os << el[0] << " " << el[1];
        if (mesh.dim == 2) os << " " << el[2];
        os << "\n";
    }
    return os.str();
}

} // namespace qinsk
