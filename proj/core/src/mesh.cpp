#include "sphwave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sphwave/sphere.hpp"

namespace sphwave {

namespace {

constexpr double kPi = std::numbers::pi;

MeshLevel octahedron() {
    MeshLevel l;
    l.vertices = {
        {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
    };
    l.triangles = {
        {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4},
        {1, 0, 5}, {2, 1, 5}, {3, 2, 5}, {0, 3, 5},
    };
    return l;
}

/// One Loop subdivision step projected back to the sphere. New vertices use
/// the 3/8-3/8-1/8-1/8 edge rule; the existing vertices keep their
/// positions, so every level is a strict superset of the previous one.
MeshLevel subdivide(const MeshLevel& coarse) {
    std::map<std::pair<int, int>, std::array<int, 2>> edge_opposite;
    for (const auto& t : coarse.triangles) {
        for (int k = 0; k < 3; ++k) {
            const auto key = std::minmax(t[k], t[(k + 1) % 3]);
            auto& opp = edge_opposite.try_emplace({key.first, key.second},
                                                  std::array<int, 2>{-1, -1}).first->second;
            (opp[0] < 0 ? opp[0] : opp[1]) = t[(k + 2) % 3];
        }
    }

    MeshLevel fine;
    fine.vertices = coarse.vertices;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int idx = static_cast<int>(fine.vertices.size());
        const auto& opp = edge_opposite.at({key.first, key.second});
        Eigen::Vector3d p = 0.375 * (coarse.vertices[a] + coarse.vertices[b]);
        if (opp[0] >= 0 && opp[1] >= 0)
            p += 0.125 * (coarse.vertices[opp[0]] + coarse.vertices[opp[1]]);
        else
            p = 0.5 * (coarse.vertices[a] + coarse.vertices[b]);
        fine.vertices.push_back(p.normalized());
        fine.parent_edge.push_back({key.first, key.second});
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& t : coarse.triangles) {
        const int a = t[0], b = t[1], c = t[2];
        const int mab = mid(a, b), mbc = mid(b, c), mca = mid(c, a);
        fine.triangles.push_back({a, mab, mca});
        fine.triangles.push_back({b, mbc, mab});
        fine.triangles.push_back({c, mca, mbc});
        fine.triangles.push_back({mab, mbc, mca});
    }
    return fine;
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Spherical triangle area via l'Huilier.
double spherical_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c) {
    const double ab = angle_between(a, b), bc = angle_between(b, c), ca = angle_between(c, a);
    const double s = (ab + bc + ca) / 2.0;
    const double t = std::tan(s / 2.0) * std::tan((s - ab) / 2.0) *
                     std::tan((s - bc) / 2.0) * std::tan((s - ca) / 2.0);
    return 4.0 * std::atan(std::sqrt(std::max(0.0, t)));
}

/// The 48 signed permutation matrices (full octahedral group).
std::vector<Eigen::Matrix3d> octahedral_group() {
    std::vector<Eigen::Matrix3d> group;
    int perm[3] = {0, 1, 2};
    std::sort(perm, perm + 3);
    do {
        for (int signs = 0; signs < 8; ++signs) {
            Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
            for (int r = 0; r < 3; ++r)
                m(r, perm[r]) = (signs >> r) & 1 ? -1.0 : 1.0;
            group.push_back(m);
        }
    } while (std::next_permutation(perm, perm + 3));
    return group;
}

int find_vertex(const MeshLevel& level, const Eigen::Vector3d& p) {
    for (size_t i = 0; i < level.vertices.size(); ++i)
        if ((level.vertices[i] - p).norm() < 1e-9) return static_cast<int>(i);
    return -1;
}

}  // namespace

SubdivisionMesh build_mesh(int levels) {
    if (levels < 0) throw std::invalid_argument("build_mesh: levels must be >= 0");
    SubdivisionMesh mesh;
    mesh.levels.push_back(octahedron());
    for (int j = 0; j < levels; ++j)
        mesh.levels.push_back(subdivide(mesh.levels.back()));
    return mesh;
}

NeighborSets neighbor_sets(const SubdivisionMesh& mesh, int level) {
    if (level < 1 || level > mesh.max_level())
        throw std::invalid_argument("neighbor_sets: level out of range");
    const MeshLevel& coarse = mesh.levels[level - 1];
    const MeshLevel& fine = mesh.levels[level];
    const int coarse_n = static_cast<int>(coarse.vertices.size());

    // Coarse triangles adjacent to each coarse edge.
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (size_t t = 0; t < coarse.triangles.size(); ++t) {
        const auto& tri = coarse.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const auto key = std::minmax(tri[k], tri[(k + 1) % 3]);
            edge_tris[{key.first, key.second}].push_back(static_cast<int>(t));
        }
    }
    auto third_vertex = [&](int tri, int a, int b) {
        for (int k = 0; k < 3; ++k) {
            const int v = coarse.triangles[tri][k];
            if (v != a && v != b) return v;
        }
        throw std::logic_error("degenerate triangle");
    };
    auto other_triangle = [&](int a, int b, int not_tri) {
        const auto key = std::minmax(a, b);
        for (int t : edge_tris.at({key.first, key.second}))
            if (t != not_tri) return t;
        throw std::runtime_error("neighbor_sets: boundary edge in a closed mesh");
    };

    NeighborSets ns;
    ns.level = level;
    const int odd_n = static_cast<int>(fine.vertices.size()) - coarse_n;
    ns.v.resize(odd_n);
    ns.f.resize(odd_n);
    ns.e.resize(odd_n);
    for (int o = 0; o < odd_n; ++o) {
        const int m = coarse_n + o;
        const auto [a, b] = fine.parent_edge[o];
        const Eigen::Vector3d pm = fine.vertices[m];
        auto by_distance = [&](auto& arr) {
            std::sort(arr.begin(), arr.end(), [&](int x, int y) {
                const double dx = angle_between(pm, coarse.vertices[x]);
                const double dy = angle_between(pm, coarse.vertices[y]);
                if (std::abs(dx - dy) > 1e-12) return dx < dy;
                return x < y;
            });
        };
        ns.v[o] = {a, b};
        by_distance(ns.v[o]);

        const auto key = std::minmax(a, b);
        const auto& tris = edge_tris.at({key.first, key.second});
        if (tris.size() != 2) throw std::runtime_error("neighbor_sets: non-manifold edge");
        const int f1 = third_vertex(tris[0], a, b);
        const int f2 = third_vertex(tris[1], a, b);
        ns.f[o] = {f1, f2};
        by_distance(ns.f[o]);

        // Wings: across the four outer edges of the two triangles sharing {a,b}.
        std::array<int, 4> wings{};
        int w = 0;
        for (int ti : {tris[0], tris[1]}) {
            const int fv = third_vertex(ti, a, b);
            for (int corner : {a, b})
                wings[w++] = third_vertex(other_triangle(corner, fv, ti), corner, fv);
        }
        ns.e[o] = wings;
        by_distance(ns.e[o]);
    }
    return ns;
}

std::vector<std::vector<int>> octahedral_vertex_permutations(const SubdivisionMesh& mesh,
                                                             int level) {
    const MeshLevel& ml = mesh.levels[level];
    const auto group = octahedral_group();
    std::vector<std::vector<int>> perms;
    perms.reserve(group.size());
    for (const auto& g : group) {
        std::vector<int> perm(ml.vertices.size());
        for (size_t i = 0; i < ml.vertices.size(); ++i) {
            const int image = find_vertex(ml, g * ml.vertices[i]);
            if (image < 0)
                throw std::logic_error("octahedral group element does not preserve the mesh");
            perm[i] = image;
        }
        perms.push_back(std::move(perm));
    }
    return perms;
}

SymmetryOrbits symmetry_orbits(const SubdivisionMesh& mesh, int level) {
    if (level < 1 || level > mesh.max_level())
        throw std::invalid_argument("symmetry_orbits: level out of range");
    const int coarse_n = mesh.vertex_count(level - 1);
    const int fine_n = mesh.vertex_count(level);
    const auto coarse_perms = octahedral_vertex_permutations(mesh, level - 1);
    const auto fine_perms = octahedral_vertex_permutations(mesh, level);

    SymmetryOrbits so;
    so.level = level;

    auto compute_orbits = [](int n, const std::vector<std::vector<int>>& perms) {
        std::vector<int> orbit_of(n, -1);
        std::vector<std::vector<int>> orbits;
        for (int v = 0; v < n; ++v) {
            if (orbit_of[v] >= 0) continue;
            const int id = static_cast<int>(orbits.size());
            std::vector<int> members;
            for (const auto& p : perms) {
                const int img = p[v];
                if (orbit_of[img] < 0) {
                    orbit_of[img] = id;
                    members.push_back(img);
                }
            }
            std::sort(members.begin(), members.end());
            orbits.push_back(std::move(members));
        }
        return orbits;
    };

    so.orbits = compute_orbits(coarse_n, coarse_perms);
    so.fine_orbits = compute_orbits(fine_n, fine_perms);

    // One permutation of fine vertices per orbit member, from a group
    // element sending the representative to the member.
    so.member_fine_perm.resize(so.orbits.size());
    for (size_t o = 0; o < so.orbits.size(); ++o) {
        const int rep = so.orbits[o][0];
        so.member_fine_perm[o].resize(so.orbits[o].size());
        for (size_t mi = 0; mi < so.orbits[o].size(); ++mi) {
            const int member = so.orbits[o][mi];
            bool found = false;
            for (size_t g = 0; g < coarse_perms.size(); ++g) {
                if (coarse_perms[g][rep] == member) {
                    so.member_fine_perm[o][mi] = fine_perms[g];
                    found = true;
                    break;
                }
            }
            if (!found) throw std::logic_error("symmetry_orbits: orbit member without group element");
        }
    }

    // Neighbour classes of fine vertices relative to each representative.
    const NeighborSets ns = neighbor_sets(mesh, level);
    so.rep_fine_class.resize(so.orbits.size());
    for (size_t o = 0; o < so.orbits.size(); ++o) {
        const int rep = so.orbits[o][0];
        std::vector<int> cls(fine_n, 4);
        cls[rep] = 0;
        for (int odd = 0; odd < ns.odd_count(); ++odd) {
            const int m = coarse_n + odd;
            auto contains = [&](const auto& arr) {
                return std::find(arr.begin(), arr.end(), rep) != arr.end();
            };
            if (contains(ns.v[odd]))
                cls[m] = 1;
            else if (contains(ns.f[odd]))
                cls[m] = 2;
            else if (contains(ns.e[odd]))
                cls[m] = 3;
        }
        so.rep_fine_class[o] = std::move(cls);
    }
    return so;
}

Eigen::VectorXd vertex_areas(const SubdivisionMesh& mesh, int level, AreaRule rule) {
    if (level < 0 || level > mesh.max_level())
        throw std::invalid_argument("vertex_areas: level out of range");
    const MeshLevel& ml = mesh.levels[level];
    const int n = static_cast<int>(ml.vertices.size());
    Eigen::VectorXd areas = Eigen::VectorXd::Zero(n);

    if (rule == AreaRule::barycentric) {
        for (const auto& t : ml.triangles) {
            const double a =
                spherical_triangle_area(ml.vertices[t[0]], ml.vertices[t[1]], ml.vertices[t[2]]);
            for (int k = 0; k < 3; ++k) areas[t[k]] += a / 3.0;
        }
        return areas;
    }

    // Voronoi cells: the polygon of circumcenters of the triangles around
    // each vertex, ordered by walking the triangle fan.
    std::vector<std::vector<int>> incident(n);
    for (size_t t = 0; t < ml.triangles.size(); ++t)
        for (int k = 0; k < 3; ++k) incident[ml.triangles[t][k]].push_back(static_cast<int>(t));

    auto circumcenter = [&](int t) {
        const auto& tri = ml.triangles[t];
        const Eigen::Vector3d& a = ml.vertices[tri[0]];
        Eigen::Vector3d c =
            (ml.vertices[tri[1]] - a).cross(ml.vertices[tri[2]] - a).normalized();
        if (c.dot(a) < 0) c = -c;
        return c;
    };

    for (int v = 0; v < n; ++v) {
        // Order the fan: next triangle shares the edge (v, other).
        std::vector<int> fan;
        std::vector<int> pool = incident[v];
        int current = pool.front();
        pool.erase(pool.begin());
        fan.push_back(current);
        auto next_edge_vertex = [&](int t, int prev) {
            // Returns the vertex of t adjacent to v that is not prev.
            for (int k = 0; k < 3; ++k) {
                const int x = ml.triangles[t][k];
                if (x != v && x != prev) {
                    // Must share an edge with v.
                    return x;
                }
            }
            return -1;
        };
        // Pick a starting edge direction.
        int edge = -1;
        for (int k = 0; k < 3; ++k)
            if (ml.triangles[current][k] != v) edge = ml.triangles[current][k];
        while (!pool.empty()) {
            bool advanced = false;
            for (size_t i = 0; i < pool.size(); ++i) {
                const auto& tri = ml.triangles[pool[i]];
                if (std::find(tri.begin(), tri.end(), edge) != tri.end()) {
                    current = pool[i];
                    pool.erase(pool.begin() + i);
                    fan.push_back(current);
                    edge = next_edge_vertex(current, edge);
                    advanced = true;
                    break;
                }
            }
            if (!advanced) throw std::logic_error("vertex_areas: broken triangle fan");
        }
        std::vector<Eigen::Vector3d> poly;
        poly.reserve(fan.size());
        for (int t : fan) poly.push_back(circumcenter(t));
        // Spherical polygon area by fan triangulation from the vertex itself.
        double area = 0.0;
        for (size_t k = 0; k < poly.size(); ++k)
            area += spherical_triangle_area(ml.vertices[v], poly[k], poly[(k + 1) % poly.size()]);
        areas[v] = area;
    }
    return areas;
}

void export_mesh(const SubdivisionMesh& mesh, const std::string& dir, const std::string& prefix) {
    std::filesystem::create_directories(dir);
    for (int j = 0; j <= mesh.max_level(); ++j) {
        const std::string path = dir + "/" + prefix + "level" + std::to_string(j) + ".txt";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("export_mesh: cannot write " + path);
        char buf[128];
        for (const auto& v : mesh.levels[j].vertices) {
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
            out << buf;
        }
        for (const auto& t : mesh.levels[j].triangles)
            out << "f " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }
}

SubdivisionMesh load_mesh(const std::string& dir, const std::string& prefix) {
    int levels = -1;
    while (std::filesystem::exists(dir + "/" + prefix + "level" + std::to_string(levels + 1) +
                                   ".txt"))
        ++levels;
    if (levels < 0) throw std::invalid_argument("load_mesh: no mesh files under " + dir);
    SubdivisionMesh mesh = build_mesh(levels);
    for (int j = 0; j <= levels; ++j) {
        const std::string path = dir + "/" + prefix + "level" + std::to_string(j) + ".txt";
        std::ifstream in(path);
        std::string line;
        size_t vi = 0, fi = 0;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            std::string tag;
            ss >> tag;
            if (tag == "v") {
                double x, y, z;
                ss >> x >> y >> z;
                if (vi >= mesh.levels[j].vertices.size() ||
                    (mesh.levels[j].vertices[vi] - Eigen::Vector3d(x, y, z)).norm() > 1e-12)
                    throw std::invalid_argument("load_mesh: vertex mismatch in " + path);
                ++vi;
            } else if (tag == "f") {
                int a, b, c;
                ss >> a >> b >> c;
                if (fi >= mesh.levels[j].triangles.size() ||
                    mesh.levels[j].triangles[fi] != std::array<int, 3>{a, b, c})
                    throw std::invalid_argument("load_mesh: face mismatch in " + path);
                ++fi;
            }
        }
        if (vi != mesh.levels[j].vertices.size() || fi != mesh.levels[j].triangles.size())
            throw std::invalid_argument("load_mesh: truncated file " + path);
    }
    return mesh;
}

}  // namespace sphwave
