#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sphwave {

struct MeshLevel {
    std::vector<Eigen::Vector3d> vertices;          // unit vectors
    std::vector<std::array<int, 3>> triangles;      // outward-wound vertex triples
    /// For each odd vertex (index >= previous level's vertex count) the pair
    /// of coarser-level endpoints whose edge it bisects. Empty at level 0.
    std::vector<std::array<int, 2>> parent_edge;
};

/// Octahedron-seeded recursive spherical triangulation. Level j vertices
/// appear with identical indices as the first V_j vertices of level j+1.
struct SubdivisionMesh {
    std::vector<MeshLevel> levels;

    int max_level() const { return static_cast<int>(levels.size()) - 1; }
    int vertex_count(int level) const { return static_cast<int>(levels[level].vertices.size()); }
};

SubdivisionMesh build_mesh(int levels);

/// Per odd vertex of `level`: the three neighbour rings of coarse
/// (level-1) vertices. v are the parent-edge endpoints, f the opposite
/// vertices of the two triangles sharing the parent edge, e the four wing
/// vertices (duplicates possible on very coarse meshes). Each ring is
/// ordered by haversine distance to the odd vertex, ties by index.
struct NeighborSets {
    int level = 0;
    std::vector<std::array<int, 2>> v;
    std::vector<std::array<int, 2>> f;
    std::vector<std::array<int, 4>> e;

    int odd_count() const { return static_cast<int>(v.size()); }
};

NeighborSets neighbor_sets(const SubdivisionMesh& mesh, int level);

/// Orbits of mesh vertices under the 48-element octahedral symmetry group,
/// for the level pair (level-1, level). Each orbit lists coarse vertices,
/// representative first; member_fine_perm[o][i] is the permutation of
/// level vertices carried by a group element mapping the representative to
/// member i (fine index -> image index). rep_fine_class[o] classifies the
/// level vertices relative to the representative: 0 self, 1 v, 2 f, 3 e,
/// 4 rest.
struct SymmetryOrbits {
    int level = 0;
    std::vector<std::vector<int>> orbits;
    std::vector<std::vector<std::vector<int>>> member_fine_perm;
    std::vector<std::vector<int>> rep_fine_class;

    /// Orbits of the fine (level) vertices themselves, used to enumerate
    /// distinct column types.
    std::vector<std::vector<int>> fine_orbits;
};

SymmetryOrbits symmetry_orbits(const SubdivisionMesh& mesh, int level);

/// Permutations of level-j vertex indices induced by each of the 48
/// octahedral group elements.
std::vector<std::vector<int>> octahedral_vertex_permutations(const SubdivisionMesh& mesh,
                                                             int level);

/// Spherical Voronoi cell area per vertex; positive, sums to 4*pi. The
/// exact spherical-polygon computation is the default; barycentric
/// (one third of each incident triangle) is available as a fallback.
enum class AreaRule { voronoi, barycentric };
Eigen::VectorXd vertex_areas(const SubdivisionMesh& mesh, int level,
                             AreaRule rule = AreaRule::voronoi);

/// Writes one `v x y z` / `f i j k` text file per level, named
/// <prefix>level<j>.txt under `dir`.
void export_mesh(const SubdivisionMesh& mesh, const std::string& dir,
                 const std::string& prefix = "mesh_");

/// Counts levels and checks the exported files match a freshly built mesh;
/// returns that mesh. Throws std::runtime_error on mismatch.
SubdivisionMesh load_mesh(const std::string& dir, const std::string& prefix = "mesh_");

}  // namespace sphwave
