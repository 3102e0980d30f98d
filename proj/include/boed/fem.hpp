#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <string>
#include <vector>

#include "boed/mesh.hpp"
#include "boed/sparse_ops.hpp"

namespace boed {

enum class Support { Volume, Bottom };

// Discretized scalar function over either the volume DOFs or the bottom
// boundary DOFs. Arithmetic is only defined between same-support fields.
struct Field {
    Support support = Support::Volume;
    Vec v;

    Field() = default;
    Field(Support s, Vec values) : support(s), v(std::move(values)) {}
    static Field constant(Support s, int n, double value) {
        return Field(s, Vec::Constant(n, value));
    }
    int size() const { return static_cast<int>(v.size()); }
};

void require_support(const Field& f, Support s, const std::string& where);

// ---------------------------------------------------------------------------
// Assembly kernels on the structured grid. The per-quadrature-point weight
// callbacks receive the element's corner DOFs and the shape values there.
// ---------------------------------------------------------------------------

using QuadWeightFn =
    std::function<double(const std::array<int, 4>& nodes, const double shape[4])>;

// 2D bilinear quads on an (nx x ny) grid over [0,Lx]x[0,Ly], 2x2 Gauss.
SpMat quad_grid_mass(int nx, int ny, double Lx, double Ly, const QuadWeightFn& weight = nullptr);
SpMat quad_grid_stiffness(int nx, int ny, double Lx, double Ly, const Eigen::Matrix2d& Theta);
// 1D mass along the perimeter edges of the 2D grid (Robin term of prior ops).
SpMat quad_grid_perimeter_mass(int nx, int ny, double Lx, double Ly);

// 3D trilinear hexes, 2x2x2 Gauss. The scalar coefficient is the nodal field
// interpolated at the quadrature points, optionally exponentiated.
SpMat volume_stiffness(const Mesh& mesh, const Eigen::Vector3d& Theta_diag,
                       const Vec* nodal_coeff, bool exp_coeff);
SpMat volume_mass(const Mesh& mesh);
// Mass on the whole boundary of the box (all six faces).
SpMat boundary_mass_all(const Mesh& mesh);

// Symmetric elimination of Dirichlet rows/columns (zero rows/cols, unit diag).
void eliminate_dirichlet(SpMat& A, const std::vector<char>& mask);

// ---------------------------------------------------------------------------
// The elliptic state operator and observation machinery.
// ---------------------------------------------------------------------------

struct AssembledSystem {
    SparseSymOp op;             // volume stiffness e^xi + bottom Robin e^m, Dirichlet-eliminated
    const Mesh* mesh = nullptr;
};

AssembledSystem assemble(const Mesh& mesh, const Field& xi, const Field& m);

// Neumann load from a source evaluated at top-face quadrature points.
Vec neumann_load(const Mesh& mesh, const std::function<double(double, double)>& h);
// The boundary source used throughout the experiments.
double default_source(double x, double y);

Field solve_state(const AssembledSystem& sys, const Vec& load);

// Pointwise observation at sensor locations (bilinear interpolation on the
// top face). B is n_s x n_volume.
SpMat observation_matrix(const Mesh& mesh, const SensorGrid& sensors);
Vec observe(const Mesh& mesh, const Field& u, const SensorGrid& sensors);
Field adjoint_of_observe(const Mesh& mesh, const Vec& r, const SensorGrid& sensors);

// Coupling matrix of the Robin linearization: W(m, u)_{jk} = the bottom-face
// integral of phi_j phi_k e^m u; maps bottom perturbations to bottom duals.
SpMat robin_coupling(const Mesh& mesh, const Vec& m_bottom, const Vec& u_volume);

// Restriction of a volume vector to bottom DOFs and the scatter transpose.
Vec restrict_bottom(const Mesh& mesh, const Vec& vol);
Vec scatter_bottom(const Mesh& mesh, const Vec& bottom);

// Incremental re-assembly helper: caches the xi-dependent volume triplets so
// repeated builds for varying m only redo the bottom Robin block.
class PdeAssembler {
public:
    PdeAssembler(const Mesh& mesh, const Vec& xi_volume);

    // Build the Dirichlet-eliminated operator for the given Robin field.
    // The sparsity pattern is identical across calls.
    void build(const Vec& m_bottom, SparseSymOp& op) const;
    SparseSymOp make_operator(const Vec& m_bottom, const std::string& tag) const;

    const Mesh& mesh() const { return *mesh_; }

private:
    const Mesh* mesh_;
    std::vector<Eigen::Triplet<double>> volume_triplets_;  // eliminated, diag included
};

// CSV export: fields as (x, y, z, value); mesh as node/element tables.
void export_field_csv(const std::string& path, const Mesh& mesh, const Field& f);
void export_mesh_csv(const std::string& node_path, const std::string& elem_path, const Mesh& mesh);

}  // namespace boed
