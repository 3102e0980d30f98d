#include "boed/fem.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace boed {

namespace {

constexpr double kGauss = 0.5773502691896257;  // 1/sqrt(3)

struct Quad2dTables {
    // 2x2 Gauss on the reference square, bilinear shape values.
    double N[4][4];     // [qp][shape]
    double dN[4][4][2]; // [qp][shape][axis], reference derivatives
    Quad2dTables() {
        const double xi_a[4] = {-1, 1, -1, 1};
        const double eta_a[4] = {-1, -1, 1, 1};
        const double g[2] = {-kGauss, kGauss};
        int q = 0;
        for (int qy = 0; qy < 2; ++qy)
            for (int qx = 0; qx < 2; ++qx, ++q)
                for (int a = 0; a < 4; ++a) {
                    N[q][a] = 0.25 * (1 + g[qx] * xi_a[a]) * (1 + g[qy] * eta_a[a]);
                    dN[q][a][0] = 0.25 * xi_a[a] * (1 + g[qy] * eta_a[a]);
                    dN[q][a][1] = 0.25 * eta_a[a] * (1 + g[qx] * xi_a[a]);
                }
    }
};

struct Hex3dTables {
    double N[8][8];
    double dN[8][8][3];
    Hex3dTables() {
        double xi_a[8], eta_a[8], zeta_a[8];
        int c = 0;
        for (int dz = 0; dz <= 1; ++dz)
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx, ++c) {
                    xi_a[c] = dx ? 1 : -1;
                    eta_a[c] = dy ? 1 : -1;
                    zeta_a[c] = dz ? 1 : -1;
                }
        const double g[2] = {-kGauss, kGauss};
        int q = 0;
        for (int qz = 0; qz < 2; ++qz)
            for (int qy = 0; qy < 2; ++qy)
                for (int qx = 0; qx < 2; ++qx, ++q)
                    for (int a = 0; a < 8; ++a) {
                        const double fx = 1 + g[qx] * xi_a[a];
                        const double fy = 1 + g[qy] * eta_a[a];
                        const double fz = 1 + g[qz] * zeta_a[a];
                        N[q][a] = 0.125 * fx * fy * fz;
                        dN[q][a][0] = 0.125 * xi_a[a] * fy * fz;
                        dN[q][a][1] = 0.125 * eta_a[a] * fx * fz;
                        dN[q][a][2] = 0.125 * zeta_a[a] * fx * fy;
                    }
    }
};

const Quad2dTables& quad_tables() {
    static const Quad2dTables t;
    return t;
}

const Hex3dTables& hex_tables() {
    static const Hex3dTables t;
    return t;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

void quad_grid_mass_triplets(int nx, int ny, double Lx, double Ly, const QuadWeightFn& weight,
                             const std::function<int(int)>& remap, Triplets& out) {
    const auto& T = quad_tables();
    const double hx = Lx / nx, hy = Ly / ny;
    const double jac = hx * hy / 4.0;
    for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex) {
            std::array<int, 4> nodes = {ex + (nx + 1) * ey, ex + 1 + (nx + 1) * ey,
                                        ex + (nx + 1) * (ey + 1), ex + 1 + (nx + 1) * (ey + 1)};
            double Ke[4][4] = {};
            for (int q = 0; q < 4; ++q) {
                const double w = weight ? weight(nodes, T.N[q]) : 1.0;
                const double f = jac * w;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) Ke[a][b] += f * T.N[q][a] * T.N[q][b];
            }
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    const int ra = remap ? remap(nodes[a]) : nodes[a];
                    const int rb = remap ? remap(nodes[b]) : nodes[b];
                    if (ra >= 0 && rb >= 0) out.emplace_back(ra, rb, Ke[a][b]);
                }
        }
}

void volume_stiffness_triplets(const Mesh& mesh, const Eigen::Vector3d& Theta_diag,
                               const Vec* nodal_coeff, bool exp_coeff, Triplets& out) {
    const auto& T = hex_tables();
    const double sx = 2.0 / mesh.hx(), sy = 2.0 / mesh.hy(), sz = 2.0 / mesh.hz();
    const double jac = mesh.hx() * mesh.hy() * mesh.hz() / 8.0;
    for (int ez = 0; ez < mesh.nz; ++ez)
        for (int ey = 0; ey < mesh.ny; ++ey)
            for (int ex = 0; ex < mesh.nx; ++ex) {
                const auto nodes = mesh.element_nodes(ex, ey, ez);
                double Ke[8][8] = {};
                for (int q = 0; q < 8; ++q) {
                    double coeff = 1.0;
                    if (nodal_coeff) {
                        double c = 0.0;
                        for (int a = 0; a < 8; ++a) c += T.N[q][a] * (*nodal_coeff)[nodes[a]];
                        coeff = exp_coeff ? std::exp(c) : c;
                    }
                    const double wx = jac * coeff * Theta_diag[0] * sx * sx;
                    const double wy = jac * coeff * Theta_diag[1] * sy * sy;
                    const double wz = jac * coeff * Theta_diag[2] * sz * sz;
                    for (int a = 0; a < 8; ++a)
                        for (int b = 0; b < 8; ++b)
                            Ke[a][b] += wx * T.dN[q][a][0] * T.dN[q][b][0] +
                                        wy * T.dN[q][a][1] * T.dN[q][b][1] +
                                        wz * T.dN[q][a][2] * T.dN[q][b][2];
                }
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b) out.emplace_back(nodes[a], nodes[b], Ke[a][b]);
            }
}

SpMat from_triplets(int n, const Triplets& t) {
    SpMat A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

}  // namespace

void require_support(const Field& f, Support s, const std::string& where) {
    if (f.support != s) throw std::invalid_argument(where + ": field has wrong support");
}

SpMat quad_grid_mass(int nx, int ny, double Lx, double Ly, const QuadWeightFn& weight) {
    Triplets t;
    t.reserve(static_cast<size_t>(nx) * ny * 16);
    quad_grid_mass_triplets(nx, ny, Lx, Ly, weight, nullptr, t);
    return from_triplets((nx + 1) * (ny + 1), t);
}

SpMat quad_grid_stiffness(int nx, int ny, double Lx, double Ly, const Eigen::Matrix2d& Theta) {
    const auto& T = quad_tables();
    const double hx = Lx / nx, hy = Ly / ny;
    const double jac = hx * hy / 4.0;
    const double sx = 2.0 / hx, sy = 2.0 / hy;
    Triplets t;
    t.reserve(static_cast<size_t>(nx) * ny * 16);
    for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex) {
            const int n0 = ex + (nx + 1) * ey;
            const std::array<int, 4> nodes = {n0, n0 + 1, n0 + nx + 1, n0 + nx + 2};
            double Ke[4][4] = {};
            for (int q = 0; q < 4; ++q)
                for (int a = 0; a < 4; ++a) {
                    const double ga[2] = {T.dN[q][a][0] * sx, T.dN[q][a][1] * sy};
                    for (int b = 0; b < 4; ++b) {
                        const double gb[2] = {T.dN[q][b][0] * sx, T.dN[q][b][1] * sy};
                        double v = 0.0;
                        for (int r = 0; r < 2; ++r)
                            for (int c = 0; c < 2; ++c) v += ga[r] * Theta(r, c) * gb[c];
                        Ke[a][b] += jac * v;
                    }
                }
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) t.emplace_back(nodes[a], nodes[b], Ke[a][b]);
        }
    return from_triplets((nx + 1) * (ny + 1), t);
}

SpMat quad_grid_perimeter_mass(int nx, int ny, double Lx, double Ly) {
    const double hx = Lx / nx, hy = Ly / ny;
    Triplets t;
    auto edge = [&](int a, int b, double h) {
        t.emplace_back(a, a, h / 3.0);
        t.emplace_back(b, b, h / 3.0);
        t.emplace_back(a, b, h / 6.0);
        t.emplace_back(b, a, h / 6.0);
    };
    for (int i = 0; i < nx; ++i) {
        edge(i, i + 1, hx);
        edge(i + (nx + 1) * ny, i + 1 + (nx + 1) * ny, hx);
    }
    for (int j = 0; j < ny; ++j) {
        edge((nx + 1) * j, (nx + 1) * (j + 1), hy);
        edge(nx + (nx + 1) * j, nx + (nx + 1) * (j + 1), hy);
    }
    return from_triplets((nx + 1) * (ny + 1), t);
}

SpMat volume_stiffness(const Mesh& mesh, const Eigen::Vector3d& Theta_diag,
                       const Vec* nodal_coeff, bool exp_coeff) {
    Triplets t;
    t.reserve(static_cast<size_t>(mesh.n_elements()) * 64);
    volume_stiffness_triplets(mesh, Theta_diag, nodal_coeff, exp_coeff, t);
    return from_triplets(mesh.n_nodes(), t);
}

SpMat volume_mass(const Mesh& mesh) {
    const auto& T = hex_tables();
    const double jac = mesh.hx() * mesh.hy() * mesh.hz() / 8.0;
    Triplets t;
    t.reserve(static_cast<size_t>(mesh.n_elements()) * 64);
    // Element mass matrix is identical across the uniform grid.
    double Me[8][8] = {};
    for (int q = 0; q < 8; ++q)
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) Me[a][b] += jac * T.N[q][a] * T.N[q][b];
    for (int ez = 0; ez < mesh.nz; ++ez)
        for (int ey = 0; ey < mesh.ny; ++ey)
            for (int ex = 0; ex < mesh.nx; ++ex) {
                const auto nodes = mesh.element_nodes(ex, ey, ez);
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b) t.emplace_back(nodes[a], nodes[b], Me[a][b]);
            }
    return from_triplets(mesh.n_nodes(), t);
}

SpMat boundary_mass_all(const Mesh& mesh) {
    Triplets t;
    // Bottom and top faces.
    for (int face = 0; face < 2; ++face) {
        const int k = face == 0 ? 0 : mesh.nz;
        auto remap = [&](int b2d) {
            const int j = b2d / (mesh.nx + 1), i = b2d % (mesh.nx + 1);
            return mesh.node_id(i, j, k);
        };
        quad_grid_mass_triplets(mesh.nx, mesh.ny, mesh.Lx, mesh.Ly, nullptr, remap, t);
    }
    // x = const side faces (grid over y, z).
    for (int face = 0; face < 2; ++face) {
        const int i = face == 0 ? 0 : mesh.nx;
        auto remap = [&](int b2d) {
            const int k = b2d / (mesh.ny + 1), j = b2d % (mesh.ny + 1);
            return mesh.node_id(i, j, k);
        };
        quad_grid_mass_triplets(mesh.ny, mesh.nz, mesh.Ly, mesh.Lz, nullptr, remap, t);
    }
    // y = const side faces (grid over x, z).
    for (int face = 0; face < 2; ++face) {
        const int j = face == 0 ? 0 : mesh.ny;
        auto remap = [&](int b2d) {
            const int k = b2d / (mesh.nx + 1), i = b2d % (mesh.nx + 1);
            return mesh.node_id(i, j, k);
        };
        quad_grid_mass_triplets(mesh.nx, mesh.nz, mesh.Lx, mesh.Lz, nullptr, remap, t);
    }
    return from_triplets(mesh.n_nodes(), t);
}

void eliminate_dirichlet(SpMat& A, const std::vector<char>& mask) {
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            if (mask[it.row()] || mask[it.col()])
                it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
        }
}

PdeAssembler::PdeAssembler(const Mesh& mesh, const Vec& xi_volume) : mesh_(&mesh) {
    if (xi_volume.size() != mesh.n_nodes())
        throw std::invalid_argument("PdeAssembler: xi has wrong dimension");
    Triplets raw;
    raw.reserve(static_cast<size_t>(mesh.n_elements()) * 64);
    volume_stiffness_triplets(mesh, Eigen::Vector3d::Ones(), &xi_volume, true, raw);
    volume_triplets_.reserve(raw.size() + mesh.n_nodes());
    for (const auto& tr : raw) {
        if (!mesh.dirichlet_mask[tr.row()] && !mesh.dirichlet_mask[tr.col()])
            volume_triplets_.push_back(tr);
    }
    for (int n = 0; n < mesh.n_nodes(); ++n)
        if (mesh.dirichlet_mask[n]) volume_triplets_.emplace_back(n, n, 1.0);
}

void PdeAssembler::build(const Vec& m_bottom, SparseSymOp& op) const {
    const Mesh& mesh = *mesh_;
    if (m_bottom.size() != mesh.n_bottom())
        throw std::invalid_argument("PdeAssembler: m has wrong dimension");
    Triplets t = volume_triplets_;
    auto weight = [&](const std::array<int, 4>& nodes, const double N[4]) {
        double m = 0.0;
        for (int a = 0; a < 4; ++a) m += N[a] * m_bottom[nodes[a]];
        return std::exp(m);
    };
    auto remap = [&](int b2d) {
        const int vol = mesh.bottom_to_volume(b2d);
        return mesh.dirichlet_mask[vol] ? -1 : vol;
    };
    quad_grid_mass_triplets(mesh.nx, mesh.ny, mesh.Lx, mesh.Ly, weight, remap, t);
    SpMat A(mesh.n_nodes(), mesh.n_nodes());
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    op.update_values(A);
}

SparseSymOp PdeAssembler::make_operator(const Vec& m_bottom, const std::string& tag) const {
    SparseSymOp op(SpMat(mesh_->n_nodes(), mesh_->n_nodes()), tag);
    build(m_bottom, op);
    return op;
}

AssembledSystem assemble(const Mesh& mesh, const Field& xi, const Field& m) {
    require_support(xi, Support::Volume, "assemble(xi)");
    require_support(m, Support::Bottom, "assemble(m)");
    PdeAssembler assembler(mesh, xi.v);
    AssembledSystem sys;
    sys.op = assembler.make_operator(m.v, "pde");
    sys.mesh = &mesh;
    return sys;
}

Vec neumann_load(const Mesh& mesh, const std::function<double(double, double)>& h) {
    const auto& T = quad_tables();
    const double hx = mesh.hx(), hy = mesh.hy();
    const double jac = hx * hy / 4.0;
    const double g[2] = {-kGauss, kGauss};
    Vec load = Vec::Zero(mesh.n_nodes());
    for (int ey = 0; ey < mesh.ny; ++ey)
        for (int ex = 0; ex < mesh.nx; ++ex) {
            const int nodes[4] = {mesh.top_to_volume(ex, ey), mesh.top_to_volume(ex + 1, ey),
                                  mesh.top_to_volume(ex, ey + 1),
                                  mesh.top_to_volume(ex + 1, ey + 1)};
            int q = 0;
            for (int qy = 0; qy < 2; ++qy)
                for (int qx = 0; qx < 2; ++qx, ++q) {
                    const double x = (ex + 0.5 * (1 + g[qx])) * hx;
                    const double y = (ey + 0.5 * (1 + g[qy])) * hy;
                    const double hv = jac * h(x, y);
                    for (int a = 0; a < 4; ++a) load[nodes[a]] += hv * T.N[q][a];
                }
        }
    for (int n = 0; n < mesh.n_nodes(); ++n)
        if (mesh.dirichlet_mask[n]) load[n] = 0.0;
    return load;
}

double default_source(double x, double y) {
    const double r = std::sqrt((x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0));
    return 1.0 + std::sin(4.0 * M_PI * r);
}

Field solve_state(const AssembledSystem& sys, const Vec& load) {
    Vec rhs = load;
    for (int n = 0; n < sys.mesh->n_nodes(); ++n)
        if (sys.mesh->dirichlet_mask[n]) rhs[n] = 0.0;
    return Field(Support::Volume, sys.op.solve_direct(rhs));
}

SpMat observation_matrix(const Mesh& mesh, const SensorGrid& sensors) {
    Triplets t;
    for (int s = 0; s < sensors.size(); ++s) {
        const double x = sensors.points(s, 0), y = sensors.points(s, 1);
        if (x < 0.0 || x > mesh.Lx || y < 0.0 || y > mesh.Ly)
            throw std::invalid_argument("observation_matrix: sensor outside the top face");
        int ex = std::min(static_cast<int>(x / mesh.hx()), mesh.nx - 1);
        int ey = std::min(static_cast<int>(y / mesh.hy()), mesh.ny - 1);
        const double fx = x / mesh.hx() - ex;
        const double fy = y / mesh.hy() - ey;
        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const int nodes[4] = {mesh.top_to_volume(ex, ey), mesh.top_to_volume(ex + 1, ey),
                              mesh.top_to_volume(ex, ey + 1), mesh.top_to_volume(ex + 1, ey + 1)};
        for (int a = 0; a < 4; ++a)
            if (w[a] != 0.0) t.emplace_back(s, nodes[a], w[a]);
    }
    SpMat B(sensors.size(), mesh.n_nodes());
    B.setFromTriplets(t.begin(), t.end());
    B.makeCompressed();
    return B;
}

Vec observe(const Mesh& mesh, const Field& u, const SensorGrid& sensors) {
    require_support(u, Support::Volume, "observe");
    return observation_matrix(mesh, sensors) * u.v;
}

Field adjoint_of_observe(const Mesh& mesh, const Vec& r, const SensorGrid& sensors) {
    return Field(Support::Volume, observation_matrix(mesh, sensors).transpose() * r);
}

SpMat robin_coupling(const Mesh& mesh, const Vec& m_bottom, const Vec& u_volume) {
    auto weight = [&](const std::array<int, 4>& nodes, const double N[4]) {
        double m = 0.0, u = 0.0;
        for (int a = 0; a < 4; ++a) {
            m += N[a] * m_bottom[nodes[a]];
            u += N[a] * u_volume[mesh.bottom_to_volume(nodes[a])];
        }
        return std::exp(m) * u;
    };
    return quad_grid_mass(mesh.nx, mesh.ny, mesh.Lx, mesh.Ly, weight);
}

Vec restrict_bottom(const Mesh& mesh, const Vec& vol) {
    Vec out(mesh.n_bottom());
    for (int b = 0; b < mesh.n_bottom(); ++b) out[b] = vol[mesh.bottom_to_volume(b)];
    return out;
}

Vec scatter_bottom(const Mesh& mesh, const Vec& bottom) {
    Vec out = Vec::Zero(mesh.n_nodes());
    for (int b = 0; b < mesh.n_bottom(); ++b) out[mesh.bottom_to_volume(b)] = bottom[b];
    return out;
}

void export_field_csv(const std::string& path, const Mesh& mesh, const Field& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_field_csv: cannot open " + path);
    out << "x,y,z,value\n" << std::setprecision(17);
    if (f.support == Support::Volume) {
        for (int n = 0; n < mesh.n_nodes(); ++n) {
            const auto c = mesh.coord(n);
            out << c[0] << ',' << c[1] << ',' << c[2] << ',' << f.v[n] << '\n';
        }
    } else {
        for (int b = 0; b < mesh.n_bottom(); ++b) {
            const auto c = mesh.coord(mesh.bottom_to_volume(b));
            out << c[0] << ',' << c[1] << ',' << c[2] << ',' << f.v[b] << '\n';
        }
    }
}

void export_mesh_csv(const std::string& node_path, const std::string& elem_path, const Mesh& mesh) {
    std::ofstream nodes(node_path);
    if (!nodes) throw std::runtime_error("export_mesh_csv: cannot open " + node_path);
    nodes << "id,x,y,z\n" << std::setprecision(17);
    for (int n = 0; n < mesh.n_nodes(); ++n) {
        const auto c = mesh.coord(n);
        nodes << n << ',' << c[0] << ',' << c[1] << ',' << c[2] << '\n';
    }
    std::ofstream elems(elem_path);
    if (!elems) throw std::runtime_error("export_mesh_csv: cannot open " + elem_path);
    elems << "id,n0,n1,n2,n3,n4,n5,n6,n7\n";
    int id = 0;
    for (int ez = 0; ez < mesh.nz; ++ez)
        for (int ey = 0; ey < mesh.ny; ++ey)
            for (int ex = 0; ex < mesh.nx; ++ex, ++id) {
                const auto n = mesh.element_nodes(ex, ey, ez);
                elems << id;
                for (int a = 0; a < 8; ++a) elems << ',' << n[a];
                elems << '\n';
            }
}

}  // namespace boed
