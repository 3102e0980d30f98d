#pragma once

#include <Eigen/Core>
#include <array>
#include <stdexcept>
#include <vector>

namespace boed {

// Structured hexahedral discretization of the slab [0,Lx]x[0,Ly]x[0,Lz].
// Boundary tags: the four side faces are Dirichlet, the top face carries the
// Neumann source, the bottom face carries the Robin coefficient field.
// Node ordering is lexicographic, x fastest.
struct Mesh {
    int nx = 0, ny = 0, nz = 0;
    double Lx = 1.0, Ly = 1.0, Lz = 0.01;

    int n_nodes() const { return (nx + 1) * (ny + 1) * (nz + 1); }
    int n_bottom() const { return (nx + 1) * (ny + 1); }
    int n_top() const { return (nx + 1) * (ny + 1); }
    int n_elements() const { return nx * ny * nz; }

    double hx() const { return Lx / nx; }
    double hy() const { return Ly / ny; }
    double hz() const { return Lz / nz; }

    int node_id(int i, int j, int k) const { return i + (nx + 1) * (j + (ny + 1) * k); }
    int bottom_id(int i, int j) const { return i + (nx + 1) * j; }

    // Bottom-boundary DOF index -> volume DOF index (bottom face is k = 0).
    int bottom_to_volume(int b) const { return b; }
    // Top face node (i, j) -> volume DOF index.
    int top_to_volume(int i, int j) const { return node_id(i, j, nz); }

    Eigen::Vector3d coord(int id) const {
        const int per_layer = (nx + 1) * (ny + 1);
        const int k = id / per_layer;
        const int r = id % per_layer;
        const int j = r / (nx + 1);
        const int i = r % (nx + 1);
        return {i * hx(), j * hy(), k * hz()};
    }

    bool on_dirichlet(int i, int j) const { return i == 0 || i == nx || j == 0 || j == ny; }

    std::vector<char> dirichlet_mask;  // per volume node, 1 on the side faces

    // Corner nodes of volume element (ex, ey, ez), reference ordering.
    std::array<int, 8> element_nodes(int ex, int ey, int ez) const {
        std::array<int, 8> n;
        int c = 0;
        for (int dz = 0; dz <= 1; ++dz)
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx)
                    n[c++] = node_id(ex + dx, ey + dy, ez + dz);
        return n;
    }
};

Mesh build_box_mesh(int nx, int ny, int nz);

// Candidate sensor locations on the top face.
struct SensorGrid {
    Eigen::MatrixX2d points;  // (x, y); all sensors live on z = Lz
    int size() const { return static_cast<int>(points.rows()); }
};

// Regular n-by-n interior grid with the given margin from the sides.
SensorGrid make_sensor_grid(int n = 10, double margin = 0.05);

}  // namespace boed
