#include "boed/mesh.hpp"

namespace boed {

Mesh build_box_mesh(int nx, int ny, int nz) {
    if (nx < 2 || ny < 2 || nz < 1)
        throw std::invalid_argument("build_box_mesh: require nx, ny >= 2 and nz >= 1");
    Mesh m;
    m.nx = nx;
    m.ny = ny;
    m.nz = nz;
    m.dirichlet_mask.assign(m.n_nodes(), 0);
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                if (m.on_dirichlet(i, j)) m.dirichlet_mask[m.node_id(i, j, k)] = 1;
    return m;
}

SensorGrid make_sensor_grid(int n, double margin) {
    if (n < 1) throw std::invalid_argument("make_sensor_grid: n must be positive");
    SensorGrid g;
    g.points.resize(n * n, 2);
    const double span = 1.0 - 2.0 * margin;
    int c = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double fx = (n == 1) ? 0.5 : static_cast<double>(i) / (n - 1);
            const double fy = (n == 1) ? 0.5 : static_cast<double>(j) / (n - 1);
            g.points(c, 0) = margin + span * fx;
            g.points(c, 1) = margin + span * fy;
            ++c;
        }
    return g;
}

}  // namespace boed
