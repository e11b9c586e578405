#include "bblab/pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace bblab {

Grid::Grid(const Domain& domain, std::vector<int> cells_per_axis) : domain_(domain) {
    if (domain.shape() == Shape::ball)
        throw std::invalid_argument(
            "finite differences cover intervals and boxes; use the Monte Carlo path for balls");
    dim_ = domain.dimension();
    if (dim_ > 2)
        throw std::invalid_argument(
            "finite differences cover 1-d and 2-d grids; use the Monte Carlo path otherwise");
    if (static_cast<int>(cells_per_axis.size()) != dim_)
        throw std::invalid_argument("cells_per_axis size must match the dimension");
    n_ = std::move(cells_per_axis);
    n_total_ = 1;
    for (int a = 0; a < dim_; ++a) {
        const std::size_t ua = static_cast<std::size_t>(a);
        if (n_[ua] < 2) throw std::invalid_argument("grid needs at least 2 cells per axis");
        h_.push_back((domain_.hi()[ua] - domain_.lo()[ua]) / n_[ua]);
        n_total_ *= static_cast<std::size_t>(n_[ua] + 1);
    }
}

double Grid::h_max() const {
    double m = 0.0;
    for (double v : h_) m = std::max(m, v);
    return m;
}

std::size_t Grid::index(int i, int j) const {
    if (dim_ == 1) return static_cast<std::size_t>(i);
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_[0] + 1) +
           static_cast<std::size_t>(i);
}

std::array<int, 2> Grid::coords(std::size_t k) const {
    if (dim_ == 1) return {static_cast<int>(k), 0};
    const int nx = n_[0] + 1;
    return {static_cast<int>(k % static_cast<std::size_t>(nx)),
            static_cast<int>(k / static_cast<std::size_t>(nx))};
}

Point Grid::node(std::size_t k) const {
    const auto c = coords(k);
    Point p(static_cast<std::size_t>(dim_));
    p[0] = domain_.lo()[0] + h_[0] * c[0];
    if (dim_ == 2) p[1] = domain_.lo()[1] + h_[1] * c[1];
    // Snap boundary nodes exactly onto the faces.
    for (int a = 0; a < dim_; ++a) {
        const std::size_t ua = static_cast<std::size_t>(a);
        if (c[ua] == 0) p[ua] = domain_.lo()[ua];
        if (c[ua] == n_[ua]) p[ua] = domain_.hi()[ua];
    }
    return p;
}

bool Grid::is_boundary(std::size_t k) const {
    const auto c = coords(k);
    for (int a = 0; a < dim_; ++a)
        if (c[static_cast<std::size_t>(a)] == 0 || c[static_cast<std::size_t>(a)] == n_[static_cast<std::size_t>(a)])
            return true;
    return false;
}

double Grid::rho(std::size_t k) const { return domain_.distance_to_boundary(node(k)); }

bool DiscreteOperator::is_m_matrix(double tol) const {
    for (std::size_t k = 0; k < diag.size(); ++k) {
        if (diag[k] == 0.0) continue;  // boundary row
        if (diag[k] <= 0.0) return false;
        double off = 0.0;
        for (double c : nbr[k]) {
            if (c > tol) return false;
            off += std::abs(c);
        }
        if (diag[k] + tol < off) return false;
    }
    return true;
}

DiscreteOperator assemble_operator(const EllipticProblem& problem) {
    const Grid& g = problem.grid;
    const int dim = g.dim();
    DiscreteOperator op;
    op.dim = dim;
    op.diag.assign(g.n_nodes(), 0.0);
    op.nbr.assign(g.n_nodes(), {0.0, 0.0, 0.0, 0.0});

    std::array<double, kMaxDim> b{}, sig{};
    for (std::size_t k = 0; k < g.n_nodes(); ++k) {
        if (g.is_boundary(k)) continue;
        const Point x = g.node(k);
        problem.field.drift(x, {b.data(), static_cast<std::size_t>(dim)});
        problem.field.sigma_diag(x, {sig.data(), static_cast<std::size_t>(dim)});
        double diag = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double h = g.h(a);
            const double aii = sig[a] * sig[a];
            // -(1/2) a_ii d²/dx² by central differences.
            const double c2 = 0.5 * aii / (h * h);
            double lo = -c2, hi = -c2;
            diag += 2.0 * c2;
            // -b_i d/dx upwinded on the sign of b_i.
            if (b[a] > 0.0) {
                lo += -b[a] / h;
                diag += b[a] / h;
            } else if (b[a] < 0.0) {
                hi += b[a] / h;
                diag += -b[a] / h;
            }
            op.nbr[k][static_cast<std::size_t>(2 * a)] = lo;
            op.nbr[k][static_cast<std::size_t>(2 * a + 1)] = hi;
        }
        op.diag[k] = diag;
    }
    return op;
}

namespace {

// Boundary values g ∧ n on the boundary nodes, 0 elsewhere.
std::vector<double> boundary_values(const Grid& g, const BoundaryData& bdata, double n) {
    std::vector<double> v(g.n_nodes(), 0.0);
    for (std::size_t k = 0; k < g.n_nodes(); ++k)
        if (g.is_boundary(k)) v[k] = std::min(bdata.value_at(g.domain(), g.node(k)), n);
    return v;
}

std::size_t neighbor_index(const Grid& g, std::size_t k, int axis, int side) {
    auto c = g.coords(k);
    c[static_cast<std::size_t>(axis)] += side == 0 ? -1 : 1;
    return g.index(c[0], c[1]);
}

// Residual of  A u + kappa u|u|^q - 0  on interior rows; boundary rows are 0.
void residual(const Grid& g, const DiscreteOperator& op, const GeneratorSpec& gen,
              const std::vector<double>& u, std::vector<double>& r, double* scale_out) {
    r.assign(u.size(), 0.0);
    double scale = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (op.diag[k] == 0.0) continue;
        double s = op.diag[k] * u[k];
        double mag = std::abs(s);
        for (int a = 0; a < op.dim; ++a)
            for (int side = 0; side < 2; ++side) {
                const double c = op.nbr[k][static_cast<std::size_t>(2 * a + side)];
                if (c == 0.0) continue;
                const double t = c * u[neighbor_index(g, k, a, side)];
                s += t;
                mag += std::abs(t);
            }
        const double react = gen.kappa * u[k] * std::pow(std::abs(u[k]), gen.q);
        r[k] = s + react;
        mag += std::abs(react);
        scale = std::max(scale, mag);
    }
    if (scale_out) *scale_out = scale;
}

double sup_norm_interior(const DiscreteOperator& op, const std::vector<double>& r) {
    double m = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k)
        if (op.diag[k] != 0.0) m = std::max(m, std::abs(r[k]));
    return m;
}

// Tridiagonal solve of J delta = r on the interior unknowns (1-d).
void solve_linear_1d(const Grid& g, const DiscreteOperator& op,
                     const std::vector<double>& jac_diag, const std::vector<double>& r,
                     std::vector<double>& delta) {
    const int n = g.cells(0);
    const int m = n - 1;  // interior unknowns
    std::vector<double> a(static_cast<std::size_t>(m)), d(static_cast<std::size_t>(m)),
        c(static_cast<std::size_t>(m)), rhs(static_cast<std::size_t>(m));
    for (int i = 1; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const std::size_t row = static_cast<std::size_t>(i - 1);
        a[row] = i > 1 ? op.nbr[k][0] : 0.0;
        c[row] = i < n - 1 ? op.nbr[k][1] : 0.0;
        d[row] = jac_diag[k];
        rhs[row] = r[k];
    }
    for (int i = 1; i < m; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double w = a[ui] / d[ui - 1];
        d[ui] -= w * c[ui - 1];
        rhs[ui] -= w * rhs[ui - 1];
    }
    delta.assign(g.n_nodes(), 0.0);
    std::vector<double> x(static_cast<std::size_t>(m));
    x[static_cast<std::size_t>(m - 1)] = rhs[static_cast<std::size_t>(m - 1)] / d[static_cast<std::size_t>(m - 1)];
    for (int i = m - 2; i >= 0; --i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        x[ui] = (rhs[ui] - c[ui] * x[ui + 1]) / d[ui];
    }
    for (int i = 1; i < n; ++i) delta[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i - 1)];
}

void solve_linear_2d(const Grid& g, const DiscreteOperator& op,
                     const std::vector<double>& jac_diag, const std::vector<double>& r,
                     std::vector<double>& delta) {
    // Map interior nodes to unknown ids.
    std::vector<int> id(g.n_nodes(), -1);
    int m = 0;
    for (std::size_t k = 0; k < g.n_nodes(); ++k)
        if (op.diag[k] != 0.0) id[k] = m++;
    Eigen::SparseMatrix<double> J(m, m);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 5);
    Eigen::VectorXd rhs(m);
    for (std::size_t k = 0; k < g.n_nodes(); ++k) {
        if (id[k] < 0) continue;
        trip.emplace_back(id[k], id[k], jac_diag[k]);
        rhs[id[k]] = r[k];
        for (int a = 0; a < 2; ++a)
            for (int side = 0; side < 2; ++side) {
                const double c = op.nbr[k][static_cast<std::size_t>(2 * a + side)];
                if (c == 0.0) continue;
                const std::size_t nb = neighbor_index(g, k, a, side);
                if (id[nb] >= 0) trip.emplace_back(id[k], id[nb], c);
            }
    }
    J.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
    Eigen::VectorXd x = lu.solve(rhs);
    delta.assign(g.n_nodes(), 0.0);
    for (std::size_t k = 0; k < g.n_nodes(); ++k)
        if (id[k] >= 0) delta[k] = x[id[k]];
}

}  // namespace

SolutionField solve_truncated(const EllipticProblem& problem,
                              const std::vector<double>* warm_start) {
    const Grid& g = problem.grid;
    const double n = problem.truncation_n;
    if (!(n < kInf)) throw std::invalid_argument("solve_truncated requires a finite truncation");
    if (problem.gen.kind != GeneratorSpec::Kind::power)
        throw std::invalid_argument("the finite-difference path supports power generators");

    const DiscreteOperator op = assemble_operator(problem);
    std::vector<double> u = boundary_values(g, problem.boundary, n);
    if (warm_start) {
        if (warm_start->size() != u.size())
            throw std::invalid_argument("warm start has wrong size");
        for (std::size_t k = 0; k < u.size(); ++k)
            if (!g.is_boundary(k)) u[k] = (*warm_start)[k];
    }

    const double q = problem.gen.q;
    const double kappa = problem.gen.kappa;
    std::vector<double> r, delta, jac_diag(g.n_nodes(), 0.0), u_try;

    auto solve_linear = [&](const std::vector<double>& res, std::vector<double>& out) {
        if (g.dim() == 1)
            solve_linear_1d(g, op, jac_diag, res, out);
        else
            solve_linear_2d(g, op, jac_diag, res, out);
    };

    // Picard warm-up: lag the reaction term (skipped on a warm start).
    if (!warm_start) {
        for (int sweep = 0; sweep < 3; ++sweep) {
            double scale = 0.0;
            residual(g, op, problem.gen, u, r, &scale);
            for (std::size_t k = 0; k < u.size(); ++k) jac_diag[k] = op.diag[k];
            solve_linear(r, delta);
            for (std::size_t k = 0; k < u.size(); ++k)
                if (!g.is_boundary(k)) u[k] = std::max(0.0, u[k] - delta[k]);
        }
    }

    SolutionField out;
    out.truncation_n = n;
    const int max_iter = 60;
    std::vector<double> history;
    double scale = 0.0;
    residual(g, op, problem.gen, u, r, &scale);
    double rn = sup_norm_interior(op, r);
    for (int it = 0; it < max_iter; ++it) {
        const double tol =
            1e-10 * (1.0 + n) + 1e3 * std::numeric_limits<double>::epsilon() * scale;
        history.push_back(rn);
        if (rn <= tol) {
            out.u = u;
            out.residual_norm = rn;
            out.residual_tol = tol;
            out.newton_iterations = it;
            out.clamp_active = false;
            for (std::size_t k = 0; k < u.size(); ++k)
                if (!g.is_boundary(k) && u[k] < 0.0) out.clamp_active = true;
            return out;
        }
        for (std::size_t k = 0; k < u.size(); ++k)
            jac_diag[k] = op.diag[k] +
                          kappa * (1.0 + q) * std::pow(std::abs(u[k]), q);
        solve_linear(r, delta);
        // Step halving on residual increase.
        double step = 1.0;
        double rn_try = kInf;
        for (int halving = 0; halving <= 30; ++halving) {
            u_try = u;
            for (std::size_t k = 0; k < u.size(); ++k)
                if (!g.is_boundary(k)) u_try[k] = std::max(0.0, u[k] - step * delta[k]);
            residual(g, op, problem.gen, u_try, r, &scale);
            rn_try = sup_norm_interior(op, r);
            if (rn_try < rn || halving == 30) break;
            step *= 0.5;
        }
        u = u_try;
        rn = rn_try;
    }
    throw NewtonError("Newton stagnation after " + std::to_string(max_iter) + " iterations",
                      history);
}

LadderResult ladder_minimal(const EllipticProblem& problem_template,
                            const std::vector<double>& levels, double interior_margin,
                            double tol) {
    if (levels.empty()) throw std::invalid_argument("ladder_minimal requires levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1]))
            throw std::invalid_argument("ladder levels must be strictly increasing");
    const Grid& g = problem_template.grid;
    const double delta = interior_margin > 0.0 ? interior_margin : 4.0 * g.h_max();

    LadderResult res;
    res.interior_margin = delta;
    res.tol = tol;

    std::vector<double> prev;
    for (double n : levels) {
        EllipticProblem p = problem_template;
        p.truncation_n = n;
        SolutionField f = solve_truncated(p, prev.empty() ? nullptr : &prev);
        double inc = 0.0;
        if (!prev.empty()) {
            for (std::size_t k = 0; k < f.u.size(); ++k) {
                if (prev[k] > f.u[k] + 1e-9)
                    throw std::runtime_error(
                        "ladder monotonicity violated at a node (solver bug): level " +
                        std::to_string(n));
                if (g.rho(k) >= delta) inc = std::max(inc, f.u[k] - prev[k]);
            }
        }
        res.levels.push_back(LadderLevel{n, inc, f.residual_norm, f.newton_iterations});
        prev = f.u;
        res.field = std::move(f);
    }
    if (res.levels.size() >= 2) res.converged = res.levels.back().increment_sup < tol;
    return res;
}

CheckReport comparison_check(const EllipticProblem& problem, const BoundaryData& g1,
                             const BoundaryData& g2) {
    const auto t0 = std::chrono::steady_clock::now();
    EllipticProblem p1 = problem;
    p1.boundary = g1;
    EllipticProblem p2 = problem;
    p2.boundary = g2;
    const SolutionField u1 = solve_truncated(p1);
    const SolutionField u2 = solve_truncated(p2);
    double worst = -kInf;
    for (std::size_t k = 0; k < u1.u.size(); ++k) worst = std::max(worst, u1.u[k] - u2.u[k]);
    CheckReport rep;
    rep.name = "comparison";
    rep.config = {{"truncation_n", problem.truncation_n},
                  {"q", problem.gen.q},
                  {"kappa", problem.gen.kappa}};
    rep.measure("max_u1_minus_u2", worst);
    rep.gate("comparison_le", worst, "<=", 1e-9);
    rep.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::vector<std::pair<double, double>> boundary_layer_profile(
    const Grid& grid, const SolutionField& field, double q, std::size_t boundary_node,
    const std::vector<int>& direction) {
    if (!grid.is_boundary(boundary_node))
        throw std::invalid_argument("profile must start at a boundary node");
    if (static_cast<int>(direction.size()) != grid.dim())
        throw std::invalid_argument("direction dimension mismatch");
    int axis = -1;
    for (int a = 0; a < grid.dim(); ++a) {
        if (direction[static_cast<std::size_t>(a)] == 0) continue;
        if (std::abs(direction[static_cast<std::size_t>(a)]) != 1 || axis >= 0)
            throw std::invalid_argument("direction must be a signed unit grid direction");
        axis = a;
    }
    if (axis < 0) throw std::invalid_argument("direction must be nonzero");

    // The inward normal line ends at the medial axis, where the distance
    // stops increasing.
    std::vector<std::pair<double, double>> profile;
    auto c = grid.coords(boundary_node);
    double prev_rho = 0.0;
    for (;;) {
        c[static_cast<std::size_t>(axis)] += direction[static_cast<std::size_t>(axis)];
        if (c[static_cast<std::size_t>(axis)] < 0 ||
            c[static_cast<std::size_t>(axis)] > grid.cells(axis))
            break;
        const std::size_t k = grid.index(c[0], c[1]);
        if (grid.is_boundary(k)) break;
        const double rho = grid.rho(k);
        if (rho <= prev_rho) break;
        prev_rho = rho;
        profile.emplace_back(rho, std::pow(rho, 2.0 / q) * field.u[k]);
    }
    return profile;
}

void write_field_csv(const Grid& grid, const SolutionField& field, std::ostream& os) {
    for (int a = 0; a < grid.dim(); ++a) os << "x_" << a << ',';
    os << "u\n";
    char buf[32];
    for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
        const Point p = grid.node(k);
        for (int a = 0; a < grid.dim(); ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", p[static_cast<std::size_t>(a)]);
            os << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", field.u[k]);
        os << buf << '\n';
    }
}

}  // namespace bblab
