#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bblab/closedform.hpp"
#include "bblab/coefficients.hpp"
#include "bblab/geometry.hpp"
#include "bblab/report.hpp"

namespace bblab {

/// Uniform tensor grid on an interval or a 2-d box; boundary nodes lie
/// exactly on ∂D.
class Grid {
public:
    Grid(const Domain& domain, std::vector<int> cells_per_axis);

    const Domain& domain() const { return domain_; }
    int dim() const { return dim_; }
    int cells(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
    double h(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
    double h_max() const;
    std::size_t n_nodes() const { return n_total_; }

    Point node(std::size_t k) const;
    bool is_boundary(std::size_t k) const;
    double rho(std::size_t k) const;

    std::size_t index(int i, int j = 0) const;
    std::array<int, 2> coords(std::size_t k) const;

private:
    Domain domain_;
    int dim_;
    std::vector<int> n_;
    std::vector<double> h_;
    std::size_t n_total_;
};

/// -Lu + kappa u^{1+q} = 0 with Dirichlet data g ∧ n. The finite-difference
/// path accepts diagonal diffusion only (the coefficient families are all
/// diagonal); kappa = 0 is the linear sanity mode.
struct EllipticProblem {
    Grid grid;
    CoefficientField field;
    GeneratorSpec gen;
    BoundaryData boundary;
    double truncation_n = kInf;
};

/// Centered second differences plus sign-upwinded first-order drift, an
/// M-matrix by construction.
struct DiscreteOperator {
    int dim = 1;
    std::vector<double> diag;                    // interior rows; 0 on boundary rows
    std::vector<std::array<double, 4>> nbr;      // [axis0 lo, axis0 hi, axis1 lo, axis1 hi]
    bool is_m_matrix(double tol = 1e-12) const;
};

DiscreteOperator assemble_operator(const EllipticProblem& problem);

struct SolutionField {
    std::vector<double> u;
    double residual_norm = 0.0;
    double residual_tol = 0.0;
    int newton_iterations = 0;
    double truncation_n = 0.0;
    bool clamp_active = false;  // must be false at convergence
};

class NewtonError : public std::runtime_error {
public:
    NewtonError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Damped Newton solve of the truncated problem (boundary value g ∧ n,
/// with blow-up nodes carrying n). Initial guess u ≡ 0 warmed by three
/// Picard sweeps unless `warm_start` is supplied.
SolutionField solve_truncated(const EllipticProblem& problem,
                              const std::vector<double>* warm_start = nullptr);

struct LadderLevel {
    double n = 0.0;
    double increment_sup = 0.0;  // over nodes with rho >= delta
    double residual = 0.0;
    int iterations = 0;
};

struct LadderResult {
    SolutionField field;  // last level
    std::vector<LadderLevel> levels;
    bool converged = false;
    double interior_margin = 0.0;
    double tol = 0.0;
};

/// Solves the increasing truncation levels, asserting nodal monotonicity
/// u_n <= u_{n+1} + 1e-9 (a violation is a solver bug and throws), and
/// declares convergence when the increment sup over {rho >= delta}
/// drops below tol. delta <= 0 selects the default 4 h.
LadderResult ladder_minimal(const EllipticProblem& problem_template,
                            const std::vector<double>& levels, double interior_margin,
                            double tol);

/// Solves the problem under g1 and g2 (g1 <= g2 nodewise expected) and
/// gates max(u1 - u2) <= 1e-9.
CheckReport comparison_check(const EllipticProblem& problem, const BoundaryData& g1,
                             const BoundaryData& g2);

/// (rho, rho^{2/q} u) along the inward grid line starting at a blow-up
/// boundary node. `direction` must be a signed unit grid direction.
std::vector<std::pair<double, double>> boundary_layer_profile(
    const Grid& grid, const SolutionField& field, double q, std::size_t boundary_node,
    const std::vector<int>& direction);

/// CSV columns: x_0[, x_1], u.
void write_field_csv(const Grid& grid, const SolutionField& field, std::ostream& os);

}  // namespace bblab
