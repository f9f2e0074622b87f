#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace privsig::lp {

struct MalformedInstance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// One constraint row, coefficients stored as (variable, value) pairs.
struct Row {
    std::vector<std::pair<int, double>> coeffs;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// Minimization instance: c'x subject to rows and per-variable bounds
/// (default 0 <= x < inf).
struct LinearProgram {
    Eigen::VectorXd objective;
    std::vector<Row> rows;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static LinearProgram minimize(int num_vars) {
        LinearProgram lp;
        lp.objective = Eigen::VectorXd::Zero(num_vars);
        lp.lower = Eigen::VectorXd::Zero(num_vars);
        lp.upper = Eigen::VectorXd::Constant(num_vars, kInfinity);
        return lp;
    }

    int num_vars() const { return static_cast<int>(objective.size()); }

    Row& add_row(Sense sense, double rhs) {
        rows.push_back(Row{{}, sense, rhs});
        return rows.back();
    }

    void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* status_name(SolveStatus s);

struct LpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    long iterations = 0;
};

struct SolveOptions {
    double feas_tol = 1e-9;
    long max_iterations = 200000;
};

/// Two-phase primal simplex on a dense tableau. Entering variable by most
/// negative reduced cost with lowest-index tie-breaking; after a streak of
/// degenerate pivots the rule falls back to Bland's (lowest index), which
/// guarantees termination. Leaving variable by minimum ratio with ties
/// resolved toward the smallest basis index.
LpSolution solve(const LinearProgram& lp, const SolveOptions& options = {});

/// Max violation of rows and bounds at x; Optimal solutions keep this
/// within feas_tol.
double max_residual(const LinearProgram& lp, const Eigen::VectorXd& x);

/// Plain-text instance dump for external cross-checking. One row per line:
///   row <sense> <rhs> idx:coeff idx:coeff ...
/// preceded by objective and bound lines in the same sparse style.
void dump(const LinearProgram& lp, std::ostream& os);

} // namespace privsig::lp
