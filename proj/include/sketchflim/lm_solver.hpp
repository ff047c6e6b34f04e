#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sketchflim/types.hpp"

namespace sketchflim {

/// One evaluation of a Gauss-Newton style problem. `residual` and the
/// Jacobian are arranged so that J^T r is the descent direction and J^T J
/// the curvature model: r = data - model and J = d model / d theta for least
/// squares, or Pearson-weighted versions of both for Poisson likelihoods.
struct LmEval {
    double objective = 0.0;
    Eigen::VectorXd residual;
};

struct LmProblem {
    std::vector<Interval> boxes;
    std::function<LmEval(const Eigen::VectorXd&)> evaluate;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const LmEval&)> jacobian;
};

struct LmOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-6;
    /// Converged once an accepted step changes the objective by less than
    /// this (absolute). Zero disables the test.
    double objective_tolerance = 0.0;
    double initial_damping = 1e-3;
};

struct LmResult {
    Eigen::VectorXd theta;
    LmEval eval;
    int iterations = 0;
    bool converged = false;
    /// Objective after the start point and after every accepted step.
    std::vector<double> trace;
};

/// Box-constrained Levenberg-Marquardt. Trial points are projected onto the
/// box; coordinates pinned at a bound with the descent direction pointing
/// outward are frozen for that step. A step is accepted only if it lowers
/// the objective, so `trace` is non-increasing.
LmResult minimize_box_lm(const LmProblem& problem, Eigen::VectorXd start, const LmOptions& options = {});

} // namespace sketchflim
