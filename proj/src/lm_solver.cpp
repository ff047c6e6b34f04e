#include "sketchflim/lm_solver.hpp"

#include <algorithm>
#include <cmath>

namespace sketchflim {

namespace {

Eigen::VectorXd project(const std::vector<Interval>& boxes, Eigen::VectorXd x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = boxes[static_cast<std::size_t>(i)].clamp(x[i]);
    return x;
}

} // namespace

LmResult minimize_box_lm(const LmProblem& problem, Eigen::VectorXd start, const LmOptions& options) {
    const auto n = start.size();
    require(static_cast<std::size_t>(n) == problem.boxes.size(), ErrorKind::invalid_input,
            "start point and box dimensions differ");

    LmResult out;
    out.theta = project(problem.boxes, std::move(start));
    out.eval = problem.evaluate(out.theta);
    require(std::isfinite(out.eval.objective), ErrorKind::numeric_degenerate, "objective is not finite at start");
    out.trace.push_back(out.eval.objective);

    double lambda = options.initial_damping;
    bool need_jacobian = true;
    Eigen::MatrixXd jtj;
    Eigen::VectorXd jtr;

    while (out.iterations < options.max_iterations) {
        if (need_jacobian) {
            const Eigen::MatrixXd j = problem.jacobian(out.theta, out.eval);
            jtj = j.transpose() * j;
            jtr = j.transpose() * out.eval.residual;
            need_jacobian = false;
        }
        ++out.iterations;

        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& box = problem.boxes[static_cast<std::size_t>(i)];
            const bool pinned_low = out.theta[i] <= box.lo && jtr[i] < 0.0;
            const bool pinned_high = out.theta[i] >= box.hi && jtr[i] > 0.0;
            if (!pinned_low && !pinned_high) free.push_back(i);
        }
        if (free.empty()) {
            out.converged = true;
            break;
        }

        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd a(nf, nf);
        Eigen::VectorXd b(nf);
        const double diag_floor = std::max(1e-12, 1e-12 * jtj.diagonal().cwiseAbs().maxCoeff());
        for (Eigen::Index r = 0; r < nf; ++r) {
            b[r] = jtr[free[static_cast<std::size_t>(r)]];
            for (Eigen::Index c = 0; c < nf; ++c)
                a(r, c) = jtj(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
            a(r, r) += lambda * std::max(a(r, r), diag_floor);
        }
        const Eigen::VectorXd delta_free = a.ldlt().solve(b);

        Eigen::VectorXd trial = out.theta;
        for (Eigen::Index r = 0; r < nf; ++r) trial[free[static_cast<std::size_t>(r)]] += delta_free[r];
        trial = project(problem.boxes, trial);
        const double step = (trial - out.theta).norm();
        if (!std::isfinite(step) || step < options.step_tolerance) {
            out.converged = std::isfinite(step);
            break;
        }

        LmEval candidate = problem.evaluate(trial);
        if (std::isfinite(candidate.objective) && candidate.objective < out.eval.objective) {
            const double drop = out.eval.objective - candidate.objective;
            out.theta = trial;
            out.eval = std::move(candidate);
            out.trace.push_back(out.eval.objective);
            lambda = std::max(lambda * 0.1, 1e-12);
            need_jacobian = true;
            if (drop < options.objective_tolerance) {
                out.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e16) {
                // No descent at any damping: a stationary point within FD accuracy.
                out.converged = true;
                break;
            }
        }
    }
    return out;
}

} // namespace sketchflim
