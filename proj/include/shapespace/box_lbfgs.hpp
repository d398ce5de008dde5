#pragma once

#include "shapespace/geometry.hpp"

#include <Eigen/Core>

#include <deque>
#include <functional>

namespace shapespace {

/// Limited-memory quasi-Newton directions under box constraints lower <= x <= upper.
///
/// Variables sitting on a bound with the gradient pushing outward (and variables whose bounds coincide)
/// are held fixed; the two-loop recursion runs on the remaining free subspace. Iterates are kept feasible
/// by projecting onto the box.
class BoxLbfgs {
public:
    BoxLbfgs(Eigen::VectorXd lower, Eigen::VectorXd upper, int memory = 10);

    Eigen::VectorXd project(const Eigen::VectorXd& x) const;
    Eigen::VectorXd direction(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient) const;
    /// Adds a curvature pair (x_{k+1} - x_k, g_{k+1} - g_k). Pairs with non-positive curvature are dropped.
    void update(const Eigen::VectorXd& step, const Eigen::VectorXd& gradientChange);
    void reset() { pairs_.clear(); }

    /// Norm of P(x - g) - x; zero at a first-order stationary point of the box problem.
    double projectedGradientNorm(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient) const;

    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }

private:
    Eigen::VectorXd freeMask(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient) const;

    struct Pair {
        Eigen::VectorXd s, y;
    };
    Eigen::VectorXd lower_, upper_;
    int memory_;
    std::deque<Pair> pairs_;
};

struct LineSearchResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool improved = false;
};

/// Backtracking Armijo search along the projected path P(x + alpha d), alpha = 1, 1/2, 1/4, ...
LineSearchResult projectedLineSearch(const std::function<double(const Eigen::VectorXd&)>& objective,
                                     const BoxLbfgs& solver, const Eigen::VectorXd& x, double value,
                                     const Eigen::VectorXd& gradient, const Eigen::VectorXd& direction,
                                     int maxBacktracks = 40);

struct BoxMinimizeOptions {
    int maxIterations = 200;
    double relativeTolerance = 1e-10;
    double gradientTolerance = 1e-10;
    int memory = 10;
};

struct BoxMinimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
};

/// Plain box-constrained minimization of a smooth objective returning value and gradient.
BoxMinimizeResult minimizeInBox(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
                                Eigen::VectorXd x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                BoxMinimizeOptions options = {});

} // namespace shapespace
