#include "shapespace/box_lbfgs.hpp"

#include <cmath>
#include <vector>

namespace shapespace {

BoxLbfgs::BoxLbfgs(Eigen::VectorXd lower, Eigen::VectorXd upper, int memory)
    : lower_(std::move(lower)), upper_(std::move(upper)), memory_(memory)
{
    if (lower_.size() != upper_.size())
        throw DimensionError("box bounds have different lengths");
    if ((lower_.array() > upper_.array()).any())
        throw DimensionError("box lower bound exceeds upper bound");
}

Eigen::VectorXd BoxLbfgs::project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

Eigen::VectorXd BoxLbfgs::freeMask(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const
{
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const bool pinned = lower_(i) == upper_(i);
        const bool atLower = x(i) <= lower_(i) && g(i) > 0.0;
        const bool atUpper = x(i) >= upper_(i) && g(i) < 0.0;
        if (pinned || atLower || atUpper)
            mask(i) = 0.0;
    }
    return mask;
}

Eigen::VectorXd BoxLbfgs::direction(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const
{
    const Eigen::VectorXd mask = freeMask(x, g);
    Eigen::VectorXd q = g.cwiseProduct(mask);

    std::vector<double> alpha(pairs_.size(), 0.0), rho(pairs_.size(), 0.0);
    std::vector<Eigen::VectorXd> s(pairs_.size()), y(pairs_.size());
    double gamma = 1.0;
    bool haveScale = false;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        s[i] = pairs_[i].s.cwiseProduct(mask);
        y[i] = pairs_[i].y.cwiseProduct(mask);
        const double sy = s[i].dot(y[i]);
        rho[i] = sy > 1e-12 * s[i].norm() * y[i].norm() && sy > 0.0 ? 1.0 / sy : 0.0;
    }
    for (std::size_t i = pairs_.size(); i-- > 0;) {
        if (rho[i] == 0.0)
            continue;
        if (!haveScale) {
            gamma = 1.0 / (rho[i] * y[i].squaredNorm());
            haveScale = true;
        }
        alpha[i] = rho[i] * s[i].dot(q);
        q -= alpha[i] * y[i];
    }
    Eigen::VectorXd r = gamma * q;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (rho[i] == 0.0)
            continue;
        const double beta = rho[i] * y[i].dot(r);
        r += (alpha[i] - beta) * s[i];
    }
    Eigen::VectorXd d = -r.cwiseProduct(mask);
    if (!(g.dot(d) < 0.0))
        d = -g.cwiseProduct(mask);
    return d;
}

void BoxLbfgs::update(const Eigen::VectorXd& step, const Eigen::VectorXd& gradientChange)
{
    if (!(step.dot(gradientChange) > 1e-12 * step.norm() * gradientChange.norm()))
        return;
    pairs_.push_back({step, gradientChange});
    while (static_cast<int>(pairs_.size()) > memory_)
        pairs_.pop_front();
}

double BoxLbfgs::projectedGradientNorm(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const
{
    return (project(x - g) - x).norm();
}

LineSearchResult projectedLineSearch(const std::function<double(const Eigen::VectorXd&)>& objective,
                                     const BoxLbfgs& solver, const Eigen::VectorXd& x, double value,
                                     const Eigen::VectorXd& gradient, const Eigen::VectorXd& direction,
                                     int maxBacktracks)
{
    constexpr double kArmijo = 1e-4;
    LineSearchResult result{x, value, 0, false};
    double step = 1.0;
    for (int i = 0; i <= maxBacktracks; ++i, step *= 0.5) {
        const Eigen::VectorXd candidate = solver.project(x + step * direction);
        const Eigen::VectorXd moved = candidate - x;
        if (moved.squaredNorm() == 0.0)
            break;
        const double decrease = gradient.dot(moved);
        if (!(decrease < 0.0))
            continue;
        const double f = objective(candidate);
        ++result.evaluations;
        if (f <= value + kArmijo * decrease && f < value) {
            result.x = candidate;
            result.value = f;
            result.improved = true;
            break;
        }
    }
    return result;
}

BoxMinimizeResult minimizeInBox(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
                                Eigen::VectorXd x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                BoxMinimizeOptions options)
{
    BoxLbfgs solver(lower, upper, options.memory);
    BoxMinimizeResult result;
    result.x = solver.project(x0);
    Eigen::VectorXd g(result.x.size());
    result.value = objective(result.x, g);
    auto valueOnly = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd scratch(x.size());
        return objective(x, scratch);
    };
    for (int iter = 0; iter < options.maxIterations; ++iter) {
        if (solver.projectedGradientNorm(result.x, g) <= options.gradientTolerance)
            break;
        const Eigen::VectorXd d = solver.direction(result.x, g);
        auto ls = projectedLineSearch(valueOnly, solver, result.x, result.value, g, d);
        if (!ls.improved)
            break;
        Eigen::VectorXd gNew(g.size());
        const double f = objective(ls.x, gNew);
        solver.update(ls.x - result.x, gNew - g);
        const double previous = result.value;
        result.x = ls.x;
        result.value = f;
        g = gNew;
        result.iterations = iter + 1;
        if (std::abs(previous - f) <= options.relativeTolerance * std::max(std::abs(previous), 1e-300))
            break;
    }
    return result;
}

} // namespace shapespace
