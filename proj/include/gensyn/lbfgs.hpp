#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace gensyn {

struct LbfgsOptions {
    int memory = 10;              // curvature pairs kept
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;
    double c1 = 1e-4;             // Armijo (sufficient decrease)
    double c2 = 0.9;              // strong Wolfe curvature
    int max_line_search = 50;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory quasi-Newton minimization with a strong-Wolfe line
/// search. `fg` evaluates the objective and writes the gradient.
/// `on_iteration(iter, x, f, gnorm)` is invoked after every accepted step.
inline LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)> &fg,
    Eigen::VectorXd x0, const LbfgsOptions &opts = {},
    const std::function<void(int, const Eigen::VectorXd &, double, double)> &on_iteration = {}) {
    using Vec = Eigen::VectorXd;
    const auto n = x0.size();

    Vec x = std::move(x0);
    Vec g(n);
    double f = fg(x, g);

    std::deque<std::pair<Vec, Vec>> pairs; // (s, y)
    LbfgsResult result;

    auto two_loop = [&](const Vec &grad) {
        Vec q = grad;
        std::vector<double> alpha(pairs.size());
        for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
            const auto &[s, y] = pairs[i];
            double rho = 1.0 / y.dot(s);
            alpha[i] = rho * s.dot(q);
            q -= alpha[i] * y;
        }
        if (!pairs.empty()) {
            const auto &[s, y] = pairs.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (size_t i = 0; i < pairs.size(); ++i) {
            const auto &[s, y] = pairs[i];
            double rho = 1.0 / y.dot(s);
            double beta = rho * y.dot(q);
            q += (alpha[i] - beta) * s;
        }
        return q;
    };

    // Strong Wolfe: bracket + zoom (bisection). Returns the accepted step
    // and updates x/f/g through the trial buffers.
    Vec x_trial(n), g_trial(n);
    auto line_search = [&](const Vec &d, double dphi0) -> double {
        const double f0 = f;
        double alpha_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
        double alpha = 1.0;
        const double alpha_max = 1e8;
        double best_alpha = 0.0, best_f = f0;

        auto eval = [&](double a) {
            x_trial = x + a * d;
            double fa = fg(x_trial, g_trial);
            if (fa < best_f) {
                best_f = fa;
                best_alpha = a;
            }
            return fa;
        };

        auto zoom = [&](double lo, double f_lo, double hi) -> double {
            for (int i = 0; i < opts.max_line_search; ++i) {
                double a = 0.5 * (lo + hi);
                double fa = eval(a);
                if (fa > f0 + opts.c1 * a * dphi0 || fa >= f_lo) {
                    hi = a;
                } else {
                    double dphi = g_trial.dot(d);
                    if (std::abs(dphi) <= -opts.c2 * dphi0) return a;
                    if (dphi * (hi - lo) >= 0) hi = lo;
                    lo = a;
                    f_lo = fa;
                }
                if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
            }
            return best_alpha;
        };

        for (int i = 0; i < opts.max_line_search; ++i) {
            double fa = eval(alpha);
            if (fa > f0 + opts.c1 * alpha * dphi0 || (i > 0 && fa >= f_prev))
                return zoom(alpha_prev, f_prev, alpha);
            double dphi = g_trial.dot(d);
            if (std::abs(dphi) <= -opts.c2 * dphi0) return alpha;
            if (dphi >= 0) return zoom(alpha, fa, alpha_prev);
            alpha_prev = alpha;
            f_prev = fa;
            dphi_prev = dphi;
            alpha = std::min(2.0 * alpha, alpha_max);
            if (alpha_prev >= alpha_max) break;
        }
        (void)dphi_prev;
        return best_alpha;
    };

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        double gnorm = g.norm();
        if (on_iteration) on_iteration(iter, x, f, gnorm);
        if (gnorm <= opts.gradient_tolerance) {
            result.converged = true;
            break;
        }

        Vec d = -two_loop(g);
        double dphi0 = g.dot(d);
        if (!(dphi0 < 0)) { // not a descent direction; reset to steepest descent
            d = -g;
            dphi0 = g.dot(d);
            pairs.clear();
        }

        double alpha = line_search(d, dphi0);
        if (alpha <= 0.0) break; // no progress possible

        x_trial = x + alpha * d;
        double f_new = fg(x_trial, g_trial);
        Vec s = x_trial - x;
        Vec y = g_trial - g;
        double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            pairs.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
        }
        x = x_trial;
        f = f_new;
        g = g_trial;
    }

    result.x = std::move(x);
    result.value = f;
    result.gradient = std::move(g);
    result.iterations = iter;
    return result;
}

} // namespace gensyn
