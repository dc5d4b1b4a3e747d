/*
 Copyright 2026 The epicontrol Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef EPICONTROL_FITTING_HPP
#define EPICONTROL_FITTING_HPP

// Least-squares calibration of the uncontrolled model against observed
// quarantined (Q), recovered (R) and deceased (D) series.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epicontrol/errors.hpp"
#include "epicontrol/integrator.hpp"
#include "epicontrol/model.hpp"

namespace epicontrol {

enum class FitVariable { alpha, beta, gamma, delta, lambda1, lambda2, lambda3, kappa1, kappa2, kappa3, e0, i0 };

inline constexpr std::array<FitVariable, 12> kAllFitVariables{
    FitVariable::alpha,   FitVariable::beta,    FitVariable::gamma,   FitVariable::delta,
    FitVariable::lambda1, FitVariable::lambda2, FitVariable::lambda3, FitVariable::kappa1,
    FitVariable::kappa2,  FitVariable::kappa3,  FitVariable::e0,      FitVariable::i0};

[[nodiscard]] inline const char* variable_name(FitVariable v) {
    constexpr std::array<const char*, 12> names{"alpha",   "beta",   "gamma",  "delta",  "lambda1", "lambda2",
                                                "lambda3", "kappa1", "kappa2", "kappa3", "E0",      "I0"};
    return names[static_cast<std::size_t>(v)];
}

[[nodiscard]] inline std::optional<FitVariable> parse_variable(const std::string& name) {
    for (auto v : kAllFitVariables) {
        if (name == variable_name(v)) {
            return v;
        }
    }
    return std::nullopt;
}

/// Strictly positive rates are fitted in log space; shifts and seeds linearly.
[[nodiscard]] inline bool log_scaled(FitVariable v) {
    switch (v) {
    case FitVariable::lambda3:
    case FitVariable::kappa3:
    case FitVariable::e0:
    case FitVariable::i0:
        return false;
    default:
        return true;
    }
}

/// Model parameters plus the two unobserved initial compartments.
struct Calibration {
    ModelParams params;
    double e0 = 0.0;
    double i0 = 0.0;

    [[nodiscard]] double get(FitVariable v) const {
        switch (v) {
        case FitVariable::alpha:
            return params.alpha;
        case FitVariable::beta:
            return params.beta;
        case FitVariable::gamma:
            return params.gamma;
        case FitVariable::delta:
            return params.delta;
        case FitVariable::lambda1:
            return params.lambda[0];
        case FitVariable::lambda2:
            return params.lambda[1];
        case FitVariable::lambda3:
            return params.lambda[2];
        case FitVariable::kappa1:
            return params.kappa[0];
        case FitVariable::kappa2:
            return params.kappa[1];
        case FitVariable::kappa3:
            return params.kappa[2];
        case FitVariable::e0:
            return e0;
        case FitVariable::i0:
            return i0;
        }
        return 0.0;
    }

    void set(FitVariable v, double value) {
        switch (v) {
        case FitVariable::alpha:
            params.alpha = value;
            break;
        case FitVariable::beta:
            params.beta = value;
            break;
        case FitVariable::gamma:
            params.gamma = value;
            break;
        case FitVariable::delta:
            params.delta = value;
            break;
        case FitVariable::lambda1:
            params.lambda[0] = value;
            break;
        case FitVariable::lambda2:
            params.lambda[1] = value;
            break;
        case FitVariable::lambda3:
            params.lambda[2] = value;
            break;
        case FitVariable::kappa1:
            params.kappa[0] = value;
            break;
        case FitVariable::kappa2:
            params.kappa[1] = value;
            break;
        case FitVariable::kappa3:
            params.kappa[2] = value;
            break;
        case FitVariable::e0:
            e0 = value;
            break;
        case FitVariable::i0:
            i0 = value;
            break;
        }
    }
};

struct FreeVariable {
    FitVariable variable;
    double lower;
    double upper;
};

/// Observations at times measured in days from the simulation start.
struct Observations {
    std::vector<double> times;
    std::vector<double> q;
    std::vector<double> r;
    std::vector<double> d;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

struct FitProblem {
    Observations observed;
    Calibration base;  ///< values used for every variable not listed in `free`
    double q0 = 0.0;
    double r0 = 0.0;
    double d0 = 0.0;
    double p0 = 0.0;
    double population = 0.0;
    std::vector<FreeVariable> free;
    double step = 0.1;

    void validate() const {
        require(!free.empty(), ErrorKind::invalid_argument, "fit problem has no free variables");
        for (const auto& fv : free) {
            const std::string name = variable_name(fv.variable);
            require(std::isfinite(fv.lower) && std::isfinite(fv.upper) && fv.lower <= fv.upper,
                    ErrorKind::invalid_argument, "bounds for " + name + " must be finite with lower <= upper");
            require(!log_scaled(fv.variable) || fv.lower > 0.0, ErrorKind::invalid_argument,
                    "log-scaled variable " + name + " needs a positive lower bound");
        }
        for (std::size_t i = 0; i < free.size(); ++i) {
            for (std::size_t j = i + 1; j < free.size(); ++j) {
                require(free[i].variable != free[j].variable, ErrorKind::invalid_argument,
                        std::string("variable listed twice: ") + variable_name(free[i].variable));
            }
        }
        const auto n = observed.size();
        require(n > 0 && observed.q.size() == n && observed.r.size() == n && observed.d.size() == n,
                ErrorKind::invalid_argument, "observations must be nonempty with equal-length columns");
        for (double t : observed.times) {
            require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_argument,
                    "observation times must be finite and nonnegative");
        }
        require(step > 0.0, ErrorKind::invalid_argument, "integration step must be positive");
        Population{population};
    }

    /// Simulation grid from 0 to the last observation, rounded up to whole steps.
    [[nodiscard]] TimeGrid grid() const {
        const double last = *std::max_element(observed.times.begin(), observed.times.end());
        const double steps = std::max(1.0, std::ceil(last / step - 1e-9));
        return TimeGrid(0.0, steps * step, step);
    }

    [[nodiscard]] Calibration assemble(const std::vector<double>& theta) const {
        require(theta.size() == free.size(), ErrorKind::invalid_argument, "parameter vector has the wrong length");
        Calibration c = base;
        for (std::size_t j = 0; j < free.size(); ++j) {
            c.set(free[j].variable, theta[j]);
        }
        return c;
    }

    [[nodiscard]] StateVec initial_state(const Calibration& c) const {
        return make_initial_state(Population{population}, c.e0, c.i0, q0, r0, d0, p0);
    }
};

struct FitOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    double step_tolerance = 1e-10;
    double initial_damping = 1e-3;
    double jacobian_step = 1e-7;
    double max_step = 0.5; /// per-component step cap, relative to max(1, |z|) in internal coordinates
};

struct FitResult {
    std::vector<FreeVariable> free;
    std::vector<double> theta;
    Calibration calibration;
    double residual_norm = 0.0;
    double initial_residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;
    std::array<double, 3> rmse{}; ///< unscaled root-mean-square error for Q, R, D
};

namespace detail {

struct SeriesScale {
    double q = 1.0;
    double r = 1.0;
    double d = 1.0;
};

[[nodiscard]] inline SeriesScale series_scale(const Observations& obs) {
    auto peak = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) {
            m = std::max(m, std::abs(x));
        }
        return m > 0.0 ? m : 1.0;
    };
    return {peak(obs.q), peak(obs.r), peak(obs.d)};
}

} // namespace detail

/// Q, R and D of the uncontrolled model at each observation time.
[[nodiscard]] inline std::array<std::vector<double>, 3> simulate_observables(const FitProblem& problem,
                                                                             const Calibration& c) {
    const Population pop{problem.population};
    const StateVec x0 = problem.initial_state(c);
    auto field = [&](double t, const StateVec& x) { return rhs_uncontrolled(t, x, c.params, pop); };
    const auto traj = integrate_forward<kStateDim>(field, x0, problem.grid());
    std::array<std::vector<double>, 3> out;
    for (double t : problem.observed.times) {
        const StateVec x = traj.interpolate(t);
        out[0].push_back(x[Q]);
        out[1].push_back(x[R]);
        out[2].push_back(x[D]);
    }
    return out;
}

/// Concatenated (model - observed) for Q, R, D, each series divided by its peak observed value.
[[nodiscard]] inline std::vector<double> residuals(const std::vector<double>& theta, const FitProblem& problem) {
    for (std::size_t j = 0; j < problem.free.size(); ++j) {
        require(theta[j] >= problem.free[j].lower && theta[j] <= problem.free[j].upper, ErrorKind::invalid_argument,
                std::string("parameter ") + variable_name(problem.free[j].variable) + " outside its bounds");
    }
    const auto model = simulate_observables(problem, problem.assemble(theta));
    const auto scale = detail::series_scale(problem.observed);
    const auto& obs = problem.observed;
    const std::size_t n = obs.size();
    std::vector<double> r(3 * n);
    for (std::size_t k = 0; k < n; ++k) {
        r[k] = (model[0][k] - obs.q[k]) / scale.q;
        r[n + k] = (model[1][k] - obs.r[k]) / scale.r;
        r[2 * n + k] = (model[2][k] - obs.d[k]) / scale.d;
    }
    return r;
}

namespace detail {

class InternalCoordinates {
public:
    explicit InternalCoordinates(const std::vector<FreeVariable>& free) : free_(free) {
        const auto n = static_cast<Eigen::Index>(free.size());
        lower_.resize(n);
        upper_.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            lower_[j] = to_internal(j, free[static_cast<std::size_t>(j)].lower);
            upper_[j] = to_internal(j, free[static_cast<std::size_t>(j)].upper);
        }
    }

    [[nodiscard]] double to_internal(Eigen::Index j, double value) const {
        return log_scaled(free_[static_cast<std::size_t>(j)].variable) ? std::log(value) : value;
    }

    [[nodiscard]] Eigen::VectorXd encode(const std::vector<double>& theta) const {
        Eigen::VectorXd z(lower_.size());
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            z[j] = std::clamp(to_internal(j, theta[static_cast<std::size_t>(j)]), lower_[j], upper_[j]);
        }
        return z;
    }

    [[nodiscard]] std::vector<double> decode(const Eigen::VectorXd& z) const {
        std::vector<double> theta(static_cast<std::size_t>(z.size()));
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            const auto& fv = free_[static_cast<std::size_t>(j)];
            const double v = log_scaled(fv.variable) ? std::exp(z[j]) : z[j];
            // exp(log(x)) may land an ulp outside the natural-unit bounds.
            theta[static_cast<std::size_t>(j)] = std::clamp(v, fv.lower, fv.upper);
        }
        return theta;
    }

    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& z) const { return z.cwiseMax(lower_).cwiseMin(upper_); }

    [[nodiscard]] const Eigen::VectorXd& lower() const noexcept { return lower_; }
    [[nodiscard]] const Eigen::VectorXd& upper() const noexcept { return upper_; }

private:
    const std::vector<FreeVariable>& free_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

} // namespace detail

/// Projected Levenberg-Marquardt with Marquardt diagonal scaling and a
/// forward-difference Jacobian in internal coordinates. Simulation failures
/// count as an infinite residual, which rejects the trial step.
[[nodiscard]] inline FitResult fit(const FitProblem& problem, const std::vector<double>& guess,
                                   const FitOptions& opts = {}) {
    problem.validate();
    require(guess.size() == problem.free.size(), ErrorKind::invalid_argument, "guess has the wrong length");
    for (std::size_t j = 0; j < guess.size(); ++j) {
        require(guess[j] >= problem.free[j].lower && guess[j] <= problem.free[j].upper, ErrorKind::invalid_argument,
                std::string("initial guess for ") + variable_name(problem.free[j].variable) + " outside its bounds");
    }

    const detail::InternalCoordinates coords(problem.free);
    const auto m = static_cast<Eigen::Index>(3 * problem.observed.size());
    const auto n = static_cast<Eigen::Index>(problem.free.size());

    auto evaluate = [&](const Eigen::VectorXd& z, Eigen::VectorXd& r) {
        try {
            const auto res = residuals(coords.decode(z), problem);
            r = Eigen::Map<const Eigen::VectorXd>(res.data(), m);
            return r.allFinite();
        } catch (const Error&) {
            return false;
        }
    };

    Eigen::VectorXd z = coords.encode(guess);
    Eigen::VectorXd r(m);
    require(evaluate(z, r), ErrorKind::non_finite_state, "model cannot be simulated at the initial guess");
    double sq = r.squaredNorm();

    FitResult result;
    result.free = problem.free;
    result.initial_residual_norm = std::sqrt(sq);
    result.status = "iteration limit reached";

    double damping = opts.initial_damping;
    Eigen::MatrixXd jac(m, n);
    Eigen::VectorXd column(m);
    int iter = 0;
    bool done = false;
    while (!done && iter < opts.max_iterations) {
        ++iter;
        for (Eigen::Index j = 0; j < n; ++j) {
            double h = opts.jacobian_step * std::max(1.0, std::abs(z[j]));
            if (z[j] + h > coords.upper()[j]) {
                h = -h;
            }
            Eigen::VectorXd zp = z;
            zp[j] += h;
            if (!evaluate(zp, column)) {
                fail(ErrorKind::non_finite_state, std::string("model cannot be simulated while differentiating ") +
                                                      variable_name(problem.free[static_cast<std::size_t>(j)].variable));
            }
            jac.col(j) = (column - r) / h;
        }

        const Eigen::VectorXd grad = jac.transpose() * r;
        // Variables on a bound with the descent direction pointing outward stay
        // fixed this iteration; the damped system is solved over the rest.
        std::vector<Eigen::Index> active;
        Eigen::VectorXd projected = grad;
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool at_lower = z[j] <= coords.lower()[j] && grad[j] > 0.0;
            const bool at_upper = z[j] >= coords.upper()[j] && grad[j] < 0.0;
            if (at_lower || at_upper) {
                projected[j] = 0.0;
            } else {
                active.push_back(j);
            }
        }
        if (projected.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
            result.converged = true;
            result.status = "gradient below tolerance";
            break;
        }

        const auto k = static_cast<Eigen::Index>(active.size());
        const Eigen::MatrixXd reduced_jac = jac(Eigen::all, active);
        const Eigen::MatrixXd normal = reduced_jac.transpose() * reduced_jac;
        const Eigen::VectorXd reduced_grad = grad(active);
        Eigen::VectorXd diag = normal.diagonal();
        const double diag_floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
        diag = diag.cwiseMax(diag_floor);

        while (true) {
            Eigen::MatrixXd lhs = normal;
            lhs.diagonal() += damping * diag;
            const Eigen::VectorXd reduced_delta = lhs.ldlt().solve(-reduced_grad);
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
            for (Eigen::Index a = 0; a < k; ++a) {
                delta[active[static_cast<std::size_t>(a)]] = reduced_delta[a];
            }
            double shrink = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double cap = opts.max_step * std::max(1.0, std::abs(z[j]));
                if (std::abs(delta[j]) > cap) {
                    shrink = std::min(shrink, cap / std::abs(delta[j]));
                }
            }
            delta *= shrink;
            const Eigen::VectorXd trial = coords.project(z + delta);
            const Eigen::VectorXd step = trial - z;
            if (delta.allFinite() && step.norm() <= opts.step_tolerance * (z.norm() + opts.step_tolerance)) {
                result.converged = true;
                result.status = "step below tolerance";
                done = true;
                break;
            }
            Eigen::VectorXd trial_r(m);
            if (delta.allFinite() && evaluate(trial, trial_r) && trial_r.squaredNorm() < sq) {
                z = trial;
                r = trial_r;
                sq = r.squaredNorm();
                damping = std::max(damping / 10.0, 1e-15);
                break;
            }
            damping *= 10.0;
            if (damping > 1e16) {
                result.status = "stalled: damping exceeded 1e16";
                done = true;
                break;
            }
        }
    }

    result.iterations = iter;
    result.theta = coords.decode(z);
    result.calibration = problem.assemble(result.theta);
    result.residual_norm = std::sqrt(sq);

    const auto model = simulate_observables(problem, result.calibration);
    const auto& obs = problem.observed;
    const std::array<const std::vector<double>*, 3> observed{&obs.q, &obs.r, &obs.d};
    for (std::size_t s = 0; s < 3; ++s) {
        double acc = 0.0;
        for (std::size_t k = 0; k < obs.size(); ++k) {
            const double e = model[s][k] - (*observed[s])[k];
            acc += e * e;
        }
        result.rmse[s] = std::sqrt(acc / static_cast<double>(obs.size()));
    }
    return result;
}

/// Flat `name = value` listing of the full calibration followed by fit diagnostics.
inline void write_fit_result(std::ostream& os, const FitResult& result) {
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (auto v : kAllFitVariables) {
        os << variable_name(v) << " = " << result.calibration.get(v) << '\n';
    }
    os << "# fit diagnostics\n";
    os << "result.converged = " << (result.converged ? "true" : "false") << '\n';
    os << "result.status = " << result.status << '\n';
    os << "result.iterations = " << result.iterations << '\n';
    os << "result.residual_norm = " << result.residual_norm << '\n';
    os << "result.initial_residual_norm = " << result.initial_residual_norm << '\n';
    os << "result.rmse_Q = " << result.rmse[0] << '\n';
    os << "result.rmse_R = " << result.rmse[1] << '\n';
    os << "result.rmse_D = " << result.rmse[2] << '\n';
    std::string names;
    for (const auto& fv : result.free) {
        names += (names.empty() ? "" : ",") + std::string(variable_name(fv.variable));
    }
    os << "result.free = " << names << '\n';
}

} // namespace epicontrol

#endif
