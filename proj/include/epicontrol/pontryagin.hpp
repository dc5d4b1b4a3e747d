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

#ifndef EPICONTROL_PONTRYAGIN_HPP
#define EPICONTROL_PONTRYAGIN_HPP

// Optimal control of the three-control model: running cost, Hamiltonian,
// costate dynamics, projected control law and the forward-backward sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epicontrol/errors.hpp"
#include "epicontrol/integrator.hpp"
#include "epicontrol/model.hpp"

namespace epicontrol {

/// Objective weights (w) on new infections, recovered and protected, and control-cost weights (v).
struct CostWeights {
    double w1 = 1.0;
    double w2 = 1.0;
    double w3 = 1.0;
    double v1 = 1.0;
    double v2 = 1.0;
    double v3 = 1.0;

    void validate() const {
        require(std::isfinite(w1) && std::isfinite(w2) && std::isfinite(w3), ErrorKind::invalid_argument,
                "objective weights must be finite");
        require(v1 > 0.0 && v2 > 0.0 && v3 > 0.0 && std::isfinite(v1) && std::isfinite(v2) && std::isfinite(v3),
                ErrorKind::invalid_argument, "control-cost weights must be positive");
    }

    static CostWeights zero_objective() { return {0.0, 0.0, 0.0, 1.0, 1.0, 1.0}; }
};

/// Which costate system to integrate.
///
/// `state_sum` differentiates the Hamiltonian with N read as the sum of the
/// compartments; `constant_n` holds N fixed. Both yield the same controls and
/// gradients because they differ by a multiple of (1, ..., 1), which the
/// conserved dynamics annihilate. `printed` is the historical transcription
/// whose dpsi3 carries (N - S) instead of (N - I); it is kept for comparison.
enum class AdjointForm { state_sum, constant_n, printed };

[[nodiscard]] inline std::string to_string(AdjointForm form) {
    switch (form) {
    case AdjointForm::state_sum:
        return "state-sum";
    case AdjointForm::constant_n:
        return "constant-n";
    case AdjointForm::printed:
        return "printed";
    }
    return "unknown";
}

[[nodiscard]] inline AdjointForm parse_adjoint_form(const std::string& s) {
    if (s == "state-sum") {
        return AdjointForm::state_sum;
    }
    if (s == "constant-n") {
        return AdjointForm::constant_n;
    }
    if (s == "printed") {
        return AdjointForm::printed;
    }
    fail(ErrorKind::invalid_argument, "unknown adjoint form '" + s + "' (expected state-sum, constant-n or printed)");
}

struct FbsmOptions {
    double relaxation = 0.5;
    double tolerance = 1e-4;
    int max_iterations = 500;
    AdjointForm adjoint_form = AdjointForm::state_sum;
    double min_relaxation = 1.0 / 1024.0;

    void validate() const {
        require(relaxation > 0.0 && relaxation <= 1.0, ErrorKind::invalid_argument, "relaxation must lie in (0, 1]");
        require(tolerance > 0.0, ErrorKind::invalid_argument, "FBSM tolerance must be positive");
        require(max_iterations >= 1, ErrorKind::invalid_argument, "FBSM needs at least one iteration");
        require(min_relaxation > 0.0 && min_relaxation <= relaxation, ErrorKind::invalid_argument,
                "minimum relaxation must lie in (0, relaxation]");
    }
};

struct IterationRecord {
    int iteration = 0;
    double change = 0.0;
    double cost = 0.0;
    double relaxation = 0.0;
};

struct OptimalSolution {
    Trajectory<kStateDim> states;
    Trajectory<kStateDim> adjoints;
    Trajectory<kControlDim> controls;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    double final_relaxation = 0.0;
    std::vector<IterationRecord> history;
};

/// Integrand of the cost functional.
[[nodiscard]] inline double running_cost(const StateVec& x, const ControlVec& u, const ModelParams& p,
                                         const CostWeights& w, const Population& pop) noexcept {
    return w.w1 * p.beta * u[0] * x[S] * x[I] / pop.value() - w.w2 * x[R] - w.w3 * x[P] +
           0.5 * (w.v1 * u[0] * u[0] + w.v2 * u[1] * u[1] + w.v3 * u[2] * u[2]);
}

/// Composite Simpson quadrature of the running cost on the shared grid; an odd
/// interval count closes with the 3/8 rule, a single interval with the trapezoid.
[[nodiscard]] inline double cost(const Trajectory<kStateDim>& states, const Trajectory<kControlDim>& controls,
                                 const CostWeights& w, const ModelParams& p, const Population& pop) {
    require(states.grid() == controls.grid(), ErrorKind::grid_mismatch, "state and control grids differ");
    const auto& grid = states.grid();
    const std::size_t m = grid.intervals();
    const double h = grid.step();
    std::vector<double> f(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        f[k] = running_cost(states[k], controls[k], p, w, pop);
    }
    if (m == 1) {
        return 0.5 * h * (f[0] + f[1]);
    }
    const std::size_t simpson_end = m % 2 == 0 ? m : m - 3;
    double sum = 0.0;
    for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) {
        sum += h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
    }
    if (simpson_end != m) {
        const std::size_t k = simpson_end;
        sum += 3.0 * h / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
    }
    return sum;
}

[[nodiscard]] inline double hamiltonian(const StateVec& x, const ControlVec& u, const AdjointVec& psi, double t,
                                        const ModelParams& p, const CostWeights& w, const Population& pop) {
    const StateVec f = rhs_controlled(t, x, u, p, pop);
    double h = running_cost(x, u, p, w, pop);
    for (std::size_t i = 0; i < kStateDim; ++i) {
        h += psi[i] * f[i];
    }
    return h;
}

/// dH/du, componentwise; H is separable and strictly convex in u.
[[nodiscard]] inline ControlVec hamiltonian_control_gradient(const StateVec& x, const ControlVec& u,
                                                             const AdjointVec& psi, const ModelParams& p,
                                                             const CostWeights& w, const Population& pop) noexcept {
    const double n = pop.value();
    return {
        w.v1 * u[0] + p.beta * x[S] * x[I] * (w.w1 - psi[S] + psi[E]) / n,
        w.v2 * u[1] + x[S] * (psi[P] - psi[S]),
        w.v3 * u[2] + x[Q] * (psi[R] - psi[Q]),
    };
}

/// Costate derivative at time t given the state and control there.
[[nodiscard]] inline AdjointVec adjoint_rhs(double t, const AdjointVec& psi, const StateVec& x, const ControlVec& u,
                                            const ModelParams& p, const CostWeights& w, const Population& pop,
                                            AdjointForm form = AdjointForm::state_sum) {
    const double n = pop.value();
    const double lambda = lambda_rate(t, p);
    const double kappa = kappa_rate(t, p);
    const double coupling = w.w1 - psi[S] + psi[E];
    const double others_than_s = x[E] + x[I] + x[Q] + x[R] + x[D] + x[P];
    const double others_than_i = x[S] + x[E] + x[Q] + x[R] + x[D] + x[P];

    // Derivative of the infection term with respect to S and I, and the
    // contribution a change in N makes to every costate.
    double d_s = 0.0;
    double d_i = 0.0;
    double via_n = 0.0;
    switch (form) {
    case AdjointForm::state_sum:
        d_s = u[0] * p.beta * x[I] * others_than_s / (n * n);
        d_i = u[0] * p.beta * x[S] * others_than_i / (n * n);
        via_n = u[0] * p.beta * x[S] * x[I] * coupling / (n * n);
        break;
    case AdjointForm::printed:
        d_s = u[0] * p.beta * x[I] * others_than_s / (n * n);
        d_i = u[0] * p.beta * x[S] * others_than_s / (n * n);
        via_n = u[0] * p.beta * x[S] * x[I] * coupling / (n * n);
        break;
    case AdjointForm::constant_n:
        d_s = u[0] * p.beta * x[I] / n;
        d_i = u[0] * p.beta * x[S] / n;
        break;
    }

    return {
        -d_s * coupling + (p.alpha + u[1]) * (psi[S] - psi[P]),
        via_n + p.gamma * (psi[E] - psi[I]),
        -d_i * coupling + p.delta * (psi[I] - psi[Q]),
        via_n + kappa * (psi[Q] - psi[D]) + (lambda + u[2]) * (psi[Q] - psi[R]),
        via_n + w.w2,
        via_n,
        via_n + w.w3,
    };
}

/// Costate derivative with state and control read off their trajectories.
[[nodiscard]] inline AdjointVec adjoint_rhs(double t, const AdjointVec& psi, const Trajectory<kStateDim>& states,
                                            const Trajectory<kControlDim>& controls, const ModelParams& p,
                                            const CostWeights& w, const Population& pop,
                                            AdjointForm form = AdjointForm::state_sum) {
    return adjoint_rhs(t, psi, states.interpolate(t), controls.interpolate(t), p, w, pop, form);
}

/// Stationary point of H in u, before projection onto the bounds.
[[nodiscard]] inline ControlVec unclipped_control(const StateVec& x, const AdjointVec& psi, const ModelParams& p,
                                                  const CostWeights& w, const Population& pop) noexcept {
    return {
        p.beta * x[S] * x[I] * (psi[S] - psi[E] - w.w1) / (pop.value() * w.v1),
        x[S] * (psi[S] - psi[P]) / w.v2,
        x[Q] * (psi[Q] - psi[R]) / w.v3,
    };
}

/// Pointwise minimizer of H over the box: each stationary value clipped independently.
[[nodiscard]] inline ControlVec control_update(const StateVec& x, const AdjointVec& psi, const ModelParams& p,
                                               const CostWeights& w, const ControlBounds& b, const Population& pop) {
    return b.project(unclipped_control(x, psi, p, w, pop));
}

[[nodiscard]] inline Trajectory<kControlDim> constant_controls(const TimeGrid& grid, const ControlVec& u) {
    return Trajectory<kControlDim>(grid, std::vector<ControlVec>(grid.size(), u));
}

/// Forward simulation of the controlled system along a control trajectory
/// (linear in time between nodes).
[[nodiscard]] inline Trajectory<kStateDim> simulate_controlled(const ModelParams& p, const StateVec& x0,
                                                               const Trajectory<kControlDim>& controls,
                                                               const Population& pop) {
    auto field = [&](double t, const StateVec& x) { return rhs_controlled(t, x, controls.interpolate(t), p, pop); };
    return integrate_forward<kStateDim>(field, x0, controls.grid());
}

/// Backward costate sweep from the transversality condition psi(tf) = 0.
[[nodiscard]] inline Trajectory<kStateDim> solve_adjoint(const ModelParams& p, const Trajectory<kStateDim>& states,
                                                         const Trajectory<kControlDim>& controls,
                                                         const CostWeights& w, const Population& pop,
                                                         AdjointForm form = AdjointForm::state_sum) {
    require(states.grid() == controls.grid(), ErrorKind::grid_mismatch, "state and control grids differ");
    auto field = [&](double t, const AdjointVec& psi) {
        return adjoint_rhs(t, psi, states.interpolate(t), controls.interpolate(t), p, w, pop, form);
    };
    return integrate_backward<kStateDim>(field, AdjointVec{}, states.grid());
}

namespace detail {

// Largest per-component change, each component scaled by its own peak magnitude.
template <std::size_t Dim>
[[nodiscard]] double relative_change(const Trajectory<Dim>& next, const Trajectory<Dim>& prev) {
    Vec<Dim> scale{};
    Vec<Dim> diff{};
    double overall = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
        for (std::size_t i = 0; i < Dim; ++i) {
            scale[i] = std::max(scale[i], std::abs(next[k][i]));
            diff[i] = std::max(diff[i], std::abs(next[k][i] - prev[k][i]));
        }
    }
    for (double s : scale) {
        overall = std::max(overall, s);
    }
    const double floor = 1e-12 * std::max(1.0, overall);
    double worst = 0.0;
    for (std::size_t i = 0; i < Dim; ++i) {
        worst = std::max(worst, diff[i] / std::max(scale[i], floor));
    }
    return worst;
}

// Control change measured against the width of the admissible box, so a
// sweep heading to a zero control still settles. Pinned components fall back
// to their peak magnitude.
[[nodiscard]] inline double control_change(const Trajectory<kControlDim>& next, const Trajectory<kControlDim>& prev,
                                           const ControlBounds& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < kControlDim; ++i) {
        double diff = 0.0;
        double peak = 0.0;
        for (std::size_t k = 0; k < next.size(); ++k) {
            diff = std::max(diff, std::abs(next[k][i] - prev[k][i]));
            peak = std::max(peak, std::abs(next[k][i]));
        }
        const double width = b.upper[i] - b.lower[i];
        const double scale = width > 0.0 ? width : std::max(peak, 1e-12);
        worst = std::max(worst, diff / scale);
    }
    return worst;
}

[[nodiscard]] inline Trajectory<kControlDim> projected_update(const Trajectory<kStateDim>& states,
                                                              const Trajectory<kStateDim>& adjoints,
                                                              const ModelParams& p, const CostWeights& w,
                                                              const ControlBounds& b, const Population& pop) {
    std::vector<ControlVec> u(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        u[k] = control_update(states[k], adjoints[k], p, w, b, pop);
    }
    return Trajectory<kControlDim>(states.grid(), std::move(u));
}

} // namespace detail

/// Forward-backward sweep for a Pontryagin extremal.
///
/// Each sweep integrates the state forward under the current controls, the
/// costate backward from psi(tf) = 0, and relaxes the controls toward the
/// pointwise minimizer of H. The relaxation halves when the cost rises by more
/// than tolerance * |J| twice, or when the change measure fails to shrink on two
/// consecutive sweeps (a two-cycle). After convergence one undamped update is
/// applied so the returned controls sit exactly on the projected law.
[[nodiscard]] inline OptimalSolution solve_fbsm(const ModelParams& p, const StateVec& x0, const CostWeights& w,
                                                const ControlBounds& b, const TimeGrid& grid,
                                                const FbsmOptions& opts, const Population& pop) {
    p.validate();
    w.validate();
    b.validate();
    opts.validate();
    check_state(x0, pop);

    auto controls = constant_controls(grid, b.midpoint());
    auto states = simulate_controlled(p, x0, controls, pop);
    auto adjoints = solve_adjoint(p, states, controls, w, pop, opts.adjoint_form);
    double current_cost = cost(states, controls, w, p, pop);

    double omega = opts.relaxation;
    double previous_change = std::numeric_limits<double>::infinity();
    int cost_rises = 0;
    int stalls = 0;
    bool converged = false;
    int iteration = 0;
    std::vector<IterationRecord> history;

    while (iteration < opts.max_iterations) {
        ++iteration;
        const auto target = detail::projected_update(states, adjoints, p, w, b, pop);
        std::vector<ControlVec> relaxed(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            for (std::size_t i = 0; i < kControlDim; ++i) {
                relaxed[k][i] = (1.0 - omega) * controls[k][i] + omega * target[k][i];
            }
            relaxed[k] = b.project(relaxed[k]);
        }
        Trajectory<kControlDim> next_controls(grid, std::move(relaxed));
        auto next_states = simulate_controlled(p, x0, next_controls, pop);
        auto next_adjoints = solve_adjoint(p, next_states, next_controls, w, pop, opts.adjoint_form);
        const double next_cost = cost(next_states, next_controls, w, p, pop);

        const double change = std::max({detail::relative_change(next_states, states),
                                        detail::relative_change(next_adjoints, adjoints),
                                        detail::control_change(next_controls, controls, b)});
        history.push_back({iteration, change, next_cost, omega});

        if (iteration > 1 && next_cost > current_cost + opts.tolerance * std::abs(current_cost)) {
            ++cost_rises;
        }
        // A growing change only counts as a stall when the cost is not improving either.
        const bool improving = next_cost < current_cost - opts.tolerance * std::abs(current_cost);
        stalls = change >= previous_change && !improving ? stalls + 1 : 0;
        if ((cost_rises >= 2 || stalls >= 2) && omega > opts.min_relaxation) {
            omega = std::max(0.5 * omega, opts.min_relaxation);
            cost_rises = 0;
            stalls = 0;
        }
        previous_change = change;

        controls = std::move(next_controls);
        states = std::move(next_states);
        adjoints = std::move(next_adjoints);
        current_cost = next_cost;

        if (change <= opts.tolerance) {
            converged = true;
            break;
        }
    }

    if (converged) {
        controls = detail::projected_update(states, adjoints, p, w, b, pop);
        states = simulate_controlled(p, x0, controls, pop);
        adjoints = solve_adjoint(p, states, controls, w, pop, opts.adjoint_form);
        current_cost = cost(states, controls, w, p, pop);
    }

    return OptimalSolution{std::move(states), std::move(adjoints), std::move(controls), current_cost, iteration,
                           converged,         omega,               std::move(history)};
}

/// Cost functional integrated alongside the state with the same RK4 stages,
/// so it is consistent with the discrete dynamics to fourth order.
[[nodiscard]] inline double integrated_cost(const ModelParams& p, const StateVec& x0, const CostWeights& w,
                                            const Trajectory<kControlDim>& controls, const Population& pop) {
    using Augmented = Vec<kStateDim + 1>;
    auto field = [&](double t, const Augmented& y) {
        StateVec x{};
        std::copy_n(y.begin(), kStateDim, x.begin());
        const ControlVec u = controls.interpolate(t);
        const StateVec f = rhs_controlled(t, x, u, p, pop);
        Augmented out{};
        std::copy(f.begin(), f.end(), out.begin());
        out[kStateDim] = running_cost(x, u, p, w, pop);
        return out;
    };
    Augmented y0{};
    std::copy(x0.begin(), x0.end(), y0.begin());
    const auto traj = integrate_forward<kStateDim + 1>(field, y0, controls.grid());
    return traj.back()[kStateDim];
}

struct GradientCheck {
    double adjoint = 0.0;
    double finite_difference = 0.0;

    [[nodiscard]] double relative_error() const {
        const double scale = std::max(std::abs(adjoint), std::abs(finite_difference));
        return scale == 0.0 ? 0.0 : std::abs(adjoint - finite_difference) / scale;
    }
};

/// Derivative of J with respect to the nodal value u_component(t_node), where
/// the controls are linear between nodes (a hat-function perturbation).
///
/// The adjoint route integrates dH/du against the hat with Simpson's rule on
/// each adjacent interval; the other route is a central difference of
/// integrated_cost with step epsilon.
[[nodiscard]] inline GradientCheck gradient_check(const ModelParams& p, const StateVec& x0, const CostWeights& w,
                                                  const ControlBounds& b, const Trajectory<kControlDim>& controls,
                                                  std::size_t component, std::size_t node, double epsilon,
                                                  const Population& pop,
                                                  AdjointForm form = AdjointForm::state_sum) {
    const auto& grid = controls.grid();
    require(component < kControlDim, ErrorKind::invalid_argument, "control component out of range");
    require(node < grid.size(), ErrorKind::out_of_range, "probe node outside the grid");
    require(epsilon > 0.0, ErrorKind::invalid_argument, "finite-difference step must be positive");
    const double u = controls[node][component];
    if (!(u > b.lower[component] && u < b.upper[component])) {
        std::ostringstream os;
        os << "u" << component + 1 << " = " << u << " sits on its bound at node " << node;
        fail(ErrorKind::probe_at_bound, os.str());
    }

    const auto states = simulate_controlled(p, x0, controls, pop);
    const auto adjoints = solve_adjoint(p, states, controls, w, pop, form);
    auto dh = [&](double t, double hat) {
        const auto g = hamiltonian_control_gradient(states.interpolate(t), controls.interpolate(t),
                                                    adjoints.interpolate(t), p, w, pop);
        return g[component] * hat;
    };

    GradientCheck out;
    const double tn = grid.time(node);
    if (node > 0) {
        const double ta = grid.time(node - 1);
        out.adjoint += (tn - ta) / 6.0 * (4.0 * dh(0.5 * (ta + tn), 0.5) + dh(tn, 1.0));
    }
    if (node + 1 < grid.size()) {
        const double tb = grid.time(node + 1);
        out.adjoint += (tb - tn) / 6.0 * (dh(tn, 1.0) + 4.0 * dh(0.5 * (tn + tb), 0.5));
    }

    auto bumped = [&](double delta) {
        std::vector<ControlVec> u_values = controls.values();
        u_values[node][component] += delta;
        return integrated_cost(p, x0, w, Trajectory<kControlDim>(grid, std::move(u_values)), pop);
    };
    out.finite_difference = (bumped(epsilon) - bumped(-epsilon)) / (2.0 * epsilon);
    return out;
}

/// One CSV with t, the seven states, the seven costates and the three controls.
inline void write_solution_csv(std::ostream& os, const OptimalSolution& sol) {
    os << "t,S,E,I,Q,R,D,P,psi1,psi2,psi3,psi4,psi5,psi6,psi7,u1,u2,u3\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto& grid = sol.states.grid();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        os << grid.time(k);
        for (double v : sol.states[k]) {
            os << ',' << v;
        }
        for (double v : sol.adjoints[k]) {
            os << ',' << v;
        }
        for (double v : sol.controls[k]) {
            os << ',' << v;
        }
        os << '\n';
    }
}

} // namespace epicontrol

#endif
