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

#ifndef EPICONTROL_MODEL_HPP
#define EPICONTROL_MODEL_HPP

// Generalized SEIR-type model with protected (P), quarantined (Q) and
// deceased (D) classes, plus its three-control variant (social distancing,
// preventive means, treatment).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>

#include "epicontrol/errors.hpp"

namespace epicontrol {

template <std::size_t Dim>
using Vec = std::array<double, Dim>;

inline constexpr std::size_t kStateDim = 7;
inline constexpr std::size_t kControlDim = 3;

/// Compartment order used by every state and adjoint vector.
enum Compartment : std::size_t { S = 0, E, I, Q, R, D, P };

inline constexpr std::array<const char*, kStateDim> kCompartmentNames{"S", "E", "I", "Q", "R", "D", "P"};

using StateVec = Vec<kStateDim>;
using AdjointVec = Vec<kStateDim>;
/// (u1, u2, u3): social distancing (dimensionless), preventive means (1/day), treatment (1/day).
using ControlVec = Vec<kControlDim>;

struct ModelParams {
    double alpha = 0.0; ///< protection rate, 1/day
    double beta = 0.0;  ///< infection rate, 1/day
    double gamma = 0.0; ///< inverse mean latent time, 1/day
    double delta = 0.0; ///< quarantine entry rate, 1/day
    std::array<double, 3> lambda{}; ///< recovery rate shape (1/day, 1/day, day)
    std::array<double, 3> kappa{};  ///< mortality rate shape (1/day, 1/day, day)

    void validate() const {
        auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
        const bool ok = nonneg(alpha) && nonneg(beta) && nonneg(gamma) && nonneg(delta) &&
                        std::all_of(lambda.begin(), lambda.end(), nonneg) &&
                        std::all_of(kappa.begin(), kappa.end(), nonneg);
        require(ok, ErrorKind::invalid_argument, "model parameters must be finite and nonnegative");
    }
};

struct ControlBounds {
    ControlVec lower{};
    ControlVec upper{};

    void validate() const {
        for (std::size_t i = 0; i < kControlDim; ++i) {
            require(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] <= upper[i],
                    ErrorKind::invalid_argument, "control bounds need finite lower <= upper for u" + std::to_string(i + 1));
        }
    }

    [[nodiscard]] bool contains(const ControlVec& u) const {
        for (std::size_t i = 0; i < kControlDim; ++i) {
            if (!(u[i] >= lower[i] && u[i] <= upper[i])) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] ControlVec project(const ControlVec& u) const {
        ControlVec out{};
        for (std::size_t i = 0; i < kControlDim; ++i) {
            out[i] = std::clamp(u[i], lower[i], upper[i]);
        }
        return out;
    }

    [[nodiscard]] ControlVec midpoint() const {
        ControlVec out{};
        for (std::size_t i = 0; i < kControlDim; ++i) {
            out[i] = 0.5 * (lower[i] + upper[i]);
        }
        return out;
    }

    /// Bounds pinned to u = (1, 0, 0), under which the controlled model is the uncontrolled one.
    static ControlBounds pinned_to_uncontrolled() { return {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}; }
};

/// Total population N, constant along every trajectory.
class Population {
public:
    explicit Population(double n) : n_(n) {
        require(std::isfinite(n) && n > 0.0, ErrorKind::invalid_argument, "population N must be positive");
    }

    [[nodiscard]] double value() const noexcept { return n_; }

private:
    double n_;
};

[[nodiscard]] inline double total_population(const StateVec& x) noexcept {
    return std::accumulate(x.begin(), x.end(), 0.0);
}

// Exponent arguments are clamped so exploratory parameter values never overflow.
inline constexpr double kMaxExponent = 700.0;

[[nodiscard]] inline double clamped_exp(double a) noexcept {
    return std::exp(std::clamp(a, -kMaxExponent, kMaxExponent));
}

/// Recovery rate: logistic ramp lambda1 / (1 + exp(-lambda2 (t - lambda3))).
[[nodiscard]] inline double lambda_rate(double t, const ModelParams& p) noexcept {
    const auto& [l1, l2, l3] = p.lambda;
    return l1 / (1.0 + clamped_exp(-l2 * (t - l3)));
}

/// Mortality rate: kappa1 / (exp(kappa2 (t - kappa3)) + exp(-kappa2 (t - kappa3))).
[[nodiscard]] inline double kappa_rate(double t, const ModelParams& p) noexcept {
    const auto& [k1, k2, k3] = p.kappa;
    const double a = k2 * (t - k3);
    return k1 / (clamped_exp(a) + clamped_exp(-a));
}

/// Right-hand side of the controlled system. The flows are computed once and
/// shared between donor and receiver compartments so the components sum to zero.
[[nodiscard]] inline StateVec rhs_controlled(double t, const StateVec& x, const ControlVec& u, const ModelParams& p,
                                             const Population& pop) {
    const double n = pop.value();
    const double infection = p.beta * u[0] * x[S] * x[I] / n;
    const double protection = (p.alpha + u[1]) * x[S];
    const double incubation = p.gamma * x[E];
    const double quarantine = p.delta * x[I];
    const double recovery = (lambda_rate(t, p) + u[2]) * x[Q];
    const double death = kappa_rate(t, p) * x[Q];

    return {
        -infection - protection,
        infection - incubation,
        incubation - quarantine,
        quarantine - recovery - death,
        recovery,
        death,
        protection,
    };
}

/// Right-hand side of the uncontrolled system; identical floating-point
/// operations to rhs_controlled at u = (1, 0, 0).
[[nodiscard]] inline StateVec rhs_uncontrolled(double t, const StateVec& x, const ModelParams& p,
                                               const Population& pop) {
    return rhs_controlled(t, x, ControlVec{1.0, 0.0, 0.0}, p, pop);
}

/// Rejects states that went negative beyond integration undershoot (-1e-9 N by default).
inline void check_state(const StateVec& x, const Population& pop, double relative_tolerance = 1e-9) {
    const double floor = -relative_tolerance * pop.value();
    for (std::size_t i = 0; i < kStateDim; ++i) {
        if (!std::isfinite(x[i]) || x[i] < floor) {
            std::ostringstream os;
            os << "compartment " << kCompartmentNames[i] << " = " << x[i] << " violates nonnegativity";
            fail(ErrorKind::invalid_argument, os.str());
        }
    }
}

/// Initial state assembled from observed (Q0, R0, D0), configured P0 and the
/// latent/infectious seeds; S0 absorbs the remainder of N.
[[nodiscard]] inline StateVec make_initial_state(const Population& pop, double e0, double i0, double q0, double r0,
                                                 double d0, double p0) {
    StateVec x{0.0, e0, i0, q0, r0, d0, p0};
    x[S] = pop.value() - (e0 + i0 + q0 + r0 + d0 + p0);
    check_state(x, pop, 0.0);
    return x;
}

} // namespace epicontrol

#endif
