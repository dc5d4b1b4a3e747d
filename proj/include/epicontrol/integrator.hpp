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

#ifndef EPICONTROL_INTEGRATOR_HPP
#define EPICONTROL_INTEGRATOR_HPP

#include <cmath>
#include <concepts>
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
#include "epicontrol/model.hpp"

namespace epicontrol {

/// Uniform grid t0, t0 + h, ..., tf. The last node is tf exactly.
class TimeGrid {
public:
    TimeGrid(double t0, double tf, double h) : t0_(t0), tf_(tf), h_(h) {
        require(std::isfinite(t0) && std::isfinite(tf) && std::isfinite(h), ErrorKind::invalid_argument,
                "time grid bounds must be finite");
        require(tf > t0, ErrorKind::invalid_argument, "time grid needs tf > t0");
        require(h > 0.0, ErrorKind::invalid_argument, "time grid needs a positive step");
        const double steps = (tf - t0) / h;
        const double rounded = std::round(steps);
        if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded) || rounded < 1.0) {
            std::ostringstream os;
            os << "step " << h << " does not divide [" << t0 << ", " << tf << "]";
            fail(ErrorKind::invalid_argument, os.str());
        }
        nodes_ = static_cast<std::size_t>(rounded) + 1;
    }

    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] double tf() const noexcept { return tf_; }
    [[nodiscard]] double step() const noexcept { return h_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t intervals() const noexcept { return nodes_ - 1; }

    [[nodiscard]] double time(std::size_t k) const noexcept {
        return k + 1 == nodes_ ? tf_ : t0_ + static_cast<double>(k) * h_;
    }

    [[nodiscard]] bool contains(double t, double slack = 1e-9) const noexcept {
        return t >= t0_ - slack && t <= tf_ + slack;
    }

    /// Index of the node nearest to t.
    [[nodiscard]] std::size_t nearest(double t) const noexcept {
        const double k = std::round((t - t0_) / h_);
        if (k <= 0.0) {
            return 0;
        }
        return std::min(static_cast<std::size_t>(k), nodes_ - 1);
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.t0_ == b.t0_ && a.tf_ == b.tf_ && a.h_ == b.h_;
    }

private:
    double t0_;
    double tf_;
    double h_;
    std::size_t nodes_ = 0;
};

template <std::size_t Dim>
class Trajectory {
public:
    Trajectory(TimeGrid grid, std::vector<Vec<Dim>> values, std::optional<std::vector<Vec<Dim>>> derivatives = {})
        : grid_(std::move(grid)), values_(std::move(values)), derivatives_(std::move(derivatives)) {
        require(values_.size() == grid_.size(), ErrorKind::invalid_argument,
                "trajectory value count does not match the grid");
        if (derivatives_) {
            require(derivatives_->size() == grid_.size(), ErrorKind::invalid_argument,
                    "trajectory derivative count does not match the grid");
        }
    }

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] const Vec<Dim>& operator[](std::size_t k) const { return values_[k]; }
    [[nodiscard]] const std::vector<Vec<Dim>>& values() const noexcept { return values_; }
    [[nodiscard]] const Vec<Dim>& front() const { return values_.front(); }
    [[nodiscard]] const Vec<Dim>& back() const { return values_.back(); }
    [[nodiscard]] bool has_derivatives() const noexcept { return derivatives_.has_value(); }
    [[nodiscard]] const std::vector<Vec<Dim>>& derivatives() const { return *derivatives_; }

    /// Dense output: cubic Hermite on node values and derivatives when they are
    /// stored, piecewise linear otherwise (control trajectories). Exact at nodes.
    [[nodiscard]] Vec<Dim> interpolate(double t) const {
        if (!grid_.contains(t)) {
            std::ostringstream os;
            os << "time " << t << " outside [" << grid_.t0() << ", " << grid_.tf() << "]";
            fail(ErrorKind::out_of_range, os.str());
        }
        const double h = grid_.step();
        const double pos = (t - grid_.t0()) / h;
        std::size_t k = pos <= 0.0 ? 0 : static_cast<std::size_t>(pos);
        k = std::min(k, grid_.intervals() - 1);
        const double ta = grid_.time(k);
        const double tb = grid_.time(k + 1);
        if (t <= ta) {
            return values_[k];
        }
        if (t >= tb) {
            return values_[k + 1];
        }
        const double width = tb - ta;
        const double s = (t - ta) / width;
        const auto& ya = values_[k];
        const auto& yb = values_[k + 1];
        Vec<Dim> out{};
        if (!derivatives_) {
            for (std::size_t i = 0; i < Dim; ++i) {
                out[i] = ya[i] + s * (yb[i] - ya[i]);
            }
            return out;
        }
        const auto& da = (*derivatives_)[k];
        const auto& db = (*derivatives_)[k + 1];
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        for (std::size_t i = 0; i < Dim; ++i) {
            out[i] = h00 * ya[i] + h10 * width * da[i] + h01 * yb[i] + h11 * width * db[i];
        }
        return out;
    }

private:
    TimeGrid grid_;
    std::vector<Vec<Dim>> values_;
    std::optional<std::vector<Vec<Dim>>> derivatives_;
};

template <typename F, std::size_t Dim>
concept VectorField = std::invocable<F&, double, const Vec<Dim>&> &&
                      std::convertible_to<std::invoke_result_t<F&, double, const Vec<Dim>&>, Vec<Dim>>;

namespace detail {

template <std::size_t Dim>
[[nodiscard]] inline Vec<Dim> axpy(const Vec<Dim>& x, double a, const Vec<Dim>& y) noexcept {
    Vec<Dim> out{};
    for (std::size_t i = 0; i < Dim; ++i) {
        out[i] = x[i] + a * y[i];
    }
    return out;
}

template <std::size_t Dim>
inline void check_finite(const Vec<Dim>& v, double t, const char* what) {
    for (double c : v) {
        if (!std::isfinite(c)) {
            std::ostringstream os;
            os << "non-finite " << what << " at t = " << t;
            throw NonFiniteStateError(t, os.str());
        }
    }
}

// One classical RK4 step of signed length h; k1 = f(t, y) is supplied by the caller.
template <std::size_t Dim, typename F>
[[nodiscard]] Vec<Dim> rk4_step(F& f, double t, const Vec<Dim>& y, const Vec<Dim>& k1, double h) {
    const double half = 0.5 * h;
    const Vec<Dim> k2 = f(t + half, axpy(y, half, k1));
    check_finite(k2, t + half, "stage value");
    const Vec<Dim> k3 = f(t + half, axpy(y, half, k2));
    check_finite(k3, t + half, "stage value");
    const Vec<Dim> k4 = f(t + h, axpy(y, h, k3));
    check_finite(k4, t + h, "stage value");
    Vec<Dim> out{};
    const double sixth = h / 6.0;
    for (std::size_t i = 0; i < Dim; ++i) {
        out[i] = y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

} // namespace detail

/// Classical fixed-step RK4 from t0 to tf. Node derivatives are kept for dense output.
template <std::size_t Dim, typename F>
    requires VectorField<F, Dim>
[[nodiscard]] Trajectory<Dim> integrate_forward(F&& rhs, const Vec<Dim>& x0, const TimeGrid& grid) {
    detail::check_finite(x0, grid.t0(), "initial value");
    const std::size_t n = grid.size();
    std::vector<Vec<Dim>> values(n);
    std::vector<Vec<Dim>> slopes(n);
    values[0] = x0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double t = grid.time(k);
        slopes[k] = rhs(t, values[k]);
        detail::check_finite(slopes[k], t, "derivative");
        values[k + 1] = detail::rk4_step<Dim>(rhs, t, values[k], slopes[k], grid.time(k + 1) - t);
        detail::check_finite(values[k + 1], grid.time(k + 1), "state");
    }
    slopes[n - 1] = rhs(grid.tf(), values[n - 1]);
    detail::check_finite(slopes[n - 1], grid.tf(), "derivative");
    return Trajectory<Dim>(grid, std::move(values), std::move(slopes));
}

/// RK4 from tf down to t0 with a negative step; results are stored in forward node order.
template <std::size_t Dim, typename F>
    requires VectorField<F, Dim>
[[nodiscard]] Trajectory<Dim> integrate_backward(F&& rhs, const Vec<Dim>& terminal, const TimeGrid& grid) {
    detail::check_finite(terminal, grid.tf(), "terminal value");
    const std::size_t n = grid.size();
    std::vector<Vec<Dim>> values(n);
    std::vector<Vec<Dim>> slopes(n);
    values[n - 1] = terminal;
    for (std::size_t k = n - 1; k > 0; --k) {
        const double t = grid.time(k);
        slopes[k] = rhs(t, values[k]);
        detail::check_finite(slopes[k], t, "derivative");
        values[k - 1] = detail::rk4_step<Dim>(rhs, t, values[k], slopes[k], grid.time(k - 1) - t);
        detail::check_finite(values[k - 1], grid.time(k - 1), "state");
    }
    slopes[0] = rhs(grid.t0(), values[0]);
    detail::check_finite(slopes[0], grid.t0(), "derivative");
    return Trajectory<Dim>(grid, std::move(values), std::move(slopes));
}

/// CSV with a leading t column followed by one column per component.
template <std::size_t Dim>
void write_csv(std::ostream& os, const Trajectory<Dim>& traj, const std::array<const char*, Dim>& names) {
    os << "t";
    for (const char* name : names) {
        os << ',' << name;
    }
    os << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << traj.grid().time(k);
        for (double v : traj[k]) {
            os << ',' << v;
        }
        os << '\n';
    }
}

} // namespace epicontrol

#endif
