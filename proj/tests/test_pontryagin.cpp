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

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "epicontrol/pontryagin.hpp"
#include "oracles.hpp"

using namespace epicontrol;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const ControlBounds kItalyBounds{{0.1, 0.0, 0.0}, {1.0, 1.0, 1.0}};
const CostWeights kUnitWeights{};

struct Sample {
    double t;
    StateVec x;
    ControlVec u;
    AdjointVec psi;
    CostWeights w;
};

Sample random_sample(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    Sample s{};
    s.t = 90.0 * unit(rng);
    double rest = 0.0;
    for (std::size_t i = 1; i < kStateDim; ++i) {
        s.x[i] = 1e6 * unit(rng);
        rest += s.x[i];
    }
    s.x[S] = oracle::kItalyN - rest;
    s.u = {0.1 + 0.9 * unit(rng), unit(rng), unit(rng)};
    for (auto& v : s.psi) {
        v = sym(rng);
    }
    s.w = {unit(rng), unit(rng), unit(rng), 0.5 + unit(rng), 0.5 + unit(rng), 0.5 + unit(rng)};
    return s;
}

const OptimalSolution& italy_solution() {
    static const OptimalSolution sol = [] {
        const Population pop{oracle::kItalyN};
        return solve_fbsm(oracle::published_params(), oracle::sept1_state(), kUnitWeights, kItalyBounds,
                          TimeGrid(0.0, 90.0, 0.1), FbsmOptions{}, pop);
    }();
    return sol;
}

} // namespace

TEST_CASE("cost: trivial integrands", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const TimeGrid g(0.0, 12.0, 0.1);
    const auto zero_u = constant_controls(g, ControlVec{});
    const Trajectory<kStateDim> zero_x(g, std::vector<StateVec>(g.size(), StateVec{}));
    CHECK(cost(zero_x, zero_u, kUnitWeights, p, pop) == 0.0);

    const double c = 1234.5;
    const Trajectory<kStateDim> flat_r(g, std::vector<StateVec>(g.size(), StateVec{0, 0, 0, 0, c, 0, 0}));
    CHECK_THAT(cost(flat_r, zero_u, CostWeights{0, 1, 0, 1, 1, 1}, p, pop), WithinRel(-c * 12.0, 1e-13));
    const TimeGrid odd(0.0, 12.1, 0.1);
    const Trajectory<kStateDim> flat_odd(odd, std::vector<StateVec>(odd.size(), StateVec{0, 0, 0, 0, c, 0, 0}));
    CHECK_THAT(cost(flat_odd, constant_controls(odd, ControlVec{}), CostWeights{0, 1, 0, 1, 1, 1}, p, pop),
               WithinRel(-c * 12.1, 1e-13));

    const TimeGrid other(0.0, 12.0, 0.2);
    CHECK_THROWS_AS(cost(zero_x, constant_controls(other, ControlVec{}), kUnitWeights, p, pop), Error);
}

TEST_CASE("cost of the Italy extremal agrees with independent quadratures", "[pontryagin]") {
    const auto& sol = italy_solution();
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const auto& g = sol.states.grid();
    // Simpson's rule written out over the even interval count.
    REQUIRE(g.intervals() % 2 == 0);
    long double simpson = 0.0L;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double weight = (k == 0 || k + 1 == g.size()) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        simpson += weight * running_cost(sol.states[k], sol.controls[k], p, kUnitWeights, pop);
    }
    simpson *= g.step() / 3.0;
    CHECK_THAT(sol.cost, WithinRel(static_cast<double>(simpson), 1e-6));
    const double along = integrated_cost(p, oracle::sept1_state(), kUnitWeights, sol.controls, pop);
    CHECK_THAT(sol.cost, WithinRel(along, 1e-6));
}

TEST_CASE("hamiltonian: trivial cases", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const auto x = oracle::sept1_state();
    CHECK(hamiltonian(x, ControlVec{}, AdjointVec{}, 4.0, p, CostWeights::zero_objective(), pop) == 0.0);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_sample(rng);
        const auto f = rhs_uncontrolled(s.t, s.x, p, pop);
        double inner = 0.0;
        for (std::size_t i = 0; i < kStateDim; ++i) {
            inner += s.psi[i] * f[i];
        }
        const double h = hamiltonian(s.x, ControlVec{1, 0, 0}, s.psi, s.t, p, s.w, pop);
        const double running = running_cost(s.x, ControlVec{1, 0, 0}, p, s.w, pop);
        CHECK_THAT(h - running, WithinAbs(inner, 1e-9 * (1.0 + std::abs(inner))));
    }
}

TEST_CASE("hamiltonian matches the matrix form", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_sample(rng);
        const double h = hamiltonian(s.x, s.u, s.psi, s.t, p, s.w, pop);
        const auto full = oracle::matrix_hamiltonian(s.t, s.x, s.u, s.psi, p, s.w, oracle::kItalyN, false);
        CHECK_THAT(h, WithinRel(static_cast<double>(full), 1e-10));

        // As typeset, b1 has no entry in the P row, so the u2 x1 inflow to P is
        // missing from psi^T f. The difference is exactly that term.
        const auto typeset = oracle::matrix_hamiltonian(s.t, s.x, s.u, s.psi, p, s.w, oracle::kItalyN, true);
        const long double missing = static_cast<long double>(s.psi[P]) * s.u[1] * s.x[S];
        CHECK_THAT(static_cast<double>(full - typeset), WithinRel(static_cast<double>(missing), 1e-9));
    }
}

TEST_CASE("hamiltonian_control_gradient is dH/du", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_sample(rng);
        const auto g = hamiltonian_control_gradient(s.x, s.u, s.psi, p, s.w, pop);
        for (std::size_t i = 0; i < kControlDim; ++i) {
            ControlVec up = s.u, dn = s.u;
            up[i] += 1e-3;
            dn[i] -= 1e-3;
            const double fd = (hamiltonian(s.x, up, s.psi, s.t, p, s.w, pop) -
                               hamiltonian(s.x, dn, s.psi, s.t, p, s.w, pop)) / 2e-3;
            CHECK_THAT(g[i], WithinAbs(fd, 1e-6 * (1.0 + std::abs(fd)) + 1e-9 * std::abs(hamiltonian(s.x, s.u, s.psi, s.t, p, s.w, pop))));
        }
    }
}

TEST_CASE("adjoint_rhs: read-off cases", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const auto x = oracle::sept1_state();
    for (auto form : {AdjointForm::state_sum, AdjointForm::printed, AdjointForm::constant_n}) {
        const AdjointVec psi{0.3, -0.2, 0.5, 0.1, -0.4, 0.7, 0.2};
        const auto quiet = adjoint_rhs(12.0, psi, x, ControlVec{0, 0.4, 0.6}, p, CostWeights::zero_objective(), pop, form);
        CHECK(quiet[R] == 0.0);
        CHECK(quiet[D] == 0.0);
        CHECK(quiet[P] == 0.0);

        const auto r_only = adjoint_rhs(12.0, AdjointVec{}, x, ControlVec{0.5, 0.4, 0.6}, p,
                                        CostWeights{0, 1, 0, 1, 1, 1}, pop, form);
        CHECK(r_only[R] == 1.0);
        CHECK(r_only[D] == 0.0);
    }
}

TEST_CASE("adjoint_rhs printed form matches a transcription of the typeset equations", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_sample(rng);
        const auto got = adjoint_rhs(s.t, s.psi, s.x, s.u, p, s.w, pop, AdjointForm::printed);
        const auto want = oracle::printed_adjoint(s.t, s.psi, s.x, s.u, p, s.w, oracle::kItalyN);
        for (std::size_t i = 0; i < kStateDim; ++i) {
            CHECK_THAT(got[i], WithinAbs(static_cast<double>(want[i]), 1e-12 * (1.0 + std::abs(static_cast<double>(want[i])))));
        }
    }
}

TEST_CASE("adjoint_rhs state-sum and constant-N forms are -dH/dx", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_sample(rng);
        const auto sum_form = adjoint_rhs(s.t, s.psi, s.x, s.u, p, s.w, pop, AdjointForm::state_sum);
        const auto fixed_form = adjoint_rhs(s.t, s.psi, s.x, s.u, p, s.w, pop, AdjointForm::constant_n);
        const auto fd_sum = oracle::numerical_adjoint(s.t, s.psi, s.x, s.u, p, s.w, oracle::kItalyN, true);
        const auto fd_fixed = oracle::numerical_adjoint(s.t, s.psi, s.x, s.u, p, s.w, oracle::kItalyN, false);
        for (std::size_t i = 0; i < kStateDim; ++i) {
            CHECK_THAT(sum_form[i], WithinAbs(static_cast<double>(fd_sum[i]), 1e-7 * (1.0 + std::abs(sum_form[i]))));
            CHECK_THAT(fixed_form[i], WithinAbs(static_cast<double>(fd_fixed[i]), 1e-7 * (1.0 + std::abs(fixed_form[i]))));
        }
        // The two forms differ by a common shift, invisible to the control law.
        const double shift = sum_form[0] - fixed_form[0];
        for (std::size_t i = 1; i < kStateDim; ++i) {
            CHECK_THAT(sum_form[i] - fixed_form[i], WithinAbs(shift, 1e-12 * (1.0 + std::abs(sum_form[i]))));
        }
    }
}

TEST_CASE("adjoint forms: state-sum and constant-N give the same controls, printed does not", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const TimeGrid g(0.0, 30.0, 0.1);
    const auto controls = constant_controls(g, ControlVec{0.5, 0.5, 0.5});
    const auto states = simulate_controlled(p, oracle::sept1_state(), controls, pop);
    const auto a = solve_adjoint(p, states, controls, kUnitWeights, pop, AdjointForm::state_sum);
    const auto b = solve_adjoint(p, states, controls, kUnitWeights, pop, AdjointForm::constant_n);
    const auto c = solve_adjoint(p, states, controls, kUnitWeights, pop, AdjointForm::printed);
    double worst_sum_fixed = 0.0;
    double worst_sum_printed = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto ua = unclipped_control(states[k], a[k], p, kUnitWeights, pop);
        const auto ub = unclipped_control(states[k], b[k], p, kUnitWeights, pop);
        const auto uc = unclipped_control(states[k], c[k], p, kUnitWeights, pop);
        for (std::size_t i = 0; i < kControlDim; ++i) {
            worst_sum_fixed = std::max(worst_sum_fixed, std::abs(ua[i] - ub[i]) / (1.0 + std::abs(ua[i])));
            worst_sum_printed = std::max(worst_sum_printed, std::abs(ua[i] - uc[i]) / (1.0 + std::abs(ua[i])));
        }
    }
    CHECK(worst_sum_fixed <= 1e-8);
    CHECK(worst_sum_printed > 1e-6);
}

TEST_CASE("control_update", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const auto x = oracle::sept1_state();
    const CostWeights no_w1{0, 1, 1, 1, 1, 1};
    CHECK(unclipped_control(x, AdjointVec{}, p, no_w1, pop) == ControlVec{0, 0, 0});
    CHECK(control_update(x, AdjointVec{}, p, no_w1, kItalyBounds, pop) == ControlVec{0.1, 0, 0});

    StateVec empty_sq = x;
    empty_sq[S] = 0.0;
    empty_sq[Q] = 0.0;
    const AdjointVec psi{3.0, -1.0, 2.0, 5.0, -2.0, 1.0, -4.0};
    CHECK(unclipped_control(empty_sq, psi, p, kUnitWeights, pop) == ControlVec{0, 0, 0});

    const auto u = unclipped_control(x, psi, p, kUnitWeights, pop);
    CHECK_THAT(u[0], WithinRel(p.beta * x[S] * x[I] * (psi[0] - psi[1] - 1.0) / oracle::kItalyN, 1e-14));
    CHECK_THAT(u[1], WithinRel(x[S] * (psi[0] - psi[6]), 1e-14));
    CHECK_THAT(u[2], WithinRel(x[Q] * (psi[3] - psi[4]), 1e-14));
}

TEST_CASE("control_update minimises H over the box", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> tiny(0.0, 1e-6);
    for (int trial = 0; trial < 100; ++trial) {
        auto s = random_sample(rng);
        // Small costates keep the stationary point near the box so both
        // clipped and interior cases occur.
        for (auto& v : s.psi) {
            v = tiny(rng);
        }
        const auto u_star = control_update(s.x, s.psi, p, s.w, kItalyBounds, pop);
        REQUIRE(kItalyBounds.contains(u_star));
        const double h_star = hamiltonian(s.x, u_star, s.psi, s.t, p, s.w, pop);
        for (int k = 0; k < 1000; ++k) {
            const ControlVec u{0.1 + 0.9 * unit(rng), unit(rng), unit(rng)};
            CHECK(h_star <= hamiltonian(s.x, u, s.psi, s.t, p, s.w, pop) + 1e-8 * (1.0 + std::abs(h_star)));
        }
    }
}

TEST_CASE("solve_fbsm: pinned bounds reproduce the uncontrolled model", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const TimeGrid g(0.0, 90.0, 0.1);
    const auto sol = solve_fbsm(p, oracle::sept1_state(), kUnitWeights, ControlBounds::pinned_to_uncontrolled(), g,
                                FbsmOptions{}, pop);
    CHECK(sol.converged);
    CHECK(sol.iterations == 1);
    const auto free_run = integrate_forward(
        [&](double t, const StateVec& x) { return rhs_uncontrolled(t, x, p, pop); }, oracle::sept1_state(), g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        for (std::size_t i = 0; i < kStateDim; ++i) {
            CHECK(std::abs(sol.states[k][i] - free_run[k][i]) <= 1e-12 * std::abs(free_run[k][i]));
        }
        CHECK(sol.controls[k] == ControlVec{1, 0, 0});
    }
}

TEST_CASE("solve_fbsm: zero objective weights give zero controls", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const ControlBounds box{{0, 0, 0}, {1, 1, 1}};
    const auto sol = solve_fbsm(p, oracle::sept1_state(), CostWeights::zero_objective(), box,
                                TimeGrid(0.0, 30.0, 0.1), FbsmOptions{}, pop);
    CHECK(sol.converged);
    for (std::size_t k = 0; k < sol.controls.size(); ++k) {
        CHECK(sol.controls[k] == ControlVec{0, 0, 0});
        CHECK(sol.adjoints[k] == AdjointVec{});
    }
}

TEST_CASE("solve_fbsm: Italy scenario", "[pontryagin]") {
    const auto& sol = italy_solution();
    const auto& g = sol.states.grid();
    REQUIRE(sol.converged);
    CHECK(sol.iterations <= 500);
    CHECK(sol.adjoints.back() == AdjointVec{});

    for (std::size_t k = 0; k < g.size(); ++k) {
        const double t = g.time(k);
        const auto& u = sol.controls[k];
        REQUIRE(kItalyBounds.contains(u));
        CHECK(u[0] == 0.1);
        if (t <= 18.0) {
            CHECK(u[1] == 1.0);
        }
        if (t < 89.0 + 1e-9) {
            CHECK(u[2] == 1.0);
        }
    }
    // preventive means leave the upper bound shortly before Sept 20 and fade out
    std::size_t release = 0;
    while (release < g.size() && sol.controls[release][1] == 1.0) {
        ++release;
    }
    CHECK(g.time(release) > 17.0);
    CHECK(g.time(release) < 21.0);
    for (std::size_t k = release + 1; k < g.size(); ++k) {
        CHECK(sol.controls[k][1] <= sol.controls[k - 1][1] + 1e-12);
    }
    CHECK(sol.controls.interpolate(89.5)[1] < 0.01);
    CHECK(sol.controls.back()[2] == 0.0);

    for (std::size_t i = 1; i < sol.history.size(); ++i) {
        const auto& a = sol.history[i - 1];
        const auto& b = sol.history[i];
        CHECK(b.cost <= a.cost + 1e-4 * std::abs(a.cost));
    }
}

TEST_CASE("solve_fbsm: non-convergence is a flag", "[pontryagin]") {
    FbsmOptions opts;
    opts.relaxation = 1.0;
    opts.min_relaxation = 1.0;
    opts.tolerance = 1e-14;
    opts.max_iterations = 2;
    const auto sol = solve_fbsm(oracle::published_params(), oracle::sept1_state(), kUnitWeights, kItalyBounds,
                                TimeGrid(0.0, 90.0, 0.1), opts, Population{oracle::kItalyN});
    CHECK_FALSE(sol.converged);
    CHECK(sol.iterations == 2);
    for (std::size_t k = 0; k < sol.controls.size(); ++k) {
        CHECK(kItalyBounds.contains(sol.controls[k]));
    }
}

TEST_CASE("FbsmOptions and CostWeights validation", "[pontryagin]") {
    FbsmOptions o;
    o.relaxation = 0.0;
    CHECK_THROWS_AS(o.validate(), Error);
    o = FbsmOptions{};
    o.max_iterations = 0;
    CHECK_THROWS_AS(o.validate(), Error);
    CHECK_THROWS_AS((CostWeights{1, 1, 1, 0, 1, 1}.validate()), Error);
    CHECK(parse_adjoint_form("printed") == AdjointForm::printed);
    CHECK(parse_adjoint_form("constant-n") == AdjointForm::constant_n);
    CHECK_THROWS_AS(parse_adjoint_form("other"), Error);
}

TEST_CASE("gradient_check", "[pontryagin]") {
    const auto p = oracle::published_params();
    const Population pop{oracle::kItalyN};
    const TimeGrid g(0.0, 10.0, 0.5);
    const auto x0 = oracle::sept1_state();
    const auto mid = constant_controls(g, ControlVec{0.5, 0.5, 0.5});

    SECTION("adjoint and finite-difference gradients agree at interior probes") {
        for (std::size_t component = 0; component < kControlDim; ++component) {
            for (std::size_t node : {1u, 7u, 12u, 19u}) {
                const auto r = gradient_check(p, x0, kUnitWeights, kItalyBounds, mid, component, node, 1e-4, pop);
                INFO("u" << component + 1 << " node " << node << " adjoint " << r.adjoint << " fd "
                         << r.finite_difference);
                CHECK(r.relative_error() <= 1e-3);
            }
        }
    }

    SECTION("probe on a bound is rejected") {
        const auto at_floor = constant_controls(g, ControlVec{0.1, 0.5, 0.5});
        try {
            (void)gradient_check(p, x0, kUnitWeights, kItalyBounds, at_floor, 0, 4, 1e-4, pop);
            FAIL("expected probe-at-bound");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::probe_at_bound);
        }
    }

    SECTION("stationary probe and descent direction") {
        // Zero weights and zero controls: psi = 0 and dH/du = v u = 0 at u = 0;
        // the box is widened so u = 0 is interior.
        const ControlBounds wide{{-1, -1, -1}, {1, 1, 1}};
        const auto zero = constant_controls(g, ControlVec{0, 0, 0});
        const auto r = gradient_check(p, x0, CostWeights::zero_objective(), wide, zero, 1, 6, 1e-4, pop);
        CHECK(std::abs(r.adjoint) <= 1e-12);
        CHECK(std::abs(r.finite_difference) <= 1e-6);

        const auto probe = gradient_check(p, x0, kUnitWeights, kItalyBounds, mid, 0, 8, 1e-4, pop);
        REQUIRE(probe.adjoint > 0.0);
        std::vector<ControlVec> lowered = mid.values();
        lowered[8][0] -= 0.01;
        const double j0 = integrated_cost(p, x0, kUnitWeights, mid, pop);
        const double j1 = integrated_cost(p, x0, kUnitWeights, Trajectory<kControlDim>(g, lowered), pop);
        CHECK(j1 < j0);
    }
}

TEST_CASE("write_solution_csv layout", "[pontryagin]") {
    const auto& sol = italy_solution();
    std::ostringstream os;
    write_solution_csv(os, sol);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,S,E,I,Q,R,D,P,psi1,psi2,psi3,psi4,psi5,psi6,psi7,u1,u2,u3");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == sol.states.size());
}
