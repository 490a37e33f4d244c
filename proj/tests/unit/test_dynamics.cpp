#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/oracles.hpp"

using namespace noonsim;

namespace {

TimeGrid grid(double t_end, std::size_t n) {
    TimeGrid g;
    g.t_end = t_end;
    g.n_points = n;
    return g;
}

StateVector excite(const SpacePtr& space, std::initializer_list<const char*> labels) {
    BasisState s{std::vector<int>(space->layout().size(), 0)};
    for (const char* l : labels) s.occupations[space->layout().require(l)] += 1;
    return basis_vector(space, s);
}

}  // namespace

TEST_CASE("closed single subsystem: emitter population follows cos^2(sqrt2 g t)", "[dynamics]") {
    const double g = 1.0;
    const auto space = make_space(SlotLayout::array(1), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(1, 0.0, 0.0, g, 0.0), space);
    const auto psi0 = excite(space, {"s1"});
    const auto sol = propagate_nojump(ops, psi0, grid(10.0, 501));
    const auto idx = static_cast<Eigen::Index>(space->index_of(BasisState{{1, 0, 0}}));
    double worst = 0.0;
    for (const auto& s : sol.states) {
        const double expect = std::pow(std::cos(std::sqrt(2.0) * g * s.time), 2);
        worst = std::max(worst, std::abs(std::norm(s.amplitudes(idx)) - expect));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("no-jump propagation agrees with the matrix exponential", "[dynamics]") {
    auto cfg = SchemeIConfig::uniform(2, 0.0, 0.5, Complex(1.0, 0.3), 0.4, 0.2);
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(cfg, space);
    const auto psi0 = excite(space, {"s1"});
    const auto sol = propagate_nojump(ops, psi0, grid(6.0, 13));
    const CMatrix h(ops.h_nh);
    for (const auto& s : sol.states)
        CHECK((s.amplitudes - oracle::expm_evolve(h, psi0.amplitudes, s.time)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("RK4 fallback agrees with the adaptive integrator", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(2, 0.0, 0.5, 1.0, 0.3), space);
    const auto psi0 = excite(space, {"s2"});
    auto g1 = grid(4.0, 9), g2 = g1;
    g2.stepper = Stepper::Rk4;
    g2.rk4_step = 1e-3;
    const auto a = propagate_nojump(ops, psi0, g1);
    const auto b = propagate_nojump(ops, psi0, g2);
    for (std::size_t k = 0; k < a.states.size(); ++k)
        CHECK((a.states[k].amplitudes - b.states[k].amplitudes).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("single decaying photon: |c|^2 = exp(-kappa t)", "[dynamics]") {
    const double kappa = 0.8;
    const auto space = make_space(SlotLayout::array(1), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(1, 0.0, 0.0, 0.0, kappa), space);
    const auto psi0 = excite(space, {"a1"});
    for (const auto& s : propagate_nojump(ops, psi0, grid(5.0, 11)).states)
        CHECK(s.norm_squared() == Catch::Approx(std::exp(-kappa * s.time)).epsilon(1e-9));
}

TEST_CASE("zero Hamiltonian leaves the state unchanged", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(2, 0.0, 0.0, 0.0, 0.0), space);
    const auto psi0 = excite(space, {"a3"});
    for (const auto& s : propagate_nojump(ops, psi0, grid(3.0, 4)).states) CHECK(s.amplitudes == psi0.amplitudes);
}

TEST_CASE("no-jump preconditions", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(1), 2);
    const auto ops = build_operators(SchemeIConfig::uniform(1, 0.0, 0.0, 1.0, 0.0), space);
    auto mixed = excite(space, {"s1"});
    mixed.amplitudes(0) = 1.0;
    mixed.amplitudes /= mixed.amplitudes.norm();
    CHECK_THROWS_AS(propagate_nojump(ops, mixed, grid(1.0, 2)), Error);
    auto unnormalized = excite(space, {"s1"});
    unnormalized.amplitudes *= 2.0;
    CHECK_THROWS_AS(propagate_nojump(ops, unnormalized, grid(1.0, 2)), Error);
    const auto other = make_space(SlotLayout::array(1), 1);
    CHECK_THROWS_AS(propagate_nojump(ops, excite(other, {"s1"}), grid(1.0, 2)), BasisError);
    CHECK_THROWS_AS(grid(1.0, 1).times(), ConfigError);
    CHECK_THROWS_AS(grid(-1.0, 3).times(), ConfigError);
}

TEST_CASE("integrator reports an unmet tolerance", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(1), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(1, 0.0, 0.0, 50.0, 0.0), space);
    auto g = grid(10.0, 2);
    g.tol.max_steps = 20;
    CHECK_THROWS_AS(propagate_nojump(ops, excite(space, {"s1"}), g), NumericalError);
}

TEST_CASE("norm decay and its rate", "[dynamics]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 1.5);
    for (int trial = 0; trial < 4; ++trial) {
        auto cfg = SchemeIConfig::uniform(2, u(rng) - 0.7, u(rng) - 0.7, Complex(u(rng), u(rng) - 0.7), u(rng),
                                          u(rng), 0.2 * u(rng));
        const auto space = make_space(SlotLayout::array(2), 1);
        const auto ops = build_operators(cfg, space);
        const auto psi0 = excite(space, {trial % 2 ? "s1" : "a2"});
        const double h = 1e-3;
        const auto sol = propagate_nojump(ops, psi0, grid(5.0, 5001));
        double prev = 1.0 + 1e-15;
        for (std::size_t k = 199; k + 2 < sol.states.size(); k += 400) {
            const auto& mid = sol.states[k + 1];
            CHECK(mid.norm_squared() <= prev);
            prev = mid.norm_squared();
            const double fd = (sol.states[k + 2].norm_squared() - sol.states[k].norm_squared()) / (2 * h);
            double rate = 0.0;
            for (const auto& j : ops.jumps) rate += (j.op * mid.amplitudes).squaredNorm();
            CHECK(std::abs(fd + rate) <= 1e-6 * std::max(1.0, rate));
        }
    }
}

TEST_CASE("closed system keeps unit norm", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(2, 0.0, 0.5, 1.0, 0.0, 0.4), space);
    auto g = grid(6.0, 31);
    g.tol.rtol = 1e-12;
    g.tol.atol = 1e-14;
    for (const auto& s : propagate_nojump(ops, excite(space, {"s1"}), g).states) {
        CHECK(std::abs(s.norm_squared() - 1.0) <= 1e-10);
        CHECK(ground_population(s) <= 1e-10);
    }
}

TEST_CASE("ground population", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(2, 0.0, 0.5, 1.0, 1.0), space);
    const auto psi0 = excite(space, {"s1"});
    CHECK(ground_population(psi0) == 0.0);
    // The slowest eigenmode decays at about 0.02 kappa, so the limit needs t of order 1e3 / kappa.
    const auto sol = propagate_nojump(ops, psi0, grid(2000.0, 3));
    CHECK(ground_population(sol.states.back()) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("single-excitation density assembly agrees with the master equation", "[dynamics]") {
    auto cfg = SchemeIConfig::uniform(2, 0.0, 0.5, Complex(1.0, -0.2), 0.6, 0.3);
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(cfg, space);
    const auto psi0 = excite(space, {"s1"});
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    std::vector<double> times(20);
    for (auto& t : times) t = u(rng);
    std::sort(times.begin(), times.end());

    std::vector<StateVector> nj(times.size());
    std::vector<CMatrix> me(times.size());
    const CMatrix gen = Complex(0.0, -1.0) * CMatrix(ops.h_nh);
    Tolerance tol;
    integrate_dopri5([&](double, const CVector& y, CVector& dy) { dy.noalias() = gen * y; }, psi0.amplitudes, 0.0,
                     std::span<const double>(times), tol,
                     [&](std::size_t k, double t, const CVector& y) { nj[k] = StateVector{space, y, t}; });
    integrate_dopri5([&](double, const CMatrix& r, CMatrix& dr) { dr = master_rhs(ops, r); },
                     CMatrix(pure_density(psi0).matrix), 0.0, std::span<const double>(times), tol,
                     [&](std::size_t k, double, const CMatrix& r) { me[k] = r; });
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto rho = assemble_density_single_excitation(nj[k]);
        CHECK(rho.trace() == Catch::Approx(1.0).epsilon(1e-14));
        CHECK((rho.matrix - me[k]).cwiseAbs().maxCoeff() <= 1e-8);
    }
    CHECK((assemble_density_single_excitation(psi0).matrix - pure_density(psi0).matrix).cwiseAbs().maxCoeff() == 0.0);
    const auto two = make_space(SlotLayout::array(2), 2);
    CHECK_THROWS_AS(assemble_density_single_excitation(excite(two, {"s1", "s2"})), Error);
}

TEST_CASE("closed system: density stays pure", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(2), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(2, 0.0, 0.5, 1.0, 0.0, 0.3), space);
    const auto psi0 = excite(space, {"s1"});
    auto g = grid(5.0, 6);
    g.tol.rtol = 1e-12;
    g.tol.atol = 1e-14;
    const auto sol = master_solve(ops, pure_density(psi0), g);
    const CMatrix h(ops.h_sys);
    for (const auto& r : sol.states) {
        CHECK(std::abs(r.purity() - 1.0) <= 1e-10);
        const CVector psi = oracle::expm_evolve(h, psi0.amplitudes, r.time);
        CHECK((r.matrix - psi * psi.adjoint()).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("master equation: damped mode occupation", "[dynamics]") {
    const double kappa = 0.7;
    const auto space = make_space(SlotLayout::array(1), 2);
    const auto ops = build_operators(SchemeIConfig::uniform(1, 0.0, 0.0, 0.0, kappa), space);
    const auto psi0 = excite(space, {"a1", "a1"});
    const auto sol = master_solve(ops, pure_density(psi0), grid(4.0, 9));
    const Eigen::VectorXd n = oracle::occupation_diagonal(*space, space->layout().require("a1"));
    for (const auto& r : sol.states)
        CHECK((n.cast<Complex>().asDiagonal() * r.matrix).trace().real() ==
              Catch::Approx(2.0 * std::exp(-kappa * r.time)).epsilon(1e-9));
    CHECK(sol.diagnostics.max_trace_error <= 1e-9);
    CHECK(sol.diagnostics.max_hermiticity_error <= 1e-10);
    CHECK(sol.diagnostics.min_eigenvalue >= -1e-8);
}

TEST_CASE("master equation flags a positivity violation", "[dynamics]") {
    const auto space = make_space(SlotLayout::array(1), 1);
    const auto ops = build_operators(SchemeIConfig::uniform(1, 0.0, 0.0, 1.0, 0.5), space);
    DensityMatrix bad{space, CMatrix::Zero(4, 4), 0.0};
    bad.matrix(0, 0) = 1.2;
    bad.matrix(1, 1) = -0.2;
    CHECK_THROWS_AS(master_solve(ops, bad, grid(1.0, 2)), NumericalError);
}

TEST_CASE("partial traces", "[dynamics]") {
    SECTION("product state") {
        const auto space = make_space(SlotLayout::array(1), 2);
        // (alpha|g> + beta|e>) (x|0,0> + y|1,0>) restricted to <= 2 excitations.
        const Complex alpha(0.6, 0.0), beta(0.0, 0.8), x(0.8, 0.0), y(0.36, 0.48);
        CVector psi = CVector::Zero(static_cast<Eigen::Index>(space->dimension()));
        auto at = [&](std::vector<int> occ) { return static_cast<Eigen::Index>(space->index_of(BasisState{occ})); };
        psi(at({0, 0, 0})) = alpha * x;
        psi(at({0, 1, 0})) = alpha * y;
        psi(at({1, 0, 0})) = beta * x;
        psi(at({1, 1, 0})) = beta * y;
        const auto rho_e = partial_trace_modes(pure_density(StateVector{space, psi, 0.0}));
        CMatrix expect(2, 2);
        // Sub-layout order: |e> (index 1 excitation) after |g>.
        expect << std::norm(alpha), alpha * std::conj(beta), beta * std::conj(alpha), std::norm(beta);
        const auto e_idx = static_cast<Eigen::Index>(rho_e.space->index_of(BasisState{{1}}));
        const auto g_idx = static_cast<Eigen::Index>(rho_e.space->index_of(BasisState{{0}}));
        CHECK(std::abs(rho_e.matrix(g_idx, g_idx) - expect(0, 0)) <= 1e-15);
        CHECK(std::abs(rho_e.matrix(g_idx, e_idx) - expect(0, 1)) <= 1e-15);
        CHECK(std::abs(rho_e.matrix(e_idx, e_idx) - expect(1, 1)) <= 1e-15);
        CHECK(rho_e.trace() == Catch::Approx(1.0));
    }
    SECTION("single excitation, two emitters") {
        const auto space = make_space(SlotLayout::array(2), 1);
        const std::vector<Complex> c{{0.3, 0.1}, {0.2, -0.2}, {0.1, 0.0}, {-0.4, 0.3}, {0.2, 0.2}, {0.0, -0.3}};
        const std::vector<const char*> labels{"s1", "a1", "a2", "s2", "a3", "a4"};
        StateVector psi{space, CVector::Zero(7), 0.0};
        for (std::size_t k = 0; k < 6; ++k) psi.amplitudes += c[k] * excite(space, {labels[k]}).amplitudes;
        const auto rho = assemble_density_single_excitation(psi);
        const auto rho_e = partial_trace_modes(rho);
        auto idx = [&](std::vector<int> occ) {
            return static_cast<Eigen::Index>(rho_e.space->index_of(BasisState{std::move(occ)}));
        };
        CHECK(std::abs(rho_e.matrix(idx({1, 0}), idx({0, 1})) - c[0] * std::conj(c[3])) <= 1e-15);
        CHECK(std::abs(rho_e.matrix(idx({1, 0}), idx({1, 0})) - std::norm(c[0])) <= 1e-15);
        const double ground = 1.0 - std::norm(c[0]) - std::norm(c[3]);
        CHECK(std::abs(rho_e.matrix(idx({0, 0}), idx({0, 0})).real() - ground) <= 1e-15);
        CHECK(rho_e.trace() == Catch::Approx(1.0).epsilon(1e-14));
        const auto rho_c = partial_trace_emitters(rho);
        CHECK(rho_c.trace() == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(rho_c.space->layout().size() == 4);
    }
    SECTION("invalid slots") {
        const auto space = make_space(SlotLayout::array(1), 1);
        const auto rho = pure_density(excite(space, {"s1"}));
        CHECK_THROWS_AS(partial_trace(rho, {}), BasisError);
        CHECK_THROWS_AS(partial_trace(rho, {5}), BasisError);
    }
}
