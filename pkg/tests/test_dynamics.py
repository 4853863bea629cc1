import numpy as np
import pytest

from blocklaser import (ModelParams, enumerate_sector, build_liouvillian,
                        liouvillian_for, trace_functional, evolve,
                        initial_mixed_state, propagate_grid, steady_state,
                        expect_photon_number, expect_sigma_z, expect_spin_spin)
from blocklaser.dynamics import DegenerateSteadyStateError, SymmetricState
from blocklaser.symbasis import BasisElement
from blocklaser.oracle import (build_full_liouvillian, lift_state,
                               oracle_expectations, oracle_steady_state)
from conftest import random_params


def test_mixed_state_normalization():
    for M in (1, 2):
        sector = enumerate_sector(3, M, 0)
        s = initial_mixed_state(sector)
        k = sector.index_of(BasisElement(0, 0, 0, 0, 0))
        assert s.coeffs[k] == pytest.approx(1.0 / (M + 1))
        assert trace_functional(sector) @ s.coeffs == pytest.approx(1.0)
        assert expect_sigma_z(s) == 0.0
    s1 = initial_mixed_state(enumerate_sector(3, 1, 0))
    assert expect_photon_number(s1) == pytest.approx(0.5)
    s2 = initial_mixed_state(enumerate_sector(3, 2, 0))
    assert expect_photon_number(s2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        initial_mixed_state(enumerate_sector(3, 1, 1))


def test_evolve_with_zero_generator_is_identity():
    p = ModelParams(2, 1, 0.0, 0.0, 0.0)
    sector = enumerate_sector(2, 1, 0)
    L = build_liouvillian(p, sector)
    s = initial_mixed_state(sector)
    for method in ("dop853", "expm"):
        out = evolve(L, s, 3.0, method=method)
        assert np.allclose(out.coeffs, s.coeffs, atol=1e-14)
        assert out.time == pytest.approx(3.0)


def test_trace_invariant_along_trajectory(rng):
    p = random_params(rng, 3, 1)
    L = liouvillian_for(p, 0)
    t = trace_functional(L.sector)
    s = initial_mixed_state(L.sector)
    traj = propagate_grid(L, s.coeffs, np.linspace(0, 8.0 / p.cavity_decay, 30))
    traces = traj @ t
    assert np.abs(traces - 1.0).max() < 1e-9


def test_evolution_matches_oracle(rng):
    p = random_params(rng, 2, 1)
    sector = enumerate_sector(2, 1, 0)
    L = build_liouvillian(p, sector)
    s = initial_mixed_state(sector)
    t_final = 5.0 / p.cavity_decay
    rho0 = lift_state(s).reshape(-1)
    rho_t = propagate_grid(build_full_liouvillian(p), rho0, [t_final])[0]
    for method, tol in (("dop853", 1e-8), ("rk45", 1e-6), ("expm", 1e-11)):
        out = evolve(L, s, t_final, reltol=1e-10, abstol=1e-12, method=method)
        diff = np.abs(lift_state(out).reshape(-1) - rho_t).max()
        assert diff < tol, method


def test_unknown_method_rejected():
    p = ModelParams(2, 1, 1.0, 1.0, 0.5)
    L = liouvillian_for(p, 0)
    with pytest.raises(ValueError):
        evolve(L, initial_mixed_state(L.sector), 1.0, method="leapfrog")


def test_state_sector_mismatch_rejected():
    p = ModelParams(2, 1, 1.0, 1.0, 0.5)
    L = liouvillian_for(p, 0)
    other = initial_mixed_state(enumerate_sector(3, 1, 0))
    with pytest.raises(ValueError):
        evolve(L, other, 1.0)


def test_propagate_grid_matches_single_steps(rng):
    p = random_params(rng, 2, 1)
    L = liouvillian_for(p, 0)
    s = initial_mixed_state(L.sector)
    # hybrid grid: dense uniform run plus geometric tail
    times = np.concatenate([np.linspace(0.0, 1.0, 11), np.geomspace(1.5, 40.0, 7)])
    traj = propagate_grid(L, s.coeffs, times)
    for k in (0, 3, 10, 12, 17):
        single = evolve(L, s, times[k], method="expm")
        assert np.abs(traj[k] - single.coeffs).max() < 1e-11
    observed = propagate_grid(L, s.coeffs, times,
                              observe=lambda c: c[0])
    assert np.allclose(observed, traj[:, 0])
    with pytest.raises(ValueError):
        propagate_grid(L, s.coeffs, [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        propagate_grid(L, s.coeffs, [-1.0, 1.0])


def test_decoupled_pumping_limit():
    p = ModelParams(3, 1, 0.0, 1.0, 0.7)
    L = liouvillian_for(p, 0)
    ss = steady_state(L, trace_functional(L.sector))
    assert expect_sigma_z(ss) == pytest.approx(1.0, abs=1e-10)
    assert expect_photon_number(ss) == pytest.approx(0.0, abs=1e-10)


def test_decoupled_decay_limit():
    p = ModelParams(3, 1, 0.0, 1.0, 0.0, spont_emission=0.4)
    L = liouvillian_for(p, 0)
    ss = steady_state(L, trace_functional(L.sector))
    assert expect_sigma_z(ss) == pytest.approx(-1.0, abs=1e-10)
    assert expect_photon_number(ss) == pytest.approx(0.0, abs=1e-10)


def test_steady_state_matches_oracle_at_figure_style_point():
    N = 4
    g = 0.5
    kappa = N * g * g  # kappa = N C gamma
    p = ModelParams(N, 1, g, kappa, 2.0 * kappa / N)
    L = liouvillian_for(p, 0)
    ss = steady_state(L, trace_functional(L.sector))
    ref = oracle_expectations(p, oracle_steady_state(p))
    assert expect_sigma_z(ss) == pytest.approx(ref["sz"], abs=1e-8)
    assert expect_spin_spin(ss) == pytest.approx(ref["spsm"], abs=1e-8)
    assert expect_photon_number(ss) == pytest.approx(ref["nb"], abs=1e-8)


def test_detailed_balance_without_single_atom_decay(rng):
    # conservation of excitation flow: N w <1 - sz>/2 = kappa <n>
    for n_atoms in (4, 30):
        p = random_params(rng, n_atoms, 1, with_gamma=False)
        L = liouvillian_for(p, 0)
        ss = steady_state(L, trace_functional(L.sector))
        lhs = p.n_atoms * p.pump * (1.0 - expect_sigma_z(ss)) / 2.0
        rhs = p.cavity_decay * expect_photon_number(ss)
        assert lhs == pytest.approx(rhs, rel=1e-8)


def test_steady_state_independent_of_initial_state(rng):
    p = random_params(rng, 3, 1)
    L = liouvillian_for(p, 0)
    sector = L.sector
    t = trace_functional(sector)
    ss = steady_state(L, t)
    # completely mixed versus all-atoms-down initial states
    mixed = initial_mixed_state(sector)
    down = np.zeros(len(sector), dtype=complex)
    vac = {(0, 0): 1.0, (1, 1): -1.0}  # |0><0| = 1 - a^+ a at M = 1
    for k in range(p.n_atoms + 1):
        for (pp, qq), wph in vac.items():
            idx = sector.index_of(BasisElement(0, 0, k, pp, qq))
            from math import comb
            down[idx] = (-1.0) ** k * comb(p.n_atoms, k) * wph / 2 ** 0
    down = down / (t @ down)
    s_down = SymmetricState(sector, down)
    assert expect_sigma_z(s_down) == pytest.approx(-1.0)
    assert expect_photon_number(s_down) == pytest.approx(0.0, abs=1e-12)
    horizon = 60.0 / min(p.pump + p.spont_emission, p.cavity_decay)
    for start in (mixed, s_down):
        out = evolve(L, start, horizon, method="expm")
        assert expect_sigma_z(out) == pytest.approx(expect_sigma_z(ss), abs=1e-7)
        assert expect_photon_number(out) == pytest.approx(
            expect_photon_number(ss), abs=1e-7)


def test_degenerate_null_space_is_reported():
    # frozen atoms: no pump, decay or coupling leaves many conserved
    # atomic contents
    p = ModelParams(2, 1, 0.0, 1.0, 0.0)
    L = liouvillian_for(p, 0)
    with pytest.raises(DegenerateSteadyStateError, match="dimension 4"):
        steady_state(L, trace_functional(L.sector))


def test_steady_state_requires_charge_zero():
    p = ModelParams(2, 1, 1.0, 1.0, 0.5)
    L = liouvillian_for(p, -1)
    with pytest.raises(ValueError):
        steady_state(L)
