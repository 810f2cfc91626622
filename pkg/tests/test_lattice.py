import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fpu_lindstedt.lattice import (
    InvalidModeIndex,
    Lattice,
    LatticeConfig,
    ModeState,
    SiteState,
    coupling,
    cubic_coefficients,
    delta,
    energy_mode,
    energy_site,
    eom_rhs,
    mode_to_site,
    omega,
    site_to_mode,
    spectrum,
    transform_matrix,
)

from conftest import N2_EXAMPLE_ICS


def brute_coupling(k, l, m, n, N):
    # straight from the eight-term definition
    args = [k + l + m + n, k - l + m + n, k + l - m + n, k + l + m - n,
            k - l - m + n, k + l - m - n, k - l + m - n, k - l - m - n]
    return sum(1 if r == 0 else (-1 if abs(r) == 2 * (N + 1) else 0) for r in args)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(n=0), dict(n=-3), dict(n=2, epsilon=-0.1),
                                    dict(n=2, resonance_tol=0.0), dict(n=2.5)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            LatticeConfig(**kw)

    def test_defaults(self):
        cfg = LatticeConfig(3)
        assert cfg.epsilon == 0.0 and cfg.resonance_tol == 1e-9

    def test_state_length_mismatch(self):
        with pytest.raises(ValueError):
            ModeState([1.0, 2.0], [0.0])
        with pytest.raises(ValueError):
            SiteState([1.0], [0.0, 1.0])


def test_delta():
    assert delta(0, 2) == 1
    assert delta(6, 2) == -1
    assert delta(-6, 2) == -1
    assert delta(3, 2) == 0


@pytest.mark.parametrize("idx,expected", [((1, 1, 1, 1), 3), ((2, 2, 2, 2), 3), ((1, 1, 2, 2), 1)])
def test_coupling_n2(idx, expected):
    assert coupling(*idx, 2) == expected
    assert coupling(*idx, LatticeConfig(2)) == expected


def test_coupling_index_errors():
    with pytest.raises(InvalidModeIndex):
        coupling(0, 1, 1, 1, 2)
    with pytest.raises(InvalidModeIndex):
        coupling(1, 1, 1, 3, 2)
    with pytest.raises(InvalidModeIndex):
        omega(3, 2)


@pytest.mark.parametrize("N", range(1, 9))
def test_coupling_symmetry_and_range(N):
    seen = set()
    for idx in itertools.product(range(1, N + 1), repeat=4):
        c = coupling(*idx, N)
        assert c == brute_coupling(*idx, N)
        seen.add(c)
        for perm in set(itertools.permutations(idx)):
            assert coupling(*perm, N) == c
    assert seen <= {-2, -1, 0, 1, 2, 3}


@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 11])
def test_sparse_support_matches_definition(N):
    lat = Lattice(LatticeConfig(N))
    dense = np.zeros((N,) * 4, dtype=int)
    dense[tuple(lat.support)] = lat.cvalues
    for idx in itertools.product(range(N), repeat=4):
        assert dense[idx] == brute_coupling(*(i + 1 for i in idx), N)


def test_omega():
    assert omega(1, 2) == pytest.approx(1.0, abs=1e-15)
    assert omega(2, 2) == pytest.approx(math.sqrt(3), abs=1e-15)
    assert omega(1, 1) == pytest.approx(math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("N", [1, 2, 7, 64, 300])
def test_spectrum_increasing_and_bounded(N):
    w = spectrum(N)
    assert np.all(np.diff(w) > 0)
    assert np.all((w > 0) & (w < 2))
    assert w[0] == pytest.approx(omega(1, N))


def test_transform_small_cases():
    assert transform_matrix(1)[0, 0] == pytest.approx(1.0)
    assert transform_matrix(2)[0, 0] == pytest.approx(1 / math.sqrt(2))


@settings(max_examples=60, deadline=None)
@given(N=st.integers(1, 32), data=st.data())
def test_transform_involution(N, data):
    vec = arrays(np.float64, N, elements=st.floats(-1e3, 1e3))
    s = ModeState(data.draw(vec), data.draw(vec))
    back = site_to_mode(mode_to_site(s))
    scale = max(1.0, np.max(np.abs(s.Q)), np.max(np.abs(s.Qdot)))
    np.testing.assert_allclose(back.Q, s.Q, rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(back.Qdot, s.Qdot, rtol=0, atol=1e-12 * scale)


def test_harmonic_mode_diagonalises_site_hamiltonian():
    # a single normal mode is an eigenvector of the fixed-end Laplacian
    N = 6
    A = transform_matrix(N)
    L = 2 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    np.testing.assert_allclose(A @ L @ A, np.diag(spectrum(N) ** 2), atol=1e-12)


class TestEnergy:
    def test_zero_state(self):
        cfg = LatticeConfig(3, 0.5)
        assert energy_mode(ModeState.zeros(3), cfg) == 0.0
        assert energy_site(SiteState(np.zeros(3), np.zeros(3)), cfg) == 0.0

    def test_single_mode_harmonic(self):
        assert energy_mode(ModeState([1, 0], [0, 0]), LatticeConfig(2, 0.0)) == pytest.approx(0.5)

    def test_n2_example_state_forms_agree(self):
        cfg = LatticeConfig(2, 0.1)
        e_mode = energy_mode(N2_EXAMPLE_ICS, cfg)
        e_site = energy_site(mode_to_site(N2_EXAMPLE_ICS), cfg)
        assert abs(e_mode - e_site) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(N=st.integers(1, 16), eps=st.floats(0, 2), seed=st.integers(0, 2**32 - 1))
    def test_forms_agree(self, N, eps, seed):
        rng = np.random.default_rng(seed)
        s = ModeState(rng.normal(size=N), rng.normal(size=N))
        cfg = LatticeConfig(N, eps)
        e_mode = energy_mode(s, cfg)
        e_site = energy_site(mode_to_site(s), cfg)
        assert e_mode == pytest.approx(e_site, rel=1e-10)


class TestEOM:
    def test_n2_single_modes(self):
        for eps in (0.0, 0.1, 0.7):
            cfg = LatticeConfig(2, eps)
            a = eom_rhs([1.0, 0.0], [0.0, 0.0], cfg)
            assert a[0] == pytest.approx(-1 - eps / 2, abs=1e-14)
            assert a[1] == pytest.approx(0.0, abs=1e-14)
            a = eom_rhs([0.0, 1.0], [0.0, 0.0], cfg)
            assert a[1] == pytest.approx(-3 - 4.5 * eps, abs=1e-14)

    def test_harmonic_limit(self, rng):
        cfg = LatticeConfig(7, 0.0)
        Q = rng.normal(size=7)
        np.testing.assert_array_equal(eom_rhs(Q, Q, cfg), -spectrum(7) ** 2 * Q)

    def test_cubic_coefficients_n2(self):
        c1, c2 = cubic_coefficients(LatticeConfig(2, 0.1))
        assert set(c1) == {(3, 0), (1, 2)} and set(c2) == {(0, 3), (2, 1)}
        assert abs(c1[(3, 0)] + 0.5) < 1e-14
        assert abs(c1[(1, 2)] + 1.5) < 1e-14
        assert abs(c2[(0, 3)] + 4.5) < 1e-14
        assert abs(c2[(2, 1)] + 1.5) < 1e-14

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_matches_energy_gradient(self, N, rng):
        cfg = LatticeConfig(N, 0.3)
        h = 1e-5
        for _ in range(5):
            Q = rng.normal(size=N)
            V = rng.normal(size=N)
            grad = np.empty(N)
            for k in range(N):
                e = np.zeros(N)
                e[k] = h
                grad[k] = (energy_mode(ModeState(Q + e, V), cfg)
                           - energy_mode(ModeState(Q - e, V), cfg)) / (2 * h)
            np.testing.assert_allclose(eom_rhs(Q, V, cfg), -grad, atol=1e-6)

    @pytest.mark.parametrize("N", [3, 20])
    def test_dense_and_sparse_force_agree(self, N, rng):
        lat = Lattice(LatticeConfig(N, 1.0))
        Q = rng.normal(size=N)
        # the 2-D path always goes through the sparse support
        np.testing.assert_allclose(lat.cubic_force(Q), lat.cubic_force(Q[:, None])[:, 0], atol=1e-12)
