"""Fixed-end FPU-beta chain in site and normal-mode coordinates.

Conventions
-----------
Modes are numbered ``1..N`` in the public API (matching the usual physics
notation) and stored 0-based in arrays. The quartic coupling tensor is
an integer selection-rule tensor

    C_klmn = sum over the eight sign patterns of Delta(k +- l +- m +- n)

with ``Delta(0) = 1``, ``Delta(+-2(N+1)) = -1`` and zero otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "InvalidModeIndex",
    "LatticeConfig",
    "SiteState",
    "ModeState",
    "Lattice",
    "delta",
    "coupling",
    "omega",
    "spectrum",
    "transform_matrix",
    "mode_to_site",
    "site_to_mode",
    "energy_site",
    "energy_mode",
    "eom_rhs",
    "cubic_coefficients",
]

# the eight (l, m, n) sign patterns in the order they appear in C_klmn
SIGN_PATTERNS = (
    (1, 1, 1),
    (-1, 1, 1),
    (1, -1, 1),
    (1, 1, -1),
    (-1, -1, 1),
    (1, -1, -1),
    (-1, 1, -1),
    (-1, -1, -1),
)


class InvalidModeIndex(IndexError):
    """A mode index fell outside ``1..N``."""


@dataclass(frozen=True)
class LatticeConfig:
    """Problem instance: N moving particles, quartic strength epsilon."""

    n: int
    epsilon: float = 0.0
    resonance_tol: float = 1e-9

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not self.resonance_tol > 0.0:
            raise ValueError(f"resonance_tol must be > 0, got {self.resonance_tol!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "resonance_tol", float(self.resonance_tol))


def _as_vector(x, n: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {arr.size}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SiteState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        object.__setattr__(self, "q", _as_vector(q, q.size, "q"))
        object.__setattr__(self, "p", _as_vector(self.p, q.size, "p"))

    @property
    def n(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class ModeState:
    """Normal-mode positions ``Q`` and velocities ``Qdot``.

    At ``t = 0`` this is the full set of 2N free constants of a solution.
    """

    Q: np.ndarray
    Qdot: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float).reshape(-1)
        object.__setattr__(self, "Q", _as_vector(Q, Q.size, "Q"))
        object.__setattr__(self, "Qdot", _as_vector(self.Qdot, Q.size, "Qdot"))

    @property
    def n(self) -> int:
        return self.Q.size

    @classmethod
    def zeros(cls, n: int) -> "ModeState":
        return cls(np.zeros(n), np.zeros(n))


# ---------------------------------------------------------------------------
# scalar definitions
# ---------------------------------------------------------------------------

def delta(r: int, n: int) -> int:
    """Umklapp-aware Kronecker delta: 1 at r=0, -1 at r=+-2(n+1), else 0."""
    if r == 0:
        return 1
    if abs(r) == 2 * (n + 1):
        return -1
    return 0


def _check_mode(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise InvalidModeIndex(f"mode index {k} outside 1..{n}")


def coupling(k: int, l: int, m: int, n_: int, config: LatticeConfig | int) -> int:
    """Coupling coefficient C_klmn (1-based indices)."""
    N = config if isinstance(config, int) else config.n
    for idx in (k, l, m, n_):
        _check_mode(idx, N)
    return sum(delta(k + sl * l + sm * m + sn * n_, N) for sl, sm, sn in SIGN_PATTERNS)


def omega(k: int, n: int) -> float:
    """Harmonic frequency of mode k, ``2 sin(pi k / (2(n+1)))``."""
    _check_mode(k, n)
    return 2.0 * math.sin(math.pi * k / (2 * (n + 1)))


def spectrum(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 2.0 * np.sin(np.pi * k / (2 * (n + 1)))


def transform_matrix(n: int) -> np.ndarray:
    """Discrete sine transform A_ij; symmetric and its own inverse."""
    i = np.arange(1, n + 1)
    return math.sqrt(2.0 / (n + 1)) * np.sin(np.pi * np.outer(i, i) / (n + 1))


def _coupling_support(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero entries of C as (indices[4, nnz], values), 0-based indices.

    A nonzero C_klmn needs k +- l +- m +- n in {0, +-2(N+1)}, so for each
    (k, l, m) only a handful of n are candidates. That keeps the build O(N^3).
    """
    idx = np.arange(1, n + 1)
    k, l, m = (a.ravel() for a in np.meshgrid(idx, idx, idx, indexing="ij"))
    cands = []
    for sl, sm in itertools.product((1, -1), repeat=2):
        base = k + sl * l + sm * m
        for r in (0, 2 * (n + 1), -2 * (n + 1)):
            for sn in (1, -1):
                # k + sl*l + sm*m + sn*nn = r
                nn = (r - base) * sn
                ok = (nn >= 1) & (nn <= n)
                cands.append(np.stack([k[ok], l[ok], m[ok], nn[ok]]))
    quads = np.concatenate(cands, axis=1)
    # dedupe via a linear key
    key = np.ravel_multi_index(tuple(quads - 1), (n,) * 4)
    key = np.unique(key)
    quads = np.array(np.unravel_index(key, (n,) * 4)) + 1
    values = np.zeros(quads.shape[1], dtype=np.int64)
    two_np1 = 2 * (n + 1)
    kk, ll, mm, nn = quads
    for sl, sm, sn in SIGN_PATTERNS:
        r = kk + sl * ll + sm * mm + sn * nn
        values += (r == 0).astype(np.int64) - (np.abs(r) == two_np1).astype(np.int64)
    keep = values != 0
    return quads[:, keep] - 1, values[keep]


# below this size the cubic force is a dense (N, N^3) contraction
DENSE_MAX_N = 16


# ---------------------------------------------------------------------------
# lattice object
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """Precomputed spectrum, transform and sparse coupling support.

    Everything is built once in ``__post_init__`` and never mutated, so a
    ``Lattice`` can be shared freely between threads.
    """

    config: LatticeConfig
    omega: np.ndarray = field(init=False, repr=False)
    A: np.ndarray = field(init=False, repr=False)
    support: np.ndarray = field(init=False, repr=False)
    cvalues: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    dense_force: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        n = self.config.n
        w = spectrum(n)
        assert np.all(w > 0.0), "fixed ends admit no zero modes"
        support, cvalues = _coupling_support(n)
        # omega_k omega_l omega_m omega_n C_klmn on the support
        weights = cvalues * w[support[0]] * w[support[1]] * w[support[2]] * w[support[3]]
        for name, arr in (("omega", w), ("A", transform_matrix(n)),
                          ("support", support), ("cvalues", cvalues),
                          ("weights", weights)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        dense = None
        if n <= DENSE_MAX_N:
            T = np.zeros((n,) * 4)
            np.add.at(T, tuple(support), weights)
            dense = T.reshape(n, -1) * (-1.0 / (2 * (n + 1)))
            dense.setflags(write=False)
        object.__setattr__(self, "dense_force", dense)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def epsilon(self) -> float:
        return self.config.epsilon

    def coupling(self, k: int, l: int, m: int, n_: int) -> int:
        return coupling(k, l, m, n_, self.config)

    @cached_property
    def _cdict(self) -> dict:
        return {tuple(int(i) for i in q): int(v) for q, v in zip(self.support.T, self.cvalues)}

    def c0(self, k: int, l: int, m: int, n_: int) -> int:
        """C by 0-based indices, looked up from the sparse support."""
        return self._cdict.get((k, l, m, n_), 0)

    def cubic_force(self, Q: np.ndarray) -> np.ndarray:
        """``-(1/(2(N+1))) sum_lmn w_k w_l w_m w_n C_klmn Q_l Q_m Q_n`` per k.

        Unit-epsilon nonlinear force. ``Q`` may carry extra trailing axes
        (e.g. a time grid), which are broadcast through.
        """
        Q = np.asarray(Q, dtype=float)
        k, l, m, n_ = self.support
        if Q.ndim == 1:
            # hot path for the integrators
            if self.dense_force is not None:
                return self.dense_force @ np.multiply.outer(np.multiply.outer(Q, Q), Q).ravel()
            out = np.bincount(k, self.weights * Q[l] * Q[m] * Q[n_], minlength=self.n)
            return out * (-1.0 / (2 * (self.n + 1)))
        terms = self.weights.reshape((-1,) + (1,) * (Q.ndim - 1)) * Q[l] * Q[m] * Q[n_]
        out = np.zeros_like(Q)
        np.add.at(out, k, terms)
        return -out / (2 * (self.n + 1))

    def quartic_energy(self, Q: np.ndarray) -> float:
        k, l, m, n_ = self.support
        Q = np.asarray(Q, dtype=float)
        s = np.sum(self.weights * Q[k] * Q[l] * Q[m] * Q[n_])
        return float(s / (8 * (self.n + 1)))


def _lattice(config: LatticeConfig | Lattice) -> Lattice:
    return config if isinstance(config, Lattice) else Lattice(config)


# ---------------------------------------------------------------------------
# transforms, energies, equations of motion
# ---------------------------------------------------------------------------

def mode_to_site(state: ModeState) -> SiteState:
    A = transform_matrix(state.n)
    return SiteState(A @ state.Q, A @ state.Qdot)


def site_to_mode(state: SiteState) -> ModeState:
    A = transform_matrix(state.n)
    return ModeState(A @ state.q, A @ state.p)


def energy_site(state: SiteState, config: LatticeConfig | Lattice) -> float:
    """Site-space Hamiltonian with q_0 = q_{N+1} = 0."""
    eps = config.epsilon
    if state.n != config.n:
        raise ValueError(f"state has {state.n} sites, lattice has {config.n}")
    q = np.concatenate(([0.0], state.q, [0.0]))
    dq = np.diff(q)
    return float(0.5 * np.sum(state.p ** 2) + 0.5 * np.sum(dq ** 2) + 0.25 * eps * np.sum(dq ** 4))


def energy_mode(state: ModeState, config: LatticeConfig | Lattice) -> float:
    """Mode-space Hamiltonian: harmonic sum plus the C-weighted quartic sum."""
    lat = _lattice(config)
    if state.n != lat.n:
        raise ValueError(f"state has {state.n} modes, lattice has {lat.n}")
    harmonic = 0.5 * np.sum(state.Qdot ** 2 + lat.omega ** 2 * state.Q ** 2)
    return float(harmonic + lat.epsilon * lat.quartic_energy(state.Q))


def eom_rhs(Q, Qdot, config: LatticeConfig | Lattice) -> np.ndarray:
    """Mode accelerations. ``Qdot`` is accepted for signature symmetry only."""
    lat = _lattice(config)
    Q = np.asarray(Q, dtype=float)
    w2 = (lat.omega ** 2).reshape((-1,) + (1,) * (Q.ndim - 1))
    return -w2 * Q + lat.epsilon * lat.cubic_force(Q)


def cubic_coefficients(config: LatticeConfig | Lattice) -> list[dict[tuple[int, ...], float]]:
    """Per-mode coefficients of the cubic monomials in the equations of motion.

    Entry ``k-1`` maps an exponent tuple ``(e_1, ..., e_N)`` (summing to 3)
    to the coefficient of ``epsilon * prod Q_j**e_j`` on the right-hand side
    of ``Qddot_k + omega_k^2 Q_k = ...``.
    """
    lat = _lattice(config)
    n = lat.n
    out: list[dict] = [dict() for _ in range(n)]
    scale = -1.0 / (2 * (n + 1))
    for (k, l, m, n_), w in zip(lat.support.T, lat.weights):
        e = [0] * n
        for j in (l, m, n_):
            e[j] += 1
        key = tuple(e)
        out[k][key] = out[k].get(key, 0.0) + scale * w
    return [{key: v for key, v in d.items() if v != 0.0} for d in out]
