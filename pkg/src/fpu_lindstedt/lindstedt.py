"""First-order Lindstedt series for the fixed-end FPU-beta chain.

Each mode is written as

    Q_k(t) = Q_k0(beta_k t) + epsilon * Q_k1(t)

where ``Q_k0`` is the harmonic solution running at the amplitude-shifted
frequency ``beta_k * omega_k`` and ``Q_k1`` is the zero-initial-condition
response of ``x'' + omega_k^2 x = f_k(t)``. The forcing ``f_k`` is the
cubic coupling evaluated on the unshifted zeroth-order modes, with every
sinusoid at frequency ``+-omega_k`` removed; those secular pieces are what
the frequency shifts ``rho_k`` absorb.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .lattice import Lattice, LatticeConfig, ModeState, _check_mode, spectrum

log = logging.getLogger(__name__)

__all__ = [
    "ShiftMethod",
    "FrequencyShift",
    "ConvergenceError",
    "ResonanceWarning",
    "SeriesTerm",
    "ResonantTerm",
    "NearResonance",
    "ResonanceReport",
    "ModeTerms",
    "SeriesSolution",
    "rho_first_order",
    "rho_self_consistent",
    "q0_eval",
    "restricted_terms",
    "q1_eval",
    "build_series",
    "series_eval",
    "first_order_forcing",
    "eom_residual",
    "dump_terms",
    "CHANNELS",
]

NEAR_RESONANCE_WARN = 1e-4

# (channel, pattern, signs of (omega_l, omega_m, omega_n)) in display order
CHANNELS = (
    ("cos", "l+m-n", (1, 1, -1)),
    ("cos", "l+m+n", (1, 1, 1)),
    ("cos", "l-m-n", (1, -1, -1)),
    ("cos", "l-m+n", (1, -1, 1)),
    ("sin", "l+m-n", (1, 1, -1)),
    ("sin", "l-m-n", (1, -1, -1)),
    ("sin", "l-m+n", (1, -1, 1)),
    ("sin", "l+m+n", (1, 1, 1)),
)


class ShiftMethod(str, enum.Enum):
    FIRST_ORDER = "first-order"
    SELF_CONSISTENT = "self-consistent"


class ConvergenceError(RuntimeError):
    """Fixed-point iteration for the frequency shifts did not settle."""

    def __init__(self, message: str, last: np.ndarray, residual: float):
        super().__init__(message)
        self.last = last
        self.residual = residual


class ResonanceWarning(UserWarning):
    """An accidental exact resonance was dropped from the restricted sum."""


@dataclass(frozen=True)
class FrequencyShift:
    rho: np.ndarray
    beta: np.ndarray
    method: ShiftMethod = ShiftMethod.FIRST_ORDER

    @classmethod
    def from_rho(cls, rho, epsilon: float, method=ShiftMethod.FIRST_ORDER) -> "FrequencyShift":
        rho = np.array(rho, dtype=float)
        beta = 1.0 + epsilon * rho
        rho.setflags(write=False)
        beta.setflags(write=False)
        return cls(rho, beta, ShiftMethod(method))

    @property
    def n(self) -> int:
        return self.rho.size


def _lattice(config) -> Lattice:
    return config if isinstance(config, Lattice) else Lattice(config)


def _check_ics(ics: ModeState, n: int) -> None:
    if ics.n != n:
        raise ValueError(f"initial data has {ics.n} modes, lattice has {n}")


# ---------------------------------------------------------------------------
# frequency shifts
# ---------------------------------------------------------------------------

def _shift_matrix(lat: Lattice) -> np.ndarray:
    """Linear map from squared mode amplitudes to rho.

    Diagonal: 3 w_k^2 C_kkkk / (16(N+1)); off-diagonal: 3 w_m^2 C_kkmm / (8(N+1)).
    """
    n = lat.n
    w2 = lat.omega ** 2
    M = np.empty((n, n))
    for k in range(n):
        for m in range(n):
            if k == m:
                M[k, m] = 3.0 * w2[k] * lat.c0(k, k, k, k) / (16 * (n + 1))
            else:
                M[k, m] = 3.0 * w2[m] * lat.c0(k, k, m, m) / (8 * (n + 1))
    return M


def rho_first_order(ics: ModeState, config: LatticeConfig | Lattice) -> FrequencyShift:
    lat = _lattice(config)
    _check_ics(ics, lat.n)
    amp2 = ics.Q ** 2 + (ics.Qdot / lat.omega) ** 2
    return FrequencyShift.from_rho(_shift_matrix(lat) @ amp2, lat.epsilon, ShiftMethod.FIRST_ORDER)


def rho_self_consistent(
    ics: ModeState,
    config: LatticeConfig | Lattice,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> FrequencyShift:
    """Solve the coupled shift equations with velocities scaled by 1/beta.

    Plain fixed-point iteration seeded with the first-order shifts.
    Raises ``ConvergenceError`` (carrying the last iterate) if successive
    iterates still differ by more than ``tol`` after ``max_iter`` sweeps.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lat = _lattice(config)
    _check_ics(ics, lat.n)
    eps = lat.epsilon
    M = _shift_matrix(lat)
    rho = rho_first_order(ics, lat).rho.copy()
    diff = np.inf
    for it in range(max_iter):
        beta = 1.0 + eps * rho
        new = M @ (ics.Q ** 2 + (ics.Qdot / (beta * lat.omega)) ** 2)
        diff = float(np.max(np.abs(new - rho), initial=0.0))
        rho = new
        if diff < tol:
            log.debug("self-consistent shifts converged in %d iterations", it + 1)
            return FrequencyShift.from_rho(rho, eps, ShiftMethod.SELF_CONSISTENT)
    raise ConvergenceError(
        f"self-consistent shifts not converged after {max_iter} iterations (last step {diff:.3e})",
        rho, diff)


# ---------------------------------------------------------------------------
# zeroth order
# ---------------------------------------------------------------------------

def q0_eval(k: int, t, ics: ModeState, shift: FrequencyShift):
    """Shifted harmonic mode ``k`` (1-based) and its time derivative."""
    n = shift.n
    _check_mode(k, n)
    w = spectrum(n)[k - 1] * shift.beta[k - 1]
    a, v = ics.Q[k - 1], ics.Qdot[k - 1]
    t = np.asarray(t, dtype=float)
    c, s = np.cos(w * t), np.sin(w * t)
    return a * c + (v / w) * s, -a * w * s + v * c


# ---------------------------------------------------------------------------
# first order: term tables
# ---------------------------------------------------------------------------

class SeriesTerm(NamedTuple):
    """One retained sinusoidal source in the restricted sum for mode k.

    ``prefactor`` is ``-w_k w_l w_m w_n C_klmn / (8(N+1))`` and ``bracket``
    the initial-data combination multiplying ``cos(alpha t)`` or
    ``sin(alpha t)`` in the forcing. Indices are 1-based.
    """

    k: int
    l: int
    m: int
    n: int
    channel: str
    pattern: str
    alpha: float
    bracket: float
    prefactor: float
    omega_k: float

    @property
    def forcing(self) -> float:
        return self.prefactor * self.bracket

    @property
    def amplitude(self) -> float:
        """Common factor of the particular solution for this source."""
        d = (self.alpha + self.omega_k) * (self.alpha - self.omega_k)
        if self.channel == "cos":
            return self.forcing / d
        return self.forcing / (self.omega_k * d)

    def coefficients(self) -> tuple[float, float]:
        """(coefficient on the omega_k sinusoid, coefficient on the alpha sinusoid)."""
        a = self.amplitude
        if self.channel == "cos":
            return a, -a
        return a * self.alpha, -a * self.omega_k


class ResonantTerm(NamedTuple):
    k: int
    l: int
    m: int
    n: int
    channel: str
    pattern: str
    alpha: float
    forcing: float
    kind: str  # diagonal | pair | accidental


class NearResonance(NamedTuple):
    k: int
    l: int
    m: int
    n: int
    channel: str
    pattern: str
    alpha: float
    denominator: float


@dataclass(frozen=True)
class ResonanceReport:
    exact: tuple[ResonantTerm, ...] = ()
    near: tuple[NearResonance, ...] = ()

    @property
    def accidental(self) -> tuple[ResonantTerm, ...]:
        return tuple(r for r in self.exact if r.kind == "accidental")

    def __add__(self, other: "ResonanceReport") -> "ResonanceReport":
        return ResonanceReport(self.exact + other.exact, self.near + other.near)


@dataclass(frozen=True)
class ModeTerms:
    """Retained sources of mode k packed into arrays for fast evaluation."""

    k: int
    omega_k: float
    terms: tuple[SeriesTerm, ...]
    cos_amp: np.ndarray = field(repr=False)
    cos_alpha: np.ndarray = field(repr=False)
    sin_amp: np.ndarray = field(repr=False)
    sin_alpha: np.ndarray = field(repr=False)

    @classmethod
    def from_terms(cls, k: int, omega_k: float, terms: Sequence[SeriesTerm]) -> "ModeTerms":
        terms = tuple(terms)
        arrays = []
        for ch in ("cos", "sin"):
            sel = [t for t in terms if t.channel == ch]
            amp = np.array([t.amplitude for t in sel], dtype=float)
            alpha = np.array([t.alpha for t in sel], dtype=float)
            amp.setflags(write=False)
            alpha.setflags(write=False)
            arrays += [amp, alpha]
        return cls(k, omega_k, terms, *arrays)

    def harmonics(self, scale: float = 1.0) -> list[tuple[str, float, float]]:
        """Collect ``scale * Q_k1`` into (channel, frequency >= 0, coefficient).

        Negative arguments are folded (cos is even, sin is odd) and equal
        frequencies merged to 1e-12.
        """
        acc: dict[tuple[str, float], float] = {}

        def add(ch, freq, coef):
            if ch == "sin" and freq < 0:
                coef = -coef
            freq = abs(freq)
            for key in acc:
                if key[0] == ch and abs(key[1] - freq) < 1e-12:
                    acc[key] += coef
                    return
            acc[(ch, freq)] = coef

        for term in self.terms:
            c_w, c_a = term.coefficients()
            add(term.channel, self.omega_k, scale * c_w)
            add(term.channel, term.alpha, scale * c_a)
        return sorted((ch, f, c) for (ch, f), c in acc.items())


def _bracket_table(a: np.ndarray, b: np.ndarray, l: int, m: int, n_: int) -> tuple[float, ...]:
    """Eight forcing brackets for (l, m, n), ordered as ``CHANNELS``.

    ``a`` holds Q_j(0) and ``b`` holds Qdot_j(0)/omega_j (0-based arrays).
    """
    al, am, an = a[l], a[m], a[n_]
    bl, bm, bn = b[l], b[m], b[n_]
    aaa = al * am * an
    bbb = bl * bm * bn
    x, y, z = al * bm * bn, am * bl * bn, an * bm * bl
    u, v, w = am * an * bl, al * an * bm, al * am * bn
    return (
        aaa + x + y - z,
        aaa - x - y - z,
        aaa - x + y + z,
        aaa + x - y + z,
        bbb + u + v - w,
        -bbb + u - v - w,
        bbb + u - v + w,
        -bbb + u + v + w,
    )


def _classify(k: int, l: int, m: int, n_: int) -> str:
    if l == m == n_ == k:
        return "diagonal"
    trio = sorted((l, m, n_))
    if k in trio:
        rest = list(trio)
        rest.remove(k)
        if rest[0] == rest[1]:
            return "pair"
    return "accidental"


def restricted_terms(
    k: int,
    ics: ModeState,
    config: LatticeConfig | Lattice,
    *,
    near_threshold: float = NEAR_RESONANCE_WARN,
) -> tuple[ModeTerms, ResonanceReport]:
    """Enumerate the non-resonant sources of mode ``k`` (1-based).

    Every (l, m, n) with nonzero C_klmn yields eight sinusoidal sources.
    Those whose argument has ``| |alpha| - omega_k | < resonance_tol`` are
    dropped from the table and recorded in the report. Sources with a zero
    bracket are skipped from the table (they contribute nothing).
    """
    lat = _lattice(config)
    n = lat.n
    _check_mode(k, n)
    _check_ics(ics, n)
    w = lat.omega
    wk = float(w[k - 1])
    tol = lat.config.resonance_tol
    a = ics.Q
    b = ics.Qdot / w
    mask = lat.support[0] == k - 1
    kept: list[SeriesTerm] = []
    exact: list[ResonantTerm] = []
    near: list[NearResonance] = []
    for (_, l, m, n_), cval in zip(lat.support.T[mask], lat.cvalues[mask]):
        l, m, n_ = int(l), int(m), int(n_)
        prefactor = -wk * w[l] * w[m] * w[n_] * cval / (8 * (n + 1))
        brackets = _bracket_table(a, b, l, m, n_)
        for (channel, pattern, (sl, sm, sn)), bracket in zip(CHANNELS, brackets):
            alpha = float(sl * w[l] + sm * w[m] + sn * w[n_])
            idx = (k, l + 1, m + 1, n_ + 1)
            if abs(abs(alpha) - wk) < tol:
                kind = _classify(*idx)
                exact.append(ResonantTerm(*idx, channel, pattern, alpha, float(prefactor * bracket), kind))
                continue
            denom = (alpha + wk) * (alpha - wk)
            if abs(denom) < near_threshold:
                near.append(NearResonance(*idx, channel, pattern, alpha, float(denom)))
            if bracket != 0.0:
                kept.append(SeriesTerm(*idx, channel, pattern, alpha, float(bracket), float(prefactor), wk))
    accidental = [r for r in exact if r.kind == "accidental"]
    if accidental:
        warnings.warn(
            f"mode {k}: {len(accidental)} accidental exact resonance(s) excluded from the "
            f"restricted sum and not absorbed into the frequency shift", ResonanceWarning,
            stacklevel=2)
    if near:
        log.warning("mode %d: %d near-resonant source(s) with |denominator| < %g",
                    k, len(near), near_threshold)
    return ModeTerms.from_terms(k, wk, kept), ResonanceReport(tuple(exact), tuple(near))


def q1_eval(k: int, t, table: ModeTerms):
    """First-order correction of mode k and its derivative (unstretched time)."""
    if table.k != k:
        raise ValueError(f"term table is for mode {table.k}, not {k}")
    t = np.asarray(t, dtype=float)
    w = table.omega_k
    tt = t[..., None]
    ca, cal = table.cos_amp, table.cos_alpha
    sa, sal = table.sin_amp, table.sin_alpha
    cos_w, sin_w = np.cos(w * t), np.sin(w * t)
    cos_at, sin_at = np.cos(cal * tt), np.sin(cal * tt)
    val = ca.sum() * cos_w - (cos_at @ ca)
    der = -w * ca.sum() * sin_w + (sin_at @ (ca * cal))
    cos_st, sin_st = np.cos(sal * tt), np.sin(sal * tt)
    val = val + (sa @ sal) * sin_w - w * (sin_st @ sa)
    der = der + w * (sa @ sal) * cos_w - w * (cos_st @ (sa * sal))
    return val, der


# ---------------------------------------------------------------------------
# assembled solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesSolution:
    config: LatticeConfig
    ics: ModeState
    shift: FrequencyShift
    tables: tuple[ModeTerms, ...]
    report: ResonanceReport

    @property
    def n(self) -> int:
        return self.config.n

    def terms(self) -> list[SeriesTerm]:
        return [t for tab in self.tables for t in tab.terms]

    def sample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities on a time grid, each shaped (len(times), N)."""
        times = np.asarray(times, dtype=float)
        eps = self.config.epsilon
        Q = np.empty(times.shape + (self.n,))
        V = np.empty_like(Q)
        for k, table in enumerate(self.tables, start=1):
            x0, v0 = q0_eval(k, times, self.ics, self.shift)
            x1, v1 = q1_eval(k, times, table)
            Q[..., k - 1] = x0 + eps * x1
            V[..., k - 1] = v0 + eps * v1
        return Q, V


def build_series(
    ics: ModeState,
    config: LatticeConfig | Lattice,
    *,
    self_consistent: bool = False,
    shift: FrequencyShift | None = None,
) -> SeriesSolution:
    lat = _lattice(config)
    _check_ics(ics, lat.n)
    if shift is None:
        shift = rho_self_consistent(ics, lat) if self_consistent else rho_first_order(ics, lat)
    tables = []
    report = ResonanceReport()
    for k in range(1, lat.n + 1):
        table, rep = restricted_terms(k, ics, lat)
        tables.append(table)
        report = report + rep
    return SeriesSolution(lat.config, ics, shift, tuple(tables), report)


def series_eval(t: float, solution: SeriesSolution) -> ModeState:
    Q, V = solution.sample(np.array([t], dtype=float))
    return ModeState(Q[0], V[0])


def first_order_forcing(
    ics: ModeState, config: LatticeConfig | Lattice, shift: FrequencyShift
) -> Callable[[float], np.ndarray]:
    """Right-hand side driving the first-order correction, built directly.

    Evaluates ``2 rho_k w_k^2 Q_k0(t) + cubic force of Q_0(t)`` on the
    unshifted harmonic modes by brute-force multiplication, with no
    harmonic bookkeeping. The secular parts cancel between the two pieces
    (up to any accidental resonances), so it serves as an independent
    check on the closed-form correction.
    """
    lat = _lattice(config)
    w = lat.omega
    a, b = ics.Q, ics.Qdot / w
    drive = 2.0 * shift.rho * w ** 2

    def f(t):
        q0 = a * np.cos(w * t) + b * np.sin(w * t)
        return drive * q0 + lat.cubic_force(q0)

    return f


def eom_residual(solution: SeriesSolution, times, h: float = 1e-4) -> np.ndarray:
    """``Qddot - rhs(Q)`` of the series, shaped (len(times), N).

    Acceleration from a five-point central difference of the sampled series.
    """
    lat = Lattice(solution.config)
    times = np.asarray(times, dtype=float)
    q = {j: solution.sample(times + j * h)[0] for j in (-2, -1, 0, 1, 2)}
    qdd = (-q[2] + 16 * q[1] - 30 * q[0] + 16 * q[-1] - q[-2]) / (12 * h * h)
    w2 = lat.omega ** 2
    rhs = -w2 * q[0] + lat.epsilon * lat.cubic_force(q[0].T).T
    return qdd - rhs


def dump_terms(solution: SeriesSolution | Sequence[SeriesTerm], fh=None) -> str:
    """Write the retained-term table as CSV; returns the text."""
    terms = solution.terms() if isinstance(solution, SeriesSolution) else list(solution)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "l", "m", "n", "channel", "alpha", "bracket", "prefactor"])
    for t in terms:
        writer.writerow([t.k, t.l, t.m, t.n, t.channel, f"{t.alpha:.15g}",
                         f"{t.bracket:.15g}", f"{t.prefactor:.15g}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
