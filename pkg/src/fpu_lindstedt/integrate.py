"""Fixed-step reference integrators in normal-mode space.

Two schemes are provided: classical RK4 (the default oracle) and
kick-drift-kick leapfrog for long runs where bounded energy error matters
more than phase accuracy. Step counts are integers and sample times are
``i * dt``, so repeated runs are bit-identical.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Lattice, LatticeConfig, ModeState, energy_mode

__all__ = [
    "Method",
    "IntegratorConfig",
    "Trajectory",
    "BlowUpError",
    "integrate",
    "integrate_driven",
    "rk4_step",
    "relative_energy_drift",
]


class Method(str, enum.Enum):
    RK4 = "rk4"
    LEAPFROG = "leapfrog"


class BlowUpError(FloatingPointError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t:g}")
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_max: float = 100.0
    sample_every: int = 10
    method: Method = Method.RK4
    energy_monitor: bool = False

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max > 0:
            raise ValueError("dt and t_max must be positive")
        if self.dt > self.t_max:
            raise ValueError("dt must not exceed t_max")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        object.__setattr__(self, "method", Method(self.method))
        steps = self.t_max / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ValueError(f"t_max={self.t_max} is not an integer multiple of dt={self.dt}")
        if round(steps) % self.sample_every:
            raise ValueError(f"sample_every={self.sample_every} does not divide {round(steps)} steps")

    @property
    def steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution; ``states`` rows are ``[Q_1..Q_N, Qdot_1..Qdot_N]``."""

    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2

    @property
    def Q(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def Qdot(self) -> np.ndarray:
        return self.states[:, self.n:]

    def to_csv(self, fh=None) -> str:
        n = self.n
        header = ["t"] + [f"Q_{k}" for k in range(1, n + 1)] + [f"Qdot_{k}" for k in range(1, n + 1)]
        if self.energy is not None:
            header.append("H")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(self.times):
            row = [t, *self.states[i]]
            if self.energy is not None:
                row.append(self.energy[i])
            w.writerow([f"{x:.15g}" for x in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def rk4_step(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run(step, y0: np.ndarray, icfg: IntegratorConfig, energy=None) -> Trajectory:
    nsamp = icfg.steps // icfg.sample_every + 1
    states = np.empty((nsamp, y0.size))
    states[0] = y0
    y = y0.copy()
    dt = icfg.dt
    # overflow is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(1, nsamp):
            base = (s - 1) * icfg.sample_every
            for j in range(icfg.sample_every):
                y = step((base + j) * dt, y, dt)
            if not np.all(np.isfinite(y)):
                raise BlowUpError((base + icfg.sample_every) * dt)
            states[s] = y
    times = np.arange(nsamp) * (icfg.sample_every * dt)
    H = None
    if energy is not None:
        H = np.array([energy(row) for row in states])
    return Trajectory(times, states, H)


def integrate(ics: ModeState, config: LatticeConfig | Lattice, icfg: IntegratorConfig) -> Trajectory:
    """Integrate the full nonlinear mode equations from ``ics``."""
    lat = config if isinstance(config, Lattice) else Lattice(config)
    if ics.n != lat.n:
        raise ValueError(f"initial data has {ics.n} modes, lattice has {lat.n}")
    n = lat.n
    w2 = lat.omega ** 2
    eps = lat.epsilon
    cubic = lat.cubic_force

    def accel(Q):
        return -w2 * Q + eps * cubic(Q)

    if icfg.method is Method.RK4:
        def rhs(t, y):
            return np.concatenate((y[n:], accel(y[:n])))

        def step(t, y, h):
            return rk4_step(rhs, t, y, h)
    else:
        def step(t, y, h):
            Q, V = y[:n], y[n:]
            V = V + 0.5 * h * accel(Q)
            Q = Q + h * V
            V = V + 0.5 * h * accel(Q)
            return np.concatenate((Q, V))

    energy = None
    if icfg.energy_monitor:
        def energy(row):
            return energy_mode(ModeState(row[:n], row[n:]), lat)

    y0 = np.concatenate((ics.Q, ics.Qdot))
    return _run(step, y0, icfg, energy)


def integrate_driven(
    k,
    source: Callable[[float], np.ndarray],
    omega_k,
    icfg: IntegratorConfig,
) -> Trajectory:
    """Particular solution of ``x'' + omega_k^2 x = source(t)`` with x(0) = x'(0) = 0.

    ``omega_k`` may be a scalar or a vector of frequencies, in which case
    ``source`` must return a matching vector and all oscillators are
    advanced together; ``k`` only labels the run. Always uses RK4.
    """
    w = np.atleast_1d(np.asarray(omega_k, dtype=float))
    m = w.size
    w2 = w ** 2

    def rhs(t, y):
        return np.concatenate((y[m:], np.atleast_1d(source(t)) - w2 * y[:m]))

    def step(t, y, h):
        return rk4_step(rhs, t, y, h)

    if icfg.method is not Method.RK4:
        raise ValueError("driven oracle supports RK4 only")
    return _run(step, np.zeros(2 * m), icfg)


def relative_energy_drift(traj: Trajectory) -> float:
    if traj.energy is None:
        raise ValueError("trajectory has no energy record")
    H0 = traj.energy[0]
    scale = abs(H0) if H0 != 0 else 1.0
    return float(np.max(np.abs(traj.energy - H0)) / scale)

