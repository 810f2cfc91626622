"""First-order Lindstedt series for the fixed-end FPU-beta lattice."""

from .lattice import (
    InvalidModeIndex,
    Lattice,
    LatticeConfig,
    ModeState,
    SiteState,
    coupling,
    delta,
    eom_rhs,
    energy_mode,
    energy_site,
    mode_to_site,
    omega,
    site_to_mode,
    spectrum,
)
from .lindstedt import (
    FrequencyShift,
    SeriesSolution,
    build_series,
    q0_eval,
    q1_eval,
    restricted_terms,
    rho_first_order,
    rho_self_consistent,
    series_eval,
)
from .integrate import IntegratorConfig, Trajectory, integrate, integrate_driven
from .harness import ComparisonReport, repro_n2, run_compare

__version__ = "0.1.0"
