"""Solution states, trajectories, and solver error types."""

from dataclasses import dataclass, field

import numpy as np

from .fields import SpectralField


class CFLError(RuntimeError):
    """Time step too large for the current state.

    Carries `suggested_dt`, the largest admissible step at the moment the
    check fired.
    """

    def __init__(self, dt, suggested_dt, detail=""):
        self.dt = dt
        self.suggested_dt = suggested_dt
        msg = f"dt={dt:g} exceeds stability bound; suggested dt <= {suggested_dt:g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class VacuumError(RuntimeError):
    """Density reached zero (or below) somewhere on the grid."""


@dataclass(frozen=True)
class ViscosityParams:
    """Shear viscosity mu and volume viscosity lam; nu = lam + 2*mu."""

    mu: float
    lam: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.nu > 0:
            raise ValueError(f"nu = lam + 2*mu must be positive, got {self.nu}")

    @property
    def nu(self):
        return self.lam + 2.0 * self.mu

    @property
    def in_stability_regime(self):
        """Whether mu <= nu, the regime of the stability statements."""
        return self.mu <= self.nu


@dataclass(frozen=True)
class PressureLaw:
    """Gamma-law pressure P(rho) = rho^gamma / gamma, so that P'(1) = 1."""

    gamma: float = 2.0

    def __post_init__(self):
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    def pressure(self, rho):
        return rho ** self.gamma / self.gamma

    def pressure_prime(self, rho):
        return rho ** (self.gamma - 1.0)

    def kappa_pointwise(self, a):
        """k(a) = P'(1 + a) - P'(1), elementwise on physical samples."""
        return (1.0 + a) ** (self.gamma - 1.0) - 1.0


@dataclass(frozen=True)
class InsState:
    """Incompressible state: divergence-free velocity V at time t."""

    t: float
    V: SpectralField
    mu: float


@dataclass(frozen=True)
class CnsState:
    """Compressible state: density deviation a = rho - 1 and velocity v."""

    t: float
    a: SpectralField
    v: SpectralField
    params: ViscosityParams
    law: PressureLaw


@dataclass
class Trajectory:
    """Time-ordered saved states plus dense per-step scalar diagnostics.

    `states` holds snapshots every save interval (first and last step always
    included).  `diagnostics` maps series names to arrays sampled at every
    step; all series share the ``t`` axis.  Treated as immutable once a run
    returns it.
    """

    states: list
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)

    def final(self):
        if not self.states:
            raise ValueError("empty trajectory")
        return self.states[-1]


def trapezoid(times, values):
    """Integral of a sampled time series by the trapezoid rule."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        return 0.0
    return float(np.trapezoid(values, times))
