"""Model parameters and closed-form exponent laws of the log-normal cascade.

Everything in this module is a pure function of the parameter record; the
random machinery lives elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ModelParams:
    """Parameters of a log-normal multifractal measure on [-R, R]^m.

    m       spatial dimension (1 or 2)
    gamma2  intermittency gamma^2 >= 0; gamma2 < 2m is the non-degenerate range
    T       correlation length
    R       domain radius (simulation square is [-R, R]^m, ball B_R inscribed)
    seed    64-bit base seed; every random stream is derived from it
    """

    m: int
    gamma2: float
    T: float
    R: float
    seed: int = 0

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ValueError(f"spatial dimension must be 1 or 2, got {self.m}")
        if not self.gamma2 >= 0.0:
            raise ValueError(f"gamma2 must be >= 0, got {self.gamma2}")
        if self.gamma2 > 2.0 * self.m:
            raise ValueError(
                f"gamma2={self.gamma2} exceeds 2*m={2 * self.m}: the measure "
                "degenerates and no finite-intermittency construction exists"
            )
        if not self.T > 0.0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if not self.R > 0.0:
            raise ValueError(f"R must be > 0, got {self.R}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 bits")

    @property
    def intermittency(self) -> float:
        """psi'(1) = gamma^2 / 2, the parameter governing degeneracy."""
        return self.gamma2 / 2.0

    def header_items(self) -> dict:
        return {
            "m": self.m,
            "gamma2": self.gamma2,
            "T": self.T,
            "R": self.R,
            "seed": int(self.seed),
        }

    @classmethod
    def from_header_items(cls, items: dict) -> "ModelParams":
        return cls(
            m=int(items["m"]),
            gamma2=float(items["gamma2"]),
            T=float(items["T"]),
            R=float(items["R"]),
            seed=int(items["seed"]),
        )


def psi(params: ModelParams, q: float) -> float:
    """Laplace exponent of the log-normal cascade, psi(q) = (g2/2) q (q-1).

    Normalized so psi(1) = 0 and psi(0) = 0; convex in q.
    """
    return 0.5 * params.gamma2 * q * (q - 1.0)


def zeta(params: ModelParams, q: float) -> float:
    """Structure exponent zeta(q) = m q - psi(q); zeta(1) = m."""
    return params.m * q - psi(params, q)


def is_non_degenerate(params: ModelParams) -> bool:
    """True when psi'(1) < m, i.e. gamma2 < 2m (the measure is nonzero)."""
    return params.intermittency < params.m


def min_steps(params: ModelParams) -> int:
    """Number of transport steps needed to push the measure onto Lebesgue.

    One step suffices when psi'(1) < 1 (the measure charges no small set);
    otherwise the smallest n with m*psi(2) < n*(m - psi'(1)).
    """
    if not is_non_degenerate(params):
        raise ValueError(
            f"degenerate parameters (gamma2={params.gamma2} >= 2m): no step "
            "count makes the transport problem well posed"
        )
    if params.intermittency < 1.0:
        return 1
    lhs = params.m * psi(params, 2.0)
    slack = params.m - params.intermittency
    n = max(1, math.floor(lhs / slack) + 1)
    while not lhs < n * slack:  # guard against float round-off at the boundary
        n += 1
    return n


def omega_lambda_moments(params: ModelParams, lam: float, q: float) -> float:
    """Exponential moment E[exp(q * Omega_lam)] = lam^(-psi(q)) of the
    log-normal scale factor, for rescaling ratios lam in (0, 1]."""
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return lam ** (-psi(params, q))


@dataclass(frozen=True)
class ExponentTable:
    """Rows (q, psi(q), zeta(q)); zeta = m*q - psi row by row."""

    m: int
    rows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for q, p, z in self.rows:
            if abs(z - (self.m * q - p)) > 1e-12 * max(1.0, abs(z)):
                raise ValueError(f"inconsistent exponent row (q={q})")


def exponent_table(params: ModelParams, qs) -> ExponentTable:
    rows = tuple((float(q), psi(params, q), zeta(params, q)) for q in qs)
    return ExponentTable(m=params.m, rows=rows)
