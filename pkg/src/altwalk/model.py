"""Coin parameters and derived constants of the two-dimensional alternate-coin walk.

The walk applies, per time step, a 2x2 coin and a spin-dependent shift along
axis 1, then a second coin and shift along axis 2.  Each coin is determined by
a modulus |a_q| in (0, 1) and three phases (alpha_q, beta_q, delta_q); the
off-diagonal modulus is |b_q| = sqrt(1 - |a_q|^2), so the coin is unitary with
determinant e^{i delta_q}.

Everything downstream (spectral formulas, limit support, Jacobians) depends on
the parameters only through the products a = |a_1||a_2| and b = |b_1||b_2| and
a handful of derived constants collected in ``DerivedConstants``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEGENERACY_TOL",
    "ParameterDomainError",
    "CoinParameters",
    "DerivedConstants",
    "Model",
    "wrap_angle",
    "derive_constants",
    "build_model",
]

# a + b = 1 within this tolerance switches the degenerate (single-ellipse) path
DEGENERACY_TOL = 1e-12

_TWO_PI = 2.0 * math.pi


class ParameterDomainError(ValueError):
    """Raised when coin parameters leave their admissible domain."""


def wrap_angle(x):
    """Reduce an angle (or array of angles) to the half-open interval [-pi, pi)."""
    return x - _TWO_PI * np.floor((x + math.pi) / _TWO_PI)


@dataclass(frozen=True)
class CoinParameters:
    """Moduli and phases of the two coins; angles are stored reduced to [-pi, pi)."""

    modulus_a1: float
    alpha1: float
    beta1: float
    delta1: float
    modulus_a2: float
    alpha2: float
    beta2: float
    delta2: float

    def __post_init__(self):
        for name in ("modulus_a1", "modulus_a2"):
            m = getattr(self, name)
            if not (isinstance(m, (int, float)) and math.isfinite(m)):
                raise ParameterDomainError(f"{name} must be a finite real, got {m!r}")
            if not 0.0 < m < 1.0:
                raise ParameterDomainError(
                    f"{name} must lie strictly inside (0, 1), got {m}"
                )
        for name in ("alpha1", "beta1", "delta1", "alpha2", "beta2", "delta2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ParameterDomainError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(wrap_angle(float(v))))
        object.__setattr__(self, "modulus_a1", float(self.modulus_a1))
        object.__setattr__(self, "modulus_a2", float(self.modulus_a2))

    @property
    def modulus_b1(self) -> float:
        return math.sqrt(1.0 - self.modulus_a1**2)

    @property
    def modulus_b2(self) -> float:
        return math.sqrt(1.0 - self.modulus_a2**2)

    @classmethod
    def from_squared_moduli(
        cls,
        a1_sq: float,
        a2_sq: float,
        alpha1: float = 0.0,
        alpha2: float = 0.0,
        beta1: float = 0.0,
        beta2: float = 0.0,
        delta1: float = 0.0,
        delta2: float = 0.0,
    ) -> "CoinParameters":
        """Build parameters from the squared moduli |a_q|^2 used in config files."""
        for name, v in (("a1_sq", a1_sq), ("a2_sq", a2_sq)):
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ParameterDomainError(f"{name} must be a finite real, got {v!r}")
            if not 0.0 < v < 1.0:
                raise ParameterDomainError(
                    f"{name} must lie strictly inside (0, 1), got {v}"
                )
        return cls(
            modulus_a1=math.sqrt(a1_sq),
            alpha1=alpha1,
            beta1=beta1,
            delta1=delta1,
            modulus_a2=math.sqrt(a2_sq),
            alpha2=alpha2,
            beta2=beta2,
            delta2=delta2,
        )


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from the coin moduli and phases.

    a and b are the products |a_1||a_2| and |b_1||b_2|; they satisfy
    0 < a, 0 < b and a + b <= 1.  D_J is the discriminant
    (1 - (a^2 + b^2))^2 - 4 a^2 b^2, zero exactly when a + b = 1.  j_plus and
    j_minus are the roots of a b x^2 + (1 - (a^2 + b^2)) x + a b; their product
    is 1 and j_minus <= -1 <= j_plus < 0.  The axis_* values are the squared
    semi-axis lengths of the two support ellipses in the rotated velocity
    frame; they satisfy axis_R1 * axis_T1 = 4 a^2 and
    axis_R2 * axis_T2 = 4 b^2.  phi_1 and phi_2 are the wavenumber offsets
    produced by the coin phases alpha_q, beta_q.
    """

    a: float
    b: float
    delta: float
    D_J: float
    sqrt_D_J: float
    j_plus: float
    j_minus: float
    axis_R1: float
    axis_R2: float
    axis_T1: float
    axis_T2: float
    phi_1: float
    phi_2: float
    degenerate: bool


def derive_constants(params: CoinParameters) -> DerivedConstants:
    a = params.modulus_a1 * params.modulus_a2
    b = params.modulus_b1 * params.modulus_b2
    degenerate = abs(a + b - 1.0) <= DEGENERACY_TOL

    lin = 1.0 - (a * a + b * b)  # linear coefficient of the root polynomial
    if degenerate:
        # exact limits: the discriminant vanishes and both roots collapse to -1
        d_j = 0.0
        sqrt_d_j = 0.0
        j_plus = -1.0
        j_minus = -1.0
    else:
        d_j = max(lin * lin - 4.0 * a * a * b * b, 0.0)
        sqrt_d_j = math.sqrt(d_j)
        j_plus = (-lin + sqrt_d_j) / (2.0 * a * b)
        j_minus = (-lin - sqrt_d_j) / (2.0 * a * b)

    return DerivedConstants(
        a=a,
        b=b,
        delta=params.delta2 + params.delta1,
        D_J=d_j,
        sqrt_D_J=sqrt_d_j,
        j_plus=j_plus,
        j_minus=j_minus,
        axis_R1=1.0 + a * a - b * b + sqrt_d_j,
        axis_R2=1.0 - a * a + b * b - sqrt_d_j,
        axis_T1=1.0 + a * a - b * b - sqrt_d_j,
        axis_T2=1.0 - a * a + b * b + sqrt_d_j,
        phi_1=0.5 * (params.alpha2 + params.alpha1 - params.beta2 + params.beta1),
        phi_2=0.5 * (params.alpha2 + params.alpha1 + params.beta2 - params.beta1),
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class Model:
    """A parameter set together with its derived constants and coin matrices."""

    params: CoinParameters
    derived: DerivedConstants

    @property
    def a1(self) -> complex:
        return self.params.modulus_a1 * np.exp(1j * self.params.alpha1)

    @property
    def b1(self) -> complex:
        return self.params.modulus_b1 * np.exp(1j * self.params.beta1)

    @property
    def a2(self) -> complex:
        return self.params.modulus_a2 * np.exp(1j * self.params.alpha2)

    @property
    def b2(self) -> complex:
        return self.params.modulus_b2 * np.exp(1j * self.params.beta2)

    def coin_matrix(self, q: int) -> np.ndarray:
        """2x2 unitary coin for axis q in {1, 2}, determinant e^{i delta_q}."""
        if q == 1:
            aq, bq, dq = self.a1, self.b1, self.params.delta1
        elif q == 2:
            aq, bq, dq = self.a2, self.b2, self.params.delta2
        else:
            raise ValueError(f"axis index must be 1 or 2, got {q}")
        phase = np.exp(0.5j * dq)
        return phase * np.array(
            [[aq, bq], [-np.conj(bq), np.conj(aq)]], dtype=np.complex128
        )


def build_model(params: CoinParameters) -> Model:
    return Model(params=params, derived=derive_constants(params))
