"""Three-stage cell formation model: right-hand side, steady states, Jacobian.

The model tracks stem cells (u1), progenitor cells (u2) and mature cells (u3),
in cells per kg of body weight. Mature cells throttle self-renewal of the two
immature stages through a feedback signal

    s(u3) = 1 / (1 + k*u3),

so a high mature count suppresses self-renewal. With self-renewal fractions
a1, a2, proliferation rates p1, p2, death rates d1, d2 (immature stages) and
d3 (mature clearance), the dynamics are

    u1' = (2*a1*s - 1)*p1*u1 - d1*u1
    u2' = (2*a2*s - 1)*p2*u2 + 2*(1 - a1*s)*p1*u1 - d2*u2
    u3' = 2*(1 - a2*s)*p2*u2 - d3*u3

All rates are per day. The d1 = d2 = 0 case is referred to as the "basic"
variant throughout; it admits fully explicit steady states and stability
boundaries (see `stability`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "ModelParameters",
    "CellState",
    "SteadyState",
    "InvariantBox",
    "feedback_signal",
    "rhs",
    "residual_scale",
    "nondimensionalize",
    "steady_state_E0",
    "steady_state_E1",
    "steady_state_E2",
    "steady_states",
    "place_E2",
    "jacobian",
    "invariant_box",
]


@dataclass(frozen=True)
class ModelParameters:
    """Rates and fractions defining one model instance.

    Parameters
    ----------
    a1, a2 : float
        Self-renewal fractions of stem and progenitor divisions, in (0, 1).
    p1, p2 : float
        Proliferation rates of the two immature stages (1/day), positive.
    d3 : float
        Clearance rate of mature cells (1/day), positive.
    k : float
        Feedback strength (kg/cells), positive. Sets the scale of the
        positive steady state: counts are proportional to 1/k.
    d1, d2 : float, optional
        Death rates of the immature stages (1/day), nonnegative. Both zero
        selects the basic variant.
    """

    a1: float
    a2: float
    p1: float
    p2: float
    d3: float
    k: float
    d1: float = 0.0
    d2: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.a1 < 1.0 and 0.0 < self.a2 < 1.0):
            raise ValueError(
                f"self-renewal fractions must lie in (0, 1), got a1={self.a1}, a2={self.a2}"
            )
        if not (self.p1 > 0.0 and self.p2 > 0.0):
            raise ValueError(f"proliferation rates must be positive, got p1={self.p1}, p2={self.p2}")
        if not self.d3 > 0.0:
            raise ValueError(f"mature clearance d3 must be positive, got {self.d3}")
        if not self.k > 0.0:
            raise ValueError(f"feedback strength k must be positive, got {self.k}")
        if self.d1 < 0.0 or self.d2 < 0.0:
            raise ValueError(f"death rates must be nonnegative, got d1={self.d1}, d2={self.d2}")

    @property
    def is_basic(self) -> bool:
        """True when d1 = d2 = 0."""
        return self.d1 == 0.0 and self.d2 == 0.0

    def with_(self, **changes) -> "ModelParameters":
        """Copy with the given fields replaced (validates the result)."""
        return replace(self, **changes)


@dataclass(frozen=True)
class CellState:
    """Nonnegative cell counts (cells/kg) of the three stages."""

    u1: float
    u2: float
    u3: float

    def __post_init__(self):
        if self.u1 < 0.0 or self.u2 < 0.0 or self.u3 < 0.0:
            raise ValueError(f"cell counts must be nonnegative, got ({self.u1}, {self.u2}, {self.u3})")
        if not (math.isfinite(self.u1) and math.isfinite(self.u2) and math.isfinite(self.u3)):
            raise ValueError("cell counts must be finite")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.u1, self.u2, self.u3)

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3], dtype=float)


@dataclass(frozen=True)
class SteadyState:
    """A steady state with its conventional label.

    E0 is extinction, E1 the stem-free state, E2 the fully positive state.
    """

    label: str
    state: CellState


@dataclass(frozen=True)
class InvariantBox:
    """Componentwise bounds on a trajectory, [0,c1] x [0,c2] x [0,c3].

    b1, b2 bound the ratios u1/u2 and u2/u3; k1..k3 are the asymptotic
    count bounds derived from them; c_i = max(k_i, u_i(0)) also covers the
    given initial state.
    """

    c1: float
    c2: float
    c3: float
    b1: float
    b2: float
    k1: float
    k2: float
    k3: float

    def contains(self, state: CellState, rel_slack: float = 0.0) -> bool:
        """Componentwise check, optionally with relative slack on the bounds."""
        f = 1.0 + rel_slack
        return state.u1 <= self.c1 * f and state.u2 <= self.c2 * f and state.u3 <= self.c3 * f


def feedback_signal(k: float, u3: float) -> float:
    """Feedback level s = 1/(1 + k*u3), in (0, 1] for nonnegative u3."""
    if k <= 0.0:
        raise ValueError(f"feedback strength k must be positive, got {k}")
    if u3 < 0.0:
        raise ValueError(f"mature cell count must be nonnegative, got {u3}")
    return 1.0 / (1.0 + k * u3)


def _rhs_values(p: ModelParameters, u1: float, u2: float, u3: float) -> Tuple[float, float, float]:
    # no validation, shared by rhs() and the integrator internals
    s = 1.0 / (1.0 + p.k * u3)
    du1 = (2.0 * p.a1 * s - 1.0) * p.p1 * u1 - p.d1 * u1
    du2 = (2.0 * p.a2 * s - 1.0) * p.p2 * u2 + 2.0 * (1.0 - p.a1 * s) * p.p1 * u1 - p.d2 * u2
    du3 = 2.0 * (1.0 - p.a2 * s) * p.p2 * u2 - p.d3 * u3
    return du1, du2, du3


def rhs(params: ModelParameters, state: CellState) -> Tuple[float, float, float]:
    """Time derivatives (u1', u2', u3') at the given state.

    The closed first octant is forward invariant: any component at zero has a
    nonnegative derivative, since a1*s < 1 and a2*s < 1 for s in (0, 1].
    """
    return _rhs_values(params, state.u1, state.u2, state.u3)


def residual_scale(params: ModelParameters, state: CellState) -> float:
    """Gross flux magnitude used to normalize steady-state residuals."""
    s = feedback_signal(params.k, state.u3)
    f1 = (params.p1 + params.d1) * state.u1
    f2 = (params.p2 + params.d2) * state.u2 + 2.0 * (1.0 - params.a1 * s) * params.p1 * state.u1
    f3 = 2.0 * (1.0 - params.a2 * s) * params.p2 * state.u2 + params.d3 * state.u3
    return max(f1, f2, f3)


def nondimensionalize(params: ModelParameters) -> ModelParameters:
    """Rescale time by the stem proliferation rate so that p1 = 1.

    Rates divide by p1; fractions and the feedback strength are unchanged.
    Trajectories map as y_rescaled(p1 * t) = y(t). Positivity of p1 is
    enforced at construction.
    """
    q = params.p1
    return ModelParameters(
        a1=params.a1,
        a2=params.a2,
        p1=1.0,
        p2=params.p2 / q,
        d3=params.d3 / q,
        k=params.k,
        d1=params.d1 / q,
        d2=params.d2 / q,
    )


def steady_state_E0() -> SteadyState:
    """The extinction state (0, 0, 0); always a steady state."""
    return SteadyState("E0", CellState(0.0, 0.0, 0.0))


def steady_state_E1(params: ModelParameters) -> Optional[SteadyState]:
    """Stem-free steady state (0, u2, u3), or None when it does not exist.

    The progenitor balance pins the feedback level at (p2 + d2)/(2*a2*p2),
    which lies below 1 (so u3 > 0) exactly when d2 < (2*a2 - 1)*p2; for
    d2 = 0 this is the familiar a2 > 1/2 condition.
    """
    u3 = (2.0 * params.a2 * params.p2 / (params.p2 + params.d2) - 1.0) / params.k
    if not u3 > 0.0:
        return None
    # p2 - d2 > 0 is implied by the existence condition
    u2 = params.d3 * u3 / (params.p2 - params.d2)
    return SteadyState("E1", CellState(0.0, u2, u3))


def steady_state_E2(params: ModelParameters) -> Optional[SteadyState]:
    """Fully positive steady state, or None when it does not exist.

    The stem balance pins the feedback level at s = (p1 + d1)/(2*a1*p1);
    the three positivity conditions are s < 1, a2*s < 1 and
    d2 > (2*a2*s - 1)*p2. For d1 = d2 = 0 they reduce to a1 > 1/2 and
    a2 < a1, with

        u3 = (2*a1 - 1)/k,
        u2 = d3*u3 / ((2 - a2/a1)*p2),
        u1 = (1 - a2/a1)*(p2/p1)*u2.
    """
    s = (params.p1 + params.d1) / (2.0 * params.a1 * params.p1)
    if not s < 1.0:
        return None
    u3 = (1.0 / s - 1.0) / params.k
    a2s = params.a2 * s
    if not a2s < 1.0:
        return None
    u2 = params.d3 * u3 / (2.0 * (1.0 - a2s) * params.p2)
    excess = params.d2 - (2.0 * a2s - 1.0) * params.p2
    if not excess > 0.0:
        return None
    # s < 1 forces d1 < (2*a1 - 1)*p1 < p1, so the denominator is positive
    u1 = excess * u2 / (params.p1 - params.d1)
    return SteadyState("E2", CellState(u1, u2, u3))


def steady_states(params: ModelParameters) -> Tuple[SteadyState, ...]:
    """All existing steady states, in (E0, E1, E2) order."""
    out = [steady_state_E0()]
    e1 = steady_state_E1(params)
    if e1 is not None:
        out.append(e1)
    e2 = steady_state_E2(params)
    if e2 is not None:
        out.append(e2)
    return tuple(out)


def place_E2(target: CellState, a1: float, a2: float, p1: float) -> Tuple[float, float, float]:
    """Invert the basic E2 formulas: rates (k, d3, p2) placing E2 at `target`.

    Requires a1 > 1/2, 0 < a2 < a1 and strictly positive target counts.
    Round trip: steady_state_E2 with the returned rates (and d1 = d2 = 0)
    reproduces `target` exactly up to floating point.
    """
    if not a1 > 0.5:
        raise ValueError(f"a positive steady state needs a1 > 1/2, got a1={a1}")
    if not 0.0 < a2 < a1:
        raise ValueError(f"placement needs 0 < a2 < a1, got a1={a1}, a2={a2}")
    if not p1 > 0.0:
        raise ValueError(f"p1 must be positive, got {p1}")
    if not (target.u1 > 0.0 and target.u2 > 0.0 and target.u3 > 0.0):
        raise ValueError("target counts must be strictly positive")
    r = a2 / a1
    k = (2.0 * a1 - 1.0) / target.u3
    d3 = (2.0 - r) / (1.0 - r) * (target.u1 / target.u3) * p1
    p2 = d3 / (2.0 - r) * (target.u3 / target.u2)
    return k, d3, p2


def jacobian(params: ModelParameters, state: CellState) -> np.ndarray:
    """3x3 Jacobian of the right-hand side at `state`.

    Uses ds/du3 = -k*s^2. The (1,2) and (3,1) entries vanish identically:
    stem cells do not react to progenitors, mature cells not to stem cells.
    """
    s = feedback_signal(params.k, state.u3)
    ds = -params.k * s * s
    a1, a2 = params.a1, params.a2
    p1, p2 = params.p1, params.p2
    j11 = (2.0 * a1 * s - 1.0) * p1 - params.d1
    j13 = 2.0 * a1 * p1 * state.u1 * ds
    j21 = 2.0 * (1.0 - a1 * s) * p1
    j22 = (2.0 * a2 * s - 1.0) * p2 - params.d2
    j23 = (2.0 * a2 * p2 * state.u2 - 2.0 * a1 * p1 * state.u1) * ds
    j32 = 2.0 * (1.0 - a2 * s) * p2
    j33 = -2.0 * a2 * p2 * state.u2 * ds - params.d3
    return np.array([[j11, 0.0, j13], [j21, j22, j23], [0.0, j32, j33]])


def invariant_box(params: ModelParameters, initial: CellState) -> InvariantBox:
    """Box that trajectories from `initial` do not leave.

    Constants are computed on the rescaled (p1 = 1) parameters; rescaling
    only reparametrizes time, so the bounds apply to the original system as
    well. b1 bounds the ratio u1/u2 via

        (u1/u2)' < [1 + p2 + d2 - d1 - 2*(1 - a1)*(u1/u2)] * (u1/u2),

    b2 bounds u2/u3 analogously, and the count bounds follow from the
    feedback dropping below the self-renewal break-even once counts are
    large. If u2(0) or u3(0) is zero the ratio bounds are infinite and the
    box degenerates (still correct, just not informative).
    """
    q = nondimensionalize(params)
    v1 = initial.u1 / initial.u2 if initial.u2 > 0.0 else math.inf
    v2 = initial.u2 / initial.u3 if initial.u3 > 0.0 else math.inf
    b1 = (1.0 + q.p2 + q.d2 - q.d1) / (2.0 * (1.0 - q.a1))
    b2 = (2.0 * b1 + q.d3 + q.p2) / (2.0 * (1.0 - q.a2))
    m1 = max(b1, v1)
    m2 = max(b2, v2)
    k1 = m2 * m1 * (2.0 * q.a1 - 1.0) / q.k
    k2 = max((4.0 * q.a2 - 1.0) * m2 / q.k, 4.0 * k1 / q.p2)
    k3 = 2.0 * q.p2 * k2 / q.d3
    return InvariantBox(
        c1=max(k1, initial.u1),
        c2=max(k2, initial.u2),
        c3=max(k3, initial.u3),
        b1=b1,
        b2=b2,
        k1=k1,
        k2=k2,
        k3=k3,
    )
