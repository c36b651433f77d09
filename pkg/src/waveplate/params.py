"""Model data: source and damping laws plus the derived analysis exponents.

Sources and damping are pluggable scalar laws carried together with the
growth metadata the well/blow-up machinery needs.  The pure power laws are
the defaults and the only laws exercised by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class InvalidParams(ValueError):
    """Raised by validate_params; carries the full list of violations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SourceLaw:
    """Scalar source f with antiderivative F and its growth metadata.

    Metadata contract: F(s) >= lower_const*|s|^(expo+1),
    s*f(s) >= euler_const*F(s), F(s) <= upper_bound*|s|^(expo+1) for all s.
    """

    expo: float
    f: Callable
    antiderivative: Callable
    lower_const: float
    euler_const: float
    upper_bound: float

    def __call__(self, s):
        return self.f(s)


@dataclass(frozen=True)
class DampingLaw:
    """Scalar damping g, odd and monotone increasing, with growth exponent."""

    expo: float
    coeff: float
    g: Callable
    is_power: bool = True

    def __call__(self, s):
        return self.g(s)


def power_source(expo: float) -> SourceLaw:
    """f(s) = |s|^(expo-1) s.  All three metadata constants are sharp."""
    e = float(expo)

    def f(s):
        return np.abs(s) ** (e - 1.0) * s

    def anti(s):
        return np.abs(s) ** (e + 1.0) / (e + 1.0)

    return SourceLaw(
        expo=e,
        f=f,
        antiderivative=anti,
        lower_const=1.0 / (e + 1.0),
        euler_const=e + 1.0,
        upper_bound=1.0 / (e + 1.0),
    )


def power_damping(expo: float, coeff: float) -> DampingLaw:
    """g(s) = coeff * |s|^(expo-1) s."""
    e = float(expo)
    c = float(coeff)

    def g(s):
        return c * np.abs(s) ** (e - 1.0) * s

    return DampingLaw(expo=e, coeff=c, g=g, is_power=True)


def zero_source(expo: float = 3.0) -> SourceLaw:
    """Source switched off.  The growth metadata is vacuous for the zero
    map; only regime studies built through build_params_unchecked use this."""
    e = float(expo)
    return SourceLaw(
        expo=e,
        f=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        antiderivative=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        lower_const=1.0 / (e + 1.0),
        euler_const=e + 1.0,
        upper_bound=1.0 / (e + 1.0),
    )


@dataclass(frozen=True)
class ModelParams:
    """Validated model data with every derived constant filled in."""

    p: float
    q: float
    m: float
    r: float
    alpha: float
    beta: float
    wave_source: SourceLaw
    plate_source: SourceLaw
    wave_damping: DampingLaw
    plate_damping: DampingLaw
    # growth metadata (c-constants of the two sources)
    c0: float
    c1: float
    c2: float
    c3: float
    m_wave: float
    m_plate: float
    m_bound: float  # max of the two; used wherever a single bound is needed
    lam: float  # min(c1, c3) - 3, the superlinearity margin
    # auxiliary exponents of the concavity argument
    a: float
    mu: float
    sigma1: float
    sigma2: float
    sigma: float


def _derive_exponents(p, q, m, r):
    bounds = (
        1.0 / (m + 1.0) - 1.0 / (p + 1.0),
        1.0 / (r + 1.0) - 1.0 / (q + 1.0),
        (p - 1.0) / (2.0 * (p + 1.0)),
        (q - 1.0) / (2.0 * (q + 1.0)),
    )
    # sit at the midpoint of the admissible interval for a
    a = 0.5 * min(bounds)
    mu = 1.0 / (1.0 - a)
    sigma1 = 1.0 - 2.0 / ((1.0 - 2.0 * a) * (p + 1.0))
    sigma2 = 1.0 - 2.0 / ((1.0 - 2.0 * a) * (q + 1.0))
    return a, mu, sigma1, sigma2, max(sigma1, sigma2)


def validate_params(
    p: float = 3.0,
    q: float = 3.0,
    m: float = 2.0,
    r: float = 2.0,
    alpha: float = 1.0,
    beta: float | None = None,
    dim: int | None = None,
    wave_source: SourceLaw | None = None,
    plate_source: SourceLaw | None = None,
    wave_damping: DampingLaw | None = None,
    plate_damping: DampingLaw | None = None,
) -> ModelParams:
    """Check the full hypothesis set and return the derived ModelParams.

    Raises InvalidParams carrying every violation found, not just the first.
    Custom laws may be supplied; their metadata is validated in place of the
    power-law defaults.
    """
    p, q, m, r = float(p), float(q), float(m), float(r)
    alpha = float(alpha)
    beta = alpha if beta is None else float(beta)

    ws = wave_source if wave_source is not None else power_source(p)
    ps = plate_source if plate_source is not None else power_source(q)
    wd = wave_damping if wave_damping is not None else power_damping(m, alpha)
    pd = plate_damping if plate_damping is not None else power_damping(r, beta)

    errors = []
    if not p > 1.0:
        errors.append(f"p = {p:g} must exceed 1")
    if not q > 1.0:
        errors.append(f"q = {q:g} must exceed 1")
    if not m >= 1.0:
        errors.append(f"m = {m:g} must be at least 1")
    if not r >= 1.0:
        errors.append(f"r = {r:g} must be at least 1")
    if not p > m:
        errors.append(f"source must beat damping on the chamber: p = {p:g} <= m = {m:g}")
    if not q > r:
        errors.append(f"source must beat damping on the wall: q = {q:g} <= r = {r:g}")
    if m > 0 and not p * (m + 1.0) / m < 6.0:
        errors.append(f"p(m+1)/m = {p * (m + 1.0) / m:g} must be below 6")
    if not alpha > 0.0:
        errors.append(f"alpha = {alpha:g} must be positive")
    if not beta >= alpha:
        errors.append(f"beta = {beta:g} must be at least alpha = {alpha:g}")
    if dim is not None:
        if dim == 3 and not p < 5.0:
            errors.append(f"p = {p:g} must be below 5 in three dimensions")
        if dim not in (2, 3):
            errors.append(f"dim = {dim} not supported (2 or 3)")

    for label, law in (("wave source", ws), ("wall source", ps)):
        if not law.lower_const > 0.0:
            errors.append(f"{label}: lower growth constant {law.lower_const:g} must be positive")
        if not law.upper_bound > 0.0:
            errors.append(f"{label}: upper growth bound {law.upper_bound:g} must be positive")
    if not ws.euler_const > 3.0:
        errors.append(
            f"wave source too weak for the concavity argument: c1 = {ws.euler_const:g} <= 3"
        )
    if not ps.euler_const > 3.0:
        errors.append(
            f"wall source too weak for the concavity argument: c3 = {ps.euler_const:g} <= 3"
        )
    if errors:
        raise InvalidParams(errors)

    a, mu, sigma1, sigma2, sigma = _derive_exponents(p, q, m, r)
    lam = min(ws.euler_const, ps.euler_const) - 3.0
    # these follow from the checks above; assert rather than re-collect
    assert 0.0 < a < 0.5 and 1.0 < mu < 2.0
    assert sigma1 > 0.0 and sigma2 > 0.0

    return ModelParams(
        p=p,
        q=q,
        m=m,
        r=r,
        alpha=alpha,
        beta=beta,
        wave_source=ws,
        plate_source=ps,
        wave_damping=wd,
        plate_damping=pd,
        c0=ws.lower_const,
        c1=ws.euler_const,
        c2=ps.lower_const,
        c3=ps.euler_const,
        m_wave=ws.upper_bound,
        m_plate=ps.upper_bound,
        m_bound=max(ws.upper_bound, ps.upper_bound),
        lam=lam,
        a=a,
        mu=mu,
        sigma1=sigma1,
        sigma2=sigma2,
        sigma=sigma,
    )


def build_params_unchecked(
    p: float = 3.0,
    q: float = 3.0,
    m: float = 2.0,
    r: float = 2.0,
    alpha: float = 1.0,
    beta: float | None = None,
    sources_on: bool = True,
    damping_on: bool = True,
) -> ModelParams:
    """Assemble ModelParams without the hypothesis checks.

    Needed for regime studies the blow-up theory does not cover, e.g. the
    conservative configuration (sources and damping off) used to verify the
    integrator order.  Analysis quantities derived here are meaningless when
    the switches are off; the stepper and the energy bookkeeping are not.
    """
    p, q, m, r = float(p), float(q), float(m), float(r)
    alpha = float(alpha) if damping_on else 0.0
    beta = alpha if beta is None else float(beta)
    if not damping_on:
        beta = 0.0
    ws = power_source(p) if sources_on else zero_source(p)
    ps = power_source(q) if sources_on else zero_source(q)
    a, mu, sigma1, sigma2, sigma = _derive_exponents(p, q, m, r)
    return ModelParams(
        p=p, q=q, m=m, r=r, alpha=alpha, beta=beta,
        wave_source=ws, plate_source=ps,
        wave_damping=power_damping(m, alpha),
        plate_damping=power_damping(r, beta),
        c0=ws.lower_const, c1=ws.euler_const, c2=ps.lower_const, c3=ps.euler_const,
        m_wave=ws.upper_bound, m_plate=ps.upper_bound,
        m_bound=max(ws.upper_bound, ps.upper_bound),
        lam=min(ws.euler_const, ps.euler_const) - 3.0,
        a=a, mu=mu, sigma1=sigma1, sigma2=sigma2, sigma=sigma,
    )
