"""Regularized principal-value and residue currents in one complex variable.

Conventions, fixed once for the whole module and validated against
quadrature oracles rather than asserted a priori:

* test data is a compactly supported function phi(z) = bump(|z|^2/R^2) *
  p(z, zbar); the pairing integrates against the volume form
  dzbar ^ dz = 2i dm  (dm = Lebesgue measure on C);
* the principal value [1/z^k] acts by  lim_e  int chi(|z|^2/e^2) z^-k phi 2i dm;
* the residue dbar[1/z^k] acts by  lim_e  int chi'(|z|^2/e^2) (z/e^2) z^-k phi 2i dm,
  which for k = 1 reproduces 2*pi*i * phi(0) (a Cauchy-type identity);
* ordered products regularize each factor separately and take iterated limits
  from the inner factor outward, so the two orderings may differ.

Quadrature is a deterministic polar grid: Gauss-Legendre panels in the radius
(geometrically refined near |z| = eps where the cutoff varies) and a
trapezoidal rule in the angle, which is exact for the finite trigonometric
polynomials appearing here.  Limits are taken by Richardson extrapolation in
eps^2 over the tail of a decreasing schedule.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class QuadratureError(RuntimeError):
    """The radial quadrature failed to stabilize; carries an error estimate."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


# ---------------------------------------------------------------------------
# cutoff profiles

@dataclass(frozen=True)
class CutoffProfile:
    """Smooth chi with chi = 0 on (-inf, 1], chi = 1 on [2, inf), monotone
    in between and at least C^2."""

    name: str
    chi: Callable[[float], float]
    dchi: Callable[[float], float]


def _smoothstep_chi(t: float) -> float:
    if t <= 1.0:
        return 0.0
    if t >= 2.0:
        return 1.0
    u = t - 1.0
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_dchi(t: float) -> float:
    if t <= 1.0 or t >= 2.0:
        return 0.0
    u = t - 1.0
    return 30.0 * u * u * (1.0 - u) * (1.0 - u)


def _exp_g(x: float) -> float:
    return math.exp(-1.0 / x) if x > 0.0 else 0.0


def _expsplice_chi(t: float) -> float:
    if t <= 1.0:
        return 0.0
    if t >= 2.0:
        return 1.0
    u = t - 1.0
    a, b = _exp_g(u), _exp_g(1.0 - u)
    return a / (a + b)


def _expsplice_dchi(t: float) -> float:
    if t <= 1.0 or t >= 2.0:
        return 0.0
    u = t - 1.0
    a, b = _exp_g(u), _exp_g(1.0 - u)
    da = a / (u * u)
    db = -b / ((1.0 - u) * (1.0 - u))
    return (da * b - a * db) / (a + b) ** 2


SMOOTHSTEP = CutoffProfile("smoothstep", _smoothstep_chi, _smoothstep_dchi)
EXPSPLICE = CutoffProfile("expsplice", _expsplice_chi, _expsplice_dchi)
PROFILES = {p.name: p for p in (SMOOTHSTEP, EXPSPLICE)}


# ---------------------------------------------------------------------------
# test forms

def _bump(t: float) -> float:
    if t >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - t))


def _dbump(t: float) -> float:
    if t >= 1.0:
        return 0.0
    w = 1.0 - t
    return -_bump(t) / (w * w)


@dataclass(frozen=True)
class TestForm:
    """phi(z) = bump(|z|^2/R^2) * sum c_{ab} z^a zbar^b, supported in |z| < R."""

    radius: float
    terms: tuple[tuple[int, int, complex], ...]  # (a, b, coefficient)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("support radius must be positive")

    @classmethod
    def from_dict(cls, radius: float, coeffs: dict) -> "TestForm":
        terms = tuple(sorted((a, b, complex(c)) for (a, b), c in coeffs.items() if c != 0))
        return cls(radius, terms)

    @classmethod
    def radial_bump(cls, radius: float, scale: complex = 1.0) -> "TestForm":
        return cls.from_dict(radius, {(0, 0): scale})

    def poly_value(self, z: complex) -> complex:
        zb = z.conjugate()
        return sum(c * z**a * zb**b for a, b, c in self.terms)

    def value(self, z: complex) -> complex:
        t = abs(z) ** 2 / self.radius**2
        b = _bump(t)
        if b == 0.0:
            return 0.0
        return b * self.poly_value(z)

    def dbar_value(self, z: complex) -> complex:
        """d phi / d zbar, analytic: bump'(t) (z/R^2) p + bump(t) p_zbar."""
        t = abs(z) ** 2 / self.radius**2
        b = _bump(t)
        db = _dbump(t)
        zb = z.conjugate()
        p = self.poly_value(z)
        p_zb = sum(c * b_ * z**a * zb ** (b_ - 1) for a, b_, c in self.terms if b_ > 0)
        return db * (z / self.radius**2) * p + b * p_zb

    def value_at_zero(self) -> complex:
        return complex(sum(c for a, b, c in self.terms if a == 0 and b == 0))

    def max_angular_mode(self) -> int:
        return max((a + b for a, b, _ in self.terms), default=0)

    def scaled(self, c: complex) -> "TestForm":
        return TestForm(self.radius, tuple((a, b, coef * c) for a, b, coef in self.terms))

    def __add__(self, other: "TestForm") -> "TestForm":
        if other.radius != self.radius:
            raise ValueError("cannot add test forms with different radii")
        coeffs: dict = {}
        for a, b, c in self.terms + other.terms:
            coeffs[(a, b)] = coeffs.get((a, b), 0) + c
        return TestForm.from_dict(self.radius, coeffs)


# ---------------------------------------------------------------------------
# epsilon schedules

@dataclass(frozen=True)
class EpsilonSchedule:
    """Strictly decreasing positive values; Richardson uses the last tail."""

    values: tuple[float, ...]
    richardson_tail: int = 4

    def __post_init__(self):
        if len(self.values) < 4:
            raise ValueError("schedule needs at least 4 values")
        if any(e <= 0 for e in self.values):
            raise ValueError("epsilon values must be positive")
        if any(a <= b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("epsilon values must be strictly decreasing")

    @classmethod
    def geometric(cls, start: float, ratio: float = 0.5, count: int = 5) -> "EpsilonSchedule":
        vals = tuple(start * ratio**i for i in range(count))
        return cls(vals)

    def scaled(self, factor: float) -> "EpsilonSchedule":
        return EpsilonSchedule(tuple(v * factor for v in self.values), self.richardson_tail)


DEFAULT_SCHEDULE = EpsilonSchedule.geometric(0.4, 0.5, 6)


def _richardson(eps: Sequence[float], vals: Sequence[complex]) -> tuple[complex, float]:
    """Neville extrapolation to eps -> 0 in the variable h = eps^2."""
    h = [e * e for e in eps]
    table = list(vals)
    n = len(table)
    prev_last = table[-1]
    for m in range(1, n):
        new = []
        for i in range(n - m):
            num = h[i] * table[i + 1] - h[i + m] * table[i]
            new.append(num / (h[i] - h[i + m]))
        table = new
    err = abs(table[0] - prev_last)
    return table[0], err


# ---------------------------------------------------------------------------
# polar quadrature

def _gauss_panel(fn, r0: float, r1: float, n_theta: int, gl_order: int) -> complex:
    nodes, weights = np.polynomial.legendre.leggauss(gl_order)
    mid, half = 0.5 * (r0 + r1), 0.5 * (r1 - r0)
    total = 0.0 + 0.0j
    thetas = [2.0 * math.pi * k / n_theta for k in range(n_theta)]
    phases = [cmath.exp(1j * th) for th in thetas]
    dtheta = 2.0 * math.pi / n_theta
    for x, w in zip(nodes, weights):
        rho = mid + half * x
        ring_sum = 0.0 + 0.0j
        for ph in phases:
            ring_sum += fn(rho * ph)
        total += w * half * rho * ring_sum * dtheta
    return total


def _integrate_rings(fn, rings: list[tuple[float, float]], n_theta: int, gl_order: int = 24) -> complex:
    return sum(_gauss_panel(fn, r0, r1, n_theta, gl_order) for r0, r1 in rings if r1 > r0)


def _adaptive_rings(fn, rings, n_theta, rtol=1e-9, atol=1e-13) -> complex:
    """Panel integration with one refinement check; raises on non-convergence."""
    coarse = _integrate_rings(fn, rings, n_theta, gl_order=24)
    halved = []
    for r0, r1 in rings:
        rm = 0.5 * (r0 + r1)
        halved.extend([(r0, rm), (rm, r1)])
    fine = _integrate_rings(fn, halved, n_theta, gl_order=32)
    err = abs(fine - coarse)
    if err > max(atol, rtol * max(abs(fine), 1.0)):
        quartered = []
        for r0, r1 in halved:
            rm = 0.5 * (r0 + r1)
            quartered.extend([(r0, rm), (rm, r1)])
        finer = _integrate_rings(fn, quartered, n_theta, gl_order=32)
        err2 = abs(finer - fine)
        if err2 > max(atol, rtol * max(abs(finer), 1.0)) * 4:
            raise QuadratureError("radial quadrature did not stabilize", err2)
        return finer
    return fine


def _geometric_rings(r0: float, r1: float, ratio: float = 2.0) -> list[tuple[float, float]]:
    rings = []
    lo = r0
    while lo < r1:
        hi = min(lo * ratio, r1)
        rings.append((lo, hi))
        lo = hi
    return rings


def _n_theta(*forms_and_orders) -> int:
    mode = 0
    for item in forms_and_orders:
        mode += item.max_angular_mode() if isinstance(item, TestForm) else int(item)
    return max(32, 4 * (mode + 4))


# ---------------------------------------------------------------------------
# current actions

def _pv_integrand(k: int, phi: TestForm, chi: CutoffProfile, eps: float):
    e2 = eps * eps

    def fn(z: complex) -> complex:
        w = chi.chi(abs(z) ** 2 / e2)
        if w == 0.0:
            return 0.0
        return 2j * w * phi.value(z) / z**k

    return fn


def _pv_at_eps(k: int, phi: TestForm, chi: CutoffProfile, eps: float) -> complex:
    R = phi.radius
    if eps >= R:
        rings = [(eps, eps * math.sqrt(2.0))]
    else:
        rings = [(eps, min(eps * math.sqrt(2.0), R))] + _geometric_rings(
            min(eps * math.sqrt(2.0), R), R
        )
    return _adaptive_rings(_pv_integrand(k, phi, chi, eps), rings, _n_theta(phi, k))


def pv_action(
    k: int,
    phi: TestForm,
    chi: CutoffProfile = SMOOTHSTEP,
    sched: EpsilonSchedule = DEFAULT_SCHEDULE,
) -> complex:
    """[1/z^k] against phi: extrapolated cutoff-regularized integral."""
    if k < 1:
        raise ValueError("k must be at least 1")
    vals = [_pv_at_eps(k, phi, chi, e) for e in sched.values]
    tail = sched.richardson_tail
    value, _ = _richardson(sched.values[-tail:], vals[-tail:])
    return value


def _residue_integrand(k: int, phi: TestForm, chi: CutoffProfile, eps: float):
    e2 = eps * eps

    def fn(z: complex) -> complex:
        w = chi.dchi(abs(z) ** 2 / e2)
        if w == 0.0:
            return 0.0
        return 2j * w * (z / e2) * phi.value(z) / z**k

    return fn


def _residue_at_eps(k: int, phi: TestForm, chi: CutoffProfile, eps: float) -> complex:
    lo, hi = eps, eps * math.sqrt(2.0)
    quarters = [lo + (hi - lo) * i / 4.0 for i in range(5)]
    rings = list(zip(quarters, quarters[1:]))
    return _adaptive_rings(_residue_integrand(k, phi, chi, eps), rings, _n_theta(phi, k))


def residue_action(
    k: int,
    phi: TestForm,
    chi: CutoffProfile = SMOOTHSTEP,
    sched: EpsilonSchedule = DEFAULT_SCHEDULE,
) -> complex:
    """dbar[1/z^k] against phi; for k = 1 this is 2*pi*i * phi(0)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    vals = [_residue_at_eps(k, phi, chi, e) for e in sched.values]
    tail = sched.richardson_tail
    value, _ = _richardson(sched.values[-tail:], vals[-tail:])
    return value


ORDER_PV_THEN_RESIDUE = "pv-then-residue"
ORDER_RESIDUE_THEN_PV = "residue-then-pv"


def ordered_product_action(
    order: str,
    k1: int,
    k2: int,
    phi: TestForm,
    chi: CutoffProfile = SMOOTHSTEP,
    sched: EpsilonSchedule = DEFAULT_SCHEDULE,
) -> complex:
    """Iterated-limit product of [1/z^k1] and dbar[1/z^k2] against phi.

    "pv-then-residue" keeps the principal-value factor outermost (its limit
    is taken last); "residue-then-pv" the opposite.  The integrand is
    chi(|z|^2/e1^2) * chi'(|z|^2/e2^2) (z/e2^2) * z^-(k1+k2) phi * 2i dm with
    the inner limit extrapolated at every outer epsilon.
    """
    if order not in (ORDER_PV_THEN_RESIDUE, ORDER_RESIDUE_THEN_PV):
        raise ValueError(f"unknown order {order!r}")
    if k1 < 1 or k2 < 1:
        raise ValueError("k1, k2 must be at least 1")
    n_theta = _n_theta(phi, k1 + k2)

    def joint_at(eps_pv: float, eps_res: float) -> complex:
        e1sq, e2sq = eps_pv * eps_pv, eps_res * eps_res

        def fn(z: complex) -> complex:
            r2 = abs(z) ** 2
            w2 = chi.dchi(r2 / e2sq)
            if w2 == 0.0:
                return 0.0
            w1 = chi.chi(r2 / e1sq)
            if w1 == 0.0:
                return 0.0
            return 2j * w1 * w2 * (z / e2sq) * phi.value(z) / z ** (k1 + k2)

        lo, hi = eps_res, eps_res * math.sqrt(2.0)
        quarters = [lo + (hi - lo) * i / 4.0 for i in range(5)]
        rings = list(zip(quarters, quarters[1:]))
        return _adaptive_rings(fn, rings, n_theta)

    outer_vals = []
    for eps_outer in sched.values:
        inner = EpsilonSchedule.geometric(eps_outer / 4.0, 0.5, 4)
        if order == ORDER_PV_THEN_RESIDUE:
            vals = [joint_at(eps_outer, e) for e in inner.values]
        else:
            vals = [joint_at(e, eps_outer) for e in inner.values]
        v, _ = _richardson(inner.values, vals)
        outer_vals.append(v)
    tail = sched.richardson_tail
    value, _ = _richardson(sched.values[-tail:], outer_vals[-tail:])
    return value


# ---------------------------------------------------------------------------
# regularization independence probe

@dataclass(frozen=True)
class ProbeEntry:
    profile: str
    schedule_start: float
    value: complex


@dataclass(frozen=True)
class ProbeReport:
    action: str
    k: int
    entries: tuple[ProbeEntry, ...]
    max_rel_deviation: float

    def describe(self) -> str:
        return (
            f"{self.action} k={self.k}: {len(self.entries)} regularizations, "
            f"max pairwise relative deviation {self.max_rel_deviation:.3e}"
        )


def regularization_independence_probe(
    k: int,
    phi: TestForm,
    profiles: Sequence[CutoffProfile],
    schedules: Sequence[EpsilonSchedule],
    action: str = "residue",
) -> ProbeReport:
    """Cross-check the extrapolated value over (profile, schedule) pairs."""
    if len(profiles) < 2:
        raise ValueError("need at least two profiles to probe independence")
    fn = residue_action if action == "residue" else pv_action
    entries = []
    for prof in profiles:
        for sched in schedules:
            entries.append(ProbeEntry(prof.name, sched.values[0], fn(k, phi, prof, sched)))
    scale = max(abs(e.value) for e in entries)
    dev = 0.0
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            dev = max(dev, abs(entries[i].value - entries[j].value))
    rel = dev / scale if scale > 0 else 0.0
    return ProbeReport(action=action, k=k, entries=tuple(entries), max_rel_deviation=rel)


# ---------------------------------------------------------------------------
# independent oracles (used by tests and the report path)

def pv_excision_oracle(k: int, phi: TestForm, delta: float = 1e-6) -> complex:
    """Principal value by symmetric annulus excision, no cutoff function.

    The angular rule kills the divergent modes exactly, so delta can be tiny.
    """
    R = phi.radius

    def fn(z: complex) -> complex:
        return 2j * phi.value(z) / z**k

    rings = _geometric_rings(delta, R, ratio=1.6)
    return _adaptive_rings(fn, rings, _n_theta(phi, k))


def residue_pompeiu_oracle(k: int, phi: TestForm, delta: float = 1e-6) -> complex:
    """dbar[1/z^k] via integration by parts: -<1/z^k, dbar phi>, computed by
    excision quadrature.  Independent of any cutoff regularization."""
    R = phi.radius

    def fn(z: complex) -> complex:
        return -2j * phi.dbar_value(z) / z**k

    rings = _geometric_rings(delta, R, ratio=1.6)
    return _adaptive_rings(fn, rings, _n_theta(phi, k + 1))
