"""Artin-Rees exponent experiments.

For an ideal I, an ambient free module M = R^m0 and a submodule N, the
minimal exponent mu is the smallest value such that

    I^(mu+r) M  intersect  N   is contained in   I^r N

for every r up to the configured r_max.  Containment is decided by Groebner
arithmetic; failures come with an explicit witness generator.  All symbolic
computation happens in the polynomial ring; since localization is exact, a
containment verified here certifies the corresponding statement over the
local ring at the origin, and the computed minimal mu is an upper bound for
the local one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .complexes import DiamondComplex, diamond_image_spec, diamond_product, verify_complex
from .complexes import koszul_complex
from .groebner import (
    Budget,
    BudgetExhausted,
    SubmoduleSpec,
    ambient_module,
    buchberger,
    free_resolution,
    ideal_power,
    intersect,
    is_contained,
    module_product,
    normal_form,
    submodules_equal,
)
from .poly import DEFAULT_ORDER, FreeModuleElement, MonomialOrder, PolyRing


@dataclass(frozen=True)
class ArtinReesInstance:
    label: str
    ring: PolyRing
    order: MonomialOrder
    ideal: SubmoduleSpec          # rank 1
    submodule: SubmoduleSpec      # rank m0
    r_max: int = 4
    mu_cap: int = 8

    def __post_init__(self):
        if not self.ideal.is_ideal:
            raise ValueError("the ideal must have ambient rank 1")
        if self.ideal.ring != self.ring or self.submodule.ring != self.ring:
            raise ValueError("instance components live in different rings")
        if self.r_max < 0 or self.mu_cap < 1:
            raise ValueError("need r_max >= 0 and mu_cap >= 1")

    @property
    def m0(self) -> int:
        return self.submodule.ambient_rank


@dataclass(frozen=True)
class ContainmentResult:
    holds: bool
    mu: int
    r: int
    witness: FreeModuleElement | None = None


def containment_check(
    inst: ArtinReesInstance, mu: int, r: int, budget: Budget | None = None
) -> ContainmentResult:
    """Decide I^(mu+r) M  cap  N  subset  I^r N, with a witness on failure.

    The power module I^k M is generated by p * e_i over power generators p
    and basis positions i; the intersection uses tag-variable elimination and
    the final containment a normal-form membership test.
    """
    if mu < 0 or r < 0:
        raise ValueError("mu and r must be non-negative")
    power_module = ambient_module(ideal_power(inst.ideal, mu + r), inst.m0)
    lhs = intersect(power_module, inst.submodule, inst.order, budget)
    rhs = module_product(ideal_power(inst.ideal, r), inst.submodule)
    gb = buchberger(rhs, inst.order, budget)
    for g in lhs.nonzero_generators():
        if not normal_form(g, gb).is_zero:
            return ContainmentResult(holds=False, mu=mu, r=r, witness=g)
    return ContainmentResult(holds=True, mu=mu, r=r)


@dataclass(frozen=True)
class MuResult:
    label: str
    mu: int | None                      # None when the cap was exceeded
    capped: bool
    r_max: int
    mu_cap: int
    witness: ContainmentResult | None   # failure at mu-1, when mu >= 1
    budget_exhausted: bool = False
    note: str = ""

    def describe(self) -> str:
        if self.budget_exhausted:
            return f"{self.label}: budget exhausted ({self.note})"
        if self.capped:
            return f"{self.label}: no mu <= {self.mu_cap} works for all r <= {self.r_max}"
        w = ""
        if self.witness is not None and self.witness.witness is not None:
            w = (
                f"; witness at mu={self.witness.mu}, r={self.witness.r}: "
                f"{self.witness.witness.to_str()}"
            )
        return f"{self.label}: minimal mu = {self.mu} for all r <= {self.r_max}{w}"


def min_mu(inst: ArtinReesInstance, budget: Budget | None = None) -> MuResult:
    """Smallest mu <= mu_cap passing containment_check for all r in [0, r_max].

    Containment is monotone in mu (larger powers shrink the left side), so
    the first passing mu is minimal; the failure found at mu-1 is recorded as
    the witness.
    """
    last_failure: ContainmentResult | None = None
    try:
        for mu in range(inst.mu_cap + 1):
            ok = True
            for r in range(inst.r_max + 1):
                res = containment_check(inst, mu, r, budget)
                if not res.holds:
                    last_failure = res
                    ok = False
                    break
            if ok:
                return MuResult(
                    label=inst.label,
                    mu=mu,
                    capped=False,
                    r_max=inst.r_max,
                    mu_cap=inst.mu_cap,
                    witness=last_failure if mu >= 1 else None,
                )
        return MuResult(
            label=inst.label, mu=None, capped=True, r_max=inst.r_max,
            mu_cap=inst.mu_cap, witness=last_failure,
        )
    except BudgetExhausted as exc:
        return MuResult(
            label=inst.label, mu=None, capped=False, r_max=inst.r_max,
            mu_cap=inst.mu_cap, witness=None, budget_exhausted=True, note=str(exc),
        )


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[MuResult, ...]
    family_max: int | None
    stabilized: bool
    any_budget_flags: bool

    def describe(self) -> str:
        lines = [row.describe() for row in self.rows]
        if self.family_max is not None:
            lines.append(
                f"family max mu = {self.family_max}"
                + (" (stabilized before the last instance)" if self.stabilized else "")
            )
        else:
            lines.append("family max mu undetermined (caps or budgets hit)")
        return "\n".join(lines)


def uniform_sweep(instances, budget: Budget | None = None) -> SweepReport:
    """Per-instance minimal mu over a family sharing (ring, N, m0)."""
    instances = list(instances)
    if not instances:
        raise ValueError("empty family")
    base = instances[0]
    for inst in instances[1:]:
        if inst.ring != base.ring or inst.submodule != base.submodule:
            raise ValueError("family instances must share the ring and submodule")
    rows = tuple(min_mu(inst, budget) for inst in instances)
    mus = [row.mu for row in rows if row.mu is not None]
    clean = len(mus) == len(rows)
    family_max = max(mus) if (mus and clean) else None
    stabilized = False
    if family_max is not None and len(mus) >= 2:
        running = 0
        for i, m in enumerate(mus):
            running = max(running, m)
            if running == family_max:
                stabilized = i < len(mus) - 1
                break
    return SweepReport(
        rows=rows,
        family_max=family_max,
        stabilized=stabilized,
        any_budget_flags=any(row.budget_exhausted for row in rows),
    )


@dataclass(frozen=True)
class TotComplexResult:
    diamond: DiamondComplex
    image_matches: bool
    power_image_matches: bool
    resolution_truncated: bool

    @property
    def ok(self) -> bool:
        return self.image_matches and self.power_image_matches


def build_tot_complex(
    inst: ArtinReesInstance,
    r: int,
    max_resolution_length: int = 6,
    budget: Budget | None = None,
) -> TotComplexResult:
    """The product complex whose degree-1 image is I^r N.

    Takes r copies of the Koszul complex on the ideal generators, forms
    their product, crosses it with a free resolution of M/N (so that the
    resolution's degree-1 image is N), and verifies by mutual Groebner
    containment that image(h_1) equals I^r N, and that the Koszul part alone
    has image I^r.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    gens = [g.components[0] for g in inst.ideal.nonzero_generators()]
    if not gens:
        raise ValueError("the ideal has no nonzero generators")
    kos = koszul_complex(gens)
    power_factors = [kos] * r
    e_power = diamond_product(power_factors)
    power_image = diamond_image_spec(e_power)
    power_ok = submodules_equal(power_image, ideal_power(inst.ideal, r), inst.order, budget)

    e_n = free_resolution(inst.submodule, max_resolution_length, inst.order, budget)
    diamond = diamond_product([e_power.result, e_n])
    report = verify_complex(diamond)
    if not report.ok:
        raise AssertionError(report.describe())
    image = diamond_image_spec(diamond)
    target = module_product(ideal_power(inst.ideal, r), inst.submodule)
    image_ok = submodules_equal(image, target, inst.order, budget)
    return TotComplexResult(
        diamond=diamond,
        image_matches=image_ok,
        power_image_matches=power_ok,
        resolution_truncated=e_n.truncated,
    )
