"""Buchberger's algorithm for ideals and submodules of free modules.

Everything runs over Q[x1..xn] with exact arithmetic.  Ideals are the
rank-1 case of submodules; S-vectors exist only for pairs whose leading
terms sit in the same component.  Pair selection uses the normal strategy
(smallest lcm degree first) with deterministic index tie-breaking, the
product criterion (rank-1 only, where it is sound) and a conservative
chain criterion (a pair is skipped only when a divisor element exists and
both covering pairs were actually reduced).

Budgets turn runaway computations into explicit ``BudgetExhausted`` errors;
results are never silently truncated.
"""

from __future__ import annotations

import heapq
import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .complexes import GradedFreeComplex
from .poly import (
    DEFAULT_ORDER,
    FreeModuleElement,
    MonomialOrder,
    PolyMatrix,
    PolyRing,
    Polynomial,
    _TElimination,
    fraction_matrix_rank,
    mono_degree,
    mono_div,
    mono_divides,
    mono_lcm,
)


class GroebnerError(Exception):
    pass


class BudgetExhausted(GroebnerError):
    """A degree or basis-size budget was exceeded; no partial answer is returned."""


ENV_MAX_DEGREE = "ARTINREES_MAX_DEGREE"
ENV_MAX_BASIS = "ARTINREES_MAX_BASIS"


@dataclass(frozen=True)
class Budget:
    max_degree: int = 64
    max_basis: int = 800

    @classmethod
    def from_env(cls) -> "Budget":
        """Default budget with environment-variable overrides."""
        kwargs = {}
        if os.environ.get(ENV_MAX_DEGREE):
            kwargs["max_degree"] = int(os.environ[ENV_MAX_DEGREE])
        if os.environ.get(ENV_MAX_BASIS):
            kwargs["max_basis"] = int(os.environ[ENV_MAX_BASIS])
        return cls(**kwargs)


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class SubmoduleSpec:
    """Generators of a submodule of R^ambient_rank (rank 1 = ideal)."""

    ring: PolyRing
    ambient_rank: int
    generators: tuple[FreeModuleElement, ...]

    def __post_init__(self):
        if self.ambient_rank < 1:
            raise ValueError("ambient rank must be positive")
        for g in self.generators:
            if g.ring != self.ring:
                raise ValueError("generator ring differs")
            if g.rank != self.ambient_rank:
                raise ValueError(
                    f"generator rank {g.rank} != ambient rank {self.ambient_rank}"
                )

    @classmethod
    def ideal(cls, ring: PolyRing, polys: Sequence[Polynomial]) -> "SubmoduleSpec":
        return cls(ring, 1, tuple(FreeModuleElement.from_poly(p) for p in polys))

    @property
    def is_ideal(self) -> bool:
        return self.ambient_rank == 1

    def nonzero_generators(self) -> tuple[FreeModuleElement, ...]:
        return tuple(g for g in self.generators if not g.is_zero)

    def describe(self, spaces: bool = True) -> str:
        return ", ".join(g.to_str(spaces=spaces) for g in self.generators) or "0"


@dataclass(frozen=True)
class GroebnerBasis:
    spec: SubmoduleSpec
    order: MonomialOrder
    elements: tuple[FreeModuleElement, ...]
    reduced: bool = True


def _canonical_key(v: FreeModuleElement):
    return tuple(
        (i,) + tuple(sorted(p.items())) for i, p in enumerate(v.components) if not p.is_zero
    )


def _check_ranks(a, b):
    if a.ambient_rank != b.ambient_rank:
        raise ValueError(f"ambient rank mismatch: {a.ambient_rank} vs {b.ambient_rank}")
    if a.ring != b.ring:
        raise ValueError("rings differ")


def _reduce_full(
    v: FreeModuleElement,
    basis: list[FreeModuleElement],
    lts: list,
    order,
    quotients: list | None = None,
):
    """Full division remainder of v against basis.

    When ``quotients`` is a list of polynomials (one per basis element) the
    subtracted multiples are accumulated there, so v = sum(q_i b_i) + r.
    """
    ring = v.ring
    remainder_terms: list[tuple[int, tuple, Fraction]] = []
    p = v
    while True:
        lt = p.leading_term(order)
        if lt is None:
            break
        pos, mono, coeff = lt
        reduced = False
        for idx, (bpos, bmono, bcoeff) in enumerate(lts):
            if bpos == pos and mono_divides(bmono, mono):
                q_mono = mono_div(mono, bmono)
                q_coeff = coeff / bcoeff
                p = p - basis[idx].mul_term(q_mono, q_coeff)
                if quotients is not None:
                    quotients[idx] = quotients[idx] + Polynomial.monomial(ring, q_mono, q_coeff)
                reduced = True
                break
        if not reduced:
            remainder_terms.append((pos, mono, coeff))
            p = p - FreeModuleElement.basis_vector(
                ring, v.rank, pos, Polynomial.monomial(ring, mono, coeff)
            )
    r = FreeModuleElement.zero(ring, v.rank)
    for pos, mono, coeff in remainder_terms:
        r = r + FreeModuleElement.basis_vector(ring, v.rank, pos, Polynomial.monomial(ring, mono, coeff))
    return r


def _monic(v: FreeModuleElement, order) -> FreeModuleElement:
    lt = v.leading_term(order)
    if lt is None:
        return v
    return v.scaled(Fraction(1) / lt[2])


def buchberger(
    spec: SubmoduleSpec,
    order: MonomialOrder = DEFAULT_ORDER,
    budget: Budget | None = None,
    pair_strategy: str = "normal",
    _track: bool = False,
):
    """Reduced Groebner basis of the submodule generated by ``spec``.

    Deterministic for a fixed input and order; ``pair_strategy`` ("normal" or
    "fifo") only changes the processing order, never the reduced result.
    With ``_track=True`` also returns, per basis element, its exact expression
    in the original generators (used by the syzygy computation).
    """
    budget = budget or DEFAULT_BUDGET
    ring = spec.ring
    k = len(spec.generators)

    gens = []
    reps = []  # combo over original generator indices, rank k
    for i, g in enumerate(spec.generators):
        if g.is_zero:
            continue
        gens.append((g, i))
    gens.sort(key=lambda t: (order.module_sort_key(*t[0].leading_term(order)[:2]), _canonical_key(t[0])))

    basis: list[FreeModuleElement] = []
    lts: list = []
    for g, i in gens:
        lt = g.leading_term(order)
        c = lt[2]
        basis.append(g.scaled(Fraction(1) / c))
        lts.append((lt[0], lt[1], Fraction(1)))
        if _track:
            rep = FreeModuleElement.basis_vector(ring, k, i, Polynomial.constant(ring, Fraction(1) / c))
            reps.append(rep)

    completed: set[frozenset] = set()  # pairs with a standard representation
    heap: list = []
    counter = itertools.count()

    def push_pair(i: int, j: int):
        pi, mi, _ = lts[i]
        pj, mj, _ = lts[j]
        if pi != pj:
            return
        lcm = mono_lcm(mi, mj)
        if pair_strategy == "fifo":
            prio = (next(counter),)
        else:
            prio = (mono_degree(lcm), i, j)
        heapq.heappush(heap, (prio, i, j, lcm))

    for j in range(len(basis)):
        for i in range(j):
            push_pair(i, j)

    while heap:
        _, i, j, lcm = heapq.heappop(heap)
        key = frozenset((i, j))
        pi, mi, _ = lts[i]
        pj, mj, _ = lts[j]
        # product criterion: sound for ideals only
        if spec.ambient_rank == 1 and mono_lcm(mi, mj) == tuple(a + b for a, b in zip(mi, mj)):
            completed.add(key)
            continue
        # chain criterion, conservative form
        skip = False
        for h in range(len(basis)):
            if h in (i, j):
                continue
            ph, mh, _ = lts[h]
            if ph == pi and mono_divides(mh, lcm):
                if frozenset((i, h)) in completed and frozenset((j, h)) in completed:
                    skip = True
                    break
        if skip:
            continue
        if mono_degree(lcm) > budget.max_degree:
            raise BudgetExhausted(
                f"S-pair lcm degree {mono_degree(lcm)} exceeds budget {budget.max_degree}"
            )
        ui = mono_div(lcm, mi)
        uj = mono_div(lcm, mj)
        s = basis[i].mul_term(ui, 1) - basis[j].mul_term(uj, 1)
        quot = [ring.zero()] * len(basis) if _track else None
        h = _reduce_full(s, basis, lts, order, quot)
        completed.add(key)
        if h.is_zero:
            continue
        lt = h.leading_term(order)
        c = lt[2]
        h = h.scaled(Fraction(1) / c)
        if h.total_degree() > budget.max_degree:
            raise BudgetExhausted(
                f"basis element degree {h.total_degree()} exceeds budget {budget.max_degree}"
            )
        if _track:
            rep = reps[i].mul_term(ui, 1) - reps[j].mul_term(uj, 1)
            for idx, q in enumerate(quot):
                if not q.is_zero:
                    rep = rep - reps[idx].scaled(q)
            reps.append(rep.scaled(Fraction(1) / c))
        basis.append(h)
        lts.append((lt[0], lt[1], Fraction(1)))
        if len(basis) > budget.max_basis:
            raise BudgetExhausted(f"basis size exceeds budget {budget.max_basis}")
        new_j = len(basis) - 1
        for i2 in range(new_j):
            push_pair(i2, new_j)

    # minimalize: drop elements whose leading term another one divides
    keep = []
    for i in range(len(basis)):
        pi, mi, _ = lts[i]
        redundant = False
        for j in range(len(basis)):
            if i == j:
                continue
            pj, mj, _ = lts[j]
            if pj == pi and mono_divides(mj, mi):
                if mj == mi and j > i:
                    continue  # identical leading terms: keep the earlier one
                redundant = True
                break
        if not redundant:
            keep.append(i)

    basis = [basis[i] for i in keep]
    lts = [lts[i] for i in keep]
    if _track:
        reps = [reps[i] for i in keep]

    # tail reduction to the unique reduced basis
    for _ in range(len(basis) + 1):
        changed = False
        for i in range(len(basis)):
            others = basis[:i] + basis[i + 1:]
            other_lts = lts[:i] + lts[i + 1:]
            quot = [ring.zero()] * len(others) if _track else None
            r = _reduce_full(basis[i], others, other_lts, order, quot)
            if r != basis[i]:
                changed = True
                if _track:
                    rep = reps[i]
                    other_reps = reps[:i] + reps[i + 1:]
                    for idx, q in enumerate(quot):
                        if not q.is_zero:
                            rep = rep - other_reps[idx].scaled(q)
                    reps[i] = rep
                basis[i] = r
        if not changed:
            break

    idx_sorted = sorted(
        range(len(basis)),
        key=lambda i: order.module_sort_key(lts[i][0], lts[i][1]),
    )
    basis = [basis[i] for i in idx_sorted]
    gb = GroebnerBasis(spec=spec, order=order, elements=tuple(basis), reduced=True)
    if _track:
        reps = [reps[i] for i in idx_sorted]
        return gb, reps
    return gb


def normal_form(v: FreeModuleElement, gb: GroebnerBasis) -> FreeModuleElement:
    """Remainder of full division by the basis; zero iff v is in the submodule."""
    if v.rank != gb.spec.ambient_rank:
        raise ValueError(f"rank mismatch: {v.rank} vs ambient {gb.spec.ambient_rank}")
    basis = list(gb.elements)
    lts = [g.leading_term(gb.order) for g in basis]
    return _reduce_full(v, basis, lts, gb.order)


def normal_form_with_quotients(v: FreeModuleElement, gb: GroebnerBasis):
    if v.rank != gb.spec.ambient_rank:
        raise ValueError(f"rank mismatch: {v.rank} vs ambient {gb.spec.ambient_rank}")
    basis = list(gb.elements)
    lts = [g.leading_term(gb.order) for g in basis]
    quot = [v.ring.zero()] * len(basis)
    r = _reduce_full(v, basis, lts, gb.order, quot)
    return r, quot


def is_member(v: FreeModuleElement, gb: GroebnerBasis) -> bool:
    return normal_form(v, gb).is_zero


def is_contained(
    a: SubmoduleSpec,
    b: SubmoduleSpec,
    order: MonomialOrder = DEFAULT_ORDER,
    budget: Budget | None = None,
) -> bool:
    """True iff the submodule generated by a sits inside the one generated by b."""
    _check_ranks(a, b)
    gb = buchberger(b, order, budget)
    return all(is_member(g, gb) for g in a.nonzero_generators())


def submodules_equal(
    a: SubmoduleSpec,
    b: SubmoduleSpec,
    order: MonomialOrder = DEFAULT_ORDER,
    budget: Budget | None = None,
) -> bool:
    return is_contained(a, b, order, budget) and is_contained(b, a, order, budget)


def ideal_power(ideal: SubmoduleSpec, r: int) -> SubmoduleSpec:
    """I^r, generated by all r-fold products of generators; I^0 = (1)."""
    if not ideal.is_ideal:
        raise ValueError("ideal_power requires an ideal (ambient rank 1)")
    if r < 0:
        raise ValueError("power must be non-negative")
    ring = ideal.ring
    if r == 0:
        return SubmoduleSpec.ideal(ring, (ring.one(),))
    polys = [g.components[0] for g in ideal.nonzero_generators()]
    seen = []
    seen_set = set()
    for combo in itertools.combinations_with_replacement(polys, r):
        p = ring.one()
        for f in combo:
            p = p * f
        if p.is_zero or p in seen_set:
            continue
        seen_set.add(p)
        seen.append(p)
    return SubmoduleSpec.ideal(ring, seen)


def module_product(ideal: SubmoduleSpec, module: SubmoduleSpec) -> SubmoduleSpec:
    """I*N: products of ideal generators with module generators."""
    if not ideal.is_ideal:
        raise ValueError("module_product requires an ideal as the first argument")
    if ideal.ring != module.ring:
        raise ValueError("rings differ")
    gens = []
    seen = set()
    for f in ideal.nonzero_generators():
        p = f.components[0]
        for n in module.nonzero_generators():
            v = n.scaled(p)
            if v.is_zero or v in seen:
                continue
            seen.add(v)
            gens.append(v)
    return SubmoduleSpec(module.ring, module.ambient_rank, tuple(gens))


def ambient_module(ideal_or_spec: SubmoduleSpec, ambient_rank: int) -> SubmoduleSpec:
    """I * R^rank: generators f * e_i for every generator f and position i."""
    if not ideal_or_spec.is_ideal:
        raise ValueError("expected an ideal")
    ring = ideal_or_spec.ring
    gens = []
    for f in ideal_or_spec.nonzero_generators():
        p = f.components[0]
        for i in range(ambient_rank):
            gens.append(FreeModuleElement.basis_vector(ring, ambient_rank, i, p))
    return SubmoduleSpec(ring, ambient_rank, tuple(gens))


def _extend_ring(ring: PolyRing) -> tuple[PolyRing, str]:
    name = "_t"
    while name in ring.variables:
        name = "_" + name
    return PolyRing((name,) + ring.variables), name


def _lift_poly(p: Polynomial, ext: PolyRing) -> Polynomial:
    return Polynomial(ext, {(0,) + e: c for e, c in p.items()})


def _lift_vec(v: FreeModuleElement, ext: PolyRing) -> FreeModuleElement:
    return FreeModuleElement(ext, tuple(_lift_poly(p, ext) for p in v.components))


def _project_vec(v: FreeModuleElement, ring: PolyRing) -> FreeModuleElement:
    comps = []
    for p in v.components:
        comps.append(Polynomial(ring, {e[1:]: c for e, c in p.items()}))
    return FreeModuleElement(ring, tuple(comps))


def intersect(
    a: SubmoduleSpec,
    b: SubmoduleSpec,
    order: MonomialOrder = DEFAULT_ORDER,
    budget: Budget | None = None,
) -> SubmoduleSpec:
    """Generators of a ∩ b by tag-variable elimination.

    In R[t]^rank, compute a basis of  t*gens(a) + (1-t)*gens(b)  under an
    order in which t dominates; the t-free basis elements generate a ∩ b.
    """
    _check_ranks(a, b)
    ring = a.ring
    ext, _ = _extend_ring(ring)
    t = ext.var(0)
    one_minus_t = ext.one() - t
    gens = []
    for g in a.nonzero_generators():
        gens.append(_lift_vec(g, ext).scaled(t))
    for g in b.nonzero_generators():
        gens.append(_lift_vec(g, ext).scaled(one_minus_t))
    if not gens:
        return SubmoduleSpec(ring, a.ambient_rank, ())
    lifted = SubmoduleSpec(ext, a.ambient_rank, tuple(gens))
    gb = buchberger(lifted, _TElimination(order), budget)
    out = []
    for g in gb.elements:
        t_free = True
        for p in g.components:
            for e, _ in p.items():
                if e[0] != 0:
                    t_free = False
                    break
            if not t_free:
                break
        if t_free:
            out.append(_project_vec(g, ring))
    return SubmoduleSpec(ring, a.ambient_rank, tuple(out))


def syzygies(
    spec: SubmoduleSpec,
    order: MonomialOrder = DEFAULT_ORDER,
    budget: Budget | None = None,
) -> SubmoduleSpec:
    """Generators of {(c_1..c_k) : sum c_i g_i = 0} for the given generators.

    Buchberger runs with representation tracking (basis = A * gens); Schreyer
    lifts of the S-vector reductions give the syzygies of the basis, which are
    pushed back through A, together with the relations g_i - (B A) g.  Every
    returned tuple is verified to satisfy the relation exactly.
    """
    gens = list(spec.generators)
    if not gens:
        raise ValueError("syzygies of an empty generator list")
    ring = spec.ring
    k = len(gens)
    out: list[FreeModuleElement] = []
    seen = set()

    def emit(v: FreeModuleElement):
        if v.is_zero or v in seen:
            return
        seen.add(v)
        out.append(v)

    for i, g in enumerate(gens):
        if g.is_zero:
            emit(FreeModuleElement.basis_vector(ring, k, i))

    gb, reps = buchberger(spec, order, budget, _track=True)
    basis = list(gb.elements)
    if basis:
        lts = [g.leading_term(order) for g in basis]
        # B: original generators through the basis
        b_rows = []
        for g in gens:
            if g.is_zero:
                b_rows.append([ring.zero()] * len(basis))
                continue
            nf, quot = normal_form_with_quotients(g, gb)
            if not nf.is_zero:
                raise GroebnerError("generator fails to reduce against its own basis")
            b_rows.append(quot)
        # e_i - B_i A
        for i, g in enumerate(gens):
            if g.is_zero:
                continue
            rel = FreeModuleElement.basis_vector(ring, k, i)
            for l, q in enumerate(b_rows[i]):
                if not q.is_zero:
                    rel = rel - reps[l].scaled(q)
            emit(rel)
        # Schreyer syzygies of the basis, pushed through A
        for ia in range(len(basis)):
            for ib in range(ia + 1, len(basis)):
                pa, ma, ca = lts[ia]
                pb, mb, cb = lts[ib]
                if pa != pb:
                    continue
                lcm = mono_lcm(ma, mb)
                ua = mono_div(lcm, ma)
                ub = mono_div(lcm, mb)
                s = basis[ia].mul_term(ua, Fraction(1) / ca) - basis[ib].mul_term(ub, Fraction(1) / cb)
                quot = [ring.zero()] * len(basis)
                r = _reduce_full(s, basis, lts, order, quot)
                if not r.is_zero:
                    raise GroebnerError("S-vector fails to reduce to zero against a Groebner basis")
                rel = reps[ia].mul_term(ua, Fraction(1) / ca) - reps[ib].mul_term(ub, Fraction(1) / cb)
                for l, q in enumerate(quot):
                    if not q.is_zero:
                        rel = rel - reps[l].scaled(q)
                emit(rel)

    # exactness check: each relation kills the generators
    for rel in out:
        acc = FreeModuleElement.zero(ring, spec.ambient_rank)
        for c, g in zip(rel.components, gens):
            acc = acc + g.scaled(c)
        if not acc.is_zero:
            raise GroebnerError("internal error: inexact syzygy")
    return SubmoduleSpec(ring, k, tuple(out))


def free_resolution(
    spec: SubmoduleSpec,
    max_length: int,
    order: MonomialOrder = DEFAULT_ORDER,
    budget: Budget | None = None,
) -> GradedFreeComplex:
    """A free complex ... -> F_1 -> F_0 with image(F_1 -> F_0) = spec.

    Built by iterated syzygy computation, so the complex is exact at every
    constructed level above 0.  Truncation at max_length is flagged on the
    returned complex.  The resolution is not required to be minimal.
    """
    if max_length < 1:
        raise ValueError("max_length must be at least 1")
    ring = spec.ring
    ranks = [spec.ambient_rank]
    diffs: list[PolyMatrix] = []
    current = list(spec.nonzero_generators())
    truncated = False
    level = 0
    while current and level < max_length:
        mat = PolyMatrix.from_columns(ring, ranks[-1], current)
        diffs.append(mat)
        ranks.append(len(current))
        level += 1
        syz = syzygies(SubmoduleSpec(ring, current[0].rank, tuple(current)), order, budget)
        current = list(syz.nonzero_generators())
    if current:
        truncated = True
    cplx = GradedFreeComplex(
        ring=ring, ranks=tuple(ranks), differentials=tuple(diffs), truncated=truncated
    )
    for j in range(len(diffs) - 1):
        if not (diffs[j] @ diffs[j + 1]).is_zero:
            raise GroebnerError("internal error: resolution differentials do not compose to zero")
    return cplx


def resolution_rank_check(cplx: GradedFreeComplex, rng, trials: int = 8) -> bool:
    """Generic-point exactness probe above level 0.

    Evaluates the differentials at random rational points and tests
    rank f_j + rank f_{j+1} = rank F_j for 1 <= j < L and injectivity at the
    top.  True as soon as one sampled point satisfies all rank identities.
    """
    diffs = cplx.differentials
    if len(diffs) < 1:
        return True
    n = cplx.ring.nvars
    for _ in range(trials):
        point = [Fraction(rng.randint(1, 60), rng.randint(1, 7)) * (1 if rng.random() < 0.5 else -1)
                 for _ in range(n)]
        ranks = [fraction_matrix_rank(d.evaluate_exact(point)) for d in diffs]
        ok = True
        for j in range(1, len(diffs)):
            if ranks[j - 1] + ranks[j] != cplx.ranks[j]:
                ok = False
                break
        if ok and len(diffs) >= 1:
            if ranks[-1] != cplx.ranks[len(diffs)]:
                ok = False
        if ok:
            return True
    return False
