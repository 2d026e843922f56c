"""Graded free complexes, Koszul complexes, and the diamond product.

A complex is a list of ranks (E_0..E_L) plus polynomial matrices
f_j: E_j -> E_{j-1} with f_j f_{j+1} = 0 exactly.  The total bundle carries
the Z2 grading "level parity": even levels are even, odd levels odd.

Sign conventions, fixed once here and mirrored by the numerical layer:

* exterior algebra bases are increasing index tuples; contracting away the
  index in (0-based) position t contributes (-1)^t;
* an endomorphism of parity p acting as tensor factor s picks up
  (-1)^(p * sum of the parities of the factors to its left);
* blocks inside a product level H_k are ordered lexicographically by the
  level-shift tuple alpha.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .poly import (
    DEFAULT_ORDER,
    FreeModuleElement,
    MonomialOrder,
    ParseError,
    PolyMatrix,
    PolyRing,
    Polynomial,
    parse_polynomial,
)


@dataclass(frozen=True)
class GradedFreeComplex:
    """ranks = (rank E_0, ..., rank E_L); differentials = (f_1, ..., f_L)."""

    ring: PolyRing
    ranks: tuple[int, ...]
    differentials: tuple[PolyMatrix, ...]
    labels: tuple[tuple[str, ...], ...] | None = None
    truncated: bool = False
    koszul_generators: tuple[Polynomial, ...] | None = None

    def __post_init__(self):
        if not self.ranks:
            raise ValueError("a complex needs at least one level")
        if len(self.differentials) != len(self.ranks) - 1:
            raise ValueError("need exactly one differential per adjacent level pair")
        for j, f in enumerate(self.differentials, start=1):
            if (f.rows, f.cols) != (self.ranks[j - 1], self.ranks[j]):
                raise ValueError(
                    f"differential {j} has shape {f.rows}x{f.cols}, "
                    f"expected {self.ranks[j - 1]}x{self.ranks[j]}"
                )

    @property
    def length(self) -> int:
        return len(self.ranks) - 1

    def differential(self, j: int) -> PolyMatrix:
        """f_j: E_j -> E_{j-1} (1-based)."""
        return self.differentials[j - 1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedFreeComplex):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.ranks == other.ranks
            and self.differentials == other.differentials
        )


@dataclass(frozen=True)
class ComplexFailure:
    level: int  # failing composition f_level o f_{level+1}
    entry: tuple[int, int]
    value: str


@dataclass(frozen=True)
class ComplexReport:
    ok: bool
    failures: tuple[ComplexFailure, ...] = ()

    def describe(self) -> str:
        if self.ok:
            return "complex property holds: all consecutive compositions vanish"
        f = self.failures[0]
        return (
            f"complex property FAILS at f_{f.level} o f_{f.level + 1}, "
            f"entry {f.entry}: {f.value}"
        )


def verify_complex(subject) -> ComplexReport:
    """Exact check that consecutive differentials compose to zero."""
    cplx = subject.result if isinstance(subject, DiamondComplex) else subject
    failures = []
    for j in range(1, cplx.length):
        comp = cplx.differential(j) @ cplx.differential(j + 1)
        if not comp.is_zero:
            (i, k), p = sorted(comp.entries.items())[0]
            failures.append(ComplexFailure(level=j, entry=(i, k), value=p.to_str()))
    return ComplexReport(ok=not failures, failures=tuple(failures))


def trivial_complex(ring: PolyRing) -> GradedFreeComplex:
    """0 -> R -> R -> 0 with the identity map."""
    return GradedFreeComplex(
        ring=ring,
        ranks=(1, 1),
        differentials=(PolyMatrix.identity(ring, 1),),
        labels=(("e",), ("e'",)),
    )


# ---------------------------------------------------------------------------
# Koszul complexes

def _subsets(m: int, j: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(m), j))


def koszul_complex(generators) -> GradedFreeComplex:
    """Koszul complex on m generators: ranks C(m, j), differential =
    contraction against the generator tuple with exterior-algebra signs."""
    gens = tuple(generators)
    if not gens:
        raise ValueError("koszul_complex needs at least one generator")
    ring = gens[0].ring
    for g in gens:
        if g.ring != ring:
            raise ValueError("generators live in different rings")
    m = len(gens)
    ranks = tuple(math.comb(m, j) for j in range(m + 1))
    diffs = []
    labels = []
    for j in range(m + 1):
        labels.append(tuple("e[" + ",".join(str(i + 1) for i in I) + "]" for I in _subsets(m, j)))
    for j in range(1, m + 1):
        src = _subsets(m, j)
        tgt_index = {I: r for r, I in enumerate(_subsets(m, j - 1))}
        entries = {}
        for col, I in enumerate(src):
            for t, i in enumerate(I):
                rest = I[:t] + I[t + 1:]
                row = tgt_index[rest]
                term = gens[i] if t % 2 == 0 else -gens[i]
                key = (row, col)
                entries[key] = entries[key] + term if key in entries else term
        diffs.append(PolyMatrix(ring, ranks[j - 1], ranks[j], entries))
    cplx = GradedFreeComplex(
        ring=ring,
        ranks=ranks,
        differentials=tuple(diffs),
        labels=tuple(labels),
        koszul_generators=gens,
    )
    report = verify_complex(cplx)
    if not report.ok:
        raise AssertionError("koszul differential failed d^2 = 0: " + report.describe())
    return cplx


# ---------------------------------------------------------------------------
# diamond product

@dataclass(frozen=True)
class DiamondBlock:
    """One tensor block inside a product level: factor levels, offset, size."""

    levels: tuple[int, ...]
    offset: int
    size: int


@dataclass(frozen=True)
class DiamondComplex:
    factors: tuple[GradedFreeComplex, ...]
    result: GradedFreeComplex
    index_map: tuple[tuple[DiamondBlock, ...], ...]

    @property
    def ring(self) -> PolyRing:
        return self.result.ring


def koszul_prefix_sign(levels: tuple[int, ...], s: int, parity: int) -> int:
    """(-1)^(parity * sum of level parities left of factor s)."""
    if parity % 2 == 0:
        return 1
    left = sum(levels[:s]) % 2
    return -1 if left else 1


def _level_blocks(factors, k: int) -> list[tuple[int, ...]]:
    """Factor-level tuples of the product level H_k, in lex order on alpha."""
    r = len(factors)
    if k == 0:
        return [(0,) * r]
    out = []
    maxes = [f.length - 1 for f in factors]  # alpha_s <= length-1
    for alpha in itertools.product(*(range(m + 1) for m in maxes)):
        if sum(alpha) == k - 1:
            out.append(tuple(1 + a for a in alpha))
    out.sort()
    return out


def _block_size(factors, levels: tuple[int, ...]) -> int:
    size = 1
    for f, lv in zip(factors, levels):
        size *= f.ranks[lv]
    return size


def diamond_product(factors) -> DiamondComplex:
    """The product complex (H, h) of the given factor complexes.

    H_0 is the tensor product of the degree-0 levels; H_k for k >= 1 is the
    direct sum over level shifts alpha (sum alpha = k-1) of the tensor blocks
    at factor levels 1+alpha.  h_1 is the tensor product of the f^s_1; higher
    h_k restrict the factor differentials with the graded tensor sign.
    The result is verified to be a complex, exactly.
    """
    factors = tuple(factors)
    if not factors:
        raise ValueError("diamond_product needs at least one factor")
    ring = factors[0].ring
    for f in factors:
        if f.ring != ring:
            raise ValueError("factors live in different rings")
    r = len(factors)
    total_len = sum(f.length for f in factors) - r + 1

    index_map: list[tuple[DiamondBlock, ...]] = []
    ranks = []
    for k in range(total_len + 1):
        blocks = []
        offset = 0
        for levels in _level_blocks(factors, k):
            size = _block_size(factors, levels)
            blocks.append(DiamondBlock(levels=levels, offset=offset, size=size))
            offset += size
        index_map.append(tuple(blocks))
        ranks.append(offset)

    diffs = []
    # h_1: plain Kronecker product of the level-1 differentials
    h1 = factors[0].differential(1)
    for f in factors[1:]:
        h1 = h1.kron(f.differential(1))
    diffs.append(h1)

    for k in range(2, total_len + 1):
        src_blocks = index_map[k]
        tgt_lookup = {b.levels: b for b in index_map[k - 1]}
        entries = {}
        for sb in src_blocks:
            for s in range(r):
                if sb.levels[s] < 2:
                    continue  # level-1 maps belong to h_1 only
                tgt_levels = sb.levels[:s] + (sb.levels[s] - 1,) + sb.levels[s + 1:]
                tb = tgt_lookup[tgt_levels]
                sign = koszul_prefix_sign(sb.levels, s, 1)
                piece = None
                for t in range(r):
                    mat = (
                        factors[t].differential(sb.levels[t])
                        if t == s
                        else PolyMatrix.identity(ring, factors[t].ranks[sb.levels[t]])
                    )
                    piece = mat if piece is None else piece.kron(mat)
                if sign < 0:
                    piece = -piece
                for (i, j), p in piece.entries.items():
                    key = (tb.offset + i, sb.offset + j)
                    entries[key] = entries[key] + p if key in entries else p
        entries = {k2: v for k2, v in entries.items() if not v.is_zero}
        diffs.append(PolyMatrix(ring, ranks[k - 1], ranks[k], entries))

    result = GradedFreeComplex(ring=ring, ranks=tuple(ranks), differentials=tuple(diffs))
    report = verify_complex(result)
    if not report.ok:
        raise AssertionError("diamond product failed h o h = 0: " + report.describe())
    for k in range(total_len + 1):
        expected = sum(b.size for b in index_map[k])
        if expected != ranks[k]:
            raise AssertionError("rank bookkeeping mismatch in diamond product")
    return DiamondComplex(factors=factors, result=result, index_map=tuple(index_map))


def expected_diamond_rank(factors, k: int) -> int:
    """Direct-sum formula for rank H_k, computed independently of offsets."""
    factors = tuple(factors)
    if k == 0:
        size = 1
        for f in factors:
            size *= f.ranks[0]
        return size
    return sum(_block_size(factors, levels) for levels in _level_blocks(factors, k))


def pad_to_odd(factors, ring: PolyRing | None = None) -> list[GradedFreeComplex]:
    """Append the trivial complex 0 -> R -> R -> 0 when the count is even."""
    factors = list(factors)
    if not factors:
        return factors
    if len(factors) % 2 == 0:
        factors.append(trivial_complex(ring or factors[0].ring))
    return factors


def diamond_image_spec(diamond: DiamondComplex):
    """image(h_1) as a submodule of R^(rank H_0), given by the h_1 columns."""
    from .groebner import SubmoduleSpec  # local import: groebner depends on this module

    h1 = diamond.result.differential(1)
    return SubmoduleSpec(diamond.ring, h1.rows, tuple(h1.columns()))


# ---------------------------------------------------------------------------
# induced endomorphisms on the full tensor bundle

@dataclass(frozen=True)
class TensorSpace:
    """The full tensor bundle of several complexes, indexed by level tuples.

    Basis order: level tuples sorted lexicographically, then row-major within
    each tensor block.
    """

    factors: tuple[GradedFreeComplex, ...]

    def level_tuples(self) -> list[tuple[int, ...]]:
        return sorted(itertools.product(*(range(f.length + 1) for f in self.factors)))

    def block_size(self, levels: tuple[int, ...]) -> int:
        return _block_size(self.factors, levels)

    def offsets(self) -> dict[tuple[int, ...], int]:
        out = {}
        pos = 0
        for lv in self.level_tuples():
            out[lv] = pos
            pos += self.block_size(lv)
        return out

    @property
    def dim(self) -> int:
        return sum(self.block_size(lv) for lv in self.level_tuples())


def tensor_endomorphism(
    which_factor: int,
    psi: dict[tuple[int, int], PolyMatrix],
    target,
) -> PolyMatrix:
    """Extend a graded endomorphism of one factor to the full tensor bundle.

    ``psi`` maps (source level, target level) to a matrix on the chosen
    factor; all blocks must share one parity.  The induced endomorphism obeys
    the graded sign rule: odd blocks acting past a left factor of odd level
    parity flip sign.  ``target`` is a DiamondComplex or a TensorSpace.
    """
    if isinstance(target, DiamondComplex):
        space = TensorSpace(target.factors)
    elif isinstance(target, TensorSpace):
        space = target
    else:
        raise TypeError("target must be a DiamondComplex or TensorSpace")
    factors = space.factors
    if not (0 <= which_factor < len(factors)):
        raise ValueError("factor index out of range")
    if not psi:
        raise ValueError("psi has no blocks")
    fac = factors[which_factor]
    parities = set()
    for (src, tgt), mat in psi.items():
        if not (0 <= src <= fac.length and 0 <= tgt <= fac.length):
            raise ValueError(f"psi block ({src},{tgt}) outside factor levels")
        if (mat.rows, mat.cols) != (fac.ranks[tgt], fac.ranks[src]):
            raise ValueError(
                f"psi block ({src},{tgt}) has shape {mat.rows}x{mat.cols}, "
                f"expected {fac.ranks[tgt]}x{fac.ranks[src]}"
            )
        parities.add((src + tgt) % 2)
    if len(parities) != 1:
        raise ValueError("psi blocks have mixed parity")
    parity = parities.pop()

    ring = space.factors[0].ring
    offsets = space.offsets()
    entries = {}
    for levels in space.level_tuples():
        src_level = levels[which_factor]
        for (psrc, ptgt), mat in psi.items():
            if psrc != src_level:
                continue
            tgt_levels = levels[:which_factor] + (ptgt,) + levels[which_factor + 1:]
            sign = koszul_prefix_sign(levels, which_factor, parity)
            piece = None
            for t, f in enumerate(factors):
                m = mat if t == which_factor else PolyMatrix.identity(ring, f.ranks[levels[t]])
                piece = m if piece is None else piece.kron(m)
            if sign < 0:
                piece = -piece
            ro, co = offsets[tgt_levels], offsets[levels]
            for (i, j), p in piece.entries.items():
                key = (ro + i, co + j)
                entries[key] = entries[key] + p if key in entries else p
    entries = {k: v for k, v in entries.items() if not v.is_zero}
    return PolyMatrix(ring, space.dim, space.dim, entries)


# ---------------------------------------------------------------------------
# serialization (lossless text round trip)

def complex_to_text(cplx: GradedFreeComplex, order: MonomialOrder = DEFAULT_ORDER) -> str:
    lines = ["vars " + " ".join(cplx.ring.variables)]
    lines.append("ranks " + " ".join(str(r) for r in cplx.ranks))
    for j in range(1, cplx.length + 1):
        lines.append(f"differential {j}")
        mat = cplx.differential(j)
        for i in range(mat.rows):
            lines.append(", ".join(mat.entry(i, k).to_str(order, spaces=False) for k in range(mat.cols)))
    return "\n".join(lines) + "\n"


def complex_from_text(text: str) -> GradedFreeComplex:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("vars "):
        raise ParseError("complex text must start with a 'vars' line")
    ring = PolyRing(tuple(lines[0].split()[1:]))
    if len(lines) < 2 or not lines[1].startswith("ranks "):
        raise ParseError("expected a 'ranks' line")
    ranks = tuple(int(tok) for tok in lines[1].split()[1:])
    pos = 2
    diffs = []
    for j in range(1, len(ranks)):
        if pos >= len(lines) or lines[pos] != f"differential {j}":
            raise ParseError(f"expected 'differential {j}' header")
        pos += 1
        rows = []
        for _ in range(ranks[j - 1]):
            if pos >= len(lines):
                raise ParseError(f"missing rows in differential {j}")
            row = [parse_polynomial(cell, ring) for cell in lines[pos].split(",")]
            if len(row) != ranks[j]:
                raise ParseError(
                    f"differential {j}: expected {ranks[j]} entries per row, found {len(row)}"
                )
            rows.append(row)
            pos += 1
        if ranks[j - 1] == 0:
            diffs.append(PolyMatrix(ring, 0, ranks[j], {}))
        else:
            diffs.append(PolyMatrix.from_rows(ring, rows))
    if pos != len(lines):
        raise ParseError("trailing content after the last differential")
    return GradedFreeComplex(ring=ring, ranks=ranks, differentials=tuple(diffs))
