"""Pointwise homotopy data: minimal-norm inverses, dbar-sigma, u and u^H.

All computation happens at a single point z of C^n, outside the degeneracy
locus of the complexes involved.  Matrix-valued antiholomorphic forms are
modelled as elements of

    Lambda(dzbar_1..dzbar_n)  tensor  Hom(T, T),

where T is the graded tensor bundle of the factor levels.  A ``GradedForm``
stores blocks keyed by (K, source levels, target levels) with K a strictly
increasing tuple of conjugate-coordinate indices.  The product carries the
sign (-1)^(|K2| * endomorphism parity of the left block) together with the
wedge reordering sign; extending a factor operator to the tensor bundle uses
the graded sign (-1)^(total degree * parity of the levels to the left).

With these conventions the homotopy identity reads, blockwise,

    f o u  -  dbar(u)  =  identity on E_0,

where dbar(u) needs only first derivatives of sigma: dbar is a derivation of
the model and dbar(dbar sigma) cancels by symmetry of mixed Wirtinger
derivatives, so dbar(u_j) = (dbar sigma)^(j-1) o dbar(sigma_1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .complexes import DiamondComplex, GradedFreeComplex, trivial_complex
from .poly import Polynomial

DEGENERACY_RTOL = 1e-8
FD_STEP = 1e-5
SINGLE_TOL = 1e-8
PRODUCT_TOL = 1e-6


class DegeneratePointError(ValueError):
    """The point is too close to the degeneracy locus for homotopy data."""


# ---------------------------------------------------------------------------
# graded matrix-valued forms

def _merge_sign(k1: tuple, k2: tuple):
    """Sorted merge of two disjoint increasing index tuples with wedge sign."""
    if set(k1) & set(k2):
        return None, 0
    inversions = sum(1 for a in k1 for b in k2 if a > b)
    merged = tuple(sorted(k1 + k2))
    return merged, (-1) ** inversions


@dataclass
class GradedForm:
    """Sum of blocks (K, src levels, tgt levels) -> complex matrix.

    ``ranks`` lists, per tensor factor, the rank of each level; single
    complexes are the one-factor case with level tuples of length 1.
    """

    ranks: tuple[tuple[int, ...], ...]
    blocks: dict = field(default_factory=dict)

    def block_rank(self, levels: tuple[int, ...]) -> int:
        size = 1
        for r, lv in zip(self.ranks, levels):
            size *= r[lv]
        return size

    def add_block(self, key, mat: np.ndarray):
        if key in self.blocks:
            self.blocks[key] = self.blocks[key] + mat
        else:
            self.blocks[key] = mat.copy()

    def cleaned(self, tol: float = 0.0) -> "GradedForm":
        out = GradedForm(self.ranks)
        for key, mat in self.blocks.items():
            if np.max(np.abs(mat)) > tol:
                out.blocks[key] = mat
        return out

    @property
    def is_zero(self) -> bool:
        return all(np.max(np.abs(m)) == 0 for m in self.blocks.values()) if self.blocks else True

    def scale(self, c) -> "GradedForm":
        out = GradedForm(self.ranks)
        for key, mat in self.blocks.items():
            out.blocks[key] = c * mat
        return out

    def __add__(self, other: "GradedForm") -> "GradedForm":
        out = GradedForm(self.ranks, dict(self.blocks))
        for key, mat in other.blocks.items():
            out.add_block(key, mat)
        return out

    def __sub__(self, other: "GradedForm") -> "GradedForm":
        return self + other.scale(-1.0)

    def compose(self, other: "GradedForm") -> "GradedForm":
        """self o other in the graded sense (other acts first)."""
        out = GradedForm(self.ranks)
        for (k1, s1, t1), m1 in self.blocks.items():
            p1 = (sum(s1) + sum(t1)) % 2
            for (k2, s2, t2), m2 in other.blocks.items():
                if t2 != s1:
                    continue
                merged, wedge = _merge_sign(k1, k2)
                if merged is None:
                    continue
                sign = wedge * (-1 if (len(k2) * p1) % 2 else 1)
                out.add_block((merged, s2, t1), sign * (m1 @ m2))
        return out.cleaned()

    def restrict_source(self, src: tuple[int, ...]) -> "GradedForm":
        out = GradedForm(self.ranks)
        for key, mat in self.blocks.items():
            if key[1] == src:
                out.blocks[key] = mat
        return out

    def max_entry(self) -> float:
        if not self.blocks:
            return 0.0
        return max(float(np.max(np.abs(m))) for m in self.blocks.values())

    def block_norms(self) -> dict:
        return {key: float(np.max(np.abs(m))) for key, m in self.blocks.items()}

    @classmethod
    def identity(cls, ranks, levels: tuple[int, ...]) -> "GradedForm":
        out = cls(tuple(ranks))
        out.blocks[((), levels, levels)] = np.eye(out.block_rank(levels), dtype=complex)
        return out


def extend_to_factors(
    form: GradedForm,
    ranks: tuple[tuple[int, ...], ...],
    which: int,
    allowed_levels: list,
) -> GradedForm:
    """Lift a one-factor form to the tensor bundle as factor ``which``.

    ``allowed_levels[t]`` lists the levels of the other factors kept in the
    lift (levels never touched by a computation can be dropped for economy).
    """
    out = GradedForm(ranks)
    other = [t for t in range(len(ranks)) if t != which]
    combos = itertools.product(*(allowed_levels[t] for t in other))
    for combo in combos:
        levels = [0] * len(ranks)
        for t, lv in zip(other, combo):
            levels[t] = lv
        for (k, s1, t1), mat in form.blocks.items():
            deg = (len(k) + s1[0] + t1[0]) % 2
            left = sum(levels[t] for t in range(which)) % 2
            sign = -1.0 if (deg * left) % 2 else 1.0
            src = tuple(levels[:which] + [s1[0]] + levels[which + 1:])
            tgt = tuple(levels[:which] + [t1[0]] + levels[which + 1:])
            piece = None
            for t in range(len(ranks)):
                m = mat if t == which else np.eye(ranks[t][levels[t]], dtype=complex)
                piece = m if piece is None else np.kron(piece, m)
            out.add_block((k, src, tgt), sign * piece)
    return out.cleaned()


# ---------------------------------------------------------------------------
# minimal-norm inverses

def sigma_at(f: np.ndarray, tol: float = DEGENERACY_RTOL) -> np.ndarray:
    """Minimal-norm inverse of f on its image, zero on the orthogonal
    complement: the Moore-Penrose pseudoinverse with singular values below
    tol * sigma_max treated as zero."""
    f = np.asarray(f, dtype=complex)
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite matrix entries")
    if f.size == 0:
        return np.zeros((f.shape[1], f.shape[0]), dtype=complex)
    u, s, vh = np.linalg.svd(f, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((f.shape[1], f.shape[0]), dtype=complex)
    cutoff = tol * s[0]
    s_inv = np.array([1.0 / x if x > cutoff else 0.0 for x in s])
    smat = np.zeros((f.shape[1], f.shape[0]), dtype=complex)
    np.fill_diagonal(smat, s_inv)
    return vh.conj().T @ smat @ u.conj().T


# ---------------------------------------------------------------------------
# exact Koszul sigma and its dbar

def _wedge_matrix(v: np.ndarray, m: int, j: int) -> np.ndarray:
    """Matrix of (v wedge .): Lambda^j -> Lambda^(j+1) in the increasing
    index basis; inserting index l past the smaller elements of I gives the
    sign (-1)^(number of elements of I below l)."""
    src = list(itertools.combinations(range(m), j))
    tgt = {I: r for r, I in enumerate(itertools.combinations(range(m), j + 1))}
    out = np.zeros((math.comb(m, j + 1), math.comb(m, j)), dtype=complex)
    for col, I in enumerate(src):
        for l in range(m):
            if l in I:
                continue
            below = sum(1 for i in I if i < l)
            J = tuple(sorted(I + (l,)))
            out[tgt[J], col] += ((-1) ** below) * v[l]
    return out


def _koszul_point_data(generators, point):
    gens = list(generators)
    ring = gens[0].ring
    n = ring.nvars
    a = np.array([g.evaluate(point) for g in gens], dtype=complex)
    grads = np.array(
        [[g.derivative(i).evaluate(point) for i in range(n)] for g in gens], dtype=complex
    )  # grads[j, i] = d a_j / d z_i
    norm2 = float(np.sum(np.abs(a) ** 2))
    return a, grads, norm2


def koszul_sigma_vector(generators, point) -> np.ndarray:
    """s = conj(a) / |a|^2, the vector whose wedge action is sigma."""
    a, _, norm2 = _koszul_point_data(generators, point)
    if math.sqrt(norm2) < 1e-8:
        raise DegeneratePointError(f"|a(z)| = {math.sqrt(norm2):.3e} below threshold")
    return a.conj() / norm2


def koszul_dbar_sigma_vectors(generators, point) -> list[np.ndarray]:
    """Exact Wirtinger derivatives d/d zbar_i of s = conj(a)/|a|^2.

    dbar_i conj(a_j) = conj(d a_j / d z_i) and
    dbar_i |a|^2 = sum_k a_k conj(d a_k / d z_i), so the quotient rule gives
    the coefficient vectors of the (0,1)-form dbar sigma.
    """
    a, grads, norm2 = _koszul_point_data(generators, point)
    if math.sqrt(norm2) < 1e-8:
        raise DegeneratePointError(f"|a(z)| = {math.sqrt(norm2):.3e} below threshold")
    n = grads.shape[1]
    out = []
    for i in range(n):
        dconj = grads[:, i].conj()
        dnorm2 = np.sum(a * grads[:, i].conj())
        out.append(dconj / norm2 - a.conj() * dnorm2 / norm2**2)
    return out


def dbar_sigma_koszul(generators, point) -> GradedForm:
    """dbar sigma for the Koszul complex on the generators, as a GradedForm
    with blocks ({i}, (k-1,), (k,)) = wedge action of the i-th derivative."""
    gens = list(generators)
    m = len(gens)
    n = gens[0].ring.nvars
    vecs = koszul_dbar_sigma_vectors(gens, point)
    ranks = (tuple(math.comb(m, j) for j in range(m + 1)),)
    out = GradedForm(ranks)
    for i in range(n):
        for j in range(m):
            mat = _wedge_matrix(vecs[i], m, j)
            if np.max(np.abs(mat)) > 0:
                out.blocks[((i,), (j,), (j + 1,))] = mat
    return out


# ---------------------------------------------------------------------------
# per-complex point frames

@dataclass
class PointFrame:
    """All differential and homotopy data of one complex at one point."""

    point: tuple[complex, ...]
    ranks: tuple[int, ...]
    diffs: list  # diffs[j-1] = f_j(z)
    sigmas: list  # sigmas[j-1] = sigma_j(z)
    dbar_sigmas: list  # dbar_sigmas[j-1][i] = d sigma_j / d zbar_i
    exact_dbar: bool

    @property
    def length(self) -> int:
        return len(self.ranks) - 1

    @classmethod
    def from_koszul(cls, generators, point, tol: float = DEGENERACY_RTOL) -> "PointFrame":
        gens = list(generators)
        m = len(gens)
        n = gens[0].ring.nvars
        a = np.array([g.evaluate(point) for g in gens], dtype=complex)
        s = koszul_sigma_vector(gens, point)
        dvecs = koszul_dbar_sigma_vectors(gens, point)
        ranks = tuple(math.comb(m, j) for j in range(m + 1))
        diffs = []
        sigmas = []
        dbars = []
        for j in range(1, m + 1):
            diffs.append(_contraction_matrix(a, m, j))
            sigmas.append(_wedge_matrix(s, m, j - 1))
            dbars.append([_wedge_matrix(dvecs[i], m, j - 1) for i in range(n)])
        return cls(tuple(point), ranks, diffs, sigmas, dbars, exact_dbar=True)

    @classmethod
    def from_complex(
        cls,
        cplx: GradedFreeComplex,
        point,
        tol: float = DEGENERACY_RTOL,
        fd_step: float = FD_STEP,
    ) -> "PointFrame":
        if cplx.koszul_generators is not None:
            return cls.from_koszul(cplx.koszul_generators, point, tol)
        n = cplx.ring.nvars
        point = tuple(point)

        def sigmas_at(z):
            return [sigma_at(cplx.differential(j).evaluate(z), tol) for j in range(1, cplx.length + 1)]

        diffs = [cplx.differential(j).evaluate(point) for j in range(1, cplx.length + 1)]
        sigmas = sigmas_at(point)
        dbars = []
        for j in range(cplx.length):
            per_coord = []
            for i in range(n):
                # dbar = (d/dx + i d/dy) / 2 by central differences
                def shifted(delta):
                    z = list(point)
                    z[i] = z[i] + delta
                    return sigmas_at(z)[j]

                dx = (shifted(fd_step) - shifted(-fd_step)) / (2 * fd_step)
                dy = (shifted(1j * fd_step) - shifted(-1j * fd_step)) / (2 * fd_step)
                per_coord.append(0.5 * (dx + 1j * dy))
            dbars.append(per_coord)
        return cls(point, cplx.ranks, diffs, sigmas, dbars, exact_dbar=False)

    # -- invariant checks ----------------------------------------------------
    def pseudoinverse_residuals(self) -> list[float]:
        """max(|f s f - f|, |s f s - s|) / scale per level."""
        out = []
        for f, s in zip(self.diffs, self.sigmas):
            scale = max(np.max(np.abs(f)), 1e-30)
            r1 = np.max(np.abs(f @ s @ f - f)) / scale
            sscale = max(np.max(np.abs(s)), 1e-30)
            r2 = np.max(np.abs(s @ f @ s - s)) / sscale
            out.append(float(max(r1, r2)))
        return out

    def homotopy_residuals(self) -> list[float]:
        """|f_{k+1} sigma_{k+1} + sigma_k f_k - 1| per level k = 0..L."""
        out = []
        for k in range(self.length + 1):
            acc = -np.eye(self.ranks[k], dtype=complex)
            if k < self.length:
                acc = acc + self.diffs[k] @ self.sigmas[k]
            if k > 0:
                acc = acc + self.sigmas[k - 1] @ self.diffs[k - 1]
            out.append(float(np.max(np.abs(acc))))
        return out

    def require_generic(self, tol: float = 1e-6):
        res = max(self.pseudoinverse_residuals() + self.homotopy_residuals())
        if res > tol:
            raise DegeneratePointError(
                f"point {self.point} fails exactness/pseudoinverse checks (residual {res:.3e})"
            )

    # -- graded-form views ----------------------------------------------------
    def f_form(self) -> GradedForm:
        out = GradedForm((self.ranks,))
        for j in range(1, self.length + 1):
            out.blocks[((), (j,), (j - 1,))] = self.diffs[j - 1]
        return out

    def f1_form(self) -> GradedForm:
        out = GradedForm((self.ranks,))
        out.blocks[((), (1,), (0,))] = self.diffs[0]
        return out

    def sigma1_form(self) -> GradedForm:
        out = GradedForm((self.ranks,))
        out.blocks[((), (0,), (1,))] = self.sigmas[0]
        return out

    def dbar_sigma_form(self) -> GradedForm:
        out = GradedForm((self.ranks,))
        for j in range(1, self.length + 1):
            for i, mat in enumerate(self.dbar_sigmas[j - 1]):
                if np.max(np.abs(mat)) > 0:
                    out.add_block(((i,), (j - 1,), (j,)), mat)
        return out.cleaned()


def _contraction_matrix(a: np.ndarray, m: int, j: int) -> np.ndarray:
    """Koszul differential Lambda^j -> Lambda^(j-1) at a point."""
    src = list(itertools.combinations(range(m), j))
    tgt = {I: r for r, I in enumerate(itertools.combinations(range(m), j - 1))}
    out = np.zeros((math.comb(m, j - 1), math.comb(m, j)), dtype=complex)
    for col, I in enumerate(src):
        for t, i in enumerate(I):
            rest = I[:t] + I[t + 1:]
            out[tgt[rest], col] += ((-1) ** t) * a[i]
    return out


# ---------------------------------------------------------------------------
# u, dbar(u) and the homotopy identity

def _u_and_dbar(frame: PointFrame, n_coords: int) -> tuple[GradedForm, GradedForm]:
    """u = sum_j (dbar sigma)^(j-1) o sigma_1 restricted to level 0, and
    dbar(u) = sum_j (dbar sigma)^(j-1) o (dbar sigma)|_{0->1}."""
    d = frame.dbar_sigma_form()
    s1 = frame.sigma1_form()
    d0 = d.restrict_source((0,))
    u = GradedForm(s1.ranks, dict(s1.blocks))
    du = GradedForm(s1.ranks, dict(d0.blocks))
    current_u = s1
    current_du = d0
    for _ in range(min(frame.length, n_coords) + 1):
        current_u = d.compose(current_u)
        current_du = d.compose(current_du)
        if current_u.is_zero and current_du.is_zero:
            break
        u = u + current_u
        du = du + current_du
    return u.cleaned(), du.cleaned()


def _normalize_factors(subject):
    """-> (list of GradedFreeComplex factors, is_diamond)."""
    if isinstance(subject, DiamondComplex):
        return list(subject.factors), True
    if isinstance(subject, GradedFreeComplex):
        return [subject], False
    # bare Koszul generators
    from .complexes import koszul_complex

    gens = list(subject)
    if not gens or not isinstance(gens[0], Polynomial):
        raise TypeError("subject must be a complex, diamond complex, or generator list")
    return [koszul_complex(gens)], False


def build_u(subject, point, tol: float = DEGENERACY_RTOL) -> GradedForm:
    """The homotopy form u of a single complex at a point, source level 0.

    Block ((K, (0,), (j,))) is the Hom(E_0, E_j)-valued coefficient of
    dzbar_K; it carries exactly j-1 antiholomorphic indices.  For Koszul
    input the wedge powers beyond min(m-1, n) vanish identically and this is
    asserted.
    """
    factors, is_diamond = _normalize_factors(subject)
    if is_diamond or len(factors) != 1:
        raise TypeError("build_u takes a single complex; use build_uH for products")
    cplx = factors[0]
    n = cplx.ring.nvars
    frame = PointFrame.from_complex(cplx, point, tol)
    frame.require_generic()
    u, _ = _u_and_dbar(frame, n)
    for (k, src, tgt) in u.blocks:
        assert len(k) == tgt[0] - 1, "form-degree bookkeeping violated"
    if cplx.koszul_generators is not None:
        m = len(cplx.koszul_generators)
        bound = min(m - 1, n)
        d = frame.dbar_sigma_form()
        power = d
        for j in range(2, bound + 2):
            power = d.compose(power)
        if power.max_entry() > 1e-12:
            raise AssertionError(
                f"Koszul truncation violated: (dbar sigma)^{bound + 1} has norm {power.max_entry():.3e}"
            )
    return u


def build_uH(factor_us: list[GradedForm]) -> GradedForm:
    """Tensor product u^1 x ... x u^r of per-factor homotopy forms (odd r).

    Each input is a one-factor GradedForm with source level 0; the output
    lives on the joint tensor bundle with the graded sign rules.
    """
    r = len(factor_us)
    if r % 2 == 0:
        raise ValueError("build_uH needs an odd number of factors (pad first)")
    ranks = tuple(u.ranks[0] for u in factor_us)
    all_levels = [list(range(len(rk))) for rk in ranks]
    zero_only = [[0] for _ in ranks]
    chain = None
    for s in range(r - 1, -1, -1):
        allowed = [zero_only[t] if t < s else all_levels[t] for t in range(r)]
        lifted = extend_to_factors(factor_us[s], ranks, s, allowed)
        chain = lifted if chain is None else lifted.compose(chain)
    return chain.cleaned()


@dataclass
class NablaReport:
    point: tuple[complex, ...]
    ok: bool
    tol: float
    residual: float
    h1_residual: float
    tilde_residual: float
    block_norms: dict

    def describe(self) -> str:
        status = "pass" if self.ok else "FAIL"
        return (
            f"{status}: |nabla u - 1| = {self.residual:.3e} "
            f"(h1 part {self.h1_residual:.3e}, remaining terms {self.tilde_residual:.3e}, "
            f"tol {self.tol:.1e})"
        )


def check_nabla_identity(subject, point, tol: float | None = None) -> NablaReport:
    """Numerically verify that (nabla u)|_{E_0} (resp. H_0) is the identity.

    Assembles f o u - dbar(u) - 1 blockwise at the point.  For products the
    differential enters through its convenient total form
    sum_k f^k - sum_k f^k_1 + (f^r_1 ... f^1_1), so the report also splits
    into the h_1-part (must be the identity on H_0) and the remaining terms
    (must vanish).  Raises DegeneratePointError near the degeneracy locus.
    """
    factors, is_diamond = _normalize_factors(subject)
    r = len(factors)
    if is_diamond and r % 2 == 0:
        raise ValueError("product homotopy checks need an odd factor count (pad_to_odd)")
    if tol is None:
        tol = SINGLE_TOL if r == 1 else PRODUCT_TOL
    n = factors[0].ring.nvars
    point = tuple(point)

    frames = [PointFrame.from_complex(f, point) for f in factors]
    for fr in frames:
        fr.require_generic()

    ranks = tuple(fr.ranks for fr in frames)
    all_levels = [list(range(len(rk))) for rk in ranks]
    zero_only = [[0] for _ in ranks]

    us = []
    dus = []
    for fr in frames:
        u, du = _u_and_dbar(fr, n)
        us.append(u)
        dus.append(du)

    def chain(parts: list[GradedForm]) -> GradedForm:
        acc = None
        for s in range(r - 1, -1, -1):
            allowed = [zero_only[t] if t < s else all_levels[t] for t in range(r)]
            lifted = extend_to_factors(parts[s], ranks, s, allowed)
            acc = lifted if acc is None else lifted.compose(acc)
        return acc

    u_H = chain(us)
    dbar_u = None
    for s in range(r):
        parts = list(us)
        parts[s] = dus[s]
        term = chain(parts)
        term = term.scale((-1.0) ** s)
        dbar_u = term if dbar_u is None else dbar_u + term

    # total differential of the product in its convenient form
    f_total = None
    for s, fr in enumerate(frames):
        lifted = extend_to_factors(fr.f_form(), ranks, s, all_levels)
        f_total = lifted if f_total is None else f_total + lifted
        lifted1 = extend_to_factors(fr.f1_form(), ranks, s, all_levels)
        f_total = f_total - lifted1
    h1 = None
    for s in range(r):
        lifted = extend_to_factors(frames[s].f1_form(), ranks, s, all_levels)
        h1 = lifted if h1 is None else lifted.compose(h1)
    f_total = f_total + h1

    zeros = (0,) * r
    ident = GradedForm.identity(ranks, zeros)

    h1_part = h1.compose(u_H)
    h1_residual = (h1_part - ident).cleaned().max_entry()
    tilde = (f_total - h1).compose(u_H) - dbar_u
    tilde_residual = tilde.cleaned().max_entry()
    residual_form = (f_total.compose(u_H) - dbar_u - ident).cleaned()
    residual = residual_form.max_entry()

    return NablaReport(
        point=point,
        ok=residual < tol,
        tol=tol,
        residual=residual,
        h1_residual=h1_residual,
        tilde_residual=tilde_residual,
        block_norms=residual_form.block_norms(),
    )


def assemble_on_levels(form: GradedForm, diamond: DiamondComplex) -> dict:
    """Convert a tensor-bundle form with source H_0 into per-level matrices.

    Returns {(k, K): matrix of shape rank H_k x rank H_0} using the diamond's
    recorded block offsets.
    """
    blocks_by_levels = {}
    for k, blocks in enumerate(diamond.index_map):
        for b in blocks:
            blocks_by_levels[b.levels] = (k, b)
    h_ranks = diamond.result.ranks
    rank0 = h_ranks[0]
    out: dict = {}
    for (K, src, tgt), mat in form.blocks.items():
        if any(lv != 0 for lv in src):
            raise ValueError("assemble_on_levels expects source H_0")
        if tgt not in blocks_by_levels:
            raise ValueError(f"block with levels {tgt} is outside the product tower")
        k, b = blocks_by_levels[tgt]
        key = (k, K)
        if key not in out:
            out[key] = np.zeros((h_ranks[k], rank0), dtype=complex)
        out[key][b.offset : b.offset + b.size, :] += mat
    return out


def numeric_rank(mat: np.ndarray, rtol: float = DEGENERACY_RTOL) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))
