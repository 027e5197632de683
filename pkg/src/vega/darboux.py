"""Darboux points: verification, normalization, spectrum, resonance.

A proper Darboux point of a homogeneous potential V is a nonzero vector d
with V'(d) = gamma*d, gamma != 0.  This module verifies candidate points,
normalizes the multiplier to 1, computes the Hessian spectrum exactly when
it splits over Q (small-matrix characteristic polynomial plus verified
rational-root reconstruction), derives the frequencies omega_i = sqrt(lambda_i)
as exact square-root data, and classifies resonance structure.

It also builds the eigenframe used by the variational-equation chain: a
(generalized) eigenbasis M with the Darboux direction placed last for the
k = 2 pipeline, together with the transformed force F~ = M^{-1} F(M x) and
the pulled-back potential W = V(M x).  The eigenbasis is not normalized,
so everything stays inside the Gaussian rationals; the transformed force is
what the chain construction actually consumes, and it agrees with the
gradient picture whenever M is orthogonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .polycore import (
    QC,
    Fraction as _Fraction,  # re-export convenience for callers
    HomogeneousPotential,
    PoleAtPoint,
    RatFunc,
    Scalar,
    exact_sqrt_fraction,
    nth_root_fraction,
    scalar_is_zero,
    scalar_to_complex,
)


class NotADarbouxPoint(ValueError):
    """V'(d) is not parallel to d."""


class ZeroMultiplier(ValueError):
    """V'(d) = 0: the point is improper."""


class NotDiagonalizable(ValueError):
    """The Hessian at d is not diagonalizable (k = 2 pipeline requirement)."""


class ExactSpectrumUnavailable(ValueError):
    """Exact mode needs the characteristic polynomial to split over Q."""


class NormalizationNotExact(ValueError):
    """The rescaling root alpha^(k-2) = 1/gamma has no exact rational solution."""


Matrix = Tuple[Tuple[Scalar, ...], ...]
Vector = Tuple[Scalar, ...]


# ---------------------------------------------------------------------------
# Exact dense linear algebra (small n)
# ---------------------------------------------------------------------------


def mat_identity(n: int) -> Matrix:
    return tuple(tuple(QC(1) if i == j else QC(0) for j in range(n)) for i in range(n))


def mat_mul(A: Sequence[Sequence[Scalar]], B: Sequence[Sequence[Scalar]]) -> Matrix:
    n, m, p = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            s = A[i][0] * B[0][j]
            for k in range(1, m):
                s = s + A[i][k] * B[k][j]
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def mat_vec(A: Sequence[Sequence[Scalar]], v: Sequence[Scalar]) -> Vector:
    out = []
    for row in A:
        s = row[0] * v[0]
        for a, x in zip(row[1:], v[1:]):
            s = s + a * x
        out.append(s)
    return tuple(out)


def mat_sub(A, B) -> Matrix:
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_scale(A, c) -> Matrix:
    return tuple(tuple(a * c for a in row) for row in A)


def mat_trace(A) -> Scalar:
    s = A[0][0]
    for i in range(1, len(A)):
        s = s + A[i][i]
    return s


def rref(rows: List[List[Scalar]], tol: float = 0.0) -> Tuple[List[List[Scalar]], List[int]]:
    """Reduced row echelon form in place; returns (rows, pivot column list)."""
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if not scalar_is_zero(rows[i][c], tol):
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pv = rows[r][c]
        inv = pv.inv() if isinstance(pv, QC) else 1.0 / pv
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and not scalar_is_zero(rows[i][c], tol):
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def _units_for(A: Sequence[Sequence[Scalar]]) -> Tuple[Scalar, Scalar]:
    exact = all(isinstance(x, QC) for row in A for x in row)
    return (QC(1), QC(0)) if exact else (1 + 0j, 0j)


def nullspace(A: Sequence[Sequence[Scalar]], tol: float = 0.0) -> List[Vector]:
    """Deterministic basis of ker(A) (free variables set to 1 in turn)."""
    one, zero = _units_for(A)
    n = len(A[0])
    rows = [list(row) for row in A]
    rows, pivots = rref(rows, tol)
    free = [c for c in range(n) if c not in pivots]
    basis: List[Vector] = []
    for fc in free:
        v: List[Scalar] = [zero] * n
        v[fc] = one
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][fc]
        basis.append(tuple(v))
    return basis


def mat_inverse(A: Sequence[Sequence[Scalar]], tol: float = 0.0) -> Matrix:
    one, zero = _units_for(A)
    n = len(A)
    aug = [list(A[i]) + [one if j == i else zero for j in range(n)] for i in range(n)]
    aug, pivots = rref(aug, tol)
    if pivots != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return tuple(tuple(aug[i][n:]) for i in range(n))


def charpoly(A: Sequence[Sequence[Scalar]]) -> List[Scalar]:
    """Monic characteristic polynomial det(x I - A) via Faddeev-LeVerrier.

    Returns coefficients [1, c1, ..., cn] of x^n + c1 x^(n-1) + ... + cn.
    """
    n = len(A)
    M = mat_identity(n)
    coeffs: List[Scalar] = [QC(1)]
    for k in range(1, n + 1):
        AM = mat_mul(A, M)
        tr = mat_trace(AM)
        ck = -tr * QC(Fraction(1, k)) if isinstance(tr, QC) else -tr / k
        coeffs.append(ck)
        M = mat_sub(AM, mat_scale(mat_identity(n), -ck))
    return coeffs


def poly_eval_horner(coeffs: Sequence[Scalar], x: Scalar) -> Scalar:
    acc = coeffs[0]
    for c in coeffs[1:]:
        acc = acc * x + c
    return acc


def poly_deflate(coeffs: Sequence[Scalar], root: Scalar) -> List[Scalar]:
    """Exact synthetic division by (x - root); assumes root is exact."""
    out = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(out[-1] * root + c)
    return out


def _rational_candidates(z: complex):
    """Deterministic stream of Gaussian-rational reconstructions of a float."""
    seen = set()
    for lim in (1, 2, 3, 4, 6, 8, 12, 16, 24, 48, 100, 720, 10**4, 10**6):
        re = Fraction(z.real).limit_denominator(lim)
        im = Fraction(z.imag).limit_denominator(lim)
        cand = QC(re, im)
        if cand not in seen:
            seen.add(cand)
            yield cand


def rational_roots(coeffs: Sequence[QC]) -> Optional[List[QC]]:
    """All n roots (with multiplicity) if the polynomial splits over Q(i).

    Float root hints are rationalized and verified exactly; returns None as
    soon as one root resists exact reconstruction.
    """
    poly = list(coeffs)
    roots: List[QC] = []
    while len(poly) > 1:
        if len(poly) == 2:  # x + c
            roots.append(-poly[1])
            break
        hints = np.roots([scalar_to_complex(c) for c in poly])
        hints = sorted(hints, key=lambda z: (round(z.real, 9), round(z.imag, 9)))
        found = None
        for h in hints:
            for cand in _rational_candidates(complex(h)):
                if not bool(poly_eval_horner(poly, cand)):
                    found = cand
                    break
            if found is not None:
                break
        if found is None:
            return None
        roots.append(found)
        poly = poly_deflate(poly, found)
    return sorted(roots, key=lambda z: (z.re, z.im))


# ---------------------------------------------------------------------------
# Frequencies omega = sqrt(lambda)
# ---------------------------------------------------------------------------


def _squarefree_split(n: int) -> Tuple[int, int]:
    """n = m^2 * s with s squarefree; returns (m, s). n >= 1."""
    m, s = 1, 1
    d = 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        m *= d ** (e // 2)
        if e % 2:
            s *= d
        d += 1 if d == 2 else 2
    return m, s * n


@dataclass(frozen=True)
class Freq:
    """A frequency omega with omega^2 = lambda, kept as exact root data.

    For real rational lambda the value is coef*sqrt(rad) with rad a squarefree
    integer (negative rad means an imaginary frequency).  The sign choice is
    the principal square root; nothing downstream depends on it (only omega^2,
    +-omega pairs and Q-membership are consumed).

    tag: "zero" | "rational" | "irrational" | "undetermined".  "irrational"
    means certified not in Q*; "undetermined" is the float-mode fallback.
    """

    tag: str
    coef: Optional[Fraction]
    rad: int
    approx: complex
    lam_repr: str

    @classmethod
    def from_lambda(cls, lam: Scalar) -> "Freq":
        if isinstance(lam, QC):
            if not bool(lam):
                return cls("zero", Fraction(0), 1, 0j, str(lam))
            if lam.is_real():
                a = lam.re
                num, den = abs(a.numerator), a.denominator
                m, s = _squarefree_split(num * den)
                coef = Fraction(m, den)
                rad = s if a > 0 else -s
                tag = "rational" if rad == 1 else "irrational"
                approx = complex(math.sqrt(float(abs(a)))) * (1 if a > 0 else 1j)
                return cls(tag, coef, rad, approx, str(lam))
            # omega^2 not real => omega certainly not in Q*
            import cmath

            return cls("irrational", None, 0, cmath.sqrt(lam.to_complex()), str(lam))
        import cmath

        z = complex(lam)
        if abs(z) == 0:
            return cls("zero", Fraction(0), 1, 0j, repr(z))
        return cls("undetermined", None, 0, cmath.sqrt(z), repr(z))

    @property
    def rational_value(self) -> Optional[Fraction]:
        if self.tag == "zero":
            return Fraction(0)
        if self.tag == "rational":
            return self.coef
        return None

    def in_q_star(self) -> Optional[bool]:
        """True/False when certified, None when undetermined."""
        if self.tag == "rational":
            return True
        if self.tag in ("zero", "irrational"):
            return False
        return None

    def describe(self) -> str:
        if self.tag == "zero":
            return "0"
        if self.tag == "rational":
            return str(self.coef)
        if self.coef is not None:
            inner = abs(self.rad)
            root = f"sqrt({inner})"
            core = root if self.coef == 1 else f"{self.coef}*{root}"
            return core if self.rad > 0 else f"i*{core}"
        return f"~{self.approx:.6g}"


@dataclass(frozen=True)
class ResonanceClass:
    """Per-frequency tags plus the Z-linear independence decision."""

    tags: Tuple[str, ...]
    z_linear_independent: str  # "true" | "false" | "asserted" | "undetermined"
    witness: Optional[dict]

    def independence_established(self) -> bool:
        return self.z_linear_independent in ("true", "asserted")


def classify_resonance(freqs: Sequence[Freq], assert_independence: bool = False) -> ResonanceClass:
    """Tag each frequency and decide Z-linear independence when possible.

    With every lambda_i a real rational, independence is decidable exactly:
    frequencies are c_i*sqrt(s_i) with s_i squarefree, and the tuple is
    Z-linearly independent iff no omega vanishes and the s_i (signed) are
    pairwise distinct -- square roots of distinct squarefree integers are
    linearly independent over Q, while a shared radicand gives the explicit
    integer relation q*omega_i - p*omega_j = 0.
    """
    tags = tuple(f.tag for f in freqs)
    for i, f in enumerate(freqs):
        if f.tag == "zero":
            return ResonanceClass(tags, "false", {"relation": {i: 1}, "reason": "zero frequency"})
    if all(f.coef is not None for f in freqs):
        by_rad: Dict[int, int] = {}
        for i, f in enumerate(freqs):
            if f.rad in by_rad:
                j = by_rad[f.rad]
                ratio = freqs[i].coef / freqs[j].coef
                rel = {j: ratio.numerator, i: -ratio.denominator}
                return ResonanceClass(
                    tags,
                    "false",
                    {"relation": rel, "reason": f"omega_{j+1}/omega_{i+1} is rational"},
                )
            by_rad[f.rad] = i
        return ResonanceClass(tags, "true", {"reason": "distinct squarefree radicands"})
    if assert_independence:
        return ResonanceClass(tags, "asserted", None)
    return ResonanceClass(tags, "undetermined", None)


# ---------------------------------------------------------------------------
# Darboux data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DarbouxData:
    d: Vector
    gamma: Scalar
    normalized: bool
    hessian: Matrix
    eigenvalues: Tuple[Scalar, ...]
    frequencies: Tuple[Freq, ...]
    eigenbasis: Optional[Matrix]
    eigenbasis_inv: Optional[Matrix]
    diagonalizable: bool
    jordan_blocks: Tuple[Tuple[Scalar, int], ...]  # (eigenvalue, block size) in column order
    exact: bool
    mode: str
    tol: float


def hessian_at(V: HomogeneousPotential, d: Sequence[Scalar]) -> Matrix:
    f = V.as_ratfunc()
    tol = V.tol if V.mode == "float" else 0.0
    grads = [f.diff(i) for i in range(V.n)]
    rows = []
    for i in range(V.n):
        row = []
        for j in range(V.n):
            row.append(grads[i].diff(j).eval(d, tol))
        rows.append(tuple(row))
    return tuple(rows)


def _eigen_decompose_exact(H: Matrix, tol: float):
    """Exact spectrum over Q(i) with eigen/Jordan structure.

    Returns (eigenvalues sorted, basis columns, jordan_blocks, diagonalizable)
    or raises ExactSpectrumUnavailable.
    """
    n = len(H)
    coeffs = charpoly(H)
    roots = rational_roots([c if isinstance(c, QC) else QC(c) for c in coeffs])
    if roots is None:
        raise ExactSpectrumUnavailable(
            "characteristic polynomial does not split over Q(i); use float mode"
        )
    distinct: List[Tuple[QC, int]] = []
    for r in roots:
        if distinct and distinct[-1][0] == r:
            distinct[-1] = (r, distinct[-1][1] + 1)
        else:
            distinct.append((r, 1))

    columns: List[Vector] = []
    blocks: List[Tuple[Scalar, int]] = []
    diagonalizable = True
    for lam, mult in distinct:
        B = mat_sub(H, mat_scale(mat_identity(n), lam))
        kern = nullspace(B)
        if len(kern) == mult:
            for v in kern:
                columns.append(v)
                blocks.append((lam, 1))
            continue
        diagonalizable = False
        # Jordan chains: kernel ladder of powers of B
        powers = [mat_identity(n), B]
        ladders = [nullspace(B)]
        while len(ladders[-1]) < mult:
            powers.append(mat_mul(powers[-1], B))
            ladders.append(nullspace(powers[-1]))
        depth = len(ladders)
        have: List[Vector] = []

        def in_span(v: Vector, vecs: List[Vector]) -> bool:
            if not vecs:
                return not any(bool(x) if isinstance(x, QC) else abs(x) > tol for x in v)
            rows = [list(w) for w in vecs]
            rows.append(list(v))
            _, pivots = rref([list(col) for col in zip(*rows)], tol)
            # v independent iff rank increases when appended
            base_rows = [list(w) for w in vecs]
            _, base_piv = rref([list(col) for col in zip(*base_rows)], tol)
            return len(pivots) == len(base_piv)

        chains: List[List[Vector]] = []
        for j in range(depth, 0, -1):
            for cand in ladders[j - 1]:
                context = (ladders[j - 2] if j >= 2 else []) + have
                if in_span(cand, list(context)):
                    continue
                chain = [mat_vec(powers[t], cand) for t in range(j - 1, -1, -1)]
                chains.append(chain)
                have.extend(chain)
                if len(have) == mult:
                    break
            if len(have) == mult:
                break
        if len(have) != mult:
            raise ExactSpectrumUnavailable("failed to complete Jordan chains")
        for chain in chains:
            for v in chain:
                columns.append(v)
            blocks.append((lam, len(chain)))
    eigenvalues = []
    for lam, size in blocks:
        eigenvalues.extend([lam] * size)
    return tuple(eigenvalues), columns, tuple(blocks), diagonalizable


def _eigen_decompose_float(H: Matrix, tol: float):
    n = len(H)
    A = np.array([[scalar_to_complex(x) for x in row] for row in H], dtype=complex)
    w, vecs = np.linalg.eig(A)
    order = np.lexsort((w.imag.round(9), w.real.round(9)))
    w = w[order]
    vecs = vecs[:, order]
    diagonalizable = np.linalg.matrix_rank(vecs, tol=max(tol, 1e-12)) == n
    eigenvalues = tuple(complex(x) for x in w)
    columns = [tuple(complex(vecs[i, j]) for i in range(n)) for j in range(n)]
    blocks = tuple((complex(x), 1) for x in w) if diagonalizable else tuple()
    return eigenvalues, columns, blocks, diagonalizable


def verify_darboux(V: HomogeneousPotential, d: Sequence[Scalar]) -> DarbouxData:
    """Check V'(d) = gamma*d and assemble multiplier + spectrum data.

    Raises NotADarbouxPoint / ZeroMultiplier; spectrum is exact whenever the
    characteristic polynomial splits over Q(i), otherwise float fallback.
    """
    d = tuple(d)
    tol = V.tol if V.mode == "float" else 0.0
    if all(scalar_is_zero(x, tol) for x in d):
        raise NotADarbouxPoint("d must be nonzero")
    grad = [g.eval(d, tol) for g in V.gradient()]
    pivot = next(i for i, x in enumerate(d) if not scalar_is_zero(x, tol))
    gamma = grad[pivot] / d[pivot]
    scale = max((abs(scalar_to_complex(x)) for x in d), default=1.0)
    for gi, di in zip(grad, d):
        diff = gi - gamma * di
        if isinstance(diff, QC):
            if bool(diff):
                raise NotADarbouxPoint(f"V'(d) is not parallel to d: residual {diff}")
        elif abs(diff) > V.tol * max(1.0, scale):
            raise NotADarbouxPoint(f"V'(d) is not parallel to d: residual {diff}")
    if scalar_is_zero(gamma, tol):
        raise ZeroMultiplier("gamma = 0: improper Darboux point")

    H = hessian_at(V, d)
    exact = V.mode == "exact" and all(isinstance(x, QC) for row in H for x in row)
    if exact:
        try:
            eigenvalues, columns, blocks, diag = _eigen_decompose_exact(H, 0.0)
        except ExactSpectrumUnavailable:
            exact = False
    if not exact:
        eigenvalues, columns, blocks, diag = _eigen_decompose_float(H, V.tol)
    basis = tuple(tuple(col[i] for col in columns) for i in range(V.n))  # columns -> matrix
    try:
        basis_inv = mat_inverse(basis, 0.0 if exact else V.tol)
    except ZeroDivisionError:
        basis, basis_inv = None, None
    # frequencies follow the normalized spectrum: lambda_i of gamma^{-1} V''(d)
    freq_src = []
    for lam in eigenvalues:
        if isinstance(lam, QC) and isinstance(gamma, QC):
            freq_src.append(lam / gamma)
        else:
            freq_src.append(scalar_to_complex(lam) / scalar_to_complex(gamma))
    freqs = tuple(Freq.from_lambda(lam) for lam in freq_src)
    return DarbouxData(
        d=d,
        gamma=gamma,
        normalized=(isinstance(gamma, QC) and gamma == QC(1))
        or (not isinstance(gamma, QC) and abs(gamma - 1) <= V.tol),
        hessian=H,
        eigenvalues=tuple(eigenvalues),
        frequencies=freqs,
        eigenbasis=basis,
        eigenbasis_inv=basis_inv,
        diagonalizable=diag,
        jordan_blocks=blocks,
        exact=exact,
        mode=V.mode,
        tol=V.tol,
    )


def normalize_darboux(
    V: HomogeneousPotential, dd: DarbouxData
) -> Tuple[HomogeneousPotential, DarbouxData]:
    """Rescale so the multiplier becomes 1.

    k = 2: replace V by gamma^{-1} V (same point).  k != 2: rescale the point
    d -> alpha*d with alpha^(k-2)*gamma = 1, solved exactly when possible.
    Idempotent: gamma = 1 returns the inputs unchanged.
    """
    gamma = dd.gamma
    if dd.normalized:
        return V, dd
    if V.k == 2:
        inv = gamma.inv() if isinstance(gamma, QC) else 1.0 / gamma
        V2 = V.scale(inv)
        return V2, verify_darboux(V2, dd.d)
    m = V.k - 2
    if isinstance(gamma, QC):
        if not gamma.is_real():
            raise NormalizationNotExact(
                "exact rescaling of a non-real multiplier is not supported; use float mode"
            )
        alpha = nth_root_fraction(1 / gamma.re if m > 0 else gamma.re, abs(m))
        if alpha is None:
            raise NormalizationNotExact(
                f"alpha^{m} = 1/gamma has no rational solution for gamma={gamma}"
            )
        alpha_s: Scalar = QC(alpha)
    else:
        alpha_s = complex(gamma) ** (-1.0 / m)
    d2 = tuple(x * alpha_s for x in dd.d)
    return V, verify_darboux(V, d2)


# ---------------------------------------------------------------------------
# Eigenframe: the coordinates the VE chain is written in
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenFrame:
    """Eigen/Jordan coordinates for the variational equations.

    M columns are (generalized) eigenvectors; force_new = M^{-1} F(M x) is the
    transformed force whose derivative tensors feed the VE chain, and W(x) =
    V(M x) is the pulled-back potential used for Euler-chain reporting.  The
    linear part of VE_1 in these coordinates is -phi^(k-2) * J with J the
    (block-diagonal Jordan) matrix carried in `jordan_blocks`.
    """

    V: HomogeneousPotential
    dd: DarbouxData
    M: Matrix
    Minv: Matrix
    lam: Tuple[Scalar, ...]
    freqs: Tuple[Freq, ...]
    d_new: Vector
    W: HomogeneousPotential
    force_new: Tuple[RatFunc, ...]
    jordan_blocks: Tuple[Tuple[Scalar, int], ...]
    diagonalizable: bool


def _reorder_with_d_last(dd: DarbouxData, lam_d: Scalar, tol: float):
    """Column order for M: all non-lam_d blocks first, then the lam_d block with d last."""
    if not dd.diagonalizable:
        raise NotDiagonalizable("k = 2 pipeline requires a diagonalizable Hessian")
    n = len(dd.d)
    cols = [tuple(dd.eigenbasis[i][j] for i in range(n)) for j in range(n)]
    lam_list = list(dd.eigenvalues)
    same = [j for j, l in enumerate(lam_list) if l == lam_d or (
        not isinstance(l, QC) and abs(scalar_to_complex(l) - scalar_to_complex(lam_d)) <= tol)]
    if not same:
        raise NotADarbouxPoint("Euler eigenvalue (k-1)*gamma missing from the spectrum")
    others = [j for j in range(n) if j not in same]
    # Within the lam_d eigenspace, rebuild a basis containing d, placing d last.
    space = [cols[j] for j in same]
    chosen: List[Vector] = [tuple(dd.d)]
    for v in space:
        rows = [list(w) for w in chosen] + [list(v)]
        _, piv = rref([list(col) for col in zip(*rows)], tol)
        if len(piv) == len(chosen) + 1:
            chosen.append(v)
        if len(chosen) == len(space):
            break
    if len(chosen) != len(space):
        raise NotADarbouxPoint("d does not lie in the expected eigenspace")
    new_cols = [cols[j] for j in others] + chosen[1:] + [chosen[0]]
    new_lams = [lam_list[j] for j in others] + [lam_d] * len(same)
    return new_cols, new_lams


def eigenframe(
    V: HomogeneousPotential, dd: DarbouxData, d_last: bool = True
) -> EigenFrame:
    """Build the eigen/Jordan frame; with d_last the Darboux direction is e_n.

    Requires a normalized multiplier (gamma = 1).  For the diagonalizable
    case with d_last, the last eigenvalue equals (k-1); the Darboux direction
    then has frequency data omega_n^2 = k-1 as the induction assumes.
    """
    if not dd.normalized:
        raise ValueError("normalize_darboux before building the eigenframe")
    tol = V.tol if V.mode == "float" else 0.0
    n = V.n
    lam_d: Scalar = QC(V.k - 1) if dd.exact else complex(V.k - 1)
    if d_last and dd.diagonalizable:
        cols, lams = _reorder_with_d_last(dd, lam_d, tol)
        blocks = tuple((l, 1) for l in lams)
        diag = True
    else:
        if d_last and not dd.diagonalizable:
            raise NotDiagonalizable("k = 2 pipeline requires a diagonalizable Hessian")
        cols = [tuple(dd.eigenbasis[i][j] for i in range(n)) for j in range(n)]
        lams = list(dd.eigenvalues)
        blocks = dd.jordan_blocks
        diag = dd.diagonalizable
    M = tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))
    Minv = mat_inverse(M, tol)
    W = V.substitute_linear(M)
    F = V.force()
    composed = [f.substitute_linear(M) for f in F.components]
    force_new = []
    for i in range(n):
        acc: Optional[RatFunc] = None
        for l in range(n):
            if scalar_is_zero(Minv[i][l], tol):
                continue
            term = composed[l].scale(Minv[i][l])
            acc = term if acc is None else acc + term
        force_new.append(acc if acc is not None else RatFunc.from_const(n, QC(0)))
    d_new = mat_vec(Minv, dd.d)
    freqs = tuple(Freq.from_lambda(l) for l in lams)
    return EigenFrame(
        V=V,
        dd=dd,
        M=M,
        Minv=Minv,
        lam=tuple(lams),
        freqs=freqs,
        d_new=d_new,
        W=W,
        force_new=tuple(force_new),
        jordan_blocks=blocks,
        diagonalizable=diag,
    )
