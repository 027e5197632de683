"""Floating-point validation: contour transport, monodromy, residual checks.

Fixed-step RK4 on explicitly parameterized complex-time contours; no
adaptive stepping, so monodromy numbers are reproducible bit-for-bit across
runs.  A Richardson estimate (full steps vs half steps) guards accuracy
post hoc.  Everything here is a check on the symbolic modules, never a
verdict source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np


class SingularityTooClose(ValueError):
    pass


class StepCountTooSmall(ValueError):
    pass


DEFAULT_STEPS = 4096
DEFAULT_RADIUS = 1.0  # empirically safe within [0.2, 2.5] around n*pi


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    """A parameterized path in complex time: a circle or a polyline.

    Circles are traversed counterclockwise from center + radius; polylines
    visit the given waypoints with steps split evenly between segments.
    Closed contours end exactly at their base point by construction.
    """

    kind: str  # "circle" | "polyline"
    center: complex = 0j
    radius: float = 0.0
    points: Tuple[complex, ...] = ()

    @classmethod
    def circle(cls, center: complex, radius: float) -> "Contour":
        if radius <= 0:
            raise ValueError("radius must be positive")
        return cls(kind="circle", center=complex(center), radius=float(radius))

    @classmethod
    def polyline(cls, points: Sequence[complex]) -> "Contour":
        pts = tuple(complex(p) for p in points)
        if len(pts) < 2:
            raise ValueError("polyline needs at least two points")
        return cls(kind="polyline", points=pts)

    @property
    def closed(self) -> bool:
        if self.kind == "circle":
            return True
        return self.points[0] == self.points[-1]

    @property
    def base_point(self) -> complex:
        return self.center + self.radius if self.kind == "circle" else self.points[0]

    def segments(self) -> List[Tuple[Callable[[float], complex], Callable[[float], complex]]]:
        """(t(s), dt/ds) pairs, each on s in [0, 1]."""
        if self.kind == "circle":
            c, r = self.center, self.radius

            def t_of(s: float) -> complex:
                return c + r * np.exp(2j * math.pi * s)

            def dt_of(s: float) -> complex:
                return 2j * math.pi * r * np.exp(2j * math.pi * s)

            return [(t_of, dt_of)]
        segs = []
        for a, b in zip(self.points[:-1], self.points[1:]):
            segs.append((lambda s, a=a, b=b: a + (b - a) * s, lambda s, a=a, b=b: b - a))
        return segs

    def min_distance(self, points: Sequence[complex], samples: int = 256) -> float:
        best = math.inf
        for t_of, _ in self.segments():
            for i in range(samples + 1):
                t = t_of(i / samples)
                for p in points:
                    best = min(best, abs(t - p))
        return best


# ---------------------------------------------------------------------------
# RK4 transport
# ---------------------------------------------------------------------------


def _rk4_segment(field, y, t_of, dt_of, steps: int):
    h = 1.0 / steps
    s = 0.0
    for _ in range(steps):
        f = lambda ss, yy: dt_of(ss) * field(t_of(ss), yy)
        k1 = f(s, y)
        k2 = f(s + h / 2, y + (h / 2) * k1)
        k3 = f(s + h / 2, y + (h / 2) * k2)
        k4 = f(s + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return y


def transport(field, y0: np.ndarray, contour: Contour, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """RK4-propagate dy/dt = field(t, y) along the contour (fixed step)."""
    segs = contour.segments()
    per = max(1, steps // len(segs))
    y = np.array(y0, dtype=complex)
    for t_of, dt_of in segs:
        y = _rk4_segment(field, y, t_of, dt_of, per)
    return y


@dataclass(frozen=True)
class FundamentalMatrix:
    """End-point fundamental matrix of a linear transport along a contour."""

    matrix: np.ndarray
    base_point: complex
    steps: int
    richardson: Optional[float] = None  # estimated error if requested

    def determinant(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def integrate_system(
    A: Callable[[complex], np.ndarray],
    contour: Contour,
    steps: int = DEFAULT_STEPS,
    g: Optional[Callable[[complex], np.ndarray]] = None,
    initial: Optional[np.ndarray] = None,
    singularities: Sequence[complex] = (),
    clearance: float = 0.05,
    check_tolerance: Optional[float] = None,
) -> FundamentalMatrix:
    """Transport the fundamental matrix of Y' = A(t) Y (+ g) along a contour.

    With a forcing g the system is augmented to [[A, g], [0, 0]]; the last
    column of the result then carries the particular solution from zero
    initial data.  If check_tolerance is given, a half-step Richardson
    estimate must stay below it (StepCountTooSmall otherwise).
    """
    if singularities:
        d = contour.min_distance(list(singularities))
        if d < clearance:
            raise SingularityTooClose(
                f"contour passes within {d:.3g} of a singularity (clearance {clearance})"
            )
    probe = A(contour.base_point)
    m = probe.shape[0]
    dim = m + 1 if g is not None else m

    def field(t: complex, Y: np.ndarray) -> np.ndarray:
        At = A(t)
        if g is None:
            return At @ Y
        Aug = np.zeros((dim, dim), dtype=complex)
        Aug[:m, :m] = At
        Aug[:m, m] = g(t)
        return Aug @ Y

    Y0 = np.eye(dim, dtype=complex) if initial is None else np.array(initial, dtype=complex)
    out = transport(field, Y0, contour, steps)
    rich = None
    if check_tolerance is not None:
        half = transport(field, Y0, contour, max(2, steps // 2))
        rich = float(np.max(np.abs(out - half)) / 15.0)
        if rich > check_tolerance:
            raise StepCountTooSmall(
                f"Richardson estimate {rich:.3g} exceeds tolerance {check_tolerance:.3g}"
            )
    return FundamentalMatrix(matrix=out, base_point=contour.base_point, steps=steps, richardson=rich)


def monodromy_matrix(
    A: Callable[[complex], np.ndarray],
    singularity: complex,
    radius: float = DEFAULT_RADIUS,
    steps: int = DEFAULT_STEPS,
    g: Optional[Callable[[complex], np.ndarray]] = None,
    other_singularities: Sequence[complex] = (),
    check_tolerance: Optional[float] = None,
) -> FundamentalMatrix:
    """Counterclockwise loop transport around one singularity.

    The radius must keep every other singularity outside the loop.
    """
    for s in other_singularities:
        if s != singularity and abs(s - singularity) <= radius:
            raise SingularityTooClose("loop would enclose a second singularity")
    contour = Contour.circle(singularity, radius)
    return integrate_system(
        A,
        contour,
        steps=steps,
        g=g,
        singularities=[singularity],
        clearance=min(0.05, radius / 2),
        check_tolerance=check_tolerance,
    )


def contour_integral(
    f: Callable[[complex], complex], contour: Contour, steps: int = DEFAULT_STEPS
) -> complex:
    """The line integral of f along the contour via the same RK4 scheme."""

    def field(t: complex, y: np.ndarray) -> np.ndarray:
        return np.array([f(t)], dtype=complex)

    out = transport(field, np.zeros(1, dtype=complex), contour, steps)
    return complex(out[0])


# ---------------------------------------------------------------------------
# k = 2 subsystem fields (phi = sin t; singularities at n*pi)
# ---------------------------------------------------------------------------


def ve2_alpha_field(theta: complex, lam_alpha: complex, lam_gamma: complex):
    """VE_{2,alpha}^gamma as a 5x5 linear field on (x^2, x xd, xd^2, z, zd).

    The symmetric-square trick makes the quadratically forced system linear,
    so loop transport is meaningful; with theta = 0 the (z, zd) block
    decouples into the plain VE_1 oscillator.
    """

    def A(t: complex) -> np.ndarray:
        M = np.zeros((5, 5), dtype=complex)
        M[0, 1] = 2
        M[1, 0] = -lam_alpha
        M[1, 2] = 1
        M[2, 1] = -2 * lam_alpha
        M[3, 4] = 1
        M[4, 3] = -lam_gamma
        M[4, 0] = theta / np.sin(t)
        return M

    return A


def ex2_field(theta: complex, lam_a: complex, lam_b: complex, lam_g: complex):
    """EX_{2,(alpha,beta)}^gamma on (xy, x yd, xd y, xd yd, z, zd) (6x6)."""

    def A(t: complex) -> np.ndarray:
        M = np.zeros((6, 6), dtype=complex)
        M[0, 1] = 1
        M[0, 2] = 1
        M[1, 0] = -lam_b
        M[1, 3] = 1
        M[2, 0] = -lam_a
        M[2, 3] = 1
        M[3, 1] = -lam_a
        M[3, 2] = -lam_b
        M[4, 5] = 1
        M[5, 4] = -lam_g
        M[5, 0] = 2 * theta / np.sin(t)
        return M

    return A


def singularities_k2(count: int = 6) -> List[complex]:
    return [complex(n * math.pi) for n in range(-count, count + 1)]


# ---------------------------------------------------------------------------
# Diagnostics and residuals
# ---------------------------------------------------------------------------


def commutator_diagnostic(matrices: Sequence[np.ndarray], tol: float = 1e-8) -> dict:
    """Max pairwise commutator norm; a heuristic flag, never a verdict.

    Monodromy sits inside the Galois group, so non-commuting loops are
    consistent with (not proof of) a non-Abelian identity component.
    """
    if len(matrices) < 2:
        return {"max_commutator": 0.0, "non_commuting": False, "pairs": []}
    worst = 0.0
    pairs = []
    for i in range(len(matrices)):
        for j in range(i + 1, len(matrices)):
            c = matrices[i] @ matrices[j] - matrices[j] @ matrices[i]
            norm = float(np.max(np.abs(c)))
            pairs.append({"i": i, "j": j, "norm": norm})
            worst = max(worst, norm)
    return {"max_commutator": worst, "non_commuting": worst > tol, "pairs": pairs}


def second_derivative(
    x: Callable[[complex], np.ndarray],
    t: complex,
    radius: float = 0.25,
    nodes: int = 64,
) -> np.ndarray:
    """Second derivative via the Cauchy integral on a small circle.

    Trapezoid quadrature of (2!/2 pi i) * int x(z)/(z-t)^3 dz converges
    spectrally for analytic x; the radius must stay clear of branch points
    and poles of the solution.  Deterministic for fixed nodes.
    """
    acc = None
    for j in range(nodes):
        w = np.exp(2j * math.pi * j / nodes)
        v = np.asarray(x(t + radius * w), dtype=complex) / (w * w)
        acc = v if acc is None else acc + v
    return (2.0 / (nodes * radius * radius)) * acc


def residual_check(
    solution: Callable[[complex], np.ndarray],
    accel: Callable[[complex, np.ndarray], np.ndarray],
    samples: Sequence[complex],
    radius: float = 0.25,
    nodes: int = 64,
) -> float:
    """max over samples of || xdd_claimed - accel(t, x) || (sup norm)."""
    worst = 0.0
    for t in samples:
        xdd = second_derivative(solution, t, radius=radius, nodes=nodes)
        rhs = accel(t, np.asarray(solution(t), dtype=complex))
        worst = max(worst, float(np.max(np.abs(xdd - rhs))))
    return worst


def rk4_order_ratio(
    A: Callable[[complex], np.ndarray],
    contour: Contour,
    steps: int = 256,
) -> float:
    """Closed-loop identity-transport error ratio e(steps)/e(2*steps).

    Should sit near 16 for a 4th-order scheme.
    """
    if not contour.closed:
        raise ValueError("order check needs a closed contour")
    m = A(contour.base_point).shape[0]
    eye = np.eye(m, dtype=complex)
    e1 = np.max(np.abs(integrate_system(A, contour, steps=steps).matrix - eye))
    e2 = np.max(np.abs(integrate_system(A, contour, steps=2 * steps).matrix - eye))
    return float(e1 / e2)
