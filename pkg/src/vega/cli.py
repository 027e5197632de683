"""Batch front end: problem files in, canonical reports out.

Problem files are JSON documents (schema below); reports are JSON with
sorted keys and exact numbers serialized as numerator/denominator strings,
so identical exact-mode inputs produce byte-identical reports across runs
and thread counts.  stdout carries the report, stderr the logs.

Problem schema::

    {
      "n": 2, "k": 2,
      "potential": {
        "numerator":   [{"exponents": [3, 0], "coefficient": "1"}, ...],
        "denominator": [{"exponents": [0, 1], "coefficient": "1"}]   # optional
      },
      "darboux_candidates": [["0", "1"], ...],
      "options": {"mode": "exact", "tolerance": 1e-9, "p_max": 3,
                  "energy": ["0", "1"], "assert_independence": false}
    }

Exact scalars are "p/q" strings or ["re", "im"] pairs of such strings;
float-mode scalars are plain numbers or [re, im] pairs.

Exit status: 0 virtually Abelian / ok, 2 obstruction found, 3 inconclusive,
1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import trig
from .balgebra_km2 import (
    BElement,
    ChainSolutionKm2,
    Regime,
    eval_belement,
    phi_basis,
    solve_ve_chain_km2,
)
from .darboux import (
    DarbouxData,
    ExactSpectrumUnavailable,
    Freq,
    NormalizationNotExact,
    NotADarbouxPoint,
    NotDiagonalizable,
    ZeroMultiplier,
    classify_resonance,
    eigenframe,
    normalize_darboux,
    verify_darboux,
)
from .galois_k2 import (
    INCONCLUSIVE,
    NOT_VIRTUALLY_ABELIAN,
    VIRTUALLY_ABELIAN,
    Certificate,
    NonResonanceNotEstablished,
    Verdict,
    inductive_analysis,
    ve2_check_table,
    verdict_from_table,
)
from .numeric import Contour, contour_integral, monodromy_matrix, ve2_alpha_field
from .polycore import (
    QC,
    HomogeneousPotential,
    PoleAtPoint,
    Scalar,
    euler_check,
    random_rational_points,
    scalar_is_zero,
    scalar_to_complex,
)
from .vebuild import build_ve_chain, xi_table

log = logging.getLogger("vega")

_STATUS_RANK = {NOT_VIRTUALLY_ABELIAN: 0, INCONCLUSIVE: 1, VIRTUALLY_ABELIAN: 2}


# ---------------------------------------------------------------------------
# Scalar JSON (lossless in exact mode)
# ---------------------------------------------------------------------------


class ProblemError(ValueError):
    """Malformed problem file; the message carries the field locus."""


def scalar_from_json(x, mode: str, where: str) -> Scalar:
    try:
        if mode == "exact":
            if isinstance(x, str):
                return QC(Fraction(x))
            if isinstance(x, int):
                return QC(x)
            if isinstance(x, list) and len(x) == 2:
                return QC(Fraction(str(x[0])), Fraction(str(x[1])))
            raise ValueError("exact scalars are 'p/q' strings or [re, im] string pairs")
        if isinstance(x, (int, float)):
            return complex(x)
        if isinstance(x, str):
            return complex(float(Fraction(x)))
        if isinstance(x, list) and len(x) == 2:
            return complex(float(x[0]), float(x[1]))
        raise ValueError("float scalars are numbers or [re, im] pairs")
    except (ValueError, ZeroDivisionError) as e:
        raise ProblemError(f"{where}: bad scalar {x!r} ({e})") from None


def scalar_to_json(x: Scalar):
    if isinstance(x, QC):
        if x.im == 0:
            return str(x.re)
        return [str(x.re), str(x.im)]
    z = complex(x)
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


def freq_to_json(f: Freq) -> dict:
    return {"tag": f.tag, "value": f.describe()}


def belement_to_json(b: BElement) -> list:
    return [[m, scalar_to_json(w), scalar_to_json(c)] for (m, w), c in b.items_sorted()]


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------


def _parse_terms(entries, n: int, mode: str, where: str) -> Dict[tuple, Scalar]:
    if not isinstance(entries, list):
        raise ProblemError(f"{where}: expected a list of terms")
    out: Dict[tuple, Scalar] = {}
    for i, item in enumerate(entries):
        locus = f"{where}[{i}]"
        if not isinstance(item, dict) or "exponents" not in item or "coefficient" not in item:
            raise ProblemError(f"{locus}: term needs 'exponents' and 'coefficient'")
        exps = item["exponents"]
        if (
            not isinstance(exps, list)
            or len(exps) != n
            or not all(isinstance(e, int) and e >= 0 for e in exps)
        ):
            raise ProblemError(
                f"{locus}.exponents: need {n} non-negative integers, got {exps!r}"
            )
        c = scalar_from_json(item["coefficient"], mode, f"{locus}.coefficient")
        key = tuple(exps)
        out[key] = out.get(key, QC(0) if mode == "exact" else 0j) + c
    return out


class Problem:
    def __init__(self, doc: dict, seed: int = 0):
        if not isinstance(doc, dict):
            raise ProblemError("problem file must be a JSON object")
        for field in ("n", "k", "potential"):
            if field not in doc:
                raise ProblemError(f"missing required field '{field}'")
        n, k = doc["n"], doc["k"]
        if not isinstance(n, int) or n < 1:
            raise ProblemError("n: need a positive integer")
        if not isinstance(k, int) or k == 0:
            raise ProblemError("k: need a nonzero integer")
        opts = doc.get("options", {}) or {}
        self.mode = opts.get("mode", "exact")
        if self.mode not in ("exact", "float"):
            raise ProblemError("options.mode: 'exact' or 'float'")
        self.tol = float(opts.get("tolerance", 1e-9))
        self.p_max = int(opts.get("p_max", 3))
        self.assert_independence = bool(opts.get("assert_independence", False))
        self.energy = [
            scalar_from_json(e, self.mode, "options.energy") for e in opts.get("energy", ["0", "1"])
        ]
        pot = doc["potential"]
        if not isinstance(pot, dict) or "numerator" not in pot:
            raise ProblemError("potential: need an object with 'numerator'")
        num = _parse_terms(pot["numerator"], n, self.mode, "potential.numerator")
        den = (
            _parse_terms(pot["denominator"], n, self.mode, "potential.denominator")
            if pot.get("denominator")
            else None
        )
        try:
            self.V = HomogeneousPotential.from_terms(
                n, k, num, den, mode=self.mode, tol=self.tol
            )
        except (ValueError, ZeroDivisionError) as e:
            raise ProblemError(f"potential: {e}") from None
        self.candidates: List[Tuple[Scalar, ...]] = []
        for i, cand in enumerate(doc.get("darboux_candidates", [])):
            if not isinstance(cand, list) or len(cand) != n:
                raise ProblemError(f"darboux_candidates[{i}]: need a vector of length {n}")
            self.candidates.append(
                tuple(
                    scalar_from_json(x, self.mode, f"darboux_candidates[{i}][{j}]")
                    for j, x in enumerate(cand)
                )
            )
        self.doc = doc
        # Euler check at load: declared k must match the actual homogeneity
        avoid = self._pole_avoider()
        if self.mode == "exact":
            samples = random_rational_points(n, 6, seed=seed, avoid=avoid)
        else:
            samples = random_rational_points(n, 6, seed=seed, avoid=avoid)
        if not euler_check(self.V, samples):
            raise ProblemError(
                f"potential fails the Euler check for declared degree k={k}"
            )

    def _pole_avoider(self):
        den = self.V.den

        def avoid(pt) -> bool:
            try:
                return scalar_is_zero(den.eval(pt), self.tol if self.mode == "float" else 0.0)
            except Exception:
                return True

        return avoid

    def canonical_echo(self) -> dict:
        num = [
            {"exponents": list(m), "coefficient": scalar_to_json(c)}
            for m, c in self.V.num.items_grlex()
        ]
        den = [
            {"exponents": list(m), "coefficient": scalar_to_json(c)}
            for m, c in self.V.den.items_grlex()
        ]
        return {
            "n": self.V.n,
            "k": self.V.k,
            "potential": {"numerator": num, "denominator": den},
            "darboux_candidates": [[scalar_to_json(x) for x in c] for c in self.candidates],
            "options": {
                "mode": self.mode,
                "tolerance": self.tol,
                "p_max": self.p_max,
                "assert_independence": self.assert_independence,
                "energy": [scalar_to_json(e) for e in self.energy],
            },
        }


def load_problem(path: str, seed: int = 0, overrides: Optional[dict] = None) -> Problem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ProblemError(f"cannot read problem file: {e}") from None
    except json.JSONDecodeError as e:
        raise ProblemError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if overrides:
        doc.setdefault("options", {}).update(
            {k: v for k, v in overrides.items() if v is not None}
        )
    return Problem(doc, seed=seed)


# ---------------------------------------------------------------------------
# Parallel sweep helper (orderd results; VEGA_THREADS caps workers)
# ---------------------------------------------------------------------------


def _thread_count() -> int:
    raw = os.environ.get("VEGA_THREADS", "")
    try:
        v = int(raw)
        return max(1, v)
    except ValueError:
        return 1


def parallel_map(fn, items: Sequence):
    workers = _thread_count()
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _darboux_section(V: HomogeneousPotential, dd: DarbouxData) -> dict:
    return {
        "point": [scalar_to_json(x) for x in dd.d],
        "gamma": scalar_to_json(dd.gamma),
        "eigenvalues": [scalar_to_json(l) for l in dd.eigenvalues],
        "frequencies": [freq_to_json(f) for f in dd.frequencies],
        "diagonalizable": dd.diagonalizable,
        "jordan_blocks": [[scalar_to_json(l), s] for l, s in dd.jordan_blocks],
        "exact_spectrum": dd.exact,
    }


def _verdict_section(v: Verdict) -> dict:
    return {"status": v.status, "witness": v.witness, "order_reached": v.order_reached}


def _worst(statuses: Sequence[str]) -> str:
    return min(statuses, key=lambda s: _STATUS_RANK[s]) if statuses else VIRTUALLY_ABELIAN


def analyze_candidate(problem: Problem, d: Tuple[Scalar, ...]) -> dict:
    section: dict = {"candidate": [scalar_to_json(x) for x in d]}
    try:
        dd = verify_darboux(problem.V, d)
        V2, dd = normalize_darboux(problem.V, dd)
    except (NotADarbouxPoint, ZeroMultiplier, NormalizationNotExact, PoleAtPoint) as e:
        section["error"] = {"type": type(e).__name__, "message": str(e)}
        section["status"] = INCONCLUSIVE
        return section
    section["darboux"] = _darboux_section(V2, dd)
    rc = classify_resonance(dd.frequencies, problem.assert_independence)
    section["resonance"] = {
        "tags": list(rc.tags),
        "z_linear_independent": rc.z_linear_independent,
        "witness": rc.witness,
    }
    statuses: List[str] = []
    try:
        frame = eigenframe(V2, dd, d_last=True)
    except NotDiagonalizable as e:
        section["error"] = {"type": type(e).__name__, "message": str(e)}
        section["status"] = INCONCLUSIVE
        return section
    checks = ve2_check_table(frame)
    v2 = verdict_from_table(checks)
    section["ve2"] = {**_verdict_section(v2), "checks": checks}
    statuses.append(v2.status)
    try:
        vi, cert = inductive_analysis(
            V2, dd, problem.p_max, assert_independence=problem.assert_independence
        )
        section["inductive"] = _verdict_section(vi)
        if cert is not None:
            section["inductive"]["certificate"] = {
                "p_max": cert.p_max,
                "xi_zero_orders": list(cert.xi_zero_orders),
                "euler_chain": {str(p): v for p, v in cert.euler_chain.items()},
                "independence": cert.resonance.z_linear_independent,
            }
        statuses.append(vi.status)
        tables = {}
        for p in range(2, problem.p_max + 1):
            entries = xi_table(frame, p)
            tables[str(p)] = [
                {"j": j + 1, "alpha": list(alpha), "xi": scalar_to_json(val)}
                for (j, alpha), val in sorted(entries.items())
            ]
        section["xi_tables"] = tables
    except NonResonanceNotEstablished as e:
        section["inductive"] = {
            "status": INCONCLUSIVE,
            "error": {"type": type(e).__name__, "message": str(e)},
        }
        statuses.append(INCONCLUSIVE)
    section["status"] = _worst(statuses)
    return section


def cmd_analyze(problem: Problem) -> Tuple[dict, int]:
    if problem.V.k != 2:
        raise ProblemError("analyze requires a k = 2 problem file")
    if not problem.candidates:
        raise ProblemError("analyze needs at least one darboux candidate")
    sections = parallel_map(lambda d: analyze_candidate(problem, d), problem.candidates)
    status = _worst([s["status"] for s in sections])
    report = {
        "command": "analyze",
        "problem": problem.canonical_echo(),
        "candidates": sections,
        "overall": {"status": status},
    }
    return report, {VIRTUALLY_ABELIAN: 0, NOT_VIRTUALLY_ABELIAN: 2, INCONCLUSIVE: 3}[status]


def _km2_numeric_residual(chain: ChainSolutionKm2, samples: Sequence[float]) -> float:
    from .numeric import second_derivative

    basis = phi_basis(chain.regime)
    lam = [scalar_to_complex(l) for l in chain.frame.lam]
    worst = 0.0
    for p, sols in chain.solutions.items():
        f_eff = chain.forcing[p]
        for i, b in enumerate(sols):

            def x(t: complex, b=b):
                return np.array([basis.phi(t) * b.eval(t, basis)], dtype=complex)

            for t in samples:
                xdd = second_derivative(x, t, radius=0.25, nodes=64)[0]
                phi = basis.phi(t)
                rhs = -lam[i] * x(t)[0] / phi**4 + f_eff[i].eval(t, basis) / phi**3
                worst = max(worst, abs(xdd - rhs))
    return worst


def _km2_samples(regime: Regime, count: int = 20) -> List[float]:
    if regime.is_zero_energy:
        lo, hi = 1.2, 4.2
    else:
        e = scalar_to_complex(regime.e).real
        lo, hi = 1.0 / e + 0.6, 1.0 / e + 3.6
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def km2_candidate(problem: Problem, d: Tuple[Scalar, ...]) -> dict:
    section: dict = {"candidate": [scalar_to_json(x) for x in d]}
    try:
        dd = verify_darboux(problem.V, d)
        V2, dd = normalize_darboux(problem.V, dd)
    except (NotADarbouxPoint, ZeroMultiplier, NormalizationNotExact, PoleAtPoint) as e:
        section["error"] = {"type": type(e).__name__, "message": str(e)}
        section["ok"] = False
        return section
    section["darboux"] = _darboux_section(V2, dd)
    regimes = []
    ok = True
    for e in problem.energy:
        regime = Regime.zero() if scalar_is_zero(e) else Regime.nonzero(e)
        chain = solve_ve_chain_km2(V2, dd, problem.p_max, regime)
        residuals_zero = chain.all_residuals_zero()
        numeric_max = _km2_numeric_residual(chain, _km2_samples(regime))
        regimes.append(
            {
                "regime": regime.label(),
                "omegas": [scalar_to_json(w) for w in chain.omegas],
                "couplings": list(chain.couplings),
                "homogeneous_basis": [
                    {
                        "omega": scalar_to_json(h.omega),
                        "cofactors": [belement_to_json(c) for c in h.cofactors],
                    }
                    for h in chain.homogeneous
                ],
                "solutions": {
                    str(p): [belement_to_json(b) for b in sols]
                    for p, sols in chain.solutions.items()
                },
                "forcing": {
                    str(p): [belement_to_json(b) for b in fs]
                    for p, fs in chain.forcing.items()
                },
                "symbolic_residuals_zero": residuals_zero,
                "numeric_residual_max": numeric_max,
                "containment_certified": residuals_zero,
            }
        )
        ok = ok and residuals_zero
    section["regimes"] = regimes
    section["ok"] = ok
    return section


def cmd_km2(problem: Problem) -> Tuple[dict, int]:
    if problem.V.k != -2:
        raise ProblemError("km2 requires a k = -2 problem file")
    if not problem.candidates:
        raise ProblemError("km2 needs at least one darboux candidate")
    sections = parallel_map(lambda d: km2_candidate(problem, d), problem.candidates)
    ok = all(s.get("ok") for s in sections)
    report = {
        "command": "km2",
        "problem": problem.canonical_echo(),
        "candidates": sections,
        "overall": {"status": "solved" if ok else "failed"},
    }
    return report, 0 if ok else 1


def cmd_trig(n: int, omega_raw: str, mode: str) -> Tuple[dict, int]:
    omega = scalar_from_json(omega_raw, mode, "omega")
    verdict = trig.classify_meromorphy(n, omega)
    red = trig.reduce(n, omega)
    res = trig.residue_at_zero(n, omega)
    entry = {
        "n": n,
        "omega": scalar_to_json(omega),
        "meromorphic": verdict.meromorphic,
        "reason": verdict.reason,
        "witness": scalar_to_json(verdict.witness)
        if isinstance(verdict.witness, (QC, complex, int, float))
        else verdict.witness,
        "root_set": list(verdict.root_set),
        "paper_set_extra": list(verdict.paper_set_extra),
        "reduction": {
            "tail_order": red.tail_order,
            "p": scalar_to_json(red.p),
            "c_product": scalar_to_json(red.c_product),
        },
        "residue_at_zero": scalar_to_json(res),
    }
    if verdict.reason == "tail-cot":
        entry["note"] = "closed form -cot t"
    report = {"command": "trig", "result": entry}
    return report, 0 if verdict.meromorphic else 2


def cmd_monodromy(
    problem: Problem,
    singularity_index: int,
    radius: float,
    steps: int,
    alpha: int,
    gamma: int,
) -> Tuple[dict, int]:
    if problem.V.k != 2:
        raise ProblemError("monodromy requires a k = 2 problem file")
    if not problem.candidates:
        raise ProblemError("monodromy needs a darboux candidate")
    d = problem.candidates[0]
    dd = verify_darboux(problem.V, d)
    V2, dd = normalize_darboux(problem.V, dd)
    frame = eigenframe(V2, dd, d_last=True)
    chain = build_ve_chain(frame, 2)
    from .vebuild import extract_ve2_alpha

    sub = extract_ve2_alpha(chain, alpha - 1, gamma - 1)
    theta = sub.forcing[0].coefficient if sub.forcing else QC(0)
    lam_a = scalar_to_complex(sub.eigenvalues[0])
    lam_g = scalar_to_complex(sub.eigenvalues[1])
    import math as _math

    center = singularity_index * _math.pi
    field = ve2_alpha_field(scalar_to_complex(theta), lam_a, lam_g)
    others = [m * _math.pi for m in range(singularity_index - 2, singularity_index + 3)]
    fm = monodromy_matrix(field, center, radius=radius, steps=steps,
                          other_singularities=others, check_tolerance=1e-6)
    w_total = scalar_to_complex(theta)
    jump_num = contour_integral(
        lambda t: w_total / np.sin(t), Contour.circle(center, radius), steps
    )
    jump_sym = trig.monodromy_jump(lambda t: w_total, singularity_index)
    report = {
        "command": "monodromy",
        "subsystem": {"alpha": alpha, "gamma": gamma, "theta": scalar_to_json(theta)},
        "singularity": {"index": singularity_index, "t": center},
        "radius": radius,
        "steps": steps,
        "matrix": [[scalar_to_json(complex(x)) for x in row] for row in fm.matrix],
        "determinant": scalar_to_json(fm.determinant()),
        "richardson_estimate": fm.richardson,
        "scalar_jump": {
            "numeric": scalar_to_json(jump_num),
            "formula_2pi_i_f": scalar_to_json(jump_sym),
            "orientation_factor": (-1) ** singularity_index,
            "agreement": abs(jump_num - ((-1) ** singularity_index) * jump_sym),
        },
    }
    return report, 0


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    lines: List[str] = []
    cmd = report.get("command", "?")
    lines.append(f"vega {cmd} (v{__version__})")
    if cmd == "analyze":
        for s in report["candidates"]:
            lines.append(f"candidate {s['candidate']}: {s.get('status')}")
            if "darboux" in s:
                dbx = s["darboux"]
                lines.append(f"  gamma={dbx['gamma']} eigenvalues={dbx['eigenvalues']}")
                lines.append(
                    "  frequencies="
                    + ", ".join(f"{f['value']}({f['tag']})" for f in dbx["frequencies"])
                )
            if "ve2" in s:
                lines.append(f"  ve2: {s['ve2']['status']}")
                if s["ve2"]["witness"]:
                    lines.append(f"    witness: {s['ve2']['witness']}")
            if "inductive" in s:
                lines.append(f"  inductive: {s['inductive'].get('status')}")
        lines.append(f"overall: {report['overall']['status']}")
    elif cmd == "km2":
        for s in report["candidates"]:
            lines.append(f"candidate {s['candidate']}: ok={s.get('ok')}")
            for r in s.get("regimes", []):
                lines.append(
                    f"  {r['regime']}: symbolic residuals zero={r['symbolic_residuals_zero']}"
                    f" numeric max={r['numeric_residual_max']:.3e}"
                )
        lines.append(f"overall: {report['overall']['status']}")
    elif cmd == "trig":
        r = report["result"]
        lines.append(
            f"T_{r['n']}^(omega={r['omega']}): meromorphic={r['meromorphic']} ({r['reason']})"
        )
        lines.append(f"  root set: {r['root_set']}  paper-extra: {r['paper_set_extra']}")
        if "note" in r:
            lines.append(f"  note: {r['note']}")
    elif cmd == "monodromy":
        lines.append(f"subsystem: {report['subsystem']}")
        lines.append(f"determinant: {report['determinant']}")
        lines.append(f"scalar jump agreement: {report['scalar_jump']['agreement']:.3e}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--report", choices=("json", "text"), default="json")
    shared.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(
        prog="vega",
        description="Variational equations of homogeneous potentials along Darboux points",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem file (JSON)")
        p.add_argument("--order", "-p", type=int, default=None, help="maximal VE order")
        p.add_argument("--mode", choices=("exact", "float"), default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")

    pa = sub.add_parser("analyze", parents=[shared], help="k = 2 verdict pipeline")
    common(pa)
    pa.add_argument("--assert-independence", action="store_true")

    pk = sub.add_parser("km2", parents=[shared], help="k = -2 constructive solving")
    common(pk)
    pk.add_argument(
        "--energy",
        action="append",
        default=None,
        help="energy regime value (repeatable; default 0 and 1)",
    )

    pt = sub.add_parser("trig", parents=[shared], help="classify T_n^(omega)")
    pt.add_argument("n", type=int)
    pt.add_argument("omega", help="rational 'p/q' (exact) or float value")
    pt.add_argument("--mode", choices=("exact", "float"), default="exact")

    pm = sub.add_parser("monodromy", parents=[shared], help="loop transport of a VE_2 subsystem")
    common(pm)
    pm.add_argument("--singularity", type=int, default=0, help="index n of t = n*pi")
    pm.add_argument("--radius", type=float, default=1.0)
    pm.add_argument("--steps", type=int, default=4096)
    pm.add_argument("--alpha", type=int, default=1)
    pm.add_argument("--gamma", type=int, default=1)
    return ap


def _overrides(args) -> dict:
    out: dict = {}
    if getattr(args, "order", None) is not None:
        out["p_max"] = args.order
    if getattr(args, "mode", None) is not None:
        out["mode"] = args.mode
    if getattr(args, "tol", None) is not None:
        out["tolerance"] = args.tol
    if getattr(args, "assert_independence", False):
        out["assert_independence"] = True
    if getattr(args, "energy", None):
        out["energy"] = args.energy
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "trig":
            report, code = cmd_trig(args.n, args.omega, args.mode)
        else:
            problem = load_problem(args.problem, seed=args.seed, overrides=_overrides(args))
            if args.command == "analyze":
                report, code = cmd_analyze(problem)
            elif args.command == "km2":
                report, code = cmd_km2(problem)
            else:
                report, code = cmd_monodromy(
                    problem,
                    args.singularity,
                    args.radius,
                    args.steps,
                    args.alpha,
                    args.gamma,
                )
    except ProblemError as e:
        log.error("%s", e)
        sys.stdout.write(
            render_report(
                {"command": args.command, "error": {"type": "ProblemError", "message": str(e)}},
                "json",
            )
            if args.report == "json"
            else f"error: {e}\n"
        )
        return 1
    except (ExactSpectrumUnavailable, NotDiagonalizable, NonResonanceNotEstablished) as e:
        log.error("%s", e)
        sys.stdout.write(
            json.dumps(
                {"command": args.command, "error": {"type": type(e).__name__, "message": str(e)}},
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
        return 1
    sys.stdout.write(render_report(report, args.report))
    return code


if __name__ == "__main__":
    sys.exit(main())
