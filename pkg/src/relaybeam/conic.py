"""Programs over one Hermitian PSD matrix variable, plus scalar bisection.

The variable X (M x M, Hermitian) is parametrized by M**2 real numbers,
the real parts of the upper triangle and the imaginary parts of the
strict upper triangle.  The PSD condition is imposed on the real
embedding ``[[Re X, -Im X], [Im X, Re X]]`` which is PSD iff X is.
Interior-point iterations are delegated to ``cvxopt.solvers.conelp``;
feasibility questions are answered with a phase-I program that
minimizes a common slack on the relaxed constraints.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers

from .errors import EmptyInterval, NumericalFailure

FEASIBILITY_TOL = 1e-7
PSD_FLOOR = 1e-8
DEFAULT_BISECTION_TOL = 1e-6
MAX_ITERS = 200
KKT_SOLVER = "chol"
FALLBACK_KKT_SOLVER = "ldl"

SOLVER_OPTIONS = {
    "show_progress": False,
    "maxiters": MAX_ITERS,
    # tighter settings stall cvxopt near degenerate boundaries
    "abstol": 1e-9,
    "reltol": 1e-9,
    "feastol": 1e-9,
}


class Objective(str, Enum):
    FEASIBILITY = "feasibility"
    MIN_TRACE = "min_trace"
    MAX_LINEAR = "max_linear"


class Status(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class TraceIneq:
    """tr(A X) >= b."""

    A: np.ndarray
    b: float


@dataclass
class NormBound:
    """scale * ||X||_F <= tr(C X) - offset."""

    C: np.ndarray
    offset: float
    scale: float


@dataclass
class ConicProgram:
    dim: int
    objective: Objective = Objective.FEASIBILITY
    C: Optional[np.ndarray] = None  # for MAX_LINEAR
    trace_ineqs: list = field(default_factory=list)
    diag_upper: Optional[np.ndarray] = None
    trace_upper: Optional[float] = None
    norm_bound: Optional[NormBound] = None

    def __post_init__(self):
        self.objective = Objective(self.objective)
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.objective is Objective.MAX_LINEAR:
            if self.C is None:
                raise ValueError("MAX_LINEAR needs a cost matrix C")
            if self.diag_upper is None and self.trace_upper is None:
                raise ValueError("MAX_LINEAR needs diag_upper or trace_upper for boundedness")
        if self.diag_upper is not None:
            self.diag_upper = np.asarray(self.diag_upper, dtype=float).reshape(-1)
            if self.diag_upper.shape != (self.dim,):
                raise ValueError("diag_upper has the wrong length")

    def violations(self, X: np.ndarray) -> dict:
        """Constraint violations of X, each scaled by 1 + |rhs|."""
        out = {}
        for k, c in enumerate(self.trace_ineqs):
            out[f"trace_ineq[{k}]"] = max(0.0, c.b - _tr(c.A, X)) / (1.0 + abs(c.b))
        if self.diag_upper is not None:
            d = X.diagonal().real - self.diag_upper
            out["diag_upper"] = float(np.max(np.maximum(d, 0.0) / (1.0 + np.abs(self.diag_upper))))
        if self.trace_upper is not None:
            out["trace_upper"] = max(0.0, np.trace(X).real - self.trace_upper) / (1.0 + abs(self.trace_upper))
        nb = self.norm_bound
        if nb is not None:
            lhs = nb.scale * np.linalg.norm(X)
            rhs = _tr(nb.C, X) - nb.offset
            out["norm_bound"] = max(0.0, lhs - rhs) / (1.0 + abs(nb.offset))
        return out

    def to_json(self) -> str:
        """Debug dump, for cross-checking against other solvers."""

        def herm(A):
            A = np.asarray(A, dtype=complex)
            return {"re": A.real.tolist(), "im": A.imag.tolist()}

        doc = {
            "dim": self.dim,
            "objective": self.objective.value,
            "C": None if self.C is None else herm(self.C),
            "trace_ineqs": [{"A": herm(c.A), "b": c.b} for c in self.trace_ineqs],
            "diag_upper": None if self.diag_upper is None else self.diag_upper.tolist(),
            "trace_upper": self.trace_upper,
            "norm_bound": None if self.norm_bound is None else {
                "C": herm(self.norm_bound.C),
                "offset": self.norm_bound.offset,
                "scale": self.norm_bound.scale,
            },
        }
        return json.dumps(doc)


@dataclass
class ConicOutcome:
    status: Status
    X: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    iterations: int = 0
    primal_residual: float = math.nan
    dual_residual: float = math.nan
    gap: float = math.nan
    slack: Optional[float] = None  # phase-I optimum, FEASIBILITY only

    @property
    def ok(self) -> bool:
        return self.status in (Status.FEASIBLE, Status.OPTIMAL)


def _tr(A: np.ndarray, X: np.ndarray) -> float:
    return float(np.sum(np.asarray(A).T * X).real)


def embed_complex(H) -> np.ndarray:
    """Real symmetric 2M x 2M embedding [[Re H, -Im H], [Im H, Re H]].

    The spectrum of the embedding is the spectrum of H with every
    multiplicity doubled, and tr(embed(A) embed(X)) = 2 tr(A X).
    """
    H = np.asarray(H, dtype=complex)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


@lru_cache(maxsize=None)
def _basis(m: int):
    """Hermitian basis matrices E_k with X = sum_k x_k E_k, and the diagonal indices."""
    mats = []
    diag_idx = []
    for i in range(m):
        E = np.zeros((m, m), dtype=complex)
        E[i, i] = 1.0
        diag_idx.append(len(mats))
        mats.append(E)
    for i in range(m):
        for j in range(i + 1, m):
            E = np.zeros((m, m), dtype=complex)
            E[i, j] = E[j, i] = 1.0
            mats.append(E)
    for i in range(m):
        for j in range(i + 1, m):
            E = np.zeros((m, m), dtype=complex)
            E[i, j] = 1j
            E[j, i] = -1j
            mats.append(E)
    basis = np.array(mats)
    # G columns for the embedded PSD cone, column-major as cvxopt expects
    psd_cols = np.array([embed_complex(E).reshape(-1, order="F") for E in basis]).T
    # weights so that ||X||_F = ||weights * x||
    weights = np.where(np.arange(m * m) < m, 1.0, math.sqrt(2.0))
    return basis, np.array(diag_idx), psd_cols, weights


def _coeffs(A: np.ndarray, m: int) -> np.ndarray:
    basis = _basis(m)[0]
    return np.einsum("ij,kji->k", np.asarray(A, dtype=complex), basis).real


def _unpack(x: np.ndarray, m: int) -> np.ndarray:
    basis = _basis(m)[0]
    return np.tensordot(x[: m * m], basis, axes=1)


def project_psd(X: np.ndarray) -> np.ndarray:
    X = 0.5 * (X + X.conj().T)
    w, V = np.linalg.eigh(X)
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.conj().T


def solve(prog: ConicProgram, options: Optional[dict] = None) -> ConicOutcome:
    """Solve a ConicProgram.

    FEASIBILITY runs phase-I: minimize s with every trace/norm constraint
    relaxed by s * (1 + |rhs|); the program is declared infeasible iff the
    optimal slack exceeds FEASIBILITY_TOL.  A returned X whose violations
    are all within FEASIBILITY_TOL is accepted as feasible even when the
    solver stopped short of its accuracy targets.

    The Cholesky KKT factorization is fast but loses accuracy at
    degenerate optima (e.g. several active diagonal bounds with a
    low-rank X); such runs are repeated with the LDL factorization.
    """
    opts = dict(SOLVER_OPTIONS)
    if options:
        opts.update(options)
    kkt = opts.pop("kktsolver", KKT_SOLVER)
    out = _solve_once(prog, opts, kkt)
    if out.status is Status.NUMERICAL_FAILURE and kkt == KKT_SOLVER:
        out = _solve_once(prog, opts, FALLBACK_KKT_SOLVER)
    return out


def _solve_once(prog: ConicProgram, opts: dict, kkt: str) -> ConicOutcome:
    m = prog.dim
    nx = m * m
    phase1 = prog.objective is Objective.FEASIBILITY
    nv = nx + 1 if phase1 else nx
    _, diag_idx, psd_cols, weights = _basis(m)

    G_rows, h_vals = [], []

    def row(coef_x, coef_s=0.0):
        r = np.zeros(nv)
        r[:nx] = coef_x
        if phase1:
            r[nx] = coef_s
        return r

    # linear cone: G z <= h
    for c in prog.trace_ineqs:
        a = _coeffs(c.A, m)
        # phase-I slack is measured relative to 1 + |b|; otherwise equilibrate rows
        n = 1.0 + abs(c.b) if phase1 else max(1.0, abs(c.b), float(np.max(np.abs(a))))
        G_rows.append(row(-a / n, -1.0))
        h_vals.append(-c.b / n)
    nb = prog.norm_bound
    soc = nb is not None and nb.scale > 0.0
    if nb is not None and not soc:
        n = 1.0 + abs(nb.offset)
        G_rows.append(row(-_coeffs(nb.C, m) / n, -1.0))
        h_vals.append(-nb.offset / n)
    if prog.diag_upper is not None:
        for k in range(m):
            r = np.zeros(nx)
            r[diag_idx[k]] = 1.0
            G_rows.append(row(r))
            h_vals.append(prog.diag_upper[k])
    if prog.trace_upper is not None:
        r = np.zeros(nx)
        r[diag_idx] = 1.0
        G_rows.append(row(r))
        h_vals.append(prog.trace_upper)
    if phase1:
        r = np.zeros(nv)
        r[nx] = -1.0
        G_rows.append(r)
        h_vals.append(1.0)
    n_lin = len(G_rows)

    q_dims = []
    if soc:
        # cone (u, v): u = (tr(C X) - offset [+ slack]) / nu, v = scale * ||X||_F / nu
        c = _coeffs(nb.C, m)
        n = 1.0 + abs(nb.offset)
        nu = n if phase1 else max(1.0, abs(nb.offset), float(np.max(np.abs(c))))
        G_rows.append(row(-c / nu, -n / nu))
        h_vals.append(-nb.offset / nu)
        body = np.zeros((nx, nv))
        body[:, :nx] = -np.diag(weights) * (nb.scale / nu)
        G_rows.extend(body)
        h_vals.extend([0.0] * nx)
        q_dims.append(nx + 1)

    G_psd = np.zeros((4 * m * m, nv))
    G_psd[:, :nx] = -psd_cols
    G = np.vstack([np.array(G_rows).reshape(-1, nv), G_psd])
    h = np.concatenate([np.array(h_vals, dtype=float), np.zeros(4 * m * m)])

    if phase1:
        cost = np.zeros(nv)
        cost[nx] = 1.0
    elif prog.objective is Objective.MIN_TRACE:
        cost = np.zeros(nv)
        cost[diag_idx] = 1.0
    else:
        cost = -_coeffs(prog.C, m)

    # scale the cost so solver tolerances are relative to the data
    cscale = max(1.0, float(np.max(np.abs(cost))))
    dims = {"l": n_lin, "q": q_dims, "s": [2 * m]}
    try:
        sol = solvers.conelp(cvx_matrix(cost / cscale), cvx_matrix(G), cvx_matrix(h), dims,
                             kktsolver=kkt, options=opts)
    except (ArithmeticError, ValueError):
        return ConicOutcome(Status.NUMERICAL_FAILURE, primal_residual=math.inf, dual_residual=math.inf, gap=math.inf)

    status = sol["status"]
    iters = int(sol.get("iterations", 0))
    pres = _num(sol.get("primal infeasibility"))
    dres = _num(sol.get("dual infeasibility"))
    gap = _num(sol.get("relative gap"))
    if not math.isfinite(gap):
        # undefined when the optimal value is 0; the absolute gap is then the relative one
        gap = _num(sol.get("gap")) * cscale
    if status == "primal infeasible":
        return ConicOutcome(Status.INFEASIBLE, iterations=iters, primal_residual=pres, dual_residual=dres, gap=gap)
    if sol["x"] is None:
        return ConicOutcome(Status.NUMERICAL_FAILURE, iterations=iters, primal_residual=pres, dual_residual=dres, gap=gap)
    if status == "dual infeasible":
        # unbounded objective; cannot occur for bounded programs
        return ConicOutcome(Status.NUMERICAL_FAILURE, iterations=iters, primal_residual=pres, dual_residual=dres, gap=gap)

    z = np.array(sol["x"]).reshape(-1)
    X = project_psd(_unpack(z, m))
    accurate = status == "optimal" or (pres < 1e-6 and dres < 1e-6 and gap < 1e-5)

    if phase1:
        s = float(z[nx])
        # a witness that meets every constraint settles feasibility whatever
        # the solver's exit status; only an infeasible verdict relies on s
        if max(prog.violations(X).values(), default=0.0) <= FEASIBILITY_TOL:
            return ConicOutcome(Status.FEASIBLE, X=X, iterations=iters, primal_residual=pres,
                                dual_residual=dres, gap=gap, slack=s)
        if not accurate and abs(s) < 1e-4:
            return ConicOutcome(Status.NUMERICAL_FAILURE, X=X, iterations=iters, primal_residual=pres,
                                dual_residual=dres, gap=gap, slack=s)
        if s > FEASIBILITY_TOL:
            return ConicOutcome(Status.INFEASIBLE, iterations=iters, primal_residual=pres,
                                dual_residual=dres, gap=gap, slack=s)
        return ConicOutcome(Status.FEASIBLE, X=X, iterations=iters, primal_residual=pres,
                            dual_residual=dres, gap=gap, slack=s)

    if not accurate:
        return ConicOutcome(Status.NUMERICAL_FAILURE, X=X, iterations=iters, primal_residual=pres,
                            dual_residual=dres, gap=gap)
    if prog.objective is Objective.MIN_TRACE:
        value = float(np.trace(X).real)
    else:
        value = _tr(prog.C, X)
    return ConicOutcome(Status.OPTIMAL, X=X, objective_value=value, iterations=iters,
                        primal_residual=pres, dual_residual=dres, gap=gap)


def _num(v) -> float:
    return math.nan if v is None else float(v)


@dataclass
class BisectionSpec:
    lower: float
    upper: float
    oracle: Callable[[float], tuple]  # t -> (feasible, witness)
    tol: float = DEFAULT_BISECTION_TOL


def bisect(spec: BisectionSpec):
    """Largest feasible level of a monotone feasibility oracle.

    Halves [lower, upper] until its width is below ``tol`` and returns the
    lower end together with the last feasible witness.
    """
    if spec.upper < spec.lower:
        raise ValueError("upper < lower")
    if spec.tol <= 0:
        raise ValueError("tol must be positive")
    ok, witness = spec.oracle(spec.lower)
    if not ok:
        raise EmptyInterval(f"oracle infeasible at lower end {spec.lower}")
    lo, hi = spec.lower, spec.upper
    while hi - lo > spec.tol:
        mid = 0.5 * (lo + hi)
        ok, X = spec.oracle(mid)
        if ok:
            lo, witness = mid, X
        else:
            hi = mid
    return lo, witness


def feasibility_oracle(build: Callable[[float], ConicProgram], strict: bool = False):
    """Wrap a t -> ConicProgram builder as a bisection oracle.

    A NumericalFailure outcome counts as infeasible unless ``strict``.
    """

    def oracle(t: float):
        out = solve(build(t))
        if out.status is Status.NUMERICAL_FAILURE and strict:
            raise NumericalFailure(f"solver failed at t={t}")
        return out.status is Status.FEASIBLE, out.X

    return oracle


def psd_min_eig(X: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (X + X.conj().T))[0])


def hermitian(A: Sequence) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + A.conj().T)
