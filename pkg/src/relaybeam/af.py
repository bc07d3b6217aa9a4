"""Amplify-and-forward relay beamforming for secrecy.

The AF secrecy-rate argument (1 + G_d) / (1 + G_e) factors as t1 * t2 with

    t1 = (N0 + tr((Dh + Ps hg hg^H) X)) / (N0 + tr((Dz + Ps hz hz^H) X))
    t2 = (N0 + tr(Dz X)) / (N0 + tr(Dh X)),        X = w w^H.

Under a total power constraint each factor alone is a Rayleigh quotient
(closed form via a generalized eigenproblem); under per-relay constraints
each is found by bisection over semidefinite feasibility programs.  The
joint maximization walks t1 down a grid from its upper bound and bisects
t2 at every grid point where the product can still improve.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import conic
from .channel import AfDerived, ChannelState, PowerConstraint, derive_af
from .conic import BisectionSpec, ConicProgram, Objective, Status, TraceIneq
from .linalg import gen_eig_max
from .solution import BeamSolution, extract_rank_one, rank_ratio

log = logging.getLogger(__name__)


@dataclass
class AfAlgorithmConfig:
    N: int = 1000
    bisection_tol: float = 1e-6
    rank_tol: float = 1e-6
    randomization_samples: int = 1000
    # True ends the t1 walk at the first grid point that cannot beat the
    # incumbent product; False skips such points and lets the pruning bound end the walk
    stop_on_infeasible: bool = False
    # "direct": one linear-fractional SDP per grid point gives max t2;
    # "bisection": feasibility test at best/t1, then bisection on t2
    t2_search: str = "direct"
    # "bounded": branch-and-bound over the same t1 grid (f(t1) = max t2 is
    # nonincreasing, so t1_b * f(t1_a) bounds every grid point between a and b);
    # "sequential": visit grid points from the top down
    search: str = "bounded"
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.bisection_tol <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.t2_search not in ("direct", "bisection"):
            raise ValueError(f"unknown t2_search {self.t2_search!r}")
        if self.search not in ("bounded", "sequential"):
            raise ValueError(f"unknown search {self.search!r}")


def af_snr(w, d: AfDerived, ch: ChannelState):
    """(Gamma_d, Gamma_e) for relay weights w."""
    w = np.asarray(w, dtype=complex)
    sig_d = ch.Ps * abs(np.vdot(d.hg, w)) ** 2
    sig_e = ch.Ps * abs(np.vdot(d.hz, w)) ** 2
    noise_d = np.vdot(w, d.Dh @ w).real + ch.N0
    noise_e = np.vdot(w, d.Dz @ w).real + ch.N0
    return float(sig_d / noise_d), float(sig_e / noise_e)


def af_secrecy_rate(w, d: AfDerived, ch: ChannelState) -> float:
    """log2(1 + Gamma_d) - log2(1 + Gamma_e) in bits/symbol; may be negative."""
    gd, ge = af_snr(w, d, ch)
    return math.log2(1.0 + gd) - math.log2(1.0 + ge)


def signal_matrices(d: AfDerived, ch: ChannelState):
    """(Dh + Ps hg hg^H, Dz + Ps hz hz^H)."""
    A = d.Dh + ch.Ps * np.outer(d.hg, d.hg.conj())
    B = d.Dz + ch.Ps * np.outer(d.hz, d.hz.conj())
    return A, B


def t_values(X: np.ndarray, d: AfDerived, ch: ChannelState):
    """(t1, t2) evaluated at a (relaxed) X."""
    A, B = signal_matrices(d, ch)
    tr = conic._tr
    t1 = (ch.N0 + tr(A, X)) / (ch.N0 + tr(B, X))
    t2 = (ch.N0 + tr(d.Dz, X)) / (ch.N0 + tr(d.Dh, X))
    return float(t1), float(t2)


def t1_max_total(d: AfDerived, ch: ChannelState, PT: float):
    """Largest t1 over ||w||^2 = PT and the weights attaining it."""
    A, B = signal_matrices(d, ch)
    shift = ch.N0 / PT * np.eye(ch.M)
    res = gen_eig_max(A + shift, B + shift)
    return res.lambda_max, math.sqrt(PT) * res.eigvec


def t2_max_total(d: AfDerived, ch: ChannelState, PT: float):
    """Largest t2 over ||w||^2 = PT; the pencil is diagonal, so w is a scaled unit vector."""
    shift = ch.N0 / PT * np.eye(ch.M)
    res = gen_eig_max(d.Dz + shift, d.Dh + shift)
    return res.lambda_max, math.sqrt(PT) * res.eigvec


def _t1_ineq(d, ch, t1):
    A, B = signal_matrices(d, ch)
    return TraceIneq(A - t1 * B, ch.N0 * (t1 - 1.0))


def _t2_ineq(d, ch, t2):
    return TraceIneq(d.Dz - t2 * d.Dh, ch.N0 * (t2 - 1.0))


def _program(ch, constraint: PowerConstraint, ineqs, objective=Objective.FEASIBILITY):
    return ConicProgram(
        dim=ch.M,
        objective=objective,
        trace_ineqs=list(ineqs),
        diag_upper=constraint.per_relay,
        trace_upper=constraint.total,
    )


def t_max_individual(d: AfDerived, ch: ChannelState, p, which: str = "t1",
                     tol: float = conic.DEFAULT_BISECTION_TOL, constraint: Optional[PowerConstraint] = None):
    """Largest t1 (or t2) under per-relay bounds p, by bisection.

    Returns ``(t_star, X)`` where X is the last feasible witness.  The
    search interval is [1, closed-form bound with PT = sum(p)]; t = 1 is
    always feasible with X = 0.  ``constraint`` overrides ``p`` (used for
    the combined total plus per-relay case).
    """
    if constraint is None:
        constraint = PowerConstraint.individual(p)
    constraint.check_dim(ch.M)
    if which not in ("t1", "t2"):
        raise ValueError("which must be 't1' or 't2'")
    closed = t1_max_total if which == "t1" else t2_max_total
    make_ineq = _t1_ineq if which == "t1" else _t2_ineq
    upper = max(1.0, closed(d, ch, constraint.budget())[0])
    oracle = conic.feasibility_oracle(lambda t: _program(ch, constraint, [make_ineq(d, ch, t)]))
    if upper - 1.0 <= tol:
        return 1.0, np.zeros((ch.M, ch.M), dtype=complex)
    return conic.bisect(BisectionSpec(1.0, upper, oracle, tol))


def _upper_bounds(d, ch, constraint: PowerConstraint, tol: float):
    """(t1 upper, X attaining it, t2 upper)."""
    if constraint.per_relay is None:
        t1u, w = t1_max_total(d, ch, constraint.total)
        t2u, _ = t2_max_total(d, ch, constraint.total)
        X = np.outer(w, w.conj())
        if t1u < 1.0:
            # the zero vector beats every full-power direction
            t1u, X = 1.0, np.zeros_like(X)
        return t1u, X, max(t2u, 1.0)
    t1u, X = t_max_individual(d, ch, None, "t1", tol, constraint)
    t2u, _ = t_max_individual(d, ch, None, "t2", tol, constraint)
    return t1u, X, t2u


def _extract(X, d, ch, constraint, cfg, relaxation_rate):
    evaluator = lambda v: af_secrecy_rate(v, d, ch)  # noqa: E731
    if np.trace(X).real <= 1e-12 or relaxation_rate <= 0.0:
        return np.zeros(ch.M, dtype=complex)
    return extract_rank_one(X, constraint, evaluator, cfg.rank_tol, cfg.randomization_samples, cfg.seed)


def _finish(X, d, ch, constraint, cfg, scheme, relaxation_rate, diagnostics, alternatives=()):
    """Extract w from X (or from whichever of ``alternatives`` gives a better true rate)."""
    best_X, w = X, _extract(X, d, ch, constraint, cfg, relaxation_rate)
    rate = af_secrecy_rate(w, d, ch)
    for alt in alternatives:
        if alt is None or alt is X:
            continue
        v = _extract(alt, d, ch, constraint, cfg, relaxation_rate)
        r = af_secrecy_rate(v, d, ch)
        if r > rate:
            best_X, w, rate = alt, v, r
    X = best_X
    if rate < 0.0:
        w = np.zeros(ch.M, dtype=complex)
        rate = 0.0
    Xw = np.outer(w, w.conj())
    t1, t2 = t_values(Xw, d, ch)
    ratio = rank_ratio(X) if np.trace(X).real > 1e-12 else 0.0
    return BeamSolution(
        w=w, X=X, t1=t1, t2=t2, secrecy_rate=rate, rank_ratio=ratio,
        constraint=constraint, scheme=scheme,
        relaxation_rate=max(relaxation_rate, 0.0),
        rank_gap=ratio > cfg.rank_tol,
        diagnostics=diagnostics,
    )


def af_achievable(d: AfDerived, ch: ChannelState, constraint: PowerConstraint,
                  cfg: Optional[AfAlgorithmConfig] = None) -> BeamSolution:
    """Weights maximizing t1 alone, with t2 taken at that point."""
    cfg = cfg or AfAlgorithmConfig()
    constraint.check_dim(ch.M)
    t1u, X, _ = _upper_bounds(d, ch, constraint, cfg.bisection_tol)
    t2l = t_values(X, d, ch)[1]
    rate = math.log2(t1u * t2l)
    return _finish(X, d, ch, constraint, cfg, "af_achievable", rate, {"t1_upper": t1u, "t2_low": t2l})


def _blockdiag(A: np.ndarray, corner: float) -> np.ndarray:
    m = A.shape[0]
    out = np.zeros((m + 1, m + 1), dtype=complex)
    out[:m, :m] = A
    out[m, m] = corner
    return out


def max_t2_given_t1(d: AfDerived, ch: ChannelState, constraint: PowerConstraint, t1: float):
    """max t2 over the relaxed set where t1(X) >= t1, as one conic program.

    With Y = s X and s = 1 / (N0 + tr(Dh X)) the ratio t2 becomes linear;
    (Y, s) live in the PSD variable [[Y, *], [*, s]].  Returns
    ``(outcome, t2_max, X)``, the last two None unless the outcome is optimal.
    """
    m = ch.M
    A, B = signal_matrices(d, ch)
    zero = np.zeros((m, m), dtype=complex)
    ineqs = [
        TraceIneq(_blockdiag(A - t1 * B, -ch.N0 * (t1 - 1.0)), 0.0),
        TraceIneq(-_blockdiag(d.Dh, ch.N0), -1.0),
    ]
    if constraint.total is not None:
        ineqs.append(TraceIneq(_blockdiag(-np.eye(m, dtype=complex), constraint.total), 0.0))
    if constraint.per_relay is not None:
        for k, pk in enumerate(constraint.per_relay):
            E = zero.copy()
            E[k, k] = -1.0
            ineqs.append(TraceIneq(_blockdiag(E, pk), 0.0))
    prog = ConicProgram(
        dim=m + 1,
        objective=Objective.MAX_LINEAR,
        C=_blockdiag(d.Dz, ch.N0),
        trace_ineqs=ineqs,
        trace_upper=(constraint.budget() + 1.0) / ch.N0,
    )
    out = conic.solve(prog)
    if out.status is not Status.OPTIMAL:
        return out, None, None
    Z = out.X
    s = Z[m, m].real
    # at the optimum s = 1 / (N0 + tr(Dh X)) >= 1 / (N0 + max(Dh) * budget);
    # anything smaller is solver debris
    if s * (ch.N0 + np.max(d.Dh.diagonal().real) * constraint.budget()) < 0.5:
        return out, None, None
    X = Z[:m, :m] / s
    return out, float(out.objective_value), X


def _bounded_grid_search(d, ch, constraint, N, dt, t2u, incumbent):
    """Best grid point t1 = i * dt for t1 * f(t1), f(t1) = max t2 given t1.

    Returns the same grid maximizer as visiting every point, using that f
    is nonincreasing: an index range (a, b] is dropped once
    t1_b * f(t1_a) cannot beat the incumbent.
    """
    t1o, t2o, X_best = incumbent
    best = t1o * t2o
    evals = 0

    def f(i):
        nonlocal t1o, t2o, X_best, best, evals
        evals += 1
        _, t2m, X = max_t2_given_t1(d, ch, constraint, i * dt)
        if t2m is not None and i * dt * t2m > best:
            t1o, t2o, X_best, best = i * dt, t2m, X, i * dt * t2m
        return t2m

    # the grid runs down to dt: t1 < 1 can pay off when t2 > 1 / t1
    lo = 1
    f_lo = f(lo)
    # (a, b, f_bound): every grid index in (a, b] has f <= f_bound
    stack = [(lo, N, t2u if f_lo is None else f_lo)]
    while stack:
        a, b, f_bound = stack.pop()
        if b <= a:
            continue
        # skip indices whose bound with t2u is already beaten
        a = max(a, math.ceil(best / (t2u * dt)) - 1)
        if b <= a or b * dt * f_bound <= best * (1.0 + 1e-12):
            continue
        c = (a + b + 1) // 2
        fc = f(c)
        stack.append((c, b, f_bound if fc is None else min(fc, f_bound)))
        stack.append((a, c - 1, f_bound))
    return t1o, t2o, X_best, evals


def optimize_af(d: AfDerived, ch: ChannelState, constraint: PowerConstraint,
                cfg: Optional[AfAlgorithmConfig] = None) -> BeamSolution:
    """Joint maximization of t1 * t2 over the relaxed feasible set.

    Starting from the achievable pair, t1 walks down the grid
    t1_upper * i / N.  The walk ends once t1 * t2_upper falls below the
    best product; at every other grid point the largest t2 compatible
    with t1 is found and kept if it improves the product.  The final X
    minimizes tr(X) at the best (t1, t2).
    """
    cfg = cfg or AfAlgorithmConfig()
    constraint.check_dim(ch.M)
    tol = cfg.bisection_tol
    t1u, X_best, t2u = _upper_bounds(d, ch, constraint, tol)
    X_achievable = X_best
    t1o = t1u
    t2o = t_values(X_best, d, ch)[1]
    achievable_product = t1o * t2o

    def joint(t1, t2, objective=Objective.FEASIBILITY):
        return _program(ch, constraint, [_t2_ineq(d, ch, t2), _t1_ineq(d, ch, t1)], objective)

    dt = t1u / cfg.N
    if cfg.search == "bounded":
        t1o, t2o, X_best, steps = _bounded_grid_search(d, ch, constraint, cfg.N, dt, t2u, (t1o, t2o, X_best))
    else:
        steps = 0
        for i in range(cfg.N, 0, -1):
            t1 = i * dt
            if t1 * t2u < t1o * t2o:
                break
            t2 = t1o * t2o / t1
            steps += 1
            if cfg.t2_search == "direct":
                _, t2m, X = max_t2_given_t1(d, ch, constraint, t1)
                feasible = t2m is not None and t2m >= t2
            else:
                out = conic.solve(joint(t1, t2))
                feasible = out.status is Status.FEASIBLE
                if feasible:
                    oracle = conic.feasibility_oracle(lambda s, t1=t1: joint(t1, s))
                    if t2u - t2 > tol:
                        t2m, X = conic.bisect(BisectionSpec(t2, t2u, oracle, tol))
                    else:
                        t2m, X = t2, out.X
            if not feasible:
                if cfg.stop_on_infeasible:
                    break
                continue
            t1o, t2o, X_best = t1, t2m, X

    # the optimum sits on the boundary; back off by the bisection resolution
    # so the min-trace program keeps an interior
    final = conic.solve(joint(t1o, max(t2o - tol, 0.0), Objective.MIN_TRACE)) if t1o * t2o > 1.0 else None
    if final is not None and final.status is Status.OPTIMAL:
        X_opt = final.X
    else:
        log.debug("min-trace recovery unavailable; keeping the search witness")
        X_opt = X_best
    diagnostics = {
        "t1_upper": t1u, "t2_upper": t2u, "t1_opt": t1o, "t2_opt": t2o,
        "achievable_rate": math.log2(achievable_product) if achievable_product > 0 else 0.0,
        "grid_steps": steps,
        "min_trace_status": None if final is None else final.status.value,
    }
    # the min-trace X sits a tolerance inside the optimum; the search witness
    # and the achievable X are kept as fallbacks so the result never drops
    # below the achievable rate
    return _finish(X_opt, d, ch, constraint, cfg, "af_optimal", math.log2(t1o * t2o), diagnostics,
                   alternatives=(X_best, X_achievable))
