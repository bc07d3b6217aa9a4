"""Decode-and-forward second-hop secrecy beamforming.

With X = w w^H the secrecy-rate argument is
(N0 + tr(h h^H X)) / (N0 + tr(z z^H X)) >= t, i.e.

    tr(X (h h^H - t z z^H)) >= N0 (t - 1),

which is linear in X for fixed t; the best t is found by bisection.  The
robust variants replace the data of this constraint:

* worst case, ||H~||_F <= eps_H and ||Z~||_F <= eps_Z:
  h h^H -> H^ - eps_H I and z z^H -> Z^ + eps_Z I;
* statistical, Gaussian estimation errors and a non-outage probability
  eps > 1/2: the chance constraint becomes the second-order cone
  sqrt(2 (var_H + t^2 var_Z)) erfinv(2 eps - 1) ||X||_F
      <= tr((H^ - t Z^) X) - N0 (t - 1).

Vectors ``h`` and ``z`` follow the convention h = [h_1^*, ..., h_M^*]^T so
that the destination sees h^H w = sum_m h_m w_m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import conic
from .channel import ChannelState, PowerConstraint, make_rng
from .conic import BisectionSpec, ConicProgram, NormBound, TraceIneq
from .linalg import gen_eig_max, hermitian_eig
from .solution import BeamSolution, extract_rank_one, rank_ratio
from .special import erf_inv


@dataclass(frozen=True, eq=False)
class DfChannel:
    h: np.ndarray
    z: np.ndarray
    N0: float = 1.0

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=complex)).reshape(-1)
        z = np.atleast_1d(np.asarray(self.z, dtype=complex)).reshape(-1)
        if h.size == 0 or h.size != z.size:
            raise ValueError("h and z must have the same positive length")
        if not (np.isfinite(self.N0) and self.N0 > 0):
            raise ValueError("N0 must be positive")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "N0", float(self.N0))

    @property
    def M(self) -> int:
        return self.h.size

    @classmethod
    def from_state(cls, ch: ChannelState) -> "DfChannel":
        """Second hop of a ChannelState (fading coefficients are conjugated)."""
        return cls(h=np.conj(ch.h), z=np.conj(ch.z), N0=ch.N0)

    def H(self) -> np.ndarray:
        return np.outer(self.h, self.h.conj())

    def Z(self) -> np.ndarray:
        return np.outer(self.z, self.z.conj())


@dataclass(frozen=True)
class WorstCase:
    eps_h: float
    eps_z: float

    def __post_init__(self):
        if self.eps_h < 0 or self.eps_z < 0:
            raise ValueError("uncertainty radii must be nonnegative")


@dataclass(frozen=True)
class Statistical:
    var_h: float
    var_z: float
    eps: float

    def __post_init__(self):
        if self.var_h < 0 or self.var_z < 0:
            raise ValueError("error variances must be nonnegative")
        if not 0.5 < self.eps < 1.0:
            raise ValueError(f"non-outage probability must lie in (0.5, 1), got {self.eps}")

    def norm_scale(self, t: float) -> float:
        """Coefficient of ||X||_F in the deterministic form of the chance constraint."""
        return math.sqrt(2.0 * (self.var_h + t * t * self.var_z)) * erf_inv(2.0 * self.eps - 1.0)


@dataclass
class DfConfig:
    bisection_tol: float = 1e-6
    rank_tol: float = 1e-6
    randomization_samples: int = 1000
    seed: int = 0
    upper: Optional[float] = None  # bisection ceiling; default is an SNR bound

    def __post_init__(self):
        if self.bisection_tol <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.upper is not None and not self.upper > 1.0:
            raise ValueError(f"upper must exceed 1, got {self.upper!r}")


def df_secrecy_rate(w, ch: DfChannel) -> float:
    """log2((N0 + |h^H w|^2) / (N0 + |z^H w|^2))."""
    w = np.asarray(w, dtype=complex)
    num = ch.N0 + abs(np.vdot(ch.h, w)) ** 2
    den = ch.N0 + abs(np.vdot(ch.z, w)) ** 2
    return math.log2(num / den)


def _snr_ceiling(A: np.ndarray, constraint: PowerConstraint, N0: float) -> float:
    # tr(A X) <= lambda_max(A) tr(X) and tr(X) <= budget
    lam = hermitian_eig(A)[0][0]
    return 1.0 + max(lam, 0.0) * constraint.budget() / N0


def _program(m, constraint, ineqs=(), norm_bound=None):
    return ConicProgram(
        dim=m,
        trace_ineqs=list(ineqs),
        diag_upper=constraint.per_relay,
        trace_upper=constraint.total,
        norm_bound=norm_bound,
    )


def _bisect_t(build, upper, cfg: DfConfig):
    oracle = conic.feasibility_oracle(build)
    if upper - 1.0 <= cfg.bisection_tol:
        return 1.0, None
    return conic.bisect(BisectionSpec(1.0, upper, oracle, cfg.bisection_tol))


def _solution(X, t_star, m, constraint, cfg, scheme, achieved_t, diagnostics):
    """Package a DF result; ``achieved_t(w)`` is the ratio a weight vector attains."""
    rate_of = lambda v: math.log2(max(achieved_t(v), 1e-300))  # noqa: E731
    if X is None or t_star <= 1.0 or np.trace(X).real <= 1e-12:
        w = np.zeros(m, dtype=complex)
    else:
        w = extract_rank_one(X, constraint, rate_of, cfg.rank_tol, cfg.randomization_samples, cfg.seed)
    t = achieved_t(w)
    if t < 1.0:
        w, t = np.zeros(m, dtype=complex), 1.0
    ratio = rank_ratio(X) if X is not None and np.trace(X).real > 1e-12 else 0.0
    return BeamSolution(
        w=w, X=np.zeros((m, m), dtype=complex) if X is None else X,
        t1=float(t), t2=1.0, secrecy_rate=math.log2(t), rank_ratio=ratio,
        constraint=constraint, scheme=scheme,
        relaxation_rate=math.log2(max(t_star, 1.0)),
        rank_gap=ratio > cfg.rank_tol, diagnostics=diagnostics,
    )


def optimize_df_perfect(ch: DfChannel, constraint: PowerConstraint,
                        cfg: Optional[DfConfig] = None) -> BeamSolution:
    cfg = cfg or DfConfig()
    constraint.check_dim(ch.M)
    H, Z = ch.H(), ch.Z()
    upper = cfg.upper or _snr_ceiling(H, constraint, ch.N0)
    t_star, X = _bisect_t(
        lambda t: _program(ch.M, constraint, [TraceIneq(H - t * Z, ch.N0 * (t - 1.0))]), upper, cfg)
    achieved = lambda v: 2.0 ** df_secrecy_rate(v, ch)  # noqa: E731
    return _solution(X, t_star, ch.M, constraint, cfg, "df_perfect", achieved, {"t_star": t_star, "upper": upper})


def df_total_power_closed_form(ch: DfChannel, PT: float) -> float:
    """max over ||w||^2 = PT of the DF ratio, as a generalized eigenvalue."""
    shift = ch.N0 / PT * np.eye(ch.M)
    return gen_eig_max(ch.H() + shift, ch.Z() + shift).lambda_max


def optimize_df_worstcase(Hhat, Zhat, params: WorstCase, constraint: PowerConstraint,
                          N0: float = 1.0, cfg: Optional[DfConfig] = None) -> BeamSolution:
    """Max t with tr(X((H^ - eps_H I) - t(Z^ + eps_Z I))) >= N0 (t - 1) for every admissible error."""
    cfg = cfg or DfConfig()
    Hhat = conic.hermitian(Hhat)
    Zhat = conic.hermitian(Zhat)
    m = Hhat.shape[0]
    constraint.check_dim(m)
    A = Hhat - params.eps_h * np.eye(m)
    B = Zhat + params.eps_z * np.eye(m)
    upper = cfg.upper or _snr_ceiling(A, constraint, N0)
    t_star, X = _bisect_t(lambda t: _program(m, constraint, [TraceIneq(A - t * B, N0 * (t - 1.0))]), upper, cfg)

    def achieved(v):
        return (N0 + np.vdot(v, A @ v).real) / (N0 + np.vdot(v, B @ v).real)

    diagnostics = {"t_star": t_star, "upper": upper, "eps_h": params.eps_h, "eps_z": params.eps_z}
    return _solution(X, t_star, m, constraint, cfg, "df_worstcase", achieved, diagnostics)


def statistical_margin(X: np.ndarray, Hhat, Zhat, params: Statistical, t: float, N0: float = 1.0) -> float:
    """tr((H^ - t Z^) X) - N0 (t - 1) - scale(t) ||X||_F; >= 0 iff the chance constraint holds."""
    mu = conic._tr(Hhat - t * Zhat, X)
    return mu - N0 * (t - 1.0) - params.norm_scale(t) * np.linalg.norm(X)


def _largest_t(margin, upper: float, tol: float = 1e-10) -> float:
    # margin(t) is nonincreasing in t and margin(1) >= 0
    lo, hi = 1.0, upper
    if margin(hi) >= 0:
        return hi
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def optimize_df_statistical(Hhat, Zhat, params: Statistical, constraint: PowerConstraint,
                            N0: float = 1.0, cfg: Optional[DfConfig] = None) -> BeamSolution:
    """Max t such that the secrecy level t is supported with probability >= eps."""
    cfg = cfg or DfConfig()
    Hhat = conic.hermitian(Hhat)
    Zhat = conic.hermitian(Zhat)
    m = Hhat.shape[0]
    constraint.check_dim(m)
    upper = cfg.upper or _snr_ceiling(Hhat, constraint, N0)

    def build(t):
        nb = NormBound(C=Hhat - t * Zhat, offset=N0 * (t - 1.0), scale=params.norm_scale(t))
        return _program(m, constraint, norm_bound=nb)

    t_star, X = _bisect_t(build, upper, cfg)

    def achieved(v):
        Xv = np.outer(v, v.conj())
        if not np.any(v):
            return 1.0
        return _largest_t(lambda t: statistical_margin(Xv, Hhat, Zhat, params, t, N0), upper)

    diagnostics = {"t_star": t_star, "upper": upper, "var_h": params.var_h, "var_z": params.var_z,
                   "eps": params.eps}
    return _solution(X, t_star, m, constraint, cfg, "df_statistical", achieved, diagnostics)


def hermitian_error(rng: np.random.Generator, var: float, m: int, trials: int) -> np.ndarray:
    """Hermitian matrices (G + G^H)/2 whose entries all have variance ``var``.

    Off-diagonal entries are circular complex Gaussian, diagonal entries
    real Gaussian; G has i.i.d. CN(0, 2 var) entries.  Consecutive calls
    continue one stream, so splitting ``trials`` into chunks does not
    change the samples.
    """
    s = math.sqrt(var)  # CN(0, 2 var) has real/imag std sqrt(var)
    parts = rng.standard_normal((trials, m, m, 2))
    G = s * (parts[..., 0] + 1j * parts[..., 1])
    return 0.5 * (G + np.conj(np.swapaxes(G, 1, 2)))


def sample_y(X: np.ndarray, Hhat, Zhat, var_h: float, var_z: float, t: float,
             trials: int, seed: int = 0, chunk: int = 10_000) -> np.ndarray:
    """Samples of y = tr((H^ - t Z^ + H~ - t Z~) X) over random estimation errors.

    H~ and Z~ come from separate streams of ``seed``; the result does not
    depend on ``chunk``.
    """
    Hhat = conic.hermitian(Hhat)
    Zhat = conic.hermitian(Zhat)
    m = Hhat.shape[0]
    mu = conic._tr(Hhat - t * Zhat, X)
    rng_h = make_rng(seed, stream=1)
    rng_z = make_rng(seed, stream=2)
    out = np.empty(trials)
    XT = X.T
    for start in range(0, trials, chunk):
        n = min(chunk, trials - start)
        E = hermitian_error(rng_h, var_h, m, n) - t * hermitian_error(rng_z, var_z, m, n)
        out[start:start + n] = mu + np.einsum("kij,ij->k", E, XT).real
    return out


def verify_outage(w, hhat, zhat, params: Statistical, t: float, trials: int = 100_000,
                  seed: int = 0, N0: float = 1.0) -> float:
    """Monte Carlo estimate of Pr(tr(X(H^+H~ - t(Z^+Z~))) >= N0 (t - 1)) for X = w w^H."""
    w = np.asarray(w, dtype=complex)
    hhat = np.asarray(hhat, dtype=complex)
    zhat = np.asarray(zhat, dtype=complex)
    X = np.outer(w, w.conj())
    y = sample_y(X, np.outer(hhat, hhat.conj()), np.outer(zhat, zhat.conj()),
                 params.var_h, params.var_z, t, trials, seed)
    return float(np.mean(y >= N0 * (t - 1.0)))
