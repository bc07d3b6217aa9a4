"""Beamforming solutions and rank-one extraction from relaxed matrices."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .channel import PowerConstraint, make_rng
from .errors import ZeroMatrix
from .linalg import hermitian_eig

SCHEMA_VERSION = 1


@dataclass
class BeamSolution:
    """Relay weights plus the relaxation they were extracted from.

    ``t1``/``t2`` and ``secrecy_rate`` are the values achieved by ``w``
    (for DF, ``t1`` is the SNR ratio and ``t2`` is 1).  ``relaxation_rate``
    is the rate certified by the relaxed program, an upper bound that
    coincides with ``secrecy_rate`` when X is rank one.
    """

    w: np.ndarray
    X: np.ndarray
    t1: float
    t2: float
    secrecy_rate: float
    rank_ratio: float
    constraint: PowerConstraint
    scheme: str = ""
    relaxation_rate: float = math.nan
    rank_gap: bool = False
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "scheme": self.scheme,
            "w_re": self.w.real.tolist(),
            "w_im": self.w.imag.tolist(),
            "t1": self.t1,
            "t2": self.t2,
            "rate": self.secrecy_rate,
            "relaxation_rate": self.relaxation_rate,
            "rank_ratio": self.rank_ratio,
            "rank_gap": self.rank_gap,
            "constraint": self.constraint.to_dict(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def rank_ratio(X: np.ndarray) -> float:
    """lambda_2 / lambda_1 of a PSD matrix (0 for rank one or dim 1)."""
    if X.shape[0] == 1:
        return 0.0
    w, _ = hermitian_eig(X)
    if w[0] <= 0:
        return 0.0
    return float(min(max(w[1] / w[0], 0.0), 1.0))


def extract_rank_one(X: np.ndarray, constraint: PowerConstraint,
                     rate_evaluator: Optional[Callable[[np.ndarray], float]] = None,
                     rank_tol: float = 1e-6, randomization_samples: int = 1000,
                     seed: int = 0) -> np.ndarray:
    """Weight vector from a relaxed matrix X.

    Rank one (lambda_2/lambda_1 <= rank_tol): the principal component
    sqrt(lambda_1) v_1.  Otherwise Gaussian randomization: candidates
    drawn from CN(0, X) are scaled to the boundary of ``constraint`` and
    the one maximizing ``rate_evaluator`` wins.  The principal component,
    scaled to the boundary and as is, are candidates 0 and 1.
    """
    X = 0.5 * (X + X.conj().T)
    if np.trace(X).real <= 1e-12:
        raise ZeroMatrix("trace of X is (numerically) zero")
    lam, V = hermitian_eig(X)
    principal = np.sqrt(max(lam[0], 0.0)) * V[:, 0]
    if X.shape[0] == 1 or lam[1] <= rank_tol * lam[0]:
        return constraint.clip(principal)
    if rate_evaluator is None:
        raise ValueError("rate_evaluator is required when X is not rank one")

    rng = make_rng(seed, stream=0x5EED)
    root = V * np.sqrt(np.clip(lam, 0.0, None))
    m = X.shape[0]
    xi = (rng.standard_normal((randomization_samples, m))
          + 1j * rng.standard_normal((randomization_samples, m))) / np.sqrt(2.0)
    candidates = [principal * constraint.max_scale(principal), constraint.clip(principal)]
    for row in xi @ root.T:
        a = constraint.max_scale(row)
        if np.isfinite(a):
            candidates.append(row * a)
    rates = [rate_evaluator(c) for c in candidates]
    return candidates[int(np.argmax(rates))]
