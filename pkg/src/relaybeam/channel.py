"""Channel realizations for the two-hop wiretap relay network.

Also holds the power-constraint description shared by the AF and DF
optimizers and the reformulated AF quantities (scaling factors, the
effective source-destination and source-eavesdropper vectors and the
forwarded-noise diagonals).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

SCHEMA_VERSION = 1


def _cvec(v) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=complex)).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("channel vector has non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class ChannelState:
    """One realization of the fading coefficients, powers and noise levels.

    g: source -> relay, h: relay -> destination, z: relay -> eavesdropper.
    Nm holds the per-relay noise variances, N0 the destination and
    eavesdropper noise variance, Ps the source power.
    """

    g: np.ndarray
    h: np.ndarray
    z: np.ndarray
    Ps: float
    Nm: np.ndarray
    N0: float

    def __post_init__(self):
        g, h, z = _cvec(self.g), _cvec(self.h), _cvec(self.z)
        M = g.size
        if M < 1 or h.size != M or z.size != M:
            raise ValueError(f"g, h, z must share a positive length, got {g.size}, {h.size}, {z.size}")
        Nm = np.asarray(self.Nm, dtype=float)
        Nm = np.full(M, float(Nm)) if Nm.ndim == 0 else Nm.reshape(-1)
        if Nm.size != M:
            raise ValueError("Nm must be a scalar or have one entry per relay")
        for name, val in (("Ps", self.Ps), ("N0", self.N0)):
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val}")
        if not np.all(np.isfinite(Nm) & (Nm > 0)):
            raise ValueError("Nm entries must be positive and finite")
        for name, val in (("g", g), ("h", h), ("z", z), ("Nm", Nm)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "Ps", float(self.Ps))
        object.__setattr__(self, "N0", float(self.N0))

    @property
    def M(self) -> int:
        return self.g.size

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "M": self.M,
            "g_re": self.g.real.tolist(), "g_im": self.g.imag.tolist(),
            "h_re": self.h.real.tolist(), "h_im": self.h.imag.tolist(),
            "z_re": self.z.real.tolist(), "z_im": self.z.imag.tolist(),
            "Ps": self.Ps,
            "Nm": self.Nm.tolist(),
            "N0": self.N0,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChannelState":
        try:
            M = int(doc["M"])
            g = np.asarray(doc["g_re"], float) + 1j * np.asarray(doc["g_im"], float)
            h = np.asarray(doc["h_re"], float) + 1j * np.asarray(doc["h_im"], float)
            z = np.asarray(doc["z_re"], float) + 1j * np.asarray(doc["z_im"], float)
            state = cls(g=g, h=h, z=z, Ps=doc["Ps"], Nm=doc["Nm"], N0=doc["N0"])
        except KeyError as exc:
            raise ValueError(f"channel document is missing field {exc}") from None
        if state.M != M:
            raise ValueError(f"field M={M} disagrees with vector length {state.M}")
        return state

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ChannelState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class AfDerived:
    l: np.ndarray  # noqa: E741  (relay amplitude normalization)
    hg: np.ndarray
    hz: np.ndarray
    Dh: np.ndarray
    Dz: np.ndarray


def derive_af(ch: ChannelState) -> AfDerived:
    """Scaling factors and the matrix-form AF quantities for ``ch``."""
    l = 1.0 / np.sqrt(np.abs(ch.g) ** 2 * ch.Ps + ch.Nm)  # noqa: E741
    hg = np.conj(ch.h) * np.conj(ch.g) * l
    hz = np.conj(ch.z) * np.conj(ch.g) * l
    Dh = np.diag(np.abs(ch.h) ** 2 * l ** 2 * ch.Nm).astype(complex)
    Dz = np.diag(np.abs(ch.z) ** 2 * l ** 2 * ch.Nm).astype(complex)
    return AfDerived(l=l, hg=hg, hz=hz, Dh=Dh, Dz=Dz)


@dataclass(frozen=True, eq=False)
class PowerConstraint:
    """Total relay power ``||w||^2 <= total``, per-relay ``|w_m|^2 <= per_relay[m]``, or both."""

    total: Optional[float] = None
    per_relay: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.total is None and self.per_relay is None:
            raise ValueError("a power constraint needs a total or per-relay bound")
        if self.total is not None:
            if not (np.isfinite(self.total) and self.total > 0):
                raise ValueError(f"total power must be positive, got {self.total}")
            object.__setattr__(self, "total", float(self.total))
        if self.per_relay is not None:
            p = np.asarray(self.per_relay, dtype=float).reshape(-1)
            if p.size == 0 or not np.all(np.isfinite(p) & (p > 0)):
                raise ValueError("per-relay powers must be positive")
            p.setflags(write=False)
            object.__setattr__(self, "per_relay", p)

    @classmethod
    def total_power(cls, PT: float) -> "PowerConstraint":
        return cls(total=PT)

    @classmethod
    def individual(cls, p) -> "PowerConstraint":
        return cls(per_relay=p)

    @classmethod
    def both(cls, PT: float, p) -> "PowerConstraint":
        return cls(total=PT, per_relay=p)

    @classmethod
    def equal_split(cls, PT: float, M: int) -> "PowerConstraint":
        """Individual constraint p_m = PT / M."""
        return cls(per_relay=np.full(M, PT / M))

    @property
    def kind(self) -> str:
        if self.total is not None and self.per_relay is not None:
            return "both"
        return "total" if self.total is not None else "individual"

    def budget(self) -> float:
        """Largest tr(X) any feasible X can reach."""
        caps = []
        if self.total is not None:
            caps.append(self.total)
        if self.per_relay is not None:
            caps.append(float(np.sum(self.per_relay)))
        return min(caps)

    def check_dim(self, M: int) -> None:
        if self.per_relay is not None and self.per_relay.size != M:
            raise ValueError(f"per-relay bound has {self.per_relay.size} entries, expected {M}")

    def max_scale(self, w: np.ndarray) -> float:
        """Largest a >= 0 with a*w feasible (inf for w = 0)."""
        p = np.abs(w) ** 2
        scales = [np.inf]
        if self.total is not None and p.sum() > 0:
            scales.append(np.sqrt(self.total / p.sum()))
        if self.per_relay is not None:
            nz = p > 0
            if np.any(nz):
                scales.append(float(np.min(np.sqrt(self.per_relay[nz] / p[nz]))))
        return float(min(scales))

    def clip(self, w: np.ndarray) -> np.ndarray:
        """Scale w down just enough to satisfy the constraint."""
        a = self.max_scale(w)
        return w * a if a < 1.0 else w

    def satisfied(self, w: np.ndarray, rtol: float = 1e-8) -> bool:
        p = np.abs(w) ** 2
        ok = True
        if self.total is not None:
            ok &= p.sum() <= self.total * (1 + rtol)
        if self.per_relay is not None:
            ok &= bool(np.all(p <= self.per_relay * (1 + rtol)))
        return bool(ok)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "total": self.total,
            "per_relay": None if self.per_relay is None else self.per_relay.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PowerConstraint":
        return cls(total=doc.get("total"), per_relay=doc.get("per_relay"))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for (seed, stream); distinct streams are independent."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def complex_gaussian(rng: np.random.Generator, sigma: float, size) -> np.ndarray:
    """Circularly symmetric complex Gaussian with E|x|^2 = sigma**2."""
    scale = sigma / np.sqrt(2.0)
    return rng.normal(scale=scale, size=size) + 1j * rng.normal(scale=scale, size=size)


def sample_channel(seed: int, M: int, sigma_g: float, sigma_h: float, sigma_z: float,
                   Ps: float = 1.0, Nm=1.0, N0: float = 1.0, stream: int = 0) -> ChannelState:
    """Draw g, h, z i.i.d. CN(0, sigma^2); deterministic given (seed, stream)."""
    if M < 1:
        raise ValueError("M must be at least 1")
    for name, s in (("sigma_g", sigma_g), ("sigma_h", sigma_h), ("sigma_z", sigma_z)):
        if not (np.isfinite(s) and s > 0):
            raise ValueError(f"{name} must be positive, got {s}")
    rng = make_rng(seed, stream)
    g = complex_gaussian(rng, sigma_g, M)
    h = complex_gaussian(rng, sigma_h, M)
    z = complex_gaussian(rng, sigma_z, M)
    return ChannelState(g=g, h=h, z=z, Ps=Ps, Nm=Nm, N0=N0)
