import json

import numpy as np
import pytest

from relaybeam.af import af_secrecy_rate
from relaybeam.channel import PowerConstraint, derive_af, sample_channel
from relaybeam.errors import ZeroMatrix
from relaybeam.solution import BeamSolution, extract_rank_one, rank_ratio


def test_rank_one_returns_vector_up_to_phase():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w = extract_rank_one(np.outer(x, x.conj()), PowerConstraint.total_power(100.0))
    assert abs(abs(np.vdot(w, x)) - np.linalg.norm(x) ** 2) < 1e-10
    assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(x))


def test_isotropic_uses_full_power():
    c = PowerConstraint.total_power(2.0)
    w = extract_rank_one(np.eye(2, dtype=complex), c, rate_evaluator=lambda v: np.linalg.norm(v))
    assert np.linalg.norm(w) ** 2 == pytest.approx(2.0)


def test_zero_matrix():
    with pytest.raises(ZeroMatrix):
        extract_rank_one(np.zeros((2, 2)), PowerConstraint.total_power(1.0))


@pytest.mark.parametrize("seed", range(5))
def test_randomization_never_loses_to_principal_component(seed):
    ch = sample_channel(seed, 3, 10.0, 2.0, 2.0)
    d = derive_af(ch)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    X = V @ V.conj().T
    p = PowerConstraint.individual([1.0, 0.5, 2.0])
    rate = lambda v: af_secrecy_rate(v, d, ch)  # noqa: E731
    w = extract_rank_one(X, p, rate, seed=seed)
    lam, U = np.linalg.eigh(X)
    pc = np.sqrt(lam[-1]) * U[:, -1]
    assert p.satisfied(w)
    assert rate(w) >= rate(p.clip(pc)) - 1e-12
    assert rate(w) >= rate(pc * p.max_scale(pc)) - 1e-12


def test_randomization_deterministic():
    X = np.diag([1.0, 0.8, 0.1]).astype(complex)
    c = PowerConstraint.total_power(1.0)
    f = lambda v: float(np.real(v[0] * v[1]))  # noqa: E731
    assert np.array_equal(extract_rank_one(X, c, f, seed=3), extract_rank_one(X, c, f, seed=3))


def test_rank_ratio():
    assert rank_ratio(np.diag([4.0, 1.0])) == pytest.approx(0.25)
    assert rank_ratio(np.array([[2.0]])) == 0.0
    assert rank_ratio(np.zeros((2, 2))) == 0.0


def test_solution_json():
    sol = BeamSolution(w=np.array([1 + 1j, 0.5]), X=np.eye(2), t1=2.0, t2=0.75,
                       secrecy_rate=np.log2(1.5), rank_ratio=0.0,
                       constraint=PowerConstraint.total_power(3.0), scheme="af_optimal",
                       diagnostics={"steps": np.int64(4)})
    doc = json.loads(sol.to_json())
    assert doc["w_re"] == [1.0, 0.5] and doc["w_im"] == [1.0, 0.0]
    assert doc["rate"] == pytest.approx(np.log2(1.5))
    assert doc["constraint"]["kind"] == "total"
    assert doc["diagnostics"]["steps"] == 4
