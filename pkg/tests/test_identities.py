import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigmak import identities
from sigmak.kernels import esp_batch, newton_batch


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 6))
def test_minor_oracle_matches_recurrence(seed, n):
    rng = np.random.default_rng(seed)
    A = identities.random_symmetric(rng, 5, n)
    sig = newton_batch(A, n)[0]
    for k in range(n + 1):
        ref = identities.minor_sigma(A, k).astype(float)
        np.testing.assert_allclose(sig[:, k], ref, rtol=1e-9, atol=1e-9 * np.abs(A).max() ** k)


def test_minor_oracle_determinant():
    A = np.array([[[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]])
    assert float(identities.minor_sigma(A, 3)[0]) == pytest.approx(np.linalg.det(A[0]))
    assert float(identities.minor_sigma(A, 0)[0]) == 1.0


def test_segment_cone_test():
    lam = np.array([[1.0, 1.0, 1.0], [3.0, 3.0, -1.0], [1.0, 1.0, -5.0]])
    np.testing.assert_array_equal(identities.segment_in_cone(lam, 2), [True, True, False])


def test_samplers():
    rng = np.random.default_rng(0)
    A = identities.random_symmetric(rng, 10, 4)
    assert np.array_equal(A, np.swapaxes(A, 1, 2))
    Q = identities.random_orthogonal(rng, 10, 4)
    np.testing.assert_allclose(Q @ np.swapaxes(Q, 1, 2), np.broadcast_to(np.eye(4), Q.shape),
                               atol=1e-12)
    C = identities.random_in_cone(rng, 50, 4, 3)
    assert C.shape == (50, 4, 4)
    assert np.all(esp_batch(np.linalg.eigvalsh(C), 3)[:, 1:] > 0)


def test_suite_passes_small():
    res = identities.run_suite((2, 4), 50, 1)
    assert [r.identity for r in res] == list(identities.NAMES)
    assert all(r.passed for r in res)
    assert all(r.checked > 0 for r in res)


def test_suite_is_deterministic():
    a = [r.to_record() for r in identities.run_suite((2, 3), 30, 9)]
    b = [r.to_record() for r in identities.run_suite((2, 3), 30, 9)]
    assert a == b


def test_fault_injection_is_caught():
    res = {r.identity: r for r in identities.run_suite((2, 4), 20, 1, "newton_sign")}
    euler = res["Euler identity"]
    assert not euler.passed and euler.counterexample is not None


def test_zero_trials_and_unknown_fault():
    assert identities.run_suite((2, 6), 0) == []
    with pytest.raises(ValueError):
        identities.run_suite((2, 3), 5, fault="bogus")
