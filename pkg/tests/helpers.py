"""Shared test utilities: multiset eigenvalue comparison and random
system generators."""

import numpy as np

from firsyn.sysmodel import FirGains, StateSpaceSystem


def assert_multiset_close(actual, expected, tol=1e-8):
    """Greedy nearest-neighbour matching of two complex multisets."""
    actual = list(np.atleast_1d(np.asarray(actual, dtype=complex)))
    expected = list(np.atleast_1d(np.asarray(expected, dtype=complex)))
    assert len(actual) == len(expected), (
        f"multiset sizes differ: {len(actual)} vs {len(expected)}"
    )
    remaining = actual.copy()
    for target in expected:
        dists = [abs(target - value) for value in remaining]
        best = int(np.argmin(dists))
        assert dists[best] <= tol, (
            f"no match for {target} within {tol} (closest {remaining[best]}, "
            f"distance {dists[best]:.3e})"
        )
        remaining.pop(best)


def random_system(rng, n_max=4, m_max=2, p_max=2, scale=1.0):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    p = int(rng.integers(1, p_max + 1))
    return StateSpaceSystem(
        A=scale * rng.uniform(-1.0, 1.0, (n, n)),
        B=scale * rng.uniform(-1.0, 1.0, (n, m)),
        C=scale * rng.uniform(-1.0, 1.0, (p, n)),
    )


def random_gains(rng, sys, order, scale=1.0):
    return FirGains(tuple(
        scale * rng.uniform(-1.0, 1.0, (sys.m, sys.p))
        for _ in range(order + 1)
    ))


def draw_padding_instance(rng):
    """Random (sys, gains) whose closed loop keeps its spectrum away from
    zero, so the eigenvalues appended by zero-block padding form a
    well-separated cluster and a fixed absolute comparison tolerance is
    meaningful; near-coincident eigenvalue pairs are ill-conditioned for
    any eigensolver."""
    from firsyn.sysmodel import closed_loop

    while True:
        sys = random_system(rng)
        order = int(rng.integers(0, 3))
        f = random_gains(rng, sys, order)
        eigs = np.linalg.eigvals(closed_loop(sys, f))
        if np.min(np.abs(eigs)) > 1e-3:
            return sys, f


def unstabilizable_system(rng, n_max=4, m_max=2):
    """Random system doctored so one unstable mode is uncontrollable: the
    last state row is decoupled with an eigenvalue outside the unit circle
    and the matching B row is zero."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    a = rng.uniform(-1.0, 1.0, (n, n))
    a[-1, :] = 0.0
    a[-1, -1] = 1.5 + float(rng.uniform(0.0, 1.0))
    b = rng.uniform(-1.0, 1.0, (n, m))
    b[-1, :] = 0.0
    c = rng.uniform(-1.0, 1.0, (1, n))
    return StateSpaceSystem(A=a, B=b, C=c)
