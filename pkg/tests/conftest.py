"""Shared fixtures: seeded RNG and random state/circuit factories."""

import numpy as np
import pytest

from mqcmagic import CNOT, CZ, H, PureState, S, X, Y, Z


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_state(rng, n: int) -> PureState:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(n, v / np.linalg.norm(v))


def random_clifford_circuit(rng, n: int, depth: int = 20) -> list:
    """Random circuit over the Clifford generators H, S, X, Y, Z, CZ, CNOT."""
    gates = []
    for _ in range(depth):
        kind = rng.integers(0, 7)
        q = int(rng.integers(1, n + 1))
        if kind <= 4:
            gates.append([H, S, X, Y, Z][kind](q))
        else:
            r = int(rng.integers(1, n + 1))
            while r == q:
                r = int(rng.integers(1, n + 1))
            gates.append(CZ(q, r) if kind == 5 else CNOT(q, r))
    return gates
