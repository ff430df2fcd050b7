import numpy as np
import pytest

from neutralsys.sysmodel import DelayKernel, NeutralSystem


def make_example1(alpha: float, beta: float, B=None) -> NeutralSystem:
    """Pointwise neutral system with a Jordan block in the difference matrix:
    dz/dt = A dz/dt(t-1) + diag(alpha, beta) z(t) (+ B u)."""
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.zeros((2, 0)) if B is None else np.asarray(B, dtype=float).reshape(2, -1)
    return NeutralSystem(
        n=2,
        r=B.shape[1],
        h=1.0,
        A_minus1=A,
        A2=DelayKernel.zero(2, 1.0),
        A3=DelayKernel.from_atoms([(0.0, np.diag([alpha, beta]).astype(float))], 2, 1.0),
        B=B,
    )


def make_example2(gamma: float, B=None) -> NeutralSystem:
    """Difference matrix -I (repeated unit-circle eigenvalue, no Jordan block);
    gamma only couples the state term, leaving the spectrum unchanged."""
    B = np.zeros((2, 0)) if B is None else np.asarray(B, dtype=float).reshape(2, -1)
    return NeutralSystem(
        n=2,
        r=B.shape[1],
        h=1.0,
        A_minus1=-np.eye(2),
        A2=DelayKernel.zero(2, 1.0),
        A3=DelayKernel.from_atoms(
            [(0.0, np.array([[-1.0, gamma], [0.0, -1.0]]))], 2, 1.0
        ),
        B=B,
    )


def make_scalar_decay() -> NeutralSystem:
    """dz/dt = -z as a degenerate neutral system (difference matrix 0)."""
    return NeutralSystem(
        n=1,
        r=0,
        h=1.0,
        A_minus1=np.zeros((1, 1)),
        A2=DelayKernel.zero(1, 1.0),
        A3=DelayKernel.from_atoms([(0.0, np.array([[-1.0]]))], 1, 1.0),
        B=np.zeros((1, 0)),
    )


def make_reach_fixture(b_scale: float = 1.0) -> NeutralSystem:
    """Single-input n=2 neutral chain-of-integrators fixture used for the
    controllability-time phase transition."""
    return NeutralSystem(
        n=2,
        r=1,
        h=1.0,
        A_minus1=np.diag([0.5, 1.0 / 3.0]),
        A2=DelayKernel.zero(2, 1.0),
        A3=DelayKernel.from_atoms([(0.0, np.array([[0.0, 1.0], [0.0, 0.0]]))], 2, 1.0),
        B=np.array([[0.0], [b_scale]]),
    )


def make_density_system(seed: int = 3) -> NeutralSystem:
    """Distributed-delay system with three-segment A2/A3 densities and one
    interior atom; exercises every closed-form integral path."""
    rng = np.random.default_rng(seed)
    bp = np.array([-1.0, -0.55, -0.2, 0.0])
    return NeutralSystem(
        n=2,
        r=0,
        h=1.0,
        A_minus1=0.3 * np.eye(2),
        A2=DelayKernel(bp, rng.uniform(-1, 1, (3, 2, 2))),
        A3=DelayKernel(
            bp, rng.uniform(-1, 1, (3, 2, 2)), ((-0.35, rng.uniform(-1, 1, (2, 2))),)
        ),
        B=np.zeros((2, 0)),
    )


EXAMPLE1_DOC = {
    "n": 2,
    "r": 0,
    "h": 1.0,
    "A_minus1": [[1.0, 1.0], [0.0, 1.0]],
    "A2": {"breakpoints": [-1.0, 0.0], "segments": [[[0.0, 0.0], [0.0, 0.0]]]},
    "A3": {
        "breakpoints": [-1.0, 0.0],
        "segments": [[[0.0, 0.0], [0.0, 0.0]]],
        "atoms": [{"theta": 0.0, "matrix": [[1.0, 0.0], [0.0, 2.0]]}],
    },
    "B": [[], []],
}

EXAMPLE2_DOC = {
    "n": 2,
    "r": 0,
    "h": 1.0,
    "A_minus1": [[-1.0, 0.0], [0.0, -1.0]],
    "A2": {"breakpoints": [-1.0, 0.0], "segments": [[[0.0, 0.0], [0.0, 0.0]]]},
    "A3": {
        "breakpoints": [-1.0, 0.0],
        "segments": [[[0.0, 0.0], [0.0, 0.0]]],
        "atoms": [{"theta": 0.0, "matrix": [[-1.0, 1.0], [0.0, -1.0]]}],
    },
    "B": [[], []],
}


@pytest.fixture
def example1_file(tmp_path):
    import json

    path = tmp_path / "example1.json"
    path.write_text(json.dumps(EXAMPLE1_DOC))
    return path


@pytest.fixture
def example2_file(tmp_path):
    import json

    path = tmp_path / "example2.json"
    path.write_text(json.dumps(EXAMPLE2_DOC))
    return path
