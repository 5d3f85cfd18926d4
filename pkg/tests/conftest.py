import numpy as np
import pytest
import torch

from ereact.motion import encode_sequence, fk_sequence
from ereact.rotations import random_rotations
from ereact.skeleton import chain_skeleton, default_humanoid

# one line per acceptance criterion, printed after the test summary
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(2)


@pytest.fixture
def humanoid():
    return default_humanoid()


@pytest.fixture
def chain5():
    return chain_skeleton(5)


def random_motion(skeleton, length=8, fps=20.0, seed=0):
    """A valid MotionSequence whose positions come from FK (bone-exact)."""
    rng = np.random.default_rng(seed)
    n = skeleton.joint_count
    roots = np.cumsum(rng.normal(0, 0.02, size=(length, 3)), axis=0)
    roots[:, 1] += 0.9
    rots = random_rotations(length * (n - 1), rng).reshape(length, n - 1, 3, 3)
    positions = fk_sequence(roots, rots, skeleton)
    return encode_sequence(positions, rots, skeleton, fps)
