import struct

import pytest

from oscbench import PhaseState, analytic_solution, build_chain

# Canonical parameters: 2 g masses, 20.25 kN/m springs, x0 = (2, -3) m at rest.
M = 0.002
C = 20250.0
X0 = (2.0, -3.0)
V0 = (0.0, 0.0)


@pytest.fixture
def canonical_system():
    return build_chain([M, M], [C, C])


@pytest.fixture
def canonical_state():
    return PhaseState(X0, V0, 0.0)


@pytest.fixture
def canonical_solution():
    return analytic_solution(M, C, X0, V0)


def trajectory_bits(traj) -> bytes:
    """Exact byte image of a trajectory, for bitwise-identity assertions."""
    chunks = []
    for s in traj.samples:
        chunks.append(struct.pack(f"<{len(s.positions)}d", *s.positions))
        chunks.append(struct.pack(f"<{len(s.velocities)}d", *s.velocities))
        chunks.append(struct.pack("<d", s.time))
    return b"".join(chunks)
