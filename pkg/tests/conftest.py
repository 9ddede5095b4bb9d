import numpy as np
import pytest
from hypothesis import settings, strategies as st

from cgfusion.generators import gen_random

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

instance_params = st.tuples(
    st.integers(0, 10_000),
    st.integers(1, 4),
    st.integers(1, 8),
    st.integers(1, 12),
    st.sampled_from(["scalar_ctrl", "diagonal"]),
)


def make_instance(params):
    seed, m, n, J, mode = params
    return gen_random(seed, m, n, J, mode)


def sweep(count, mode=None, seed0=0):
    """Deterministic instance sweep with m <= 4, n <= 8, J <= 12."""
    out = []
    for i in range(count):
        rng = np.random.default_rng(seed0 + i)
        m, n, J = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 13))
        md = mode or ("diagonal" if i % 2 else "scalar_ctrl")
        out.append(gen_random(seed0 + i, m, n, J, md))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
