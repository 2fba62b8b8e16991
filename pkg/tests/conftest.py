import numpy as np
import pytest

from radial_epdiff.kernels import RadialGrid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid_1024():
    return RadialGrid.uniform(1024, 8.0)


# criterion -> list of (part, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for item in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[item]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{name}: {info}{'' if ok else ' [FAIL]'}" for name, ok, info in parts)
        terminalreporter.write_line(f"criterion {item}: {status} | {detail}")
