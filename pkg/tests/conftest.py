import numpy as np
import pytest

# criterion -> part label -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, dict[str, tuple[bool, str]]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p[0] for p in parts.values())
        detail = "; ".join(f"{name}: {d}" if name else d for name, (_, d) in parts.items())
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
