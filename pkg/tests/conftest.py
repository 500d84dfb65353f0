import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: list[tuple[str, str, str]] = []


def record(criterion: str, ok, detail: str) -> None:
    """Log one acceptance outcome; ``ok=None`` marks a skip."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE.append((criterion, status, detail))
    print(f"[{status}] criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in sorted(ACCEPTANCE, key=lambda r: (int(r[0].split(".")[0]), r[0])):
        terminalreporter.write_line(f"[{status}] criterion {criterion}: {detail}")
