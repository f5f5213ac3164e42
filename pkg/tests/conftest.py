import math

import pytest
from hypothesis import HealthCheck, settings

from fermichart import ChartContext, builtin_models, milne

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

BUILTINS = builtin_models()


@pytest.fixture(scope="session")
def contexts():
    """One k = 0 context per builtin model, shared so radius/horizon caches persist."""
    return {name: ChartContext(m, k=0) for name, m in BUILTINS.items()}


@pytest.fixture(scope="session")
def milne_ctx():
    return ChartContext(milne(), k=0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.fixture
def close():
    def check(a, b, tol):
        assert math.isfinite(a), a
        assert rel(a, b) <= tol, f"{a!r} vs {b!r}: rel {rel(a, b):.3g} > {tol}"
    return check


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        parts = results[n]
        ok = all(p for p, _ in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
        for p, detail in parts:
            terminalreporter.write_line(f"    [{'ok' if p else 'FAILED'}] {detail}")
