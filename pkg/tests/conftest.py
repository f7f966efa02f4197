import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

LIE_NAMES = ["aff1", "so3", "sl2", "h3"]
ALL_PRESETS = ["symplectic-r2", "zero-r2", "abelian2", "aff1", "so3", "sl2", "h3",
               "regular-r3", "regular-exp"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


# -- acceptance summary ------------------------------------------------------

def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def criterion(request):
    """Record the parts of an acceptance criterion: (description, value, tolerance, ok)."""
    table = request.config._acceptance

    def record(number, title, parts):
        entry = table.setdefault(number, {"title": title, "parts": []})
        entry["parts"].extend(parts)
        ok = all(p[3] for p in parts)
        print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}")
        for desc, value, tol, good in parts:
            print(f"    {'ok  ' if good else 'FAIL'} {desc}: {value:.3e} (tol {tol})")
        bad = [f"{d}: {v:.3e} vs {t}" for d, v, t, good in parts if not good]
        assert not bad, "; ".join(bad)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = getattr(config, "_acceptance", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        entry = table[number]
        ok = all(p[3] for p in entry["parts"])
        worst = [p for p in entry["parts"] if not p[3]]
        detail = f"  [{worst[0][0]}: {worst[0][1]:.3e}, tol {worst[0][2]}]" if worst else ""
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {entry['title']}{detail}")
