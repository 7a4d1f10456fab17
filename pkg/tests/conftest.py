import numpy as np
import pytest

from flagtomo import Ball, Ellipsoid, ForwardFlagFunction, MinkowskiSum, Translated, VectorFlagFunction


def constant_flag_function(r=1.0):
    return VectorFlagFunction(lambda w, d: np.full(np.broadcast_shapes(w.shape, d.shape)[:-1], r))


def random_directions(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def gallery():
    """Gallery bodies with their centres of symmetry."""
    rot = np.array([[0.6, -0.8, 0.0], [0.8, 0.6, 0.0], [0.0, 0.0, 1.0]])
    return {
        "ball": (Ball(1.0), np.zeros(3)),
        "offset_ball": (Ball(0.8, (0.3, -0.2, 0.1)), np.array([0.3, -0.2, 0.1])),
        "ellipsoid": (Ellipsoid(2, 1, 1), np.zeros(3)),
        "rotated_ellipsoid": (Ellipsoid(1.5, 1.0, 0.7, rot), np.zeros(3)),
        "sum": (MinkowskiSum([Ellipsoid(1, 0.6, 0.5), Ball(0.5)]), np.zeros(3)),
        "translated": (Translated(Ellipsoid(2, 1, 1), (0.5, 0.0, 0.0)), np.array([0.5, 0.0, 0.0])),
    }


@pytest.fixture(scope="session")
def ellipsoid_data():
    E = Ellipsoid(2, 1, 1)
    return E, ForwardFlagFunction(E)


# --- acceptance summary -----------------------------------------------------
# Tests marked ``acceptance(k, title)`` are grouped per criterion; the terminal
# summary prints one PASS/FAIL line for each criterion seen in the run.

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    k, title = mark.args
    entry = _ACCEPTANCE.setdefault(k, {"title": title, "ok": True, "n": 0})
    if rep.when == "call":
        entry["n"] += 1
    entry["ok"] &= not rep.failed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[k]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {k:2d} {status}  {e['title']} ({e['n']} checks)")
