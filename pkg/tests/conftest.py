import numpy as np
import pytest


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")
    config.stash[ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines, key=int):
        terminalreporter.write_line(lines[key])


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then assert on it."""

    def report(criterion: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        print(line)
        request.config.stash[ACCEPTANCE][criterion] = line
        assert ok, line

    return report


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def sphere_probes(n_theta=100, n_phi=100):
    """Lat-long grid of unit vectors over the full sphere."""
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    t, p = np.meshgrid(theta, phi)
    return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1).reshape(-1, 3)
