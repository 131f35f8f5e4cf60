import numpy as np
import pytest

from shwalk import _backend
from shwalk.signal import TriaxialSignal

F0 = 50


def sinusoid_signal(freqs_amps, seconds, f0=F0, noise_sd=0.0, seed=0, axis=2, gravity=True):
    """Sum of sinusoids on one axis, gravity on z, optional white noise on all axes."""
    t = np.arange(int(seconds * f0)) / f0
    x = np.zeros((t.size, 3))
    if gravity:
        x[:, 2] = 1.0
    for f, a in freqs_amps:
        x[:, axis] += a * np.sin(2 * np.pi * f * t)
    if noise_sd:
        x += np.random.default_rng(seed).normal(0, noise_sd, x.shape)
    return TriaxialSignal(x, f0)


@pytest.fixture(params=["python", "cython"])
def backend(request, monkeypatch):
    """Run a test against each kernel implementation."""
    if request.param == "python":
        mod = _backend.python_kernels
    else:
        mod = _backend.compiled_kernels()
        if mod is None:
            pytest.skip("compiled extension not built")
    monkeypatch.setattr(_backend, "kernels", mod)
    return request.param


# ------------------------------------------------------- acceptance report
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if report.failed or report.when == "call":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _ACCEPTANCE[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, detail = _ACCEPTANCE[number]
        line = f"criterion {number:>2} {status}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
