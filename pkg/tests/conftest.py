import numpy as np
import pytest

from circleqm.lattice import ModeWavefunction, in_window, window_min


def random_profile(rng, dim, lo, hi, real=False):
    """Random normalized amplitudes supported on lo..hi."""
    amps = np.zeros(dim, dtype=complex)
    n = hi - lo + 1
    vals = rng.normal(size=n) + (0 if real else 1j * rng.normal(size=n))
    # every support point must carry weight
    vals = np.where(np.abs(vals) < 0.1, 0.1, vals)
    for k, l in enumerate(range(lo, hi + 1)):
        amps[l - window_min(dim)] = vals[k]
    return ModeWavefunction(dim, amps / np.linalg.norm(amps))


def fits(*supports_and_signs, dim):
    """All signed sums of the given supports stay inside the window."""
    combos = [0]
    for support, sign in supports_and_signs:
        combos = [c + sign * s for c in combos for s in support]
    return all(in_window(c, dim) for c in combos)


def random_fitting_pair(rng, dim):
    """(phi_p, psi) such that every l - m stays inside the window."""
    lo, hi = window_min(dim), window_min(dim) + dim - 1
    while True:
        ws = int(rng.integers(1, max(2, dim // 3) + 1))
        c = int(rng.integers(lo, hi - ws + 2))
        wp = int(rng.integers(1, max(2, dim // 3) + 1))
        a = int(rng.integers(lo, hi - wp + 2))
        sp, ss = range(a, a + wp), range(c, c + ws)
        if fits((sp, 1), (ss, -1), dim=dim):
            return random_profile(rng, dim, a, a + wp - 1), random_profile(rng, dim, c, c + ws - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.fixture
def notes(request):
    """Short per-criterion details shown next to the PASS/FAIL line."""
    lines: list[str] = []
    request.node.user_notes = lines
    return lines


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or rep.failed:
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA[mark.args[0]] = (status, "; ".join(getattr(item, "user_notes", [])))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}" + (f"  ({detail})" if detail else ""))
