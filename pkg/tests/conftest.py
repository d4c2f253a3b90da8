import math

import pytest

from conewedge.cross_section import CrossSection, interval_spectrum, tabulated_spectrum, warp_family

# one line per acceptance criterion, printed after the run
CRITERIA: dict[int, str] = {}


def record(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[num] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])


def standard_configs():
    """(spectrum, warp, delta) for the three configurations used throughout."""
    s1 = interval_spectrum(math.pi, "neumann", 8)
    s2 = interval_spectrum(math.pi / 2, "neumann", 8)
    s3 = tabulated_spectrum([0.0, -2.0], n=2)
    return [
        ("L=pi N", s1, warp_family(0.0, s1), 0.5),
        ("L=pi/2 N warped", s2, warp_family(1.0, s2), 1.5),
        ("n=2 tabulated", s3, warp_family(-0.5, s3), 0.5),
    ]


@pytest.fixture
def spec_pi():
    return interval_spectrum(math.pi, "neumann", 8)


@pytest.fixture
def spec_half_pi():
    return CrossSection("interval-analytic", 1, "neumann", L=math.pi / 2, phi_prime0=1.0).spectrum(8)
