import numpy as np
import pytest

from qgv.channels import calibrate_noise, device_channel
from qgv.gates import UA, UB


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def noisy_ua():
    return device_channel(UA, calibrate_noise(0.98))


@pytest.fixture(scope="session")
def noisy_ub():
    return device_channel(UB, calibrate_noise(0.98))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0].strip("[]#C"))):
            terminalreporter.write_line(line)
