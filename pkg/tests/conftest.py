import os
import re
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    lines = list(mod.RESULTS)
    done = {int(m.group(1)) for m in (re.match(r"criterion\s+(\d+)", l) for l in lines) if m}
    ran = {int(m.group(1)) for rep in terminalreporter.getreports("") if hasattr(rep, "nodeid")
           for m in [re.search(r"test_acceptance.py::test_c(\d+)", rep.nodeid)] if m}
    lines += [f"criterion {k:2d}: FAIL  (errored before reporting)" for k in sorted(ran - done)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
