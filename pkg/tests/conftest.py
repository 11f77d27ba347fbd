import re

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py" not in rep.nodeid:
                continue
            m = re.search(r"test_criterion_(\d+)_(\w+?)(\[.*\])?$", rep.nodeid)
            if not m:
                continue
            key = int(m.group(1))
            detail = dict(rep.user_properties).get("detail", "")
            ok = outcome == "passed"
            prev = rows.get(key)
            rows[key] = (m.group(2), (prev[1] if prev else True) and ok, (prev[2] + [detail]) if prev else [detail])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(rows):
        name, ok, details = rows[key]
        terminalreporter.write_line(f"criterion {key:2d} {'PASS' if ok else 'FAIL'}  {name}: {' | '.join(details)}")
