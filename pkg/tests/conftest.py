from __future__ import annotations

import pytest

from lib.counter_machines import parse_cm
from lib.formula_parser import parse_formula

SCHEDULER = """\
env bool lf;
sys data proc, log;
formula: G(eq(proc, 1, log)) & G(!lf -> !eq(log, -1, proc))
"""

TAUTOLOGY = """\
env bool lf;
sys data proc;
formula: G(lf | !lf)
"""

# inc 1, inc 2, dec 1, dec 2, then the zero test on counter 1 halts
FIVE_STEP = """\
counters: 2
init: q0
final: qf
q0: inc 1 goto q1
q1: inc 2 goto q2
q2: ifz 1 goto qf else dec goto q3
q3: ifz 2 goto qf else dec goto q2
"""

CHEAT = """\
counters: 2
init: q0
final: qf
q0: ifz 1 goto q0 else dec goto qf
"""

LOSSY = """\
counters: 4
init: p0
final: p1
lossy: reset
p0: inc 1 goto p1
p1: ifz 1 goto p0 else dec goto p0
"""


@pytest.fixture
def scheduler():
    return parse_formula(SCHEDULER)


@pytest.fixture
def tautology():
    return parse_formula(TAUTOLOGY)


@pytest.fixture
def five_step():
    return parse_cm(FIVE_STEP)


@pytest.fixture
def cheat_machine():
    return parse_cm(CHEAT)


@pytest.fixture
def lossy_machine():
    return parse_cm(LOSSY)


@pytest.fixture
def write(tmp_path):
    def _write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
