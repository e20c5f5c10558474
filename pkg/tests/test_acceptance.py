"""Full regression battery, one test per advertised criterion.

Runs the same engine as ``conevol report`` at full scale with seed 0; the
per-criterion tolerances and sample sizes live in conevol.report so the
command line and the test suite can never drift apart.
"""

import pytest

from conevol.report import run_battery

CRITERIA = [
    (1, "orthant-profile"),
    (2, "circular-moments"),
    (3, "psd-sdim"),
    (4, "goe-integral"),
    (5, "psd-variance-ratio"),
    (6, "steiner-cdfs"),
    (7, "master-functionals"),
    (8, "biorthogonal"),
    (9, "product-rule"),
    (10, "polarity-totality"),
    (11, "variance-bound"),
    (12, "tail-validity"),
    (13, "wills-functional"),
    (14, "determinism"),
]


@pytest.fixture(scope="module")
def battery():
    results = run_battery(seed=0, scale="full")
    return {r.index: r for r in results}


@pytest.mark.parametrize("index,name", CRITERIA,
                         ids=[f"{i:02d}-{name}" for i, name in CRITERIA])
def test_criterion(battery, index, name):
    result = battery[index]
    assert result.name == name
    assert result.passed, f"criterion {index:02d} {name}: {result.detail}"
