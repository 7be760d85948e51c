import itertools

import numpy as np
import pytest

from idcalib.core import ObjectRecord

_counter = itertools.count()

# (criterion, passed, detail) rows collected by test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_simplex(rng, n, k, concentration=0.5):
    return rng.dirichlet(np.full(k, concentration), size=n)


def make_record(entropy_or_map, feature=None, embed=None, frame=None, video=1, index=0, dim=4):
    """Build a record either from a raw map or from a bare entropy value."""
    if frame is None:
        frame = next(_counter)
    if feature is None:
        feature = np.eye(dim)[index % dim]
    if embed is None:
        embed = feature
    if np.ndim(entropy_or_map) == 0:
        raw = np.full(2, 0.5)
        return ObjectRecord(np.asarray(feature, float), np.asarray(embed, float), raw,
                            float(entropy_or_map), frame, video, index)
    return ObjectRecord.from_map(feature, embed, entropy_or_map, frame, video, index)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
