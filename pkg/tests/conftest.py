import numpy as np
import pytest

from bayesrough.granulation import Granulization, granulate_table
from bayesrough.table import AttributeSpec, InformationTable

ACCEPTANCE_LINES = []


def granular(signatures, decisions=None, granules=None):
    """GranularTable whose raw values are the granule indices themselves.

    Attribute ``j`` gets range ``[-0.5, k_j - 0.5]`` and cuts at the
    half-integers, so value ``v`` lands in granule ``v``.
    """
    sig = np.asarray(signatures, dtype=np.int64)
    m = len(granules) if granules is not None else sig.shape[1]
    sig = sig.reshape(len(sig), m)
    if granules is None:
        granules = [max(2, int(sig[:, j].max()) + 1) if len(sig) else 2 for j in range(m)]
    schema = tuple(AttributeSpec(f"a{j}", "categorical", -0.5, k - 0.5) for j, k in enumerate(granules))
    cuts = tuple(tuple(i + 0.5 for i in range(k - 1)) for k in granules)
    if decisions is None:
        decisions = np.zeros(len(sig), dtype=np.int8)
    table = InformationTable(schema, sig.astype(float), np.asarray(decisions, dtype=np.int8))
    return granulate_table(table, Granulization(schema, cuts))


@pytest.fixture
def make_granular():
    return granular


@pytest.fixture
def table1_csv():
    return (
        "race,mothers_age,education,gravidity,parity,fathers_age,hiv_status\n"
        "1,32,1,1,2,34,0\n"
        "2,27,13,2,1,28,1\n"
        "2,25,8,2,0,23,1\n"
        "3,27,4,3,1,22,0\n"
    )


@pytest.fixture
def table1_schema():
    return [
        AttributeSpec("race", "categorical", 1, 4),
        AttributeSpec("mothers_age", "numeric", 13, 50),
        AttributeSpec("education", "categorical", 0, 13),
        AttributeSpec("gravidity", "categorical", 0, 11),
        AttributeSpec("parity", "categorical", 0, 11),
        AttributeSpec("fathers_age", "numeric", 15, 70),
    ]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def small_table(n=300, seed=0, noise=0.1):
    """Clean checkerboard table small enough for quick chains."""
    from bayesrough.synth import checkerboard_spec, generate

    return generate(checkerboard_spec(n_objects=n, noise=noise, seed=seed))[0]
