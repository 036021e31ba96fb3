"""End-to-end acceptance suite A1-A10 on the default configuration.

The suite runs once per session (about five minutes on one core).  Every
criterion prints one PASS/FAIL line, live and again in the terminal summary.
"""
import json
import sys

import pytest

from conftest import ACCEPTANCE_LINES
from pressure_lab.acceptance import ALL, PRE_ASYMPTOTIC, verify_all
from pressure_lab.config import ExperimentConfig

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def suite(request, tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    lines = request.config.stash[ACCEPTANCE_LINES]

    def echo(line):
        lines.append(line)
        sys.__stdout__.write("\n" + line)
        sys.__stdout__.flush()

    crits = verify_all(ExperimentConfig(output_dir=str(out)), list(ALL), echo=echo)
    return {c.key: c for c in crits}, crits.errors, out


def test_no_criterion_errored(suite):
    crits, errors, _ = suite
    assert errors == []
    assert sorted(crits, key=lambda k: int(k[1:])) == list(ALL)


def test_reports_written(suite):
    crits, _, out = suite
    periodic = json.loads((out / "report_periodic.json").read_text())
    disk = json.loads((out / "report_disk.json").read_text())
    assert set(periodic["criteria"]) == {"A1", "A2", "A3", "A4", "A5", "A10"}
    assert set(disk["criteria"]) == {"A6", "A7", "A8", "A9"}
    assert len(periodic["runs"]) == 10
    assert (out / "borderline.csv").exists() and (out / "remainder.csv").exists()


@pytest.mark.xfail(strict=True, reason=PRE_ASYMPTOTIC)
def test_A1_double_regularity(suite):
    assert suite[0]["A1"].passed


def test_A1_runtime_and_seed_spread(suite):
    parts = suite[0]["A1"].parts
    assert parts["runtime"] and parts["seed_ratio"]


def test_A1_shortfall_documented(suite):
    assert suite[0]["A1"].known_shortfall


def test_A2_borderline(suite):
    assert suite[0]["A2"].passed


@pytest.mark.xfail(strict=True, reason=PRE_ASYMPTOTIC)
def test_A3_term_decay(suite):
    assert suite[0]["A3"].passed


def test_A3_splitting_identity(suite):
    assert suite[0]["A3"].parts["identity"]


@pytest.mark.parametrize("key", ["A4", "A5", "A6", "A7", "A8", "A9", "A10"])
def test_criterion(suite, key):
    c = suite[0][key]
    assert c.passed, c.line()
