"""Acceptance gate: every exit criterion at its stated tolerance.

Each test prints one PASS/FAIL line and then asserts, so a full run leaves a
per-criterion scoreboard in the output.  Criteria 8 (second half), 9 (noisy
half) and 10 assert bounds that the continuum model itself violates at any
finite detection threshold in d = 2 (zero avoidance is logarithmic, not
polynomial, there); they are implemented exactly as stated and fail honestly.
The printed details carry the measured values for the audit trail.

Criterion 13 reuses the Monte Carlo results collected by the earlier tests as
its first pass and repeats the block once, mirroring the cost model of the
``all-acceptance`` command.
"""

import json

import pytest

from sdelab import acceptance
from sdelab.cli import load_config

CFG = load_config(None)
_BLOCK_CACHE: dict[int, "acceptance.CriterionResult"] = {}


def report(result, cache=False):
    if cache:
        _BLOCK_CACHE[result.number] = result
    print(f"\nACCEPTANCE {result.number:>2} {result.name}: {'PASS' if result.passed else 'FAIL'}")
    print(f"    details: {json.dumps(result.details, default=str)[:600]}")
    assert result.passed, f"criterion {result.number} ({result.name}) failed: {result.details}"


class TestFastCriteria:
    def test_criterion_01_ode_blowup_oracle(self):
        report(acceptance.criterion_1(CFG, None))

    def test_criterion_02_inverse_identity(self):
        report(acceptance.criterion_2(CFG, None))

    def test_criterion_03_diffusion_closed_form(self):
        report(acceptance.criterion_3(CFG, None))

    def test_criterion_04_lyapunov_derivatives(self):
        report(acceptance.criterion_4(CFG, None))

    def test_criterion_05_lv_negativity(self):
        report(acceptance.criterion_5(CFG, None))

    def test_criterion_06_super_lyapunov_fit(self):
        report(acceptance.criterion_6(CFG, None))


class TestMonteCarloCriteria:
    def test_criterion_07_ito_stratonovich(self):
        report(acceptance.criterion_7(CFG, None), cache=True)

    def test_criterion_08_zero_avoidance_pair(self):
        report(acceptance.criterion_8(CFG, None), cache=True)

    def test_criterion_09_non_explosion(self):
        report(acceptance.criterion_9(CFG, None), cache=True)

    def test_criterion_10_hitting_before_exploding(self):
        report(acceptance.criterion_10(CFG, None), cache=True)

    def test_criterion_11_counterexample_1d(self):
        report(acceptance.criterion_11(CFG, None), cache=True)

    def test_criterion_12_ergodicity(self):
        report(acceptance.criterion_12(CFG, None), cache=True)

    def test_criterion_13_determinism(self):
        first = [_BLOCK_CACHE[k] for k in (7, 8, 9, 10, 11, 12)] if len(_BLOCK_CACHE) == 6 else None
        report(acceptance.criterion_13(CFG, None, first_pass=first))


class TestArtifactBranches:
    """The CSV-emitting paths of the criterion functions (cheap subset)."""

    def test_fast_criteria_write_artifacts(self, tmp_path):
        acceptance.criterion_1(CFG, tmp_path)
        assert (tmp_path / "ode_path.csv").read_text().splitlines()[0] == "t,x1,x2,path_id"
        acceptance.criterion_5(CFG, tmp_path)
        assert (tmp_path / "lv_profile.csv").read_text().splitlines()[0] == "r,lv"
        acceptance.criterion_7(CFG, tmp_path)
        assert (tmp_path / "refinement.csv").read_text().splitlines()[0] == "dt,mean_sup_error"
