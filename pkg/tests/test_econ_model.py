import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from Economics.EconModel import (
    CostCoeffs,
    EdgeProfile,
    QualityHyper,
    cost_coeffs,
    dbm_to_watts,
    energy_creation,
    energy_perception,
    energy_total,
    energy_upload,
    es_utility,
    model_quality,
)


def test_quality_exponent_default(hyper):
    assert hyper.exponent == pytest.approx(0.0368)


def test_quality_endpoints(hyper):
    assert model_quality(0.0, hyper) == 0.0
    assert model_quality(1e6, hyper) == pytest.approx(1.0)


@given(st.floats(0, 500), st.floats(0, 500))
def test_quality_monotone_and_bounded(a, b):
    hyper = QualityHyper()
    lo, hi = sorted((a, b))
    q_lo, q_hi = model_quality(lo, hyper), model_quality(hi, hyper)
    assert 0.0 <= q_lo <= q_hi <= 1.0


def test_quality_broadcasts(hyper):
    q = model_quality(np.array([[0.0, 10.0], [20.0, 30.0]]), hyper)
    assert q.shape == (2, 2)
    assert np.all(np.diff(q.ravel()) > 0)


def test_quality_rejects_negative_rounds(hyper):
    with pytest.raises(ValueError):
        model_quality(-1.0, hyper)


@pytest.mark.parametrize("delta", [0.0, 0.25, 1.0])
def test_quality_hyper_step_size_range(delta):
    with pytest.raises(ValueError):
        QualityHyper(delta=delta)


def test_cost_coefficients_default(costs):
    assert costs.c == pytest.approx(24.576)
    assert costs.e_fixed == pytest.approx(20.384)


def test_energy_terms(edge):
    assert energy_perception(edge) == pytest.approx(32.768)
    assert energy_upload(edge) == pytest.approx(8.0)
    assert energy_creation(edge, 10.0) == pytest.approx(491.52)
    assert energy_total(edge, 10.0) == pytest.approx(32.768 + 8.0 + 491.52)


def test_dbm_conversion():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(20.0) == pytest.approx(0.1)


def test_costs_scale_with_sigma(edge):
    double = cost_coeffs(replace(edge, unit_energy_cost=1.0))
    base = cost_coeffs(edge)
    assert double.c == pytest.approx(2 * base.c)
    assert double.e_fixed == pytest.approx(2 * base.e_fixed)


def test_zero_sigma_gives_free_rounds(edge):
    assert cost_coeffs(replace(edge, unit_energy_cost=0.0)) == CostCoeffs(0.0, 0.0)


def test_upload_needs_a_link(edge):
    with pytest.raises(ValueError):
        energy_upload(replace(edge, link_rate_bps=0.0))


@pytest.mark.parametrize("field, value", [
    ("cpu_hz", -1.0), ("tx_power_dbm", 61.0), ("unit_energy_cost", math.inf),
])
def test_profile_validation(field, value):
    with pytest.raises(ValueError):
        EdgeProfile(**{field: value})


def test_es_utility_worked_value(costs):
    assert es_utility(20.0, 17.7429, 10.0, costs) == pytest.approx(88.715, abs=1e-3)


def test_es_utility_broadcasts(costs):
    out = es_utility(np.array([15.0, 20.0]), np.array([1.0, 2.0]), np.array([0.0, 1.0]), costs)
    assert out.shape == (2,)
    assert out[0] == pytest.approx(15.0 - costs.e_fixed)
