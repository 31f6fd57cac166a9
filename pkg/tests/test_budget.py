import numpy as np
import pytest
from hypothesis import given, strategies as st

from tritter.budget import (
    MEASURED,
    OPTIMIZED,
    BudgetPipeline,
    downstream_rate,
    ideal_conversion,
    model_source_rate,
    n_photon_source_rate,
    projection,
    tables_to_csv,
)

eff = st.floats(0.0, 1.0)


def test_measured_source_override_and_model():
    assert n_photon_source_rate(MEASURED) == 3800.0
    model = model_source_rate(MEASURED)
    assert np.isclose(model, 324e6 * (0.07 * 0.63) ** 3 * 0.25)
    assert 3800 / 2 <= model <= 3800 * 2
    assert 1.7 < model / 3800 < 1.9


def test_unit_pipeline():
    p = BudgetPipeline(1.0, 1.0, 1.0, 1.0, 1.0, n=3, demux_conversion=1.0)
    t = projection(p)
    assert n_photon_source_rate(p) == 1.0
    assert t.source_generated == t.source_detected == t.chip_generated == t.chip_detected == 1.0
    q = BudgetPipeline(5e8, 1.0, 1.0, 1.0, 1.0, n=7, demux_conversion=1.0)
    assert all(r == 5e8 for _, g, d in projection(q).rows() for r in (g, d))


def test_downstream_values():
    assert np.isclose(downstream_rate(3800, 0.30, 3), 102.6)
    assert abs(downstream_rate(3800, 0.30, 3) / 105 - 1) <= 0.05
    assert abs(downstream_rate(3800, 0.17, 3) / 19 - 1) <= 0.05
    assert abs(downstream_rate(19, 0.30, 3) / 0.5 - 1) <= 0.05
    with pytest.raises(ValueError):
        downstream_rate(1.0, 1.5, 3)


def test_measured_table_ratios():
    t = projection(MEASURED)
    assert abs((t.source_detected / t.source_generated) / (105 / 3800) - 1) <= 0.05
    assert abs((t.chip_generated / t.source_generated) / (19 / 3800) - 1) <= 0.05
    assert abs((t.chip_detected / t.chip_generated) / (0.5 / 19) - 1) <= 0.05


def test_optimized_projection():
    t3 = projection(OPTIMIZED)
    assert 4.0e6 / 2 <= t3.chip_detected <= 4.0e6 * 2
    assert np.isclose(t3.conversion, 1 / 3)
    t10 = projection(OPTIMIZED.with_n(10))
    assert np.isclose(t10.conversion, 0.1)
    assert 40 / 3 <= t10.chip_detected <= 40 * 3


def test_cascaded_conversion_for_reference():
    assert np.isclose(ideal_conversion(3, "cascaded-binary"), 0.25)
    assert np.isclose(ideal_conversion(10, "cascaded-binary"), 1 / 512)
    assert np.isclose(ideal_conversion(10, "equal-slot"), 0.1)
    with pytest.raises(ValueError):
        ideal_conversion(3, "nope")


@given(eff, eff, eff, eff, st.floats(0.0, 0.5), st.integers(1, 12))
def test_monotone_in_efficiencies(b, t, c, d, bump, n):
    base = BudgetPipeline(1e9, b, t, c, d, n=n, demux_conversion=0.5)
    rows = projection(base).as_dict()
    for name in ("fibered_brightness", "demux_transmission", "chip_transmission", "det_efficiency"):
        kw = {name: min(1.0, getattr(base, name) + bump)}
        more = projection(BudgetPipeline(**{**base.__dict__, **kw})).as_dict()
        for key in ("source_generated_hz", "source_detected_hz", "chip_generated_hz", "chip_detected_hz"):
            assert more[key] >= rows[key] * (1 - 1e-12)
    faster = projection(BudgetPipeline(**{**base.__dict__, "rep_rate": 2e9})).as_dict()
    assert faster["chip_detected_hz"] >= rows["chip_detected_hz"]


@given(st.floats(0, 1e9), eff, eff, st.integers(1, 12))
def test_chaining_is_associative(rate, a, b, n):
    chained = downstream_rate(downstream_rate(rate, a, n), b, n)
    assert np.isclose(chained, downstream_rate(rate, a * b, n), rtol=1e-12, atol=1e-300)


def test_validation():
    with pytest.raises(ValueError):
        BudgetPipeline(0.0, 0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        BudgetPipeline(1e6, 1.2, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        BudgetPipeline(1e6, 0.5, 0.5, 0.5, 0.5, n=0)
    with pytest.raises(ValueError):
        BudgetPipeline(1e6, 0.5, 0.5, 0.5, 0.5, demux_conversion=2.0)


def test_csv_rows():
    text = tables_to_csv([projection(MEASURED), projection(OPTIMIZED)])
    lines = text.strip().splitlines()
    assert lines[0] == "pipeline,n,stage,generated_hz,detected_hz"
    assert len(lines) == 5
    assert lines[1].startswith("measured,3,source,3800,")
