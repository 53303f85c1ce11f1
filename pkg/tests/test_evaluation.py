import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppgglu import errors
from ppgglu.acceptance import naive_metrics, painted_zone_map
from ppgglu.evaluation import (
    ZONES,
    ceg_csv,
    ceg_summary,
    ceg_zone,
    ceg_zones,
    compute_metrics,
    compute_metrics_basic,
    folds_text,
    from_px,
    metrics_csv,
    render_report,
    to_px,
)
from ppgglu.training import FoldResult

glucose = st.floats(1.0, 600.0, allow_nan=False)
vectors = st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.floats(20, 500), min_size=n, max_size=n),
    st.lists(st.floats(1, 600), min_size=n, max_size=n)))


def test_perfect_predictions():
    r = np.array([80.0, 120.0, 200.0])
    m = compute_metrics(r, r)
    assert (m.mae_mgdl, m.mape_percent, m.rmse_mgdl, m.r2) == (0, 0, 0, 1)
    assert ceg_summary(r, r).percents["A"] == 100


def test_constant_reference_example():
    refs, preds = [100, 100, 100, 100], [103, 97, 100, 104]
    b = compute_metrics_basic(refs, preds)
    assert b["mae"] == 2.5 and b["mse"] == 8.5 and b["rmse"] == pytest.approx(2.9155, abs=1e-4)
    with pytest.raises(errors.ConstantReference) as info:
        compute_metrics(refs, preds)
    assert info.value.partial == b


def test_mape_example():
    assert compute_metrics([100, 200], [110, 180]).mape_percent == pytest.approx(10.0)


def test_metric_errors():
    with pytest.raises(errors.EmptyInput):
        compute_metrics([], [])
    with pytest.raises(errors.ZeroReference):
        compute_metrics([0, 100], [5, 100])
    with pytest.raises(errors.InputError):
        compute_metrics([1, 2], [1, 2, 3])


@given(vectors)
def test_metric_invariants(v):
    r, p = np.array(v[0]), np.array(v[1])
    if np.ptp(r) == 0:
        return
    m = compute_metrics(r, p)
    assert m.rmse_mgdl ** 2 == pytest.approx(m.mse_mgdl2, rel=1e-9)
    assert m.mae_mgdl <= m.rmse_mgdl * (1 + 1e-12) <= np.max(np.abs(p - r)) * (1 + 1e-9)
    assert m.r2 <= 1


@given(vectors)
def test_metrics_match_plain_python(v):
    r, p = v
    if max(r) == min(r):
        return
    m = compute_metrics(r, p)
    ref = naive_metrics(r, p)
    for got, key in ((m.mae_mgdl, "mae"), (m.mse_mgdl2, "mse"), (m.rmse_mgdl, "rmse"),
                     (m.mape_percent, "mape"), (m.r2, "r2")):
        assert got == pytest.approx(ref[key], rel=1e-12, abs=1e-12)


# -- Clarke grid -------------------------------------------------------------

@pytest.mark.parametrize("ref, pred, zone", [
    (100, 115, "A"), (60, 65, "A"), (200, 60, "E"), (250, 100, "D"), (100, 215, "C"),
    (100, 120, "A"), (100, 121, "B"), (70, 70, "A"), (50, 75, "D"), (65, 200, "E"),
    (150, 20, "C"), (300, 150, "D"),
])
def test_zone_examples(ref, pred, zone):
    assert ceg_zone(ref, pred) == zone


def test_summary_example():
    s = ceg_summary([100, 60, 200], [115, 65, 60])
    assert s.counts == {"A": 2, "B": 0, "C": 0, "D": 0, "E": 1} and s.n == 3
    assert sum(s.percents.values()) == pytest.approx(100, abs=1e-9)


def test_zone_grid_matches_painted_oracle():
    g = np.arange(1, 601)
    R, P = np.meshgrid(g, g, indexing="ij")
    assert np.array_equal(ceg_zones(R.ravel(), P.ravel()).reshape(R.shape), painted_zone_map())


@given(glucose, glucose)
def test_vector_and_scalar_agree(r, p):
    assert ceg_zones([r], [p])[0] == ceg_zone(r, p)


@given(st.floats(71, 500), st.floats(-0.2, 0.2), st.floats(0.05, 20))
def test_zone_a_relative_branch_scales(ref, rel, c):
    pred = ref * (1 + rel)
    if 5 * abs(pred - ref) <= ref and 0 < c * ref <= 600 and 0 < c * pred <= 600:
        assert ceg_zone(c * ref, c * pred) == "A"


@given(st.lists(st.tuples(glucose, glucose), min_size=1, max_size=50))
def test_summary_counts(pairs):
    r, p = zip(*pairs)
    s = ceg_summary(r, p)
    assert sum(s.counts.values()) == s.n == len(pairs)
    assert sum(s.percents.values()) == pytest.approx(100, abs=1e-9)


@pytest.mark.parametrize("ref, pred", [(0, 100), (100, 601), (-5, 50)])
def test_zone_range(ref, pred):
    with pytest.raises(errors.OutOfPhysiologicalRange):
        ceg_zone(ref, pred)
    with pytest.raises(errors.OutOfPhysiologicalRange):
        ceg_zones([ref], [pred])


# -- rendering ---------------------------------------------------------------

def report_metrics():
    return compute_metrics([100, 150, 200, 90], [104, 147, 190, 95])


def test_text_metrics_order():
    lines = render_report(report_metrics(), fmt="text").decode().splitlines()
    assert [ln.split()[0] for ln in lines] == ["MAE", "MAPE", "R2", "RMSE"]


def test_csv_headers():
    assert metrics_csv(report_metrics()).splitlines()[0] == "mae_mgdl,mape_pct,r2,rmse_mgdl"
    lines = ceg_csv(ceg_summary([100, 100], [100, 100])).splitlines()
    assert lines[0] == "zone,count,percent" and lines[1] == "A,2,100.0"
    assert [ln.split(",")[0] for ln in lines[1:]] == list(ZONES)


def test_svg_identity_point():
    svg = render_report(None, ceg_summary([100], [100]), fmt="svg").decode()
    root = ET.fromstring(svg)
    ns = {"s": "http://www.w3.org/2000/svg"}
    assert root.get("version") == "1.1" and root.get("viewBox") == "0 0 600 600"
    pts = root.findall("s:circle[@class='point']", ns)
    assert len(pts) == 1
    x, y = float(pts[0].get("cx")), float(pts[0].get("cy"))
    ref, pred = from_px(x, y)
    assert ref == pytest.approx(100) and pred == pytest.approx(100)
    assert ceg_zone(ref, pred) == "A"
    assert len(root.findall("s:polyline[@class='zone-boundary']", ns)) >= 10


@given(st.floats(0, 400), st.floats(0, 400))
def test_px_round_trip(r, p):
    assert from_px(*to_px(r, p)) == pytest.approx((r, p), abs=1e-9)


def test_zone_boundaries_separate_zones():
    # each boundary segment midpoint, nudged either side, lands in different zones
    from ppgglu.evaluation import CEG_LINES
    for x0, y0, x1, y1 in CEG_LINES:
        mx, my = (x0 + x1) / 2, (y0 + y1) / 2
        nx, ny = -(y1 - y0), x1 - x0
        norm = np.hypot(nx, ny)
        a = ceg_zone(mx + 0.5 * nx / norm, my + 0.5 * ny / norm)
        b = ceg_zone(mx - 0.5 * nx / norm, my - 0.5 * ny / norm)
        assert a != b, (x0, y0, x1, y1)


def test_unsupported_format():
    with pytest.raises(errors.UnsupportedFormat):
        render_report(report_metrics(), fmt="pdf")
    with pytest.raises(errors.UnsupportedFormat):
        render_report(report_metrics(), fmt="svg")


def test_folds_table_marks():
    folds = [FoldResult(1, 2.0, 3.0), FoldResult(2, 0.8, 2.5), FoldResult(3, 1.5, 1.3)]
    lines = folds_text(folds).splitlines()
    assert re.sub(r"\s+", " ", lines[0]).strip() == "Fold No. | MAE (mg/dL) | RMSE (mg/dL)"
    assert "0.8000*" in lines[2] and "1.3000*" in lines[3]
    assert "*" not in lines[1]
    assert [ln.split("|")[0].strip() for ln in lines[4:]] == ["mean", "min", "max"]
