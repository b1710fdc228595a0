import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdqeval.bvn import bvn_cdf, normal_interval, rect_prob
from pdqeval.errors import NonPSDCovariance
from pdqeval.model import AxisAlignedBox, GaussianCorner
from pdqeval.spatial import bvn_rect_prob

from naive import simpson_rect_prob

INF = math.inf


def test_quadrant_of_standard_normal():
    p = bvn_rect_prob(GaussianCorner((0, 0), np.eye(2)), AxisAlignedBox(0, 0, INF, INF))
    assert p == pytest.approx(0.25, abs=1e-12)


def test_total_mass_is_one():
    cov = np.array([[2.0, 0.7], [0.7, 1.0]])
    p = bvn_rect_prob(GaussianCorner((3, -1), cov), AxisAlignedBox(-INF, -INF, INF, INF))
    assert p == pytest.approx(1.0, abs=1e-12)


def test_correlated_unit_square_matches_oracle():
    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    p = bvn_rect_prob(GaussianCorner((0, 0), cov), AxisAlignedBox(0, 0, 1, 1))
    assert p == pytest.approx(simpson_rect_prob((0, 0), cov, 0, 1, 0, 1), abs=1e-5)


def test_orthant_closed_form():
    # P(X<=0, Y<=0) = 1/4 + asin(r) / (2 pi)
    for r in (-0.95, -0.5, 0.0, 0.3, 0.93, 0.99):
        assert float(bvn_cdf(0.0, 0.0, r)) == pytest.approx(0.25 + math.asin(r) / (2 * math.pi), abs=1e-14)


def test_infinite_limits():
    assert float(bvn_cdf(-INF, 0.3, 0.5)) == 0.0
    assert float(bvn_cdf(INF, 0.0, 0.5)) == pytest.approx(0.5)


def test_zero_variance_is_indicator():
    assert float(normal_interval(2.0, 0.0, 1.5, 2.5)) == 1.0
    assert float(normal_interval(2.0, 0.0, 2.5, 3.5)) == 0.0


def test_non_psd_rejected():
    with pytest.raises(NonPSDCovariance):
        bvn_rect_prob(GaussianCorner((0, 0), np.array([[1.0, 2.0], [2.0, 1.0]])), AxisAlignedBox(0, 0, 1, 1))


def test_vectorised_matches_scalar():
    cov = np.array([[4.0, -1.5], [-1.5, 2.0]])
    lo = np.array([-1.0, 0.0, 2.0])
    hi = lo + 1.5
    vec = rect_prob((0.5, 0.2), cov, lo, hi, lo, hi)
    for i in range(3):
        assert vec[i] == pytest.approx(float(rect_prob((0.5, 0.2), cov, lo[i], hi[i], lo[i], hi[i])), abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    mx=st.floats(-5, 5), my=st.floats(-5, 5),
    sx=st.floats(0.3, 4), sy=st.floats(0.3, 4), rho=st.floats(-0.9, 0.9),
    x0=st.floats(-10, 10), y0=st.floats(-10, 10), w=st.floats(0, 12), h=st.floats(0, 12),
)
def test_matches_quadrature(mx, my, sx, sy, rho, x0, y0, w, h):
    cov = np.array([[sx * sx, rho * sx * sy], [rho * sx * sy, sy * sy]])
    p = bvn_rect_prob(GaussianCorner((mx, my), cov), AxisAlignedBox(x0, y0, x0 + w, y0 + h))
    assert abs(p - simpson_rect_prob((mx, my), cov, x0, x0 + w, y0, y0 + h)) <= 1e-5
    assert 0.0 <= p <= 1.0
