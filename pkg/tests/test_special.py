import math

import numpy as np
import pytest
from scipy import special as sp

from ddfsim.special import gammainc_lower


def test_matches_scipy_over_wide_range():
    rng = np.random.default_rng(0)
    for _ in range(500):
        a = float(10 ** rng.uniform(-2, 3))
        x = float(10 ** rng.uniform(-3, 3.3))
        ours = gammainc_lower(a, x)
        ref = float(sp.gammainc(a, x))
        assert ours == pytest.approx(ref, abs=1e-12, rel=1e-10)


def test_known_values():
    # P(1, x) = 1 - exp(-x)
    for x in (0.1, 1.0, 5.0):
        assert gammainc_lower(1.0, x) == pytest.approx(1 - math.exp(-x), rel=1e-12)
    assert gammainc_lower(3.0, 0.0) == 0.0
    # median-ish point of Gamma(k): P(k, k) ~ 1/2 for large k
    assert 0.4 < gammainc_lower(64.0, 64.0) < 0.6


def test_edge_cases():
    with pytest.raises(ValueError):
        gammainc_lower(0.0, 1.0)
    with pytest.raises(ValueError):
        gammainc_lower(1.0, -0.5)
    assert gammainc_lower(5.0, 1e6) == pytest.approx(1.0)
    # deep lower tail underflows gracefully instead of raising
    assert 0.0 <= gammainc_lower(200.0, 1.0) < 1e-100
