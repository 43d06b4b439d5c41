"""Cost-model functions and the parameter optimizer.

Golden numeric values below 1 were verified against the published constants;
cross-implementation checks re-derive the same formulas independently.
"""

from __future__ import annotations

import math
import random

import pytest

from kpath.analysis import (
    ALPHA_STAR,
    DEFAULT_C,
    PHI_STAR,
    OptResult,
    argmax_Y1,
    calc_Y1,
    calc_Y2,
    calc_Y3,
    frange,
    optimize,
    phi,
    special_case_bound,
)

PAPER_DELTA = 0.49533
PAPER_ZETA = 0.712
PAPER_CL = 1.136
PAPER_CR = 1.645


def test_frange_matches_reference_semantics():
    assert frange(0.0, 1.0, 4) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(frange(0.0, 1.0, 1000)) == 1001


def test_phi_golden_values():
    assert phi(0.0, 1.3) == 1.0
    assert phi(0.0, DEFAULT_C) == 1.0
    assert abs(phi(ALPHA_STAR, DEFAULT_C) - (1.5 + math.sqrt(5) / 2)) < 1e-9
    assert phi(1.0 / 3.0, DEFAULT_C) <= 2.313


def test_phi_domain_errors():
    with pytest.raises(ValueError):
        phi(-0.1, 1.5)
    with pytest.raises(ValueError):
        phi(1.1, 1.5)
    with pytest.raises(ValueError):
        phi(0.5, 0.9)
    with pytest.raises(ValueError):
        phi(1.0, 1.0)


def test_phi_continuous_and_above_one():
    for i in range(10_000):
        a = i / 9_999.0
        v = phi(min(a, 1.0), DEFAULT_C)
        assert math.isfinite(v)
        assert v >= 1.0 - 1e-12


def test_phi_argmax_at_alpha_star():
    grid = frange(0.0, 1.0, 2000)
    best = max(grid, key=lambda a: phi(a, DEFAULT_C))
    assert abs(best - ALPHA_STAR) <= 1.0 / 2000 + 1e-12


def test_y1_fast_equals_exhaustive_on_samples():
    rng = random.Random(4)
    checked = 0
    for _ in range(140):
        delta = rng.uniform(0.3, 0.7)
        zeta = rng.uniform(0.2, 0.85)
        cl = rng.uniform(1.02, 1.4)
        cr = rng.uniform(1.4, 1.8)
        # the fast method is exact while the constraint boundary stays in the
        # increasing range of phi_cr
        if zeta * delta / (1 - delta + zeta * delta) >= 0.5:
            continue
        fast = calc_Y1(delta, zeta, cl, cr, method="fast")
        full = calc_Y1(delta, zeta, cl, cr, method="exhaustive")
        assert abs(fast - full) < 1e-6, (delta, zeta, cl, cr)
        checked += 1
    assert checked >= 100


def test_y1_limit_small_delta():
    assert calc_Y1(1e-9, 0.5, 1.2, 1.6) == pytest.approx(1.0, abs=1e-6)


def test_y2_closed_form_matches_phi():
    for delta, zeta in [(PAPER_DELTA, PAPER_ZETA), (0.3, 0.4), (0.6, 0.8)]:
        exponent = 1 - delta + zeta * delta
        assert abs(calc_Y2(delta, zeta) - phi(ALPHA_STAR, DEFAULT_C) ** exponent) < 1e-9


def test_y2_golden_value():
    assert calc_Y2(PAPER_DELTA, PAPER_ZETA) == pytest.approx(2.2822, abs=1e-4)
    assert calc_Y2(1e-12, 0.5) == pytest.approx(PHI_STAR, rel=1e-9)


def test_y3_matches_reference_transliteration():
    def reference_y3(delta, zeta):
        x = (1 - zeta) * delta
        return (zeta**zeta * (1 - zeta) ** (1 - zeta)) ** delta / x**x / (1 - x) ** (1 - x)

    rng = random.Random(8)
    for _ in range(100):
        delta = rng.uniform(0.01, 0.99)
        zeta = rng.uniform(0.01, 0.99)
        assert abs(calc_Y3(delta, zeta) - reference_y3(delta, zeta)) < 1e-12


def test_y3_limit():
    assert calc_Y3(1e-12, 0.5) == pytest.approx(1.0, abs=1e-9)


def test_special_case_below_y2_at_paper_point():
    bound = special_case_bound(PAPER_DELTA, PAPER_ZETA, PAPER_CR, DEFAULT_C)
    assert bound < calc_Y2(PAPER_DELTA, PAPER_ZETA)


def test_special_case_monotone_near_zero():
    vals = [special_case_bound(PAPER_DELTA, z, PAPER_CR, DEFAULT_C) for z in frange(0.01, 0.2, 50)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    tiny = special_case_bound(PAPER_DELTA, 1e-9, PAPER_CR, DEFAULT_C)
    assert math.isfinite(tiny)


def test_paper_point_value():
    y1 = calc_Y1(PAPER_DELTA, PAPER_ZETA, PAPER_CL, PAPER_CR)
    y2 = calc_Y2(PAPER_DELTA, PAPER_ZETA)
    y3 = calc_Y3(PAPER_DELTA, PAPER_ZETA)
    assert max(y1, y2) * y3 < 2.5537


def test_bisection_converges():
    result = optimize(
        cl_range=[PAPER_CL], cr_range=[PAPER_CR], zeta_range=[PAPER_ZETA]
    )
    assert abs(result.y1 - result.y2) < 1e-6
    assert result.best_y < 2.5537
    assert result.delta == pytest.approx(PAPER_DELTA, abs=1e-3)


def test_optimize_single_point_matches_direct_product():
    result = optimize(cl_range=[PAPER_CL], cr_range=[PAPER_CR], zeta_range=[PAPER_ZETA])
    direct = calc_Y1(result.delta, PAPER_ZETA, PAPER_CL, PAPER_CR) * calc_Y3(
        result.delta, PAPER_ZETA
    )
    assert result.best_y == pytest.approx(direct, abs=1e-9)


def test_optimize_reports_maximizers():
    result = optimize(cl_range=[PAPER_CL], cr_range=[PAPER_CR], zeta_range=[PAPER_ZETA])
    assert result.alpha_l == pytest.approx(0.864, abs=2e-3)
    assert result.alpha_r == pytest.approx(0.356, abs=2e-3)
    assert result.alpha_tail == pytest.approx(0.553, abs=1e-3)


def test_optimize_deterministic():
    a = optimize(coarsen=4, pin_paper_point=True)
    b = optimize(coarsen=4, pin_paper_point=True)
    assert a.to_json() == b.to_json()


def test_optimize_output_shapes():
    result = optimize(cl_range=[1.1], cr_range=[1.6], zeta_range=[0.5])
    import json

    doc = json.loads(result.to_json())
    assert set(doc) == {"best_Y", "cl", "cr", "zeta", "delta"}
    plain = result.to_plain().splitlines()
    assert len(plain) == 2
    assert plain[0] == repr(result.best_y)
    assert plain[1] == repr([result.c_l, result.c_r, result.zeta, result.delta])
