"""Cost-model calculator and parameter optimizer.

phi(alpha, c) is the per-element cost base of one representative-family
reduction at fill ratio alpha with trade-off constant c.  Y1 and Y2 are the
per-element bases of the two DP stages, Y3 the base of the partition-family
enumeration; the solver's overall base is max(Y1, Y2) * Y3.  The optimizer
grid-searches (c_l, c_r, zeta) and bisects delta until Y1 = Y2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

DEFAULT_C = 1.0 + 1.0 / math.sqrt(5.0)
ALPHA_STAR = 1.0 - 1.0 / math.sqrt(5.0)
PHI_STAR = 1.5 + math.sqrt(5.0) / 2.0  # phi(ALPHA_STAR, DEFAULT_C)

DEFAULT_GRID = {
    "cl": (1.00, 1.40, 40),
    "cr": (1.40, 1.80, 40),
    "zeta": (0.10, 0.90, 80),
}
PAPER_POINT = (1.136, 1.645, 0.712)


def frange(a: float, b: float, steps: int) -> list[float]:
    """steps+1 evenly spaced values from a to b inclusive."""
    return [a + (b - a) * float(x) / steps for x in range(steps + 1)]


def phi(alpha: float, c: float) -> float:
    """c**(2-a) / (a**a * (c-a)**(2-2a)), with phi(0, c) = 1 by convention."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha = {alpha} outside [0, 1]")
    if c < 1.0:
        raise ValueError(f"c = {c} must be at least 1")
    if alpha >= c:
        raise ValueError(f"alpha = {alpha} must be below c = {c}")
    return _phi_raw(alpha, c)


def _phi_raw(alpha: float, c: float) -> float:
    # No domain guard; powers of 0 fall back to the 0**0 = 1 convention so the
    # grid corner alpha = c = 1 evaluates like the reference script.
    if alpha == 0.0:
        return 1.0
    return c ** (2.0 - alpha) / alpha**alpha / (c - alpha) ** (2.0 - 2.0 * alpha)


def _phi_array(alpha: np.ndarray, c: float) -> np.ndarray:
    # alpha == 0 needs no special case: the a**a factor is forced to 1.
    safe = np.where(alpha > 0.0, alpha, 1.0)
    return c ** (2.0 - alpha) / safe**alpha / (c - alpha) ** (2.0 - 2.0 * alpha)


def calc_Y1(
    delta: float,
    zeta: float,
    cl: float,
    cr: float,
    method: str = "fast",
    grid_steps: int = 1000,
    inner_steps: int = 300,
) -> float:
    """Stage-1 cost base.

    "fast" maximizes over the left fill ratio only, evaluating the right one
    on the constraint boundary zeta*delta/(1-delta+zeta*delta) * alpha_l; this
    matches the exhaustive 2-D maximum whenever the boundary stays inside the
    increasing range of phi_cr.  "exhaustive" scans the full constraint region
    (inner_steps+1 points per boundary segment, endpoint included).
    """
    lnum = (1.0 - zeta) * delta
    rnum = 1.0 - delta + zeta * delta
    ratio = zeta * delta / (1.0 - delta + zeta * delta)
    if method == "fast":
        best = 0.0
        for alphal in frange(0.0, 1.0, grid_steps):
            val = _phi_raw(alphal, cl) ** lnum * _phi_raw(ratio * alphal, cr) ** rnum
            if val > best:
                best = val
        return best
    if method == "exhaustive":
        al = np.array(frange(0.0, 1.0, grid_steps))
        fractions = np.arange(inner_steps + 1) / inner_steps
        ar = (ratio * al)[:, None] * fractions[None, :]
        left = _phi_array(al, cl) ** lnum
        right = _phi_array(ar, cr) ** rnum
        return float((left[:, None] * right).max())
    raise ValueError(f"unknown method {method!r}")


def argmax_Y1(
    delta: float, zeta: float, cl: float, cr: float, grid_steps: int = 1000
) -> tuple[float, float, float]:
    """(Y1, alpha_l, alpha_r) at the fast-method maximizer."""
    ratio = zeta * delta / (1.0 - delta + zeta * delta)
    lnum = (1.0 - zeta) * delta
    rnum = 1.0 - delta + zeta * delta
    best, best_al = 0.0, 0.0
    for alphal in frange(0.0, 1.0, grid_steps):
        val = _phi_raw(alphal, cl) ** lnum * _phi_raw(ratio * alphal, cr) ** rnum
        if val > best:
            best, best_al = val, alphal
    return best, best_al, ratio * best_al


def calc_Y2(delta: float, zeta: float) -> float:
    """Stage-2 cost base at the optimal constant: PHI_STAR**(1-delta+zeta*delta)."""
    rnum = 1.0 - delta + zeta * delta
    return PHI_STAR**rnum


def calc_Y3(delta: float, zeta: float) -> float:
    """Partition-family cost base; boundary powers use the 0**0 = 1 convention."""
    x = (1.0 - zeta) * delta
    return (zeta**zeta * (1.0 - zeta) ** (1.0 - zeta)) ** delta / x**x / (1.0 - x) ** (1.0 - x)


def special_case_bound(delta: float, zeta: float, cr: float, cprime: float) -> float:
    """Cost base of the stage handoff (build then reduce in one step).

    Evaluated at the handoff fill ratio alpha = zeta*delta/(1-delta+zeta*delta);
    must stay below calc_Y2 for the stated stage-2 base to dominate.
    """
    rnum = 1.0 - delta + zeta * delta
    alpha = zeta * delta / rnum
    if alpha >= min(cr, cprime):
        raise ValueError(f"alpha = {alpha} must be below min(cr, cprime)")
    base = (
        cr
        * cprime ** (1.0 - alpha)
        / (alpha**alpha * (cr - alpha) ** (1.0 - alpha) * (cprime - alpha) ** (1.0 - alpha))
    )
    return base**rnum


@dataclass(frozen=True)
class OptResult:
    best_y: float
    c_l: float
    c_r: float
    zeta: float
    delta: float
    y1: float
    y2: float
    y3: float
    alpha_l: float
    alpha_r: float
    alpha_tail: float
    grid: dict
    trace: Optional[list] = None

    def to_json(self) -> str:
        doc = {
            "best_Y": self.best_y,
            "cl": self.c_l,
            "cr": self.c_r,
            "zeta": self.zeta,
            "delta": self.delta,
        }
        return json.dumps(doc, sort_keys=True)

    def to_plain(self) -> str:
        return f"{self.best_y!r}\n{[self.c_l, self.c_r, self.zeta, self.delta]!r}"


def _bisect_row(
    cl: float,
    cr: float,
    zetas: np.ndarray,
    log_phi_cl: np.ndarray,
    grid: np.ndarray,
    iters: int,
    lo: float,
    hi: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vector bisection of delta over one (cl, cr) row of zeta values.

    Replicates the scalar loop: delta moves toward the Y1 = Y2 crossing, and
    the returned Y1 is the one evaluated at the final midpoint.
    """
    a = np.full_like(zetas, lo)
    b = np.full_like(zetas, hi)
    delta = zetas * 0.0
    log_y1 = zetas * 0.0
    log_phistar = math.log(PHI_STAR)
    for _ in range(iters):
        delta = (a + b) / 2.0
        e_l = (1.0 - zetas) * delta
        e_r = 1.0 - delta + zetas * delta
        ratio = zetas * delta / e_r
        ar = ratio[:, None] * grid[None, :]
        safe = np.where(ar > 0.0, ar, 1.0)
        log_phi_cr = (
            (2.0 - ar) * math.log(cr)
            - ar * np.log(safe)
            - (2.0 - 2.0 * ar) * np.log(cr - ar)
        )
        log_y1 = (e_l[:, None] * log_phi_cl[None, :] + e_r[:, None] * log_phi_cr).max(axis=1)
        log_y2 = e_r * log_phistar
        gt = log_y1 > log_y2
        b = np.where(gt, delta, b)
        a = np.where(gt, a, delta)
    return delta, np.exp(log_y1)


def optimize(
    cl_range: Optional[Sequence[float]] = None,
    cr_range: Optional[Sequence[float]] = None,
    zeta_range: Optional[Sequence[float]] = None,
    bisection_iters: int = 30,
    delta_bounds: tuple[float, float] = (0.25, 0.75),
    coarsen: int = 1,
    pin_paper_point: bool = False,
    grid_steps: int = 1000,
    collect_trace: bool = False,
) -> OptResult:
    """Grid search (c_l, c_r, zeta) with per-cell bisection of delta.

    Each cell's score is Y1 * Y3 at the delta where Y1 = Y2; the best cell
    wins, ties going to the earliest cell in (c_l, c_r, zeta) order.  Default
    ranges follow the reference grid, optionally coarsened; pin_paper_point
    appends the published parameter point as one extra cell.
    """

    def default_range(key: str) -> list[float]:
        a, b, steps = DEFAULT_GRID[key]
        return frange(a, b, max(1, steps // max(1, coarsen)))

    cls = list(cl_range) if cl_range is not None else default_range("cl")
    crs = list(cr_range) if cr_range is not None else default_range("cr")
    zetas = list(zeta_range) if zeta_range is not None else default_range("zeta")
    lo, hi = delta_bounds

    rows: list[tuple[float, float, list[float]]] = []
    for cl in cls:
        for cr in crs:
            rows.append((cl, cr, zetas))
    if pin_paper_point:
        rows.append((PAPER_POINT[0], PAPER_POINT[1], [PAPER_POINT[2]]))

    grid = np.array(frange(0.0, 1.0, grid_steps))
    trace: Optional[list] = [] if collect_trace else None
    best_y = math.inf
    best: Optional[tuple[float, float, float, float, float]] = None
    log_cl_cache: dict[float, np.ndarray] = {}

    for cl, cr, zs in rows:
        log_phi_cl = log_cl_cache.get(cl)
        if log_phi_cl is None:
            log_phi_cl = np.log(_phi_array(grid, cl))
            log_cl_cache[cl] = log_phi_cl
        zarr = np.array(zs, dtype=float)
        delta, y1 = _bisect_row(cl, cr, zarr, log_phi_cl, grid, bisection_iters, lo, hi)
        x = (1.0 - zarr) * delta
        y3 = (zarr**zarr * (1.0 - zarr) ** (1.0 - zarr)) ** delta / x**x / (1.0 - x) ** (1.0 - x)
        y = y1 * y3
        if collect_trace:
            for j, z in enumerate(zs):
                trace.append((cl, cr, z, float(delta[j]), float(y[j])))
        j = int(np.argmin(y))
        if float(y[j]) < best_y:
            best_y = float(y[j])
            best = (cl, cr, float(zarr[j]), float(delta[j]), float(y1[j]))

    assert best is not None, "empty grid"
    cl, cr, zeta, delta, _ = best
    y1, alpha_l, alpha_r = argmax_Y1(delta, zeta, cl, cr, grid_steps=grid_steps)
    y2 = calc_Y2(delta, zeta)
    y3 = calc_Y3(delta, zeta)
    return OptResult(
        best_y=y1 * y3,
        c_l=cl,
        c_r=cr,
        zeta=zeta,
        delta=delta,
        y1=y1,
        y2=y2,
        y3=y3,
        alpha_l=alpha_l,
        alpha_r=alpha_r,
        alpha_tail=ALPHA_STAR,
        grid={
            "cl": cls,
            "cr": crs,
            "zeta": zetas,
            "bisection_iters": bisection_iters,
            "pinned": bool(pin_paper_point),
        },
        trace=trace,
    )
