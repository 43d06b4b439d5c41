"""k-path and k-(s,t)-path solvers.

Three modes: exhaustive search (the oracle), a representative-family DP over
the whole vertex set, and the cut solver, which enumerates endpoint sequences,
orderings and partition candidates from a strict approximate universal family
and decides each with the two-stage DP.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

from .cutpath import (
    DEFAULT_C_L,
    DEFAULT_C_PRIME,
    DEFAULT_C_R,
    CutInstance,
    CutParams,
    DPStats,
    InfeasibleParamsError,
    derive_params,
    solve_cut,
)
from .families import (
    RepReducer,
    approx_universal_family,
    strictify,
    universal_family,
    verify_approx_universal,
    verify_universal,
)
from .graph import Digraph, VertexSet, iter_bits

DEFAULT_BUDGET = 500_000

# Published production tunables.  They make m astronomically large, so any
# desk-scale run falls back to brute force; real runs use small-m overrides
# and do not attain the asymptotic constant.
PAPER_PROFILE = {
    "eps": 1e-10,
    "delta": 0.49533,
    "zeta": 0.712,
    "c_l": 1.136,
    "c_r": 1.645,
    "c_prime": DEFAULT_C_PRIME,
}


class BudgetExceededError(RuntimeError):
    """The outer enumeration would exceed the configured budget."""


def _endpoint_pair(endpoints) -> tuple[Optional[int], Optional[int]]:
    if endpoints is None:
        return None, None
    s, t = endpoints
    return s, t


def brute_force_kpath(
    g: Digraph, k: int, endpoints: Optional[tuple[Optional[int], Optional[int]]] = None
) -> Optional[list[int]]:
    """Exhaustive search; returns the lexicographically least k-vertex path.

    With endpoints (s, t) the path must start at s and end at t (either may
    be None to leave that end free).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > g.n:
        return None
    s_fix, t_fix = _endpoint_pair(endpoints)
    if k == 1:
        if s_fix is not None and t_fix is not None and s_fix != t_fix:
            return None
        v = s_fix if s_fix is not None else (t_fix if t_fix is not None else 0)
        return [v] if 0 <= v < g.n else None

    path: list[int] = []

    def dfs(v: int, visited: int) -> Optional[list[int]]:
        path.append(v)
        if len(path) == k:
            if t_fix is None or v == t_fix:
                return list(path)
            path.pop()
            return None
        for u in g.out_adj[v]:
            if not (visited >> u) & 1:
                found = dfs(u, visited | (1 << u))
                if found is not None:
                    return found
        path.pop()
        return None

    starts: Iterable[int] = [s_fix] if s_fix is not None else range(g.n)
    for s in starts:
        if not 0 <= s < g.n:
            continue
        found = dfs(s, 1 << s)
        if found is not None:
            return found
    return None


def baseline_kpath(
    g: Digraph,
    k: int,
    c: float = DEFAULT_C_PRIME,
    endpoints: Optional[tuple[Optional[int], Optional[int]]] = None,
    stats: Optional[DPStats] = None,
) -> Optional[list[int]]:
    """Level-by-level DP over all vertices with representative-family reduction.

    Level i holds, per end vertex v, a family representing the vertex sets of
    i-vertex paths ending at v; each level is reduced under the remaining
    (k - i) blocker budget before the next level is built.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if c < 1.0:
        raise ValueError("c must be at least 1")
    if k > g.n:
        return None
    s_fix, t_fix = _endpoint_pair(endpoints)
    n = g.n
    reducer = RepReducer([(1 << n) - 1], (k,), n)

    # levels[i][v] = (masks, provenance); provenance entries are (u, pred_mask)
    levels: list[dict[int, tuple[list[int], list]]] = [dict() for _ in range(k + 1)]
    first = [s_fix] if s_fix is not None else range(n)
    for v in first:
        if not 0 <= v < n:
            continue
        kept = reducer.reduce([1 << v], (1,))
        if kept:
            levels[1][v] = ([1 << v], [None])
        if stats is not None:
            stats.record(1, len(kept))

    for i in range(2, k + 1):
        prev = levels[i - 1]
        if not prev:
            return None
        cur: dict[int, tuple[list[int], list]] = {}
        targets = [t_fix] if (i == k and t_fix is not None) else range(n)
        for v in targets:
            if not 0 <= v < n:
                continue
            raw: list[int] = []
            prov: list = []
            seen: set[int] = set()
            v_bit = 1 << v
            for u in g.in_adj[v]:
                got = prev.get(u)
                if got is None:
                    continue
                for pm in got[0]:
                    if pm & v_bit:
                        continue
                    nm = pm | v_bit
                    if nm in seen:
                        continue
                    seen.add(nm)
                    raw.append(nm)
                    prov.append((u, pm))
            if not raw:
                continue
            kept = reducer.reduce(raw, (i,))
            if stats is not None:
                stats.record(len(raw), len(kept))
            if kept:
                cur[v] = ([raw[j] for j in kept], [prov[j] for j in kept])
        levels[i] = cur

    accept = sorted(levels[k])
    if not accept:
        return None
    v = accept[0]
    path = [v]
    mask = levels[k][v][0][0]
    for i in range(k, 1, -1):
        masks, prov = levels[i][v]
        pv = prov[masks.index(mask)]
        u, pmask = pv
        path.append(u)
        v, mask = u, pmask
    path.reverse()
    return path


# ---------------------------------------------------------------------------
# Cut solver
# ---------------------------------------------------------------------------

_family_memo: dict[tuple, tuple[tuple[VertexSet, ...], bool]] = {}


def _cover_family(n: int, p: int, q: int, zeta: float) -> tuple[tuple[VertexSet, ...], bool]:
    """Strict approximate universal family (exact universal when zeta == 0)."""
    key = (n, p, q, zeta)
    got = _family_memo.get(key)
    if got is None:
        if zeta == 0.0:
            sets = tuple(universal_family(n, p, q))
            certified = True
        else:
            base, params = approx_universal_family(n, p, q, zeta)
            sets = tuple(strictify(base, n, p, q, zeta))
            certified = params.certified
        got = (sets, certified)
        _family_memo[key] = got
    return got


def _ve_sequences(
    n: int, m: int, endpoints: Optional[tuple[Optional[int], Optional[int]]]
) -> Iterator[tuple[int, ...]]:
    s_fix, t_fix = _endpoint_pair(endpoints)
    if s_fix is None and t_fix is None:
        yield from itertools.permutations(range(n), m + 2)
        return
    for seq in itertools.permutations(range(n), m + 2):
        if s_fix is not None and seq[0] != s_fix:
            continue
        if t_fix is not None and seq[-1] != t_fix:
            continue
        yield seq


def _ve_possible(g: Digraph, seq: tuple[int, ...]) -> bool:
    """Necessary conditions only: every endpoint needs a usable neighbor."""
    excl = 0
    for v in seq:
        excl |= 1 << v
    for v in seq[:-1]:
        if not g.out_mask[v] & ~excl:
            return False
    for v in seq[1:]:
        if not g.in_mask[v] & ~excl:
            return False
    return True


def _assemble(
    ve: tuple[int, ...], order: tuple[int, ...], paths: list[list[int]], m: int
) -> list[int]:
    physical: list[Optional[list[int]]] = [None] * (m + 1)
    for step, path in enumerate(paths[:m]):
        physical[order[step]] = path
    physical[m] = paths[m]
    full = list(physical[0])
    for part in physical[1:]:
        full.extend(part[1:])
    return full


@dataclass
class CutRunInfo:
    """Deterministic counters from one cut-solver invocation."""

    family_size: int = 0
    certified: bool = True
    instances: int = 0
    bound: int = 0
    dp: DPStats = field(default_factory=DPStats)


def cut_solver(
    g: Digraph,
    k: int,
    params: CutParams,
    endpoints: Optional[tuple[Optional[int], Optional[int]]] = None,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    verify_family: bool = False,
    prune: bool = False,
    info: Optional[CutRunInfo] = None,
    trace: Optional[list] = None,
) -> Optional[list[int]]:
    """Outer enumeration around the two-stage DP.

    Iterates endpoint sequences (lexicographic), orderings (lexicographic) and
    partition candidates (family construction order), returning the witness of
    the first accepting instance.  The enumeration order is fixed, so output
    is deterministic for any thread count.
    """
    n = g.n
    m = params.m
    if params.k != k:
        raise ValueError("params derived for a different k")
    if n < m + 2:
        raise InfeasibleParamsError(
            "infeasible parameterization: graph smaller than m + 2", recoverable=True
        )
    p_cover = m * params.psize
    q_cover = params.tail_size
    if p_cover + q_cover > n:
        raise InfeasibleParamsError(
            "infeasible parameterization: more internal vertices than the graph has",
            recoverable=True,
        )
    family, certified = _cover_family(n, p_cover, q_cover, params.zeta)
    if verify_family:
        if params.zeta == 0.0:
            ok = verify_universal(family, n, p_cover, q_cover)
        else:
            ok = verify_approx_universal(family, n, p_cover, q_cover, params.zeta, strict=True)
        if not ok:
            raise RuntimeError("partition family failed exhaustive verification")
        certified = True
    bound = n ** (m + 2) * math.factorial(m) * len(family)
    if info is not None:
        info.family_size = len(family)
        info.certified = certified
        info.bound = bound
    if bound > budget:
        raise BudgetExceededError(f"search space too large: bound {bound} exceeds budget {budget}")

    full_mask = (1 << n) - 1

    def candidates() -> Iterator[tuple[tuple[int, ...], tuple[int, ...], VertexSet]]:
        for ve in _ve_sequences(n, m, endpoints):
            if prune and not _ve_possible(g, ve):
                continue
            for order in itertools.permutations(range(m)):
                for f in family:
                    yield ve, order, f

    def run_one(cand) -> tuple[Optional[list[list[int]]], Optional[tuple], DPStats]:
        ve, order, f = cand
        local = DPStats()
        inst = CutInstance(
            g, k, VertexSet(n, f.mask), VertexSet(n, full_mask & ~f.mask), ve, order
        )
        local_trace: Optional[list] = [] if trace is not None else None
        witness = solve_cut(inst, params, stats=local, trace=local_trace)
        return witness, (ve, order, local_trace), local

    def finish(witness, meta) -> list[int]:
        ve, order, local_trace = meta
        if trace is not None and local_trace:
            trace.extend(local_trace)
        return _assemble(ve, order, witness, m)

    if threads <= 1:
        for cand in candidates():
            witness, meta, local = run_one(cand)
            if info is not None:
                info.instances += 1
                info.dp.merge(local)
            if witness is not None:
                return finish(witness, meta)
        return None

    batch_size = max(4 * threads, 8)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        it = candidates()
        while True:
            batch = list(itertools.islice(it, batch_size))
            if not batch:
                return None
            results = list(pool.map(run_one, batch))
            for witness, meta, local in results:
                if info is not None:
                    info.instances += 1
                    info.dp.merge(local)
                if witness is not None:
                    return finish(witness, meta)
    return None


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


@dataclass
class SolveConfig:
    eps: float = 0.25
    delta: float = 0.5
    zeta: float = 0.3
    c_l: float = DEFAULT_C_L
    c_r: float = DEFAULT_C_R
    c_prime: float = DEFAULT_C_PRIME
    m: Optional[int] = None
    psize: Optional[int] = None
    lnum: Optional[int] = None
    rnum: Optional[int] = None
    budget: int = DEFAULT_BUDGET
    threads: int = 1
    verify_families: bool = False
    prune: bool = False


@dataclass
class SolveResult:
    answer: str
    path: Optional[list[int]]
    mode: str
    params: Optional[dict]
    stats: dict
    certified: bool
    wall_ms: float = 0.0

    def to_json(self) -> str:
        doc = {
            "answer": self.answer,
            "path": self.path,
            "mode": self.mode,
            "params": self.params,
            "stats": self.stats,
            "certified": self.certified,
        }
        return json.dumps(doc, sort_keys=True)


def _check_witness(g: Digraph, k: int, path: list[int], endpoints) -> None:
    s_fix, t_fix = _endpoint_pair(endpoints)
    assert len(path) == k and len(set(path)) == k, "witness is not a simple k-path"
    assert all(g.has_edge(u, v) for u, v in zip(path, path[1:])), "witness uses a missing edge"
    assert s_fix is None or path[0] == s_fix, "witness starts at the wrong vertex"
    assert t_fix is None or path[-1] == t_fix, "witness ends at the wrong vertex"


def solve(
    g: Digraph,
    k: int,
    mode: str,
    config: Optional[SolveConfig] = None,
    endpoints: Optional[tuple[Optional[int], Optional[int]]] = None,
    trace: Optional[list] = None,
) -> SolveResult:
    """Dispatch to one solver and package the outcome with run statistics."""
    if mode not in ("brute", "baseline", "cut"):
        raise ValueError(f"unknown mode {mode!r}")
    cfg = config or SolveConfig()
    t0 = time.perf_counter()
    stats: dict = {}
    params_doc: Optional[dict] = None
    certified = True

    if mode == "brute":
        path = brute_force_kpath(g, k, endpoints)
    elif mode == "baseline":
        dp = DPStats()
        path = baseline_kpath(g, k, c=cfg.c_prime, endpoints=endpoints, stats=dp)
        params_doc = {"c": cfg.c_prime}
        stats.update(
            entries=dp.entries,
            raw_members=dp.raw_members,
            kept_members=dp.kept_members,
            max_family=dp.max_family,
        )
    else:
        fallback = False
        path = None
        info = CutRunInfo()
        try:
            params = derive_params(
                k,
                eps=cfg.eps,
                delta=cfg.delta,
                zeta=cfg.zeta,
                c_l=cfg.c_l,
                c_r=cfg.c_r,
                c_prime=cfg.c_prime,
                m=cfg.m,
                psize=cfg.psize,
                lnum=cfg.lnum,
                rnum=cfg.rnum,
            )
            path = cut_solver(
                g,
                k,
                params,
                endpoints=endpoints,
                budget=cfg.budget,
                threads=cfg.threads,
                verify_family=cfg.verify_families,
                prune=cfg.prune,
                info=info,
                trace=trace,
            )
            params_doc = {
                "k": params.k,
                "m": params.m,
                "psize": params.psize,
                "lnum": params.lnum,
                "rnum": params.rnum,
                "zeta": params.zeta,
                "c_l": params.c_l,
                "c_r": params.c_r,
                "c_prime": params.c_prime,
            }
        except InfeasibleParamsError as exc:
            if not exc.recoverable:
                raise
            fallback = True
            path = brute_force_kpath(g, k, endpoints)
        certified = info.certified if not fallback else True
        stats.update(
            fallback=fallback,
            instances=info.instances,
            family_size=info.family_size,
            entries=info.dp.entries,
            raw_members=info.dp.raw_members,
            kept_members=info.dp.kept_members,
            max_family=info.dp.max_family,
        )

    if path is not None:
        _check_witness(g, k, path, endpoints)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return SolveResult(
        answer="yes" if path is not None else "no",
        path=path,
        mode=mode,
        params=params_doc,
        stats=stats,
        certified=certified,
        wall_ms=wall_ms,
    )
