"""Two-stage dynamic program for one cut-decomposition instance.

Stage 1 assembles the first m sub-paths, counting internal vertices on the
left and right sides of the partition separately; stage 2 assembles the final
segment inside the right side only.  Every table entry is reduced to a
representative subfamily, and provenance is kept per surviving member so that
an accepting entry can be back-chained into explicit witness paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .families import RepReducer
from .graph import Digraph, VertexSet, iter_bits

_EPS = 1e-9

DEFAULT_C_L = 1.136
DEFAULT_C_R = 1.645
DEFAULT_C_PRIME = 1.0 + 1.0 / math.sqrt(5.0)


class InfeasibleParamsError(ValueError):
    """Parameterization the cut decomposition cannot run with.

    ``recoverable`` is True when the failure depends on this particular k or
    graph (callers may fall back to another solver) and False when the
    tunables themselves are invalid.
    """

    def __init__(self, message: str, recoverable: bool = False):
        super().__init__(message)
        self.recoverable = recoverable


def _floor_eps(x: float) -> int:
    # relative slack: products like 0.7 * 50 land just below their true
    # integer value in binary floating point
    return math.floor(x + _EPS * max(1.0, abs(x)))


def _ceil_eps(x: float) -> int:
    # relative slack keeps genuinely tiny positive products (eps * k with a
    # production-scale eps) above zero
    return math.ceil(x - _EPS * abs(x))


@dataclass(frozen=True)
class CutParams:
    """Derived counts of the cut decomposition for one k.

    m sub-paths of psize internal vertices each cover the front of the target
    path; lnum of those internal vertices must land on the left side, the
    remaining internal vertices (rnum in total) on the right.
    """

    k: int
    eps: Optional[float]
    delta: Optional[float]
    zeta: float
    c_l: float
    c_r: float
    c_prime: float
    m: int
    psize: int
    lnum: int
    rnum: int

    def lnumi(self, i: int) -> int:
        """Lower bound on left-side internals over the first i sub-paths."""
        return _floor_eps((1.0 - self.zeta) * i * self.psize)

    @property
    def tail_size(self) -> int:
        """Internal vertex count of the final segment."""
        return self.k - 2 - self.m - self.m * self.psize


def derive_params(
    k: int,
    eps: Optional[float] = None,
    delta: Optional[float] = None,
    zeta: float = 0.0,
    c_l: float = DEFAULT_C_L,
    c_r: float = DEFAULT_C_R,
    c_prime: float = DEFAULT_C_PRIME,
    m: Optional[int] = None,
    psize: Optional[int] = None,
    lnum: Optional[int] = None,
    rnum: Optional[int] = None,
) -> CutParams:
    """Derive all cut-decomposition counts from (k, eps, delta, zeta).

    Overrides (m, psize, lnum, rnum) bypass the defining formulas for test
    harnesses; the invariants are still enforced.  Invalid tunables raise a
    non-recoverable InfeasibleParamsError; counts that merely fail for this k
    raise a recoverable one.
    """
    if k < 1:
        raise InfeasibleParamsError("infeasible parameterization: k must be at least 1")
    if not 0.0 <= zeta < 1.0:
        raise InfeasibleParamsError("infeasible parameterization: zeta must lie in [0, 1)")
    if m is None:
        if eps is None or delta is None:
            raise InfeasibleParamsError(
                "infeasible parameterization: eps and delta are required unless m is given"
            )
        if not 0.0 < eps < 1.0 or not 0.0 < delta < 1.0:
            raise InfeasibleParamsError(
                "infeasible parameterization: eps and delta must lie in (0, 1)"
            )
        m_real = delta / eps
        m = round(m_real)
        if abs(m_real - m) > 1e-6 * max(1.0, abs(m_real)):
            raise InfeasibleParamsError(
                f"infeasible parameterization: delta/eps = {m_real} is not an integer"
            )
    if m < 1:
        raise InfeasibleParamsError("infeasible parameterization: m must be at least 1")
    if psize is None:
        if eps is None:
            raise InfeasibleParamsError(
                "infeasible parameterization: eps is required unless psize is given"
            )
        psize = _ceil_eps(eps * k)
    if psize < 1:
        raise InfeasibleParamsError("infeasible parameterization: psize must be at least 1")
    if lnum is None:
        lnum = m * psize - _floor_eps(zeta * m * psize)
    if rnum is None:
        rnum = k - 2 - m - lnum
    params = CutParams(k, eps, delta, zeta, c_l, c_r, c_prime, m, psize, lnum, rnum)
    if lnum < 0 or lnum > m * psize:
        raise InfeasibleParamsError(
            f"infeasible parameterization: lnum = {lnum} outside [0, {m * psize}]"
        )
    if rnum < 0:
        raise InfeasibleParamsError(
            f"infeasible parameterization: rnum = {rnum} is negative", recoverable=True
        )
    if params.lnumi(m) > lnum:
        raise InfeasibleParamsError(
            f"infeasible parameterization: prefix bound {params.lnumi(m)} exceeds lnum = {lnum}"
        )
    if params.tail_size < 1:
        raise InfeasibleParamsError(
            f"infeasible parameterization: final segment would have {params.tail_size} "
            "internal vertices (k too small for these tunables)",
            recoverable=True,
        )
    return params


@dataclass(frozen=True)
class CutInstance:
    """One cut-decomposition instance: graph, partition, endpoints, ordering.

    ``endpoints_seq`` lists the m+2 distinct shared endpoints in path order;
    ``order`` maps construction step i (0-based) to the physical sub-path it
    builds.  Step i runs from endpoints_seq[order[i]] to endpoints_seq[order[i]+1];
    the final segment runs between the last two endpoints.
    """

    g: Digraph
    k: int
    left: VertexSet
    right: VertexSet
    endpoints_seq: tuple[int, ...]
    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "endpoints_seq", tuple(self.endpoints_seq))
        object.__setattr__(self, "order", tuple(self.order))
        n = self.g.n
        if self.left.capacity != n or self.right.capacity != n:
            raise ValueError("partition capacity does not match the graph")
        if self.left.mask & self.right.mask:
            raise ValueError("left and right sides must be disjoint")
        if (self.left.mask | self.right.mask) != (1 << n) - 1:
            raise ValueError("left and right sides must cover all vertices")
        if len(set(self.endpoints_seq)) != len(self.endpoints_seq):
            raise ValueError("endpoint sequence has repeated vertices")
        if any(not 0 <= v < n for v in self.endpoints_seq):
            raise ValueError("endpoint outside the graph")
        m = len(self.endpoints_seq) - 2
        if m < 1:
            raise ValueError("endpoint sequence needs at least 3 vertices")
        if sorted(self.order) != list(range(m)):
            raise ValueError("order must be a permutation of range(m)")

    @property
    def m(self) -> int:
        return len(self.endpoints_seq) - 2

    def start_of(self, i: int) -> int:
        """First vertex of the path built at step i (1-based, i <= m+1)."""
        if i <= self.m:
            return self.endpoints_seq[self.order[i - 1]]
        return self.endpoints_seq[self.m]

    def end_of(self, i: int) -> int:
        """Last vertex of the path built at step i (1-based, i <= m+1)."""
        if i <= self.m:
            return self.endpoints_seq[self.order[i - 1] + 1]
        return self.endpoints_seq[self.m + 1]

    @property
    def excluded_mask(self) -> int:
        m = 0
        for v in self.endpoints_seq:
            m |= 1 << v
        return m


@dataclass(frozen=True)
class DPEntry:
    """One table entry: surviving member sets plus per-member provenance.

    ``provenance[j]`` is None for a base member, else
    (pred_table, pred_key, pred_mask) naming the entry and member it extended.
    """

    key: tuple
    masks: tuple[int, ...]
    provenance: tuple
    raw_size: int

    def __len__(self) -> int:
        return len(self.masks)

    def family_sets(self, n: int) -> tuple[VertexSet, ...]:
        return tuple(VertexSet(n, m) for m in self.masks)


@dataclass
class DPStats:
    entries: int = 0
    raw_members: int = 0
    kept_members: int = 0
    max_family: int = 0

    def record(self, raw: int, kept: int) -> None:
        self.entries += 1
        self.raw_members += raw
        self.kept_members += kept
        if kept > self.max_family:
            self.max_family = kept

    def merge(self, other: "DPStats") -> None:
        self.entries += other.entries
        self.raw_members += other.raw_members
        self.kept_members += other.kept_members
        self.max_family = max(self.max_family, other.max_family)


def _stage1_reducer(inst: CutInstance, params: CutParams) -> RepReducer:
    return RepReducer(
        [inst.left.mask, inst.right.mask],
        (params.lnum, params.rnum),
        inst.g.n,
    )


def _stage2_reducer(inst: CutInstance, params: CutParams) -> RepReducer:
    return RepReducer([inst.right.mask], (params.rnum,), inst.g.n)


def _m_key_in_range(i: int, j_l: int, j_r: int, params: CutParams) -> bool:
    if not 1 <= i <= params.m:
        return False
    if j_l < params.lnumi(i - 1) or j_l > min(i * params.psize, params.lnum):
        return False
    if j_r < 0 or j_r > params.rnum:
        return False
    total = j_l + j_r
    return 1 + (i - 1) * params.psize <= total <= i * params.psize


def m_table_step(
    i: int,
    j_l: int,
    j_r: int,
    v: int,
    m_table: Mapping[tuple, DPEntry],
    inst: CutInstance,
    params: CutParams,
    reducer: Optional[RepReducer] = None,
    stats: Optional[DPStats] = None,
) -> DPEntry:
    """Compute one stage-1 entry from already-computed smaller entries.

    The raw family extends predecessor members by v (splitting the count on
    which side v lies, skipping members already containing v), then is reduced
    to a representative subfamily under the remaining (lnum-j_l, rnum-j_r)
    blocker budgets.
    """
    key = (i, j_l, j_r, v)
    g = inst.g
    excluded = inst.excluded_mask
    allowed = ((1 << g.n) - 1) & ~excluded
    total = j_l + j_r
    in_left = (inst.left.mask >> v) & 1 == 1

    # out-of-range keys are the empty family by convention
    v_all = allowed
    if total == 1 + (i - 1) * params.psize:
        v_all &= g.out_mask[inst.start_of(i)]
    if total == i * params.psize:
        v_all &= g.in_mask[inst.end_of(i)]
    if not _m_key_in_range(i, j_l, j_r, params) or not (v_all >> v) & 1:
        return DPEntry(key, (), (), 0)

    raw: list[int] = []
    prov: list = []
    seen: set[int] = set()

    def extend(pred_key: tuple, pred_entry: Optional[DPEntry], v_bit: int) -> None:
        if pred_entry is None:
            return
        for pm in pred_entry.masks:
            if pm & v_bit:
                continue
            nm = pm | v_bit
            if nm in seen:
                continue
            seen.add(nm)
            raw.append(nm)
            prov.append(("M", pred_key, pm))

    v_bit = 1 << v
    if total == 1:
        if (in_left and j_l == 1) or (not in_left and j_r == 1):
            raw.append(v_bit)
            prov.append(None)
    elif total > 1 + (i - 1) * params.psize:
        pkl, pkr = (j_l - 1, j_r) if in_left else (j_l, j_r - 1)
        for u in iter_bits(g.in_mask[v] & allowed):
            pk = (i, pkl, pkr, u)
            extend(pk, m_table.get(pk), v_bit)
    else:  # total == 1 + (i-1)*psize with i > 1: hand off from the previous sub-path
        pkl, pkr = (j_l - 1, j_r) if in_left else (j_l, j_r - 1)
        # the completed prefix must already meet its left-side lower bound
        if pkl >= params.lnumi(i - 1):
            t_prev = inst.end_of(i - 1)
            for u in iter_bits(g.in_mask[t_prev] & allowed):
                pk = (i - 1, pkl, pkr, u)
                extend(pk, m_table.get(pk), v_bit)

    if reducer is None:
        reducer = _stage1_reducer(inst, params)
    kept = reducer.reduce(raw, (j_l, j_r))
    entry = DPEntry(key, tuple(raw[j] for j in kept), tuple(prov[j] for j in kept), len(raw))
    if stats is not None:
        stats.record(len(raw), len(entry.masks))
    return entry


def k_table_step(
    j: int,
    v: int,
    k_table: Mapping[tuple, DPEntry],
    m_table: Mapping[tuple, DPEntry],
    inst: CutInstance,
    params: CutParams,
    reducer: Optional[RepReducer] = None,
    stats: Optional[DPStats] = None,
) -> DPEntry:
    """Compute one stage-2 entry.

    At the handoff count the entry reads completed stage-1 entries, dropping
    their left-side elements; afterwards it extends within the right side
    only.  The result is reduced under the remaining rnum-j blocker budget.
    """
    key = (j, v)
    g = inst.g
    excluded = inst.excluded_mask
    allowed = ((1 << g.n) - 1) & ~excluded
    right = inst.right.mask
    j_min = 1 + params.m * params.psize - params.lnum
    v_bit = 1 << v

    # out-of-range keys are the empty family by convention
    v_all = right & allowed
    if j == j_min:
        v_all &= g.out_mask[inst.start_of(params.m + 1)]
    if j == params.rnum:
        v_all &= g.in_mask[inst.end_of(params.m + 1)]
    if not j_min <= j <= params.rnum or not (v_all >> v) & 1:
        return DPEntry(key, (), (), 0)

    raw: list[int] = []
    prov: list = []
    seen: set[int] = set()

    if j > j_min:
        for u in iter_bits(g.in_mask[v] & allowed & right):
            pk = (j - 1, u)
            entry = k_table.get(pk)
            if entry is None:
                continue
            for pm in entry.masks:
                if pm & v_bit:
                    continue
                nm = pm | v_bit
                if nm in seen:
                    continue
                seen.add(nm)
                raw.append(nm)
                prov.append(("K", pk, pm))
    else:
        t_m = inst.end_of(params.m)
        for u in iter_bits(g.in_mask[t_m] & allowed):
            pk = (params.m, params.lnum, j - 1, u)
            entry = m_table.get(pk)
            if entry is None:
                continue
            for pm in entry.masks:
                rm = pm & right
                if rm & v_bit:
                    continue
                nm = rm | v_bit
                if nm in seen:
                    continue
                seen.add(nm)
                raw.append(nm)
                prov.append(("M", pk, pm))

    if reducer is None:
        reducer = _stage2_reducer(inst, params)
    kept = reducer.reduce(raw, (j,))
    entry = DPEntry(key, tuple(raw[idx] for idx in kept), tuple(prov[idx] for idx in kept), len(raw))
    if stats is not None:
        stats.record(len(raw), len(entry.masks))
    return entry


def _reconstruct(
    accept_key: tuple,
    accept_mask: int,
    m_table: Mapping[tuple, DPEntry],
    k_table: Mapping[tuple, DPEntry],
    inst: CutInstance,
    params: CutParams,
) -> list[list[int]]:
    def member_prov(entry: DPEntry, mask: int):
        for mm, pv in zip(entry.masks, entry.provenance):
            if mm == mask:
                return pv
        raise KeyError(f"member {mask} not present in entry {entry.key}")

    # walk the stage-2 chain back to the handoff
    tail: list[int] = []
    key, mask = accept_key, accept_mask
    while True:
        j, v = key
        tail.append(v)
        pv = member_prov(k_table[key], mask)
        table, pkey, pmask = pv
        if table == "K":
            key, mask = pkey, pmask
        else:
            key, mask = pkey, pmask
            break
    tail.reverse()

    # walk the stage-1 chain, collecting internals per construction step
    internals: dict[int, list[int]] = {i: [] for i in range(1, params.m + 1)}
    while True:
        i, _, _, v = key
        internals[i].append(v)
        pv = member_prov(m_table[key], mask)
        if pv is None:
            break
        _, key, mask = pv
    for seq in internals.values():
        seq.reverse()

    paths = [
        [inst.start_of(i)] + internals[i] + [inst.end_of(i)] for i in range(1, params.m + 1)
    ]
    paths.append([inst.start_of(params.m + 1)] + tail + [inst.end_of(params.m + 1)])
    return paths


def solve_cut(
    inst: CutInstance,
    params: CutParams,
    stats: Optional[DPStats] = None,
    trace: Optional[list] = None,
) -> Optional[list[list[int]]]:
    """Decide one cut-decomposition instance; return witness paths or None.

    A returned witness is checked against all eight structural properties
    before being handed out, so "yes" answers are sound by construction.
    """
    if inst.k != params.k:
        raise ValueError("instance k does not match params k")
    if inst.m != params.m:
        raise ValueError("instance has a different sub-path count than params")
    g = inst.g
    if g.n < params.m + 2:
        raise InfeasibleParamsError(
            "infeasible parameterization: graph smaller than m + 2", recoverable=True
        )
    m, psize, lnum, rnum = params.m, params.psize, params.lnum, params.rnum
    j_min = 1 + m * psize - lnum
    if j_min > rnum:
        return None

    excluded = inst.excluded_mask
    allowed = ((1 << g.n) - 1) & ~excluded
    red1 = _stage1_reducer(inst, params)
    red2 = _stage2_reducer(inst, params)

    m_table: dict[tuple, DPEntry] = {}
    for total in range(1, m * psize + 1):
        i = (total + psize - 1) // psize
        level_alive = False
        v_all = allowed
        if total == 1 + (i - 1) * psize:
            v_all &= g.out_mask[inst.start_of(i)]
        if total == i * psize:
            v_all &= g.in_mask[inst.end_of(i)]
        for j_l in range(max(params.lnumi(i - 1), 0), min(i * psize, lnum) + 1):
            j_r = total - j_l
            if not _m_key_in_range(i, j_l, j_r, params):
                continue
            for v in iter_bits(v_all):
                entry = m_table_step(i, j_l, j_r, v, m_table, inst, params, red1, stats)
                if entry.masks:
                    m_table[entry.key] = entry
                    level_alive = True
                if trace is not None and entry.raw_size:
                    trace.append(("M", entry.key, entry.raw_size, len(entry.masks)))
        if not level_alive:
            return None

    k_table: dict[tuple, DPEntry] = {}
    for j in range(j_min, rnum + 1):
        v_all = inst.right.mask & allowed
        if j == j_min:
            v_all &= g.out_mask[inst.start_of(m + 1)]
        if j == rnum:
            v_all &= g.in_mask[inst.end_of(m + 1)]
        level_alive = False
        for v in iter_bits(v_all):
            entry = k_table_step(j, v, k_table, m_table, inst, params, red2, stats)
            if entry.masks:
                k_table[entry.key] = entry
                level_alive = True
            if trace is not None and entry.raw_size:
                trace.append(("K", entry.key, entry.raw_size, len(entry.masks)))
        if not level_alive:
            return None

    for v in range(g.n):
        entry = k_table.get((rnum, v))
        if entry is not None and entry.masks:
            paths = _reconstruct((rnum, v), entry.masks[0], m_table, k_table, inst, params)
            violated = validate_properties(paths, inst, params)
            if violated:
                raise RuntimeError(
                    f"internal error: reconstructed witness violates properties {violated}"
                )
            return paths
    return None


def validate_properties(
    paths: Sequence[Sequence[int]], inst: CutInstance, params: CutParams
) -> list[int]:
    """Return the indices (1-8) of the structural properties the paths violate.

    Non-walk input (a missing edge, or a repeated vertex inside one path)
    raises ValueError before any property is checked.
    """
    g = inst.g
    m = params.m
    if len(paths) != m + 1:
        raise ValueError(f"expected {m + 1} paths, got {len(paths)}")
    for idx, path in enumerate(paths, start=1):
        if len(path) < 2:
            raise ValueError(f"path {idx} has fewer than two vertices")
        if len(set(path)) != len(path):
            raise ValueError(f"path {idx} repeats a vertex")
        for u, v in zip(path, path[1:]):
            if not g.has_edge(u, v):
                raise ValueError(f"path {idx} uses a missing edge ({u}, {v})")

    violated: list[int] = []
    internals = [list(path[1:-1]) for path in paths]
    excluded = set(inst.endpoints_seq)

    if any(
        paths[i - 1][0] != inst.start_of(i) or paths[i - 1][-1] != inst.end_of(i)
        for i in range(1, m + 2)
    ):
        violated.append(1)
    if any(set(ints) & excluded for ints in internals):
        violated.append(2)
    disjoint = True
    seen: set[int] = set()
    for ints in internals:
        s = set(ints)
        if s & seen:
            disjoint = False
            break
        seen |= s
    if not disjoint:
        violated.append(3)
    if any(len(internals[i]) != params.psize for i in range(m)):
        violated.append(4)
    if len(internals[m]) != params.tail_size:
        violated.append(5)
    left = inst.left
    prefix = 0
    prop6_ok = True
    for i in range(1, m + 1):
        prefix += sum(1 for v in internals[i - 1] if v in left)
        if prefix < params.lnumi(i):
            prop6_ok = False
    if not prop6_ok:
        violated.append(6)
    total_left = sum(1 for ints in internals[:m] for v in ints if v in left)
    if total_left != params.lnum:
        violated.append(7)
    if any(v not in inst.right for v in internals[m]):
        violated.append(8)
    return violated
