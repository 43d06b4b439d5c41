"""Representative families and (approximate) universal set families.

Two engines live here:

* a representative-family kernel for direct sums of uniform matroids: members
  are mapped to minor vectors of a block-diagonal Vandermonde matrix over a
  prime field, and a maximal linearly independent subset (greedy in input
  order) is kept;
* a deterministic greedy cover, by the method of conditional expectations,
  that builds universal and approximate universal families demand pair by
  demand pair.

Both are exact at the scales the exhaustive verifiers can certify.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import VertexSet, iter_bits

DEFAULT_VERIFY_CAP = 2_000_000
DEFAULT_GREEDY_CAP = 200_000
_PRIME_FLOOR = 257
# Below this vector length the pure-python elimination beats numpy call overhead.
_NUMPY_DIM_THRESHOLD = 32


class CapExceededError(RuntimeError):
    """An exhaustive enumeration would exceed the configured cap."""


def _is_prime(x: int) -> bool:
    if x < 2:
        return False
    if x % 2 == 0:
        return x == 2
    d = 3
    while d * d <= x:
        if x % d == 0:
            return False
        d += 2
    return True


def field_modulus(n: int, budget_total: int = 0) -> int:
    """Smallest prime exceeding max(n + budget_total, 257).

    The kernel needs n distinct nonzero field elements for the Vandermonde
    columns plus up to budget_total further distinct elements so that partial
    blockers can always be completed to full per-block size.
    """
    cand = max(n + budget_total, _PRIME_FLOOR) + 1
    while not _is_prime(cand):
        cand += 1
    return cand


@dataclass(frozen=True)
class UniversePartition:
    """Disjoint blocks U_1..U_t with per-block budgets k_i and constants c_i.

    The universe is the union of the blocks (it may be a strict subset of
    [0, n)).  With t = 1 this is the plain single-universe setting.
    """

    blocks: tuple[VertexSet, ...]
    budgets: tuple[int, ...]
    constants: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "budgets", tuple(int(b) for b in self.budgets))
        consts = tuple(self.constants) or tuple(1.0 for _ in self.blocks)
        object.__setattr__(self, "constants", tuple(float(c) for c in consts))
        if not self.blocks:
            raise ValueError("partition needs at least one block")
        if not (len(self.blocks) == len(self.budgets) == len(self.constants)):
            raise ValueError("blocks, budgets and constants must have equal length")
        n = self.blocks[0].capacity
        seen = 0
        for blk in self.blocks:
            if blk.capacity != n:
                raise ValueError("blocks must share one capacity")
            if seen & blk.mask:
                raise ValueError("blocks must be pairwise disjoint")
            seen |= blk.mask
        if any(k < 0 for k in self.budgets):
            raise ValueError("budgets must be non-negative")
        if any(c < 1.0 for c in self.constants):
            raise ValueError("trade-off constants must be >= 1")

    @classmethod
    def single(cls, universe: VertexSet, budget: int, constant: float = 1.0) -> "UniversePartition":
        return cls((universe,), (budget,), (constant,))

    @property
    def n(self) -> int:
        return self.blocks[0].capacity

    @property
    def t(self) -> int:
        return len(self.blocks)

    @property
    def universe(self) -> VertexSet:
        m = 0
        for blk in self.blocks:
            m |= blk.mask
        return VertexSet(self.n, m)

    @property
    def modulus(self) -> int:
        return field_modulus(self.n, sum(self.budgets))


@dataclass(frozen=True)
class SetFamily:
    """A duplicate-free list of vertex sets sharing one per-block profile."""

    members: tuple[VertexSet, ...]
    profile: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "profile", tuple(int(p) for p in self.profile))
        if len(set(m.mask for m in self.members)) != len(self.members):
            raise ValueError("family has duplicate members")
        caps = set(m.capacity for m in self.members)
        if len(caps) > 1:
            raise ValueError("members must share one capacity")
        if any(p < 0 for p in self.profile):
            raise ValueError("profile entries must be non-negative")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def check_profile(family: SetFamily, part: UniversePartition) -> None:
    """Raise ValueError unless every member matches the family profile blockwise."""
    if len(family.profile) != part.t:
        raise ValueError("profile length does not match block count")
    universe = part.universe.mask
    for member in family.members:
        if member.capacity != part.n:
            raise ValueError("member capacity does not match the partition")
        if member.mask & ~universe:
            raise ValueError(f"member {member!r} leaves the universe")
        for blk, p in zip(part.blocks, family.profile):
            if (member.mask & blk.mask).bit_count() != p:
                raise ValueError(f"member {member!r} violates the profile {family.profile}")


def _det_mod(rows: list[list[int]], p: int) -> int:
    """Determinant of a small square matrix over GF(p)."""
    k = len(rows)
    if k == 0:
        return 1
    if k == 1:
        return rows[0][0] % p
    if k == 2:
        return (rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]) % p
    a = [r[:] for r in rows]
    det = 1
    for c in range(k):
        piv = None
        for r in range(c, k):
            if a[r][c] % p:
                piv = r
                break
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c] % p
        inv = pow(a[c][c], p - 2, p)
        for r in range(c + 1, k):
            f = a[r][c] * inv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[c])]
    return det % p


class RepReducer:
    """Reduces families of bitmasks to representative subfamilies.

    Blocks are given as bitmasks with one budget each.  Each member maps to
    the tensor product over blocks of its per-block Vandermonde minor vector;
    members whose vectors are independent of all previously kept vectors are
    retained (deterministic, input order).  Per-block minor vectors are cached
    across calls, so one reducer should be reused for a whole DP run.
    """

    def __init__(
        self,
        blocks: Sequence[int],
        budgets: Sequence[int],
        n: int,
        modulus: Optional[int] = None,
    ):
        self.n = n
        self.block_masks = tuple(int(b) for b in blocks)
        self.budgets = tuple(int(k) for k in budgets)
        if len(self.block_masks) != len(self.budgets):
            raise ValueError("blocks and budgets must have equal length")
        self.modulus = modulus if modulus is not None else field_modulus(n, sum(self.budgets))
        self.universe_mask = 0
        for b in self.block_masks:
            self.universe_mask |= b
        # powers[bi][v] -> ((v+1)^0, .., (v+1)^(k_i - 1)) mod modulus
        self._powers: list[dict[int, tuple[int, ...]]] = []
        for bi, bmask in enumerate(self.block_masks):
            k = self.budgets[bi]
            table = {}
            for v in iter_bits(bmask):
                x = (v + 1) % self.modulus
                row = [1] * k
                for j in range(1, k):
                    row[j] = row[j - 1] * x % self.modulus
                table[v] = tuple(row)
            self._powers.append(table)
        self._minor_cache: dict[tuple[int, tuple[int, ...]], tuple[int, ...]] = {}

    def _block_minors(self, bi: int, elems: tuple[int, ...]) -> tuple[int, ...]:
        key = (bi, elems)
        cached = self._minor_cache.get(key)
        if cached is not None:
            return cached
        k = self.budgets[bi]
        p = len(elems)
        cols = [self._powers[bi][v] for v in elems]
        if p == 0:
            vec: tuple[int, ...] = (1,)
        else:
            out = []
            for rows in combinations(range(k), p):
                out.append(_det_mod([[cols[c][r] for c in range(p)] for r in rows], self.modulus))
            vec = tuple(out)
        self._minor_cache[key] = vec
        return vec

    def vector_dim(self, profile: Sequence[int]) -> int:
        d = 1
        for k, p in zip(self.budgets, profile):
            d *= comb(k, p)
        return d

    def vector(self, mask: int, profile: Sequence[int]) -> list[int]:
        """Minor vector of one member; raises if the member breaks the profile."""
        if mask & ~self.universe_mask:
            raise ValueError("member leaves the universe")
        acc = [1]
        for bi, bmask in enumerate(self.block_masks):
            elems = tuple(iter_bits(mask & bmask))
            if len(elems) != profile[bi]:
                raise ValueError(f"member profile mismatch in block {bi}")
            blockvec = self._block_minors(bi, elems)
            acc = [a * b % self.modulus for a in acc for b in blockvec]
        return acc

    def reduce(self, masks: Sequence[int], profile: Sequence[int]) -> list[int]:
        """Indices of a maximal independent subfamily, greedy in input order.

        Duplicates keep their first occurrence only.  Guarantees: for every
        blocker B with at most (budget_i - profile_i) elements in block i, if
        some input member is disjoint from B then so is some kept member.
        """
        profile = tuple(int(p) for p in profile)
        if len(profile) != len(self.budgets):
            raise ValueError("profile length does not match block count")
        for p, k in zip(profile, self.budgets):
            if p > k:
                raise ValueError(f"profile {profile} exceeds budgets {self.budgets}")
        dim = self.vector_dim(profile)
        if dim >= _NUMPY_DIM_THRESHOLD and len(masks) > 4:
            return self._reduce_numpy(masks, profile, dim)
        return self._reduce_python(masks, profile)

    def _reduce_python(self, masks: Sequence[int], profile: tuple[int, ...]) -> list[int]:
        p = self.modulus
        pivots: dict[int, list[int]] = {}
        kept: list[int] = []
        seen: set[int] = set()
        for idx, mask in enumerate(masks):
            if mask in seen:
                continue
            seen.add(mask)
            vec = self.vector(mask, profile)
            while True:
                lead = next((j for j, x in enumerate(vec) if x), None)
                if lead is None:
                    break
                row = pivots.get(lead)
                if row is None:
                    inv = pow(vec[lead], p - 2, p)
                    pivots[lead] = [x * inv % p for x in vec]
                    kept.append(idx)
                    break
                f = vec[lead]
                vec = [(x - f * y) % p for x, y in zip(vec, row)]
        return kept

    def _reduce_numpy(self, masks: Sequence[int], profile: tuple[int, ...], dim: int) -> list[int]:
        p = self.modulus
        rows = np.zeros((0, dim), dtype=np.int64)
        cols: list[int] = []
        kept: list[int] = []
        seen: set[int] = set()
        for idx, mask in enumerate(masks):
            if mask in seen:
                continue
            seen.add(mask)
            v = np.array(self.vector(mask, profile), dtype=np.int64)
            if cols:
                v = (v - v[cols] @ rows) % p
            nz = np.nonzero(v)[0]
            if nz.size == 0:
                continue
            c = int(nz[0])
            v = v * pow(int(v[c]), p - 2, p) % p
            if cols:
                rows = (rows - np.outer(rows[:, c], v)) % p
            rows = np.vstack([rows, v])
            cols.append(c)
            kept.append(idx)
        return kept


def rep_family(family: SetFamily, part: UniversePartition) -> SetFamily:
    """Representative subfamily for blockwise blocker budgets k_i - p_i.

    For every B with |B ∩ U_i| <= k_i - p_i: if some member of ``family`` is
    disjoint from B, some member of the result is too.  The result has at
    most C(sum k_i, sum p_i) members and preserves input order.
    """
    check_profile(family, part)
    for p, k in zip(family.profile, part.budgets):
        if p > k:
            raise ValueError(f"profile {family.profile} exceeds budgets {part.budgets}")
    reducer = RepReducer(
        [b.mask for b in part.blocks], part.budgets, part.n, modulus=part.modulus
    )
    kept = reducer.reduce([m.mask for m in family.members], family.profile)
    return SetFamily(tuple(family.members[i] for i in kept), family.profile)


def _blocker_iter(part: UniversePartition, qs: Sequence[int]):
    """All unions of per-block subsets with sizes 0..q_i, as bitmasks."""
    per_block: list[list[int]] = []
    for blk, q in zip(part.blocks, qs):
        elems = blk.elements()
        opts = []
        for size in range(min(q, len(elems)) + 1):
            for sub in combinations(elems, size):
                m = 0
                for v in sub:
                    m |= 1 << v
                opts.append(m)
        per_block.append(opts)

    def rec(bi: int, acc: int):
        if bi == len(per_block):
            yield acc
            return
        for m in per_block[bi]:
            yield from rec(bi + 1, acc | m)

    return rec(0, 0)


def _blocker_count(part: UniversePartition, qs: Sequence[int]) -> int:
    total = 1
    for blk, q in zip(part.blocks, qs):
        sz = len(blk)
        total *= sum(comb(sz, j) for j in range(min(q, sz) + 1))
    return total


def find_representation_blocker(
    family: SetFamily,
    sub: SetFamily,
    part: UniversePartition,
    cap: int = DEFAULT_VERIFY_CAP,
) -> Optional[VertexSet]:
    """Exhaustively search for a blocker B witnessing a representation failure.

    Returns None when the representation property holds.  Raises
    CapExceededError when the blocker space is larger than ``cap``.
    """
    check_profile(family, part)
    qs = [k - p for k, p in zip(part.budgets, family.profile)]
    if any(q < 0 for q in qs):
        raise ValueError("profile exceeds budgets")
    if _blocker_count(part, qs) > cap:
        raise CapExceededError("instance too large for exhaustive verification")
    fam_masks = [m.mask for m in family.members]
    sub_masks = [m.mask for m in sub.members]
    for b in _blocker_iter(part, qs):
        if any(not (a & b) for a in fam_masks) and not any(not (h & b) for h in sub_masks):
            return VertexSet(part.n, b)
    return None


def verify_representation(
    family: SetFamily,
    sub: SetFamily,
    part: UniversePartition,
    cap: int = DEFAULT_VERIFY_CAP,
) -> bool:
    """True iff ``sub`` is a subfamily of ``family`` and represents it."""
    fam_masks = set(m.mask for m in family.members)
    if any(m.mask not in fam_masks for m in sub.members):
        return False
    return find_representation_blocker(family, sub, part, cap=cap) is None


# ---------------------------------------------------------------------------
# Universal and approximate universal families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproxUFParams:
    """Derived quantities of an approximate universal family construction."""

    n: int
    p: int
    q: int
    zeta: float
    x: float
    eta: float
    size_bound: float
    certified: bool = True

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError("inclusion bias x must lie in [0, 1]")
        if self.eta < 1.0:
            raise ValueError("eta must be at least 1")
        if self.size_bound <= 0.0:
            raise ValueError("size bound must be positive")


def _pair_probability(
    a_mask: int, b_mask: int, in_mask: int, decided: int, allow_miss: int, x: float
) -> float:
    """Coverage probability of one demand pair under the biased product measure,
    conditioned on the inclusion decisions made so far."""
    if b_mask & in_mask:
        return 0.0
    a_out = (a_mask & decided & ~in_mask).bit_count()
    if a_out > allow_miss:
        return 0.0
    a_und = (a_mask & ~decided).bit_count()
    b_und = (b_mask & ~decided).bit_count()
    prob = (1.0 - x) ** b_und
    if a_und:
        budget = min(allow_miss - a_out, a_und)
        tail = 0.0
        for j in range(budget + 1):
            tail += comb(a_und, j) * (1.0 - x) ** j * x ** (a_und - j)
        prob *= tail
    return prob


def _greedy_cover(n: int, demands: list[tuple[int, int]], allow_miss: int, x: float) -> list[int]:
    """Cover every (A, B) demand with sets F: |A \\ F| <= allow_miss, B ∩ F = 0.

    One set is built per round, element by element, keeping the conditional
    expectation of the number of newly covered demands non-decreasing; each
    round therefore covers at least one demand and the loop terminates.
    """
    x = min(max(x, 1e-12), 1.0 - 1e-12)
    alive = list(demands)
    out: list[int] = []
    while alive:
        in_mask = 0
        decided = 0
        for e in range(n):
            bit = 1 << e
            dec = decided | bit
            gain_in = 0.0
            gain_out = 0.0
            for a, b in alive:
                if (a | b) & bit:
                    gain_in += _pair_probability(a, b, in_mask | bit, dec, allow_miss, x)
                    gain_out += _pair_probability(a, b, in_mask, dec, allow_miss, x)
                # elements outside A ∪ B do not change the pair probability
            if gain_in > gain_out:
                in_mask |= bit
            decided = dec
        covered = [
            (a, b)
            for a, b in alive
            if not (b & in_mask) and (a & ~in_mask).bit_count() <= allow_miss
        ]
        if not covered:
            raise RuntimeError("greedy cover failed to make progress")
        covered_set = set(covered)
        alive = [d for d in alive if d not in covered_set]
        out.append(in_mask)
    return out


def _demand_pairs(n: int, p: int, q: int) -> list[tuple[int, int]]:
    pairs: list[tuple[int, int]] = []
    ids = range(n)
    for a in combinations(ids, p):
        amask = 0
        for v in a:
            amask |= 1 << v
        rest = [v for v in ids if not (amask >> v) & 1]
        for b in combinations(rest, q):
            bmask = 0
            for v in b:
                bmask |= 1 << v
            pairs.append((amask, bmask))
    return pairs


def universal_family(n: int, p: int, q: int, cap: int = DEFAULT_GREEDY_CAP) -> list[VertexSet]:
    """Family covering every disjoint (A, B), |A|=p, |B|=q, with A ⊆ F, B ∩ F = ∅."""
    if p < 0 or q < 0:
        raise ValueError("p and q must be non-negative")
    if p + q > n:
        raise ValueError(f"p + q = {p + q} exceeds n = {n}")
    count = comb(n, p) * comb(n - p, q)
    if count > cap:
        raise CapExceededError("instance too large for exhaustive construction")
    x = p / (p + q) if p + q else 0.5
    masks = _greedy_cover(n, _demand_pairs(n, p, q), 0, x)
    return [VertexSet(n, m) for m in masks]


def approx_universal_family(
    n: int, p: int, q: int, zeta: float, cap: int = DEFAULT_GREEDY_CAP
) -> tuple[list[VertexSet], ApproxUFParams]:
    """Family covering every disjoint (A, B) with |A \\ F| <= floor(zeta*p), B ∩ F = ∅.

    Within ``cap`` demand pairs the deterministic greedy is used and the
    result is certified by construction.  Beyond the cap a seeded
    pseudo-random family of ceil(size_bound) sets with inclusion bias x is
    returned and flagged uncertified.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie strictly between 0 and 1")
    if p < 1:
        raise ValueError("p must be at least 1")
    if p + q > n:
        raise ValueError(f"p + q = {p + q} exceeds n = {n}")
    x = (1.0 - zeta) * p / (p + q)
    eta = 1.0 / (zeta**zeta * (1.0 - zeta) ** (1.0 - zeta))
    size_bound = 1.0 / (eta**p * x ** ((1.0 - zeta) * p) * (1.0 - x) ** (q + zeta * p))
    count = comb(n, p) * comb(n - p, q)
    if count <= cap:
        masks = _greedy_cover(n, _demand_pairs(n, p, q), math.floor(zeta * p), x)
        certified = True
    else:
        rng = random.Random(f"kpath-approx-family:{n}:{p}:{q}:{zeta!r}")
        size = max(1, math.ceil(size_bound))
        masks = []
        for _ in range(size):
            m = 0
            for e in range(n):
                if rng.random() < x:
                    m |= 1 << e
            masks.append(m)
        certified = False
    params = ApproxUFParams(n, p, q, zeta, x, eta, size_bound, certified)
    return [VertexSet(n, m) for m in masks], params


def strictify(
    family: Iterable[VertexSet],
    n: int,
    p: int | None = None,
    q: int | None = None,
    zeta: float | None = None,
) -> list[VertexSet]:
    """Close a family under prefixes {0..i-1}, i = 1..n, deduplicated.

    Turns an approximate universal family into a strict one: along the prefix
    chain of a witness set F the number of missed A-elements walks down from
    |A| to |A \\ F| in unit steps, so some prefix misses exactly the allowed
    amount while touching no more of B than F does.  The (p, q, zeta)
    arguments document the contract of the input family; the construction
    itself only needs n.  The result has at most n * len(family) members.
    """
    out: list[VertexSet] = []
    seen: set[int] = set()
    for f in family:
        for i in range(1, n + 1):
            g = f.mask & ((1 << i) - 1)
            if g not in seen:
                seen.add(g)
                out.append(VertexSet(n, g))
    return out


def find_approx_universal_violation(
    family: Sequence[VertexSet],
    n: int,
    p: int,
    q: int,
    zeta: float,
    strict: bool = False,
    cap: int = DEFAULT_VERIFY_CAP,
) -> Optional[tuple[VertexSet, VertexSet]]:
    """Exhaustively search for a demand pair (A, B) no family member serves.

    zeta = 0 checks the exact universal property.  Returns None when the
    property holds; raises CapExceededError beyond ``cap`` demand pairs.
    """
    if p < 0 or q < 0 or p + q > n:
        raise ValueError("invalid (n, p, q)")
    if not 0.0 <= zeta < 1.0:
        raise ValueError("zeta must lie in [0, 1)")
    if comb(n, p) * comb(n - p, q) > cap:
        raise CapExceededError("instance too large for exhaustive verification")
    allow = math.floor(zeta * p)
    masks = [f.mask for f in family]
    for amask, bmask in _demand_pairs(n, p, q):
        ok = False
        for fm in masks:
            if bmask & fm:
                continue
            missed = (amask & ~fm).bit_count()
            if (missed == allow) if strict else (missed <= allow):
                ok = True
                break
        if not ok:
            return VertexSet(n, amask), VertexSet(n, bmask)
    return None


def verify_approx_universal(
    family: Sequence[VertexSet],
    n: int,
    p: int,
    q: int,
    zeta: float,
    strict: bool = False,
    cap: int = DEFAULT_VERIFY_CAP,
) -> bool:
    return find_approx_universal_violation(family, n, p, q, zeta, strict=strict, cap=cap) is None


def verify_universal(
    family: Sequence[VertexSet], n: int, p: int, q: int, cap: int = DEFAULT_VERIFY_CAP
) -> bool:
    return verify_approx_universal(family, n, p, q, 0.0, strict=False, cap=cap)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def render_family(
    family: Sequence[VertexSet],
    backend: str,
    modulus: int | None = None,
    certified: bool = True,
) -> str:
    """One set per line (sorted ids, space-separated) under a metadata line."""
    meta = f"# backend={backend} modulus={modulus if modulus is not None else '-'} " \
           f"certified={'true' if certified else 'false'}"
    lines = [meta]
    lines.extend(" ".join(map(str, f.elements())) for f in family)
    return "\n".join(lines) + "\n"


def parse_family(text: str, n: int) -> tuple[list[VertexSet], dict[str, str]]:
    meta: dict[str, str] = {}
    sets: list[VertexSet] = []
    for raw in text.splitlines():
        if raw.startswith("#"):
            for item in raw[1:].split():
                if "=" in item:
                    k, v = item.split("=", 1)
                    meta[k] = v
            continue
        sets.append(VertexSet.from_ids(n, (int(x) for x in raw.split())))
    return sets, meta
