"""Parameter derivation, the two-stage DP, and the property validator.

The completeness oracle enumerates all path tuples satisfying the eight
structural properties by depth-first search; the DP must agree with it on
every small instance.
"""

from __future__ import annotations

import random

import pytest

from kpath.cutpath import (
    CutInstance,
    CutParams,
    DPStats,
    InfeasibleParamsError,
    derive_params,
    k_table_step,
    m_table_step,
    solve_cut,
    validate_properties,
)
from kpath.graph import Digraph, VertexSet


def path_graph(n):
    return Digraph(n, [(i, i + 1) for i in range(n - 1)])


def make_inst(g, k, left_ids, ve, order):
    left = VertexSet.from_ids(g.n, left_ids)
    return CutInstance(g, k, left, left.complement(), tuple(ve), tuple(order))


# ---------------------------------------------------------------------------
# derive_params
# ---------------------------------------------------------------------------


def test_derive_params_hand_values():
    p = derive_params(100, eps=0.05, delta=0.5, zeta=0.7)
    assert (p.m, p.psize, p.lnum, p.rnum) == (10, 5, 15, 73)
    assert p.tail_size == 100 - 2 - 10 - 50


def test_derive_params_override_hand_values():
    p = derive_params(5, zeta=0.0, m=1, psize=1)
    assert (p.lnum, p.rnum) == (1, 1)


def test_lnum_never_exceeds_total():
    rng = random.Random(1)
    for _ in range(200):
        k = rng.randint(6, 60)
        m = rng.randint(1, 3)
        psize = rng.randint(1, 3)
        zeta = rng.random() * 0.95
        try:
            p = derive_params(k, zeta=zeta, m=m, psize=psize)
        except InfeasibleParamsError:
            continue
        assert 0 <= p.lnum <= m * psize
        assert p.lnumi(m) <= p.lnum
        lnumis = [p.lnumi(i) for i in range(m + 1)]
        assert lnumis == sorted(lnumis)


def test_derive_params_rejects_bad_tunables():
    with pytest.raises(InfeasibleParamsError) as exc:
        derive_params(3, zeta=0.0, m=0, psize=1)
    assert not exc.value.recoverable
    with pytest.raises(InfeasibleParamsError) as exc:
        derive_params(10, eps=0.3, delta=0.5, zeta=0.1)  # delta/eps not integral
    assert not exc.value.recoverable
    with pytest.raises(InfeasibleParamsError) as exc:
        derive_params(4, zeta=0.0, m=1, psize=1)  # tail would be empty
    assert exc.value.recoverable
    with pytest.raises(InfeasibleParamsError) as exc:
        derive_params(5, zeta=0.0, m=2, psize=2)  # rnum negative
    assert exc.value.recoverable


def test_float_rounding_in_formulas():
    # 0.7 * 50 rounds below 35.0 in floating point; the floor must not drop to 34
    p = derive_params(100, eps=0.05, delta=0.5, zeta=0.7)
    assert p.lnum == 15
    # ceil(0.05 * 100) must stay at 5, not jump to 6
    assert p.psize == 5


# ---------------------------------------------------------------------------
# table steps on the 5-vertex path graph
# ---------------------------------------------------------------------------


def five_path_setup():
    g = path_graph(5)
    params = derive_params(5, zeta=0.0, m=1, psize=1)
    inst = make_inst(g, 5, [1], (0, 2, 4), (0,))
    return g, params, inst


def test_m_table_base_cases():
    _, params, inst = five_path_setup()
    entry = m_table_step(1, 1, 0, 1, {}, inst, params)
    assert entry.masks == (1 << 1,)
    assert entry.provenance == (None,)
    # v in left but j_l = 0 demands a right-side vertex: empty
    entry = m_table_step(1, 0, 1, 1, {}, inst, params)
    assert entry.masks == ()


def test_k_table_handoff_and_acceptance():
    _, params, inst = five_path_setup()
    m_table = {(1, 1, 0, 1): m_table_step(1, 1, 0, 1, {}, inst, params)}
    entry = k_table_step(1, 3, {}, m_table, inst, params)
    assert entry.masks == (1 << 3,)
    table, key, mask = entry.provenance[0]
    assert table == "M" and key == (1, 1, 0, 1) and mask == 1 << 1


def test_solve_cut_path_graph_yes():
    g, params, inst = five_path_setup()
    witness = solve_cut(inst, params)
    assert witness == [[0, 1, 2], [2, 3, 4]]
    assert validate_properties(witness, inst, params) == []


def test_solve_cut_edge_removed_no():
    g = Digraph(5, [(0, 1), (1, 2), (2, 3)])
    params = derive_params(5, zeta=0.0, m=1, psize=1)
    inst = make_inst(g, 5, [1], (0, 2, 4), (0,))
    assert solve_cut(inst, params) is None


def test_solve_cut_no_edges():
    g = Digraph(5, [])
    params = derive_params(5, zeta=0.0, m=1, psize=1)
    inst = make_inst(g, 5, [1], (0, 2, 4), (0,))
    assert solve_cut(inst, params) is None


# ---------------------------------------------------------------------------
# validate_properties
# ---------------------------------------------------------------------------


def test_validate_good_witness():
    _, params, inst = five_path_setup()
    assert validate_properties([[0, 1, 2], [2, 3, 4]], inst, params) == []


def test_validate_empty_left_breaks_6_and_7():
    g = path_graph(5)
    params = derive_params(5, zeta=0.0, m=1, psize=1)
    inst = make_inst(g, 5, [], (0, 2, 4), (0,))
    assert validate_properties([[0, 1, 2], [2, 3, 4]], inst, params) == [6, 7]


def test_validate_shared_internal_breaks_3():
    g = Digraph(5, [(0, 1), (1, 2), (2, 1), (1, 4), (2, 3), (3, 4)])
    params = derive_params(5, zeta=0.0, m=1, psize=1)
    inst = make_inst(g, 5, [1], (0, 2, 4), (0,))
    violations = validate_properties([[0, 1, 2], [2, 1, 4]], inst, params)
    assert 3 in violations


def test_validate_rejects_non_walk():
    _, params, inst = five_path_setup()
    with pytest.raises(ValueError, match="missing edge"):
        validate_properties([[0, 3, 2], [2, 3, 4]], inst, params)
    with pytest.raises(ValueError, match="repeats"):
        validate_properties([[0, 0, 2], [2, 3, 4]], inst, params)


def test_validate_wrong_sizes():
    g = Digraph(6, [(0, 1), (1, 2), (2, 3), (2, 4), (4, 3), (3, 5)])
    params = derive_params(6, zeta=0.0, m=1, psize=1)
    inst = make_inst(g, 6, [1], (0, 2, 3), (0,))
    # second path has 2 internal vertices instead of tail_size = 2: actually
    # tail_size = 6-2-1-1 = 2, so use a short tail to break property 5
    violations = validate_properties([[0, 1, 2], [2, 4, 3]], inst, params)
    assert 5 in violations


# ---------------------------------------------------------------------------
# completeness against a property-enumerating oracle
# ---------------------------------------------------------------------------


def brute_cut(inst: CutInstance, params: CutParams):
    """DFS over all path tuples satisfying the eight properties."""
    g = inst.g
    m = params.m
    excluded = set(inst.endpoints_seq)
    sizes = [params.psize] * m + [params.tail_size]

    def paths_between(s, t, internal_count, used, within_right):
        out = []

        def extend(v, acc):
            if len(acc) == internal_count:
                if g.has_edge(v, t):
                    out.append(list(acc))
                return
            for u in g.out_adj[v]:
                if u in excluded or u in used or u in acc or u == t:
                    continue
                if within_right and u not in inst.right:
                    continue
                acc.append(u)
                extend(u, acc)
                acc.pop()

        extend(s, [])
        return out

    def rec(step, used, acc):
        if step == m + 2:
            return list(acc)
        i = step
        s, t = inst.start_of(i), inst.end_of(i)
        for internals in paths_between(s, t, sizes[i - 1], used, within_right=(i == m + 1)):
            tuple_paths = acc + [[s] + internals + [t]]
            prefix_left = 0
            ok = True
            for j, pth in enumerate(tuple_paths[:m], start=1):
                prefix_left += sum(1 for v in pth[1:-1] if v in inst.left)
                if j <= len(tuple_paths) and prefix_left < params.lnumi(j):
                    ok = False
                    break
            if not ok:
                continue
            if len(tuple_paths) == m + 1:
                total_left = sum(
                    1 for pth in tuple_paths[:m] for v in pth[1:-1] if v in inst.left
                )
                if total_left != params.lnum:
                    continue
            got = rec(step + 1, used | set(internals), tuple_paths)
            if got is not None:
                return got
        return None

    return rec(1, set(), [])


def test_solve_cut_matches_property_oracle():
    rng = random.Random(31)
    checked = 0
    for trial in range(220):
        n = rng.randint(5, 7)
        density = rng.choice([0.25, 0.4, 0.6])
        edges = [
            (u, v) for u in range(n) for v in range(n) if u != v and rng.random() < density
        ]
        g = Digraph(n, edges)
        m = rng.choice([1, 1, 2])
        psize = rng.choice([1, 2])
        zeta = rng.choice([0.0, 0.3, 0.5])
        k = 2 + m + m * psize + rng.randint(1, 2)
        if k > n:
            continue
        try:
            params = derive_params(k, zeta=zeta, m=m, psize=psize)
        except InfeasibleParamsError:
            continue
        ve = tuple(rng.sample(range(n), m + 2))
        order = tuple(rng.sample(range(m), m))
        left = VertexSet.from_ids(n, [v for v in range(n) if rng.random() < 0.5])
        inst = CutInstance(g, k, left, left.complement(), ve, order)
        expect = brute_cut(inst, params)
        got = solve_cut(inst, params)
        assert (got is None) == (expect is None), (n, k, m, psize, zeta, ve, order, g.edges)
        if got is not None:
            assert validate_properties(got, inst, params) == []
        checked += 1
    assert checked >= 60


def test_solve_cut_deterministic_and_monotone_stats():
    g, params, inst = five_path_setup()
    s1, s2 = DPStats(), DPStats()
    w1 = solve_cut(inst, params, stats=s1)
    w2 = solve_cut(inst, params, stats=s2)
    assert w1 == w2
    assert (s1.entries, s1.raw_members, s1.kept_members) == (
        s2.entries,
        s2.raw_members,
        s2.kept_members,
    )
    assert s1.kept_members <= s1.raw_members


def test_steps_out_of_range_are_empty():
    _, params, inst = five_path_setup()
    # j_l exceeds lnum
    assert m_table_step(1, 2, 0, 1, {}, inst, params).masks == ()
    # v is an endpoint
    assert m_table_step(1, 1, 0, 2, {}, inst, params).masks == ()
    # v outside the right side
    m_table = {(1, 1, 0, 1): m_table_step(1, 1, 0, 1, {}, inst, params)}
    assert k_table_step(1, 1, {}, m_table, inst, params).masks == ()
    # j above rnum
    assert k_table_step(5, 3, {}, m_table, inst, params).masks == ()


class _LoggingTable(dict):
    def __init__(self):
        super().__init__()
        self.reads = []

    def get(self, key, default=None):
        self.reads.append(key)
        return super().get(key, default)


def test_monotone_dependency_and_entry_profiles():
    # dense graph so many entries materialize
    n = 6
    g = Digraph(n, [(u, v) for u in range(n) for v in range(n) if u != v])
    params = derive_params(6, zeta=0.5, m=1, psize=2)
    left = VertexSet.from_ids(n, [0, 2, 4])
    inst = CutInstance(g, 6, left, left.complement(), (0, 3, 5), (0,))
    m, psize, lnum, rnum = params.m, params.psize, params.lnum, params.rnum

    m_table = _LoggingTable()
    for total in range(1, m * psize + 1):
        i = (total + psize - 1) // psize
        for j_l in range(0, min(i * psize, lnum) + 1):
            j_r = total - j_l
            if j_r < 0:
                continue
            for v in range(n):
                entry = m_table_step(i, j_l, j_r, v, m_table, inst, params)
                for key in m_table.reads:
                    assert key[1] + key[2] == total - 1  # reads one level down only
                m_table.reads.clear()
                if entry.masks:
                    m_table[entry.key] = entry
                    # per-key profile: j_l left elements, j_r right, v present
                    for member in entry.family_sets(n):
                        assert member.intersection_size(inst.left) == j_l
                        assert member.intersection_size(inst.right) == j_r
                        assert v in member

    j_min = 1 + m * psize - lnum
    k_table = _LoggingTable()
    for j in range(j_min, rnum + 1):
        for v in range(n):
            entry = k_table_step(j, v, k_table, m_table, inst, params)
            for key in k_table.reads:
                assert key[0] == j - 1
            k_table.reads.clear()
            if entry.masks:
                k_table[entry.key] = entry
                for member in entry.family_sets(n):
                    assert member.issubset(inst.right)
                    assert len(member) == j and v in member


def test_zero_lnum_override_permits_jl_zero_keys():
    g = path_graph(5)
    params = derive_params(5, zeta=0.9, m=1, psize=1, lnum=0)
    assert (params.lnum, params.rnum) == (0, 2)
    inst = make_inst(g, 5, [], (0, 2, 4), (0,))
    witness = solve_cut(inst, params)
    assert witness == [[0, 1, 2], [2, 3, 4]]
    assert validate_properties(witness, inst, params) == []


def test_trace_rows_have_reductions():
    rng = random.Random(5)
    n = 6
    edges = [(u, v) for u in range(n) for v in range(n) if u != v]
    g = Digraph(n, edges)
    params = derive_params(6, zeta=0.5, m=1, psize=2)
    inst = make_inst(g, 6, [0, 2, 4], (0, 3, 5), (0,))
    trace = []
    solve_cut(inst, params, trace=trace)
    assert trace
    for table, key, raw, reduced in trace:
        assert table in ("M", "K")
        assert reduced <= raw
