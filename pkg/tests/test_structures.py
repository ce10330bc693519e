import itertools

import networkx as nx
import pytest
from networkx.algorithms.isomorphism import categorical_node_match

from isomergen.oracle import _parse_molecule, min_rooting_key
from isomergen.series import apply_cycle_index, cycle_index, dct_unroot, solve_rooted_series
from isomergen.structures import (CardinalityMismatch, CodeSyntaxError, FreeStructure,
                                  NonCanonicalError, RootedStructure, StructureSet, ValenceError,
                                  assemble_free, canonical_rooted_code, generate_free, grow_rooted,
                                  heavy_orbits, k_multisets, molecular_formula, parse_code)

SUBSETS = ["".join(s) for k in (1, 2, 3) for s in itertools.combinations("CNO", k)]

H = RootedStructure("H")
METHYL = RootedStructure("C", [H, H, H])
N_BUTANE = "=(C(C(H,H,H),H,H),C(C(H,H,H),H,H))"
ISOBUTANE = "!C(C(H,H,H),C(H,H,H),C(H,H,H),H)"


@pytest.fixture(scope="module")
def chno_rooted():
    return grow_rooted("CNO", n_max=6)


@pytest.fixture(scope="module")
def chno_free():
    return generate_free("CNO", n_max=7)


def test_radical_codes():
    assert canonical_rooted_code(METHYL) == "*C(H,H,H)"
    ethyl = RootedStructure("C", [H, METHYL, H])
    assert canonical_rooted_code(ethyl) == "*C(C(H,H,H),H,H)"


def test_propyl_codes():
    assert grow_rooted("C", n_max=3).codes(3) == ["*C(C(C(H,H,H),H,H),H,H)", "*C(C(H,H,H),C(H,H,H),H)"]


def test_rooted_structure_enforces_branch_count():
    with pytest.raises(ValueError):
        RootedStructure("C", [H])


def test_free_structure_constructor_checks():
    assert FreeStructure("C", [H, H, H, H]).code == "!C(H,H,H,H)"
    with pytest.raises(ValueError):
        FreeStructure(None, [METHYL, RootedStructure("C", [H, H, METHYL])])
    with pytest.raises(ValueError):
        FreeStructure("H", [H])


# --- parsing ---------------------------------------------------------------

def test_parse_methyl():
    s = parse_code("*C(H,H,H)")
    assert isinstance(s, RootedStructure) and s == METHYL


@pytest.mark.parametrize("code,error,position", [
    ("*C(H)", ValenceError, 1),
    ("*C(H,C(H,H,H),H)", NonCanonicalError, 5),
    ("*C(H,H,H", CodeSyntaxError, 8),
    ("C(H,H,H)", CodeSyntaxError, 0),
    ("*C(H,H,H)x", CodeSyntaxError, 9),
    ("*H(H)", ValenceError, 1),
    ("*X", CodeSyntaxError, 1),
    ("!H(C(H,H,H))", NonCanonicalError, 1),
    ("!C(H,H,H)", ValenceError, 1),
    ("!C(C(C(H,H,H),H,H),H,H,H)", NonCanonicalError, 3),
    ("=(C(H,H,H),C(C(H,H,H),H,H))", NonCanonicalError, 11),
    ("=(C(H,H,H),H)", NonCanonicalError, 11),
    ("=(N(H,H),C(H,H,H))", NonCanonicalError, 9),
    ("=(C(H,H,H))", CodeSyntaxError, 1),
])
def test_parse_errors(code, error, position):
    with pytest.raises(error) as info:
        parse_code(code)
    assert info.value.position == position


def test_parse_accepts_leaf_radicals():
    assert parse_code("*H").code == "*H"
    assert parse_code("*F").code == "*F"


def test_round_trip_all_structures(chno_rooted, chno_free):
    for s in itertools.chain(chno_rooted, grow_rooted("CNO", True, 3), chno_free,
                             generate_free("CNO", True, 4)):
        back = parse_code(s.code)
        assert back.code == s.code
        assert back.counts == s.counts


# --- multisets -------------------------------------------------------------

def test_k_multisets_small_pool():
    pool = [H, METHYL]
    pairs = [tuple(m.code for m in ms) for ms in k_multisets(pool, 2, 10)]
    assert sorted(pairs) == [("*C(H,H,H)", "*C(H,H,H)"), ("*C(H,H,H)", "*H"), ("*H", "*H")]
    assert len(list(k_multisets(pool, 3, 10))) == 4


def test_k_multisets_respects_budget():
    pool = grow_rooted("C", n_max=3)
    for ms in k_multisets(pool, 3, 2):
        assert sum(m.degree for m in ms) <= 2


def test_k_multisets_members_sorted_and_unique():
    pool = grow_rooted("CNO", n_max=3)
    seen = set()
    for ms in k_multisets(pool, 3, 4):
        codes = tuple(m.code for m in ms)
        assert list(codes) == sorted(codes)
        assert codes not in seen
        seen.add(codes)


def test_k_multisets_match_s3_bracket():
    # branch triples summing to 2 heavy atoms are exactly the degree-3 alkyls
    pool = grow_rooted("C", n_max=2)
    a = solve_rooted_series("C", n_max=3)
    bracket = apply_cycle_index(cycle_index(3), a)
    triples = [ms for ms in k_multisets(pool, 3, 2) if sum(m.degree for m in ms) == 2]
    assert len(triples) == bracket.coefficient(2) == a.collapse()[3] == 2


# --- growth ----------------------------------------------------------------

def test_chno_degree_one_and_two():
    r = grow_rooted("CNO", n_max=2)
    assert r.codes(1) == ["*C(H,H,H)", "*N(H,H)", "*O(H)"]
    assert len(r.codes(2)) == 9
    assert "*O(O(H))" in r.codes(2)
    assert "*N(H,N(H,H))" in r.codes(2)


@pytest.mark.parametrize("elements", SUBSETS)
def test_rooted_slices_match_series(elements):
    r = grow_rooted(elements, n_max=8)
    a = solve_rooted_series(elements, n_max=8)
    assert [len(r.slice(d)) for d in range(9)] == a.collapse()


@pytest.mark.parametrize("elements", SUBSETS)
def test_free_slices_match_series(elements):
    phi = dct_unroot(solve_rooted_series(elements, n_max=8), elements)[3]
    f = generate_free(elements, n_max=8)
    assert [len(f.slice(d)) for d in range(9)] == phi.collapse()


def test_fluorine_slices_match_series():
    a = solve_rooted_series("CNO", include_F=True, n_max=5)
    phi = dct_unroot(a, "CNO", include_F=True)[3]
    assert [len(grow_rooted("CNO", True, 5).slice(d)) for d in range(6)] == a.collapse()
    assert [len(generate_free("CNO", True, 5).slice(d)) for d in range(6)] == phi.collapse()


def test_butanes():
    assert generate_free("C", n_max=4).codes(4) == [ISOBUTANE, N_BUTANE]


def test_chno_degree_two_molecules():
    f = generate_free("CNO", n_max=2)
    formulas = sorted("".join(f"{k}{v}" for k, v in molecular_formula(m).items() if v) for m in f.slice(2))
    assert formulas == sorted(["C2H6", "C1H5N1", "C1H4O1", "H4N2", "H3N1O1", "H2O2"])


def test_assemble_self_check_raises_on_mismatch():
    rooted = grow_rooted("C", n_max=2)
    phi = dct_unroot(solve_rooted_series("CN", n_max=4), "CN")[3]
    with pytest.raises(CardinalityMismatch) as info:
        assemble_free(rooted, "C", 4, expected=phi)
    assert info.value.degree == 1


def test_assemble_needs_half_size_pool():
    with pytest.raises(ValueError):
        assemble_free(grow_rooted("C", n_max=1), "C", 4)


def test_centroid_conditions(chno_free):
    for m in chno_free:
        n = m.heavy_size
        if m.edge_centered:
            assert m.parts[0].heavy_size == m.parts[1].heavy_size == n // 2
            assert n % 2 == 0
        else:
            assert all(p.heavy_size <= (n - 1) // 2 for p in m.parts)


def test_generation_is_deterministic():
    a = [m.code for m in generate_free("CNO", n_max=6)]
    b = [m.code for m in generate_free("CNO", n_max=6)]
    assert a == b
    for d in range(1, 7):
        codes = generate_free("CNO", n_max=6).codes(d)
        assert codes == sorted(codes)


# --- isomorphism -----------------------------------------------------------

def test_codes_agree_with_independent_isomorphism_key(chno_free):
    # distinct engine codes <=> distinct minimum-over-rootings keys
    for d in chno_free.degrees():
        if d > 6:
            break
        codes = chno_free.codes(d)
        keys = {min_rooting_key(c) for c in codes}
        assert len(keys) == len(codes)


def _graph(code):
    m = _parse_molecule(code)
    g = nx.Graph()
    for v, s in enumerate(m.symbols):
        g.add_node(v, symbol=s)
    for v, nbrs in enumerate(m.adj):
        for u in nbrs:
            g.add_edge(v, u)
    return g


@pytest.mark.parametrize("elements,n", [("C", 7), ("CO", 4), ("CNO", 3)])
def test_codes_agree_with_graph_isomorphism(elements, n):
    match = categorical_node_match("symbol", None)
    mols = generate_free(elements, n_max=n)
    for d in mols.degrees():
        codes = mols.codes(d)
        graphs = [_graph(c) for c in codes]
        for i, j in itertools.combinations(range(len(codes)), 2):
            assert not nx.is_isomorphic(graphs[i], graphs[j], node_match=match), (codes[i], codes[j])
        # and a re-parsed copy is recognised as the same molecule
        for c, g in zip(codes, graphs):
            assert nx.is_isomorphic(_graph(parse_code(c).code), g, node_match=match)


# --- orbits and formulas ---------------------------------------------------

def _oracle_orbits(code):
    m = _parse_molecule(code)
    heavy = [v for v, s in enumerate(m.symbols) if s in "CNO"]
    nodes = {m.rooted_text(v, -1) for v in heavy}
    edges, twin = set(), 0
    for v in heavy:
        for u in m.adj[v]:
            if u > v and m.symbols[u] in "CNO":
                a, b = m.rooted_text(v, u), m.rooted_text(u, v)
                twin |= a == b
                edges.add(tuple(sorted((a, b))))
    return len(nodes), len(edges), int(twin)


def test_butane_orbits():
    assert heavy_orbits(parse_code(N_BUTANE)) == _oracle_orbits(N_BUTANE) == (2, 2, 1)
    assert heavy_orbits(parse_code(ISOBUTANE)) == _oracle_orbits(ISOBUTANE) == (2, 1, 0)
    totals = [sum(x) for x in zip(heavy_orbits(parse_code(N_BUTANE)), heavy_orbits(parse_code(ISOBUTANE)))]
    assert totals == [4, 3, 1]


def test_orbit_identity_everywhere(chno_free):
    for m in itertools.chain(chno_free, generate_free("CNO", True, 4)):
        p, q, r = heavy_orbits(m)
        assert p - q + r == 1, m.code


@pytest.mark.parametrize("with_f,n", [(False, 6), (True, 4)])
def test_orbit_sums_reproduce_dct_terms(with_f, n):
    a = solve_rooted_series("CNO", with_f, n_max=n)
    p, q, r, _ = dct_unroot(a, "CNO", with_f)
    mols = generate_free("CNO", with_f, n_max=n)
    for d in range(1, n + 1):
        orbits = [heavy_orbits(m) for m in mols.slice(d)]
        assert sum(o[0] for o in orbits) == p.coefficient(d)
        assert sum(o[1] for o in orbits) == q.coefficient(d)
        assert sum(o[2] for o in orbits) == r.coefficient(d)


def test_molecular_formulas():
    for n, m in ((1, "!C(H,H,H,H)"), (4, N_BUTANE)):
        f = molecular_formula(parse_code(m))
        assert (f["C"], f["H"]) == (n, 2 * n + 2)
    for r in grow_rooted("C", n_max=5):
        if r.heavy_size:
            f = molecular_formula(r)
            assert f["H"] == 2 * f["C"] + 1
    assert molecular_formula(parse_code("*O(H)")) == {"C": 0, "H": 1, "F": 0, "N": 0, "O": 1}


def test_hydrogen_law(chno_rooted, chno_free):
    for s in itertools.chain(chno_rooted, grow_rooted("CNO", True, 3)):
        if s.heavy_size:
            f = molecular_formula(s)
            assert f["H"] == 2 * f["C"] + f["N"] + 1 - f["F"]
    for s in itertools.chain(chno_free, generate_free("CNO", True, 4)):
        f = molecular_formula(s)
        assert f["H"] == 2 * f["C"] + f["N"] + 2 - f["F"]


def test_structure_set_dedups():
    s = StructureSet([METHYL, METHYL, H])
    assert len(s) == 2
    assert s.counts() == {0: 1, 1: 1}
    assert "*C(H,H,H)" in s
