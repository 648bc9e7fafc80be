from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cabl.logic import KnowledgeBase, parse_program
from cabl.partition import (
    Cluster,
    DependencyGraph,
    PartitionError,
    build_dependency_graph,
    initial_clusters,
    merge_and_order,
    partition,
    to_dot,
)

GOLDEN = Path(__file__).parent / "golden"


def _rules_with_head(kb, name):
    return {r.id for r in kb.rules if r.head.predicate == name}


# --------------------------------------------------------------------------- dependency graph


def test_digit_rules_feed_every_number3_rule_using_digit(add10):
    kb = add10.kb
    g = build_dependency_graph(kb)
    digit = _rules_with_head(kb, "digit")
    users = {r.id for r in kb.rules if any(a.predicate == "digit" for a in r.body_atoms())}
    assert users and all(kb.rules[u].head.key == ("number", 3) for u in users)
    assert {(d, u) for d in digit for u in users} <= g.edges


def test_isolated_fact_has_no_edges():
    kb = parse_program("@target t/0.\nt.\n")
    g = build_dependency_graph(kb)
    assert g.nodes == frozenset({0}) and not g.edges


def test_recursive_number_rule_is_a_self_loop(add10):
    kb = add10.kb
    (rec,) = [r.id for r in kb.rules if r.head.key == ("number", 3) and r.body]
    assert (rec, rec) in build_dependency_graph(kb).edges


# --------------------------------------------------------------------------- clusters


def _cluster(kb, concept):
    g = build_dependency_graph(kb)
    return next(c for c in initial_clusters(kb, g) if concept in c.seed_concepts)


def test_knight_cluster_contents(chess):
    kb = chess.kb
    heads = sorted(kb.rules[i].head.predicate for i in _cluster(kb, "knight").rule_ids)
    assert heads == ["attack", "fwd", "left", "lshape"]


def test_queen_cluster_uses_line_and_diag(chess):
    kb = chess.kb
    heads = {kb.rules[i].head.predicate for i in _cluster(kb, "queen").rule_ids}
    assert {"line", "diag", "line_or_diag", "neg"} <= heads


def test_every_digit_cluster_holds_the_shared_arithmetic(add10):
    kb = add10.kb
    shared = _rules_with_head(kb, "addition") | _rules_with_head(kb, "number")
    for c in initial_clusters(kb, build_dependency_graph(kb)):
        assert shared <= c.rule_ids


def test_unreferenced_concept_is_rejected():
    kb = KnowledgeBase((), (("ghost", 1),), ("t", 0))
    with pytest.raises(PartitionError, match="not referenced"):
        initial_clusters(kb, build_dependency_graph(kb))


# --------------------------------------------------------------------------- ordering


def test_rook_and_bishop_precede_queen(chess):
    names = [min(c.seed_concepts) for c in partition(chess.kb).clusters]
    assert names.index("rook") < names.index("queen")
    assert names.index("bishop") < names.index("queen")


def test_duplicate_clusters_merge():
    g = DependencyGraph(frozenset({0, 1}), frozenset())
    a = Cluster(frozenset({"a"}), frozenset({0, 1}), frozenset({"a"}))
    b = Cluster(frozenset({"b"}), frozenset({0, 1}), frozenset({"b"}))
    (merged,) = merge_and_order([a, b], g)
    assert merged.seed_concepts == {"a", "b"} and merged.concept_domain == {"a", "b"}


def test_mutual_dependency_puts_fewer_rules_first():
    # "alpha" would win a name tie, so only the rule count can put "zeta" first
    small = Cluster(frozenset({"zeta"}), frozenset({0, 1, 2}), frozenset({"zeta"}))
    big = Cluster(frozenset({"alpha"}), frozenset({3, 4, 5, 6, 7}), frozenset({"alpha"}))
    g = DependencyGraph(frozenset(range(8)), frozenset({(0, 3), (3, 0)}))
    order = merge_and_order([big, small], g)
    assert [len(c.rule_ids) for c in order] == [3, 5]


def test_one_way_edge_overrides_size():
    big = Cluster(frozenset({"b"}), frozenset({0, 1, 2, 3}), frozenset({"b"}))
    small = Cluster(frozenset({"a"}), frozenset({4}), frozenset({"a"}))
    g = DependencyGraph(frozenset(range(5)), frozenset({(0, 4)}))
    assert [min(c.seed_concepts) for c in merge_and_order([small, big], g)] == ["b", "a"]


# --------------------------------------------------------------------------- assembly


def test_chess_golden_partition(chess):
    lines = partition(chess.kb).summary_lines()
    assert lines == (GOLDEN / "chess_partition.txt").read_text().splitlines()


def test_chess_first_subbase_is_the_knight_cluster(chess):
    cur = partition(chess.kb)
    assert cur[0].rule_ids == _cluster(chess.kb, "knight").rule_ids
    assert cur[0].domain == ("knight",)


@pytest.mark.parametrize("base, phases", [(10, 5), (16, 8)])
def test_addition_tau2_phase_counts(base, phases):
    from cabl.tasks import make_addition_task

    cur = partition(make_addition_task(base, 1).kb, 2)
    assert len(cur) == phases
    assert all(len(p.new_concepts) >= 2 for p in cur)


def test_tau_equal_to_concept_count_gives_one_phase(add10):
    (only,) = partition(add10.kb, 10)
    assert only.rule_ids == add10.kb.rule_ids and len(only.domain) == 10


def test_tau_above_concept_count_is_rejected(add10):
    with pytest.raises(PartitionError, match="exceeds"):
        partition(add10.kb, 11)


def test_no_concepts_is_rejected():
    with pytest.raises(PartitionError, match="no concepts"):
        partition(parse_program("@target t/0.\nt.\n"))


def test_partition_is_deterministic(chess):
    assert partition(chess.kb, 2) == partition(chess.kb, 2)


def test_partition_time_is_recorded(chess):
    assert 0 < partition(chess.kb).elapsed_seconds < 5


def test_dot_output_lists_every_rule_and_edge(chess):
    kb = chess.kb
    text = to_dot(kb, partition(kb))
    assert text.startswith("digraph kb {") and text.rstrip().endswith("}")
    assert text.count("subgraph cluster_") == 6
    for r in kb.rules:
        assert f"  r{r.id} [label=" in text or f"    r{r.id} [label=" in text
    for i, j in build_dependency_graph(kb).edges:
        assert f"r{i} -> r{j};" in text


# --------------------------------------------------------------------------- invariants


def _check_curriculum(kb, cur, tau):
    concepts = set(kb.concept_names)
    for prev, nxt in zip(cur, cur.phases[1:]):
        assert prev.rule_ids < nxt.rule_ids or prev.domain != nxt.domain
        assert prev.rule_ids <= nxt.rule_ids
        assert nxt.domain[: len(prev.domain)] == prev.domain
        assert nxt.new_concepts
    assert cur[-1].rule_ids == kb.rule_ids
    assert set(cur[-1].domain) == concepts
    for p in cur.phases[:-1]:
        if tau is not None:
            assert len(p.new_concepts) >= tau
    for p in cur:
        assert set(p.kb.concept_names) == set(p.domain)
        assert p.kb.rule_ids == p.rule_ids


@pytest.mark.parametrize("tau", [None, 1, 2, 3])
def test_shipped_kbs_satisfy_invariants(add10, add16, chess, tau):
    for task in (add10, add16, chess):
        _check_curriculum(task.kb, partition(task.kb, tau), tau)


@st.composite
def _layered_kb(draw):
    """Concept facts feed middle predicates, which feed the target (possibly via each other)."""
    n_concepts = draw(st.integers(1, 5))
    n_mid = draw(st.integers(1, 3))
    lines = [f"@concept c{j}/1." for j in range(n_concepts)] + ["@target t/1."]
    lines += [f"t(X) :- m{a}(X)." for a in range(n_mid)]
    for j in range(n_concepts):
        lines.append(f"m{draw(st.integers(0, n_mid - 1))}(X) :- c{j}(X).")
    for a in range(n_mid - 1):
        if draw(st.booleans()):
            lines.append(f"m{a}(X) :- m{draw(st.integers(a + 1, n_mid - 1))}(X).")
    if draw(st.booleans()):
        lines.append(f"m{n_mid - 1}(X) :- m0(X).")  # optional cycle
    return parse_program("\n".join(lines) + "\n")


@settings(max_examples=150, deadline=None)
@given(_layered_kb(), st.integers(1, 5) | st.none())
def test_random_layered_kbs_satisfy_invariants(kb, tau):
    if tau is not None and tau > len(kb.concepts):
        with pytest.raises(PartitionError):
            partition(kb, tau)
        return
    cur = partition(kb, tau)
    _check_curriculum(kb, cur, tau)
    assert partition(kb, tau) == cur
