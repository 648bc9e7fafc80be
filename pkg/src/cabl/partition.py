"""Split a knowledge base into a nested curriculum of sub-bases.

Rules are nodes of a dependency graph with an edge ``r_i -> r_j`` when the
head predicate of ``r_i`` occurs in the body of ``r_j``.  Every concept
label seeds a cluster (the rules mentioning it, what they feed into on the
way to the target, and the definitions those rules rely on); clusters are
ordered along cross-cluster edges and accumulated into sub-bases.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

from .logic import KnowledgeBase


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset
    edges: frozenset

    def successors(self, rule_id: int) -> list[int]:
        return sorted(j for i, j in self.edges if i == rule_id)

    def as_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.nodes))
        g.add_edges_from(sorted(self.edges))
        return g


@dataclass(frozen=True)
class Cluster:
    seed_concepts: frozenset
    rule_ids: frozenset
    concept_domain: frozenset

    @property
    def sort_key(self) -> tuple:
        # fewer rules first, then the smallest concept name
        return (len(self.rule_ids), min(self.seed_concepts))


@dataclass(frozen=True)
class Phase:
    index: int
    rule_ids: frozenset
    domain: tuple
    new_concepts: tuple
    kb: KnowledgeBase = field(repr=False, compare=False)

    def summary(self) -> str:
        return (
            f"phase {self.index}: +{{{', '.join(self.new_concepts)}}} "
            f"rules={len(self.rule_ids)} |Z_p|={len(self.domain)}"
        )


@dataclass(frozen=True)
class Curriculum:
    phases: tuple
    tau: int | None
    clusters: tuple = ()
    elapsed_seconds: float = field(default=0.0, compare=False)

    def __len__(self) -> int:
        return len(self.phases)

    def __iter__(self):
        return iter(self.phases)

    def __getitem__(self, i) -> Phase:
        return self.phases[i]

    def summary_lines(self) -> list[str]:
        return [p.summary() for p in self.phases]


def build_dependency_graph(kb: KnowledgeBase) -> DependencyGraph:
    users: dict = {}
    for r in kb.rules:
        for key in {a.key for a in r.body_atoms()}:
            users.setdefault(key, []).append(r.id)
    edges = {(r.id, j) for r in kb.rules for j in users.get(r.head.key, ())}
    return DependencyGraph(frozenset(r.id for r in kb.rules), frozenset(edges))


def _concepts_in(kb: KnowledgeBase, rule_ids: Iterable[int]) -> frozenset:
    concepts = set(kb.concepts)
    rules = {r.id: r for r in kb.rules}
    return frozenset(a.predicate for i in rule_ids for a in rules[i].body_atoms() if a.key in concepts)


def initial_clusters(kb: KnowledgeBase, g: DependencyGraph) -> list[Cluster]:
    """One cluster per concept label, in declaration order."""
    concepts = set(kb.concepts)
    rules = {r.id: r for r in kb.rules}
    mentions = {r.id: {a.key for a in r.body_atoms()} & concepts for r in kb.rules}
    definers: dict = {}
    for r in kb.rules:
        definers.setdefault(r.head.key, []).append(r.id)
    succ: dict = {}
    for i, j in g.edges:
        succ.setdefault(i, set()).add(j)
    scc_of = {}
    for comp in nx.strongly_connected_components(g.as_networkx()):
        comp = frozenset(comp)
        for i in comp:
            scc_of[i] = comp

    out = []
    for concept in kb.concepts:
        seed = [r.id for r in kb.rules if concept in mentions[r.id]]
        if not seed:
            raise PartitionError(f"concept {concept[0]}/{concept[1]} is not referenced by any rule")

        def foreign(rule_id: int) -> bool:
            # rules anchored on other concepts belong to those concepts' clusters
            return bool(mentions[rule_id] - {concept})

        # toward the target: whatever consumes the seed rules' conclusions
        forward = set(seed)
        frontier = list(seed)
        while frontier:
            i = frontier.pop()
            for j in succ.get(i, ()):
                if j not in forward and not foreign(j):
                    forward.add(j)
                    frontier.append(j)

        # definitions of the intermediate predicates those rules use, plus whole cycles
        members = set(forward)
        frontier = list(members)
        while frontier:
            i = frontier.pop()
            needed = [d for a in rules[i].body_atoms() for d in definers.get(a.key, ())]
            for j in needed + sorted(scc_of[i]):
                if j not in members and (not foreign(j) or j in scc_of[i]):
                    members.add(j)
                    frontier.append(j)

        out.append(
            Cluster(
                seed_concepts=frozenset({concept[0]}),
                rule_ids=frozenset(members),
                concept_domain=_concepts_in(kb, members),
            )
        )
    return out


def merge_and_order(clusters: Sequence[Cluster], g: DependencyGraph) -> list[Cluster]:
    """Merge duplicate clusters and sort them along cross-cluster edges."""
    merged: dict = {}
    for c in clusters:
        prev = merged.get(c.rule_ids)
        if prev is None:
            merged[c.rule_ids] = c
        else:
            merged[c.rule_ids] = Cluster(
                prev.seed_concepts | c.seed_concepts,
                c.rule_ids,
                prev.concept_domain | c.concept_domain,
            )
    nodes = sorted(merged.values(), key=lambda c: c.sort_key)
    n = len(nodes)

    depends = [[False] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            if a != b:
                ra, rb = nodes[a].rule_ids, nodes[b].rule_ids
                depends[a][b] = any(i in ra and j in rb for i, j in g.edges)
    # two-way dependency: the cluster with fewer rules goes first
    for a in range(n):
        for b in range(a + 1, n):
            if depends[a][b] and depends[b][a]:
                depends[b][a] = False

    indegree = [sum(depends[a][b] for a in range(n)) for b in range(n)]
    remaining = set(range(n))
    ready = [(nodes[b].sort_key, b) for b in range(n) if indegree[b] == 0]
    heapq.heapify(ready)
    order = []
    while remaining:
        if not ready:
            # a longer cycle survived the pairwise rule; release the smallest cluster
            b = min(remaining, key=lambda k: nodes[k].sort_key)
            ready.append((nodes[b].sort_key, b))
        _, a = heapq.heappop(ready)
        if a not in remaining:
            continue
        remaining.discard(a)
        order.append(nodes[a])
        for b in sorted(remaining):
            if depends[a][b]:
                indegree[b] -= 1
                if indegree[b] == 0:
                    heapq.heappush(ready, (nodes[b].sort_key, b))
    return order


def assemble_subbases(kb: KnowledgeBase, ordered: Sequence[Cluster], tau: int | None = None) -> Curriculum:
    """Accumulate ordered clusters into nested sub-bases.

    A cluster that brings fewer than ``tau`` new concepts is merged into its
    successor; the last phase is exempt and always covers the whole KB.
    """
    n_concepts = len(kb.concepts)
    if tau is not None:
        if tau < 1:
            raise PartitionError("tau must be a positive integer")
        if tau > n_concepts:
            raise PartitionError(f"tau={tau} exceeds the number of concepts ({n_concepts})")
    if not ordered:
        raise PartitionError("nothing to partition")

    declared = kb.concept_names
    rules: set = set()
    domain: list = []
    pending: list = []
    phases = []
    for i, cluster in enumerate(ordered):
        rules |= cluster.rule_ids
        fresh = [c for c in declared if c in cluster.concept_domain and c not in domain and c not in pending]
        pending.extend(fresh)
        last = i == len(ordered) - 1
        if not last and tau is not None and len(pending) < tau:
            continue
        if last:
            rules = set(kb.rule_ids)
            pending.extend(c for c in declared if c not in domain and c not in pending)
        if not pending and phases:
            # nothing new: fold these rules into the previous phase
            prev = phases.pop()
            pending = list(prev[2])
            domain = [c for c in domain if c not in pending]
        domain.extend(pending)
        phases.append((frozenset(rules), tuple(domain), tuple(pending)))
        pending = []

    concept_keys = dict(kb.concepts)
    built = tuple(
        Phase(
            index=p + 1,
            rule_ids=rule_ids,
            domain=dom,
            new_concepts=new,
            kb=kb.restrict(rule_ids, [(c, concept_keys[c]) for c in dom]),
        )
        for p, (rule_ids, dom, new) in enumerate(phases)
    )
    return Curriculum(built, tau, tuple(ordered))


def partition(kb: KnowledgeBase, tau: int | None = None) -> Curriculum:
    """Full partitioning pipeline; records the wall-clock time it took."""
    start = time.perf_counter()
    if not kb.concepts:
        raise PartitionError("knowledge base declares no concepts")
    g = build_dependency_graph(kb)
    ordered = merge_and_order(initial_clusters(kb, g), g)
    curriculum = assemble_subbases(kb, ordered, tau)
    elapsed = time.perf_counter() - start
    return Curriculum(curriculum.phases, curriculum.tau, curriculum.clusters, elapsed)


def single_phase(kb: KnowledgeBase) -> Curriculum:
    """The un-partitioned baseline: one phase holding the whole KB."""
    phase = Phase(1, kb.rule_ids, kb.concept_names, kb.concept_names, kb)
    return Curriculum((phase,), None)


def to_dot(kb: KnowledgeBase, curriculum: Curriculum) -> str:
    """Dependency graph in DOT; each rule sits in the first cluster containing it."""
    g = build_dependency_graph(kb)
    rules = {r.id: r for r in kb.rules}
    placed: set = set()
    lines = ["digraph kb {", "  node [shape=box, fontname=monospace];"]
    for k, cluster in enumerate(curriculum.clusters):
        members = sorted(cluster.rule_ids - placed)
        placed |= set(members)
        lines.append(f"  subgraph cluster_{k} {{")
        lines.append(f'    label="{", ".join(sorted(cluster.seed_concepts))}";')
        for i in members:
            lines.append(f'    r{i} [label="{_dot_escape(repr(rules[i].head))}"];')
        lines.append("  }")
    for i in sorted(set(rules) - placed):
        lines.append(f'  r{i} [label="{_dot_escape(repr(rules[i].head))}"];')
    for i, j in sorted(g.edges):
        lines.append(f"  r{i} -> r{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
