"""Substitution multigraph over a finite sentence domain.

A substitution instance is a context x and a pair index i: it links
insert(x, y0) and insert(x, y1).  Instances are stored once, oriented from
y0 to y1; traversal in either direction is implied.  Parallel edges between
the same two sentences are kept: they are the source of exponent
constraints, so collapsing them would silently change the model.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .errors import BudgetError, ValidationError
from .strings import (
    Context,
    Dictionary,
    PairFamily,
    Sentence,
    insert,
    occurrences,
    sent_key,
)

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class DomainSpec:
    """Finite domain description: all sentences up to a length bound, all
    sentences of one fixed length, or an explicit list."""

    dictionary: Dictionary
    kind: str  # "length_bounded" | "fixed_length" | "explicit"
    max_len: Optional[int] = None
    length: Optional[int] = None
    sentences: Optional[tuple[Sentence, ...]] = None
    budget: int = DEFAULT_BUDGET

    @classmethod
    def length_bounded(cls, dictionary: Dictionary, max_len: int, budget: int = DEFAULT_BUDGET):
        if max_len < 1:
            raise ValidationError("max_len must be at least 1")
        return cls(dictionary, "length_bounded", max_len=max_len, budget=budget)

    @classmethod
    def fixed_length(cls, dictionary: Dictionary, length: int, budget: int = DEFAULT_BUDGET):
        if length < 1:
            raise ValidationError("length must be at least 1")
        return cls(dictionary, "fixed_length", length=length, budget=budget)

    @classmethod
    def explicit(cls, dictionary: Dictionary, sentences: Iterable[Sentence]):
        seen = set()
        for s in sentences:
            if not s:
                raise ValidationError("explicit domains must not contain the empty sentence")
            dictionary.check_sentence(s)
            seen.add(s)
        return cls(dictionary, "explicit", sentences=tuple(sorted(seen, key=sent_key)))

    def size(self) -> int:
        n = len(self.dictionary)
        if self.kind == "length_bounded":
            return sum(n**l for l in range(1, self.max_len + 1))
        if self.kind == "fixed_length":
            return n**self.length
        return len(self.sentences)

    def contains(self, s: Sentence) -> bool:
        if not s or any(not (0 <= i < len(self.dictionary)) for i in s):
            return False
        if self.kind == "length_bounded":
            return len(s) <= self.max_len
        if self.kind == "fixed_length":
            return len(s) == self.length
        return s in self.sentences

    def describe(self) -> str:
        if self.kind == "length_bounded":
            return f"length_bounded max_len={self.max_len}"
        if self.kind == "fixed_length":
            return f"fixed_length length={self.length}"
        return f"explicit size={len(self.sentences)}"


def enumerate_domain(spec: DomainSpec) -> tuple[Sentence, ...]:
    """All sentences of the domain in canonical (length, lexicographic) order.

    Refuses to enumerate more than ``spec.budget`` sentences, naming the
    bound, so a typo in max_len fails fast instead of filling memory.
    """
    total = spec.size()
    if total > spec.budget:
        raise BudgetError(
            f"domain holds {total} sentences, over the enumeration budget of {spec.budget}"
        )
    n = len(spec.dictionary)
    if spec.kind == "explicit":
        return spec.sentences
    if spec.kind == "fixed_length":
        lengths: Iterable[int] = (spec.length,)
    else:
        lengths = range(1, spec.max_len + 1)
    out: list[Sentence] = []
    for l in lengths:
        out.extend(itertools.product(range(n), repeat=l))
    return tuple(out)


@dataclass(frozen=True)
class Edge:
    """One substitution instance, stored in the y0 -> y1 orientation."""

    src: Sentence  # insert(context, y0)
    dst: Sentence  # insert(context, y1)
    pair: int
    context: Context


class Step(NamedTuple):
    """One traversal of an edge: starts at insert(context, pair member sigma)
    and ends at insert(context, the other member)."""

    context: Context
    pair: int
    sigma: int


def step_endpoints(step: Step, family: PairFamily) -> tuple[Sentence, Sentence]:
    p = family[step.pair]
    return insert(step.context, p.member(step.sigma)), insert(
        step.context, p.member(1 - step.sigma)
    )


def reverse_path(steps: Sequence[Step]) -> list[Step]:
    return [Step(s.context, s.pair, 1 - s.sigma) for s in reversed(steps)]


def signed_pair_counts(steps: Iterable[Step]) -> dict[int, int]:
    """Net signed traversal count per pair: sigma=1 steps count +1, sigma=0
    steps count -1.  Additive under concatenation, negated by reversal."""
    counts: dict[int, int] = {}
    for st in steps:
        counts[st.pair] = counts.get(st.pair, 0) + (2 * st.sigma - 1)
    return counts


def build_graph(domain: Sequence[Sentence], family: PairFamily) -> tuple[Edge, ...]:
    """Every substitution instance with both endpoints in the domain.

    Scans the domain in order; for each sentence and pair, every occurrence
    of y0 whose y1-substitution stays inside the domain yields exactly one
    edge.  The edge list order is therefore deterministic.
    """
    domain_set = set(domain)
    edges: list[Edge] = []
    for s in domain:
        for i, p in enumerate(family):
            for x in occurrences(s, p.y0):
                t = insert(x, p.y1)
                if t in domain_set:
                    edges.append(Edge(s, t, i, x))
    return tuple(edges)


@dataclass
class ComponentPartition:
    """Connected components of the substitution multigraph.

    Components are ordered by their reference state, the canonically least
    member.  ``tree`` holds a BFS spanning forest rooted at the references;
    the path from a reference to any member replays substitution steps, so
    downstream energy computations are path-replays over this forest.
    """

    domain: tuple[Sentence, ...]
    components: tuple[tuple[Sentence, ...], ...]
    references: tuple[Sentence, ...]
    component_of: dict[Sentence, int]
    tree: dict[Sentence, tuple[Sentence, Step]] = field(repr=False)
    tree_edge_ids: frozenset[int] = field(repr=False)

    def path_from_reference(self, s: Sentence) -> list[Step]:
        steps = []
        cur = s
        while cur in self.tree:
            parent, step = self.tree[cur]
            steps.append(step)
            cur = parent
        steps.reverse()
        return steps

    def replay(self, s: Sentence, family: PairFamily) -> Sentence:
        """Re-executes the forest path for ``s`` from its reference."""
        cur = self.references[self.component_of[s]]
        for st in self.path_from_reference(s):
            before, after = step_endpoints(st, family)
            if before != cur:
                raise ValidationError("forest path does not chain")
            cur = after
        return cur

    def as_sets(self) -> set[frozenset[Sentence]]:
        return {frozenset(c) for c in self.components}


def components(domain: Sequence[Sentence], edges: Sequence[Edge]) -> ComponentPartition:
    """BFS partition of the domain under the edge list.

    The domain must be in canonical order: the first unvisited sentence of
    each component is then automatically its reference, and adjacency is
    consumed in edge-list order so the spanning forest is reproducible.
    """
    adjacency: dict[Sentence, list[tuple[Sentence, Step, int]]] = {s: [] for s in domain}
    for eid, e in enumerate(edges):
        adjacency[e.src].append((e.dst, Step(e.context, e.pair, 0), eid))
        adjacency[e.dst].append((e.src, Step(e.context, e.pair, 1), eid))

    comp_of: dict[Sentence, int] = {}
    comps: list[tuple[Sentence, ...]] = []
    refs: list[Sentence] = []
    tree: dict[Sentence, tuple[Sentence, Step]] = {}
    tree_ids: set[int] = set()

    for s in domain:
        if s in comp_of:
            continue
        cid = len(comps)
        members = [s]
        comp_of[s] = cid
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, step, eid in adjacency[u]:
                if v in comp_of:
                    continue
                comp_of[v] = cid
                tree[v] = (u, step)
                tree_ids.add(eid)
                members.append(v)
                queue.append(v)
        comps.append(tuple(sorted(members, key=sent_key)))
        refs.append(s)

    return ComponentPartition(
        domain=tuple(domain),
        components=tuple(comps),
        references=tuple(refs),
        component_of=comp_of,
        tree=tree,
        tree_edge_ids=frozenset(tree_ids),
    )


@dataclass(frozen=True)
class LoopVector:
    """Signed pair-traversal counts of one generating cycle, indexed by
    position in the active pair list."""

    counts: tuple[int, ...]

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.counts)


def fundamental_cycles(
    partition: ComponentPartition,
    edges: Sequence[Edge],
    component_ids: Optional[Sequence[int]] = None,
) -> tuple[tuple[int, ...], tuple[LoopVector, ...]]:
    """Active pairs and one loop vector per non-forest edge.

    When ``component_ids`` is given, only edges inside those components
    count (both for activity and for cycles).  Each non-forest edge
    generates the cycle: forest path from the reference to the edge's dst,
    the edge traversed backwards, forest path from src back to the
    reference.  Zero vectors are kept; they witness constraint-free cycles.
    """
    selected = None if component_ids is None else set(component_ids)

    def in_support(e: Edge) -> bool:
        return selected is None or partition.component_of[e.src] in selected

    active = sorted({e.pair for e in edges if in_support(e)})
    pos = {p: k for k, p in enumerate(active)}
    loops: list[LoopVector] = []
    for eid, e in enumerate(edges):
        if eid in partition.tree_edge_ids or not in_support(e):
            continue
        steps = (
            partition.path_from_reference(e.dst)
            + [Step(e.context, e.pair, 1)]
            + reverse_path(partition.path_from_reference(e.src))
        )
        counts = [0] * len(active)
        for p, c in signed_pair_counts(steps).items():
            counts[pos[p]] = c
        loops.append(LoopVector(tuple(counts)))
    return tuple(active), tuple(loops)


def closure_domain(
    seeds: Iterable[Sentence],
    family: PairFamily,
    spec: DomainSpec,
) -> tuple[Sentence, ...]:
    """Union of the components of the seed sentences inside ``spec``.

    Breadth-first closure under substitution moves; equivalent to
    enumerating the whole domain, partitioning it, and keeping the seeds'
    components, but without materializing sentences outside them.  The
    result is canonically sorted, so graphs built on it coincide with the
    full-domain graph restricted to these components.
    """
    found: set[Sentence] = set()
    queue: deque[Sentence] = deque()
    for s in seeds:
        spec.dictionary.check_sentence(s)
        if not spec.contains(s):
            raise ValidationError(f"seed sentence is outside the domain ({spec.describe()})")
        if s not in found:
            found.add(s)
            queue.append(s)
    while queue:
        s = queue.popleft()
        for p in family:
            for y, other in ((p.y0, p.y1), (p.y1, p.y0)):
                for x in occurrences(s, y):
                    t = insert(x, other)
                    if t in found or not spec.contains(t):
                        continue
                    found.add(t)
                    if len(found) > spec.budget:
                        raise BudgetError(
                            f"component closure exceeds the enumeration budget of {spec.budget}"
                        )
                    queue.append(t)
    return tuple(sorted(found, key=sent_key))
