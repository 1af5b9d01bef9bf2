"""Exponential-family synthesis for substitution models.

Pipeline: loop vectors of the substitution graph -> exact-rational row
reduction -> split of active pairs into free and determined ones -> integer
or rational energy statistics per sentence -> evaluation of the resulting
discrete exponential family.

Exact rational arithmetic (``fractions.Fraction``) is used for everything
that decides the family's dimension; floating point enters only when
probabilities are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConsistencyError, ValidationError
from .graph import (
    ComponentPartition,
    DomainSpec,
    Edge,
    LoopVector,
    build_graph,
    closure_domain,
    components,
    enumerate_domain,
    fundamental_cycles,
    signed_pair_counts,
)
from .strings import Dictionary, PairFamily, Sentence, sent_key


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals.

    Pivot rule: scan columns left to right, take the first unused row with
    a nonzero entry.  Returns the nonzero rows and their pivot columns.
    The form is the canonical representative of the row space, so two
    subspaces are equal iff their rrefs are identical.
    """
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Canonical basis of {v : R v = 0} from the rref of R."""
    basis, pivots = rref(rows)
    pivot_set = set(pivots)
    free_cols = [c for c in range(ncols) if c not in pivot_set]
    out = []
    for f in free_cols:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(basis, pivots):
            v[p] = -row[f]
        out.append(v)
    return out


@dataclass(frozen=True)
class LoopSpan:
    """Row-reduced exact basis of the span of the fundamental loop vectors,
    with columns indexed by the active pair list."""

    active: tuple[int, ...]
    basis: tuple[tuple[Fraction, ...], ...]
    pivots: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.basis)


def loop_span(loops: Sequence[LoopVector], active: Sequence[int]) -> LoopSpan:
    rows = [[Fraction(c) for c in lv.counts] for lv in loops]
    basis, pivots = rref(rows)
    return LoopSpan(tuple(active), tuple(tuple(r) for r in basis), tuple(pivots))


def select_free_pairs(
    span: LoopSpan,
) -> tuple[tuple[int, ...], tuple[int, ...], dict[int, dict[int, Fraction]]]:
    """Split active pairs into free and determined ones.

    The pivot columns of the reduced loop basis become the determined
    pairs; the remaining active pairs are free.  For a determined pair j
    with reduced row r, requiring every loop weight to vanish forces

        beta_j = sum over free i of e[i][j] * beta_i,  e[i][j] = -r[i].

    Pivots sit at the smallest possible pair indices by the rref pivot
    rule, which fixes the (valid either way) choice of free pairs.
    """
    determined = tuple(span.active[c] for c in span.pivots)
    pivot_set = set(span.pivots)
    free = tuple(span.active[c] for c in range(len(span.active)) if c not in pivot_set)
    col_of = {c: k for k, c in enumerate(range(len(span.active)))}
    e: dict[int, dict[int, Fraction]] = {i: {} for i in free}
    for row, pc in zip(span.basis, span.pivots):
        j = span.active[pc]
        for c in range(len(span.active)):
            if c in pivot_set or row[c] == 0:
                continue
            e[span.active[c]][j] = -row[c]
    return free, determined, e


def state_energies(
    partition: ComponentPartition,
    component_ids: Sequence[int],
    free: Sequence[int],
    e: Mapping[int, Mapping[int, Fraction]],
) -> dict[Sentence, tuple[Fraction, ...]]:
    """Per-sentence energies for the free pairs.

    For the forest path pi_s from the component reference to s, with signed
    traversal counts n_k(pi_s), the free pair i gets

        U_i(s) = n_i(pi_s) + sum over determined j of e[i][j] * n_j(pi_s).

    References get all-zero energies by construction (empty path).
    """
    table: dict[Sentence, tuple[Fraction, ...]] = {}
    for cid in component_ids:
        for s in partition.components[cid]:
            counts = signed_pair_counts(partition.path_from_reference(s))
            row = []
            for i in free:
                u = Fraction(counts.get(i, 0))
                for j, coef in e[i].items():
                    u += coef * Fraction(counts.get(j, 0))
                row.append(u)
            table[s] = tuple(row)
    return table


@dataclass(frozen=True)
class ParamVector:
    """Natural parameters: one coordinate per free pair, one per component."""

    free: tuple[float, ...]
    comp: tuple[float, ...]

    def __post_init__(self):
        for v in self.free + self.comp:
            if not math.isfinite(v):
                raise ValidationError("parameters must be finite")


@dataclass
class ExponentialFamilyModel:
    """The synthesized family P_beta over a union of components.

    ``component_ids`` indexes the partition's components that make up the
    support; parameter vectors align their ``comp`` block with it and their
    ``free`` block with ``free_pairs``.
    """

    dictionary: Dictionary
    family: PairFamily
    partition: ComponentPartition
    component_ids: tuple[int, ...]
    active_pairs: tuple[int, ...]
    free_pairs: tuple[int, ...]
    determined_pairs: tuple[int, ...]
    e: dict[int, dict[int, Fraction]]
    span: LoopSpan
    energies: dict[Sentence, tuple[Fraction, ...]]

    @property
    def support(self) -> tuple[Sentence, ...]:
        out = []
        for cid in self.component_ids:
            out.extend(self.partition.components[cid])
        return tuple(sorted(out, key=sent_key))

    @property
    def dimension(self) -> int:
        """Number of identifiable parameters."""
        return len(self.free_pairs) + len(self.component_ids) - 1

    def comp_pos(self, s: Sentence) -> int:
        cid = self.partition.component_of.get(s)
        if cid is None or cid not in self.component_ids:
            raise ValidationError("sentence outside the model support")
        return self.component_ids.index(cid)

    def zero_params(self) -> ParamVector:
        return ParamVector((0.0,) * len(self.free_pairs), (0.0,) * len(self.component_ids))

    def log_weight(self, beta: ParamVector, s: Sentence) -> float:
        u = self.energies[s]
        acc = beta.comp[self.comp_pos(s)]
        for b, v in zip(beta.free, u):
            acc -= b * float(v)
        return acc

    def log_partition(self, beta: ParamVector) -> float:
        return _logsumexp([self.log_weight(beta, s) for s in self.support])

    def log_prob(self, beta: ParamVector, s: Sentence) -> float:
        """log P_beta(s); sentences outside the support get -inf."""
        try:
            lw = self.log_weight(beta, s)
        except (ValidationError, KeyError):
            return -math.inf
        return lw - self.log_partition(beta)

    def component_mass(self, beta: ParamVector, cid: int) -> float:
        """P_beta of one support component, via the partition-function split
        Z = sum over components of exp(beta_C) * Z_C."""
        if cid not in self.component_ids:
            raise ValidationError("component is not part of the model support")
        pos = self.component_ids.index(cid)
        lz_c = _logsumexp(
            [
                self.log_weight(beta, s) - beta.comp[pos]
                for s in self.partition.components[cid]
            ]
        )
        return math.exp(beta.comp[pos] + lz_c - self.log_partition(beta))

    def distribution(self, beta: ParamVector) -> dict[Sentence, float]:
        lz = self.log_partition(beta)
        return {s: math.exp(self.log_weight(beta, s) - lz) for s in self.support}

    def canonicalize(self, beta: ParamVector) -> ParamVector:
        """Shift all component coordinates so the last one is zero.

        P_beta is invariant under adding one constant to every component
        coordinate; this picks the representative with beta_last = 0.
        """
        shift = beta.comp[-1]
        return ParamVector(beta.free, tuple(c - shift for c in beta.comp))

    def exponents_from_params(self, beta: ParamVector) -> "ExponentTable":
        """Substitute exponents of every pair in the family.

        Free pairs carry their own coordinate, determined pairs follow via
        the dependency matrix, inactive pairs are pinned to 0 and flagged:
        any value would do for them.
        """
        values: dict[int, float] = {}
        status: dict[int, str] = {}
        free_pos = {i: k for k, i in enumerate(self.free_pairs)}
        for idx in range(len(self.family)):
            if idx in free_pos:
                values[idx] = beta.free[free_pos[idx]]
                status[idx] = "free"
            elif idx in self.determined_pairs:
                values[idx] = sum(
                    float(self.e[i].get(idx, Fraction(0))) * beta.free[free_pos[i]]
                    for i in self.free_pairs
                )
                status[idx] = "determined"
            else:
                values[idx] = 0.0
                status[idx] = "inactive"
        return ExponentTable(self.family, values, status)


def _logsumexp(vals: Sequence[float]) -> float:
    m = max(vals)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(v - m) for v in vals))


@dataclass
class ExponentTable:
    """Substitute exponents keyed by pair index, in y0 -> y1 orientation."""

    family: PairFamily
    values: dict[int, float]
    status: dict[int, str]

    def beta(self, a: Sentence, b: Sentence) -> float:
        """Exponent for substituting a by b; skew-symmetric in (a, b)."""
        if a == b:
            return 0.0
        i, sigma = self.family.find(a, b)
        if i not in self.values:
            raise ValidationError("pair has no exponent in this table")
        v = self.values[i]
        return v if sigma == 0 else -v

    def save(self, path, dictionary: Dictionary) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i in sorted(self.values):
                p = self.family[i]
                fh.write(
                    f"{dictionary.decode(p.y0)}\t{dictionary.decode(p.y1)}\t{self.values[i]!r}\n"
                )

    @classmethod
    def load(cls, path, dictionary: Dictionary) -> "ExponentTable":
        pairs = []
        raw: list[tuple[Sentence, Sentence, float]] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValidationError(f"bad exponent line: {line!r}")
                y0 = dictionary.encode(parts[0])
                y1 = dictionary.encode(parts[1])
                raw.append((y0, y1, float(parts[2])))
        from .strings import make_pair

        family = PairFamily.from_pairs(make_pair(a, b) for a, b, _ in raw)
        values: dict[int, float] = {}
        status: dict[int, str] = {}
        for a, b, v in raw:
            i, sigma = family.find(a, b)
            values[i] = v if sigma == 0 else -v
            status[i] = "loaded"
        return cls(family, values, status)


def synthesize(
    dictionary: Dictionary,
    partition: ComponentPartition,
    edges: Sequence[Edge],
    family: PairFamily,
    component_ids: Optional[Sequence[int]] = None,
) -> ExponentialFamilyModel:
    """Build the exponential family over the selected components."""
    if component_ids is None:
        component_ids = tuple(range(len(partition.components)))
    else:
        component_ids = tuple(component_ids)
        for cid in component_ids:
            if not (0 <= cid < len(partition.components)):
                raise ValidationError(f"component id {cid} outside the partition")
        if len(set(component_ids)) != len(component_ids):
            raise ValidationError("duplicate component ids")
    if not component_ids:
        raise ValidationError("model support must contain at least one component")
    active, loops = fundamental_cycles(partition, edges, component_ids)
    span = loop_span(loops, active)
    free, determined, e = select_free_pairs(span)
    energies = state_energies(partition, component_ids, free, e)
    return ExponentialFamilyModel(
        dictionary=dictionary,
        family=family,
        partition=partition,
        component_ids=component_ids,
        active_pairs=active,
        free_pairs=free,
        determined_pairs=determined,
        e=e,
        span=span,
        energies=energies,
    )


def build_model(
    spec: DomainSpec,
    family: PairFamily,
    support_of: Optional[Iterable[Sentence]] = None,
) -> ExponentialFamilyModel:
    """Domain -> graph -> partition -> family, in one call.

    With ``support_of``, only the components of those seed sentences are
    enumerated (breadth-first closure) and the model support is exactly
    their union; otherwise the full domain is enumerated and every
    component is part of the support.
    """
    if support_of is not None:
        domain = closure_domain(support_of, family, spec)
    else:
        domain = enumerate_domain(spec)
    edges = build_graph(domain, family)
    partition = components(domain, edges)
    return synthesize(spec.dictionary, partition, edges, family)


def _constraint_space(
    domain: Sequence[Sentence], family: PairFamily
) -> list[list[Fraction]]:
    """rref basis of the valid-exponent space {beta : beta kills all loops},
    over all pair indices of the family (inactive pairs unconstrained)."""
    edges = build_graph(domain, family)
    partition = components(domain, edges)
    active, loops = fundamental_cycles(partition, edges)
    pos = {p: k for k, p in enumerate(active)}
    rows = []
    for lv in loops:
        row = [Fraction(0)] * len(family)
        for p in active:
            row[p] = Fraction(lv.counts[pos[p]])
        rows.append(row)
    basis = nullspace(rows, len(family))
    reduced, _ = rref(basis)
    return reduced


def _project_out(basis: Sequence[Sequence[Fraction]], col: int) -> list[list[Fraction]]:
    rows = [list(r[:col]) + list(r[col + 1 :]) for r in basis]
    reduced, _ = rref(rows)
    return reduced


def prune_redundant_pairs(domain: Sequence[Sentence], family: PairFamily) -> PairFamily:
    """Greedy reduction of the pair family on a finite domain.

    A pair is dropped when removing it leaves both the component partition
    and the induced exponent constraints on the remaining pairs unchanged;
    candidates are tried from the last pair down.  The criterion is
    relative to the given finite domain.
    """
    current = family
    part_cache = _partition_sets(domain, current)
    space_cache = _constraint_space(domain, current)
    i = len(current) - 1
    while i >= 0:
        candidate = current.without(i)
        same_partition = _partition_sets(domain, candidate) == part_cache
        if same_partition and _project_out(space_cache, i) == _constraint_space(
            domain, candidate
        ):
            current = candidate
            space_cache = _constraint_space(domain, current)
        i -= 1
    return current


def _partition_sets(domain: Sequence[Sentence], family: PairFamily) -> set[frozenset[Sentence]]:
    edges = build_graph(domain, family)
    return components(domain, edges).as_sets()
