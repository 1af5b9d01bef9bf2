"""Concrete probability measures on sentence domains.

Holds the geometric-length independent process, the component-mixture
construction that populates any union of components, the substitute
property verifier, and exact parameter recovery from a verified measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import ConsistencyError, ValidationError
from .expfam import ExponentialFamilyModel, ExponentTable, ParamVector, _logsumexp
from .graph import ComponentPartition
from .strings import Context, Dictionary, PairFamily, Sentence, insert, occurrences, sent_key

# Probabilities below this are treated as exact zeros in log space.
ZERO_FLOOR = 1e-300
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SubProbability:
    """Strict sub-probability word weights; the deficit r = 1 - sum drives
    the geometric length law of the independent process."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValidationError("sub-probability needs at least one word weight")
        for w in self.weights:
            if w < 0 or not math.isfinite(w):
                raise ValidationError("word weights must be finite and non-negative")
        total = sum(self.weights)
        if total <= 0:
            raise ValidationError("word weights must not all vanish")
        if total >= 1:
            raise ValidationError("word weights must sum to strictly less than 1")

    @property
    def r(self) -> float:
        return 1.0 - sum(self.weights)

    def weight(self, word: int) -> float:
        if 0 <= word < len(self.weights):
            return self.weights[word]
        return 0.0


def indep_logprob(xi: SubProbability, s: Sentence) -> float:
    """log P(independent process = s) = log(r/(1-r)) + sum of log weights.

    Sentences touching a zero-weight word get -inf, not an error.
    """
    if not s:
        raise ValidationError("the independent process never produces the empty sentence")
    r = xi.r
    acc = math.log(r) - math.log1p(-r)
    for w in s:
        wt = xi.weight(w)
        if wt <= 0.0:
            return -math.inf
        acc += math.log(wt)
    return acc


def indep_length_logprob(xi: SubProbability, length: int) -> float:
    """log P(length = L) for the geometric length law r(1-r)^(L-1)."""
    if length < 1:
        raise ValidationError("lengths start at 1")
    r = xi.r
    return math.log(r) + (length - 1) * math.log1p(-r)


@dataclass
class FiniteMeasure:
    """Explicit probability table over a finite sentence domain."""

    domain: tuple[Sentence, ...]
    probs: dict[Sentence, float]

    def __post_init__(self, check_tol: float = 1e-9):
        dset = set(self.domain)
        total = 0.0
        for s, p in self.probs.items():
            if s not in dset:
                raise ValidationError("measure charges a sentence outside its domain")
            if p < 0:
                raise ValidationError("negative probability")
            total += p
        if abs(total - 1.0) > check_tol:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    def prob(self, s: Sentence) -> float:
        return self.probs.get(s, 0.0)

    def log_prob(self, s: Sentence) -> float:
        p = self.prob(s)
        return math.log(p) if p > ZERO_FLOOR else -math.inf

    def support(self) -> tuple[Sentence, ...]:
        return tuple(
            sorted((s for s, p in self.probs.items() if p > ZERO_FLOOR), key=sent_key)
        )

    def save(self, path, dictionary: Dictionary) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for s in sorted(self.probs, key=sent_key):
                p = self.probs[s]
                if p > 0:
                    fh.write(f"{dictionary.decode(s)}\t{p!r}\n")

    @classmethod
    def load(cls, path, dictionary: Dictionary, domain: Sequence[Sentence]) -> "FiniteMeasure":
        probs: dict[Sentence, float] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValidationError(f"bad measure line: {line!r}")
                s = dictionary.encode(parts[0])
                if s in probs:
                    raise ValidationError(f"duplicate sentence in measure file: {parts[0]!r}")
                probs[s] = float(parts[1])
        return cls(tuple(domain), probs)


@dataclass(frozen=True)
class ComponentMixtureSpec:
    """Mixture weights over components, plus the word weights used to fill
    each component with the conditioned independent process."""

    xi: SubProbability
    mu: Mapping[int, float]

    def __post_init__(self):
        if not self.mu:
            raise ValidationError("the component mixture must charge at least one component")
        total = 0.0
        for cid, w in self.mu.items():
            if w < 0:
                raise ValidationError("mixture weights must be non-negative")
            total += w
        if abs(total - 1.0) > DEFAULT_TOL:
            raise ValidationError(f"mixture weights sum to {total!r}, not 1")


def bproc_measure(
    spec: ComponentMixtureSpec, partition: ComponentPartition
) -> FiniteMeasure:
    """Component mixture of the conditioned independent process.

    P(s) = mu(C) * P(indep = s | indep in C) for s in a charged component C.
    The support is exactly the union of charged components, and the result
    satisfies the substitute property for any pair family compatible with
    the partition.
    """
    probs: dict[Sentence, float] = {}
    for cid, w in sorted(spec.mu.items()):
        if not (0 <= cid < len(partition.components)):
            raise ValidationError(f"mixture charges unknown component {cid}")
        if w == 0.0:
            continue
        comp = partition.components[cid]
        logs = [indep_logprob(spec.xi, s) for s in comp]
        total = _logsumexp(logs)
        if total == -math.inf:
            raise ValidationError(
                f"component {cid} has zero mass under the word weights"
            )
        for s, lp in zip(comp, logs):
            probs[s] = w * math.exp(lp - total)
    return FiniteMeasure(partition.domain, probs)


@dataclass(frozen=True)
class Violation:
    pair: int
    kind: str  # "mixed" or "spread"
    context: Context
    other_context: Optional[Context]
    detail: str


@dataclass
class PairVerdict:
    pair: int
    status: str  # "active" | "inactive"
    exponent: Optional[float]
    contexts: int
    spread: float


@dataclass
class VerifyResult:
    ok: bool
    verdicts: list[PairVerdict]
    violations: list[Violation]
    max_spread: float
    max_swap_residual: float

    def exponent_table(self, family: PairFamily) -> ExponentTable:
        values = {
            v.pair: (v.exponent if v.exponent is not None else 0.0) for v in self.verdicts
        }
        status = {
            v.pair: ("verified" if v.status == "active" else "inactive")
            for v in self.verdicts
        }
        return ExponentTable(family, values, status)


def verify_substitute(
    measure: FiniteMeasure,
    family: PairFamily,
    domain: Sequence[Sentence],
    tol: float = DEFAULT_TOL,
) -> VerifyResult:
    """Scan every pair and every context against the substitute property.

    For each pair, each context with both substitution results in the scan
    domain is classified: both probabilities positive (must share one log
    ratio), both zero (vacuous), or mixed (a hard violation, since a finite
    exponent cannot map zero to nonzero).  The common log ratio is the
    pair's exponent.  The pair-exchange identity over two independent draws
    is checked through the same data: its worst log residual over all
    context quadruples equals the spread of the per-context log ratios.
    """
    domain_set = set(domain)
    verdicts: list[PairVerdict] = []
    violations: list[Violation] = []
    max_spread = 0.0
    for i, p in enumerate(family):
        deltas: list[tuple[float, Context]] = []
        n_contexts = 0
        for s in domain:
            for x in occurrences(s, p.y0):
                t = insert(x, p.y1)
                if t not in domain_set:
                    continue
                n_contexts += 1
                ps, pt = measure.prob(s), measure.prob(t)
                pos_s, pos_t = ps > ZERO_FLOOR, pt > ZERO_FLOOR
                if pos_s and pos_t:
                    deltas.append((math.log(pt) - math.log(ps), x))
                elif pos_s != pos_t:
                    violations.append(
                        Violation(
                            pair=i,
                            kind="mixed",
                            context=x,
                            other_context=None,
                            detail="one substitution result has zero probability",
                        )
                    )
        if not deltas:
            verdicts.append(PairVerdict(i, "inactive", None, n_contexts, 0.0))
            continue
        lo = min(deltas)
        hi = max(deltas)
        spread = hi[0] - lo[0]
        max_spread = max(max_spread, spread)
        if spread > tol:
            violations.append(
                Violation(
                    pair=i,
                    kind="spread",
                    context=lo[1],
                    other_context=hi[1],
                    detail=f"context log-ratios differ by {spread!r}",
                )
            )
        exponent = sum(d for d, _ in deltas) / len(deltas)
        verdicts.append(PairVerdict(i, "active", exponent, n_contexts, spread))
    return VerifyResult(
        ok=not violations,
        verdicts=verdicts,
        violations=violations,
        max_spread=max_spread,
        max_swap_residual=max_spread,
    )


def params_from_measure(
    measure: FiniteMeasure,
    model: ExponentialFamilyModel,
    tol: float = DEFAULT_TOL,
) -> ParamVector:
    """Recover natural parameters from a verified substitute measure.

    Free coordinates are the verified exponents of the free pairs;
    component coordinates are the log probabilities of the reference
    states.  With that choice the reconstructed partition function is 1,
    which doubles as the consistency check.
    """
    result = verify_substitute(measure, model.family, model.partition.domain, tol=tol)
    if not result.ok:
        v = result.violations[0]
        raise ConsistencyError(
            f"measure violates the substitute property for pair {v.pair} ({v.detail})",
            witness=v,
        )
    support = set(measure.support())
    if support != set(model.support):
        raise ConsistencyError("measure support is not the model support")
    by_pair = {v.pair: v for v in result.verdicts}
    free = []
    for i in model.free_pairs:
        verdict = by_pair[i]
        if verdict.exponent is None:
            raise ConsistencyError(f"free pair {i} has no observable context")
        free.append(verdict.exponent)
    comp = []
    for cid in model.component_ids:
        ref = model.partition.references[cid]
        lp = measure.log_prob(ref)
        if lp == -math.inf:
            raise ConsistencyError("reference state has zero probability")
        comp.append(lp)
    beta = ParamVector(tuple(free), tuple(comp))
    log_z = model.log_partition(beta)
    if abs(log_z) > tol:
        raise ConsistencyError(f"reconstructed partition function is exp({log_z!r}), not 1")
    return beta
