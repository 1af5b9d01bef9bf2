"""Parameter estimation from corpora at desk scale.

Moment estimation of substitute exponents from context counts, and exact
maximum likelihood on the synthesized exponential family: expectations are
enumerated over the finite support, so the concave log-likelihood is
ascended without simulation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .expfam import ExponentialFamilyModel, ParamVector
from .strings import Dictionary, PairFamily, Sentence, insert, occurrences, sent_key

ARMIJO = 1e-4


@dataclass
class Corpus:
    """Multiset of sentences; counts may be fractional (expected counts)."""

    counts: dict[Sentence, float]

    def __post_init__(self):
        if not self.counts:
            raise ValidationError("corpus must not be empty")
        for s, c in self.counts.items():
            if c <= 0 or not math.isfinite(c):
                raise ValidationError("corpus counts must be positive and finite")

    @property
    def total(self) -> float:
        return sum(self.counts.values())

    @classmethod
    def from_samples(cls, samples: Sequence[Sentence]) -> "Corpus":
        counts: dict[Sentence, float] = {}
        for s in samples:
            counts[s] = counts.get(s, 0.0) + 1.0
        return cls(counts)

    def count(self, s: Sentence) -> float:
        return self.counts.get(s, 0.0)

    def save(self, path, dictionary: Dictionary) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for s in sorted(self.counts, key=sent_key):
                fh.write(f"{self.counts[s]!r}\t{dictionary.decode(s)}\n")

    @classmethod
    def load(cls, path, dictionary: Dictionary) -> "Corpus":
        counts: dict[Sentence, float] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValidationError(f"bad corpus line: {line!r}")
                s = dictionary.encode(parts[1])
                counts[s] = counts.get(s, 0.0) + float(parts[0])
        return cls(counts)


@dataclass
class PairEstimate:
    pair: int
    status: str  # "estimated" | "inestimable"
    estimate: Optional[float]
    std_error: Optional[float]
    weight0: float
    weight1: float


def empirical_exponents(
    corpus: Corpus, family: PairFamily, domain: Sequence[Sentence]
) -> list[PairEstimate]:
    """Moment estimator of each pair's exponent from context counts.

    Per pair, over contexts where both substitution results were observed:
    the estimate is log of the ratio of total counts, with the delta-method
    standard error sqrt(1/n1 + 1/n0).  Pairs with no doubly-observed
    context are flagged inestimable.
    """
    domain_set = set(domain)
    out = []
    for i, p in enumerate(family):
        n0 = 0.0
        n1 = 0.0
        for s in domain:
            for x in occurrences(s, p.y0):
                t = insert(x, p.y1)
                if t not in domain_set:
                    continue
                c0 = corpus.count(s)
                c1 = corpus.count(t)
                if c0 > 0 and c1 > 0:
                    n0 += c0
                    n1 += c1
        if n0 == 0.0:
            out.append(PairEstimate(i, "inestimable", None, None, 0.0, 0.0))
            continue
        est = math.log(n1) - math.log(n0)
        se = math.sqrt(1.0 / n0 + 1.0 / n1)
        out.append(PairEstimate(i, "estimated", est, se, n0, n1))
    return out


@dataclass
class FitResult:
    params: ParamVector
    log_likelihood: float
    iterations: int
    grad_norm: float
    history: list[float]


def mle_fit(
    corpus: Corpus,
    model: ExponentialFamilyModel,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> FitResult:
    """Exact maximum likelihood over the model's finite support.

    Gradient ascent on the mean log-likelihood; the gradient is the gap
    between empirical and model expectations of the sufficient statistics
    (negated energies and component indicators), both enumerated exactly.
    Backtracking line search (halving, Armijo condition) keeps every
    accepted step an improvement; the objective is concave, so the
    stationary point reached at tolerance is the maximizer.  Parameters
    are returned canonicalized.
    """
    support = model.support
    pos = {s: k for k, s in enumerate(support)}
    for s in corpus.counts:
        if s not in pos:
            raise ValidationError(
                f"corpus sentence outside the model support: {model.dictionary.decode(s)!r}"
            )
    n_states = len(support)
    n_free = len(model.free_pairs)
    n_comp = len(model.component_ids)

    U = np.zeros((n_states, n_free))
    comp_idx = np.zeros(n_states, dtype=int)
    for s, k in pos.items():
        U[k, :] = [float(v) for v in model.energies[s]]
        comp_idx[k] = model.comp_pos(s)
    counts = np.zeros(n_states)
    for s, c in corpus.counts.items():
        counts[pos[s]] = c
    total = counts.sum()
    weights = counts / total

    emp_free = -(weights @ U)
    emp_comp = np.bincount(comp_idx, weights=weights, minlength=n_comp)

    def objective_and_grad(free: np.ndarray, comp: np.ndarray):
        logw = comp[comp_idx] - U @ free
        m = logw.max()
        z = np.exp(logw - m)
        lz = m + math.log(z.sum())
        probs = z / z.sum()
        loglik = float(weights @ logw - lz)
        g_free = emp_free - (-(probs @ U))
        g_comp = emp_comp - np.bincount(comp_idx, weights=probs, minlength=n_comp)
        return loglik, g_free, g_comp

    free = np.zeros(n_free)
    comp = np.zeros(n_comp)
    loglik, g_free, g_comp = objective_and_grad(free, comp)
    history = [loglik]
    step = 1.0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad_norm = max(
            float(np.max(np.abs(g_free))) if n_free else 0.0,
            float(np.max(np.abs(g_comp))),
        )
        if grad_norm <= tol:
            break
        sq = float(g_free @ g_free + g_comp @ g_comp)
        step = min(step * 2.0, 64.0)
        while True:
            cand_free = free + step * g_free
            cand_comp = comp + step * g_comp
            cand_ll, cand_gf, cand_gc = objective_and_grad(cand_free, cand_comp)
            if cand_ll >= loglik + ARMIJO * step * sq:
                break
            step *= 0.5
            if step < 1e-18:
                raise ValidationError("line search failed; gradient may be inconsistent")
        free, comp = cand_free, cand_comp
        loglik, g_free, g_comp = cand_ll, cand_gf, cand_gc
        history.append(loglik)
    else:
        grad_norm = max(
            float(np.max(np.abs(g_free))) if n_free else 0.0,
            float(np.max(np.abs(g_comp))),
        )
        raise ValidationError(
            f"no convergence in {max_iter} iterations; gradient norm {grad_norm!r}"
        )

    params = model.canonicalize(ParamVector(tuple(float(v) for v in free), tuple(float(v) for v in comp)))
    return FitResult(
        params=params,
        log_likelihood=loglik * total,
        iterations=iterations,
        grad_norm=grad_norm,
        history=history,
    )
