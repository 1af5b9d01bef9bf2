"""Sentence samplers: independent process, component conditioning, swap MCMC.

All randomness flows through one named generator so traces are
reproducible: numpy's Philox counter-based bit generator keyed through
``SeedSequence(seed)``.  Same seed, same platform-independent stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .measures import FiniteMeasure, SubProbability, indep_logprob
from .strings import PairFamily, Sentence, insert, occurrences, sent_key


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(seed))


def sample_indep(xi: SubProbability, rng: np.random.Generator) -> Sentence:
    """One draw of the independent process: geometric length with success
    probability r, then words i.i.d. with weights xi/(1-r)."""
    r = xi.r
    length = int(rng.geometric(r))
    w = np.asarray(xi.weights, dtype=float)
    p = w / w.sum()
    cum = np.cumsum(p)
    u = rng.random(length)
    ids = np.searchsorted(cum, u, side="right")
    return tuple(int(i) for i in ids)


def sample_finite(measure: FiniteMeasure, rng: np.random.Generator, size: int) -> list[Sentence]:
    """Exact i.i.d. draws from a probability table."""
    support = sorted(measure.probs, key=sent_key)
    p = np.asarray([measure.probs[s] for s in support], dtype=float)
    p = p / p.sum()
    idx = rng.choice(len(support), size=size, p=p)
    return [support[int(i)] for i in idx]


def sample_conditioned(
    xi: SubProbability,
    component: Sequence[Sentence],
    rng: np.random.Generator,
    max_tries: int = 100_000,
    method: str = "auto",
    enumerate_limit: int = 100_000,
) -> Sentence:
    """Draw from the independent process conditioned on a component.

    Small components are sampled exactly from the normalized table;
    otherwise rejection from the unconditioned process, with a try budget
    that reports the estimated acceptance rate when exhausted.
    """
    if not component:
        raise ValidationError("cannot condition on an empty component")
    if method not in ("auto", "enumerate", "rejection"):
        raise ValidationError(f"unknown sampling method {method!r}")
    if method == "enumerate" or (method == "auto" and len(component) <= enumerate_limit):
        logs = np.asarray([indep_logprob(xi, s) for s in component], dtype=float)
        if np.all(np.isneginf(logs)):
            raise ValidationError("component has zero mass under the word weights")
        p = np.exp(logs - logs.max())
        p = p / p.sum()
        idx = int(rng.choice(len(component), p=p))
        return tuple(component[idx])
    members = set(component)
    for _ in range(max_tries):
        s = sample_indep(xi, rng)
        if s in members:
            return s
    raise ValidationError(
        f"rejection sampling exhausted {max_tries} tries; "
        f"acceptance rate below {1.0 / max_tries:.2e}"
    )


@dataclass
class McmcTrace:
    """Record of a swap-move chain: visited states, proposals, decisions."""

    start: Sentence
    states: list[Sentence]
    proposals: list[Sentence]
    accepted: list[bool]
    frozen: bool = False

    def empirical(self) -> dict[Sentence, float]:
        counts: dict[Sentence, int] = {}
        for s in self.states:
            counts[s] = counts.get(s, 0) + 1
        n = len(self.states)
        return {s: c / n for s, c in counts.items()}

    def acceptance_rate(self) -> float:
        if not self.accepted:
            return 0.0
        return sum(self.accepted) / len(self.accepted)


def _available_moves(
    s: Sentence,
    family: PairFamily,
    contains,
) -> list[tuple[int, int, tuple, Sentence]]:
    moves = []
    for i, p in enumerate(family):
        for sigma, (y_from, y_to) in enumerate(((p.y0, p.y1), (p.y1, p.y0))):
            for x in occurrences(s, y_from):
                t = insert(x, y_to)
                if contains(t):
                    moves.append((i, sigma, x, t))
    return moves


def swap_mcmc(
    start: Sentence,
    exponents: Mapping[int, float],
    family: PairFamily,
    domain: Sequence[Sentence],
    steps: int,
    rng: np.random.Generator,
) -> McmcTrace:
    """Metropolis-Hastings over substitution moves.

    A move replaces one pair member by the other at one occurrence, staying
    inside the domain; proposals are uniform over the moves available at
    the current state.  Because the move count m(s) varies between states,
    the acceptance ratio carries the proposal correction:

        accept with min{1, exp(beta(y_from, y_to)) * m(s) / m(s')}.

    Moves never leave the start's component, so the chain targets the
    substitute measure restricted to that component.  A state with no
    moves yields a frozen trace that just repeats the start.
    """
    domain_set = set(domain)
    if start not in domain_set:
        raise ValidationError("start sentence is outside the domain")
    contains = domain_set.__contains__
    move_cache: dict[Sentence, list] = {}

    def moves_at(s: Sentence):
        got = move_cache.get(s)
        if got is None:
            got = _available_moves(s, family, contains)
            move_cache[s] = got
        return got

    current = start
    states: list[Sentence] = []
    proposals: list[Sentence] = []
    accepted: list[bool] = []
    frozen = not moves_at(start)
    for _ in range(steps):
        moves = moves_at(current)
        if not moves:
            states.append(current)
            proposals.append(current)
            accepted.append(False)
            continue
        k = int(rng.integers(len(moves)))
        pair, sigma, _x, target = moves[k]
        beta = exponents.get(pair, 0.0)
        log_move = beta if sigma == 0 else -beta
        log_acc = log_move + math.log(len(moves)) - math.log(len(moves_at(target)))
        if log_acc >= 0 or math.log(rng.random()) < log_acc:
            current = target
            accepted.append(True)
        else:
            accepted.append(False)
        states.append(current)
        proposals.append(target)
    return McmcTrace(start, states, proposals, accepted, frozen=frozen)


def mcmc_transition_matrix(
    component: Sequence[Sentence],
    exponents: Mapping[int, float],
    family: PairFamily,
    domain: Sequence[Sentence],
) -> np.ndarray:
    """Explicit transition matrix of the swap chain on an enumerated
    component, for detailed-balance checks on small instances."""
    domain_set = set(domain)
    contains = domain_set.__contains__
    index = {s: i for i, s in enumerate(component)}
    n = len(component)
    T = np.zeros((n, n))
    for s in component:
        moves = _available_moves(s, family, contains)
        if not moves:
            T[index[s], index[s]] = 1.0
            continue
        m_s = len(moves)
        stay = 0.0
        for pair, sigma, _x, t in moves:
            beta = exponents.get(pair, 0.0)
            log_move = beta if sigma == 0 else -beta
            m_t = len(_available_moves(t, family, contains))
            acc = min(1.0, math.exp(log_move) * m_s / m_t)
            T[index[s], index[t]] += acc / m_s
            stay += (1.0 - acc) / m_s
        T[index[s], index[s]] += stay
    return T
