"""Bridge between positive Markov chains and substitute exponents.

A time-homogeneous chain on fixed-length sentences is a substitute measure
for the family of all interior single-word swaps; its exponents are log
ratios of transition products.  Conversely, a consistent exponent table
determines a transition matrix through the leading eigenpair of the
positive matrix built from the exponents that touch one anchor word.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConsistencyError, ValidationError
from .expfam import ExponentTable, _logsumexp
from .measures import FiniteMeasure
from .strings import Dictionary, PairFamily, Sentence, make_pair

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class TransitionMatrix:
    """Strictly positive row-stochastic matrix with an initial law."""

    matrix: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("transition matrix must be square")
        if np.any(m <= 0):
            raise ValidationError("transition matrix entries must be strictly positive")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
            raise ValidationError("transition matrix rows must sum to 1")
        nu = np.asarray(self.initial, dtype=float)
        if nu.shape != (m.shape[0],):
            raise ValidationError("initial law has the wrong size")
        if np.any(nu <= 0) or abs(nu.sum() - 1.0) > 1e-12:
            raise ValidationError("initial law must be positive and sum to 1")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "initial", nu)

    @classmethod
    def with_uniform_start(cls, matrix) -> "TransitionMatrix":
        m = np.asarray(matrix, dtype=float)
        n = m.shape[0]
        return cls(m, np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.matrix:
                fh.write("\t".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path) -> "TransitionMatrix":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                rows.append([float(v) for v in line.split("\t")])
        if not rows:
            raise ValidationError("matrix file is empty")
        return cls.with_uniform_start(np.asarray(rows, dtype=float))


@dataclass(frozen=True)
class PerronData:
    """Leading eigenpair of the positive exponent matrix."""

    matrix: np.ndarray
    eigenvalue: float
    eigenvector: np.ndarray


def chain_pair_family(dictionary: Dictionary, length: int) -> PairFamily:
    """All substitute pairs {(a,y,b), (a,y',b)} of interior word swaps.

    Needs sentences of length at least 3 for a swap site to exist.
    """
    n = len(dictionary)
    if n < 1:
        raise ValidationError("dictionary must not be empty")
    if length < 3:
        raise ValidationError("interior swaps need sentence length at least 3")
    pairs = []
    for a, b in itertools.product(range(n), repeat=2):
        for y, y2 in itertools.combinations(range(n), 2):
            pairs.append(make_pair((a, y, b), (a, y2, b)))
    return PairFamily.from_pairs(pairs)


def chain_law(chain: TransitionMatrix, length: int, dictionary: Dictionary) -> FiniteMeasure:
    """Exact law of (S_1, ..., S_L) as a finite measure on all of D^L."""
    if len(dictionary) != chain.n:
        raise ValidationError("dictionary size does not match the matrix")
    if length < 1:
        raise ValidationError("length must be at least 1")
    m = chain.matrix
    probs: dict[Sentence, float] = {}
    for s in itertools.product(range(chain.n), repeat=length):
        p = chain.initial[s[0]]
        for a, b in zip(s, s[1:]):
            p *= m[a, b]
        probs[s] = p
    domain = tuple(sorted(probs))
    return FiniteMeasure(domain, probs)


def chain_to_exponents(
    chain: TransitionMatrix, dictionary: Dictionary, length: int = 3
) -> ExponentTable:
    """Substitute exponents of the chain law for the interior-swap family:

        beta((a,y,b) -> (a,y',b)) = log(M(a,y') M(y',b)) - log(M(a,y) M(y,b)).
    """
    family = chain_pair_family(dictionary, length)
    m = chain.matrix
    values: dict[int, float] = {}
    status: dict[int, str] = {}
    for i, p in enumerate(family):
        a, y, b = p.y0
        a2, y2, b2 = p.y1
        if (a, b) != (a2, b2):
            raise ValidationError("interior-swap pair expected")
        values[i] = (
            math.log(m[a, y2]) + math.log(m[y2, b]) - math.log(m[a, y]) - math.log(m[y, b])
        )
        status[i] = "chain"
    return ExponentTable(family, values, status)


def quadruple_residual(table: ExponentTable, a: int, y: int, y2: int, b: int, c: int) -> float:
    """Residual of the loop identity that pins every exponent to the ones
    touching the anchor c:

        beta(ayb, ay'b) = beta(acc, ay'c) + beta(y'cc, y'bc)
                        - beta(acc, ayc) - beta(ycc, ybc).
    """
    lhs = table.beta((a, y, b), (a, y2, b))
    rhs = (
        table.beta((a, c, c), (a, y2, c))
        + table.beta((y2, c, c), (y2, b, c))
        - table.beta((a, c, c), (a, y, c))
        - table.beta((y, c, c), (y, b, c))
    )
    return lhs - rhs


def exponents_to_chain(
    table: ExponentTable,
    dictionary: Dictionary,
    anchor: int = 0,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 100_000,
) -> tuple[TransitionMatrix, PerronData]:
    """Recover a positive transition matrix from interior-swap exponents.

    First checks the anchor-decomposition identity on all word quadruples
    (inconsistent inputs fail loudly).  Then builds the positive matrix
    A(a,b) = exp(beta(acc, abc)), extracts its leading eigenpair (psi,
    lambda) by power iteration, and normalizes:

        M(a,b) = A(a,b) psi(b) / (lambda psi(a)),

    which is row-stochastic because psi is a positive eigenvector.  The
    input exponents are reproduced from M as a final consistency check.
    """
    n = len(dictionary)
    c = anchor
    if not (0 <= c < n):
        raise ValidationError("anchor word outside the dictionary")
    worst = (0.0, None)
    for a, y, y2, b in itertools.product(range(n), repeat=4):
        if y == y2:
            continue
        res = abs(quadruple_residual(table, a, y, y2, b, c))
        if res > worst[0]:
            worst = (res, (a, y, y2, b))
    if worst[0] > tol:
        raise ConsistencyError(
            f"exponents violate the anchor decomposition: residual {worst[0]!r} "
            f"at quadruple {worst[1]}",
            witness=worst[1],
        )

    A = np.empty((n, n))
    for a, b in itertools.product(range(n), repeat=2):
        A[a, b] = math.exp(table.beta((a, c, c), (a, b, c)))

    psi = np.full(n, 1.0 / math.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        nxt = A @ psi
        lam = float(np.linalg.norm(nxt))
        nxt = nxt / lam
        if float(np.max(np.abs(nxt - psi))) <= 1e-12:
            psi = nxt
            break
        psi = nxt
    else:
        raise ConsistencyError("power iteration did not converge")

    m = A * psi[None, :] / psi[:, None] / lam
    m = m / m.sum(axis=1, keepdims=True)
    chain = TransitionMatrix.with_uniform_start(m)

    rebuilt = chain_to_exponents(chain, dictionary)
    for i, v in table.values.items():
        p = table.family[i]
        if len(p.y0) != 3:
            continue
        back = rebuilt.beta(p.y0, p.y1)
        if abs(back - v) > tol:
            raise ConsistencyError(
                f"recovered matrix does not reproduce the exponent of "
                f"({p.y0}, {p.y1}): {back!r} vs {v!r}",
                witness=(p.y0, p.y1),
            )
    return chain, PerronData(A, lam, psi)


def conditional_equivalence(
    measure: FiniteMeasure,
    chain: TransitionMatrix,
    a: int,
    b: int,
) -> float:
    """Max log discrepancy between the measure and the chain law, both
    conditioned on the endpoints (a, b); brute force over all interiors."""
    lengths = {len(s) for s in measure.domain}
    if len(lengths) != 1:
        raise ValidationError("measure domain must be fixed-length")
    length = lengths.pop()
    if length < 2:
        raise ValidationError("endpoint conditioning needs length at least 2")
    n = chain.n
    interiors = list(itertools.product(range(n), repeat=length - 2))
    p_logs = []
    q_logs = []
    for w in interiors:
        s = (a,) + w + (b,)
        p_logs.append(measure.log_prob(s))
        path = (a,) + w + (b,)
        q = 0.0
        for u, v in zip(path, path[1:]):
            q += math.log(chain.matrix[u, v])
        q_logs.append(q)
    p_total = _logsumexp(p_logs)
    if p_total == -math.inf:
        raise ValidationError("measure puts no mass on these endpoints")
    q_total = _logsumexp(q_logs)
    worst = 0.0
    for lp, lq in zip(p_logs, q_logs):
        cond_p = lp - p_total
        cond_q = lq - q_total
        if cond_p == -math.inf and cond_q == -math.inf:
            continue
        if cond_p == -math.inf or cond_q == -math.inf:
            return math.inf
        worst = max(worst, abs(cond_p - cond_q))
    return worst


def endpoint_conditional(chain: TransitionMatrix, length: int, a: int, b: int) -> float:
    """P(X_L = b | X_1 = a) by matrix power."""
    power = np.linalg.matrix_power(chain.matrix, length - 1)
    return float(power[a, b])
