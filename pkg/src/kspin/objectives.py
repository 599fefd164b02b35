"""Per-node convex losses for neighborhood regression.

Both estimators regress one node r on the spin products of the remaining
nodes.  With u = k! * <J_r, monomials(x)> (the log-odds scale of the
conditional law of x_r):

  screening loss   S(J_r) = mean_i exp(-x_r u_i)
  pseudolikelihood l(J_r) = mean_i [log 2 + logcosh(u_i) - x_r u_i]

Identical sample rows are collapsed to weighted unique rows before any
evaluation, which leaves every value and gradient exactly unchanged but
makes repeated solver evaluations cheap on concentrated distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ShapeError
from .sampling import validate_sample_matrix
from .tensor import TupleIndex

__all__ = [
    "DENSE_LIMIT",
    "EXP_CLAMP",
    "logcosh",
    "compress_samples",
    "LossEval",
    "NeighborhoodVector",
    "NodeObjective",
    "rple_eval",
    "rise_eval",
    "empirical_gram",
    "restricted_eigen_diag",
]

#: Largest C(p-1, k-1) for which design matrices and Grams are materialized.
DENSE_LIMIT = 20_000

#: Exponent clamp for the screening loss; clamping sets the overflow flag.
EXP_CLAMP = 700.0


def logcosh(x):
    """log(cosh(x)) evaluated as |x| + log1p(e^{-2|x|}) - log 2; never
    overflows."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def compress_samples(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse identical +/-1 rows to (unique rows, counts).

    Rows are packed into 64-bit words so deduplication is an integer sort,
    which is far cheaper than a lexicographic row sort on concentrated
    samples.  Losses, grams, and fits are weighted by the counts and are
    exactly invariant under this compression.
    """
    X = validate_sample_matrix(X)
    n, p = X.shape
    bits = (X > 0).astype(np.uint64)
    words = []
    for lo in range(0, p, 63):
        hi = min(lo + 63, p)
        shifts = np.arange(hi - lo, dtype=np.uint64)
        words.append((bits[:, lo:hi] << shifts).sum(axis=1, dtype=np.uint64))
    if len(words) == 1:
        keys, first, counts = np.unique(words[0], return_index=True, return_counts=True)
    else:
        stacked = np.stack(words, axis=1)
        _, first, counts = np.unique(
            stacked, axis=0, return_index=True, return_counts=True
        )
    return X[np.sort(first)], counts[np.argsort(first)]


@dataclass(frozen=True)
class NeighborhoodVector:
    """Dense coefficient vector for node ``r``'s regression, indexed by the
    colexicographic tuple order of :class:`TupleIndex`."""

    r: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.float64))


@dataclass(frozen=True)
class LossEval:
    value: float
    gradient: np.ndarray | None
    overflow: bool = False


def _monomial_columns(Xu: np.ndarray, index: TupleIndex, r: int, lo: int, hi: int) -> np.ndarray:
    cols = np.empty((Xu.shape[0], hi - lo))
    for j in range(lo, hi):
        t = index.unrank(j, r)
        prod = Xu[:, t[0] - 1].astype(np.float64)
        for s in t[1:]:
            prod = prod * Xu[:, s - 1]
        cols[:, j - lo] = prod
    return cols


class NodeObjective:
    """Value/gradient oracle for one (sample matrix, node, method) triple.

    The monomial design is materialized once when C(p-1, k-1) fits
    DENSE_LIMIT and recomputed in column chunks per evaluation otherwise.
    The overflow flag is sticky across evaluations.
    """

    def __init__(
        self,
        X: np.ndarray,
        r: int,
        k: int,
        method: str = "rple",
        dense_limit: int = DENSE_LIMIT,
        compressed: tuple[np.ndarray, np.ndarray] | None = None,
    ):
        if method not in ("rple", "rise"):
            raise ValueError(f"method must be 'rple' or 'rise', got {method!r}")
        X = validate_sample_matrix(X)
        self.n, p = X.shape
        if not (1 <= r <= p):
            raise ShapeError(f"node {r} outside [1, {p}]")
        self.r = r
        self.k = k
        self.method = method
        self.index = TupleIndex(p, k)
        self.dim = self.index.size
        self.kfact = float(math.factorial(k))
        self.overflow_seen = False

        Xu, counts = compressed if compressed is not None else compress_samples(X)
        self._Xu = Xu
        self._c = counts / self.n
        self._y = Xu[:, r - 1].astype(np.float64)
        if self.dim <= dense_limit:
            self._D = _monomial_columns(Xu, self.index, r, 0, self.dim)
        else:
            self._D = None
        self._chunk = 4096

    def _matvec(self, coeffs: np.ndarray) -> np.ndarray:
        if self._D is not None:
            return self._D @ coeffs
        u = np.zeros(self._Xu.shape[0])
        for lo in range(0, self.dim, self._chunk):
            hi = min(lo + self._chunk, self.dim)
            u += _monomial_columns(self._Xu, self.index, self.r, lo, hi) @ coeffs[lo:hi]
        return u

    def _rmatvec(self, v: np.ndarray) -> np.ndarray:
        if self._D is not None:
            return self._D.T @ v
        g = np.empty(self.dim)
        for lo in range(0, self.dim, self._chunk):
            hi = min(lo + self._chunk, self.dim)
            g[lo:hi] = _monomial_columns(self._Xu, self.index, self.r, lo, hi).T @ v
        return g

    def __call__(self, coeffs: np.ndarray, need_grad: bool = True) -> LossEval:
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (self.dim,):
            raise ShapeError(
                f"coefficient vector has shape {coeffs.shape}, expected ({self.dim},)"
            )
        u = self.kfact * self._matvec(coeffs)
        z = self._y * u
        c = self._c
        overflow = False
        if self.method == "rple":
            value = float(np.dot(c, math.log(2.0) + logcosh(z) - z))
            grad = None
            if need_grad:
                grad = -self.kfact * self._rmatvec(c * (self._y - np.tanh(u)))
        else:
            arg = -z
            if np.any(np.abs(arg) > EXP_CLAMP):
                overflow = True
                arg = np.clip(arg, -EXP_CLAMP, EXP_CLAMP)
            ez = np.exp(arg)
            value = float(np.dot(c, ez))
            grad = None
            if need_grad:
                grad = -self.kfact * self._rmatvec(c * self._y * ez)
        self.overflow_seen = self.overflow_seen or overflow
        return LossEval(value, grad, overflow)


def rple_eval(jr: NeighborhoodVector, X: np.ndarray) -> LossEval:
    """Average negative conditional log-likelihood and its gradient."""
    return NodeObjective(X, jr.r, jr.k, "rple")(jr.coeffs)


def rise_eval(jr: NeighborhoodVector, X: np.ndarray) -> LossEval:
    """Interaction screening loss and its gradient."""
    return NodeObjective(X, jr.r, jr.k, "rise")(jr.coeffs)


def empirical_gram(
    X: np.ndarray, r: int, k: int, dense_limit: int = DENSE_LIMIT
) -> np.ndarray:
    """Empirical second-moment matrix of the monomial features at node r:
    symmetric, unit diagonal, entries in [-1, 1]."""
    X = validate_sample_matrix(X)
    n, p = X.shape
    index = TupleIndex(p, k)
    if index.size > dense_limit:
        raise CapabilityError(
            f"Gram of size {index.size} exceeds the dense limit {dense_limit}"
        )
    Xu, counts = compress_samples(X)
    D = _monomial_columns(Xu, index, r, 0, index.size)
    return (D.T * (counts / n)) @ D


def restricted_eigen_diag(Q: np.ndarray) -> float:
    """Minimum eigenvalue of a symmetric Gram, the plug-in estimate of the
    restricted-eigenvalue constant."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {Q.shape}")
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-10):
        raise ShapeError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(Q)[0])
