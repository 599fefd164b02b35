"""Sparse symmetric interaction tensors and neighborhood indexing.

The model parameter is an order-k tensor J on p nodes, symmetric with zero
diagonals, so it is fully described by a map from strictly increasing
k-tuples (hyperedges) to weights.  Each hyperedge with stored weight w
contributes k! * w * prod(spins) to the energy, once per permutation of its
nodes.

Node ids are 1-based in every public signature and in the file format;
internal arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidSampleError, InvalidTupleError, ParseError

__all__ = [
    "TupleIndex",
    "InteractionTensor",
    "GraphStats",
    "rank_tuple",
    "get_coupling",
    "hamiltonian",
    "local_monomials",
    "local_field",
    "neighborhood_vector",
    "graph_stats",
    "read_tensor_csv",
    "write_tensor_csv",
]


def _check_node(s: int, p: int) -> None:
    if not (1 <= s <= p):
        raise InvalidTupleError(f"node id {s} outside [1, {p}]")


class TupleIndex:
    """Bijection between increasing (k-1)-tuples avoiding a center node and
    dense indices 0..C(p-1,k-1)-1.

    Tuples are ordered colexicographically over the relabeled ground set
    [p] \\ {r}: rank(t) = sum_j C(c_j, j) where c_1 < ... < c_{k-1} are
    the 0-based positions of t's nodes among the p-1 remaining nodes.
    """

    def __init__(self, p: int, k: int):
        if k < 2:
            raise ValueError(f"interaction order k={k} must be >= 2")
        if p < k:
            raise ValueError(f"need p >= k, got p={p}, k={k}")
        self.p = p
        self.k = k
        self.size = math.comb(p - 1, k - 1)

    def _position(self, s: int, r: int) -> int:
        # 0-based position of node s among [1,p] with r removed
        return s - 1 if s < r else s - 2

    def _node_at(self, pos: int, r: int) -> int:
        s = pos + 1
        return s if s < r else s + 1

    def rank(self, t: Sequence[int], r: int) -> int:
        """Dense index of increasing tuple ``t`` (nodes excluding ``r``)."""
        _check_node(r, self.p)
        if len(t) != self.k - 1:
            raise InvalidTupleError(
                f"expected a {self.k - 1}-tuple, got length {len(t)}"
            )
        prev = 0
        idx = 0
        for j, s in enumerate(t, start=1):
            _check_node(s, self.p)
            if s == r:
                raise InvalidTupleError(f"tuple {tuple(t)} contains center node {r}")
            if s <= prev:
                raise InvalidTupleError(f"tuple {tuple(t)} is not strictly increasing")
            prev = s
            idx += math.comb(self._position(s, r), j)
        return idx

    def unrank(self, idx: int, r: int) -> tuple[int, ...]:
        """Inverse of :meth:`rank`."""
        _check_node(r, self.p)
        if not (0 <= idx < self.size):
            raise InvalidTupleError(f"index {idx} outside [0, {self.size})")
        rem = idx
        positions = []
        for j in range(self.k - 1, 0, -1):
            # largest c with C(c, j) <= rem
            c = j - 1
            while math.comb(c + 1, j) <= rem:
                c += 1
            positions.append(c)
            rem -= math.comb(c, j)
        positions.reverse()
        return tuple(self._node_at(c, r) for c in positions)

    def tuples(self, r: int) -> Iterator[tuple[int, ...]]:
        """All (k-1)-tuples avoiding ``r`` in colexicographic (rank) order."""
        for idx in range(self.size):
            yield self.unrank(idx, r)


def rank_tuple(t: Sequence[int], r: int, p: int, k: int) -> int:
    """Dense colexicographic index of increasing (k-1)-tuple ``t`` among the
    tuples drawn from [1,p] excluding ``r``."""
    return TupleIndex(p, k).rank(t, r)


def _canonical_entries(
    p: int, k: int, entries: Mapping[Sequence[int], float]
) -> dict[tuple[int, ...], float]:
    canon: dict[tuple[int, ...], float] = {}
    for t, w in entries.items():
        t = tuple(int(s) for s in t)
        if len(t) != k:
            raise InvalidTupleError(f"hyperedge {t} has {len(t)} nodes, expected {k}")
        for s in t:
            _check_node(s, p)
        if len(set(t)) != k:
            raise InvalidTupleError(f"hyperedge {t} repeats a node")
        key = tuple(sorted(t))
        if key in canon:
            raise InvalidTupleError(f"duplicate hyperedge {key}")
        w = float(w)
        if w != 0.0:  # zero-weight writes delete the entry
            canon[key] = w
    return canon


@dataclass(frozen=True)
class InteractionTensor:
    """Symmetric zero-diagonal coupling tensor, stored sparsely by sorted
    hyperedge.  Immutable after construction."""

    p: int
    k: int
    entries: dict[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"interaction order k={self.k} must be >= 2")
        if self.p < 1:
            raise ValueError(f"node count p={self.p} must be positive")
        object.__setattr__(
            self, "entries", _canonical_entries(self.p, self.k, self.entries)
        )

    def weight(self, t: Sequence[int]) -> float:
        """Coupling of an ordered k-tuple: permutation-invariant, zero on
        diagonals and on unset hyperedges."""
        t = tuple(int(s) for s in t)
        if len(t) != self.k:
            raise InvalidTupleError(f"expected a {self.k}-tuple, got {t}")
        for s in t:
            _check_node(s, self.p)
        if len(set(t)) != self.k:
            return 0.0
        return self.entries.get(tuple(sorted(t)), 0.0)

    def edges(self) -> list[tuple[int, ...]]:
        """Sorted list of stored hyperedges (the support)."""
        return sorted(self.entries)

    def edge_array(self) -> tuple[np.ndarray, np.ndarray]:
        """Stored hyperedges as a 0-based (m, k) int array plus weights."""
        edges = self.edges()
        if not edges:
            return np.zeros((0, self.k), dtype=np.int64), np.zeros(0)
        nodes = np.asarray(edges, dtype=np.int64) - 1
        w = np.asarray([self.entries[e] for e in edges], dtype=np.float64)
        return nodes, w

    def relabel(self, perm: Sequence[int]) -> "InteractionTensor":
        """Apply a node relabeling; ``perm[i]`` is the new 1-based id of the
        node previously labeled i+1."""
        if sorted(perm) != list(range(1, self.p + 1)):
            raise ValueError("perm must be a permutation of 1..p")
        new = {
            tuple(sorted(perm[s - 1] for s in e)): w for e, w in self.entries.items()
        }
        return InteractionTensor(self.p, self.k, new)


def get_coupling(J: InteractionTensor, t: Sequence[int]) -> float:
    """Tensor entry for an ordered k-tuple (see :meth:`InteractionTensor.weight`)."""
    return J.weight(t)


def validate_spins(x: Sequence[int] | np.ndarray, p: int) -> np.ndarray:
    """Return ``x`` as a 1-D float array after checking it is a +/-1 vector
    of length p."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p,):
        raise InvalidSampleError(f"expected a length-{p} spin vector, got shape {x.shape}")
    if not np.all(np.abs(x) == 1.0):
        raise InvalidSampleError("spin entries must be exactly -1 or +1")
    return x


def hamiltonian(J: InteractionTensor, x: Sequence[int] | np.ndarray) -> float:
    """Energy of configuration ``x``: the sum over all ordered k-tuples of
    coupling times spin product, i.e. k! times the sum over stored hyperedges."""
    x = validate_spins(x, J.p)
    kfact = math.factorial(J.k)
    total = 0.0
    for e, w in J.entries.items():
        prod = w
        for s in e:
            prod *= x[s - 1]
        total += prod
    return kfact * total


def local_monomials(
    x: Sequence[int] | np.ndarray, r: int, idx: TupleIndex
) -> np.ndarray:
    """Vector of spin products prod_{s in t} x_s over the (k-1)-tuples
    avoiding ``r``, in the dense order of ``idx``."""
    x = validate_spins(x, idx.p)
    out = np.empty(idx.size)
    for i, t in enumerate(idx.tuples(r)):
        prod = 1.0
        for s in t:
            prod *= x[s - 1]
        out[i] = prod
    return out


def local_field(J: InteractionTensor, x: Sequence[int] | np.ndarray, r: int) -> float:
    """Local field m_r(x): the sum over ordered (k-1)-tuples of the couplings
    at node ``r`` times spin products, i.e. (k-1)! times the inner product of
    the dense neighborhood slice with the monomial vector."""
    x = validate_spins(x, J.p)
    _check_node(r, J.p)
    km1fact = math.factorial(J.k - 1)
    total = 0.0
    for e, w in J.entries.items():
        if r not in e:
            continue
        prod = w
        for s in e:
            if s != r:
                prod *= x[s - 1]
        total += prod
    return km1fact * total


def neighborhood_vector(J: InteractionTensor, r: int, idx: TupleIndex | None = None) -> np.ndarray:
    """Dense neighborhood slice J_r: coupling of each (k-1)-tuple t (paired
    with ``r``) in dense order."""
    idx = idx or TupleIndex(J.p, J.k)
    _check_node(r, J.p)
    out = np.zeros(idx.size)
    for e, w in J.entries.items():
        if r in e:
            t = tuple(s for s in e if s != r)
            out[idx.rank(t, r)] = w
    return out


@dataclass(frozen=True)
class GraphStats:
    beta_max: float
    degrees: np.ndarray  # per-node hyperedge counts, position i = node i+1
    d_max: int


def graph_stats(J: InteractionTensor) -> GraphStats:
    """Maximum coupling magnitude, per-node degrees, and maximum degree of
    the stored support."""
    degrees = np.zeros(J.p, dtype=np.int64)
    beta = 0.0
    for e, w in J.entries.items():
        beta = max(beta, abs(w))
        for s in e:
            degrees[s - 1] += 1
    return GraphStats(beta, degrees, int(degrees.max()) if J.p else 0)


def write_tensor_csv(path: str, J: InteractionTensor) -> None:
    """Write the one-hyperedge-per-line CSV format with a ``# p=.. k=..``
    header; edges sorted, weights at full precision."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# p={J.p} k={J.k}\n")
        for e in J.edges():
            f.write(",".join(str(s) for s in e) + f",{J.entries[e]:.17g}\n")


def _parse_header(line: str, path: str, lineno: int, keys: tuple[str, ...]) -> dict[str, int]:
    body = line[1:].strip()
    out: dict[str, int] = {}
    for part in body.split():
        if "=" not in part:
            raise ParseError(path, lineno, f"malformed header field {part!r}")
        name, _, val = part.partition("=")
        try:
            out[name] = int(val)
        except ValueError as exc:
            raise ParseError(path, lineno, f"non-integer header value {part!r}") from exc
    for key in keys:
        if key not in out:
            raise ParseError(path, lineno, f"header is missing {key}=")
    return out


def read_tensor_csv(path: str) -> InteractionTensor:
    """Parse the tensor CSV format, rejecting non-increasing or duplicate
    hyperedges with line-numbered errors."""
    entries: dict[tuple[int, ...], float] = {}
    p = k = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = _parse_header(line, path, lineno, ("p", "k"))
                p, k = header["p"], header["k"]
                continue
            if p is None:
                raise ParseError(path, lineno, "hyperedge line before '# p=.. k=..' header")
            parts = line.split(",")
            if len(parts) != k + 1:
                raise ParseError(path, lineno, f"expected {k} node ids and a weight")
            try:
                t = tuple(int(s) for s in parts[:-1])
                w = float(parts[-1])
            except ValueError as exc:
                raise ParseError(path, lineno, f"malformed hyperedge line {line!r}") from exc
            if any(t[i] >= t[i + 1] for i in range(len(t) - 1)):
                raise ParseError(path, lineno, f"tuple {t} is not strictly increasing")
            if any(not (1 <= s <= p) for s in t):
                raise ParseError(path, lineno, f"tuple {t} has node ids outside [1, {p}]")
            if t in entries:
                raise ParseError(path, lineno, f"duplicate hyperedge {t}")
            entries[t] = w
    if p is None or k is None:
        raise ParseError(path, 1, "missing '# p=.. k=..' header")
    return InteractionTensor(p, k, entries)
