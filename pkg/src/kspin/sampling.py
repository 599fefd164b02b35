"""Sampling from the k-spin model and exact small-p probability oracles.

The distribution is P(x) = exp(H(x)) / Z over x in {-1,+1}^p with H the
tensor energy.  For p up to ENUM_LIMIT the state space is enumerated
directly (chunked, max-shifted); beyond that, single-site Gibbs sampling is
the only option.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _gibbs
from .errors import CapabilityError, InvalidSampleError, ParseError
from .tensor import InteractionTensor, validate_spins

__all__ = [
    "ENUM_LIMIT",
    "GibbsConfig",
    "partition_function",
    "pmf",
    "exact_probabilities",
    "conditional_prob",
    "sample_exact",
    "sample_gibbs",
    "decode_states",
    "read_samples_csv",
    "write_samples_csv",
    "validate_sample_matrix",
]

#: Hard guard on 2^p state enumeration.
ENUM_LIMIT = 25

_CHUNK = 1 << 20


@dataclass(frozen=True)
class GibbsConfig:
    """Burn-in / thinning / seeding knobs for the Gibbs sampler."""

    burn_in_sweeps: int = 1000
    thin_sweeps: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")
        if self.thin_sweeps < 1:
            raise ValueError("thin_sweeps must be >= 1")


def validate_sample_matrix(X: np.ndarray) -> np.ndarray:
    """Check an (n, p) matrix of +/-1 spins and return it as int8."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidSampleError(f"expected an (n, p) sample matrix, got shape {X.shape}")
    if not np.all(np.abs(X) == 1):
        raise InvalidSampleError("sample entries must be exactly -1 or +1")
    return X.astype(np.int8)


def decode_states(indices: np.ndarray, p: int) -> np.ndarray:
    """Map state indices in [0, 2^p) to +/-1 rows; bit j-1 is node j."""
    idx = np.asarray(indices, dtype=np.int64)
    return (((idx[:, None] >> np.arange(p)) & 1) * 2 - 1).astype(np.int8)


def _check_enum(p: int) -> None:
    if p > ENUM_LIMIT:
        raise CapabilityError(
            f"exact enumeration needs p <= {ENUM_LIMIT}, got p={p}; use the Gibbs sampler"
        )


def _energies(J: InteractionTensor, states: np.ndarray) -> np.ndarray:
    kfact = math.factorial(J.k)
    H = np.zeros(states.shape[0])
    for e, w in J.entries.items():
        prod = np.full(states.shape[0], kfact * w)
        for s in e:
            prod = prod * states[:, s - 1]
        H += prod
    return H


def partition_function(J: InteractionTensor) -> float:
    """log Z by chunked enumeration of all 2^p states with max-shift."""
    _check_enum(J.p)
    total = 2 ** J.p
    chunk_max = []
    chunk_sum = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        H = _energies(J, decode_states(idx, J.p))
        m = H.max()
        chunk_max.append(m)
        chunk_sum.append(np.exp(H - m).sum())
    M = max(chunk_max)
    return M + math.log(sum(s * math.exp(m - M) for m, s in zip(chunk_max, chunk_sum)))


def pmf(J: InteractionTensor, x) -> float:
    """Probability of one configuration: exp(H(x) - log Z)."""
    x = validate_spins(x, J.p)
    logz = partition_function(J)
    H = _energies(J, x[None, :].astype(np.int8))[0]
    return math.exp(H - logz)


def exact_probabilities(J: InteractionTensor) -> np.ndarray:
    """Probabilities of all 2^p states, indexed as in :func:`decode_states`."""
    _check_enum(J.p)
    idx = np.arange(2 ** J.p, dtype=np.int64)
    H = _energies(J, decode_states(idx, J.p))
    H -= H.max()
    w = np.exp(H)
    return w / w.sum()


def conditional_prob(J: InteractionTensor, x, r: int) -> float:
    """P(X_r = +1 | the other spins), via a stable sigmoid of the local
    field's log-odds 2*k*m_r(x)."""
    from .tensor import local_field

    m = local_field(J, x, r)
    arg = 2.0 * J.k * m
    if arg >= 0:
        return 1.0 / (1.0 + math.exp(-arg))
    ea = math.exp(arg)
    return ea / (1.0 + ea)


def sample_exact(J: InteractionTensor, n: int, seed: int = 0) -> np.ndarray:
    """n i.i.d. draws by inverse CDF over the enumerated state space.
    Deterministic given the seed.  Requires p <= ENUM_LIMIT."""
    if n < 1:
        raise ValueError("n must be >= 1")
    probs = exact_probabilities(J)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    rng = np.random.default_rng(seed)
    draws = np.searchsorted(cdf, rng.random(n), side="right")
    return decode_states(np.minimum(draws, len(probs) - 1), J.p)


def sample_gibbs(
    J: InteractionTensor, n: int, cfg: GibbsConfig | None = None, chain_id: int = 0
) -> np.ndarray:
    """n samples from a single Gibbs chain.

    One sweep updates nodes 1..p in order, each resampled from its
    conditional.  The chain starts from a uniform random state, runs
    ``burn_in_sweeps`` sweeps, then records the state after every
    ``thin_sweeps``-th sweep.  The RNG stream is derived from
    (cfg.seed, chain_id), so chains with distinct ids are independent and
    each call is deterministic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = cfg or GibbsConfig()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(chain_id,)))

    p = J.p
    edge_nodes, edge_w = J.edge_array()
    if edge_nodes.shape[0] == 0:
        edge_nodes = np.zeros((0, J.k), dtype=np.int64)
    ptr, idx = _gibbs.incidence(edge_nodes, p)
    km_scale = float(math.factorial(J.k))

    x = (rng.integers(0, 2, size=p) * 2 - 1).astype(np.int8)
    out = np.empty((n, p), dtype=np.int8)

    # burn-in: thin larger than the block so nothing is recorded
    burn = cfg.burn_in_sweeps
    dummy = np.empty((0, p), dtype=np.int8)
    while burn > 0:
        block = min(burn, 4096)
        u = rng.random((block, p))
        _gibbs.run_sweeps(x, edge_nodes, edge_w, ptr, idx, km_scale, u, dummy, block + 1)
        burn -= block

    thin = cfg.thin_sweeps
    recorded = 0
    block_records = max(1, 4096 // thin)
    while recorded < n:
        take = min(n - recorded, block_records)
        u = rng.random((take * thin, p))
        _gibbs.run_sweeps(
            x, edge_nodes, edge_w, ptr, idx, km_scale, u, out[recorded : recorded + take], thin
        )
        recorded += take
    return out


def write_samples_csv(path: str, X: np.ndarray, seed: int | None = None) -> None:
    """Write one observation per row with a ``# p=.. n=..`` header."""
    X = validate_sample_matrix(X)
    n, p = X.shape
    header = f"# p={p} n={n}"
    if seed is not None:
        header += f" seed={seed}"
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for row in X:
            f.write(",".join("1" if v > 0 else "-1" for v in row) + "\n")


def read_samples_csv(path: str) -> np.ndarray:
    """Parse the samples CSV; every entry must be exactly ``1`` or ``-1``."""
    rows: list[list[int]] = []
    p = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                continue
            parts = line.split(",")
            vals = []
            for cell in parts:
                cell = cell.strip()
                if cell == "1":
                    vals.append(1)
                elif cell == "-1":
                    vals.append(-1)
                else:
                    raise ParseError(path, lineno, f"entry {cell!r} is not 1 or -1")
            if p is None:
                p = len(vals)
            elif len(vals) != p:
                raise ParseError(path, lineno, f"expected {p} entries, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ParseError(path, 1, "no sample rows found")
    return np.asarray(rows, dtype=np.int8)
