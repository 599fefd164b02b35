"""Random d-regular k-uniform hypergraphs with coupled weights.

Generation uses the configuration model: d stubs per node, a random perfect
partition into groups of k, rejecting any group with a repeated node or any
duplicate hyperedge, and restarting until a simple hypergraph appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError
from .tensor import InteractionTensor

__all__ = [
    "HypergraphSpec",
    "random_regular_uniform",
    "assign_couplings",
    "tensor_from_spec",
]

_MAX_RESTARTS = 10_000

SIGN_MODES = ("all-positive", "rademacher")


@dataclass(frozen=True)
class HypergraphSpec:
    """Simulation model: a d-regular k-uniform hypergraph on p nodes whose
    hyperedges carry coupling intensity beta.

    beta is the energy coefficient of a hyperedge: each edge contributes
    beta * prod(spins) to the energy.  Since the tensor convention counts
    every ordering of an edge, the stored tensor entries are beta / k!
    (see :func:`tensor_from_spec`).
    """

    p: int
    k: int
    d: int
    beta: float = 1.0
    sign_mode: str = "all-positive"
    seed: int = 0

    def __post_init__(self):
        if self.k < 2 or self.d < 1 or self.p < 1:
            raise ValueError("need p >= 1, k >= 2, d >= 1")
        if self.k > self.p:
            raise ValueError(f"hyperedge size k={self.k} exceeds p={self.p}")
        if (self.d * self.p) % self.k != 0:
            raise ValueError(
                f"infeasible spec: d*p = {self.d * self.p} is not divisible by k = {self.k}"
            )
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}")

    @property
    def n_edges(self) -> int:
        return self.d * self.p // self.k


def random_regular_uniform(spec: HypergraphSpec) -> list[tuple[int, ...]]:
    """Sorted hyperedge list of a random d-regular k-uniform hypergraph,
    uniform over configuration-model pairings conditioned on simplicity."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(0,)))
    stubs = np.repeat(np.arange(1, spec.p + 1), spec.d)
    for _ in range(_MAX_RESTARTS):
        rng.shuffle(stubs)
        groups = stubs.reshape(spec.n_edges, spec.k)
        edges: set[tuple[int, ...]] = set()
        simple = True
        for g in groups:
            e = tuple(sorted(int(v) for v in g))
            if len(set(e)) < spec.k or e in edges:
                simple = False
                break
            edges.add(e)
        if simple:
            return sorted(edges)
    raise GenerationError(
        f"no simple {spec.d}-regular {spec.k}-uniform hypergraph on {spec.p} nodes "
        f"found in {_MAX_RESTARTS} restarts"
    )


def assign_couplings(
    edges: list[tuple[int, ...]],
    p: int,
    beta: float,
    sign_mode: str = "all-positive",
    seed: int = 0,
) -> InteractionTensor:
    """Tensor with each hyperedge weighted +beta, or +/-beta with
    independent fair signs under 'rademacher'."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if sign_mode not in SIGN_MODES:
        raise ValueError(f"sign_mode must be one of {SIGN_MODES}")
    if not edges:
        return InteractionTensor(p, 2, {})
    k = len(edges[0])
    if sign_mode == "rademacher":
        rng = np.random.default_rng(seed)
        signs = rng.integers(0, 2, size=len(edges)) * 2 - 1
    else:
        signs = np.ones(len(edges), dtype=np.int64)
    return InteractionTensor(
        p, k, {tuple(e): float(beta * s) for e, s in zip(edges, signs)}
    )


def tensor_from_spec(spec: HypergraphSpec) -> InteractionTensor:
    """Generate the hypergraph and weight it at coupling intensity beta.

    Stored entries are beta / k!: the energy counts all k! orderings of a
    hyperedge, so this makes each hyperedge's total energy coefficient
    exactly +/-beta, which is the scale on which the simulation protocol's
    intensities are defined.
    """
    edges = random_regular_uniform(spec)
    sign_seed = int(
        np.random.SeedSequence(spec.seed, spawn_key=(1,)).generate_state(1)[0]
    )
    return assign_couplings(
        edges,
        spec.p,
        spec.beta / math.factorial(spec.k),
        spec.sign_mode,
        sign_seed,
    )
