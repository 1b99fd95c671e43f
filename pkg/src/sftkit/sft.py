"""Significant Fourier transform via binary search over frequency-domain cosets.

The search walks an index-2 subgroup chain H_0 = G > H_1 > ... > {0}
(component-major, bit by bit).  A node is a coset z + H of candidate
frequencies; its restricted spectral mass sum_{alpha in z+H} |fhat(alpha)|^2
is estimated through the filter function supported on H^perp, and branches
whose estimate drops below tau/2 are dismissed.  Surviving singletons get a
direct coefficient estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .groups import (Element, ElementLike, GroupSpec, SftCapabilityError,
                     SubgroupLevel, orth_sample_comps)
from .oracles import QueryOracle


class NodeCapExceeded(RuntimeError):
    """More cosets survived a level than the list-size cap allows.

    Signals a threshold too small for the function: the mass is spread so
    thin that the search would keep an excessive number of branches alive.
    """


@dataclass
class SftParams:
    """Threshold, failure probability, and sampling knobs for one run.

    m1/m2/node_cap left as None are sized automatically from tau, delta,
    and the oracle's declared sup-norm.
    """

    tau: float
    delta: float = 0.1
    m1: "int | None" = None
    m2: "int | None" = None
    node_cap: "int | None" = None
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("m1", "m2", "node_cap"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class CosetNode:
    """The frequency coset rep + H, with H given by a chain level."""

    rep: Element
    level: SubgroupLevel

    def __post_init__(self):
        for r, l in zip(self.rep, self.level.depths):
            if not 0 <= r < (1 << l):
                raise ValueError(f"{self.rep} is not the minimal coset representative")


@dataclass
class HeavyList:
    """Search output: frequencies with estimated coefficients, heaviest first."""

    entries: list[tuple[Element, complex]]
    tau_used: float
    queries_used: int
    nodes_evaluated: int = 0
    m1: int = 0
    m2: int = 0
    node_cap: int = 0

    def frequencies(self) -> list[Element]:
        return [alpha for alpha, _ in self.entries]

    def __len__(self):
        return len(self.entries)


def chernoff_samples(amplitude_bound: float, additive_error: float, delta_prime: float) -> int:
    """Smallest m with 2*exp(-error^2 * m / (2 * bound^2)) <= delta_prime."""
    if amplitude_bound <= 0 or additive_error <= 0:
        raise ValueError("bounds must be positive")
    if not 0 < delta_prime < 1:
        raise ValueError("delta_prime must lie in (0, 1)")
    rate = additive_error ** 2 / (2.0 * amplitude_bound ** 2)

    def ok(m: int) -> bool:
        return 2.0 * math.exp(-rate * m) <= delta_prime

    m = max(1, math.ceil(math.log(2.0 / delta_prime) / rate))
    while m > 1 and ok(m - 1):
        m -= 1
    while not ok(m):
        m += 1
    return m


def chain_build(g: GroupSpec) -> list[SubgroupLevel]:
    """Index-2 chain from H = G down to {0}, component-major, bit by bit."""
    if not g.sft_capable:
        raise SftCapabilityError(f"{g} has a non-power-of-two component")
    depths = [0] * g.ncomp
    chain = [SubgroupLevel(g, tuple(depths))]
    for i, nbits in enumerate(g.bit_depths):
        for _ in range(nbits):
            depths[i] += 1
            chain.append(SubgroupLevel(g, tuple(depths)))
    return chain


def node_children(node: CosetNode, child_level: SubgroupLevel) -> list[CosetNode]:
    """Split a coset into its two child cosets at the next chain level."""
    split = [i for i, (a, b) in enumerate(zip(node.level.depths, child_level.depths)) if b == a + 1]
    if len(split) != 1:
        raise ValueError("child level must deepen exactly one component by one bit")
    i = split[0]
    bump = list(node.rep)
    bump[i] += 1 << node.level.depths[i]
    return [CosetNode(node.rep, child_level), CosetNode(tuple(bump), child_level)]


def filter_eval(node: CosetNode, x: ElementLike) -> complex:
    """The filter h_{z+H}(x): chi_z(x) * |H| on H^perp, zero elsewhere.

    Its transform is exactly the 0/1 indicator of the coset z + H.
    """
    level = node.level
    if not level.orth_contains(x):
        return 0.0 + 0.0j
    from .groups import char_eval
    return char_eval(level.group, node.rep, x) * level.subgroup_order


def est_coeff(oracle: QueryOracle, z: ElementLike, m1: int,
              rng: np.random.Generator) -> complex:
    """Monte Carlo coefficient estimate (1/m1) sum_i f(x_i) chi_z(-x_i)."""
    g = oracle.group
    xs = g.random_comps(rng, m1)
    vals = oracle.query_batch(xs)
    chi = g.char_values(z, xs, conjugate=True)
    return complex((vals * chi).mean())


def est_norm_sq(oracle: QueryOracle, node: CosetNode, m1: int, m2: int,
                rng: np.random.Generator) -> float:
    """Estimate the restricted mass sum_{alpha in z+H} |fhat(alpha)|^2.

    Averages |(1/m2) sum_j f(x_i - y_ij) chi_z(y_ij)|^2 over m1 points x_i,
    with the y_ij uniform in H^perp.
    """
    g = oracle.group
    mods = np.array(g.moduli, dtype=np.int64)[:, None]
    xs = g.random_comps(rng, m1)
    ys = orth_sample_comps(node.level, rng, m1 * m2)
    pts = (np.repeat(xs, m2, axis=1) - ys) % mods
    vals = oracle.query_batch(pts)
    chi = g.char_values(node.rep, ys)
    inner = (vals * chi).reshape(m1, m2).mean(axis=1)
    return float((np.abs(inner) ** 2).mean())


@dataclass
class _Resolved:
    tau: float
    m1: int
    m2: int
    node_cap: int


def _resolve(params: SftParams, oracle: QueryOracle, chain_len: int) -> _Resolved:
    linf = oracle.linf_bound
    if linf <= 0:
        raise ValueError("oracle declares a zero sup-norm; nothing to find")
    if params.tau > linf ** 2 + 1e-12:
        raise ValueError(f"tau={params.tau} exceeds ||f||_inf^2 = {linf ** 2}")
    node_cap = params.node_cap
    if node_cap is None:
        node_cap = math.ceil(2.0 * linf ** 2 / (params.tau / 2.0))
    m2 = params.m2
    if m2 is None:
        # keeps the estimator's additive bias ||f||_2^2 / m2 under tau/4
        m2 = max(16, math.ceil(4.0 * linf ** 2 / params.tau))
    m1 = params.m1
    if m1 is None:
        delta_prime = params.delta / (2.0 * chain_len)
        m1 = chernoff_samples(linf, math.sqrt(params.tau) / 2.0, delta_prime)
    return _Resolved(params.tau, m1, m2, node_cap)


def sft_run(oracle: QueryOracle, params: SftParams) -> HeavyList:
    """Find every tau-heavy frequency of the oracle's function.

    With probability >= 1 - delta the output contains every alpha with
    |fhat(alpha)|^2 > tau and nothing that is not (tau/2)-heavy; the list
    never exceeds the node cap.  Deterministic given (seed, params, oracle).
    """
    g = oracle.group
    chain = chain_build(g)
    res = _resolve(params, oracle, len(chain))
    tau, m1, m2 = res.tau, res.m1, res.m2
    start_queries = oracle.query_count
    nodes_evaluated = 0

    live = [CosetNode(g.zero, chain[0])]
    for k in range(1, len(chain)):
        survivors = []
        for node in live:
            for child in node_children(node, chain[k]):
                node_rng = _rng.generator(params.seed, "node", k, g.flat_index(child.rep))
                est = est_norm_sq(oracle, child, m1, m2, node_rng)
                nodes_evaluated += 1
                if est >= tau / 2.0:
                    survivors.append(child)
        if len(survivors) > res.node_cap:
            raise NodeCapExceeded(
                f"{len(survivors)} cosets survived level {k} (cap {res.node_cap}); "
                f"tau={tau} is too small for this function")
        live = survivors
        if not live:
            break

    entries = []
    if live and live[0].level.subgroup_order == 1:
        for node in live:
            leaf_rng = _rng.generator(params.seed, "leaf", g.flat_index(node.rep))
            est = est_coeff(oracle, node.rep, m1, leaf_rng)
            nodes_evaluated += 1
            if abs(est) ** 2 >= tau / 2.0:
                entries.append((node.rep, est))
    entries.sort(key=lambda e: (-abs(e[1]) ** 2, g.flat_index(e[0])))

    return HeavyList(
        entries=entries,
        tau_used=tau,
        queries_used=oracle.query_count - start_queries,
        nodes_evaluated=nodes_evaluated,
        m1=m1,
        m2=m2,
        node_cap=res.node_cap,
    )
