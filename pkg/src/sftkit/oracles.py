"""Query oracles: the function zoo, noise wrappers, and coefficient predictions.

An oracle answers f(x) at chosen points and counts its queries.  Randomized
oracles derive every per-point draw from a stateless hash of (seed, point),
so a repeated query always returns the identical value -- the function
semantics the search algorithm relies on -- with no memo storage at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .groups import Element, ElementLike, GroupSpec

_NOISE_KINDS = ("uniform", "gaussian", "flip")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: 'uniform' over [0, param) (interval width T), 'gaussian'
    with sigma = param, or 'flip' with probability param."""

    kind: str
    param: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "uniform" and self.param < 1:
            raise ValueError("uniform interval width must be >= 1")
        if self.kind == "gaussian" and self.param < 0:
            raise ValueError("gaussian sigma must be >= 0")
        if self.kind == "flip" and not 0 <= self.param < 0.5:
            raise ValueError("flip probability must lie in [0, 1/2)")


@dataclass(frozen=True)
class CorruptionSet:
    """Explicit set of points where a wrapped oracle deviates from f."""

    points: frozenset[Element]

    @classmethod
    def of(cls, group: GroupSpec, points) -> "CorruptionSet":
        return cls(frozenset(group.element(p) for p in points))


class QueryOracle:
    """Abstract sample source: query(x) -> complex, with query accounting.

    Subclasses implement _values() on component batches of shape
    (ncomp, B); |f(x)| <= linf_bound must hold everywhere.
    """

    def __init__(self, group: GroupSpec, linf_bound: float):
        self.group = group
        self.linf_bound = float(linf_bound)
        self.query_count = 0

    def query(self, x: ElementLike) -> complex:
        return complex(self.query_batch(self.group.comps_of([x]))[0])

    def query_batch(self, comps: np.ndarray) -> np.ndarray:
        comps = np.asarray(comps, dtype=np.int64)
        vals = np.asarray(self._values(comps), dtype=np.complex128)
        self.query_count += comps.shape[1]
        if not np.all(np.isfinite(vals)):
            raise ArithmeticError("oracle produced a non-finite value")
        return vals

    def query_all(self) -> np.ndarray:
        """Full value table in flat element order (small groups only)."""
        flat = np.arange(self.group.order)
        return self.query_batch(self.group.flat_to_comps(flat))

    def _values(self, comps: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class CharacterSumOracle(QueryOracle):
    """f(x) = sum over terms of coeff * chi_alpha(x)."""

    def __init__(self, group: GroupSpec, terms: dict):
        self.terms = {group.element(a): complex(c) for a, c in terms.items()}
        super().__init__(group, sum(abs(c) for c in self.terms.values()))

    def _values(self, comps):
        out = np.zeros(comps.shape[1], dtype=np.complex128)
        for alpha, coeff in self.terms.items():
            out += coeff * self.group.char_values(alpha, comps)
        return out


def make_character(g: GroupSpec, alpha: ElementLike, coeff: complex = 1.0) -> QueryOracle:
    """The oracle x -> coeff * chi_alpha(x)."""
    return CharacterSumOracle(g, {g.element(alpha): coeff})


def make_character_sum(g: GroupSpec, terms: dict) -> QueryOracle:
    """A finite linear combination of characters, keyed by frequency."""
    return CharacterSumOracle(g, terms)


class NoisyCharacterOracle(QueryOracle):
    """f(x) = omega_N^(alpha*x + e(x)) on Z_N with per-point noise e."""

    def __init__(self, group: GroupSpec, alpha: ElementLike, noise: NoiseSpec):
        if group.ncomp != 1:
            raise ValueError("noisy characters live on single-component groups")
        if noise.kind not in ("uniform", "gaussian"):
            raise ValueError("noisy characters take uniform or gaussian noise")
        n = group.moduli[0]
        if noise.kind == "uniform" and noise.param > n // 2:
            raise ValueError("uniform interval width must be at most N/2")
        self.alpha = group.element(alpha)
        self.noise = noise
        super().__init__(group, 1.0)

    def _values(self, comps):
        n = self.group.moduli[0]
        x = comps[0]
        if self.noise.kind == "uniform":
            e = _rng.point_uniform_int(self.noise.seed, x, int(self.noise.param)).astype(np.float64)
        else:
            e = _rng.point_gaussian(self.noise.seed, x, self.noise.param)
        phase = (self.alpha[0] * x) % n + e
        return np.exp(2j * np.pi * phase / n)


def make_noisy_character(g: GroupSpec, alpha: ElementLike, noise: NoiseSpec) -> QueryOracle:
    return NoisyCharacterOracle(g, alpha, noise)


class HalfOracle(QueryOracle):
    """half(x) = +1 on [0, N/2), -1 otherwise, on Z_N."""

    def __init__(self, group: GroupSpec):
        if group.ncomp != 1:
            raise ValueError("half lives on single-component groups")
        super().__init__(group, 1.0)

    def _values(self, comps):
        n = self.group.moduli[0]
        return np.where(2 * comps[0] < n, 1.0, -1.0).astype(np.complex128)


def make_half(g: GroupSpec) -> QueryOracle:
    return HalfOracle(g)


class BitOracle(QueryOracle):
    """bit_i(x) = (-1)^(bit i of the canonical residue), on Z_N."""

    def __init__(self, group: GroupSpec, i: int):
        if group.ncomp != 1:
            raise ValueError("bit functions live on single-component groups")
        nbits = (group.moduli[0] - 1).bit_length()
        if not 0 <= i < nbits:
            raise ValueError(f"bit index {i} outside [0, {nbits})")
        self.bit_index = int(i)
        super().__init__(group, 1.0)

    def _values(self, comps):
        bits = (comps[0] >> self.bit_index) & 1
        return np.where(bits == 1, -1.0, 1.0).astype(np.complex128)


def make_bit(g: GroupSpec, i: int) -> QueryOracle:
    return BitOracle(g, i)


class LpnOracle(QueryOracle):
    """LPN_s(x) = (-1)^(<x,s> + e(x)) on Z_2^m, e(x) Bernoulli(rho) per point."""

    def __init__(self, group: GroupSpec, s: ElementLike, rho: float, seed: int = 0):
        if any(n != 2 for n in group.moduli):
            raise ValueError("LPN oracles live on Z_2^m")
        if not 0 <= rho < 0.5:
            raise ValueError("noise rate must lie in [0, 1/2)")
        self.secret = group.element(s)
        self.noise_rate = float(rho)
        self.seed = int(seed)
        super().__init__(group, 1.0)

    def _values(self, comps):
        s = np.array(self.secret, dtype=np.int64)
        parity = (s @ comps) & 1
        if self.noise_rate > 0:
            flat = self.group.comps_to_flat(comps)
            flips = _rng.point_bernoulli(self.seed, flat, self.noise_rate)
            parity = parity ^ flips.astype(np.int64)
        return np.where(parity == 1, -1.0, 1.0).astype(np.complex128)

    def realized_flip_count(self) -> int:
        """|I| for the full domain; exact, for test fixtures on small groups."""
        flat = np.arange(self.group.order)
        return int(_rng.point_bernoulli(self.seed, flat, self.noise_rate).sum())


def make_lpn(g: GroupSpec, s: ElementLike, rho: float, seed: int = 0) -> QueryOracle:
    return LpnOracle(g, s, rho, seed)


class UnreliableOracle(QueryOracle):
    """Wrapper agreeing with the inner oracle except on a corruption set I.

    Corrupted points return -f(x) by default (the worst case of the
    heaviness-degradation bound), keeping ||O||_inf <= ||f||_inf.
    """

    def __init__(self, inner: QueryOracle, corruption, seed: int = 0):
        self.inner = inner
        self.seed = int(seed)
        g = inner.group
        if isinstance(corruption, CorruptionSet):
            if 2 * len(corruption.points) >= g.order:
                raise ValueError("corruption fraction must stay below 1/2")
            self._flat_set = np.sort(np.fromiter(
                (g.flat_index(p) for p in corruption.points), dtype=np.int64,
                count=len(corruption.points)))
            self._rate = None
        else:
            rate = float(corruption.param if isinstance(corruption, NoiseSpec) else corruption)
            if not 0 <= rate < 0.5:
                raise ValueError("corruption fraction must stay below 1/2")
            self._flat_set = None
            self._rate = rate
        super().__init__(g, inner.linf_bound)

    def _corrupted(self, flat: np.ndarray) -> np.ndarray:
        if self._flat_set is not None:
            return np.isin(flat, self._flat_set)
        return _rng.point_bernoulli(self.seed, flat, self._rate)

    def _values(self, comps):
        vals = np.asarray(self.inner._values(comps), dtype=np.complex128).copy()
        mask = self._corrupted(self.group.comps_to_flat(comps))
        vals[mask] = -vals[mask]
        return vals

    def realized_corruption(self) -> np.ndarray:
        """Boolean corruption mask over the full domain (small groups only)."""
        flat = np.arange(self.group.order)
        return self._corrupted(flat)


def unreliable_wrap(inner: QueryOracle, corruption, seed: int = 0) -> QueryOracle:
    """Corrupt `inner` on an explicit CorruptionSet or at a per-point flip rate."""
    return UnreliableOracle(inner, corruption, seed)


class TableOracle(QueryOracle):
    """Oracle backed by an explicit full value table in flat element order."""

    def __init__(self, group: GroupSpec, values: np.ndarray):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (group.order,):
            raise ValueError("table must cover the whole group")
        self.values = values
        super().__init__(group, float(np.abs(values).max()))

    def _values(self, comps):
        return self.values[self.group.comps_to_flat(comps)]


def bit_support_predict(k: int, i: int) -> list[tuple[int, float]]:
    """Predicted spectrum of bit_i on Z_{2^k}: support on the odd multiples of
    2^(k-i-1), with envelope 2^(k-i) / |alpha|_{2^k} (constant 1, validated
    empirically)."""
    if not 0 <= i < k:
        raise ValueError(f"bit index {i} outside [0, {k})")
    n = 1 << k
    step = 1 << (k - i - 1)
    out = []
    for j in range(1, 1 << (i + 1), 2):
        alpha = j * step
        dist = min(alpha, n - alpha)
        out.append((alpha, (1 << (k - i)) / dist))
    return out
