"""Finite abelian groups Z_{N1} x ... x Z_{Nm}: characters, exact transforms, subgroups.

Elements are tuples of residues, one per component, and serve both as
time-domain points and as frequency indices.  The exhaustive transform
here is deliberately quadratic: it is the test oracle against which the
sublinear machinery is checked, so it stays as close to the defining
formula as possible.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

MAX_ORDER = 1 << 62        # all index arithmetic stays in native integers
MAX_DFT_ORDER = 1 << 20    # exhaustive-transform guard
_TABLE_MAX = 1 << 20       # largest root-of-unity lookup table kept per group
_FAST_COMPONENT_MAX = 1 << 31  # phase arithmetic in int64 needs N_i below this

Element = tuple[int, ...]
ElementLike = "int | Sequence[int]"


class DimensionError(ValueError):
    """An element does not match the group's component count."""


class SftCapabilityError(ValueError):
    """Operation requires every component modulus to be a power of two."""


class GroupSpec:
    """The additive group Z_{N1} x ... x Z_{Nm} given by its component moduli."""

    def __init__(self, moduli: "int | Iterable[int]"):
        if isinstance(moduli, int):
            moduli = (moduli,)
        mods = tuple(int(n) for n in moduli)
        if not mods:
            raise ValueError("a group needs at least one component modulus")
        if any(n < 2 for n in mods):
            raise ValueError(f"every modulus must be >= 2, got {mods}")
        order = math.prod(mods)
        if order > MAX_ORDER:
            raise ValueError(f"group order {order} exceeds the native-integer cap 2^62")
        self.moduli: Element = mods
        self.ncomp = len(mods)
        self.order = order

    def __repr__(self):
        return f"GroupSpec({list(self.moduli)})"

    def __eq__(self, other):
        return isinstance(other, GroupSpec) and self.moduli == other.moduli

    def __hash__(self):
        return hash(self.moduli)

    @cached_property
    def sft_capable(self) -> bool:
        """True iff every component modulus is a power of two."""
        return all(n & (n - 1) == 0 for n in self.moduli)

    @cached_property
    def bit_depths(self) -> Element:
        if not self.sft_capable:
            raise SftCapabilityError(f"{self} has a non-power-of-two component")
        return tuple(n.bit_length() - 1 for n in self.moduli)

    @cached_property
    def strides(self) -> Element:
        # mixed-radix strides, last component fastest
        strides = [1] * self.ncomp
        for i in range(self.ncomp - 2, -1, -1):
            strides[i] = strides[i + 1] * self.moduli[i + 1]
        return tuple(strides)

    @cached_property
    def phase_lcm(self) -> int:
        return math.lcm(*self.moduli)

    @cached_property
    def _phase_units(self) -> np.ndarray:
        L = self.phase_lcm
        return np.array([L // n for n in self.moduli], dtype=np.int64)

    @cached_property
    def _root_table(self) -> "np.ndarray | None":
        L = self.phase_lcm
        if L > _TABLE_MAX:
            return None
        return np.exp(2j * np.pi * np.arange(L) / L)

    @cached_property
    def _fast_phases(self) -> bool:
        return max(self.moduli) < _FAST_COMPONENT_MAX

    # -- element handling ------------------------------------------------

    @property
    def zero(self) -> Element:
        return (0,) * self.ncomp

    def element(self, x: ElementLike) -> Element:
        """Canonical residues for x (an int for one-component groups, else a sequence)."""
        if isinstance(x, (int, np.integer)):
            if self.ncomp != 1:
                raise DimensionError(f"bare integer element in {self.ncomp}-component group")
            return (int(x) % self.moduli[0],)
        xs = tuple(int(v) for v in x)
        if len(xs) != self.ncomp:
            raise DimensionError(f"element has {len(xs)} components, group has {self.ncomp}")
        return tuple(v % n for v, n in zip(xs, self.moduli))

    def flat_index(self, x: ElementLike) -> int:
        xs = self.element(x)
        return sum(v * s for v, s in zip(xs, self.strides))

    def element_of(self, idx: int) -> Element:
        idx = int(idx) % self.order
        out = []
        for s, n in zip(self.strides, self.moduli):
            out.append((idx // s) % n)
        return tuple(out)

    def elements(self):
        """Iterate all elements in flat (mixed-radix) order; guarded by MAX_DFT_ORDER."""
        if self.order > MAX_DFT_ORDER:
            raise ValueError(f"refusing to enumerate group of order {self.order}")
        for idx in range(self.order):
            yield self.element_of(idx)

    def add(self, x: ElementLike, y: ElementLike) -> Element:
        xs, ys = self.element(x), self.element(y)
        return tuple((a + b) % n for a, b, n in zip(xs, ys, self.moduli))

    def neg(self, x: ElementLike) -> Element:
        return tuple((-a) % n for a, n in zip(self.element(x), self.moduli))

    def scale(self, c: ElementLike, x: ElementLike) -> Element:
        """Componentwise c*x; a bare int scales every component."""
        cs = (c,) * self.ncomp if isinstance(c, (int, np.integer)) else self.element(c)
        return tuple((ci * a) % n for ci, a, n in zip(cs, self.element(x), self.moduli))

    # -- batch (vectorized) form: int64 arrays of shape (ncomp, B) --------

    def comps_of(self, elems: Sequence[ElementLike]) -> np.ndarray:
        cols = [self.element(x) for x in elems]
        return np.array(cols, dtype=np.int64).T.reshape(self.ncomp, len(cols))

    def flat_to_comps(self, flat: np.ndarray) -> np.ndarray:
        flat = np.asarray(flat, dtype=np.int64)
        out = np.empty((self.ncomp, flat.size), dtype=np.int64)
        for i, (s, n) in enumerate(zip(self.strides, self.moduli)):
            out[i] = (flat // s) % n
        return out

    def comps_to_flat(self, comps: np.ndarray) -> np.ndarray:
        strides = np.array(self.strides, dtype=np.int64)
        return (comps * strides[:, None]).sum(axis=0)

    def random_comps(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((self.ncomp, size), dtype=np.int64)
        for i, n in enumerate(self.moduli):
            out[i] = rng.integers(0, n, size=size, dtype=np.int64)
        return out

    def phases(self, alpha: ElementLike, comps: np.ndarray) -> np.ndarray:
        """Integer phases k with chi_alpha(x) = exp(2*pi*i*k/phase_lcm), per column."""
        if not self._fast_phases:
            raise ValueError("component modulus too large for vectorized phase arithmetic")
        al = self.element(alpha)
        L = self.phase_lcm
        units = self._phase_units
        acc = np.zeros(comps.shape[1], dtype=np.int64)
        for i, n in enumerate(self.moduli):
            if al[i] == 0:
                continue
            acc += ((al[i] * comps[i]) % n) * units[i]
        return acc % L

    def char_values(self, alpha: ElementLike, comps: np.ndarray,
                    conjugate: bool = False) -> np.ndarray:
        """chi_alpha evaluated columnwise on a component batch."""
        ph = self.phases(alpha, comps)
        L = self.phase_lcm
        if conjugate:
            ph = (L - ph) % L
        table = self._root_table
        if table is not None:
            return table[ph]
        return np.exp(2j * np.pi * ph / L)


def char_eval(g: GroupSpec, alpha: ElementLike, x: ElementLike) -> complex:
    """chi_alpha(x) = prod_i exp(2*pi*i*alpha_i*x_i/N_i); exact integer phase arithmetic."""
    al, xs = g.element(alpha), g.element(x)
    L = g.phase_lcm
    ph = 0
    for a, v, n in zip(al, xs, g.moduli):
        ph += ((a * v) % n) * (L // n)
    return cmath.exp(2j * cmath.pi * (ph % L) / L)


def dft_full(values: np.ndarray, g: GroupSpec) -> np.ndarray:
    """Exhaustive transform: fhat(alpha) = (1/|G|) sum_x f(x) conj(chi_alpha(x)).

    Quadratic time on purpose; the table is indexed by flat element order.
    """
    if g.order > MAX_DFT_ORDER:
        raise ValueError(f"group order {g.order} exceeds the exhaustive-transform cap 2^20")
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != (g.order,):
        raise ValueError(f"table must cover all {g.order} elements, got shape {values.shape}")
    all_comps = g.flat_to_comps(np.arange(g.order))
    out = np.empty(g.order, dtype=np.complex128)
    for idx in range(g.order):
        chi = g.char_values(g.element_of(idx), all_comps, conjugate=True)
        out[idx] = (values * chi).mean()
    return out


def idft_full(coeffs: np.ndarray, g: GroupSpec) -> np.ndarray:
    """Reconstruct f(x) = sum_alpha fhat(alpha) chi_alpha(x) from a full coefficient table."""
    if g.order > MAX_DFT_ORDER:
        raise ValueError(f"group order {g.order} exceeds the exhaustive-transform cap 2^20")
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    all_comps = g.flat_to_comps(np.arange(g.order))
    out = np.zeros(g.order, dtype=np.complex128)
    for idx in range(g.order):
        if coeffs[idx] == 0:
            continue
        out += coeffs[idx] * g.char_values(g.element_of(idx), all_comps)
    return out


def norms(values: np.ndarray) -> tuple[float, float]:
    """(l2 squared, l-infinity) of a full value table: ((1/|G|) sum |f|^2, max |f|)."""
    values = np.asarray(values, dtype=np.complex128)
    if values.size == 0:
        raise ValueError("empty table has no norms")
    mags = np.abs(values)
    return float((mags ** 2).mean()), float(mags.max())


@dataclass(frozen=True)
class SubgroupLevel:
    """A subgroup H = {x : x_i = 0 mod 2^{l_i}} of an SFT-capable group.

    The depth vector (l_1 ... l_m) walks the index-2 chain the binary
    search refines: depth 0 everywhere is H = G, full depth is H = {0}.
    """

    group: GroupSpec
    depths: Element

    def __post_init__(self):
        if not self.group.sft_capable:
            raise SftCapabilityError(f"{self.group} has a non-power-of-two component")
        bits = self.group.bit_depths
        if len(self.depths) != self.group.ncomp:
            raise DimensionError("depth vector length mismatch")
        for l, n in zip(self.depths, bits):
            if not 0 <= l <= n:
                raise ValueError(f"depth {l} outside [0, {n}]")

    @property
    def total_depth(self) -> int:
        return sum(self.depths)

    @property
    def subgroup_order(self) -> int:
        return math.prod(n >> l for n, l in zip(self.group.moduli, self.depths))

    @property
    def orth_order(self) -> int:
        return 1 << self.total_depth

    def contains(self, x: ElementLike) -> bool:
        xs = self.group.element(x)
        return all(v % (1 << l) == 0 for v, l in zip(xs, self.depths))

    def orth_contains(self, x: ElementLike) -> bool:
        xs = self.group.element(x)
        steps = [n >> l for n, l in zip(self.group.moduli, self.depths)]
        return all(v % s == 0 for v, s in zip(xs, steps))


def orth_enumerate(level: SubgroupLevel) -> list[Element]:
    """All of H^perp = {a : chi_a(h) = 1 for every h in H}, in lexicographic order.

    For H = multiples of 2^l inside Z_{2^n} this is the set of multiples
    of 2^{n-l}; products of components multiply out.
    """
    if level.orth_order > MAX_DFT_ORDER:
        raise ValueError(f"H^perp of size {level.orth_order} is too large to enumerate")
    g = level.group
    out: list[Element] = [()]
    for n, l in zip(g.moduli, level.depths):
        step = n >> l
        out = [prefix + (t * step,) for prefix in out for t in range(1 << l)]
    return out


def orth_sample(level: SubgroupLevel, rng: np.random.Generator) -> Element:
    """One uniform draw from H^perp."""
    g = level.group
    return tuple(
        int(rng.integers(0, 1 << l)) * (n >> l)
        for n, l in zip(g.moduli, level.depths)
    )


def orth_sample_comps(level: SubgroupLevel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform batch from H^perp in component form, shape (ncomp, size)."""
    g = level.group
    out = np.empty((g.ncomp, size), dtype=np.int64)
    for i, (n, l) in enumerate(zip(g.moduli, level.depths)):
        out[i] = rng.integers(0, 1 << l, size=size, dtype=np.int64) * (n >> l)
    return out
