"""Negative-result experiments: heavy-coefficient collapse under non-affine
composition, the Weil-type character-sum reference bound, and the bias of
noisy characters.

All measurements here are exhaustive brute force on desk-scale prime
domains; nothing in this module estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rng as _rng
from .groups import GroupSpec, dft_full
from .oracles import NoiseSpec

MAX_DEGREE = 32


@dataclass(frozen=True)
class RationalMap:
    """phi(x) = num(x)/den(x) over Z_q, defined as 0 on poles.

    Coefficients are listed low degree first.
    """

    q: int
    num: tuple[int, ...]
    den: tuple[int, ...] = (1,)

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("modulus must be >= 2")
        if len(self.num) - 1 > MAX_DEGREE or len(self.den) - 1 > MAX_DEGREE:
            raise ValueError(f"degree capped at {MAX_DEGREE}")
        if not self.den or all(c % self.q == 0 for c in self.den):
            raise ValueError("denominator must not vanish identically")
        object.__setattr__(self, "num", tuple(c % self.q for c in self.num))
        object.__setattr__(self, "den", tuple(c % self.q for c in self.den))

    @property
    def deg_num(self) -> int:
        return _degree(self.num)

    @property
    def deg_den(self) -> int:
        return _degree(self.den)

    @property
    def degree(self) -> int:
        return max(self.deg_num, self.deg_den)

    def is_affine(self) -> bool:
        return self.deg_den == 0 and self.deg_num <= 1

    @cached_property
    def poles(self) -> tuple[int, ...]:
        xs = np.arange(self.q, dtype=np.int64)
        return tuple(int(t) for t in xs[_poly_eval(self.den, xs, self.q) == 0])

    def eval_all(self) -> np.ndarray:
        """phi over all of Z_q at once (0 on poles)."""
        xs = np.arange(self.q, dtype=np.int64)
        num = _poly_eval(self.num, xs, self.q)
        den = _poly_eval(self.den, xs, self.q)
        ok = den != 0
        out = np.zeros(self.q, dtype=np.int64)
        out[ok] = (num[ok] * _inv_vec(den[ok], self.q)) % self.q
        return out


def _degree(coeffs: tuple[int, ...]) -> int:
    deg = 0
    for i, c in enumerate(coeffs):
        if c:
            deg = i
    return deg


def _poly_eval(coeffs: tuple[int, ...], xs: np.ndarray, q: int) -> np.ndarray:
    acc = np.zeros_like(xs)
    for c in reversed(coeffs):
        acc = (acc * xs + c) % q
    return acc


def _inv_vec(vals: np.ndarray, q: int) -> np.ndarray:
    # Fermat inverses; q prime and vals nonzero
    out = np.ones_like(vals)
    base = vals % q
    e = q - 2
    while e:
        if e & 1:
            out = (out * base) % q
        base = (base * base) % q
        e >>= 1
    return out


def rational_eval(phi: RationalMap, x: int) -> int:
    """phi at a single point: num(x) * den(x)^-1 mod q off poles, 0 on poles."""
    q = phi.q
    x = int(x) % q
    den = 0
    for c in reversed(phi.den):
        den = (den * x + c) % q
    if den == 0:
        return 0
    num = 0
    for c in reversed(phi.num):
        num = (num * x + c) % q
    return (num * pow(den, -1, q)) % q


def weil_bound(deg_f: int, deg_g: int, v: int, q: int) -> float:
    """Character-sum bound (max{deg f, deg g} + u - 2) * sqrt(q) + delta,
    with (u, delta) = (v, 1) if deg f <= deg g else (v + 1, 0); v counts the
    distinct denominator roots in the algebraic closure.

    Reference value only: callers compare measured sums against it.
    """
    if deg_f <= deg_g:
        u, delta = v, 1
    else:
        u, delta = v + 1, 0
    return (max(deg_f, deg_g) + u - 2) * math.sqrt(q) + delta


@dataclass
class ComposeReport:
    """Spectral summary of f composed with a rational map."""

    max_coeff_sq: float
    argmax: int
    source_max_sq: float
    gamma_size: int
    eps: float
    proof_bound: float
    top: list[tuple[int, float]]

    def payload(self) -> dict:
        return {
            "max_coeff_sq": self.max_coeff_sq, "argmax": self.argmax,
            "source_max_sq": self.source_max_sq, "gamma_size": self.gamma_size,
            "eps": self.eps, "proof_bound": self.proof_bound,
            "top": [[int(a), float(m)] for a, m in self.top],
        }


def _normalize(values: np.ndarray) -> np.ndarray:
    values = values - values.mean()
    l2 = math.sqrt(float((np.abs(values) ** 2).mean()))
    if l2 == 0:
        raise ValueError("function is constant after mean removal")
    return values / l2


def compose_measure(values: np.ndarray, phi: RationalMap, eps: float = 0.05) -> ComposeReport:
    """Brute-force spectrum of f(phi(x)) for mean-removed, unit-norm f.

    Reports the largest squared coefficient of the composition next to the
    composition-collapse bound (d/sqrt(q) + 2*k*d/sqrt(q) + 2*d*sqrt(eps))^2
    evaluated at the measured concentration profile (k, eps).
    """
    q = phi.q
    if q > (1 << 12):
        raise ValueError("brute-force composition measure capped at 2^12 points")
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != (q,):
        raise ValueError("table must cover Z_q")
    image = phi.eval_all()
    if np.all(image == image[0]):
        raise ValueError("composition with a constant map carries no signal")
    f = _normalize(values)
    g = GroupSpec(q)

    source_coeffs = dft_full(f, g)
    source_sq = np.abs(source_coeffs) ** 2
    order = np.argsort(source_sq)[::-1]
    tail = float(source_sq.sum())
    k = 0
    while k < q and tail > eps:
        tail -= float(source_sq[order[k]])
        k += 1

    composed = f[image]
    coeffs = dft_full(composed, g)
    sq = np.abs(coeffs) ** 2
    argmax = int(sq.argmax())
    d = max(phi.degree, 1)
    bound = (d / math.sqrt(q) + 2 * k * d / math.sqrt(q) + 2 * d * math.sqrt(eps)) ** 2
    top_idx = np.argsort(sq)[::-1][:8]
    return ComposeReport(
        max_coeff_sq=float(sq[argmax]),
        argmax=argmax,
        source_max_sq=float(source_sq.max()),
        gamma_size=k,
        eps=eps,
        proof_bound=bound,
        top=[(int(b), float(sq[b])) for b in top_idx],
    )


def bias_uniform(width: int, n: int) -> complex:
    """Bias of uniform noise on [0, T-1]: (1/T) * sum_{x<T} exp(2*pi*i*x/n).

    Computed as the direct geometric average; |bias| > 1/2 for every
    T <= n/2, and bias(n, n) = 0.
    """
    if not 1 <= width <= n:
        raise ValueError("need 1 <= T <= N")
    xs = np.arange(width)
    return complex(np.exp(2j * np.pi * xs / n).mean())


def noisy_compose_measure(phi: RationalMap, noise: NoiseSpec, q: int) -> float:
    """Largest squared coefficient of omega_q^(phi(x) + e(x)), brute force."""
    if q != phi.q:
        raise ValueError("modulus mismatch")
    if q > (1 << 12):
        raise ValueError("brute-force measure capped at 2^12 points")
    xs = np.arange(q, dtype=np.int64)
    image = phi.eval_all().astype(np.float64)
    if noise.kind == "uniform":
        e = _rng.point_uniform_int(noise.seed, xs, int(noise.param)).astype(np.float64)
    elif noise.kind == "gaussian":
        e = _rng.point_gaussian(noise.seed, xs, noise.param)
    else:
        raise ValueError("noisy characters take uniform or gaussian noise")
    table = np.exp(2j * np.pi * (image + e) / q)
    coeffs = dft_full(table, GroupSpec(q))
    return float((np.abs(coeffs) ** 2).max())
