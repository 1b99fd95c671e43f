"""Chosen-multiplier hidden number problem solvers and toy attack demos.

The scaling property fhat_s(alpha) = fhat(alpha * s^-1) turns secret
recovery into heavy-list matching: find the heavy frequencies of f and of
f_s(x) = f(s*x), form the quotients, and keep the candidates that survive
an empirical correlation check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as _rng
from .groups import GroupSpec
from .modswitch import sft_zp
from .oracles import BitOracle, QueryOracle, make_bit
from .sft import HeavyList, SftParams, sft_run

SCORE_SAMPLES = 256
SCORE_THRESHOLD = 0.5


@dataclass
class HnpInstance:
    """CM-HNP data: the base function f and oracle access to f_s(x) = f(s*x)."""

    modulus: int
    f: QueryOracle
    f_s: QueryOracle
    f_known: bool = True

    def __post_init__(self):
        if self.f.group.ncomp != 1 or self.f.group.moduli[0] != self.modulus:
            raise ValueError("base oracle group does not match the modulus")
        if self.f_s.group != self.f.group:
            raise ValueError("shifted oracle must live on the same group")


@dataclass
class MvhnpInstance:
    """Multivariate variant: f_s(x) = f(<s, x>) on Z_p^m for a secret vector s."""

    modulus: int
    dim: int
    f: QueryOracle
    f_s: QueryOracle

    def __post_init__(self):
        expected = (self.modulus,) * self.dim
        if self.f_s.group.moduli != expected:
            raise ValueError("vector oracle must live on Z_p^m")
        if self.f.group.moduli != (self.modulus,):
            raise ValueError("component oracle must live on Z_p")


@dataclass
class Candidate:
    value: int
    score: float


@dataclass
class CandidateSet:
    """Verified secret candidates, best score first, duplicates removed."""

    candidates: list[Candidate] = field(default_factory=list)

    def values(self) -> list[int]:
        return [c.value for c in self.candidates]

    def best(self) -> "Candidate | None":
        return self.candidates[0] if self.candidates else None

    def __len__(self):
        return len(self.candidates)

    def __contains__(self, value: int) -> bool:
        return any(c.value == value for c in self.candidates)


class ScaledOracle(QueryOracle):
    """f_s(x) = f(s*x mod N); the standard planted-instance builder."""

    def __init__(self, inner: QueryOracle, s: int):
        if inner.group.ncomp != 1:
            raise ValueError("scaled oracles live on single-component groups")
        n = inner.group.moduli[0]
        if s % n == 0:
            raise ValueError("secret must be nonzero")
        self.inner = inner
        self.secret = s % n
        super().__init__(inner.group, inner.linf_bound)

    def _values(self, comps):
        n = self.group.moduli[0]
        return self.inner._values((self.secret * comps) % n)


def make_planted_hnp(f: QueryOracle, s: int, f_s: "QueryOracle | None" = None) -> HnpInstance:
    """Instance with f_s built by scaling f; pass f_s to wrap it (e.g. corrupted)."""
    if f_s is None:
        f_s = ScaledOracle(f, s)
    return HnpInstance(f.group.moduli[0], f, f_s)


def _heavy(oracle: QueryOracle, params: SftParams) -> HeavyList:
    n = oracle.group.moduli[0]
    if n & (n - 1) == 0:
        return sft_run(oracle, params)
    if n % 2 == 1:
        return sft_zp(oracle, params)
    raise ValueError("modulus must be a power of two or odd")


def correlation_score(inst: HnpInstance, candidate: int, seed: int,
                      samples: int = SCORE_SAMPLES) -> float:
    """|E_x[f_s(x) * conj(f(candidate*x))]| over fresh random points."""
    g = inst.f.group
    n = inst.modulus
    rng = _rng.generator(seed, "score", candidate)
    xs = g.random_comps(rng, samples)
    lhs = inst.f_s.query_batch(xs)
    rhs = inst.f.query_batch((candidate * xs) % n)
    return float(abs((lhs * np.conj(rhs)).mean()))


def hnp_solve(inst: HnpInstance, params: SftParams) -> CandidateSet:
    """Candidate secrets from heavy-list matching, scored by correlation.

    Candidates are {alpha * beta^-1 : alpha in L(f_s), beta in L(f),
    gcd(beta, N) = 1}; only those scoring >= 1/2 on fresh samples are kept.
    An empty result signals that f lacks a usable heavy coefficient or that
    tau was set too high.
    """
    n = inst.modulus
    list_f = _heavy(inst.f, replace(params, seed=_rng.derive_seed(params.seed, "base")))
    list_fs = _heavy(inst.f_s, replace(params, seed=_rng.derive_seed(params.seed, "shifted")))

    raw: set[int] = set()
    for alpha, _ in list_fs.entries:
        for beta, _ in list_f.entries:
            b = beta[0]
            if b == 0 or math.gcd(b, n) != 1:
                continue
            cand = (alpha[0] * pow(b, -1, n)) % n
            if cand != 0:
                raw.add(cand)

    scored = [Candidate(c, correlation_score(inst, c, params.seed)) for c in sorted(raw)]
    kept = [c for c in scored if c.score >= SCORE_THRESHOLD]
    kept.sort(key=lambda c: (-c.score, c.value))
    return CandidateSet(kept)


class RecoveryError(RuntimeError):
    """The search returned nothing usable for secret recovery."""


def gl_recover(oracle: QueryOracle, params: SftParams):
    """Recover the LPN secret: run the search at tau = (1-2*rho)^2/2 and
    return the frequency with the largest estimated coefficient.

    Unique recovery needs rho < 1/4; above that the output is still the
    heaviest estimated frequency but may differ from the planted secret.
    """
    rho = getattr(oracle, "noise_rate", None)
    if rho is None:
        raise ValueError("gl_recover needs an oracle exposing its noise rate")
    tau = (1.0 - 2.0 * rho) ** 2 / 2.0
    result = sft_run(oracle, replace(params, tau=tau))
    if not result.entries:
        raise RecoveryError(f"no coefficient cleared tau={tau}; noise rate too high?")
    return result.entries[0][0]


class _CoordinateSlice(QueryOracle):
    """Single-variable view of a vector oracle: r -> f_s(scale * r * e_i)."""

    def __init__(self, vector_oracle: QueryOracle, coord: int, scale: int):
        self.vector_oracle = vector_oracle
        self.coord = coord
        self.scale = scale
        p = vector_oracle.group.moduli[coord]
        super().__init__(GroupSpec(p), vector_oracle.linf_bound)

    def _values(self, comps):
        g = self.vector_oracle.group
        p = self.group.moduli[0]
        full = np.zeros((g.ncomp, comps.shape[1]), dtype=np.int64)
        full[self.coord] = (self.scale * comps[0]) % p
        return self.vector_oracle._values(full)


@dataclass
class MvhnpResult:
    """Per-coordinate candidates plus cross-verified assembled vectors."""

    per_coordinate: list[CandidateSet]
    failed_coordinates: list[int]
    vectors: list[tuple[tuple, float]]

    def best_vector(self):
        return self.vectors[0][0] if self.vectors else None


def mvhnp_solve(inst: MvhnpInstance, params: SftParams) -> MvhnpResult:
    """Coordinate filtering: query on r*e_i (with a random nonzero scalar per
    coordinate batch) to reduce each coordinate to a univariate instance.

    A coordinate whose subproblem yields no candidate (e.g. s_i = 0, which
    the univariate problem cannot represent) is flagged; the assembled
    vector is only emitted when every coordinate recovered and the dense
    cross-check scores >= 1/2.
    """
    p = inst.modulus
    per_coord: list[CandidateSet] = []
    failed: list[int] = []
    for i in range(inst.dim):
        coord_seed = _rng.derive_seed(params.seed, "coord", i)
        scale = 1 + int(_rng.generator(coord_seed, "scale").integers(0, p - 1))
        slice_oracle = _CoordinateSlice(inst.f_s, i, scale)
        sub = HnpInstance(p, inst.f, slice_oracle)
        cands = hnp_solve(sub, replace(params, seed=coord_seed))
        inv = pow(scale, -1, p)
        unscaled = [Candidate((c.value * inv) % p, c.score) for c in cands.candidates]
        unscaled = [c for c in unscaled if c.value != 0]
        per_coord.append(CandidateSet(unscaled))
        if not unscaled:
            failed.append(i)

    vectors: list[tuple[tuple, float]] = []
    if not failed:
        guess = tuple(cs.candidates[0].value for cs in per_coord)
        rng = _rng.generator(params.seed, "vector-check")
        xs = inst.f_s.group.random_comps(rng, SCORE_SAMPLES)
        lhs = inst.f_s.query_batch(xs)
        s_vec = np.array(guess, dtype=np.int64)
        inner = (s_vec @ xs) % p
        rhs = inst.f.query_batch(inner[None, :])
        score = float(abs((lhs * np.conj(rhs)).mean()))
        if score >= SCORE_THRESHOLD:
            vectors.append((guess, score))
    return MvhnpResult(per_coord, failed, vectors)


# -- toy attack demos ---------------------------------------------------------


def _modpow_vec(base: np.ndarray, exponent: int, modulus: int) -> np.ndarray:
    """Vectorized pow(base, e, n) for moduli below 2^24 (products fit uint64)."""
    b = np.asarray(base, dtype=np.uint64) % np.uint64(modulus)
    out = np.ones_like(b)
    n = np.uint64(modulus)
    e = int(exponent)
    while e:
        if e & 1:
            out = (out * b) % n
        b = (b * b) % n
        e >>= 1
    return out.astype(np.int64)


def _modpow_exp_vec(base: int, exponents: np.ndarray, modulus: int) -> np.ndarray:
    """Vectorized pow(base, e_i, n) over an exponent array, same modulus limit."""
    e = np.asarray(exponents, dtype=np.uint64)
    out = np.ones_like(e)
    b = np.uint64(base % modulus)
    n = np.uint64(modulus)
    maxbits = int(e.max()).bit_length() if e.size else 0
    for i in range(maxbits):
        hit = ((e >> np.uint64(i)) & np.uint64(1)) == 1
        out = np.where(hit, (out * b) % n, out)
        b = (b * b) % n
    return out.astype(np.int64)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _random_prime(rng: np.random.Generator, lo: int, hi: int) -> int:
    while True:
        cand = int(rng.integers(lo, hi)) | 1
        if _is_prime(cand):
            return cand


class _DecryptingLeakOracle:
    """Simulated bit leak: takes a ciphertext, decrypts it, returns +-1 of one bit.

    The answer is flipped with the given probability, fixed per ciphertext
    (hash-derived), so it stays a function of its input.
    """

    def __init__(self, modulus: int, d: int, bit_index: int, error_rate: float, seed: int):
        self.modulus = modulus
        self.d = d
        self.bit_index = bit_index
        self.error_rate = error_rate
        self.seed = seed
        self.calls = 0

    def leak_batch(self, ciphertexts: np.ndarray) -> np.ndarray:
        self.calls += ciphertexts.size
        t = _modpow_vec(ciphertexts, self.d, self.modulus)
        bits = (t >> self.bit_index) & 1
        if self.error_rate > 0:
            flips = _rng.point_bernoulli(self.seed, ciphertexts, self.error_rate)
            bits = bits ^ flips.astype(np.int64)
        return np.where(bits == 1, -1.0, 1.0).astype(np.complex128)


class _RsaShiftedOracle(QueryOracle):
    """Attacker-side f_s(r) = leaked bit of r*x, obtained by asking the leak
    oracle about (r^e * x^e) mod N."""

    def __init__(self, modulus: int, e: int, ciphertext: int, leak: _DecryptingLeakOracle):
        self.e = e
        self.ciphertext = ciphertext
        self.leak = leak
        super().__init__(GroupSpec(modulus), 1.0)

    def _values(self, comps):
        n = self.group.moduli[0]
        r_e = _modpow_vec(comps[0], self.e, n)
        ct = (r_e.astype(np.uint64) * np.uint64(self.ciphertext % n)) % np.uint64(n)
        return self.leak.leak_batch(ct.astype(np.int64))


@dataclass
class DemoReport:
    """Outcome of one toy attack run."""

    kind: str
    params: dict
    seed: int
    success: bool
    queries: int
    candidates: list[tuple[int, float]]

    def payload(self) -> dict:
        return {
            "kind": self.kind, "params": self.params, "seed": self.seed,
            "success": self.success, "queries": self.queries,
            "candidates": [[v, s] for v, s in self.candidates],
        }


def _demo_params(tau: float, seed: int) -> SftParams:
    return SftParams(tau=tau, delta=0.2, seed=seed)


def rsa_demo(bits: int, error_rate: float, seed: int = 0, tau: float = 0.25) -> DemoReport:
    """Recover x from x^e mod N (toy key, bits <= 24) using a leak oracle for
    the least significant bit of chosen multiples r*x."""
    if not 8 <= bits <= 24:
        raise ValueError("toy RSA modulus size must lie in [8, 24] bits")
    rng = _rng.generator(seed, "rsa-key")
    half = bits // 2
    while True:
        p = _random_prime(rng, 1 << (half - 1), 1 << half)
        q = _random_prime(rng, 1 << (bits - half - 1), 1 << (bits - half))
        if p == q:
            continue
        n = p * q
        phi = (p - 1) * (q - 1)
        e = 65537 if math.gcd(65537, phi) == 1 else 3
        if math.gcd(e, phi) != 1:
            continue
        break
    d = pow(e, -1, phi)
    while True:
        x = int(rng.integers(2, n))
        if math.gcd(x, n) == 1:
            break

    leak = _DecryptingLeakOracle(n, d, bit_index=0,
                                 error_rate=error_rate, seed=_rng.derive_seed(seed, "leak"))
    f_s = _RsaShiftedOracle(n, e, pow(x, e, n), leak)
    inst = HnpInstance(n, make_bit(GroupSpec(n), 0), f_s)
    cands = hnp_solve(inst, _demo_params(tau, seed))
    return DemoReport(
        kind="rsa",
        params={"bits": bits, "modulus": n, "e": e, "error_rate": error_rate},
        seed=seed,
        success=x in cands,
        queries=leak.calls,
        candidates=[(c.value, round(c.score, 4)) for c in cands.candidates],
    )


class _ExpLeakOracle:
    """Simulated bit leak for group elements g^t of prime order ell.

    Flips are hash-fixed per group element; the exponent is recovered from
    the demo's own bookkeeping (t determines g^t and vice versa).
    """

    def __init__(self, ell: int, bit_index: int, error_rate: float, seed: int):
        self.ell = ell
        self.bit_index = bit_index
        self.error_rate = error_rate
        self.seed = seed
        self.calls = 0

    def leak_batch(self, exponents: np.ndarray, elements: np.ndarray) -> np.ndarray:
        self.calls += exponents.size
        bits = (exponents >> self.bit_index) & 1
        if self.error_rate > 0:
            flips = _rng.point_bernoulli(self.seed, elements, self.error_rate)
            bits = bits ^ flips.astype(np.int64)
        return np.where(bits == 1, -1.0, 1.0).astype(np.complex128)


class _ExpShiftedOracle(QueryOracle):
    """f_s(r) = leaked bit of r*x mod ell, via the public value X^r = g^(r*x).

    The group element X^r is computed honestly and keys the flip hash; the
    simulated leak reads the exponent r*x mod ell from the demo's own
    bookkeeping (the element determines it uniquely, g having order ell).
    """

    def __init__(self, ell: int, field_prime: int, public: int, secret: int,
                 leak: _ExpLeakOracle):
        self.field_prime = field_prime
        self.public = public
        self.secret = secret
        self.leak = leak
        super().__init__(GroupSpec(ell), 1.0)

    def _values(self, comps):
        ell = self.group.moduli[0]
        r = comps[0]
        elements = _modpow_exp_vec(self.public, r, self.field_prime)
        exps = (self.secret * r) % ell
        return self.leak.leak_batch(exps, elements)


def exp_demo(ell: int, error_rate: float, seed: int = 0, tau: float = 0.25) -> DemoReport:
    """Recover x from g^x for g of prime order ell (<= 2^20), using a leak
    oracle for the least significant bit of chosen exponent multiples."""
    if not (3 <= ell <= (1 << 20) and _is_prime(ell)):
        raise ValueError("ell must be an odd prime at most 2^20")
    k = 2
    while not _is_prime(k * ell + 1):
        k += 2
    field_prime = k * ell + 1
    rng = _rng.generator(seed, "exp-key")
    while True:
        h = int(rng.integers(2, field_prime))
        g = pow(h, k, field_prime)
        if g != 1:
            break
    x = int(rng.integers(1, ell))
    public = pow(g, x, field_prime)

    leak = _ExpLeakOracle(ell, bit_index=0, error_rate=error_rate,
                          seed=_rng.derive_seed(seed, "leak"))
    f_s = _ExpShiftedOracle(ell, field_prime, public, x, leak)
    inst = HnpInstance(ell, make_bit(GroupSpec(ell), 0), f_s)
    cands = hnp_solve(inst, _demo_params(tau, seed))
    return DemoReport(
        kind="exp",
        params={"ell": ell, "field_prime": field_prime, "generator": g,
                "error_rate": error_rate},
        seed=seed,
        success=x in cands,
        queries=leak.calls,
        candidates=[(c.value, round(c.score, 4)) for c in cands.candidates],
    )
