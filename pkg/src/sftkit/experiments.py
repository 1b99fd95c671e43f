"""Named experiments with flat-file configs and deterministic result rows.

Each registered experiment reproduces exactly one acceptance check of the
toolkit; `sft run` executes trials with seeds seed_base + i and emits one
serializable row per trial.
"""

from __future__ import annotations

import functools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as _rng
from .groups import (GroupSpec, SubgroupLevel, char_eval, dft_full, idft_full,
                     norms, orth_enumerate)
from .hnp import HnpInstance, RecoveryError, ScaledOracle, gl_recover, hnp_solve
from .limits import RationalMap, bias_uniform, compose_measure
from .modswitch import peak_map, sft_zp, switch_map, switch_oracle
from .oracles import (CorruptionSet, QueryOracle, make_bit, make_character,
                      make_character_sum, make_half, make_lpn, unreliable_wrap)
from .sft import CosetNode, SftParams, chain_build, filter_eval, sft_run

JSON_LINES = "json-lines"
CSV = "csv"


# -- config ------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One experiment run: name, oracle/algorithm options, trials, seeding."""

    experiment: str
    trials: int = 1
    seed: int = 0
    out: "str | None" = None
    format: str = JSON_LINES
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            known = ", ".join(sorted(EXPERIMENTS))
            raise ValueError(f"unknown experiment {self.experiment!r} (known: {known})")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if self.format not in (JSON_LINES, CSV):
            raise ValueError(f"unknown format {self.format!r}")

    def opt(self, key: str, default=None):
        return self.options.get(key, default)


def _parse_value(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Flat `key = value` lines with dotted sections; '#' starts a comment."""
    fields: dict = {}
    options: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        value = _parse_value(raw)
        if key in ("experiment", "trials", "seed", "out", "format"):
            fields[key] = value
        else:
            options[key] = value
    if "experiment" not in fields:
        raise ValueError("config is missing the 'experiment' key")
    return ExperimentConfig(options=options, **fields)


def load_config(path: "str | Path") -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# -- result rows ---------------------------------------------------------------


@dataclass
class ResultRow:
    """One trial outcome; serializes losslessly except wall_time, which is
    measurement metadata and stays out of the byte-reproducible payload."""

    experiment: str
    seed: int
    success: bool
    queries: int
    payload: dict
    wall_time: "float | None" = None

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "success": self.success,
            "queries": self.queries,
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "ResultRow":
        d = json.loads(line)
        return cls(experiment=d["experiment"], seed=d["seed"], success=d["success"],
                   queries=d["queries"], payload=d["payload"])


def emit(rows: list[ResultRow], fmt: str, path: "str | Path") -> Path:
    """Write rows to a file: lossless json-lines, or csv with flattened payload."""
    path = Path(path)
    if fmt == JSON_LINES:
        body = "".join(row.to_json() + "\n" for row in rows)
        path.write_text(body, encoding="utf-8", newline="\n")
        return path
    if fmt != CSV:
        raise ValueError(f"unknown format {fmt!r}")
    lines = []
    if rows and all(isinstance(r.payload.get("spectrum"), list) for r in rows):
        # long format for plottable spectra
        if len(rows) == 1:
            lines.append("index,magnitude_sq")
            lines.extend(f"{i},{v!r}" for i, v in enumerate(rows[0].payload["spectrum"]))
        else:
            lines.append("seed,index,magnitude_sq")
            for row in rows:
                lines.extend(f"{row.seed},{i},{v!r}" for i, v in enumerate(row.payload["spectrum"]))
    else:
        scalar_keys = sorted({
            k for row in rows for k, v in row.payload.items()
            if isinstance(v, (int, float, str, bool))
        })
        lines.append(",".join(["experiment", "seed", "success", "queries"] + scalar_keys))
        for row in rows:
            cells = [row.experiment, str(row.seed), str(row.success).lower(), str(row.queries)]
            for k in scalar_keys:
                v = row.payload.get(k, "")
                cells.append(repr(v) if isinstance(v, float) else str(v))
            lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def load_rows(path: "str | Path") -> list[ResultRow]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(ResultRow.from_json(line))
    return out


# -- criterion fixtures ---------------------------------------------------------


@dataclass(frozen=True)
class Fixture:
    """A named planted function with its search threshold."""

    name: str
    tau: float

    def build(self) -> QueryOracle:
        return _FIXTURE_BUILDERS[self.name]()


def _mixture_group():
    return GroupSpec(1024)


_FIXTURE_BUILDERS = {
    "char-unit": lambda: make_character(GroupSpec(1024), 337),
    "char-product": lambda: make_character(GroupSpec((256, 4)), (19, 3), coeff=0.9),
    "mix-three": lambda: make_character_sum(
        _mixture_group(), {101: 0.7, 612: 0.5, 900: 0.2}),
    "mix-complex": lambda: make_character_sum(
        GroupSpec(512), {44: 0.6j, 345: -0.6}),
    "half": lambda: make_half(GroupSpec(1024)),
    "half-corrupt": lambda: unreliable_wrap(make_half(GroupSpec(1024)), 0.02, seed=2024),
    "bit-msb": lambda: make_bit(GroupSpec(1024), 9),
    "bit-lsb": lambda: make_bit(GroupSpec(1024), 0),
    "lpn": lambda: make_lpn(GroupSpec((2,) * 10), (1, 0, 1, 1, 0, 0, 1, 0, 1, 1), 0.1, seed=77),
    "char-corrupt": lambda: unreliable_wrap(make_character(GroupSpec(1024), 501), 0.05, seed=13),
}

CRITERION_FIXTURES = (
    Fixture("char-unit", 0.5),
    Fixture("char-product", 0.4),
    Fixture("mix-three", 0.2),
    Fixture("mix-complex", 0.25),
    Fixture("half", 0.3),
    Fixture("half-corrupt", 0.25),
    Fixture("bit-msb", 0.3),
    Fixture("bit-lsb", 0.5),
    Fixture("lpn", 0.3),
    Fixture("char-corrupt", 0.5),
)


@functools.lru_cache(maxsize=None)
def _fixture_truth(name: str, tau: float):
    """Brute-force tau-heavy and (tau/2)-heavy frequency sets for a fixture."""
    oracle = Fixture(name, tau).build()
    g = oracle.group
    coeffs = dft_full(oracle.query_all(), g)
    sq = np.abs(coeffs) ** 2
    heavy = frozenset(g.element_of(i) for i in np.flatnonzero(sq > tau))
    loose = frozenset(g.element_of(i) for i in np.flatnonzero(sq > tau / 2))
    return heavy, loose


# -- experiment implementations --------------------------------------------------


def _exp_sft_fixtures(cfg: ExperimentConfig, trial_seed: int):
    only = cfg.opt("fixture", "all")
    fixtures = [fx for fx in CRITERION_FIXTURES if only in ("all", fx.name)]
    if not fixtures:
        raise ValueError(f"unknown fixture {only!r}")
    per = {}
    queries = 0
    for fx in fixtures:
        oracle = fx.build()
        heavy, loose = _fixture_truth(fx.name, fx.tau)
        result = sft_run(oracle, SftParams(tau=fx.tau, seed=_rng.derive_seed(trial_seed, fx.name)))
        found = set(result.frequencies())
        per[fx.name] = {
            "contains_heavy": heavy <= found,
            "only_loose": found <= loose,
            "length_ok": len(result) <= result.node_cap,
            "found": len(found),
        }
        queries += result.queries_used
    return all(v["contains_heavy"] and v["only_loose"] and v["length_ok"]
               for v in per.values()), queries, {"fixtures": per}


def _exp_sft_character(cfg: ExperimentConfig, trial_seed: int):
    bits = int(cfg.opt("log2_order", 16))
    tau = float(cfg.opt("tau", 0.5))
    g = GroupSpec(1 << bits)
    alpha = int(_rng.generator(trial_seed, "alpha").integers(1, g.order))
    oracle = make_character(g, alpha)
    result = sft_run(oracle, SftParams(tau=tau, seed=trial_seed))
    found = [a[0] for a in result.frequencies()]
    return found == [alpha], result.queries_used, {
        "alpha": alpha, "found": found, "nodes": result.nodes_evaluated}


def _exp_figure1(cfg: ExperimentConfig, trial_seed: int):
    p = int(cfg.opt("p", 37))
    n = int(cfg.opt("n", 64))
    alpha = int(cfg.opt("alpha", 5))
    sw = switch_map(p, n)
    lifted = switch_oracle(make_character(GroupSpec(p), alpha), sw)
    coeffs = dft_full(lifted.query_all(), lifted.group)
    spectrum = (np.abs(coeffs) ** 2).tolist()
    peak = peak_map(alpha, sw)
    argmax = int(np.argmax(spectrum))
    mags = np.sqrt(np.asarray(spectrum))
    envelope_ok = all(
        max(mags[(peak + k) % n], mags[(peak - k) % n]) <= 2.0 / k
        for k in range(1, 9)
    )
    ok = argmax == peak and envelope_ok
    return ok, lifted.query_count, {
        "p": p, "n": n, "alpha": alpha, "peak": peak, "argmax": argmax,
        "envelope_ok": envelope_ok, "spectrum": spectrum}


@functools.lru_cache(maxsize=None)
def _half_argmax(p: int) -> int:
    g = GroupSpec(p)
    coeffs = dft_full(make_half(g).query_all(), g)
    return int(np.argmax(np.abs(coeffs) ** 2))


def _exp_modswitch_zp(cfg: ExperimentConfig, trial_seed: int):
    p = int(cfg.opt("p", 1021))
    kind = cfg.opt("oracle.name", "character")
    g = GroupSpec(p)
    if kind == "character":
        tau = float(cfg.opt("tau", 0.3))
        alpha = int(_rng.generator(trial_seed, "alpha").integers(1, p))
        oracle = make_character(g, alpha)
        result = sft_zp(oracle, SftParams(tau=tau, seed=trial_seed))
        found = [a[0] for a in result.frequencies()]
        ok = found == [alpha]
        payload = {"p": p, "alpha": alpha, "found": found}
    elif kind == "half":
        tau = float(cfg.opt("tau", 0.15))
        oracle = make_half(g)
        result = sft_zp(oracle, SftParams(tau=tau, seed=trial_seed))
        found = [a[0] for a in result.frequencies()]
        ok = _half_argmax(p) in found
        payload = {"p": p, "target": _half_argmax(p), "found": found}
    else:
        raise ValueError(f"unknown oracle {kind!r} for modswitch-zp")
    return ok, result.queries_used, payload


def _exp_gl_lpn(cfg: ExperimentConfig, trial_seed: int):
    m = int(cfg.opt("m", 16))
    rho = float(cfg.opt("rho", 0.2))
    g = GroupSpec((2,) * m)
    rng = _rng.generator(trial_seed, "secret")
    s = g.element_of(int(rng.integers(1, g.order)))
    oracle = make_lpn(g, s, rho, seed=_rng.derive_seed(trial_seed, "noise"))
    try:
        recovered = gl_recover(oracle, SftParams(tau=1.0, seed=trial_seed))
    except Exception:
        recovered = None
    ok = recovered == s
    return ok, oracle.query_count, {
        "m": m, "rho": rho,
        "secret": g.flat_index(s),
        "recovered": None if recovered is None else g.flat_index(recovered)}


def _exp_hnp_half(cfg: ExperimentConfig, trial_seed: int):
    p = int(cfg.opt("p", 1021))
    corruption = float(cfg.opt("corruption", 0.0))
    tau = float(cfg.opt("tau", 0.15))
    g = GroupSpec(p)
    s = int(_rng.generator(trial_seed, "secret").integers(1, p))
    f = make_half(g)
    f_s: QueryOracle = ScaledOracle(make_half(g), s)
    if corruption > 0:
        f_s = unreliable_wrap(f_s, corruption, seed=_rng.derive_seed(trial_seed, "corrupt"))
    inst = HnpInstance(p, f, f_s)
    cands = hnp_solve(inst, SftParams(tau=tau, seed=trial_seed))
    queries = f.query_count + f_s.query_count
    return s in cands, queries, {
        "p": p, "secret": s, "corruption": corruption,
        "candidates": [[c.value, round(c.score, 4)] for c in cands.candidates]}


def _unreliable_fixtures():
    g1 = GroupSpec(1024)
    g2 = GroupSpec((2,) * 10)
    explicit = CorruptionSet.of(g1, [(3,), (700,), (41,), (512,), (13,)])
    return [
        ("char-explicit", unreliable_wrap(make_character(g1, 77), explicit, seed=5)),
        ("char-rate", unreliable_wrap(make_character(g1, 900, coeff=0.8), 0.05, seed=6)),
        ("half-rate", unreliable_wrap(make_half(g1), 0.1, seed=7)),
        ("bit-rate", unreliable_wrap(make_bit(g1, 4), 0.25, seed=8)),
        ("lpn-like", unreliable_wrap(make_character(g2, (1, 0) * 5), 0.2, seed=9)),
    ]


def _exp_unreliable_bound(cfg: ExperimentConfig, trial_seed: int):
    rows = {}
    ok = True
    queries = 0
    for name, wrapped in _unreliable_fixtures():
        g = wrapped.group
        corrupted = wrapped.realized_corruption()
        table_o = wrapped.query_all()
        table_f = wrapped.inner.query_all()
        queries += wrapped.query_count
        co = np.abs(dft_full(table_o, g))
        cf = np.abs(dft_full(table_f, g))
        slack = 2.0 * corrupted.sum() / g.order * wrapped.inner.linf_bound
        worst = float((co - (cf - slack)).min())
        holds = bool(worst >= -1e-9)
        rows[name] = {"holds": holds, "corrupted": int(corrupted.sum()),
                      "worst_margin": worst}
        ok = ok and holds
    return ok, queries, {"fixtures": rows}


def _exp_prop1_collapse(cfg: ExperimentConfig, trial_seed: int):
    q = int(cfg.opt("q", 1031))
    g = GroupSpec(q)
    xs = np.arange(q)
    results = {}
    ok = True
    half_tab = np.where(2 * xs < q, 1.0, -1.0).astype(np.complex128)
    bit5_tab = np.where((xs >> 5) & 1, -1.0, 1.0).astype(np.complex128)
    for name, tab in (("half", half_tab), ("bit5", bit5_tab)):
        entry = {}
        for d in (2, 3, 4, 5):
            phi = RationalMap(q, (0,) * d + (1,))
            report = compose_measure(tab, phi)
            entry[f"d{d}"] = report.max_coeff_sq
            ok = ok and report.max_coeff_sq < 0.05
        affine = compose_measure(tab, RationalMap(q, (0, 1)))
        entry["uncomposed_max"] = affine.source_max_sq
        results[name] = entry
    ok = ok and results["half"]["uncomposed_max"] >= 0.4

    # Moebius counterexample: chi_a + chi_b(phi^-1), composition keeps a peak
    a, b, c, d = 2, 3, 1, 2  # ad - bc = 1
    phi = RationalMap(q, (b, a), (d, c))
    phi_inv = RationalMap(q, (-b % q, d), (a, -c % q))
    alpha, beta = 77, 401
    inv_vals = phi_inv.eval_all()
    tab = (np.exp(2j * np.pi * alpha * xs / q)
           + np.exp(2j * np.pi * beta * inv_vals / q))
    report = compose_measure(tab, phi)
    results["moebius"] = {"retained": report.max_coeff_sq, "argmax": report.argmax}
    ok = ok and report.max_coeff_sq >= 0.2
    return ok, 0, results


def _exp_bias_floor(cfg: ExperimentConfig, trial_seed: int):
    sizes = cfg.opt("sizes", "64,1024,4096")
    ns = [int(t) for t in str(sizes).split(",")]
    results = {}
    ok = True
    for n in ns:
        roots = np.exp(2j * np.pi * np.arange(n) / n)
        prefix = np.cumsum(roots)
        mags = np.abs(prefix[: n // 2] / np.arange(1, n // 2 + 1))
        floor = float(mags.min())
        at_n = abs(complex(prefix[-1] / n))
        results[str(n)] = {"floor": floor, "bias_at_n": at_n}
        ok = ok and floor > 0.5 and at_n < 1e-12
    return ok, 0, results


def _identity_groups():
    return [GroupSpec(256), GroupSpec((16, 4, 2)), GroupSpec((8, 8))]


def _exp_identity_suite(cfg: ExperimentConfig, trial_seed: int):
    tol = 1e-9
    checks = {}
    rng = _rng.generator(trial_seed, "identity")
    for g in _identity_groups():
        label = "x".join(str(n) for n in g.moduli)
        table = (rng.normal(size=g.order) + 1j * rng.normal(size=g.order))
        coeffs = dft_full(table, g)

        parseval = abs(float((np.abs(coeffs) ** 2).sum()) - norms(table)[0])

        all_comps = g.flat_to_comps(np.arange(g.order))
        char_matrix = np.stack([
            g.char_values(g.element_of(i), all_comps) for i in range(g.order)])
        gram = (char_matrix @ char_matrix.conj().T) / g.order
        orthonormal = float(np.abs(gram - np.eye(g.order)).max())

        # scaling by a unit c of the ring permutes coefficients: ghat(a) = fhat(c^-1 a)
        c = tuple(1 + 2 * int(rng.integers(0, max(n // 2, 1))) for n in g.moduli)
        scaled = np.empty_like(table)
        for idx in range(g.order):
            scaled[idx] = table[g.flat_index(g.scale(c, g.element_of(idx)))]
        scaled_hat = dft_full(scaled, g)
        scale_err = 0.0
        for idx in range(g.order):
            al = g.element_of(idx)
            pre = tuple((pow(ci, -1, n) * a) % n for ci, a, n in zip(c, al, g.moduli))
            scale_err = max(scale_err, abs(scaled_hat[idx] - coeffs[g.flat_index(pre)]))

        shift = g.element_of(int(rng.integers(0, g.order)))
        shifted = np.empty_like(table)
        for idx in range(g.order):
            shifted[idx] = table[g.flat_index(g.add(g.element_of(idx), shift))]
        shifted_hat = dft_full(shifted, g)
        shift_err = 0.0
        for idx in range(g.order):
            expect = coeffs[idx] * char_eval(g, g.element_of(idx), shift)
            shift_err = max(shift_err, abs(shifted_hat[idx] - expect))

        roundtrip = float(np.abs(idft_full(coeffs, g) - table).max())

        # convolution duality through the filter: DFT(h_A)/|H| is the coset indicator
        filter_err = 0.0
        if g.sft_capable:
            chain = chain_build(g)
            level = chain[min(2, len(chain) - 1)]
            rep = g.element_of(1) if level.depths[0] else g.zero
            rep = tuple(r % (1 << l) for r, l in zip(rep, level.depths))
            node = CosetNode(rep, level)
            h_tab = np.array([filter_eval(node, g.element_of(i)) for i in range(g.order)])
            indicator = dft_full(h_tab, g) / level.subgroup_order
            for idx in range(g.order):
                al = g.element_of(idx)
                inside = all((a - r) % (1 << l) == 0
                             for a, r, l in zip(al, node.rep, level.depths))
                filter_err = max(filter_err, abs(indicator[idx] - (1.0 if inside else 0.0)))
            conv = np.array([
                (table * np.roll(h_tab[::-1], i + 1)).mean() for i in range(g.order)
            ]) if g.ncomp == 1 else None
            if conv is not None:
                conv_hat = dft_full(conv, g)
                duality = float(np.abs(conv_hat - coeffs * dft_full(h_tab, g)).max())
                filter_err = max(filter_err, duality)

        checks[label] = {
            "parseval": parseval, "orthonormality": orthonormal,
            "scaling": float(scale_err), "shifting": float(shift_err),
            "roundtrip": roundtrip, "filter": float(filter_err)}
    ok = all(max(v.values()) < tol for v in checks.values())
    return ok, 0, {"groups": checks, "tolerance": tol}


# -- registry and runner ---------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    name: str
    criterion: int
    description: str
    fn: callable


EXPERIMENTS: dict[str, Experiment] = {}


def _register(name, criterion, description, fn):
    EXPERIMENTS[name] = Experiment(name, criterion, description, fn)


_register("sft-fixtures", 1, "search vs brute force on the ten planted fixtures", _exp_sft_fixtures)
_register("sft-character", 2, "exact single-character recovery on Z_2^16", _exp_sft_character)
_register("figure1", 3, "lifted-character spectrum, p=37 to N=64", _exp_figure1)
_register("modswitch-zp", 4, "prime-domain search through the power-of-two lift", _exp_modswitch_zp)
_register("gl-lpn", 5, "LPN secret recovery at tau=(1-2*rho)^2/2", _exp_gl_lpn)
_register("hnp-half", 6, "chosen-multiplier HNP with the half function", _exp_hnp_half)
_register("unreliable-bound", 7, "corruption degradation inequality, exact", _exp_unreliable_bound)
_register("prop1-collapse", 8, "non-affine composition collapse on Z_1031", _exp_prop1_collapse)
_register("bias-floor", 9, "uniform-noise bias floor over T <= N/2", _exp_bias_floor)
_register("identity-suite", 10, "transform identities at 1e-9", _exp_identity_suite)


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Execute trial_count independent trials with seeds seed + i."""
    exp = EXPERIMENTS[cfg.experiment]
    rows = []
    for i in range(cfg.trials):
        trial_seed = cfg.seed + i
        start = time.perf_counter()
        success, queries, payload = exp.fn(cfg, trial_seed)
        rows.append(ResultRow(
            experiment=cfg.experiment, seed=trial_seed, success=bool(success),
            queries=int(queries), payload=payload,
            wall_time=time.perf_counter() - start))
    return rows


def verify_rows(rows: list[ResultRow]) -> list[str]:
    """Re-check structural invariants of emitted rows; returns problems found."""
    problems = []
    for i, row in enumerate(rows):
        where = f"row {i} ({row.experiment}, seed {row.seed})"
        if row.experiment not in EXPERIMENTS:
            problems.append(f"{where}: unknown experiment")
            continue
        if row.queries < 0:
            problems.append(f"{where}: negative query count")
        try:
            round_trip = ResultRow.from_json(row.to_json())
        except (TypeError, ValueError) as exc:
            problems.append(f"{where}: not serializable ({exc})")
            continue
        if round_trip.to_json() != row.to_json():
            problems.append(f"{where}: serialization does not round-trip")
        spectrum = row.payload.get("spectrum")
        if spectrum is not None:
            n = row.payload.get("n", len(spectrum))
            if len(spectrum) != n:
                problems.append(f"{where}: spectrum length {len(spectrum)} != {n}")
        cands = row.payload.get("candidates")
        if cands:
            scores = [s for _, s in cands]
            if scores != sorted(scores, reverse=True):
                problems.append(f"{where}: candidates not sorted by score")
    return problems
