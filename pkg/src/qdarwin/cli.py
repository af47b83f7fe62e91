"""Command-line experiment runner.

Verbs: ``scan-decoherence``, ``scan-partial-info``, ``scan-redundancy``,
``verify`` and ``plot``.  Each scan reads a YAML configuration (see
``configs/default.yaml``), writes CSV tables into the output directory, and
is byte-for-byte reproducible for a fixed configuration and seed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .dynamics import (
    ModelConfig,
    decoherence_factors,
    default_model,
    evolve,
    haar_state,
)
from .errors import ConfigError, QDarwinError
from .qstate import bloch_observable
from .redundancy import (
    STRATEGIES,
    MeasurementSearchConfig,
    entropy_of,
    full_information,
    max_info_fragment,
    max_info_via_pointer,
    redundancy,
    system_space,
)
from . import verify as verify_mod

log = logging.getLogger("qdarwin")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "model": {"g": 1.0, "alpha": "uniform"},
    "sweep": {
        "t": [0.0, "pi/32", "pi/16", "3*pi/32", "pi/8", "3*pi/16", "pi/4"],
        "n": [2, 4, 6, 8],
        "fragment_sizes": [1, 2, 3, 4, 5, 6, 7, 8],
        "delta": [0.1],
        "angles_deg": [0, 10, 20, 30, 45, 60, 90],
        "ensembles": 20,
        "short_time": "3*pi/32",
    },
    "search": {"strategy": "parametrized-search", "restarts": 3, "tolerance": 1e-10,
               "max_iterations": 400},
    "verify": {"n": [2, 4, 6, 8], "t": [0.0, "pi/16", "pi/8", "pi/4"], "draws": 20},
    "seed": 0,
    "output_dir": "out",
}

_PI_EXPR = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_real(v, where: str) -> float:
    """A number, or a multiple of pi written as ``pi``, ``pi/8``, ``3*pi/16``."""
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        m = _PI_EXPR.match(v)
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * math.pi / den
        try:
            return float(v)
        except ValueError:
            pass
    raise ConfigError(f"{where}: cannot read {v!r} as a number")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    g: float
    alpha: str
    times: tuple
    n_values: tuple
    fragment_sizes: tuple
    deltas: tuple
    angles_deg: tuple
    ensembles: int
    short_time: float
    search: MeasurementSearchConfig
    verify_n: tuple
    verify_t: tuple
    verify_draws: int
    seed: int
    output_dir: Path


def _merge(defaults: dict, given: dict, path: str) -> dict:
    out = dict(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"unknown configuration key {path}{k!r}")
        if isinstance(defaults[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{path}{k} must be a mapping")
            out[k] = _merge(defaults[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


def _nonempty(seq, where, conv):
    if not isinstance(seq, list) or not seq:
        raise ConfigError(f"{where} must be a nonempty list")
    return tuple(conv(v, where) for v in seq)


def _natural(v, where):
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ConfigError(f"{where}: expected a natural number, got {v!r}")
    return v


def build_config(raw: dict) -> ExperimentConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    c = _merge(DEFAULTS, raw, "")
    m, s, q, v = c["model"], c["sweep"], c["search"], c["verify"]
    if m["alpha"] not in ("uniform", "random"):
        raise ConfigError("model.alpha must be 'uniform' or 'random'")
    if q["strategy"] not in STRATEGIES:
        raise ConfigError(f"search.strategy must be one of {STRATEGIES}")
    try:
        search = MeasurementSearchConfig(q["strategy"], _natural(q["restarts"], "search.restarts"),
                                         parse_real(q["tolerance"], "search.tolerance"),
                                         _natural(q["max_iterations"], "search.max_iterations"),
                                         _natural(c["seed"], "seed"))
    except QDarwinError as exc:
        raise ConfigError(str(exc)) from exc
    deltas = _nonempty(s["delta"], "sweep.delta", parse_real)
    if any(not 0 <= d < 1 for d in deltas):
        raise ConfigError("sweep.delta values must lie in [0, 1)")
    n_values = _nonempty(s["n"], "sweep.n", _natural)
    if any(n < 1 for n in n_values):
        raise ConfigError("sweep.n values must be >= 1")
    return ExperimentConfig(
        g=parse_real(m["g"], "model.g"),
        alpha=m["alpha"],
        times=_nonempty(s["t"], "sweep.t", parse_real),
        n_values=n_values,
        fragment_sizes=_nonempty(s["fragment_sizes"], "sweep.fragment_sizes", _natural),
        deltas=deltas,
        angles_deg=_nonempty(s["angles_deg"], "sweep.angles_deg", parse_real),
        ensembles=_natural(s["ensembles"], "sweep.ensembles"),
        short_time=parse_real(s["short_time"], "sweep.short_time"),
        search=search,
        verify_n=_nonempty(v["n"], "verify.n", _natural),
        verify_t=_nonempty(v["t"], "verify.t", parse_real),
        verify_draws=_natural(v["draws"], "verify.draws"),
        seed=_natural(c["seed"], "seed"),
        output_dir=Path(c["output_dir"]),
    )


def load_config(path=None, seed=None, out=None) -> ExperimentConfig:
    raw = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
    raw = dict(raw or {})
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["output_dir"] = str(out)
    return build_config(raw)


# ---------------------------------------------------------------- tables


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.getvalue().encode())
    return path


def _alpha(cfg: ExperimentConfig, rng):
    return haar_state(2, rng) if cfg.alpha == "random" else None


def _map(fn, jobs, threads: int):
    if threads <= 1:
        return list(map(fn, jobs))
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, jobs))


def linear_fit(x, y) -> tuple:
    """Least squares ``y = slope x + intercept``; returns ``(slope, intercept, r2)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


DECOHERENCE_HEADER = ("model", "ensemble", "N", "t", "g", "abs_gamma", "log_abs_gamma")


def decoherence_rows(cfg: ExperimentConfig, threads: int = 1) -> list:
    """``|gamma^E_01|`` for the default model and for random environment ensembles.

    Random draws: for each ``N`` (in order) and each ensemble, ``N`` Haar
    states are drawn from the run's generator; every time point reuses them.
    """
    rng = np.random.default_rng(cfg.seed)
    z = np.diag([1.0, -1.0]).astype(complex)
    jobs = []
    for n in cfg.n_values:
        jobs.append(("plus", -1, n, default_model(n, 0.0, cfg.g)))
        for e in range(cfg.ensembles):
            states = tuple(haar_state(2, rng) for _ in range(n))
            model = ModelConfig(np.ones(2) / np.sqrt(2), (1.0, -1.0), states,
                                tuple(z for _ in range(n)), np.full(n, cfg.g), 0.0)
            jobs.append(("random", e, n, model))

    def one(job):
        kind, e, n, model = job
        rows = []
        for t in cfg.times:
            b = evolve(model.at_time(t))
            gam = abs(decoherence_factors(b, tuple(range(n))).gamma[0, 1])
            rows.append((kind, e, n, t, cfg.g, gam, math.log(gam) if gam > 0 else -math.inf))
        return rows

    return [r for batch in _map(one, jobs, threads) for r in batch]


FIT_HEADER = ("fit", "key", "slope", "intercept", "r2", "points")


def decoherence_fits(rows, short_time: float) -> list:
    """Scaling fits over the random ensembles.

    ``log_vs_N``: mean ``log|gamma|`` against ``N`` at each ``t > 0``.
    ``log_vs_t2``: ``log`` of the ensemble-mean ``|gamma|`` against ``t^2`` over
    ``0 < t <= short_time`` at each ``N`` (a Gaussian decay is a straight line).
    """
    rnd = [r for r in rows if r[0] == "random"]
    fits = []
    times = sorted({r[3] for r in rnd})
    ns = sorted({r[2] for r in rnd})
    for t in times:
        if t <= 0 or len(ns) < 2:
            continue
        means = [np.mean([r[6] for r in rnd if r[2] == n and r[3] == t]) for n in ns]
        if np.all(np.isfinite(means)):
            fits.append(("log_vs_N", t, *linear_fit(ns, means), len(ns)))
    for n in ns:
        short = [t for t in times if 0 < t <= short_time]
        if len(short) < 2:
            continue
        y = [math.log(np.mean([r[5] for r in rnd if r[2] == n and r[3] == t])) for t in short]
        fits.append(("log_vs_t2", n, *linear_fit(np.square(short), y), len(short)))
    return fits


def run_decoherence_scan(cfg: ExperimentConfig, threads: int = 1) -> list:
    rows = decoherence_rows(cfg, threads)
    out = [write_csv(cfg.output_dir / "decoherence.csv", DECOHERENCE_HEADER, rows)]
    fits = decoherence_fits(rows, cfg.short_time)
    out.append(write_csv(cfg.output_dir / "decoherence_fit.csv", FIT_HEADER, fits))
    return out


PARTIAL_HEADER = ("N", "t", "g", "m", "strategy", "i_hat", "h_a")
ANGLE_HEADER = ("N", "t", "g", "angle_deg", "delta", "strategy", "h_b", "i_b_a", "i_hat_full",
                "r_delta", "qualifies")


def run_partial_info_scan(cfg: ExperimentConfig, threads: int = 1) -> list:
    rng = np.random.default_rng(cfg.seed)
    models = [(n, t, default_model(n, t, cfg.g, alpha=_alpha(cfg, rng)))
              for n in cfg.n_values for t in cfg.times]

    def frag_rows(job):
        n, t, model = job
        b = evolve(model)
        a = bloch_observable(system_space(b), 0, 0.0)
        h_a = entropy_of(b, a)
        return [(n, t, cfg.g, m, cfg.search.strategy,
                 max_info_fragment(b, a, tuple(range(m)), cfg.search)[0], h_a)
                for m in cfg.fragment_sizes if m <= n]

    def angle_rows(job):
        n, t, model = job
        b = evolve(model)
        sp = system_space(b)
        a = bloch_observable(sp, 0, 0.0)
        rows = []
        for ang in cfg.angles_deg:
            obs = bloch_observable(sp, 0, math.radians(ang))
            h_b = entropy_of(b, obs)
            i_ba = max_info_via_pointer(b, obs, a)
            i_full = full_information(b, obs, cfg.search)[0]
            for d in cfg.deltas:
                rep = redundancy(b, obs, d, cfg.search, i_hat_full=i_full)
                rows.append((n, t, cfg.g, ang, d, cfg.search.strategy, h_b, i_ba, i_full,
                             rep.r_delta, i_ba >= (1 - d) * i_full))
        return rows

    part = [r for batch in _map(frag_rows, models, threads) for r in batch]
    ang = [r for batch in _map(angle_rows, models, threads) for r in batch]
    return [write_csv(cfg.output_dir / "partial_info.csv", PARTIAL_HEADER, part),
            write_csv(cfg.output_dir / "partial_info_angles.csv", ANGLE_HEADER, ang)]


REDUNDANCY_HEADER = ("N", "t", "g", "delta", "strategy", "method", "i_hat_full", "r_delta",
                     "no_information", "leftover")


def redundancy_rows(cfg: ExperimentConfig, threads: int = 1) -> list:
    rng = np.random.default_rng(cfg.seed)
    jobs = [(n, t, default_model(n, t, cfg.g, alpha=_alpha(cfg, rng)))
            for n in cfg.n_values for t in cfg.times]

    def one(job):
        n, t, model = job
        b = evolve(model)
        a = bloch_observable(system_space(b), 0, 0.0)
        i_full = full_information(b, a, cfg.search)[0]
        out = []
        for d in cfg.deltas:
            rep = redundancy(b, a, d, cfg.search, i_hat_full=i_full)
            out.append((n, t, cfg.g, d, cfg.search.strategy, rep.method, rep.i_hat_full,
                        rep.r_delta, rep.no_information, len(rep.leftover)))
        return out

    return [r for batch in _map(one, jobs, threads) for r in batch]


def monotonicity_warnings(rows, g: float) -> list:
    """Places where ``R_delta`` drops with ``t`` inside ``[0, pi/(4g)]``."""
    warnings = []
    limit = math.pi / (4 * g) + 1e-12
    keys = sorted({(r[0], r[3]) for r in rows})
    for n, d in keys:
        series = sorted((r[1], r[7]) for r in rows if r[0] == n and r[3] == d and r[1] <= limit)
        for (t0, r0), (t1, r1) in zip(series, series[1:]):
            if r1 < r0:
                warnings.append(f"R_delta decreases for N={n}, delta={d}: "
                                f"{r0} at t={t0:.6g} -> {r1} at t={t1:.6g}")
    return warnings


def run_redundancy_scan(cfg: ExperimentConfig, threads: int = 1) -> list:
    rows = redundancy_rows(cfg, threads)
    for w in monotonicity_warnings(rows, cfg.g):
        log.warning(w)
    return [write_csv(cfg.output_dir / "redundancy.csv", REDUNDANCY_HEADER, rows)]


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_clean(v) for v in x]
    return x


def run_verify(cfg: ExperimentConfig, threads: int = 1) -> tuple:
    """Run the check suite; returns ``(paths, n_failed)``."""
    suite = verify_mod.SuiteConfig(cfg.verify_n, cfg.verify_t, cfg.verify_draws, cfg.seed, cfg.g,
                                   cfg.search)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = verify_mod.run_suite(suite, pool)
    else:
        results = verify_mod.run_suite(suite)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(_clean(r.to_record()), sort_keys=True) for r in results]
    jpath = out / "verify.jsonl"
    jpath.write_bytes(("\n".join(lines) + "\n").encode())
    by_name = {}
    for r in results:
        s = by_name.setdefault(r.name, {"run": 0, "passed": 0, "failed": 0, "skipped": 0,
                                        "vacuous": 0, "min_margin": math.inf})
        if r.skipped:
            s["skipped"] += 1
            continue
        s["run"] += 1
        s["passed" if r.passed else "failed"] += 1
        s["vacuous"] += r.vacuous
        s["min_margin"] = min(s["min_margin"], r.margin)
    failed = sum(s["failed"] for s in by_name.values())
    text = [f"verification suite: seed={cfg.seed} N={list(cfg.verify_n)} "
            f"t={[format(t, '.6g') for t in cfg.verify_t]} draws={cfg.verify_draws}", ""]
    text.append(f"{'check':<22}{'run':>6}{'passed':>8}{'failed':>8}{'skipped':>9}"
                f"{'vacuous':>9}  min margin")
    for name in sorted(by_name):
        s = by_name[name]
        mm = "n/a" if s["run"] == 0 else format(s["min_margin"], ".3e")
        text.append(f"{name:<22}{s['run']:>6}{s['passed']:>8}{s['failed']:>8}{s['skipped']:>9}"
                    f"{s['vacuous']:>9}  {mm}")
    text += ["", "RESULT: " + ("PASS" if failed == 0 else f"FAIL ({failed} failed checks)")]
    tpath = out / "verify.txt"
    tpath.write_bytes(("\n".join(text) + "\n").encode())
    return [jpath, tpath], failed


# ---------------------------------------------------------------- plots


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plots(out_dir: Path) -> list:
    """PNG curves for whichever scan tables exist in ``out_dir``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    made = []

    def save(fig, name):
        p = out_dir / name
        fig.tight_layout()
        fig.savefig(p, dpi=120)
        plt.close(fig)
        made.append(p)

    p = out_dir / "decoherence.csv"
    if p.exists():
        rows = _read_csv(p)
        fig, ax = plt.subplots()
        for n in sorted({int(r["N"]) for r in rows}):
            for kind, style in (("plus", "-"), ("random", "--")):
                sel = [r for r in rows if int(r["N"]) == n and r["model"] == kind]
                ts = sorted({float(r["t"]) for r in sel})
                ys = [np.mean([float(r["abs_gamma"]) for r in sel if float(r["t"]) == t])
                      for t in ts]
                if ts:
                    ax.plot(ts, ys, style, label=f"N={n} {kind}")
        ax.set_xlabel("t")
        ax.set_ylabel("|gamma_01|")
        ax.legend(fontsize="small")
        save(fig, "decoherence.png")
    p = out_dir / "partial_info.csv"
    if p.exists():
        rows = _read_csv(p)
        fig, ax = plt.subplots()
        for key in sorted({(int(r["N"]), float(r["t"])) for r in rows}):
            sel = [r for r in rows if (int(r["N"]), float(r["t"])) == key]
            ax.plot([int(r["m"]) for r in sel], [float(r["i_hat"]) for r in sel], "o-",
                    label=f"N={key[0]} t={key[1]:.3g}")
        ax.set_xlabel("fragment size m")
        ax.set_ylabel("I_hat_F(A) [nats]")
        ax.legend(fontsize="x-small")
        save(fig, "partial_info.png")
    p = out_dir / "partial_info_angles.csv"
    if p.exists():
        rows = _read_csv(p)
        fig, ax = plt.subplots()
        for key in sorted({(int(r["N"]), float(r["t"]), float(r["delta"])) for r in rows}):
            sel = [r for r in rows if (int(r["N"]), float(r["t"]), float(r["delta"])) == key]
            ax.plot([float(r["angle_deg"]) for r in sel], [int(r["r_delta"]) for r in sel], "o-",
                    label=f"N={key[0]} t={key[1]:.3g} d={key[2]:g}")
        ax.set_xlabel("angle to pointer [deg]")
        ax.set_ylabel("R_delta(B)")
        ax.legend(fontsize="x-small")
        save(fig, "redundancy_vs_angle.png")
    p = out_dir / "redundancy.csv"
    if p.exists():
        rows = _read_csv(p)
        fig, ax = plt.subplots()
        for key in sorted({(int(r["N"]), float(r["delta"])) for r in rows}):
            sel = sorted((float(r["t"]), int(r["r_delta"])) for r in rows
                         if (int(r["N"]), float(r["delta"])) == key)
            ax.step([s[0] for s in sel], [s[1] for s in sel], where="post",
                    label=f"N={key[0]} d={key[1]:g}")
        ax.set_xlabel("t")
        ax.set_ylabel("R_delta(A)")
        ax.legend(fontsize="small")
        save(fig, "redundancy.png")
    return made


# ---------------------------------------------------------------- entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdarwin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in ("scan-decoherence", "scan-partial-info", "scan-redundancy", "verify", "plot"):
        s = sub.add_parser(verb)
        s.add_argument("--config", type=Path, default=None)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--out", type=Path, default=None)
        s.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.seed, args.out)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    try:
        if args.verb == "scan-decoherence":
            paths = run_decoherence_scan(cfg, args.threads)
        elif args.verb == "scan-partial-info":
            paths = run_partial_info_scan(cfg, args.threads)
        elif args.verb == "scan-redundancy":
            paths = run_redundancy_scan(cfg, args.threads)
        elif args.verb == "verify":
            paths, failed = run_verify(cfg, args.threads)
            for p in paths:
                log.info("wrote %s", p)
            return EXIT_CHECK_FAILED if failed else EXIT_OK
        else:
            paths = emit_plots(cfg.output_dir)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
