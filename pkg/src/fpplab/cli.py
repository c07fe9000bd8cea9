"""Command-line surface: experiment orchestration and persistence.

Each subcommand runs one pipeline, writes CSV files plus a JSON run
manifest into ``--out``, and prints the manifest path.  All outputs
are pure functions of the configuration; the seed is mandatory and
worker counts never change bytes.

CSV layout: ``#``-prefixed metadata lines, then one header line, then
rows; UTF-8, LF endings, floats as shortest round-trip decimals.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, cascade, chenstein, core, counting, engine, limitlaw
from .core import CapacityError, HypercubeInstance, WeightField

log = logging.getLogger("fpplab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_VERIFY = 4


class ConfigError(ValueError):
    pass


class VerifyFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved parameters of one run."""

    command: str
    out: str
    seed: int
    workers: int = 1
    n: int = 12
    r: int = 1
    a: float = 0.0
    replicas: int = 1000
    method: str = "auto"
    counts: bool = True
    r_depth: tuple[int, ...] = (1, 2, 4, 8)
    s_max: float = 25.0
    samples: int = 10_000
    mixing: int = 0
    steps: int = 12
    envs: int = 20
    inner: int = 10_000
    t_grid: str = "-5:5:0.1"
    density_grid: str = ""
    suite: str = "all"


@dataclass(frozen=True)
class RunManifest:
    """What a run produced: config echo, checksums, wall time."""

    command: str
    version: str
    config: dict
    files: dict[str, str]
    wall_time_s: float

    def write(self, path: str) -> None:
        doc = dataclasses.asdict(self)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: str, header: list[str], rows, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for k, v in meta.items():
            f.write(f"# {k}: {_fmt(v)}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    base = {"command": cfg.command, "version": __version__, "seed": cfg.seed}
    base.update(extra)
    return base


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo_s, hi_s, step_s = text.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
    except ValueError as e:
        raise ConfigError(f"grid must look like lo:hi:step, got {text!r}") from e
    if step <= 0 or hi < lo:
        raise ConfigError(f"bad grid {text!r}")
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


# ---------------------------------------------------------------------------
# Pipelines.  Each returns {filename: (header, rows, meta)}.


def _run_simulate(cfg: ExperimentConfig) -> dict:
    counts = cfg.counts and cfg.n <= engine.TABLE_MAX_N and cfg.method != "bidir"
    res = engine.simulate_batch(
        cfg.n,
        cfg.seed,
        cfg.replicas,
        a_values=(cfg.a,),
        counts=counts,
        method=cfg.method if counts or cfg.method != "auto" else "auto",
        workers=cfg.workers,
    )
    m = res["m"]
    cnt = res["counts"][:, 0] if counts else np.full(cfg.replicas, -1, dtype=np.int64)
    rows = [
        (int(res["replica"][i]), float(m[i]), float(cfg.n * (m[i] - 1.0)), int(cnt[i]))
        for i in range(cfg.replicas)
    ]
    meta = _meta(cfg, n=cfg.n, a=cfg.a, replicas=cfg.replicas, method=cfg.method)
    return {"simulate.csv": (["replica", "m_n", "centered_min", "count_a"], rows, meta)}


def _run_cascade(cfg: ExperimentConfig) -> dict:
    rows = []
    for depth in cfg.r_depth:
        params = cascade.CascadeParams(depth=depth, s_max=cfg.s_max)
        z = cascade.sample_cascade(params, cfg.samples, cfg.seed, workers=cfg.workers)
        rows.extend((i, depth, float(z[i])) for i in range(cfg.samples))
    if cfg.mixing:
        z = cascade.sample_mixing(cfg.mixing, cfg.seed)
        rows.extend((i, -1, float(z[i])) for i in range(cfg.mixing))
    meta = _meta(
        cfg,
        r_depth=",".join(map(str, cfg.r_depth)),
        s_max=cfg.s_max,
        samples=cfg.samples,
        mixing=cfg.mixing,
    )
    return {"cascade.csv": (["sample_id", "r", "z"], rows, meta)}


def _run_contraction(cfg: ExperimentConfig) -> dict:
    pool_a = np.ones(cfg.samples)
    rng = cascade._stream_rng(cfg.seed, cascade.STREAM_CONTRACTION, 1)
    pool_b = rng.standard_exponential(cfg.samples)
    w2 = cascade.contraction_trace(pool_a, pool_b, cfg.seed, cfg.steps, s_max=cfg.s_max)
    rows = [(s, float(w2[s])) for s in range(len(w2))]
    meta = _meta(cfg, samples=cfg.samples, steps=cfg.steps, s_max=cfg.s_max)
    return {"contraction.csv": (["step", "w2"], rows, meta)}


def _run_limit_law(cfg: ExperimentConfig) -> dict:
    ts = _parse_grid(cfg.t_grid)
    fs = limitlaw.limit_cdf(ts)
    rows = [(float(t), float(F)) for t, F in zip(ts, fs)]
    meta = _meta(cfg, t_grid=cfg.t_grid)
    out = {"limitlaw.csv": (["t", "F"], rows, meta)}
    if cfg.density_grid:
        zs = _parse_grid(cfg.density_grid)
        dens = [float(limitlaw.mixture_density(z)) if z > 0 else 0.0 for z in zs]
        claimed = [
            float(limitlaw.claimed_mixture_density(z)) if z > 0 else 0.0 for z in zs
        ]
        drows = list(zip(map(float, zs), dens, claimed))
        dmeta = _meta(cfg, density_grid=cfg.density_grid)
        out["mixture.csv"] = (["z", "density", "claimed_density"], drows, dmeta)
    return out


def _run_chenstein(cfg: ExperimentConfig) -> dict:
    rows = []
    for env in range(cfg.envs):
        f = WeightField(HypercubeInstance(cfg.n, cfg.seed, env))
        rep = chenstein.cs_report(f, cfg.r, cfg.a, inner=cfg.inner)
        rows.append(
            (
                env,
                rep.lam,
                rep.term1,
                rep.term2,
                rep.term3,
                rep.bound,
                rep.tv,
                rep.tv_stderr,
            )
        )
        log.info("env %d: lambda=%.5f bound=%.5f tv=%.5f", env, rep.lam, rep.bound, rep.tv)
    meta = _meta(cfg, n=cfg.n, r=cfg.r, a=cfg.a, envs=cfg.envs, inner=cfg.inner)
    header = ["env_id", "lambda", "term1", "term2", "term3", "bound", "tv", "stderr"]
    return {"chenstein.csv": (header, rows, meta)}


def _run_count_paths(cfg: ExperimentConfig) -> dict:
    f = counting.overlap_census(cfg.n)
    fr = counting.middle_census(cfg.n, cfg.r)
    cap3 = counting.middle_overlap_bound(cfg.n, cfg.r)
    rows = []
    for k in range(cfg.n + 1):
        rows.append(
            (
                cfg.n,
                k,
                int(f[k]),
                int(fr[k]),
                float((k + 1) * math.factorial(cfg.n - k)),
                counting.overlap_upper_bound(cfg.n, k),
                cap3,
            )
        )
    meta = _meta(cfg, n=cfg.n, r=cfg.r)
    header = ["n", "k", "f", "f_r", "bound_i", "bound_ii", "bound_iii"]
    return {"countpaths.csv": (header, rows, meta)}


# ---------------------------------------------------------------------------
# verify: self-contained property sweeps, exit 4 on any failure.


def _checks_appendix():
    from .chenstein import stein_g, stein_singleton_gap, stein_sup_delta

    for lam in (0.1, 1.0, 7.0):
        sol = stein_g(lam, {3}, range(0, 80))
        worst = max(abs(sol.residual(v)) for v in range(0, 70))
        yield f"stein-residual lam={lam}", worst < 1e-10, f"max residual {worst:.2e}"
    sol = stein_g(2.0, {1, 4, 9}, range(0, 40))
    parts = [stein_g(2.0, {j}, range(0, 40)) for j in (1, 4, 9)]
    worst = max(abs(sol.g(v) - sum(p.g(v) for p in parts)) for v in range(40))
    yield "stein-additivity", worst < 1e-12, f"max gap {worst:.2e}"
    ok = True
    for lam in (0.5, 2.0):
        for n in range(1, 41):
            gap = stein_singleton_gap(lam, n)
            sol = stein_g(lam, {n}, range(n, n + 2))
            ok &= abs(gap - 1.0 / n) < 1e-10
            ok &= abs(sol.g(n + 1) - sol.g(n)) <= gap + 1e-12
    yield "stein-singleton-envelope", ok, "1/n envelope and dominance"
    for lam in (0.3, 1.0, 5.0):
        sol = stein_g(lam, {0}, range(0, 3))
        want = (1.0 - math.exp(-lam)) / lam
        got = abs(sol.g(1) - sol.g(0))
        yield f"stein-zero-gap lam={lam}", abs(got - want) < 1e-14, f"{got!r}"
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        lam = float(rng.uniform(0.05, 10))
        size = int(rng.integers(1, 12))
        a = set(int(x) for x in rng.choice(31, size=size, replace=False))
        worst = max(worst, stein_sup_delta(lam, a, range(0, 101)))
    yield "stein-sup-delta", worst <= 1.0 + 1e-12, f"max jump {worst:.6f}"


def _checks_invariants():
    from .gamma import exact_intensity

    f3 = counting.overlap_census(3)
    yield "census-n3", f3.tolist() == [3, 2, 0, 1], str(f3.tolist())
    ok = True
    for n in range(3, 9):
        f = counting.overlap_census(n)
        ok &= int(f.sum()) == math.factorial(n) and f[n - 1] == 0 and f[n] == 1
    yield "census-partition", ok, "sum=n!, f[n-1]=0, f[n]=1 for n in 3..8"
    fld = WeightField(HypercubeInstance(8, 123, 0))
    lams = [chenstein.conditional_lambda(fld, 1, a) for a in (-1.0, 0.0, 1.0)]
    yield "lambda-monotone", lams[0] <= lams[1] <= lams[2], f"{lams}"
    lam0 = chenstein.conditional_lambda(fld, 0, 0.0)
    ref = exact_intensity(8, 0.0)
    yield "lambda-r0-exact", abs(lam0 - ref) < 1e-12 * ref, f"{lam0!r} vs {ref!r}"
    ts = _parse_grid("-4:4:0.05")
    fs = limitlaw.limit_cdf(ts)
    yield "limit-cdf-monotone", bool((np.diff(fs) >= 0).all()), "nondecreasing"
    total = limitlaw.mixture_total_mass()
    yield "mixture-mass", abs(total - 1.0) < 1e-6, f"{total!r}"


def _run_verify(cfg: ExperimentConfig) -> dict:
    checks = []
    if cfg.suite in ("appendix", "all"):
        checks.extend(_checks_appendix())
    if cfg.suite in ("invariants", "all"):
        checks.extend(_checks_invariants())
    if not checks:
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    rows = [(name, passed, detail) for name, passed, detail in checks]
    meta = _meta(cfg, suite=cfg.suite)
    return {"verify.csv": (["check", "passed", "detail"], rows, meta)}


_PIPELINES = {
    "simulate": _run_simulate,
    "cascade": _run_cascade,
    "contraction": _run_contraction,
    "limit-law": _run_limit_law,
    "chenstein": _run_chenstein,
    "count-paths": _run_count_paths,
    "verify": _run_verify,
}


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Execute one pipeline and persist its outputs and manifest."""
    if cfg.command not in _PIPELINES:
        raise ConfigError(f"unknown command {cfg.command!r}")
    t0 = time.monotonic()
    os.makedirs(cfg.out, exist_ok=True)
    outputs = _PIPELINES[cfg.command](cfg)
    files = {}
    failed = []
    for name, (header, rows, meta) in outputs.items():
        path = os.path.join(cfg.out, name)
        write_csv(path, header, rows, meta)
        files[name] = _sha256(path)
        log.info("wrote %s (%s)", path, files[name][:12])
        if name == "verify.csv":
            failed = [r[0] for r in rows if not r[1]]
    manifest = RunManifest(
        command=cfg.command,
        version=__version__,
        config=dataclasses.asdict(cfg),
        files=files,
        wall_time_s=time.monotonic() - t0,
    )
    manifest.write(os.path.join(cfg.out, "manifest.json"))
    if failed:
        raise VerifyFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return manifest


# ---------------------------------------------------------------------------
# Argument parsing.  Precedence: flags > config file > defaults.


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fpplab",
        description="Oriented first-passage percolation laboratory",
    )
    p.add_argument("--version", action="version", version=f"fpplab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="base seed (required)")
        sp.add_argument("--workers", type=int, help="worker processes")
        sp.add_argument("--config", help="JSON config file (flags win)")

    sp = sub.add_parser("simulate", help="first-passage optima per replica")
    sp.add_argument("--n", type=int)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--a", type=float)
    sp.add_argument("--method", choices=["auto", "table", "bidir"])
    sp.add_argument("--no-counts", action="store_true", help="skip extremal counts")
    common(sp)

    sp = sub.add_parser("cascade", help="cascade and mixing samples")
    sp.add_argument("--r-depth", help="comma-separated depths")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--s-max", type=float)
    sp.add_argument("--mixing", type=int, help="also draw product-exponential rows")
    common(sp)

    sp = sub.add_parser("contraction", help="coupled smoothing-map W2 trace")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--s-max", type=float)
    common(sp)

    sp = sub.add_parser("limit-law", help="limit CDF (and mixture density) grids")
    sp.add_argument("--t-grid", help="lo:hi:step")
    sp.add_argument("--density-grid", help="lo:hi:step for the mixture density")
    common(sp)

    sp = sub.add_parser("chenstein", help="conditional Poisson bound vs measured TV")
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--a", type=float)
    sp.add_argument("--envs", type=int)
    sp.add_argument("--inner", type=int)
    common(sp)

    sp = sub.add_parser("count-paths", help="overlap census audit table")
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=int)
    common(sp)

    sp = sub.add_parser("verify", help="self-contained property sweeps")
    sp.add_argument("--suite", choices=["appendix", "invariants", "all"])
    common(sp)
    return p


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    given = {
        k: v for k, v in vars(args).items() if v is not None and k != "config"
    }
    if given.pop("no_counts", False):
        given["counts"] = False
    merged: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        merged.update(doc)
    merged.update(given)
    if "r_depth" in merged and isinstance(merged["r_depth"], str):
        try:
            merged["r_depth"] = tuple(int(x) for x in merged["r_depth"].split(","))
        except ValueError as e:
            raise ConfigError(f"bad --r-depth {merged['r_depth']!r}") from e
    if merged.get("seed") is None:
        raise ConfigError("a seed is required; pass --seed")
    if merged.get("out") is None:
        raise ConfigError("an output directory is required; pass --out")
    if merged.get("workers") is None:
        merged["workers"] = os.cpu_count() or 1
    merged.setdefault("command", args.command)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    if cfg.seed < 0 or cfg.seed >= 1 << 64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    if cfg.workers < 1:
        raise ConfigError("workers must be positive")
    # Range-check everything here so a bad value is a clean usage error
    # instead of a traceback out of the engine.
    if not 1 <= cfg.n <= core.MAX_N:
        raise ConfigError(f"n must be in [1, {core.MAX_N}], got {cfg.n}")
    if cfg.r < 0:
        raise ConfigError("r must be nonnegative")
    positive = {"replicas": cfg.replicas, "samples": cfg.samples,
                "steps": cfg.steps, "envs": cfg.envs, "inner": cfg.inner}
    for name, value in positive.items():
        if value < 1:
            raise ConfigError(f"{name} must be positive, got {value}")
    if cfg.mixing < 0:
        raise ConfigError("mixing must be nonnegative")
    if any(d < 0 for d in cfg.r_depth):
        raise ConfigError(f"cascade depths must be nonnegative, got {cfg.r_depth}")
    if not cfg.s_max > 0:
        raise ConfigError("s-max must be positive")
    if cfg.method not in ("auto", "table", "bidir"):
        raise ConfigError(f"method must be auto, table, or bidir, got {cfg.method!r}")
    return cfg


def _absorb_grid_values(argv: list[str]) -> list[str]:
    """Join grid flags with their values so leading minus signs parse."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--t-grid", "--density-grid"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    level = os.environ.get("FPP_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        print(f"FPP_LOG must be one of {sorted(levels)}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=levels[level], format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(_absorb_grid_values(list(sys.argv[1:] if argv is None else argv)))
    try:
        cfg = _resolve(args)
        manifest = run_experiment(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except VerifyFailure as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    for name, digest in manifest.files.items():
        print(f"{name}  sha256:{digest}")
    print(os.path.join(cfg.out, "manifest.json"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
