"""Experiment command line: bandit sweep, coverage audits, linear-regression
demo, and the sparse-prior width study.

All outputs are RFC-4180 CSV with LF line endings and a leading metadata
comment line (`# version, git-describe, config hash, seed`); results are
byte-reproducible given (version, config, seed).  Exit codes: 0 success,
1 config error, 2 I/O error, 3 coverage-assertion failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from seqmix import __version__
from seqmix.audits import ALL_AUDITS
from seqmix.bandit import BanditConfig, Method, run_episode
from seqmix.mixing import GaussianPosteriorState, gaussian_conjugate_update
from seqmix.models import Observation, gaussian_linear
from seqmix.sparse import METHODS as SPARSE_METHODS
from seqmix.sparse import SparseConfig, run_rerun
from seqmix.trackers import EllipsoidForm, rls_ellipsoid


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def parse_config_file(path: str) -> dict:
    """Flat key = value text file; '#' starts a comment; values are parsed as
    int, float, bool, or comma-separated lists thereof, else kept as strings."""
    out: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        out[key.strip()] = _parse_scalar(value.strip())
    return out


def _parse_scalar(value: str):
    if "," in value:
        return [_parse_scalar(v.strip()) for v in value.split(",")]
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def config_hash(config: dict) -> str:
    # the output directory does not affect the results, so it is not part of
    # the experiment identity
    items = sorted((str(k), repr(v)) for k, v in config.items() if k != "out")
    digest = hashlib.sha256(repr(items).encode()).hexdigest()
    return digest[:12]


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path: Path, header: list[str], rows, config: dict, seed: int):
    meta = (
        f"# version={__version__}, git={_git_describe()}, "
        f"config={config_hash(config)}, seed={seed}"
    )
    try:
        with open(path, "w", newline="") as fh:
            fh.write(meta + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _worker_count() -> int:
    raw = os.environ.get("SEQMIX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"SEQMIX_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("SEQMIX_THREADS must be >= 1")
    return n


def child_seed(master: int, replication: int, tag: str = "") -> int:
    """Deterministic 63-bit child seed from (master, replication, tag)."""
    blob = f"{master}:{replication}:{tag}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


# ---------------------------------------------------------------------------
# commands


def _ensure_out(config: dict) -> Path:
    out = Path(config.get("out", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _as_list(value):
    if isinstance(value, list):
        return value
    return [value]


def cmd_bandit(config: dict) -> int:
    s_values = [float(s) for s in _as_list(config.get("s_values", [4, 6, 8, 10]))]
    methods = [str(m) for m in _as_list(config.get("methods", ["mq", "pl", "emk"]))]
    runs = int(config.get("runs", 5))
    horizon = int(config.get("horizon", 1000))
    n_arms = int(config.get("n_arms", 10))
    delta = float(config.get("delta", 0.05))
    master = int(config.get("seed", 0))
    resolution = int(config.get("grid_resolution", 101))
    normalize = bool(config.get("normalize_arms", False))
    out = _ensure_out(config)

    jobs = []
    for s in s_values:
        for run in range(runs):
            seed = child_seed(master, run, f"S={s:g}")
            for method in methods:
                try:
                    kind = Method(method.upper())
                except ValueError as exc:
                    raise ConfigError(f"unknown bandit method {method!r}") from exc
                jobs.append(
                    BanditConfig(
                        S=s,
                        method=kind,
                        horizon=horizon,
                        n_arms=n_arms,
                        delta=delta,
                        seed=seed,
                        grid_resolution=resolution,
                        normalize_arms=normalize,
                    )
                )

    workers = _worker_count()
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run_episode, jobs))
    else:
        traces = [run_episode(job) for job in jobs]

    rows = []
    finals: dict[tuple[str, float], list[float]] = {}
    for job, trace in zip(jobs, traces):
        label = job.method.value
        for t in range(job.horizon):
            rows.append(
                (
                    label,
                    job.S,
                    job.seed,
                    t + 1,
                    trace.cum_regret[t],
                    trace.threshold[t],
                    trace.width_proxy[t],
                )
            )
        finals.setdefault((label, job.S), []).append(float(trace.cum_regret[-1]))

    write_csv(
        out / "bandit_regret.csv",
        ["method", "S", "seed", "t", "cum_regret", "threshold", "width_proxy"],
        rows,
        config,
        master,
    )
    summary = [
        (m, s, len(v), float(np.mean(v)), float(np.std(v, ddof=1)) if len(v) > 1 else 0.0)
        for (m, s), v in sorted(finals.items())
    ]
    write_csv(
        out / "bandit_summary.csv",
        ["method", "S", "runs", "final_regret_mean", "final_regret_std"],
        summary,
        config,
        master,
    )
    return 0


def cmd_coverage(config: dict) -> int:
    replications = int(config.get("replications", 2000))
    steps = int(config.get("steps", 200))
    delta = float(config.get("delta", 0.1))
    master = int(config.get("seed", 0))
    out = _ensure_out(config)
    constructions = [str(c) for c in _as_list(config.get("constructions", list(ALL_AUDITS)))]

    for name in constructions:
        if name not in ALL_AUDITS:
            raise ConfigError(f"unknown construction {name!r}")

    workers = _worker_count()
    tasks = [
        (name, replications, steps, delta, child_seed(master, i, name))
        for i, name in enumerate(constructions)
    ]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_audit, tasks))
    else:
        results = [_run_audit(t) for t in tasks]

    rows = [
        (
            r.construction,
            r.delta,
            r.replications,
            r.failures,
            r.failure_rate,
            r.binomial_3sigma,
        )
        for r in results
    ]
    write_csv(
        out / "coverage.csv",
        ["construction", "delta", "R", "failures", "failure_rate", "binomial_3sigma"],
        rows,
        config,
        master,
    )
    if not all(r.passed for r in results):
        failed = [r.construction for r in results if not r.passed]
        print(f"coverage-assertion-failure: {','.join(failed)}", file=sys.stderr)
        return 3
    return 0


def _run_audit(task):
    name, replications, steps, delta, seed = task
    return ALL_AUDITS[name](replications, steps, delta, seed)


def cmd_linreg(config: dict) -> int:
    steps = int(config.get("steps", 100))
    d = int(config.get("d", 2))
    lam = float(config.get("lam", 1.0))
    noise_std = float(config.get("noise_std", 1.0))
    s_bound = float(config.get("s_bound", 2.0))
    delta = float(config.get("delta", 0.05))
    master = int(config.get("seed", 0))
    out = _ensure_out(config)

    rng = np.random.default_rng([master, 17])
    theta_star = np.zeros(d)
    theta_star[0] = 1.0
    if d > 1:
        theta_star[1] = 0.5
    model = gaussian_linear(d, noise_std)
    state = GaussianPosteriorState.from_prior(np.zeros(d), lam * np.eye(d), noise_std)

    rows = []
    all_ratio_agree = True
    for t in range(1, steps + 1):
        x = rng.standard_normal(d)
        y = float(x @ theta_star) + noise_std * float(rng.standard_normal())
        state = gaussian_conjugate_update(state, Observation(x, y))
        exact = rls_ellipsoid(state, delta, EllipsoidForm.EXACT)
        relaxed = rls_ellipsoid(state, delta, EllipsoidForm.BALL_RELAXED, S=s_bound)
        member = exact.contains(theta_star)
        ratio_member = _gaussian_ratio_member(state, theta_star, delta)
        agree = member == ratio_member
        all_ratio_agree = all_ratio_agree and agree
        rows.append(
            (
                t,
                exact.info_gain,
                exact.base,
                relaxed.radius_sq,
                member,
                agree,
            )
        )

    write_csv(
        out / "linreg.csv",
        [
            "t",
            "gamma_t",
            "threshold_exact",
            "threshold_relaxed",
            "member_true_theta",
            "ratio_agrees",
        ],
        rows,
        config,
        master,
    )
    if not all_ratio_agree:
        print("linreg: ellipsoid vs density-ratio membership mismatch", file=sys.stderr)
        return 3
    return 0


def _gaussian_ratio_member(state: GaussianPosteriorState, theta, delta: float) -> bool:
    """Membership via -log posterior density <= log(1/delta) - log prior density."""
    neg_log_post = _gaussian_neg_log_density(theta, state.mean, state.precision)
    neg_log_prior = _gaussian_neg_log_density(
        theta, state.prior_mean, state.prior_precision
    )
    return neg_log_post <= math.log(1.0 / delta) + neg_log_prior


def _gaussian_neg_log_density(theta, mean, precision) -> float:
    theta = np.asarray(theta, dtype=float)
    diff = theta - mean
    sign, logdet = np.linalg.slogdet(precision)
    d = len(diff)
    return float(0.5 * d * math.log(2 * math.pi) - 0.5 * logdet + 0.5 * diff @ precision @ diff)


def cmd_sparse(config: dict) -> int:
    runs = int(config.get("runs", 10))
    delta = float(config.get("delta", 0.05))
    master = int(config.get("seed", 0))
    sparse_config = SparseConfig(
        d=int(config.get("d", 20)),
        k=int(config.get("k", 2)),
        n_obs=int(config.get("n_obs", 20)),
        noise_std=float(config.get("noise_std", 0.1)),
        prior_std=float(config.get("prior_std", 1.0)),
        delta=delta,
    )
    out = _ensure_out(config)

    workers = _worker_count()
    tasks = [(sparse_config, child_seed(master, run, "sparse")) for run in range(runs)]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sparse_rerun, tasks))
    else:
        results = [_run_sparse_rerun(t) for t in tasks]

    rows = []
    acc: dict[tuple[str, int], list[float]] = {}
    for run, widths_by_method in enumerate(results):
        for method in SPARSE_METHODS:
            widths = widths_by_method[method]
            for coord in range(sparse_config.d):
                rows.append((method, run, coord, widths[coord]))
                acc.setdefault((method, coord), []).append(float(widths[coord]))

    write_csv(
        out / "sparse_widths.csv",
        ["method", "run", "coord", "width"],
        rows,
        config,
        master,
    )
    summary = [
        (m, c, float(np.mean(v)), float(np.std(v, ddof=1)) if len(v) > 1 else 0.0)
        for (m, c), v in sorted(acc.items())
    ]
    write_csv(
        out / "sparse_widths_summary.csv",
        ["method", "coord", "width_mean", "width_std"],
        summary,
        config,
        master,
    )
    return 0


def _run_sparse_rerun(task):
    sparse_config, seed = task
    widths, _, _ = run_rerun(sparse_config, np.random.default_rng([seed, 23]))
    return widths


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "bandit": cmd_bandit,
    "coverage": cmd_coverage,
    "linreg": cmd_linreg,
    "sparse": cmd_sparse,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmix",
        description="Anytime-valid confidence-sequence experiments.",
    )
    parser.add_argument("experiment", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--delta", type=float, help="failure probability in (0, 1)")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--runs", type=int, help="number of runs/reruns")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--normalize-arms",
        action="store_true",
        default=None,
        help="project bandit arms onto the sphere of radius S",
    )
    return parser


def effective_config(args: argparse.Namespace) -> dict:
    config = parse_config_file(args.config) if args.config else {}
    for key in ("delta", "seed", "runs", "out"):
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    if args.normalize_arms is not None:
        config["normalize_arms"] = args.normalize_arms
    _validate_common(config)
    return config


def _validate_common(config: dict):
    delta = config.get("delta")
    if delta is not None and not (
        isinstance(delta, (int, float)) and 0.0 < float(delta) < 1.0
    ):
        raise ConfigError(f"delta must lie in (0, 1), got {delta!r}")
    for key in ("seed", "runs", "horizon", "n_arms", "replications", "steps", "d", "n_obs"):
        value = config.get(key)
        if value is None:
            continue
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        if key != "seed" and value < 1:
            raise ConfigError(f"{key} must be >= 1, got {value}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = effective_config(args)
        return COMMANDS[args.experiment](config)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    except (IOError, OSError) as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
