"""Command-line interface.

Subcommands: ``simulate`` (draw fields from a model description),
``fit`` (run MCMC on a dataset), ``summarize`` (posterior curves and
conditional coefficients from a stored chain), ``graph`` (DOT graph from a
coefficient table) and ``oracle-check`` (randomized Whittle-vs-dense
agreement trials).

Option precedence is flags, then ``--config`` JSON, then built-in
defaults.  Exit codes: 0 success, 1 check failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .fieldsim import SimConfig, simulate_field
from .gridio import ManifestError, load_multilattice, preprocess, write_multilattice
from .inference import (
    build_graph,
    export_graph,
    read_coefficients_csv,
    summarize_chain,
    write_coefficients_csv,
    write_curves_csv,
)
from .oracle import compare_likelihoods
from .sampler import ChainConfig, fit_lattice, read_chain_csv, write_chain_csv, write_sidecar
from .spectrum import CoherenceMatrix, QuasiMaternParams, fourier_grid

__all__ = ["main"]

logger = logging.getLogger(__name__)

# chain i reuses the base seed shifted by a large prime so streams differ
CHAIN_SEED_STRIDE = 1000003


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    """Flag value if given, else config entry, else default."""
    v = getattr(args, key, None)
    if v is not None:
        return v
    if key in config:
        return config[key]
    return default


def _cmd_simulate(args: argparse.Namespace) -> int:
    model_path = args.model or args.config
    if model_path is None:
        raise ValueError("simulate needs a model JSON (positional or --config)")
    with open(model_path) as fh:
        model = json.load(fh)
    if not isinstance(model, dict):
        raise ValueError(f"{model_path}: model must be a JSON object")
    for key in ("n1", "n2", "elements"):
        if key not in model:
            raise ValueError(f"{model_path}: missing required key {key!r}")
    n1, n2 = int(model["n1"]), int(model["n2"])
    delta = float(model.get("delta", 1.0))
    seed = int(args.seed if args.seed is not None else model.get("seed", 0))
    replicates = int(
        args.replicates if args.replicates is not None else model.get("replicates", 1)
    )
    elements = model["elements"]
    labels = tuple(str(e["label"]) for e in elements)
    params = tuple(
        QuasiMaternParams(sigma2=float(e["sigma2"]), alpha=float(e["alpha"]), delta=delta)
        for e in elements
    )
    if "rho" in model:
        rho = CoherenceMatrix(np.asarray(model["rho"], dtype=float))
        rho.cholesky()
    else:
        rho = CoherenceMatrix(np.eye(len(params)))
    cfg = SimConfig(
        n1=n1, n2=n2, params=params, rho=rho, labels=labels,
        delta=delta, seed=seed, replicates=replicates,
    )
    out = Path(args.out or "sim_out")
    fields = simulate_field(cfg)
    if replicates == 1:
        write_multilattice(fields, out / "manifest.json")
        print(f"wrote {out / 'manifest.json'}")
    else:
        for r, field in enumerate(fields, start=1):
            rep_dir = out / f"rep_{r:03d}"
            write_multilattice(field, rep_dir / "manifest.json")
        print(f"wrote {replicates} replicates under {out}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    data = load_multilattice(args.manifest)
    take_log = bool(_resolve(args, config, "log", False))
    center = bool(_resolve(args, config, "center", True))
    data = preprocess(data, take_log=take_log, center=center)

    base_seed = int(_resolve(args, config, "seed", 0))
    nchains = int(_resolve(args, config, "chains", 1))
    if nchains < 1:
        raise ValueError("chains must be >= 1")
    common = dict(
        iters=int(_resolve(args, config, "iters", 10000)),
        burnin=int(_resolve(args, config, "burnin", 2000)),
        thin=int(_resolve(args, config, "thin", 1)),
        taper_r=float(_resolve(args, config, "taper", 0.10)),
        omit_zero=bool(config.get("omit_zero", False)),
    )
    for key in ("adapt_window", "init_proposal_sd", "progress_every"):
        if key in config:
            common[key] = config[key]

    out = Path(args.out or "fit_out")
    for i in range(nchains):
        cfg = ChainConfig(seed=base_seed + CHAIN_SEED_STRIDE * i, **common)
        chain = fit_lattice(data, cfg)
        stem = "chain" if nchains == 1 else f"chain_{i + 1}"
        write_chain_csv(chain, out / f"{stem}.csv")
        write_sidecar(chain, out / f"{stem}.json")
        acc = chain.acceptance or {}
        print(
            f"wrote {out / (stem + '.csv')} ({chain.ndraws} draws, "
            f"{chain.runtime_seconds:.1f}s, "
            f"alpha acc {', '.join(f'{a:.2f}' for a in acc.get('alpha', []))})"
        )
    return 0


def _read_sidecar(chain_path: Path) -> dict:
    sidecar = chain_path.with_suffix(".json")
    if not sidecar.exists():
        raise ValueError(f"missing sidecar {sidecar} (needed for grid shape and labels)")
    with open(sidecar) as fh:
        return json.load(fh)


def _cmd_summarize(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    chain_path = Path(args.chain)
    chain = read_chain_csv(chain_path)
    meta = _read_sidecar(chain_path)
    for key in ("n1", "n2", "delta"):
        if meta.get(key) is None:
            raise ValueError(f"sidecar lacks {key!r}")
    grid = fourier_grid(int(meta["n1"]), int(meta["n2"]), float(meta["delta"]))
    labels = tuple(meta["labels"]) if meta.get("labels") else None

    level = float(_resolve(args, config, "level", 0.95))
    lag_max = _resolve(args, config, "lag_max", None)
    if lag_max is not None:
        lag_max = int(lag_max)
    summary = summarize_chain(chain, grid, lag_max=lag_max, level=level, labels=labels)

    out = Path(args.out or chain_path.parent)
    marginal = [c for c in summary.curves if c.is_marginal]
    cross = [c for c in summary.curves if not c.is_marginal]
    write_curves_csv(marginal, out / "covariance.csv")
    write_curves_csv(cross, out / "cross_covariance.csv")
    write_coefficients_csv(summary.coefficients, out / "coefficients.csv")
    print(f"wrote {out / 'covariance.csv'}")
    print(f"wrote {out / 'cross_covariance.csv'}")
    print(f"wrote {out / 'coefficients.csv'}")
    return 0


def _cmd_graph(args: argparse.Namespace) -> int:
    coefs, labels = read_coefficients_csv(args.coefficients)
    level = coefs[0].level if coefs else 0.95
    graph = build_graph(coefs, labels, level=level)
    text = export_graph(graph, args.out)
    if args.out:
        print(f"wrote {args.out} ({len(graph.edges)} edges)")
    else:
        sys.stdout.write(text)
    return 0


def _random_instance(rng: np.random.Generator):
    n1 = int(rng.integers(4, 9))
    n2 = int(rng.integers(4, 9))
    m = int(rng.integers(1, 4))
    delta = float(rng.choice([0.5, 1.0, 2.0]))
    params = tuple(
        QuasiMaternParams(
            sigma2=float(rng.uniform(0.5, 2.0)),
            alpha=float(rng.uniform(0.5, 3.0)) * delta,
            delta=delta,
        )
        for _ in range(m)
    )
    w = rng.standard_normal((m, m))
    c = w @ w.T + m * np.eye(m)
    d = 1 / np.sqrt(np.diag(c))
    rho = CoherenceMatrix(d[:, None] * c * d[None, :])
    return n1, n2, params, rho, delta


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    trials = args.trials if args.trials is not None else 25
    taper = args.taper if args.taper is not None else 0.0
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    reports = []
    failed = 0
    for t in range(trials):
        n1, n2, params, rho, delta = _random_instance(rng)
        sim = simulate_field(
            SimConfig(
                n1=n1, n2=n2, params=params, rho=rho, delta=delta,
                seed=int(rng.integers(0, 2**31)),
            )
        )
        cmp = compare_likelihoods(
            sim, params, rho, taper_r=taper, wrong_constant=args.debug_wrong_constant
        )
        if cmp.passed is False:
            failed += 1
        reports.append(
            {
                "trial": t,
                "n1": n1,
                "n2": n2,
                "m": len(params),
                "whittle": cmp.whittle,
                "dense": cmp.dense,
                "abs_discrepancy": cmp.abs_discrepancy,
                "rel_discrepancy": cmp.rel_discrepancy,
                "exact": cmp.exact,
                "passed": cmp.passed,
            }
        )
    report = {
        "trials": reports,
        "n_failed": failed,
        "all_passed": failed == 0,
        "taper": taper,
        "wrong_constant": bool(args.debug_wrong_constant),
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 1 if failed else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latspec",
        description="Spectral-domain Bayesian inference for lattice random fields.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw fields from a model description")
    p.add_argument("model", nargs="?", default=None,
                   help="model JSON (n1, n2, delta, elements, rho)")
    p.add_argument("--config", default=None, help="model JSON (alternative to positional)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory (default sim_out)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run MCMC on a dataset manifest")
    p.add_argument("manifest", help="dataset manifest JSON")
    p.add_argument("--config", default=None, help="options JSON (flags take precedence)")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--taper", type=float, default=None, help="cosine taper fraction r")
    p.add_argument("--chains", type=int, default=None)
    p.add_argument("--log", action="store_true", default=None,
                   help="log-transform values before centering")
    p.add_argument("--no-center", action="store_false", dest="center", default=None)
    p.add_argument("--out", default=None, help="output directory (default fit_out)")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("summarize", help="posterior curves and coefficients from a chain")
    p.add_argument("chain", help="chain CSV (sidecar JSON must sit next to it)")
    p.add_argument("--config", default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--lag-max", type=int, default=None, dest="lag_max")
    p.add_argument("--out", default=None, help="output directory (default: chain's)")
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("graph", help="conditional-dependence DOT graph")
    p.add_argument("coefficients", help="coefficient CSV from summarize")
    p.add_argument("--out", default=None, help="output DOT file (default: stdout)")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("oracle-check", help="Whittle-vs-dense agreement trials")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--taper", type=float, default=None)
    p.add_argument("--debug-wrong-constant", action="store_true",
                   help="apply the 2*pi constant without the lattice-size factor")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=_cmd_oracle_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ManifestError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
