"""Command-line interface: ``simulate``, ``fit``, ``risk`` and ``check``.

Every command writes its outputs and a ``manifest.json`` into ``--out``.
Exit status is 0 on success, 2 for usage errors and 1 for data, model or
numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, simgen
from .checks import GEWEKE_THRESHOLD, geweke_report, run_ppc
from .errors import ComireError, DegenerateModelError, DomainError, UsageError
from .gibbs import PosteriorDraws, read_draws, run_chains, write_draws
from .io import (
    basis_from_dict,
    chain_settings_from,
    file_digest,
    load_config,
    model_config_from,
    model_config_to_dict,
    read_dataset,
    read_manifest,
    write_dataset,
    write_manifest,
    write_table,
)
from .risk import RiskQuery, posterior_bmd, posterior_risk_curve

log = logging.getLogger("comire")

DEFAULT_THRESHOLD = 37.0
DEFAULT_Q = "0.01,0.05,0.10"


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rel(paths, root):
    return [str(Path(p).relative_to(root)) for p in paths]


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    try:
        spec = simgen.ScenarioSpec(id=args.scenario, n=args.n, seed=args.seed)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    sc = simgen.generate(spec)
    out = _out_dir(args.out)
    data_path = out / "data.csv"
    write_dataset(data_path, sc.data)
    grid = np.linspace(0.0, args.grid_max, 101)
    truth = {
        "scenario": spec.id,
        "n": spec.n,
        "seed": spec.seed,
        "dose_distribution": {"family": "gamma", "shape": spec.dose_shape, "scale": spec.dose_scale},
        "parameters": simgen.scenario_parameters(spec.id),
        "threshold": args.threshold,
        "risk_curve": {"x": grid.tolist(),
                       "cdf": np.asarray(sc.cdf(grid, args.threshold), dtype=float).tolist(),
                       "additional_risk": np.asarray(sc.additional_risk(grid, args.threshold),
                                                     dtype=float).tolist()},
    }
    truth_path = out / "truth.json"
    with truth_path.open("w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "simulate", scenario=spec.id, n=spec.n, seed=spec.seed,
                   threshold=args.threshold, grid_max=args.grid_max,
                   outputs=_rel([data_path, truth_path], out))
    return 0


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    for key in ("seed", "chains", "iterations", "burn_in", "thin"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    data = read_dataset(args.data, max_y=args.max_y)
    config = model_config_from(cfg, data)
    settings = chain_settings_from(cfg)
    draws = run_chains(config, data, settings, workers=args.workers)
    out = _out_dir(args.out)
    paths = []
    for k in range(settings.chains):
        path = out / f"draws_chain{k}.csv"
        write_draws(path, draws.for_chain(k))
        paths.append(path)
    write_manifest(
        out, "fit",
        data=str(args.data), data_digest=file_digest(args.data), n=data.n, max_y=args.max_y,
        config_file=str(args.config) if args.config else None,
        config=cfg, model=model_config_to_dict(config),
        settings={"iterations": settings.iterations, "burn_in": settings.burn_in,
                  "thin": settings.thin, "chains": settings.chains},
        seed=settings.seed,
        dose_quantile_99=float(np.quantile(data.x, 0.99)) if data.n else None,
        draws=_rel(paths, out),
    )
    log.info("%d draws per chain written to %s", settings.retained_per_chain, out)
    return 0


def load_fit(fit_dir):
    """Draws of all chains and the basis recorded by ``fit``."""
    fit_dir = Path(fit_dir)
    if fit_dir.is_file():
        fit_dir = fit_dir.parent
    manifest = read_manifest(fit_dir)
    parts = [read_draws(fit_dir / name, chain_id=k) for k, name in enumerate(manifest["draws"])]
    return PosteriorDraws.concatenate(parts), basis_from_dict(manifest["model"]), manifest


# ---------------------------------------------------------------------------
# risk


def parse_q_list(text: str) -> list:
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    if not items:
        raise UsageError("at least one benchmark risk q is required")
    try:
        qs = [float(t) for t in items]
    except ValueError:
        raise UsageError(f"could not parse q list {text!r}") from None
    for q in qs:
        if not 0 < q < 1:
            raise UsageError(f"benchmark risk must lie in (0, 1), got {q}")
    return qs


def cmd_risk(args) -> int:
    qs = parse_q_list(args.q)
    draws, basis, manifest = load_fit(args.fit)
    grid_max = args.grid_max
    if grid_max is None:
        grid_max = manifest.get("dose_quantile_99") or basis.dose_max
    grid = np.linspace(0.0, float(grid_max), args.grid_size)
    curve = posterior_risk_curve(draws, basis, RiskQuery(args.threshold, qs[0], grid))
    out = _out_dir(args.out)
    curve_path = out / "risk_curve.csv"
    write_table(curve_path, ["x", "mean", "lo95", "hi95"], [curve.x, curve.mean, curve.lo95, curve.hi95])
    rows, missing = [], {}
    for q in qs:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                s = posterior_bmd(draws, basis, q, args.threshold)
        except DegenerateModelError as exc:
            log.warning("q=%g: %s; writing an empty row", q, exc)
            missing[repr(q)] = len(draws)
            rows.append((q, np.nan, np.nan, np.nan, np.nan))
            continue
        if s.n_missing:
            log.warning("q=%g: %d draws never reach the benchmark risk", q, s.n_missing)
        missing[repr(q)] = s.n_missing
        rows.append((q, s.mean, s.lo, s.hi, s.bmdl))
    bmd_path = out / "bmd.csv"
    cols = list(zip(*rows))
    write_table(bmd_path, ["q", "bmd_mean", "bmd_lo", "bmd_hi", "bmdl"],
                [np.asarray(c, dtype=float) for c in cols])
    write_manifest(out, "risk", fit=str(args.fit), draws_used=len(draws), threshold=args.threshold,
                   q=qs, grid_max=float(grid_max), grid_size=args.grid_size,
                   bmd_undefined_draws=missing, outputs=_rel([curve_path, bmd_path], out))
    return 0


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    draws, basis, manifest = load_fit(args.fit)
    data = read_dataset(args.data, max_y=args.max_y)
    grid = None
    if args.grid_max is not None:
        grid = np.linspace(0.0, args.grid_max, args.grid_size)
    res = run_ppc(draws, basis, data, args.threshold, n_replicates=args.replicates,
                  bandwidth=args.bandwidth, grid=grid, seed=args.seed)
    out = _out_dir(args.out)
    ppc_path = out / "ppc.csv"
    header = ["x", "observed"] + [f"rep_{r + 1}" for r in range(res.replicate_curves.shape[0])]
    write_table(ppc_path, header, [res.grid, res.observed_curve, *res.replicate_curves])
    rows = geweke_report(draws, basis, args.threshold, data=data)
    diag_path = out / "diagnostics.txt"
    with diag_path.open("w") as fh:
        fh.write("chain\tparameter\tgeweke_z\tstatus\n")
        for r in rows:
            fh.write(f"{r.chain}\t{r.name}\t{r.z:.4f}\t{r.status}\n")
        passed = sum(r.passed for r in rows)
        fh.write(f"# {passed}/{len(rows)} monitored scalars with |z| < {GEWEKE_THRESHOLD:g}\n")
        fh.write(f"# ppc tail fraction: {res.tail_flag:.4f}\n")
    write_manifest(out, "check", fit=str(args.fit), data=str(args.data),
                   data_digest=file_digest(args.data), threshold=args.threshold,
                   replicates=args.replicates, seed=args.seed, bandwidth=args.bandwidth,
                   tail_flag=res.tail_flag, outputs=_rel([ppc_path, diag_path], out))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comire", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scenario dataset")
    p.add_argument("--scenario", type=int, required=True, help="1, 2 or 3")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--grid-max", type=float, default=100.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the Gibbs sampler on a dataset")
    p.add_argument("data", help="CSV with columns x,y")
    p.add_argument("--config", help="JSON file of model and chain settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--max-y", dest="max_y", type=float, help="drop responses above this value")
    p.add_argument("--workers", type=int, default=1, help="processes used for multiple chains")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("risk", help="additional risk curve and benchmark doses")
    p.add_argument("fit", help="output directory of `fit`")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--q", default=DEFAULT_Q, help="comma-separated benchmark risks")
    p.add_argument("--grid-max", dest="grid_max", type=float,
                   help="largest dose on the curve grid (default: 99th dose percentile)")
    p.add_argument("--grid-size", dest="grid_size", type=int, default=101)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("check", help="posterior predictive check and Geweke diagnostics")
    p.add_argument("fit", help="output directory of `fit`")
    p.add_argument("data", help="CSV with columns x,y")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-y", dest="max_y", type=float)
    p.add_argument("--grid-max", dest="grid_max", type=float)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"comire: error: {exc}", file=sys.stderr)
        return 2
    except (ComireError, OSError) as exc:
        print(f"comire: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
