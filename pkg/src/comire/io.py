"""File formats: dataset CSV, JSON config/manifest, delimited result tables."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np

from . import __version__
from .basis import SplineBasis, build_basis
from .errors import ConfigurationError, DataError
from .gibbs import ChainSettings
from .model import Dataset, ModelConfig

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# keys accepted in a config file, with their meaning
CONFIG_KEYS = {
    "H": "number of low-dose mixture components",
    "inner_knots": "number of equally spaced inner I-spline knots",
    "degree": "I-spline degree",
    "dose_max": "right boundary knot (default: largest observed dose)",
    "alpha": "Dirichlet concentration for nu0 (scalar or list; default 1/H)",
    "eta": "Dirichlet concentration for w (scalar or list; default 1/J)",
    "a_tau": "gamma shape for precisions",
    "b_tau": "gamma rate for precisions",
    "prior_mean": "prior mean of the locations (default: mean of y)",
    "kappa": "prior variance of the locations",
    "iterations": "total Gibbs iterations per chain",
    "burn_in": "iterations discarded before retaining draws",
    "thin": "keep every thin-th iteration after burn-in",
    "chains": "number of independent chains",
    "seed": "base random seed",
}

DEFAULT_CONFIG = {
    "H": 10,
    "inner_knots": 7,
    "degree": 3,
    "dose_max": None,
    "alpha": None,
    "eta": None,
    "a_tau": 2.0,
    "b_tau": 2.0,
    "prior_mean": None,
    "kappa": 10.0,
    "iterations": 5000,
    "burn_in": 2000,
    "thin": 5,
    "chains": 1,
    "seed": 0,
}


def fmt(v) -> str:
    """Round-trip float formatting; NaN written as an empty cell."""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


# ---------------------------------------------------------------------------
# datasets


def read_dataset(path, max_y: float | None = None) -> Dataset:
    """Read a CSV with header columns ``x`` and ``y``.

    Extra columns are ignored with a warning.  Errors name the offending line
    of the file (the header is line 1).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        missing = [c for c in ("x", "y") if c not in header]
        if missing:
            raise DataError(f"{path}: missing required column(s) {', '.join(missing)}")
        extra = [c for c in header if c not in ("x", "y")]
        if extra:
            log.warning("%s: ignoring extra column(s) %s", path, ", ".join(extra))
        ix, iy = header.index("x"), header.index("y")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise DataError(f"{path}, line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                x, y = float(row[ix]), float(row[iy])
            except ValueError:
                raise DataError(f"{path}, line {lineno}: non-numeric x or y ({row[ix]!r}, {row[iy]!r})") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DataError(f"{path}, line {lineno}: missing or non-finite value")
            if x < 0:
                raise DataError(f"{path}, line {lineno}: negative dose {x}")
            xs.append(x)
            ys.append(y)
    x, y = np.array(xs), np.array(ys)
    if max_y is not None:
        keep = y <= max_y
        if not keep.all():
            log.info("dropping %d responses above %g", int((~keep).sum()), max_y)
        x, y = x[keep], y[keep]
    return Dataset(x, y)


def write_dataset(path, data: Dataset) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in zip(data.x, data.y):
            writer.writerow([fmt(x), fmt(y)])


def write_table(path, header, columns) -> None:
    """Write equal-length columns under ``header`` as CSV."""
    cols = [np.asarray(c) for c in columns]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(cols[0])):
            writer.writerow([fmt(c[i]) if np.issubdtype(c.dtype, np.floating) else str(c[i])
                             for c in cols])


def read_table(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    return {h: np.array([float(r[k]) if r[k] != "" else np.nan for r in rows])
            for k, h in enumerate(header)}


# ---------------------------------------------------------------------------
# configuration


def load_config(path=None) -> dict:
    """Flat JSON object of config keys; unknown keys are rejected."""
    cfg = dict(DEFAULT_CONFIG)
    if path is None:
        return cfg
    with Path(path).open() as fh:
        try:
            user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(user, dict):
        raise ConfigurationError(f"{path}: config must be a flat JSON object")
    unknown = sorted(set(user) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigurationError(f"{path}: unknown config key(s) {', '.join(unknown)}")
    cfg.update(user)
    return cfg


def _vector(value, size, default):
    if value is None:
        return np.full(size, default)
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(size, float(arr[0]))
    if arr.size != size:
        raise ConfigurationError(f"expected {size} values, got {arr.size}")
    return arr


def model_config_from(cfg: dict, data: Dataset) -> ModelConfig:
    dose_max = cfg["dose_max"]
    if dose_max is None:
        if data.n == 0:
            raise ConfigurationError("dose_max must be set when the dataset is empty")
        dose_max = float(data.x.max())
    basis = build_basis(int(cfg["inner_knots"]), (0.0, float(dose_max)), int(cfg["degree"]))
    H = int(cfg["H"])
    prior_mean = cfg["prior_mean"]
    if prior_mean is None:
        if data.n == 0:
            raise ConfigurationError("prior_mean must be set when the dataset is empty")
        prior_mean = float(data.y.mean())
    return ModelConfig(
        H=H, basis=basis,
        alpha=_vector(cfg["alpha"], H, 1.0 / H),
        eta=_vector(cfg["eta"], basis.J, 1.0 / basis.J),
        a_tau=float(cfg["a_tau"]), b_tau=float(cfg["b_tau"]),
        prior_mean=float(prior_mean), kappa=float(cfg["kappa"]),
    )


def chain_settings_from(cfg: dict) -> ChainSettings:
    return ChainSettings(iterations=int(cfg["iterations"]), burn_in=int(cfg["burn_in"]),
                         thin=int(cfg["thin"]), chains=int(cfg["chains"]), seed=int(cfg["seed"]))


def model_config_to_dict(config: ModelConfig) -> dict:
    b = config.basis
    return {
        "H": config.H,
        "J": b.J,
        "degree": b.degree,
        "inner_knots": list(b.inner_knots),
        "boundary_knots": list(b.boundary_knots),
        "alpha": config.alpha.tolist(),
        "eta": config.eta.tolist(),
        "a_tau": config.a_tau,
        "b_tau": config.b_tau,
        "prior_mean": config.prior_mean,
        "kappa": config.kappa,
    }


def basis_from_dict(d: dict) -> SplineBasis:
    return SplineBasis(degree=int(d["degree"]), inner_knots=tuple(d["inner_knots"]),
                       boundary_knots=tuple(d["boundary_knots"]))


# ---------------------------------------------------------------------------
# manifests


def write_manifest(directory, command: str, **fields) -> Path:
    manifest = {"command": command, "software_version": __version__}
    manifest.update(fields)
    path = Path(directory) / MANIFEST_NAME
    with path.open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise ConfigurationError(f"no {MANIFEST_NAME} in {directory}")
    with path.open() as fh:
        return json.load(fh)
