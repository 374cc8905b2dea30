"""Configuration parsing, CLI commands and deterministic CSV/JSON output.

Config files are flat ``key = value`` text with ``#`` comments and dotted
keys for nested settings (e.g. ``model.tau_b``). Unknown keys are rejected.
Every command writes a ``manifest.json`` echoing the resolved configuration,
the seed and the stream-derivation scheme, which is sufficient to reproduce
the result files byte for byte (the manifest timestamp is the only
non-deterministic field).

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .embeddings import (
    KINDS,
    KME,
    LOT,
    SW,
    EmbeddingConfig,
    make_quantile_grid,
    make_sphere_directions,
)
from .experiments import (
    RmDecayConfig,
    SweepConfig,
    make_cluster_measures,
    run_rm_decay,
    run_stability,
    run_sweep,
)
from .hilbert import empirical_covariance, pca_scores, spectral_decompose, top_q_projector
from .measures import PointCloudFormatError, RandomMeasureModel, ingest_point_cloud, uniform_measure
from .embeddings import embed
from .rng import RngStream

STREAM_DERIVATION = (
    "streams are Philox keyed by (seed, stream_id); child stream_id = first 8 "
    "bytes of sha256('<parent_id>|<role>|<indices...>'); normals via Box-Muller"
)


class ConfigError(ValueError):
    """Invalid or unknown configuration (exit code 2)."""


class DataError(ValueError):
    """Missing or malformed input data (exit code 3)."""


def _fmt(x: float) -> str:
    """Round-trip decimal formatting (17 significant digits)."""
    return format(float(x), ".17g")


def parse_config_file(path: str | Path) -> dict:
    """Read flat ``key = value`` pairs; '#' starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def _coerce(schema: dict, raw: dict) -> dict:
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    out = {}
    for key, (kind, default) in schema.items():
        if key not in raw:
            out[key] = default
            continue
        text = raw[key]
        try:
            if kind == "int":
                out[key] = int(text)
            elif kind == "float":
                out[key] = float(text)
            elif kind == "bool":
                if text.lower() not in ("true", "false"):
                    raise ValueError
                out[key] = text.lower() == "true"
            elif kind == "str":
                out[key] = text
            elif kind == "int_list":
                out[key] = tuple(int(v) for v in text.split(",") if v.strip())
            elif kind == "str_list":
                out[key] = tuple(v.strip() for v in text.split(",") if v.strip())
            else:  # pragma: no cover
                raise AssertionError(kind)
        except ValueError:
            raise ConfigError(f"config key {key!r}: cannot parse {text!r} as {kind}") from None
    return out


def _check_kinds(kinds) -> tuple:
    bad = [k for k in kinds if k not in KINDS]
    if bad or not kinds:
        raise ConfigError(f"embeddings must be a nonempty subset of {','.join(KINDS)}")
    return tuple(kinds)


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, (str, int)) else _fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_manifest(out_dir: Path, command: str, config: dict, grids: dict) -> None:
    manifest = {
        "command": command,
        "artifact_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": config.get("seed"),
        "centering": True,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in config.items()},
        "grids": grids,
        "stream_derivation": STREAM_DERIVATION,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_SWEEP_SCHEMA = {
    "regime": ("str", "dense"),
    "model.d": ("int", 2),
    "model.tau_b": ("float", None),
    "model.tau_sigma": ("float", None),
    "model.sigma_floor": ("float", 1e-3),
    "embeddings": ("str_list", KINDS),
    "n_list": ("int_list", (25, 50, 100, 200, 400)),
    "m_list": ("int_list", (10, 25, 50, 100, 250, 500)),
    "fixed_m": ("int", 500),
    "fixed_n": ("int", 200),
    "m0": ("int", None),
    "T": ("int", None),
    "p": ("int", None),
    "q": ("int", 1),
    "trials": ("int", 10),
    "seed": ("int", 0),
}

# Desk-scale fallbacks per regime for keys left unset.
_SWEEP_REGIME_DEFAULTS = {
    "dense": {"model.tau_b": 1.0, "model.tau_sigma": 0.2, "m0": 200, "T": 10, "p": 10},
    "sparse": {"model.tau_b": 0.3, "model.tau_sigma": 0.06, "m0": 100, "T": 10, "p": 10},
}


def _sweep_config(raw: dict) -> tuple[SweepConfig, dict]:
    cfg = _coerce(_SWEEP_SCHEMA, raw)
    if cfg["regime"] not in ("dense", "sparse"):
        raise ConfigError("regime must be 'dense' or 'sparse'")
    for key, value in _SWEEP_REGIME_DEFAULTS[cfg["regime"]].items():
        if cfg[key] is None:
            cfg[key] = value
    kinds = _check_kinds(cfg["embeddings"])
    model = RandomMeasureModel(
        d=cfg["model.d"],
        tau_b=cfg["model.tau_b"],
        tau_sigma=cfg["model.tau_sigma"],
        sigma_floor=cfg["model.sigma_floor"],
    )
    if cfg["regime"] == "dense":
        swept, fixed = cfg["n_list"], cfg["fixed_m"]
    else:
        swept, fixed = cfg["m_list"], cfg["fixed_n"]
    try:
        sweep = SweepConfig(
            regime=cfg["regime"],
            model=model,
            kinds=kinds,
            swept=swept,
            fixed=fixed,
            m0=cfg["m0"],
            T=cfg["T"],
            p=cfg["p"],
            q=cfg["q"],
            trials=cfg["trials"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return sweep, cfg


def cmd_sweep(config_path: str, out_dir: str) -> None:
    """Run a dense/sparse sweep and write raw/summary CSVs plus the manifest."""
    sweep, cfg = _sweep_config(parse_config_file(config_path))
    result = run_sweep(sweep)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "sweep_raw.csv",
        ["embedding", "swept_value", "trial", "hs_error", "excess_risk"],
        result.rows,
    )
    _write_csv(
        out / "sweep_summary.csv",
        [
            "embedding",
            "swept_value",
            "mean_hs_error",
            "std_hs_error",
            "mean_excess_risk",
            "std_excess_risk",
            "trials",
        ],
        result.summary(),
    )
    _write_manifest(
        out,
        "sweep",
        cfg,
        {"swept_parameter": "n" if sweep.regime == "dense" else "m", "swept_values": list(sweep.swept)},
    )


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------

_STABILITY_SCHEMA = {
    "synthetic": ("bool", False),
    "clusters.n_measures": ("int", 20),
    "clusters.points": ("int", 10_000),
    "clusters.d": ("int", 2),
    "clusters.k": ("int", 4),
    "clusters.center_scale": ("float", 3.0),
    "clusters.mean_jitter": ("float", 0.4),
    "clusters.sigma_jitter": ("float", 0.1),
    "embeddings": ("str_list", KINDS),
    "kernel": ("str", "rbf"),
    "bandwidth": ("float", 1.0),
    "reference_scale": ("float", 1.0),
    "m_list": ("int_list", (10, 50, 200, 1000)),
    "N": ("int", 20),
    "m0": ("int", 100),
    "T": ("int", 10),
    "p": ("int", 10),
    "seed": ("int", 0),
}


def _load_data_dir(data_dir: str | None) -> list:
    if data_dir is None:
        raise DataError("this command requires --data <dir> with point-cloud CSVs")
    root = Path(data_dir)
    if not root.is_dir():
        raise DataError(f"data directory not found: {root}")
    files = sorted(root.glob("*.csv"))
    if len(files) < 2:
        raise DataError(f"need at least 2 point-cloud CSVs in {root}")
    measures = []
    for f in files:
        try:
            measures.append(ingest_point_cloud(f))
        except PointCloudFormatError as exc:
            raise DataError(str(exc)) from None
    dims = {mu.dim for mu in measures}
    if len(dims) != 1:
        raise DataError(f"point clouds disagree on dimension: {sorted(dims)}")
    return measures


def _embedding_configs(kinds, d, m0, T, p, kernel, bandwidth, reference_scale, seed):
    stream = RngStream(seed).child("discretization")
    ref = uniform_measure(reference_scale * stream.child("reference").standard_normal((m0, d)))
    dirs = make_sphere_directions(p, d, stream.child("directions"))
    grid = make_quantile_grid(T)
    out = {}
    for kind in kinds:
        if kind == KME:
            out[kind] = EmbeddingConfig(KME, reference=ref, kernel=kernel, bandwidth=bandwidth)
        elif kind == LOT:
            out[kind] = EmbeddingConfig(LOT, reference=ref)
        else:
            out[kind] = EmbeddingConfig(SW, directions=dirs, grid=grid)
    return out


def cmd_stability(config_path: str, out_dir: str, data_dir: str | None = None) -> None:
    """Run the subsampling-stability protocol on CSV clouds or synthetic clusters."""
    cfg = _coerce(_STABILITY_SCHEMA, parse_config_file(config_path))
    kinds = _check_kinds(cfg["embeddings"])
    if cfg["kernel"] not in ("rbf", "linear"):
        raise ConfigError("kernel must be 'rbf' or 'linear'")
    if cfg["N"] < 2:
        raise ConfigError("N must be >= 2")
    if cfg["synthetic"]:
        measures = make_cluster_measures(
            n_measures=cfg["clusters.n_measures"],
            points_per_measure=cfg["clusters.points"],
            d=cfg["clusters.d"],
            n_clusters=cfg["clusters.k"],
            center_scale=cfg["clusters.center_scale"],
            mean_jitter=cfg["clusters.mean_jitter"],
            sigma_jitter=cfg["clusters.sigma_jitter"],
            seed=cfg["seed"],
        )
    else:
        measures = _load_data_dir(data_dir)
    smallest = min(mu.num_points for mu in measures)
    if max(cfg["m_list"]) > smallest:
        raise DataError(
            f"subsample size {max(cfg['m_list'])} exceeds smallest measure support {smallest}"
        )
    d = measures[0].dim
    configs = _embedding_configs(
        kinds, d, cfg["m0"], cfg["T"], cfg["p"], cfg["kernel"], cfg["bandwidth"],
        cfg["reference_scale"], cfg["seed"],
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for kind in kinds:
        res = run_stability(measures, cfg["m_list"], cfg["N"], configs[kind], q=2, seed=cfg["seed"])
        for m, mean_d, std_d, n_reps in res.rows:
            rows.append((kind, m, mean_d, std_d, n_reps))
        for (m, k), y in res.scores.items():
            _write_csv(
                out / f"scores_{kind}_m{m}_k{k}.csv",
                ["measure_id", "pc1", "pc2"],
                [(i, y[i, 0], y[i, 1]) for i in range(y.shape[0])],
            )
    _write_csv(
        out / "stability.csv",
        ["embedding", "m", "mean_disparity", "std_disparity", "N"],
        rows,
    )
    _write_manifest(out, "stability", cfg, {"m_list": list(cfg["m_list"])})


# ---------------------------------------------------------------------------
# pca
# ---------------------------------------------------------------------------

_PCA_SCHEMA = {
    "embeddings": ("str_list", KINDS),
    "kernel": ("str", "rbf"),
    "bandwidth": ("float", 1.0),
    "reference_scale": ("float", 1.0),
    "m0": ("int", 100),
    "T": ("int", 10),
    "p": ("int", 10),
    "seed": ("int", 0),
}


def cmd_pca(config_path: str, out_dir: str, data_dir: str | None = None) -> None:
    """Embed the point clouds, run centered PCA, write 2D scores and spectra."""
    cfg = _coerce(_PCA_SCHEMA, parse_config_file(config_path))
    kinds = _check_kinds(cfg["embeddings"])
    if cfg["kernel"] not in ("rbf", "linear"):
        raise ConfigError("kernel must be 'rbf' or 'linear'")
    measures = _load_data_dir(data_dir)
    d = measures[0].dim
    configs = _embedding_configs(
        kinds, d, cfg["m0"], cfg["T"], cfg["p"], cfg["kernel"], cfg["bandwidth"],
        cfg["reference_scale"], cfg["seed"],
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    score_rows = []
    eig_rows = []
    for kind in kinds:
        vecs = [embed(mu, configs[kind]) for mu in measures]
        cov = empirical_covariance(vecs, center=True)
        dec = spectral_decompose(cov)
        proj = top_q_projector(dec, 2)
        scores = pca_scores(vecs, proj, center=True)
        for i in range(scores.shape[0]):
            score_rows.append((kind, i, scores[i, 0], scores[i, 1]))
        for rank, lam in enumerate(dec.eigenvalues, start=1):
            eig_rows.append((kind, rank, lam))
    _write_csv(out / "pca_scores.csv", ["embedding", "measure_id", "pc1", "pc2"], score_rows)
    _write_csv(out / "eigenvalues.csv", ["embedding", "rank", "eigenvalue"], eig_rows)
    _write_manifest(out, "pca", cfg, {})


# ---------------------------------------------------------------------------
# oracle-check
# ---------------------------------------------------------------------------

_ORACLE_SCHEMA = {
    "model.d": ("int", 2),
    "model.tau_b": ("float", 1.0),
    "model.tau_sigma": ("float", 0.2),
    "model.sigma_floor": ("float", 1e-3),
    "embeddings": ("str_list", KINDS),
    "m_list": ("int_list", (50, 100, 200, 400, 800, 1600)),
    "trials": ("int", 16),
    "m0": ("int", 500),
    "T": ("int", 20),
    "p": ("int", 20),
    "lot_reference": ("str", "match"),
    "seed": ("int", 0),
}


def cmd_oracle_check(config_path: str, out_dir: str) -> None:
    """Estimate the sampling-error decay r_m^2 per embedding and fit slopes."""
    cfg = _coerce(_ORACLE_SCHEMA, parse_config_file(config_path))
    kinds = _check_kinds(cfg["embeddings"])
    model = RandomMeasureModel(
        d=cfg["model.d"],
        tau_b=cfg["model.tau_b"],
        tau_sigma=cfg["model.tau_sigma"],
        sigma_floor=cfg["model.sigma_floor"],
    )
    try:
        rm_cfg = RmDecayConfig(
            model=model,
            kinds=kinds,
            m_list=cfg["m_list"],
            trials=cfg["trials"],
            m0=cfg["m0"],
            T=cfg["T"],
            p=cfg["p"],
            lot_reference=cfg["lot_reference"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows, slopes = run_rm_decay(rm_cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "rm_decay.csv", ["embedding", "m", "mc_estimate", "trials"], rows)
    _write_csv(out / "rm_slopes.csv", ["embedding", "slope"], [(k, slopes[k]) for k in kinds])
    _write_manifest(out, "oracle-check", cfg, {"m_list": list(cfg["m_list"])})


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measure-pca",
        description="PCA of probability measures via Hilbert-space embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sweep", "stability", "pca", "oracle-check"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="flat key=value config file")
        cmd.add_argument("--data", default=None, help="directory of point-cloud CSVs")
        cmd.add_argument("--out", default=".", help="output directory (default: cwd)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            cmd_sweep(args.config, args.out)
        elif args.command == "stability":
            cmd_stability(args.config, args.out, args.data)
        elif args.command == "pca":
            cmd_pca(args.config, args.out, args.data)
        else:
            cmd_oracle_check(args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
