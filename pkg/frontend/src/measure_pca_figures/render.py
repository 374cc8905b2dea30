"""Render convergence, disparity and PCA-scatter figures from result CSVs.

Three figure kinds, matching the CSV files the measure-pca CLI emits:

* ``rate_loglog`` - one log-log curve per embedding from ``sweep_summary.csv``
  (or ``rm_decay.csv``), plus a dashed reference line of a given slope
  anchored at the first point of the first curve.
* ``disparity``   - mean +/- std band per embedding from ``stability.csv``.
* ``pca_grid``    - one scatter panel per (embedding, subsample size) from
  ``scores_<embedding>_m<m>_k<k>.csv`` files.

Rendering never modifies its inputs, and the layout is a deterministic
function of the data (fixed axes from data extents, no jitter).
"""

from __future__ import annotations

import argparse
import csv
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SCORE_NAME = re.compile(r"scores_(?P<kind>[a-z]+)_m(?P<m>\d+)_k(?P<k>\d+)\.csv$")

KINDS = ("rate_loglog", "disparity", "pca_grid")


class HeaderMismatchError(ValueError):
    """An input CSV does not carry the documented header."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    reference_slope: float | None = None
    metric: str = "hs_error"
    minmax: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def read_table(path: str | Path, required: list[str]) -> dict[str, list[str]]:
    """Read a CSV into columns, checking every required column is present."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatchError(f"{path}: empty file, expected columns {required}") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise HeaderMismatchError(
                f"{path}: missing column(s) {', '.join(missing)} (found {', '.join(header)})"
            )
        cols: dict[str, list[str]] = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(value)
    return cols


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        raise ValueError("min-max scaling is undefined for constant values")
    return (values - lo) / (hi - lo)


def _render_rate_loglog(spec: FigureSpec, ax) -> None:
    # accepts sweep_summary.csv (mean_<metric> columns) or rm_decay.csv
    path = spec.inputs[0]
    header = Path(path).read_text(encoding="utf-8").splitlines()[0].split(",") if Path(path).exists() else []
    if "mc_estimate" in header:
        value_col = "mc_estimate"
        x_col = "m"
        table = read_table(path, ["embedding", x_col, value_col])
    else:
        value_col = f"mean_{spec.metric}"
        x_col = "swept_value"
        table = read_table(path, ["embedding", x_col, value_col])
    kinds = list(dict.fromkeys(table["embedding"]))
    first_anchor = None
    for kind in kinds:
        xs = np.array(
            [float(x) for x, k in zip(table[x_col], table["embedding"]) if k == kind]
        )
        ys = np.array(
            [float(y) for y, k in zip(table[value_col], table["embedding"]) if k == kind]
        )
        order = np.argsort(xs)
        xs, ys = xs[order], ys[order]
        if spec.minmax:
            ys = _minmax(ys)
        ax.plot(xs, ys, marker="o", label=kind)
        if first_anchor is None:
            first_anchor = (xs, ys[0])
    slope = -0.5 if spec.reference_slope is None else spec.reference_slope
    xs, y0 = first_anchor
    ref = y0 * (xs / xs[0]) ** slope
    ax.plot(xs, ref, linestyle="--", color="black", label=f"slope {slope:g}")
    if not spec.minmax:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(x_col)
    ax.set_ylabel(value_col)
    ax.legend()


def _render_disparity(spec: FigureSpec, ax) -> None:
    table = read_table(spec.inputs[0], ["embedding", "m", "mean_disparity", "std_disparity"])
    kinds = list(dict.fromkeys(table["embedding"]))
    for kind in kinds:
        rows = [
            (float(m), float(mu), float(sd))
            for m, mu, sd, k in zip(
                table["m"], table["mean_disparity"], table["std_disparity"], table["embedding"]
            )
            if k == kind
        ]
        rows.sort()
        xs = np.array([r[0] for r in rows])
        means = np.array([r[1] for r in rows])
        stds = np.array([r[2] for r in rows])
        line = ax.plot(xs, means, marker="o", label=kind)[0]
        ax.fill_between(xs, means - stds, means + stds, alpha=0.25, color=line.get_color())
    ax.set_xscale("log")
    ax.set_xlabel("subsample size m")
    ax.set_ylabel("mean Procrustes disparity")
    ax.legend()


def _render_pca_grid(spec: FigureSpec, fig) -> None:
    panels = []
    for path in spec.inputs:
        match = _SCORE_NAME.search(Path(path).name)
        if not match:
            raise ValueError(
                f"{path}: pca_grid inputs must be named scores_<embedding>_m<m>_k<k>.csv"
            )
        table = read_table(path, ["measure_id", "pc1", "pc2"])
        panels.append(
            (
                match["kind"],
                int(match["m"]),
                np.array([float(v) for v in table["pc1"]]),
                np.array([float(v) for v in table["pc2"]]),
            )
        )
    kinds = sorted({p[0] for p in panels})
    sizes = sorted({p[1] for p in panels})
    axes = fig.subplots(len(kinds), len(sizes), squeeze=False)
    for kind, m, pc1, pc2 in sorted(panels, key=lambda p: (p[0], p[1])):
        ax = axes[kinds.index(kind)][sizes.index(m)]
        ax.scatter(pc1, pc2, s=12)
        ax.set_title(f"{kind}, m={m}", fontsize=9)
    for row in axes:
        for ax in row:
            ax.tick_params(labelsize=7)


def render(spec: FigureSpec):
    """Render the figure described by ``spec`` and write it to ``spec.output``.

    Returns the matplotlib figure (useful for inspection in tests).
    """
    if spec.kind == "pca_grid":
        fig = plt.figure(figsize=(9, 6))
        _render_pca_grid(spec, fig)
    else:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        if spec.kind == "rate_loglog":
            _render_rate_loglog(spec, ax)
        else:
            _render_disparity(spec, ax)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    return fig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render figures from measure-pca CSV outputs",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--slope", type=float, default=None, help="reference slope (rate_loglog)")
    parser.add_argument(
        "--metric",
        choices=("hs_error", "excess_risk"),
        default="hs_error",
        help="summary metric for rate_loglog",
    )
    parser.add_argument(
        "--minmax",
        action="store_true",
        help="normalize curves to [0, 1] (paper-style axes; disables log scale)",
    )
    args = parser.parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        output=args.out,
        reference_slope=args.slope,
        metric=args.metric,
        minmax=args.minmax,
    )
    try:
        render(spec)
    except (HeaderMismatchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
