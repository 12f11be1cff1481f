#!/usr/bin/env python3
"""Render the two study figures from the experiment CSV artifacts.

Reads ``rates.csv`` / ``cost_error.csv`` plus the ``summary.json`` written
next to them, and renders:

* the variance-decay figure: one panel per time level, log2 increment
  variance against the space level, with the fitted rate line overlaid;
* the cost-vs-error figure: log-log cost against RMSE for both methods with
  the fitted slopes annotated.

All slopes and intercepts are read from ``summary.json`` — nothing is
refitted here.  Inputs are never modified; re-rendering is idempotent.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

RATES_COLUMNS = {"alpha_x", "alpha_t", "n_samples", "var_prior", "var_chain", "cost_units"}
COST_ERROR_COLUMNS = {"method", "eps_or_level", "replicate", "estimate", "sq_error", "cost_units", "wall_s", "seed"}


class SchemaError(ValueError):
    pass


def read_csv(path: Path, required: set[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or [])
        missing = required - cols
        if missing:
            raise SchemaError(f"{path}: missing column(s) {sorted(missing)}")
        return list(reader)


def read_summary(csv_path: Path) -> dict:
    summary_path = csv_path.parent / "summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(f"expected {summary_path} next to {csv_path.name}")
    return json.loads(summary_path.read_text())


def plot_rates(rates_csv: Path, out_dir: Path) -> Path:
    rows = read_csv(rates_csv, RATES_COLUMNS)
    summary = read_summary(rates_csv)
    grid = {(int(r["alpha_x"]), int(r["alpha_t"])): float(r["var_prior"]) for r in rows}
    t_levels = sorted({at for _, at in grid})
    x_levels = sorted({ax for ax, _ in grid})
    bx, bt = summary["beta_x"], summary["beta_t"]

    fig, axes = plt.subplots(1, len(t_levels), figsize=(2.6 * len(t_levels), 3.2), sharey=True)
    if len(t_levels) == 1:
        axes = [axes]
    for ax_plot, at in zip(axes, t_levels):
        xs = [ax for ax in x_levels if (ax, at) in grid]
        ys = [math.log2(grid[(ax, at)]) for ax in xs]
        ax_plot.plot(xs, ys, "o", color="tab:blue")
        if at == 0 and len(xs) >= 2:
            # fitted space rate, anchored at the first positive-level point
            x0, y0 = xs[1], ys[1]
            line_x = [xs[1], xs[-1]]
            ax_plot.plot(line_x, [y0 - bx * (x - x0) for x in line_x], "-", color="tab:red",
                         label=rf"slope $-\hat\beta_x = {-bx:.2f}$")
            ax_plot.legend(fontsize=8)
        ax_plot.set_title(rf"$\alpha_t = {at}$", fontsize=9)
        ax_plot.set_xlabel(r"$\alpha_x$")
    axes[0].set_ylabel(r"$\log_2$ increment variance")
    fig.suptitle(rf"Increment variance decay  ($\hat\beta_x={bx:.2f}$, $\hat\beta_t={bt:.2f}$)", fontsize=10)
    fig.tight_layout()
    out = out_dir / "rates.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_cost_error(cost_csv: Path, out_dir: Path) -> Path:
    read_csv(cost_csv, COST_ERROR_COLUMNS)  # schema check on the raw rows
    summary = read_summary(cost_csv)
    fig, ax = plt.subplots(figsize=(4.5, 3.6))
    colors = {"mimcmc": "tab:blue", "mcmc": "tab:orange"}
    for method in ("mimcmc", "mcmc"):
        entry = summary[method]
        rmse, cost = entry["rmse"], entry["mean_cost"]
        slope = entry.get("slope")
        label = method.upper() if slope is None else f"{method.upper()} (slope {slope:.2f})"
        ax.loglog(rmse, cost, "o", color=colors[method], label=label)
        if slope is not None:
            lo, hi = min(rmse), max(rmse)
            ax.loglog([lo, hi], [10 ** (entry["intercept"] + slope * math.log10(r)) for r in (lo, hi)],
                      "-", color=colors[method], alpha=0.7)
    ax.set_xlabel("RMSE")
    ax.set_ylabel("cost (work units)")
    ax.legend(fontsize=8)
    ax.set_title("Cost vs error", fontsize=10)
    fig.tight_layout()
    out = out_dir / "cost_error.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description="render study figures from experiment CSVs")
    p.add_argument("--rates", type=Path, help="path to rates.csv (summary.json must sit next to it)")
    p.add_argument("--cost-error", type=Path, help="path to cost_error.csv (summary.json next to it)")
    p.add_argument("--out", type=Path, required=True, help="output directory for the images")
    args = p.parse_args(argv)
    if args.rates is None and args.cost_error is None:
        p.error("nothing to do: pass --rates and/or --cost-error")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.rates is not None:
        print(plot_rates(args.rates, args.out))
    if args.cost_error is not None:
        print(plot_cost_error(args.cost_error, args.out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
