"""CSV-driven figure rendering.

Two table shapes come in: the long experiment format with columns
(experiment, method, sweep, trial, metric, value), and the per-iterate
trace format whose first column is `iter`. Histogram inputs carry
(family, bin_left, bin_right, count). Everything else about a figure is
derived from the rows, so rendering is a pure function of the CSV bytes
and the spec; saved files embed no timestamps.
"""

import csv
import math
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.ticker import MaxNLocator

LONG_COLUMNS = ("experiment", "method", "sweep", "trial", "metric", "value")
HIST_COLUMNS = ("family", "bin_left", "bin_right", "count")
KINDS = ("convergence", "power", "antennas", "hist", "outage")

RATE_LABEL = "sum secrecy rate (bit/s/Hz)"


class PlotError(Exception):
    """Anything that should stop rendering with a message."""


class SchemaError(PlotError):
    pass


class NoDataError(PlotError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: kind, input CSV path(s), output path, labels.

    The hist kind takes two inputs, the histogram table first and a
    long-format table carrying the certified rate second; every other
    kind takes one.
    """

    kind: str
    inputs: tuple
    out: str
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {', '.join(KINDS)}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


# -- readers ------------------------------------------------------------------


def _open_rows(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            return reader.fieldnames, list(reader)
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from None


def _require(path, names, required):
    if names is None:
        raise NoDataError(f"no data in {path}")
    for col in required:
        if col not in names:
            raise SchemaError(f"{path} is missing column {col!r}")


def read_long_table(path):
    """Typed rows (experiment, method, sweep, trial, metric, value)."""
    names, raw = _open_rows(path)
    _require(path, names, LONG_COLUMNS)
    if not raw:
        raise NoDataError(f"no data in {path}")
    rows = []
    for k, row in enumerate(raw):
        try:
            rows.append((row["experiment"], row["method"],
                         float(row["sweep"]), int(row["trial"]),
                         row["metric"], float(row["value"])))
        except (TypeError, ValueError):
            raise SchemaError(f"{path} row {k + 2}: sweep, trial and value "
                              "must be numeric") from None
    return rows


def read_hist_table(path):
    names, raw = _open_rows(path)
    _require(path, names, HIST_COLUMNS)
    if not raw:
        raise NoDataError(f"no data in {path}")
    rows = []
    for k, row in enumerate(raw):
        try:
            rows.append((row["family"], float(row["bin_left"]),
                         float(row["bin_right"]), float(row["count"])))
        except (TypeError, ValueError):
            raise SchemaError(f"{path} row {k + 2}: bin edges and count "
                              "must be numeric") from None
    return rows


def _metric_rows(path, rows, metric):
    keep = [r for r in rows if r[4] == metric]
    if not keep:
        raise SchemaError(f"{path} has no {metric!r} metric rows")
    return keep


# -- per-kind drawing ---------------------------------------------------------


def _mean_series(rows):
    """sweep -> mean value, preserving sweep order."""
    acc = {}
    for r in rows:
        acc.setdefault(r[2], []).append(r[5])
    xs = sorted(acc)
    return xs, [float(np.mean(acc[x])) for x in xs]


def _draw_convergence(spec, ax):
    path = spec.inputs[0]
    names, raw = _open_rows(path)
    series = {}
    if names is not None and "iter" in names:
        # per-iterate trace file: one line per value column
        if not raw:
            raise NoDataError(f"no data in {path}")
        value_cols = [c for c in names if c != "iter"]
        if not value_cols:
            raise SchemaError(f"{path} has no value columns beside 'iter'")
        try:
            xs = [float(r["iter"]) for r in raw]
            for col in value_cols:
                series[col] = (xs, [float(r[col]) for r in raw])
        except (TypeError, ValueError):
            raise SchemaError(f"{path}: trace columns must be numeric") \
                from None
    else:
        rows = read_long_table(path)
        methods = sorted({r[1] for r in rows})
        for method in methods:
            for metric in sorted({r[4] for r in rows if r[1] == method}):
                label = metric if len(methods) == 1 else f"{method} {metric}"
                series[label] = _mean_series(
                    [r for r in rows if r[1] == method and r[4] == metric])
    for label in sorted(series):
        xs, ys = series[label]
        ax.plot(xs, ys, marker=".", label=label)
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or RATE_LABEL)
    ax.legend()
    return {"series": series}


def _draw_sweep(spec, ax, integer_axis):
    path = spec.inputs[0]
    rows = _metric_rows(path, read_long_table(path), "ssr")
    series = {}
    for method in sorted({r[1] for r in rows}):
        series[method] = _mean_series([r for r in rows if r[1] == method])
        ax.plot(*series[method], marker="o", label=method)
    if integer_axis:
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_xlabel(spec.xlabel or "transmit antennas")
    else:
        ax.set_xlabel(spec.xlabel or "transmit power (dB)")
    ax.set_ylabel(spec.ylabel or f"mean {RATE_LABEL}")
    ax.legend()
    return {"series": series}


def _certified_rate(results_path, hist_path):
    """(r_s, method) from the long table, matched to the histogram file.

    hist files are named hist_<method-with-dashes>.csv by the producer;
    when the name resolves to a method with an r_s row that method wins,
    otherwise a single-method table is unambiguous on its own.
    """
    rows = _metric_rows(results_path, read_long_table(results_path), "r_s")
    by_method = {}
    for r in rows:
        by_method.setdefault(r[1], []).append(r)
    stem = os.path.basename(hist_path)
    chosen = None
    if stem.startswith("hist_") and stem.endswith(".csv"):
        slug = stem[len("hist_"):-len(".csv")]
        for method in sorted(by_method):
            if method.replace("/", "-") == slug:
                chosen = method
                break
    if chosen is None:
        if len(by_method) == 1:
            chosen = next(iter(by_method))
        else:
            raise SchemaError(
                f"cannot pick the certified rate: {results_path} has r_s "
                f"rows for methods {sorted(by_method)} and {stem!r} names "
                "none of them")
    first = min(by_method[chosen], key=lambda r: r[3])
    return first[5], chosen


def _draw_hist(spec, fig):
    if len(spec.inputs) < 2:
        raise SchemaError("hist kind needs two inputs: the histogram CSV "
                          "and the results CSV with the certified rate")
    rows = read_hist_table(spec.inputs[0])
    threshold, method = _certified_rate(spec.inputs[1], spec.inputs[0])
    families = sorted({r[0] for r in rows})
    ncols = 2 if len(families) > 1 else 1
    nrows = math.ceil(len(families) / ncols)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    for k, fam in enumerate(families):
        ax = axes[k // ncols][k % ncols]
        bins = sorted((r for r in rows if r[0] == fam), key=lambda r: r[1])
        lefts = [r[1] for r in bins]
        widths = [r[2] - r[1] for r in bins]
        counts = [r[3] for r in bins]
        ax.bar(lefts, counts, width=widths, align="edge",
               edgecolor="white", linewidth=0.3)
        ax.axvline(threshold, color="tab:red", linestyle="--", linewidth=1.2)
        ax.set_title(fam, fontsize=10)
        ax.set_xlabel(spec.xlabel or RATE_LABEL, fontsize=9)
        ax.set_ylabel(spec.ylabel or "draws", fontsize=9)
    for k in range(len(families), nrows * ncols):
        axes[k // ncols][k % ncols].set_visible(False)
    fig.tight_layout()
    return {"families": families, "threshold": threshold, "method": method}


def _draw_outage(spec, ax):
    path = spec.inputs[0]
    rows = _metric_rows(path, read_long_table(path), "worst_outage")
    methods = sorted({r[1] for r in rows})
    trials = sorted({r[3] for r in rows})
    xs = np.arange(len(trials))
    width = 0.8 / len(methods)
    series = {}
    for j, method in enumerate(methods):
        vals = {r[3]: r[5] for r in rows if r[1] == method}
        # a method can miss a trial (recorded failure); leave a gap
        ys = [vals.get(t, float("nan")) for t in trials]
        series[method] = ys
        ax.bar(xs - 0.4 + (j + 0.5) * width, ys, width=0.95 * width,
               label=method)
    ax.set_xticks(xs)
    ax.set_xticklabels([str(t) for t in trials], fontsize=8)
    ax.set_xlabel(spec.xlabel or "channel instance")
    ax.set_ylabel(spec.ylabel or "worst-family outage")
    ax.legend()
    return {"series": series, "trials": trials}


def render(spec: FigureSpec) -> dict:
    """Draw the figure and save it; returns what was drawn.

    The returned dict always carries "out"; per-kind entries expose the
    plotted series (and for hist the threshold and its method) so
    callers can check the numbers without decoding the image.
    """
    if spec.kind == "hist":
        fig = plt.figure(figsize=(7.2, 5.0), dpi=120)
    else:
        fig = plt.figure(figsize=(6.4, 4.2), dpi=120)
    try:
        if spec.kind == "hist":
            details = _draw_hist(spec, fig)
        elif spec.kind == "convergence":
            details = _draw_convergence(spec, fig.add_subplot(111))
        elif spec.kind == "power":
            details = _draw_sweep(spec, fig.add_subplot(111), False)
        elif spec.kind == "antennas":
            details = _draw_sweep(spec, fig.add_subplot(111), True)
        else:
            details = _draw_outage(spec, fig.add_subplot(111))
        if spec.title:
            fig.suptitle(spec.title)
        fig.savefig(spec.out, metadata={"Software": "render"})
    finally:
        plt.close(fig)
    return {"out": spec.out, **details}
