"""Plot-script emission for sweep reports.

Reports stay plain CSV; plotting is deferred to a generated matplotlib
script so runs on headless machines produce no figures until asked.
"""

from __future__ import annotations

from pathlib import Path

STYLES = ("uncertainty", "accuracy", "snr")

_Y_COLUMN = {
    "uncertainty": ("mean_uncertainty", "uncertainty_stderr", "log"),
    "accuracy": ("accuracy", "accuracy_stderr", "linear"),
    "snr": ("mean_effective_snr", None, "log"),
}

_TEMPLATE = '''\
"""Generated plot script: {experiment} ({style})."""

import csv
from collections import defaultdict

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}

series = defaultdict(lambda: ([], [], []))
with open(CSV_PATH, newline="", encoding="utf-8") as handle:
    for row in csv.DictReader(handle):
        if row["feasible"] != "ok" or not row[{y_col!r}]:
            continue
        xs, ys, es = series[row["pipeline"]]
        xs.append(float(row["sweep_value"]))
        ys.append(float(row[{y_col!r}]))
        err_col = {err_col!r}
        es.append(float(row[err_col]) if err_col and row[err_col] else 0.0)

fig, ax = plt.subplots(figsize=(6, 4))
for pipeline, (xs, ys, es) in sorted(series.items()):
    ax.errorbar(xs, ys, yerr=es, marker="o", capsize=2, label=pipeline)
ax.set_xlabel("sweep value")
ax.set_ylabel({y_col!r})
ax.set_yscale({y_scale!r})
ax.set_title("{experiment}")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig({png_path!r}, dpi=150)
print("wrote", {png_path!r})
'''


def emit_plot_script(report, style, path, csv_path=None):
    """Write a standalone matplotlib script for a report's CSV.

    ``csv_path`` defaults to the script path with a ``.csv`` suffix.
    Raises ValueError for an unknown style or a report with no rows.
    """
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}, got {style!r}")
    if not report.rows:
        raise ValueError("cannot emit a plot script for an empty report")
    y_col, err_col, y_scale = _Y_COLUMN[style]
    path = Path(path)
    if csv_path is None:
        csv_path = str(path.with_suffix(".csv").name)
    else:
        csv_path = str(csv_path)
    script = _TEMPLATE.format(
        experiment=report.experiment,
        style=style,
        csv_path=csv_path,
        y_col=y_col,
        err_col=err_col,
        y_scale=y_scale,
        png_path=str(path.with_suffix(".png").name),
    )
    path.write_text(script, encoding="utf-8")
    return path
