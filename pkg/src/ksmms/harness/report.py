"""Report emission: JSON (source of truth), flat CSV and SVG ratio histograms."""
from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .. import io
from ..errors import IoFailure

FORMATS = ("json", "csv", "svg")
CSV_COLUMNS = ("id", "check", "criterion", "trial", "passed", "inputs_digest", "asserted", "values", "report_only", "error")

# (check, field, section) pairs plotted as histograms
HISTOGRAMS = (
    ("weak_type", "sup_ratio", "values"),
    ("weak_type", "ks1_ratio", "report_only"),
    ("strong_type", "lp_ratio", "values"),
    ("strong_type", "ks_ratio", "report_only"),
    ("ws_maximal", "ws_ratio", "report_only"),
)


def empty_report(config: dict | None = None) -> dict:
    return {
        "format_version": 1,
        "config": config or {},
        "summary": {"total": 0, "passed": 0, "failed": 0, "ok": True, "checks": {}, "criteria": {}, "counterexamples": [], "measurements": {}, "notes": {}},
        "records": [],
    }


def _compact(v) -> str:
    return json.dumps(v, sort_keys=True, separators=(",", ":"))


def to_csv(report: dict) -> str:
    """One row per record; nested fields are compact JSON."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report["records"]:
        w.writerow([
            r["id"], r["check"], r["criterion"], r["trial"], r["passed"], r["inputs_digest"],
            _compact(r["asserted"]), _compact(r["values"]), _compact(r["report_only"]), r.get("error", ""),
        ])
    return buf.getvalue()


def _series(report, check, name, section):
    out = []
    for r in report["records"]:
        if r["check"] == check:
            v = r[section].get(name)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                out.append(float(v))
    return np.array(out)


def to_svg(report: dict, check: str, name: str, section: str) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = _series(report, check, name, section)
    plt.rcParams["svg.hashsalt"] = "ksmms"
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if data.size:
        ax.hist(data, bins=min(30, max(5, data.size // 4)), color="#4a7ab5", edgecolor="white")
    else:
        ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel(name)
    ax.set_ylabel("trials")
    ax.set_title(f"{check}: {name} (n={data.size})")
    fig.tight_layout()
    buf = _io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def emit_report(report: dict, out_dir, formats=FORMATS) -> list:
    """Write the requested formats into ``out_dir``; returns the written paths.

    Raises
    ------
    IoFailure
        If the directory or a file cannot be written.
    """
    bad = set(formats) - set(FORMATS)
    if bad:
        raise ValueError(f"unknown report formats {sorted(bad)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create {out}: {e}") from e
    files = {}
    if "json" in formats:
        files["report.json"] = io.dumps(report)
    if "csv" in formats:
        files["records.csv"] = to_csv(report)
    if "svg" in formats:
        for check, name, section in HISTOGRAMS:
            files[f"{check}_{name}.svg"] = to_svg(report, check, name, section)
    written = []
    for fname, text in files.items():
        path = out / fname
        try:
            path.write_text(text)
        except OSError as e:
            raise IoFailure(f"cannot write {path}: {e}") from e
        written.append(path)
    return written
