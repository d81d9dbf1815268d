"""Canonical JSON serialization and plain-text tables for experiment reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

from hfdistill.errors import InvalidInputError

SIG_DIGITS = 9


def canonical(obj):
    """Round every float to 9 significant digits; the result is a fixed point."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise InvalidInputError(f"cannot serialize non-finite value {obj}")
        return float(f"{obj:.{SIG_DIGITS}g}")
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if hasattr(obj, "item"):
        return canonical(obj.item())
    raise InvalidInputError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, indent=2) + "\n"


def load_report(path: str | Path) -> dict:
    path = Path(path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read report {path}: {exc}") from None
    if report.get("schema_version") != "1":
        raise InvalidInputError(f"{path}: unsupported schema_version {report.get('schema_version')!r}")
    return report


def check_report(report: dict) -> None:
    """Accuracies lie in [0, 1] and stored means match their per-seed rows."""
    rows = [report] if "runs" in report else []
    if "teacher" in report:
        rows.append(report["teacher"])
    rows += report.get("variants", [])
    for sweep in report.get("sweeps", []):
        rows += sweep["points"]
    for row in rows:
        accs = [r["accuracy"] for r in row["runs"]]
        if any(not 0.0 <= a <= 1.0 for a in accs):
            raise InvalidInputError(f"accuracy outside [0, 1] in {accs}")
        mean = canonical(math.fsum(accs) / len(accs))
        if canonical(row["mean"]) != mean:
            raise InvalidInputError(f"stored mean {row['mean']} != recomputed {mean}")


def _mark(flag) -> str:
    return "-" if flag is None else ("yes" if flag else "no")


def _pct(row) -> str:
    return f"{100 * row['mean']:6.2f} ± {100 * row['std']:5.2f}"


def _table(header: list[str], body: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    line = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(header), rule] + [line(r) for r in body]) + "\n"


def render_table(report: dict) -> str:
    """Aligned text: one row per variant (or sweep point), accuracy mean ± std in %."""
    kind = report.get("report_type")
    seeds = report["config"]["seeds"]
    seed_cols = [f"seed {s}" for s in seeds]
    out = []
    if kind == "ablation":
        body = [["teacher", "-", "-", _pct(report["teacher"])]
                + [f"{100 * r['accuracy']:.2f}" for r in report["teacher"]["runs"]]]
        for v in report["variants"]:
            body.append([v["name"], _mark(v["low"]), _mark(v["high"]), _pct(v)]
                        + [f"{100 * r['accuracy']:.2f}" for r in v["runs"]])
        out.append(_table(["variant", "low", "high", "acc % (mean ± std)"] + seed_cols, body))
        fbody = [[b["model_tag"], f"{100 * b['mean_full_accuracy']:.2f}",
                  f"{100 * b['mean_hf_agree_label']:.2f}", f"{100 * b['mean_ll_agree_label']:.2f}",
                  f"{100 * b['mean_hf_agree_full']:.2f}"]
                 for b in report["frequency_agreement"]]
        out.append(_table(["model", "full acc %", "HF-only acc %", "LL-only acc %",
                           "HF agrees w/ full %"], fbody))
    elif kind == "sweep":
        for sweep in report["sweeps"]:
            body = [[f"{p['alpha']:g}", f"{p['beta']:g}", _pct(p)]
                    + [f"{100 * r['accuracy']:.2f}" for r in p["runs"]] for p in sweep["points"]]
            fixed = ", ".join(f"{k}={v:g}" for k, v in sweep["fixed"].items())
            out.append(f"{sweep['name']} ({fixed})\n"
                       + _table(["alpha", "beta", "acc % (mean ± std)"] + seed_cols, body))
        best = report["best"]
        out.append(f"best: alpha={best['alpha']:g} beta={best['beta']:g} "
                   f"acc={100 * best['mean']:.2f}%\n")
    elif kind in ("teacher", "distill"):
        label = "teacher" if kind == "teacher" else report["config"]["variant"]
        body = [[label, _pct(report)] + [f"{100 * r['accuracy']:.2f}" for r in report["runs"]]]
        out.append(_table(["model", "acc % (mean ± std)"] + seed_cols, body))
    else:
        raise InvalidInputError(f"unknown report_type {kind!r}")
    return "\n".join(out)


def emit_report(report: dict, path: str | Path) -> tuple[Path, Path]:
    """Write ``path`` (JSON) and a sibling ``.txt`` table. Returns both paths."""
    path = Path(path)
    text_path = path.with_suffix(".txt")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(report), encoding="utf-8")
        text_path.write_text(render_table(report), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path, text_path
