"""Report emission: a key-sorted structured JSON document and a plain-text
table (models as rows, categories and cardinality buckets as columns)."""

from __future__ import annotations

import json
from pathlib import Path

from .dataset import BUCKETS, CATEGORIES
from .pipeline import AggregateReport, ImageResult

SCHEMA_VERSION = 1


def structured_report(agg: AggregateReport, results: list[ImageResult],
                      synonym_expansion: bool = True) -> dict:
    scores: dict[str, dict] = {}
    for (model, category), cell in agg.cells.items():
        entry = scores.setdefault(model, {}).setdefault(category, {})
        entry["mean"] = round(cell["mean"], 6)
        entry["count"] = cell["count"]
        entry["buckets"] = {}
    for (model, category, bucket), mean in agg.bucket_means.items():
        scores[model][category]["buckets"][bucket] = round(mean, 6)
    for model, categories in scores.items():
        means = [categories[c]["mean"] for c in CATEGORIES if c in categories]
        categories["averaged"] = round(sum(means) / len(means), 6) if means else None
    return {
        "schema_version": SCHEMA_VERSION,
        "synonym_expansion": synonym_expansion,
        "failures": agg.failures,
        "n_results": agg.n_results,
        "unique_objects_detected": agg.unique_objects_detected,
        "scores": scores,
        "results": [
            {
                "record_id": r.record_id,
                "model": r.model_name,
                "category": r.category,
                "object_count": r.object_count,
                "score": None if r.score is None else round(r.score, 6),
                "feedback": list(r.feedback),
                "error": r.error,
            }
            for r in sorted(results, key=lambda r: (r.record_id, r.model_name))
        ],
    }


def emit_report(report: dict, out_path: str | Path,
                formats: tuple[str, ...] = ("structured",)) -> list[Path]:
    """Write the requested formats next to out_path; emission is
    deterministic, so emitting twice yields byte-identical files."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "structured" in formats:
        doc = json.dumps(report, sort_keys=True, indent=2)
        out_path.write_text(doc + "\n", encoding="utf-8")
        written.append(out_path)
    if "table-text" in formats:
        table_path = out_path.with_suffix(".txt")
        table_path.write_text(render_table(report), encoding="utf-8")
        written.append(table_path)
    return written


def render_table(report: dict) -> str:
    """Models as rows, category scores plus the unweighted category average."""
    headers = ["Model"] + [c.capitalize() for c in CATEGORIES] + ["Averaged"]
    rows: list[list[str]] = []
    for model in sorted(report["scores"]):
        categories = report["scores"][model]
        row = [model]
        for category in CATEGORIES:
            cell = categories.get(category)
            row.append(f"{cell['mean']:.4f}" if cell else "-")
        avg = categories.get("averaged")
        row.append(f"{avg:.4f}" if avg is not None else "-")
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())

    lines.append("")
    lines.append("Cardinality buckets:")
    for model in sorted(report["scores"]):
        for category in CATEGORIES:
            cell = report["scores"][model].get(category)
            if not cell or not cell.get("buckets"):
                continue
            buckets = ", ".join(
                f"{b}: {cell['buckets'][b]:.4f}"
                for b in BUCKETS if b in cell["buckets"])
            lines.append(f"  {model} / {category}: {buckets}")
    lines.append("")
    lines.append(f"Unique objects detected: {report['unique_objects_detected']}")
    lines.append(f"Failures: {report['failures']} of {report['n_results']}")
    return "\n".join(lines) + "\n"
