"""Plain-text and JSON renderings of training and ablation results."""
from __future__ import annotations

import json
from pathlib import Path

from .data import QUERY_TYPES


def _fmt(x, spec=".4f"):
    return "-" if x is None else format(x, spec)


def format_table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def train_table(report) -> str:
    head = (f"epochs {len(report.losses)}  final loss {_fmt(report.losses[-1] if report.losses else None, '.6f')}\n"
            f"accuracy {report.accuracy:.4f}  relevant-masked accuracy {report.masked_accuracy:.4f}  "
            f"drop {report.accuracy_drop:.4f}\n\n")
    rows = []
    for q in QUERY_TYPES:
        w = report.gate_by_query_type.get(q)
        rows.append([q] + ([_fmt(v) for v in w] if w else ["-"] * 3) + [_fmt(report.relevant_gate.get(q))])
    return head + format_table(["query", "w_lidar", "w_occ", "w_desc", "w_relevant"], rows)


def ablation_table(rows) -> str:
    body = [[r.group, r.name, _fmt(r.accuracy), _fmt(r.masked_accuracy), _fmt(r.mean_relevant_gate),
             "-" if r.abstract_rows is None else r.abstract_rows] for r in rows]
    return format_table(["group", "setting", "accuracy", "masked", "w_relevant", "F_A rows"], body)


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_train_report(out_dir, report) -> dict:
    """report.json, report.txt and the loss/gate figures; returns ``{kind: path}``."""
    from . import plotting

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": write_json(out / "report.json", report.to_dict())}
    paths["text"] = out / "report.txt"
    paths["text"].write_text(train_table(report))
    paths["loss_figure"] = plotting.plot_loss_curve(report.losses, out / "loss.png")
    paths["gate_figure"] = plotting.plot_gate_weights(report.gate_by_query_type, out / "gates.png")
    return paths


def write_ablation_report(out_dir, rows) -> dict:
    from . import plotting

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": write_json(out / "ablation.json", {"rows": [r.to_dict() for r in rows]})}
    paths["text"] = out / "ablation.txt"
    paths["text"].write_text(ablation_table(rows))
    paths["figure"] = plotting.plot_ablation(rows, out / "ablation.png")
    return paths
