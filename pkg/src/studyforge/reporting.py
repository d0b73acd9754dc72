"""Run artifacts derived from a journal: trial tables, summaries, plots.

Everything here is a pure function of the journal bytes, so regenerating
reports from the same journal yields byte-identical files. The history
plot is a hand-built SVG polyline to keep runs diffable without a
plotting dependency.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .journal import KIND_TRIAL_END, read_records, study_from_records
from .study import MAXIMIZE, Study, TrialState

SVG_WIDTH = 640
SVG_HEIGHT = 400
SVG_MARGIN = 50


def _fmt(value) -> str:
    if value is None:
        return ""
    return str(value)


def trials_table(study: Study) -> tuple[list[str], list[list[str]]]:
    """Header and rows covering every trial, one row each."""
    names = study.space.names
    header = ["trial_id", *names, "state", "final_value"]
    rows = []
    for t in study.trials:
        row = [str(t.trial_id)]
        row.extend(_fmt(t.params.get(name)) for name in names)
        row.append(t.state.value)
        row.append(_fmt(t.final_value if t.state is TrialState.COMPLETE else None))
        rows.append(row)
    return header, rows


def render_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_markdown(header: list[str], rows: list[list[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def choice_summary(study: Study, name: str) -> tuple[list[str], list[list[str]]]:
    """Best completed value per choice of one discrete parameter.

    Every declared choice gets a row even when no completed trial used it.
    """
    dist = study.space.entries[name]
    complete = study.completed_trials()
    header = ["choice", "n_complete", "best_value"]
    rows = []
    for choice in dist.choices:
        values = [
            t.final_value
            for t in complete
            if t.params.get(name) == choice and type(t.params.get(name)) is type(choice)
        ]
        best = None
        if values:
            best = max(values) if study.direction == MAXIMIZE else min(values)
        rows.append([_fmt(choice), str(len(values)), _fmt(best)])
    return header, rows


def best_so_far(study: Study) -> tuple[list[int], list[float]]:
    """Completed trials in study order with the running best value."""
    ids, values = [], []
    best = None
    for t in study.trials:
        if t.state is not TrialState.COMPLETE:
            continue
        if best is None:
            best = t.final_value
        elif study.direction == MAXIMIZE:
            best = max(best, t.final_value)
        else:
            best = min(best, t.final_value)
        ids.append(t.trial_id)
        values.append(best)
    return ids, values


def render_history_svg(study: Study) -> str:
    ids, values = best_so_far(study)
    w, h, m = SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w // 2}" y="24" text-anchor="middle" font-size="14" '
        f'font-family="monospace">best value so far ({study.direction})</text>',
        f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h - m}" stroke="black"/>',
    ]
    if not values:
        lines.append(
            f'<text x="{w // 2}" y="{h // 2}" text-anchor="middle" font-size="12" '
            f'font-family="monospace">no completed trials</text>'
        )
    else:
        lo, hi = min(values), max(values)
        span = hi - lo
        if span <= 0:
            # flat curve: center it vertically instead of dividing by zero
            lo, span = lo - 0.5, 1.0
        n = len(values)
        xs = [
            m + (w - 2 * m) * (i / (n - 1) if n > 1 else 0.5) for i in range(n)
        ]
        ys = [h - m - (h - 2 * m) * ((v - lo) / span) for v in values]
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        lines.append(
            f'<polyline fill="none" stroke="steelblue" stroke-width="2" '
            f'points="{points}"/>'
        )
        lines.append(
            f'<text x="{m}" y="{h - m + 20}" font-size="11" font-family="monospace">'
            f"trial {ids[0]}</text>"
        )
        lines.append(
            f'<text x="{w - m}" y="{h - m + 20}" text-anchor="end" font-size="11" '
            f'font-family="monospace">trial {ids[-1]}</text>'
        )
        lines.append(
            f'<text x="{m - 6}" y="{h - m}" text-anchor="end" font-size="11" '
            f'font-family="monospace">{min(values)!r}</text>'
        )
        lines.append(
            f'<text x="{m - 6}" y="{m + 4}" text-anchor="end" font-size="11" '
            f'font-family="monospace">{max(values)!r}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def best_metrics(records: list[dict], study: Study) -> dict | None:
    """Metrics payload stored on the best completed trial's end record."""
    if not study.completed_trials():
        return None
    best = study.best_trial()
    for record in records:
        if (
            record.get("kind") == KIND_TRIAL_END
            and record.get("trial_id") == best.trial_id
            and "metrics" in record
        ):
            return record["metrics"]
    return None


def render_confusion_csv(confusion: list[list[int]]) -> str:
    n = len(confusion)
    header = ["class", *[f"pred_{j}" for j in range(n)]]
    rows = [[f"true_{i}", *[str(c) for c in confusion[i]]] for i in range(n)]
    return render_csv(header, rows)


def render_f1_csv(f1: list[float], macro_f1: float) -> str:
    rows = [[str(i), _fmt(v)] for i, v in enumerate(f1)]
    rows.append(["macro", _fmt(macro_f1)])
    return render_csv(["class", "f1"], rows)


def write_reports(journal_path, out_dir, fmt: str = "csv") -> list[Path]:
    """Regenerate every derived artifact for one journal. Returns paths."""
    if fmt not in ("csv", "md"):
        raise ValueError(f"unknown report format {fmt!r}")
    records = read_records(journal_path)
    study = study_from_records(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    header, rows = trials_table(study)
    if fmt == "csv":
        text = render_csv(header, rows)
        table_path = out_dir / "trials.csv"
    else:
        text = render_markdown(header, rows)
        table_path = out_dir / "trials.md"
    table_path.write_text(text)
    written.append(table_path)

    for name, dist in study.space.entries.items():
        if not dist.is_discrete:
            continue
        s_header, s_rows = choice_summary(study, name)
        if fmt == "csv":
            s_text = render_csv(s_header, s_rows)
            s_path = out_dir / f"summary_{name}.csv"
        else:
            s_text = render_markdown(s_header, s_rows)
            s_path = out_dir / f"summary_{name}.md"
        s_path.write_text(s_text)
        written.append(s_path)

    svg_path = out_dir / "history.svg"
    svg_path.write_text(render_history_svg(study))
    written.append(svg_path)

    metrics = best_metrics(records, study)
    if metrics is not None:
        conf_path = out_dir / "confusion.csv"
        conf_path.write_text(render_confusion_csv(metrics["confusion"]))
        written.append(conf_path)
        f1_path = out_dir / "f1.csv"
        f1_path.write_text(render_f1_csv(metrics["f1"], metrics["macro_f1"]))
        written.append(f1_path)

    return written
