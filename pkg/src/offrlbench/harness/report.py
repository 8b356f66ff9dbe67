"""Score aggregation and table rendering."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

REPORT_FORMATS = ("text", "csv", "latex")


@dataclass
class CellScore:
    score: float
    se: float
    n_values: int
    n_runs: int
    failed: bool = False


@dataclass
class ScoreReport:
    """Per (algorithm, dataset) protocol scores plus failure markers."""

    cells: dict[tuple[str, str], CellScore] = field(default_factory=dict)

    def algorithms(self) -> list[str]:
        return sorted({a for a, _ in self.cells})

    def datasets(self) -> list[str]:
        return sorted({d for _, d in self.cells})

    def get(self, algorithm: str, dataset: str) -> CellScore | None:
        return self.cells.get((algorithm, dataset))


def format_score_cell(score: float, se: float) -> str:
    """Table-1-style cell: score to two decimals with its standard error
    in parentheses, using a typographic minus sign."""
    return f"{score:.2f} ({se:.2f})".replace("-", "−")


EMPTY_CELL = "—"


def emit_table(report: ScoreReport, fmt: str = "text") -> str:
    """Render the report; rows are algorithms, columns dataset cells."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}, got {fmt!r}")
    if not report.cells:
        raise ValueError("report is empty")
    algorithms = report.algorithms()
    datasets = report.datasets()

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["algorithm", "dataset", "score", "se", "n_values", "n_runs", "failed"])
        for (algo, ds), cell in sorted(report.cells.items()):
            writer.writerow([
                algo, ds, format(cell.score, ".17g"), format(cell.se, ".17g"),
                cell.n_values, cell.n_runs, int(cell.failed),
            ])
        return buf.getvalue()

    def cell_text(algo: str, ds: str) -> str:
        cell = report.get(algo, ds)
        if cell is None:
            return EMPTY_CELL
        if cell.failed:
            return "failed"
        return format_score_cell(cell.score, cell.se)

    if fmt == "latex":
        lines = [
            "\\begin{tabular}{l" + "c" * len(datasets) + "}",
            " & ".join(["algorithm"] + datasets) + " \\\\",
            "\\hline",
        ]
        for algo in algorithms:
            row = [algo] + [cell_text(algo, ds).replace("−", "-").replace("—", "--") for ds in datasets]
            lines.append(" & ".join(row) + " \\\\")
        lines.append("\\end{tabular}")
        return "\n".join(lines) + "\n"

    widths = [max(len("algorithm"), max((len(a) for a in algorithms), default=0))]
    columns = []
    for ds in datasets:
        col = [cell_text(a, ds) for a in algorithms]
        widths.append(max(len(ds), max((len(c) for c in col), default=0)))
        columns.append(col)
    header = " | ".join(name.ljust(w) for name, w in zip(["algorithm"] + datasets, widths))
    sep = "-+-".join("-" * w for w in widths)
    lines = [header, sep]
    for i, algo in enumerate(algorithms):
        row = [algo.ljust(widths[0])] + [columns[j][i].ljust(widths[j + 1]) for j in range(len(datasets))]
        lines.append(" | ".join(row))
    return "\n".join(lines) + "\n"
