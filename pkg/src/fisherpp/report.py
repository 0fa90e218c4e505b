"""Delimited result tables, config sidecars, and figure rendering.

The CSV layout is a stable contract: one header line, one row per
(scenario, theta, kernel chain, method) cell, floats printed with 17
significant digits so parsing them back reproduces the exact doubles,
booleans lowercased, and ``\\n`` line endings.  Repeated runs of the same
configuration must produce byte-identical files, which is why nothing
time- or locale-dependent is ever written here (the ``ms`` column is 0
unless timing collection is explicitly requested).

Alongside each table the caller writes a JSON sidecar holding the fully
resolved configuration; the sidecar is itself a valid configuration file,
so feeding it back through the command line reproduces the run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ValidationError

__all__ = [
    "CSV_HEADER",
    "ResultRow",
    "Series",
    "figure_path_for",
    "sidecar_path_for",
    "read_rows",
    "render_figure",
    "rows_to_csv",
    "write_csv",
    "write_sidecar",
]

CSV_HEADER = "scenario,theta,kernels,method,fisher,se,samples,gap,strict,ms"


def _fmt(x: float) -> str:
    """17 significant digits: enough for float64 round trips."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ResultRow:
    """One estimation cell of a run."""

    scenario: str
    theta: float
    kernels: str
    method: str
    fisher: float
    se: float
    samples: int
    gap: float
    strict: bool
    ms: int = 0

    def __post_init__(self) -> None:
        for field in (self.scenario, self.kernels, self.method):
            if "," in field or "\n" in field or '"' in field:
                raise ValidationError(
                    f"table fields may not contain commas, quotes, or newlines: "
                    f"{field!r}"
                )

    def to_line(self) -> str:
        return ",".join(
            (
                self.scenario,
                _fmt(self.theta),
                self.kernels,
                self.method,
                _fmt(self.fisher),
                _fmt(self.se),
                str(int(self.samples)),
                _fmt(self.gap),
                "true" if self.strict else "false",
                str(int(self.ms)),
            )
        )


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    """The full file contents, header included, with a trailing newline."""
    return "\n".join([CSV_HEADER] + [r.to_line() for r in rows]) + "\n"


def write_csv(path: str | Path, rows: Sequence[ResultRow]) -> Path:
    out = Path(path)
    out.write_text(rows_to_csv(rows), encoding="utf-8", newline="\n")
    return out


def read_rows(path: str | Path) -> list[ResultRow]:
    """Parse a results table back into rows (exact float round trip)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValidationError(f"{path}: missing or unexpected header")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 10:
            raise ValidationError(f"{path}:{i}: expected 10 fields, got {len(parts)}")
        if parts[8] not in ("true", "false"):
            raise ValidationError(f"{path}:{i}: strict must be true or false")
        rows.append(
            ResultRow(
                scenario=parts[0],
                theta=float(parts[1]),
                kernels=parts[2],
                method=parts[3],
                fisher=float(parts[4]),
                se=float(parts[5]),
                samples=int(parts[6]),
                gap=float(parts[7]),
                strict=parts[8] == "true",
                ms=int(parts[9]),
            )
        )
    return rows


def sidecar_path_for(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def figure_path_for(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".png")


def write_sidecar(csv_path: str | Path, resolved_config: dict) -> Path:
    """Write the resolved configuration next to the table.

    The sidecar is sorted and indented so diffs are stable, and it is a
    complete configuration: running the command line on it reproduces the
    table byte for byte.
    """
    out = sidecar_path_for(csv_path)
    out.write_text(
        json.dumps(resolved_config, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    return out


@dataclass(frozen=True)
class Series:
    """One plotted curve: a label, points, and optional error bars.

    ``style`` is ``"line"`` for an ordinary curve or ``"flat"`` for a
    horizontal reference level (used for kernel-free baselines in sweeps,
    where the value does not depend on the swept parameter).
    """

    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    yerr: tuple[float, ...]
    style: str = "line"

    def __post_init__(self) -> None:
        if self.style not in ("line", "flat"):
            raise ValidationError(f"unknown series style {self.style!r}")
        if not (len(self.x) == len(self.y) == len(self.yerr)):
            raise ValidationError("series coordinate lengths differ")
        if self.style == "flat" and len(self.y) == 0:
            raise ValidationError("flat series needs a level")


def render_figure(
    series: Sequence[Series],
    xlabel: str,
    path: str | Path,
    title: str,
) -> Path:
    """Render estimation results to a PNG next to the table.

    Imports the plotting stack lazily and forces a non-interactive backend
    so table-only code paths stay light and headless runs never touch a
    display.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for s in series:
        if s.style == "flat":
            ax.axhline(s.y[0], linestyle="--", linewidth=1.2, alpha=0.7, label=s.label)
            continue
        if any(e > 0 for e in s.yerr):
            ax.errorbar(
                s.x, s.y, yerr=s.yerr, marker="o", markersize=4,
                capsize=3, linewidth=1.4, label=s.label,
            )
        else:
            ax.plot(s.x, s.y, marker="o", markersize=4, linewidth=1.4, label=s.label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("Fisher information")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    out = Path(path)
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out
