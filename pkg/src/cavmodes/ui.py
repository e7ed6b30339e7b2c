"""Rich UI helpers for the cavmodes CLI."""

from __future__ import annotations

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .collective import CollectiveReport
from .harmonic import ModelComparison, SweepRow
from .models import PolaritonMode
from .polariton import frequency_cm1


def print_modes_table(console: Console, modes: list[PolaritonMode]) -> None:
    """Render mode frequencies, photon character and IR amplitude."""
    table = Table(title="Polariton Modes")
    table.add_column("Mode", justify="right")
    table.add_column("Frequency (cm^-1)", justify="right")
    table.add_column("Photon character", justify="right")
    table.add_column("|Z*|^2", justify="right")

    for mode in modes:
        amplitude = "-" if mode.z_star is None else f"{mode.ir_amplitude:.4e}"
        frequency = f"{frequency_cm1(mode):.2f}"
        if mode.imaginary:
            frequency += "i"
        table.add_row(
            str(mode.index), frequency, f"{mode.photon_character:.4f}", amplitude
        )

    console.print(table)


def print_sweep_table(console: Console, rows: list[SweepRow]) -> None:
    """Render the polariton splitting of every sweep point and model level."""
    table = Table(title="Lambda Sweep (splitting, cm^-1)")
    table.add_column("lambda", justify="right")
    table.add_column("pipeline", justify="right")
    variants = list(rows[0].variants) if rows else []
    for variant in variants:
        table.add_column(variant.value, justify="right")

    for row in rows:
        table.add_row(
            f"{row.coupling:.4g}",
            f"{row.pipeline.splitting_cm1:.3f}",
            *(f"{row.variants[variant].splitting_cm1:.3f}" for variant in variants),
        )

    console.print(table)


def print_comparison_table(console: Console, comparison: ModelComparison) -> None:
    """Render lower/upper polaritons of every model level."""
    table = Table(title=f"Model Comparison (vibration {comparison.vibration})")
    table.add_column("Level")
    table.add_column("omega_- (cm^-1)", justify="right")
    table.add_column("omega_+ (cm^-1)", justify="right")
    table.add_column("Splitting", justify="right")

    for name, pair in comparison.rows.items():
        table.add_row(
            name,
            f"{pair.omega_minus_cm1:.3f}",
            f"{pair.omega_plus_cm1:.3f}",
            f"{pair.splitting_cm1:.3f}",
        )

    console.print(table)


def print_collective_summary(console: Console, report: CollectiveReport) -> None:
    """Render the model versus direct collective comparison."""
    lines = [
        f"molecules: {report.n_mol}",
        f"bright vibration: {report.vibration}",
        f"model splitting: {report.model.splitting_cm1:.3f} cm^-1",
        f"model dark modes: {report.model.dark_mode_count}",
    ]
    if report.direct is None:
        lines.append("direct computation: skipped")
    else:
        lines.extend(
            [
                f"direct splitting: {report.direct.splitting_cm1:.3f} cm^-1",
                f"direct dark modes: {report.direct.dark_mode_count}",
                f"max frequency difference: {report.max_mode_freq_diff_cm1:.3e} cm^-1",
            ]
        )
    console.print(Panel("\n".join(lines), title="Collective Coupling"))
