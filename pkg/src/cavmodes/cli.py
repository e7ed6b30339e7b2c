"""Typer CLI for cavmodes."""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Annotated, Any, NoReturn, cast

import numpy as np
import typer
from rich.console import Console
from rich.panel import Panel

from .collective import CollectiveSource, collective_inputs, collective_spectrum_compare
from .config import RunConfig, load_config
from .context import AppContext, configure_logging, resolve_log_level
from .errors import CavmodesError, ConfigError
from .harmonic import (
    ModelVariant,
    PolaritonPair,
    TwoModeBranch,
    lambda_sweep,
    maxwell_residual,
    model_compare,
)
from .hessian import (
    assemble_force_constants,
    force_constants_to_dict,
    photon_photon_block_check,
)
from .models import FloatArray, PolaritonMode
from .outputs import metadata, read_json, write_csv, write_json
from .paths import (
    COLLECTIVE_FILE,
    COLLECTIVE_SPECTRUM_FILE,
    EQUILIBRIUM_FILE,
    FORCE_CONSTANTS_FILE,
    MODEL_COMPARE_FILE,
    MODES_FILE,
    PROJECTIONS_FILE,
    SPECTRUM_FILE,
    SWEEP_FILE,
    output_path,
)
from .polariton import (
    frequency_cm1,
    ir_spectrum,
    mode_effective_charges,
    photon_reference_states,
    polariton_alignment,
    projection_report,
    solve_modes,
)
from .relaxation import relax
from .ui import (
    print_collective_summary,
    print_comparison_table,
    print_modes_table,
    print_sweep_table,
)
from .units import hartree_to_cm1

logger = logging.getLogger(__name__)

app = typer.Typer(
    help="Vibro-polariton normal modes, IR spectra and harmonic models.",
    no_args_is_help=True,
    add_completion=False,
)

ConfigOption = Annotated[
    Path,
    typer.Option("--config", help="Run config (.json or .toml).", resolve_path=True),
]
OutOption = Annotated[
    Path,
    typer.Option("--out", help="Output directory.", file_okay=False, resolve_path=True),
]
SeedOption = Annotated[
    int | None,
    typer.Option("--seed", help="Reserved; every computation is deterministic."),
]

DEFAULT_OUT = Path("cavmodes-out")
SWEEP_PARAMETER_COLUMNS = ("xi", "dmu_dn", "dmu_dq", "lambda_eff")


@app.callback()
def cli_callback(
    ctx: typer.Context,
    verbose: Annotated[
        bool, typer.Option("--verbose", "-v", help="Log debug details.")
    ] = False,
    quiet: Annotated[
        bool, typer.Option("--quiet", "-q", help="Log warnings and errors only.")
    ] = False,
    no_color: Annotated[
        bool,
        typer.Option(
            "--no-color", help="Disable ANSI styling for deterministic output."
        ),
    ] = False,
) -> None:
    """Initialize shared CLI context."""
    console = Console(no_color=no_color)
    level = resolve_log_level(verbose, quiet)
    configure_logging(console, level)
    ctx.obj = AppContext(console=console, no_color=no_color, log_level=level)


def _app_context(ctx: typer.Context) -> AppContext:
    """Return typed application context."""
    return cast(AppContext, ctx.obj)


def _handle_error(app_ctx: AppContext, error: Exception) -> NoReturn:
    """Print user-facing error and exit with its code."""
    app_ctx.console.print(f"Error: {error}", markup=False)
    code = error.exit_code if isinstance(error, CavmodesError) else 1
    raise typer.Exit(code=code) from error


def _load(config: Path, seed: int | None) -> RunConfig:
    if seed is not None:
        logger.debug("--seed %d has no effect; the pipeline is deterministic", seed)
    return load_config(config)


def _provenance(cfg: RunConfig) -> dict[str, Any]:
    return metadata(cfg.config_hash, cfg.numerics())


def _load_start(path: Path, cfg: RunConfig) -> FloatArray:
    """Read a start configuration from an equilibrium file."""
    if not path.exists():
        raise ConfigError(f"Equilibrium file not found: {path}")
    try:
        data = read_json(path)
        positions = np.asarray(data["positions"], dtype=float)
        photon = np.asarray(data["photon"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Equilibrium file {path} is malformed: {exc}") from exc
    system = cfg.system
    if positions.shape != (system.n_nuclear,) or photon.shape != (system.n_photons,):
        raise ConfigError(
            f"Equilibrium file {path} does not match the configured system"
        )
    return np.concatenate([positions, photon])


@app.command("relax")
def relax_command(
    ctx: typer.Context,
    config: ConfigOption,
    out: OutOption = DEFAULT_OUT,
    seed: SeedOption = None,
    from_equilibrium: Annotated[
        Path | None,
        typer.Option(
            "--from-equilibrium",
            help="Start from a previously written equilibrium file.",
            resolve_path=True,
        ),
    ] = None,
) -> None:
    """Relax nuclei and photon displacements to the joint minimum."""
    app_ctx = _app_context(ctx)
    try:
        cfg = _load(config, seed)
        surface = cfg.surface()
        start = None if from_equilibrium is None else _load_start(from_equilibrium, cfg)
        equilibrium = relax(surface, cfg.relaxation, start)
        target = write_json(
            output_path(out, EQUILIBRIUM_FILE),
            {
                "positions": equilibrium.positions,
                "photon": equilibrium.photon,
                "energy": equilibrium.energy,
                "iterations": equilibrium.iterations,
                "max_force": equilibrium.max_force,
            },
            _provenance(cfg),
        )
    except (CavmodesError, OSError) as error:
        _handle_error(app_ctx, error)

    app_ctx.console.print(
        Panel.fit(
            f"energy: {equilibrium.energy:.12f} Ha\n"
            f"iterations: {equilibrium.iterations}\n"
            f"max |F|: {equilibrium.max_force:.3e}\n"
            f"output: {target}",
            title="Relaxation Complete",
        )
    )


def _mode_flags(mode: PolaritonMode) -> str:
    """Return ';'-joined mode flags; imaginary modes are left out of the spectrum."""
    flags = []
    if mode.imaginary:
        flags.append("imaginary")
    if mode.photon_character >= 0.5:
        flags.append("photon-like")
    return ";".join(flags)


@app.command("modes")
def modes_command(
    ctx: typer.Context,
    config: ConfigOption,
    out: OutOption = DEFAULT_OUT,
    seed: SeedOption = None,
    equilibrium_file: Annotated[
        Path | None,
        typer.Option(
            "--equilibrium",
            help="Equilibrium file to start from instead of relaxing from scratch.",
            resolve_path=True,
        ),
    ] = None,
) -> None:
    """Compute polariton modes, effective charges and the IR spectrum."""
    app_ctx = _app_context(ctx)
    try:
        cfg = _load(config, seed)
        system = cfg.system
        surface = cfg.surface()
        start = None if equilibrium_file is None else _load_start(equilibrium_file, cfg)
        equilibrium = relax(surface, cfg.relaxation, start)
        fcs = assemble_force_constants(surface, equilibrium, cfg.finite_difference)
        modes = mode_effective_charges(solve_modes(fcs, system), fcs)
        spectrum = ir_spectrum(modes, cfg.spectrum.grid(), cfg.spectrum.broadening_cm1)
        if system.n_photons > 1:
            report = photon_photon_block_check(fcs)
            logger.info(
                "Photon-photon coupling: max off-diagonal %.3e", report.max_offdiagonal
            )

        provenance = _provenance(cfg)
        write_csv(
            output_path(out, MODES_FILE),
            [
                "mode",
                "omega_cm1",
                "eigenvalue",
                "photon_character",
                "ir_amplitude",
                "Zstar_x",
                "Zstar_y",
                "Zstar_z",
                "alignment",
                "flags",
            ],
            [
                [
                    mode.index,
                    frequency_cm1(mode),
                    mode.eigenvalue,
                    mode.photon_character,
                    mode.ir_amplitude,
                    *mode.z_star,
                    polariton_alignment(mode, fcs, system),
                    _mode_flags(mode),
                ]
                for mode in modes
            ],
            provenance,
        )
        write_csv(
            output_path(out, SPECTRUM_FILE),
            ["omega_cm1", "intensity"],
            zip(spectrum.grid_cm1, spectrum.intensity, strict=True),
            provenance,
        )
        write_json(
            output_path(out, FORCE_CONSTANTS_FILE),
            force_constants_to_dict(fcs),
            provenance,
        )
        references = photon_reference_states(system)
        overlaps = (
            projection_report(modes, references)
            if system.n_photons
            else np.zeros((len(modes), 0))
        )
        write_csv(
            output_path(out, PROJECTIONS_FILE),
            ["mode", *references.labels],
            [[mode.index, *row] for mode, row in zip(modes, overlaps, strict=True)],
            provenance,
        )
    except (CavmodesError, OSError) as error:
        _handle_error(app_ctx, error)

    print_modes_table(app_ctx.console, modes)
    app_ctx.console.print(
        Panel.fit(
            f"modes: {len(modes)}\n"
            f"excluded from spectrum: {len(spectrum.excluded)}\n"
            f"output: {out}",
            title="Modes Complete",
        )
    )


def _pair_cells(pair: PolaritonPair | None) -> list[float]:
    if pair is None:
        return [float("nan")] * 3
    return [pair.omega_minus_cm1, pair.omega_plus_cm1, pair.splitting_cm1]


@app.command("sweep")
def sweep_command(
    ctx: typer.Context,
    config: ConfigOption,
    out: OutOption = DEFAULT_OUT,
    seed: SeedOption = None,
) -> None:
    """Sweep the coupling strength through the pipeline and every model level."""
    app_ctx = _app_context(ctx)
    try:
        cfg = _load(config, seed)
        settings = cfg.sweep
        if not settings.lambdas:
            raise ConfigError("'sweep.lambdas' must list at least one coupling")
        variants = tuple(ModelVariant(value) for value in settings.variants)
        rows = lambda_sweep(
            cfg.surface(),
            list(settings.lambdas),
            variants,
            cfg.finite_difference,
            cfg.relaxation,
            vibration=settings.vibration,
            workers=settings.workers,
        )

        columns = ["lambda", "vibration"]
        for level in ("pipeline", *(variant.value for variant in variants)):
            columns += [
                f"{level}_minus_cm1",
                f"{level}_plus_cm1",
                f"{level}_splitting_cm1",
            ]
        prefixes = {
            TwoModeBranch.EXACT: "two_mode",
            TwoModeBranch.CLOSED_FORM: "closed_form",
            TwoModeBranch.UNSCALED: "unscaled",
        }
        for prefix in prefixes.values():
            columns += [
                f"{prefix}_minus_cm1",
                f"{prefix}_plus_cm1",
                f"{prefix}_splitting_cm1",
            ]
        columns += list(SWEEP_PARAMETER_COLUMNS)
        table = []
        for row in rows:
            cells: list[Any] = [row.coupling, row.vibration, *_pair_cells(row.pipeline)]
            for variant in variants:
                cells += _pair_cells(row.variants[variant])
            for branch in prefixes:
                pair = None
                if row.two_mode_result is not None:
                    pair = PolaritonPair.from_two_mode(row.two_mode_result, branch)
                cells += _pair_cells(pair)
            parameters = row.coupling_parameters()
            cells += [parameters[name] for name in SWEEP_PARAMETER_COLUMNS]
            table.append(cells)
        target = write_csv(
            output_path(out, SWEEP_FILE), columns, table, _provenance(cfg)
        )
    except (CavmodesError, OSError) as error:
        _handle_error(app_ctx, error)

    print_sweep_table(app_ctx.console, rows)
    app_ctx.console.print(
        Panel.fit(f"points: {len(rows)}\noutput: {target}", title="Sweep Complete")
    )


@app.command("collective")
def collective_command(
    ctx: typer.Context,
    config: ConfigOption,
    out: OutOption = DEFAULT_OUT,
    seed: SeedOption = None,
    n_mol: Annotated[
        int | None,
        typer.Option("--n-mol", min=1, help="Number of molecules (overrides config)."),
    ] = None,
    model_only: Annotated[
        bool,
        typer.Option("--model-only", help="Skip the direct N-molecule computation."),
    ] = False,
) -> None:
    """Compare the collective harmonic model with a direct N-molecule solve."""
    app_ctx = _app_context(ctx)
    try:
        cfg = _load(config, seed)
        settings = cfg.collective
        if n_mol is not None:
            settings = replace(settings, n_mol=n_mol)
        if model_only:
            settings = replace(settings, model_only=True)
        source = CollectiveSource(settings.source)

        surface = cfg.surface()
        spec = collective_inputs(
            surface,
            settings.n_mol,
            cfg.finite_difference,
            cfg.relaxation,
            spacing=settings.spacing_bohr,
            dark_threshold=settings.dark_threshold,
            band_halfwidth_cm1=settings.band_halfwidth_cm1,
            source=source,
        )
        report = collective_spectrum_compare(
            spec,
            None if settings.model_only else surface,
            cfg.finite_difference,
            cfg.relaxation,
            grid_cm1=cfg.spectrum.grid(),
            broadening_cm1=cfg.spectrum.broadening_cm1,
            source=source,
        )

        provenance = _provenance(cfg)
        provenance["numerics"]["collective"] = {
            **provenance["numerics"]["collective"],
            "n_mol": settings.n_mol,
            "model_only": settings.model_only,
        }
        write_json(output_path(out, COLLECTIVE_FILE), report.to_dict(), provenance)
        columns = ["omega_cm1", "model_intensity"]
        series = [report.model.spectrum.grid_cm1, report.model.spectrum.intensity]
        if report.direct is not None:
            columns.append("direct_intensity")
            series.append(report.direct.spectrum.intensity)
        write_csv(
            output_path(out, COLLECTIVE_SPECTRUM_FILE),
            columns,
            zip(*series, strict=True),
            provenance,
        )
    except (CavmodesError, OSError) as error:
        _handle_error(app_ctx, error)

    print_collective_summary(app_ctx.console, report)


@app.command("model-compare")
def model_compare_command(
    ctx: typer.Context,
    config: ConfigOption,
    out: OutOption = DEFAULT_OUT,
    seed: SeedOption = None,
) -> None:
    """Compare the pipeline with the full, mu2 and Hopfield models."""
    app_ctx = _app_context(ctx)
    try:
        cfg = _load(config, seed)
        comparison = model_compare(
            cfg.surface(),
            cfg.finite_difference,
            cfg.relaxation,
            vibration=cfg.sweep.vibration,
        )
        params = comparison.params
        payload = {
            "vibration": comparison.vibration,
            "rows": {
                name: {
                    "omega_minus_cm1": pair.omega_minus_cm1,
                    "omega_plus_cm1": pair.omega_plus_cm1,
                    "splitting_cm1": pair.splitting_cm1,
                }
                for name, pair in comparison.rows.items()
            },
            "two_mode": {
                variant.value: {
                    "omega_n_eff_cm1": float(hartree_to_cm1(result.omega_n_eff)),
                    "omega_q_eff_cm1": float(hartree_to_cm1(result.omega_q_eff)),
                    "lambda_eff": result.lambda_eff,
                }
                for variant, result in comparison.two_mode.items()
            },
            "maxwell_residual_max": float(
                np.max(np.abs(maxwell_residual(params)), initial=0.0)
            ),
            "xi_asymmetry": params.xi_asymmetry,
        }
        target = write_json(
            output_path(out, MODEL_COMPARE_FILE), payload, _provenance(cfg)
        )
    except (CavmodesError, OSError) as error:
        _handle_error(app_ctx, error)

    print_comparison_table(app_ctx.console, comparison)
    app_ctx.console.print(
        Panel.fit(f"output: {target}", title="Model Comparison Complete")
    )
