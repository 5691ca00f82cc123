import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, TypeVar

import click
import numpy as np
import typer
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table

from pod_eit.cli.render import RenderSpec, parse_modes, render_layout_svg, render_modes_svg, shared_color_range
from pod_eit.core.artifacts import (
    atomic_write_text,
    file_hash,
    read_document,
    read_frames,
    require_same_protocol,
    write_document,
    write_frames,
)
from pod_eit.core.config_mgr import (
    ENV_CONFIG_PATH,
    load_config,
    resolve_config_path,
    resolve_output_path,
    save_config,
)
from pod_eit.core.exceptions import ArtifactError, ConfigError, InvalidParameterError, NumericalError
from pod_eit.core.logging import configure_logging, elapsed_ms
from pod_eit.core.models import (
    BasisDocument,
    ConditioningReportDocument,
    JacobianDocument,
    MeshDocument,
    PlacementReport,
    ProjectionEvaluation,
    SessionSpec,
    SystemConfig,
)
from pod_eit.eit.fem import Conductivity, compute_jacobian, jacobian_from_document, jacobian_to_document
from pod_eit.eit.mesh import (
    ElectrodeLayout,
    Mesh,
    build_disk_mesh,
    default_electrode_arc,
    evenly_spaced_layout,
    mesh_from_document,
    mesh_id,
    mesh_to_document,
)
from pod_eit.eit.protocol import Protocol, protocol_id, skip_protocol, valid_subset
from pod_eit.pod.basis import (
    SnapshotMatrix,
    basis_from_document,
    basis_id,
    basis_to_document,
    energy_fraction,
    fit_pod,
)
from pod_eit.pod.placement import compare_placements, mesh_pod, optimize_placement
from pod_eit.pod.projection import (
    apply_projector,
    build_projector,
    conditioning_report,
    relative_errors,
    restrict,
    summarize,
    zero_fill,
)
from pod_eit.synth.session import FAULT_MODELS, detect_bad_electrodes, inject_fault, simulate_session

app = typer.Typer(help="POD-based EIT placement and dropout compensation toolkit")
console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


def _config_path_from_ctx() -> Path:
    ctx = click.get_current_context()
    config_path = (ctx.obj or {}).get("config_path")
    return resolve_config_path(config_path)


def _config() -> SystemConfig:
    return load_config(_config_path_from_ctx())


@contextmanager
def _guard(command: str) -> Iterator[None]:
    """Map library errors to exit codes with a one-line diagnostic."""
    started = time.perf_counter()
    try:
        yield
    except InvalidParameterError as exc:
        err_console.print(f"[red]{command}: {exc}[/red]")
        raise typer.Exit(code=EXIT_USAGE)
    except (ConfigError, ArtifactError) as exc:
        err_console.print(f"[red]{command}: {exc}[/red]")
        raise typer.Exit(code=EXIT_DATA)
    except NumericalError as exc:
        err_console.print(f"[red]{command}: {exc}[/red]")
        raise typer.Exit(code=EXIT_NUMERICAL)
    except OSError as exc:
        err_console.print(f"[red]{command}: {exc.strerror or exc}: {exc.filename or ''}[/red]")
        raise typer.Exit(code=EXIT_DATA)
    logger.info(
        "Command finished",
        extra={"command": command, "elapsed_ms": elapsed_ms(started)},
    )


def _parse_electrodes(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return sorted({int(item) for item in text.split(",") if item.strip()})
    except ValueError as exc:
        raise InvalidParameterError(f"electrode list must be comma-separated integers, got {text!r}") from exc


def _reference_layout(config: SystemConfig) -> ElectrodeLayout:
    electrodes = config.electrodes
    return evenly_spaced_layout(
        electrodes.slot_count,
        electrode_arc=default_electrode_arc(electrodes.slot_count, electrodes.arc_fraction),
        contact_impedance=electrodes.contact_impedance,
    )


def _load_mesh(path: Path) -> Mesh:
    return mesh_from_document(read_document(path, MeshDocument))


def _protocol_from_header(header: dict[str, str], path: Path) -> Protocol:
    if "electrodes" not in header:
        raise ArtifactError(f"{path}: header carries no electrode count")
    try:
        count = int(header["electrodes"])
    except ValueError as exc:
        raise ArtifactError(f"{path}: bad electrode count {header['electrodes']!r}") from exc
    protocol = skip_protocol(count)
    require_same_protocol(protocol_id(protocol), header["protocol_id"], str(path))
    return protocol


def _output(path: Path, config: SystemConfig) -> Path:
    return resolve_output_path(path, config)


def _override(section: M, **updates) -> M:
    """Config section with the given non-None CLI values applied and re-validated."""
    data = section.model_dump()
    data.update({key: value for key, value in updates.items() if value is not None})
    try:
        return type(section).model_validate(data)
    except ValidationError as exc:
        raise InvalidParameterError(f"invalid options: {exc.errors()[0]['msg']}") from exc


@app.callback()
def _main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        help="Config file path (default: env POD_EIT_CONFIG_PATH or ./config.yaml)",
        envvar=ENV_CONFIG_PATH,
    ),
    log_level: str = typer.Option("WARNING", "--log-level", help="Root log level"),
):
    if not isinstance(logging.getLevelName(log_level.upper()), int):
        raise typer.BadParameter(f"unknown level {log_level!r}", param_hint="--log-level")
    configure_logging(log_level)
    ctx.obj = {"config_path": config}


@app.command()
def mesh(
    out: Path = typer.Option(Path("mesh.json"), "--out", help="Mesh JSON output"),
    segments: Optional[int] = typer.Option(None, "--segments", help="Boundary segment count"),
    density: Optional[float] = typer.Option(None, "--density", help="Interior density"),
    symmetry: Optional[int] = typer.Option(None, "--symmetry", help="Rotation order every ring honours"),
):
    """Build the disk mesh."""
    with _guard("mesh"):
        config = _config()
        settings = _override(
            config.mesh, boundary_segments=segments, interior_density=density, symmetry=symmetry
        )
        built = build_disk_mesh(
            radius=settings.radius,
            boundary_segments=settings.boundary_segments,
            interior_density=settings.interior_density,
            symmetry=settings.symmetry,
        )
        target = _output(out, config)
        write_document(target, mesh_to_document(built))
        console.print(
            f"[green]Wrote mesh {mesh_id(built)} ({built.element_count} elements) to {target}[/green]"
        )


@app.command()
def simulate(
    mesh_path: Path = typer.Option(..., "--mesh", help="Mesh JSON"),
    out: Path = typer.Option(Path("frames.csv"), "--out", help="Noisy frames CSV"),
    spec_path: Optional[Path] = typer.Option(None, "--spec", help="Session spec JSON"),
    truth: Optional[Path] = typer.Option(None, "--truth", help="Noiseless frames CSV (default: <out>_truth.csv)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the session seed"),
    frames: Optional[int] = typer.Option(None, "--frames", help="Override the frame count"),
    n_jobs: Optional[int] = typer.Option(None, "--n-jobs", help="Parallel workers"),
):
    """Simulate a synthetic session on the reference electrode band."""
    with _guard("simulate"):
        config = _config()
        if spec_path is not None:
            spec = read_document(spec_path, SessionSpec)
        else:
            spec = SessionSpec(contact_noise=config.synth.contact_noise, sensor_noise=config.synth.sensor_noise)
        spec = _override(spec, seed=seed, frame_count=frames)

        disk = _load_mesh(mesh_path)
        layout = _reference_layout(config)
        protocol = skip_protocol(layout.electrode_count)
        session = simulate_session(
            disk,
            layout,
            protocol,
            spec,
            amplitude=config.solver.amplitude,
            n_jobs=_override(config.synth, n_jobs=n_jobs).n_jobs,
        )
        header = {
            "protocol_id": protocol_id(protocol),
            "electrodes": layout.electrode_count,
            "mesh": mesh_id(disk),
            "seed": spec.seed,
        }
        target = _output(out, config)
        truth_target = _output(truth, config) if truth else target.with_name(f"{target.stem}_truth{target.suffix}")
        write_frames(target, session.frames.rows(), {**header, "kind": "noisy"})
        write_frames(truth_target, session.truth.rows(), {**header, "kind": "truth"})
        console.print(f"[green]Wrote {spec.frame_count} frames to {target} and {truth_target}[/green]")


@app.command()
def pod(
    frames_path: Path = typer.Option(..., "--in", help="Frames CSV"),
    out: Path = typer.Option(Path("basis.json"), "--out", help="Basis JSON output"),
    center: Optional[bool] = typer.Option(None, "--center/--no-center", help="Subtract the mean frame"),
    max_modes: Optional[int] = typer.Option(None, "--max-modes", help="Truncate the basis"),
):
    """Fit a POD basis to a frames file."""
    with _guard("pod"):
        config = _config()
        settings = _override(config.pod, center=center, max_modes=max_modes)
        rows, header = read_frames(frames_path)
        protocol = _protocol_from_header(header, frames_path)
        snapshots = SnapshotMatrix.from_rows(rows, header["protocol_id"])
        basis = fit_pod(
            snapshots,
            protocol,
            center=settings.center,
            max_modes=settings.max_modes,
            source=file_hash(frames_path),
        )
        target = _output(out, config)
        write_document(target, basis_to_document(basis))
        k = min(5, basis.rank)
        console.print(
            f"[green]Wrote {basis.rank}-mode basis to {target}; first {k} modes hold "
            f"{100 * energy_fraction(basis, k):.3f}% of the energy[/green]"
        )


@app.command()
def jacobian(
    mesh_path: Path = typer.Option(..., "--mesh", help="Mesh JSON"),
    out: Path = typer.Option(Path("jacobian.json"), "--out", help="Jacobian JSON output"),
):
    """Jacobian of the reference band's skip protocol on the homogeneous background."""
    with _guard("jacobian"):
        config = _config()
        disk = _load_mesh(mesh_path)
        layout = _reference_layout(config)
        protocol = skip_protocol(layout.electrode_count)
        background = Conductivity.homogeneous(disk, config.placement.background)
        result = compute_jacobian(disk, background, layout, protocol, amplitude=config.solver.amplitude)
        target = _output(out, config)
        write_document(target, jacobian_to_document(result, disk, layout))
        console.print(f"[green]Wrote {result.shape[0]}x{result.shape[1]} Jacobian to {target}[/green]")


@app.command()
def place(
    mesh_path: Path = typer.Option(..., "--mesh", help="Mesh JSON"),
    basis_path: Path = typer.Option(..., "--basis", help="Basis JSON"),
    out: Path = typer.Option(Path("placement.json"), "--out", help="Placement report JSON"),
    slots: Optional[int] = typer.Option(None, "--slots", help="Candidate slot count"),
    select: Optional[int] = typer.Option(None, "--select", help="Electrodes per candidate"),
    modes: Optional[int] = typer.Option(None, "--modes", help="POD modes P"),
    score: Optional[str] = typer.Option(None, "--score", help="gram | data_gram | volume"),
    n_jobs: Optional[int] = typer.Option(None, "--n-jobs", help="Parallel workers"),
    top: int = typer.Option(10, "--top", help="Rows to print"),
):
    """Exhaustive electrode placement search."""
    with _guard("place"):
        config = _config()
        settings = _override(
            config.placement, slots=slots, select=select, modes=modes, score=score, n_jobs=n_jobs
        )
        disk = _load_mesh(mesh_path)
        basis = basis_from_document(read_document(basis_path, BasisDocument))
        ranking = optimize_placement(
            disk,
            basis,
            _reference_layout(config),
            slot_count=settings.slots,
            select=settings.select,
            modes=settings.modes,
            score=settings.score,
            background=settings.background,
            arc_fraction=config.electrodes.arc_fraction,
            n_jobs=settings.n_jobs,
        )
        report = PlacementReport(
            protocol_id=basis.protocol_id,
            mesh_id=mesh_id(disk),
            basis_id=basis_id(basis),
            slots=settings.slots,
            select=settings.select,
            modes=settings.modes,
            score=settings.score,
            entries=[entry.to_entry() for entry in ranking],
        )
        target = _output(out, config)
        write_document(target, report)

        table = Table(title=f"Top placements ({len(ranking)} candidates)")
        table.add_column("Rank", justify="right")
        table.add_column("Slots")
        table.add_column("log score", justify="right")
        for entry in ranking[:top]:
            table.add_row(str(entry.rank), " ".join(map(str, entry.selected_slots)), f"{entry.log_score:.6f}")
        console.print(table)
        band = config.electrodes.slot_count
        if settings.select == band and settings.slots % band == 0:
            even = compare_placements(ranking, range(0, settings.slots, settings.slots // band))
            console.print(f"Evenly spaced band ranks {even.rank} with log score {even.log_score:.6f}")
        console.print(f"[green]Wrote placement report to {target}[/green]")


@app.command()
def project(
    basis_path: Path = typer.Option(..., "--basis", help="Basis JSON"),
    bad: str = typer.Option(..., "--bad", help="Bad electrodes, e.g. 0,3, or \"auto\" to detect them"),
    frames_path: Path = typer.Option(..., "--in", help="Frames CSV (full or reduced width)"),
    out: Path = typer.Option(Path("frames_projected.csv"), "--out", help="Projected frames CSV"),
    modes: Optional[int] = typer.Option(None, "--modes", help="Least-squares mode count (default: projection.modes)"),
    square: bool = typer.Option(False, "--square", help="Use D' modes and invert the square restricted basis"),
    regularize: Optional[bool] = typer.Option(None, "--regularize/--strict", help="Pseudo-inverse fallback"),
    threshold: Optional[float] = typer.Option(None, "--threshold", help="Condition number limit"),
):
    """Project reduced frames back to full-length frames."""
    with _guard("project"):
        config = _config()
        settings = _override(config.projection, modes=modes, regularize=regularize, condition_threshold=threshold)
        basis = basis_from_document(read_document(basis_path, BasisDocument))
        rows, header = read_frames(frames_path)
        protocol = _protocol_from_header(header, frames_path)
        require_same_protocol(basis.protocol_id, header["protocol_id"], str(frames_path))
        if bad.strip().lower() == "auto":
            if rows.shape[1] != protocol.measurement_count:
                raise InvalidParameterError("--bad auto needs full-width frames")
            bad_electrodes = detect_bad_electrodes(rows, protocol)
        else:
            bad_electrodes = _parse_electrodes(bad)
        op = build_projector(
            basis,
            protocol,
            bad_electrodes,
            condition_threshold=settings.condition_threshold,
            regularize=settings.regularize,
            cutoff=settings.cutoff,
            modes=None if square else settings.modes,
        )
        if rows.shape[1] == op.full_count:
            rows = restrict(rows, op.valid_indices)
        elif rows.shape[1] != op.valid_count:
            raise ArtifactError(
                f"{frames_path}: {rows.shape[1]} columns fit neither D={op.full_count} nor D'={op.valid_count}"
            )
        projected = apply_projector(op, rows)
        target = _output(out, config)
        write_frames(
            target,
            projected,
            {
                "protocol_id": op.protocol_id,
                "electrodes": protocol.electrode_count,
                "bad": ",".join(map(str, op.bad_electrodes)),
                "basis": op.basis_id,
                "source": file_hash(frames_path),
                "modes": op.modes,
                "method": op.method,
            },
        )
        console.print(
            f"[green]Projected {projected.shape[0]} frames (D'={op.valid_count}, "
            f"condition {op.condition:.3e}) to {target}[/green]"
        )


@app.command("eval")
def eval_projection(
    truth_path: Path = typer.Option(..., "--truth", help="True full frames CSV"),
    projected_path: Path = typer.Option(..., "--projected", help="Projected frames CSV"),
    out: Path = typer.Option(Path("eval.json"), "--out", help="Evaluation report JSON"),
):
    """Relative L2 error of projected frames against truth and the zero-fill baseline."""
    with _guard("eval"):
        config = _config()
        truth, truth_header = read_frames(truth_path)
        projected, projected_header = read_frames(projected_path)
        require_same_protocol(truth_header["protocol_id"], projected_header["protocol_id"], str(projected_path))
        if truth.shape != projected.shape:
            raise ArtifactError(f"frame shapes differ: truth {truth.shape}, projected {projected.shape}")
        protocol = _protocol_from_header(truth_header, truth_path)
        bad_electrodes = _parse_electrodes(projected_header.get("bad", ""))
        valid = valid_subset(protocol, bad_electrodes)
        errors = relative_errors(truth, projected)
        baseline_errors = relative_errors(truth, zero_fill(restrict(truth, valid), valid, protocol.measurement_count))
        report = ProjectionEvaluation(
            protocol_id=truth_header["protocol_id"],
            truth=file_hash(truth_path),
            projected=file_hash(projected_path),
            bad_electrodes=bad_electrodes,
            frames=int(truth.shape[0]),
            errors=errors.tolist(),
            baseline_errors=baseline_errors.tolist(),
            summary=summarize(errors),
            baseline=summarize(baseline_errors),
            beats_baseline_fraction=float(np.mean(errors < baseline_errors)),
        )
        target = _output(out, config)
        write_document(target, report)

        table = Table(title=report.metric)
        table.add_column("")
        table.add_column("median", justify="right")
        table.add_column("mean", justify="right")
        table.add_column("p95", justify="right")
        for label, summary in (("projected", report.summary), ("zero-fill", report.baseline)):
            table.add_row(label, f"{summary.median:.4e}", f"{summary.mean:.4e}", f"{summary.p95:.4e}")
        console.print(table)
        console.print(f"Projection beats zero-fill on {100 * report.beats_baseline_fraction:.1f}% of frames")


@app.command()
def fault(
    frames_path: Path = typer.Option(..., "--in", help="Full frames CSV"),
    bad: str = typer.Option(..., "--bad", help="Electrodes to fail, e.g. 0"),
    model: str = typer.Option("drop", "--model", help="drop | zero | saturate"),
    out: Path = typer.Option(Path("frames_faulty.csv"), "--out", help="Faulty frames CSV"),
):
    """Simulate failed electrodes on a frames file."""
    with _guard("fault"):
        config = _config()
        if model not in FAULT_MODELS:
            raise InvalidParameterError(f"fault model must be one of {', '.join(FAULT_MODELS)}")
        rows, header = read_frames(frames_path)
        protocol = _protocol_from_header(header, frames_path)
        bad_electrodes = _parse_electrodes(bad)
        corrupted, valid = inject_fault(rows, protocol, bad_electrodes, model=model)
        target = _output(out, config)
        write_frames(
            target,
            corrupted,
            {
                "protocol_id": header["protocol_id"],
                "electrodes": protocol.electrode_count,
                "bad": ",".join(map(str, bad_electrodes)),
                "fault": model,
                "source": file_hash(frames_path),
            },
        )
        console.print(f"[green]Wrote {corrupted.shape[0]} frames with {len(valid)} valid measurements to {target}[/green]")


@app.command()
def render(
    mesh_path: Path = typer.Option(..., "--mesh", help="Mesh JSON"),
    basis_path: Path = typer.Option(..., "--basis", help="Basis JSON"),
    jacobian_path: Path = typer.Option(..., "--jacobian", help="Reference Jacobian JSON"),
    modes: str = typer.Option("1,2,3", "--modes", help="1-based POD modes, one panel each"),
    out: Path = typer.Option(Path("modes.svg"), "--out", help="SVG output"),
):
    """Draw mesh images of POD modes on one shared color scale."""
    with _guard("render"):
        config = _config()
        disk = _load_mesh(mesh_path)
        basis = basis_from_document(read_document(basis_path, BasisDocument))
        document = read_document(jacobian_path, JacobianDocument)
        if document.mesh_id != mesh_id(disk):
            raise ArtifactError(f"{jacobian_path} was computed on a different mesh")
        reference = jacobian_from_document(document)
        panel_modes = parse_modes(modes)
        images = mesh_pod(reference, basis, max(panel_modes)).matrix[:, [m - 1 for m in panel_modes]]
        spec = RenderSpec(
            color_range=shared_color_range(images),
            size=config.render.panel_size,
            panel_modes=panel_modes,
            colormap=config.render.colormap,
        )
        target = _output(out, config)
        atomic_write_text(target, render_modes_svg(disk, images, spec))
        console.print(f"[green]Wrote {len(panel_modes)}-panel render to {target}[/green]")


@app.command("render-layout")
def render_layout(
    report_path: Path = typer.Option(..., "--report", help="Placement report JSON"),
    rank: int = typer.Option(1, "--rank", help="Which ranked placement to draw"),
    out: Path = typer.Option(Path("layout.svg"), "--out", help="SVG output"),
):
    """Draw a ranked placement against the evenly spaced reference band."""
    with _guard("render-layout"):
        config = _config()
        report = read_document(report_path, PlacementReport)
        entry = next((e for e in report.entries if e.rank == rank), None)
        if entry is None:
            raise InvalidParameterError(f"rank {rank} is not in {report_path}")
        band = config.electrodes.slot_count
        reference = range(0, report.slots, report.slots // band) if report.slots % band == 0 else ()
        svg = render_layout_svg(
            report.slots,
            entry.slots,
            default_electrode_arc(report.slots, config.electrodes.arc_fraction),
            size=config.render.panel_size,
            reference=reference,
            title=f"rank {entry.rank}: slots {' '.join(map(str, entry.slots))}",
        )
        target = _output(out, config)
        atomic_write_text(target, svg)
        console.print(f"[green]Wrote layout render to {target}[/green]")


@app.command()
def ablation(
    basis_path: Path = typer.Option(..., "--basis", help="Basis JSON"),
    frames_path: Optional[Path] = typer.Option(None, "--frames", help="Held-out full frames CSV for residuals"),
    truth_path: Optional[Path] = typer.Option(None, "--truth", help="True full frames CSV for projection errors"),
    dropout: int = typer.Option(1, "--dropout", help="Electrodes dropped at once"),
    modes: Optional[int] = typer.Option(None, "--modes", help="Least-squares mode count (default: projection.modes)"),
    square: bool = typer.Option(False, "--square", help="Use D' modes for every dropout set"),
    out: Path = typer.Option(Path("ablation.json"), "--out", help="Conditioning report JSON"),
):
    """Conditioning, residual and projection error for every dropout set."""
    with _guard("ablation"):
        config = _config()
        settings = _override(config.projection, modes=modes)
        basis = basis_from_document(read_document(basis_path, BasisDocument))
        loaded: dict[str, np.ndarray | None] = {"frames": None, "truth": None}
        for key, path in (("frames", frames_path), ("truth", truth_path)):
            if path is not None:
                data, header = read_frames(path)
                require_same_protocol(basis.protocol_id, header["protocol_id"], str(path))
                loaded[key] = data
        threshold = settings.condition_threshold
        rows = conditioning_report(
            basis,
            basis.protocol,
            threshold=threshold,
            dropout_size=dropout,
            modes=None if square else settings.modes,
            frames=loaded["frames"],
            truth=loaded["truth"],
            cutoff=settings.cutoff,
        )
        document = ConditioningReportDocument(
            protocol_id=basis.protocol_id, basis_id=basis_id(basis), threshold=threshold, rows=rows
        )
        target = _output(out, config)
        write_document(target, document)

        table = Table(title="Dropout conditioning")
        for column in ("Bad", "D'", "Modes", "Condition", "Residual", "Projection error"):
            table.add_column(column, justify="right")
        for row in rows:
            table.add_row(
                ",".join(map(str, row.electrodes)),
                str(row.valid_count),
                str(row.modes),
                "inf" if row.condition is None else f"{row.condition:.3e}",
                "-" if row.residual is None else f"{row.residual:.2e}",
                "-" if row.projection_error is None else f"{row.projection_error:.2e}",
                style="red" if row.flagged else None,
            )
        console.print(table)


@app.command("init-config")
def init_config(force: bool = typer.Option(False, "--force", help="Overwrite an existing file")):
    """Write the default configuration."""
    config_path = _config_path_from_ctx()
    if config_path.exists() and not force:
        console.print(f"[red]{config_path} already exists (use --force)[/red]")
        raise typer.Exit(code=EXIT_USAGE)
    save_config(SystemConfig(), config_path, fmt="json" if config_path.suffix == ".json" else "yaml")
    console.print(f"[green]Wrote default config to {config_path}[/green]")


@app.command()
def validate():
    """Validate config file."""
    try:
        load_config(_config_path_from_ctx())
    except ConfigError as exc:
        console.print(f"[red]Config invalid: {exc}[/red]")
        raise typer.Exit(code=EXIT_DATA)
    console.print("[green]Config is valid[/green]")


def main():
    try:
        code = app(standalone_mode=False)
    except click.UsageError as exc:
        err_console.print(f"[red]{exc.format_message()}[/red]")
        sys.exit(EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except OSError as exc:
        err_console.print(f"[red]{exc.strerror or exc}: {exc.filename or ''}[/red]")
        sys.exit(EXIT_DATA)
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
