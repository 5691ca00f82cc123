"""SVG renders of mesh fields and electrode layouts."""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from jinja2 import Environment, FileSystemLoader, StrictUndefined
from matplotlib import colormaps
from matplotlib.colors import Normalize, to_hex

from pod_eit.core.exceptions import InvalidParameterError
from pod_eit.eit.mesh import Mesh

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"
COLORBAR_STEPS = 11
MARGIN = 0.06

_env = Environment(
    loader=FileSystemLoader(str(TEMPLATE_DIR)),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)


@dataclass(frozen=True)
class RenderSpec:
    color_range: float
    size: int = 320
    panel_modes: tuple[int, ...] = (1, 2, 3)
    colormap: str = "RdBu_r"

    def __post_init__(self) -> None:
        if not self.color_range > 0:
            raise InvalidParameterError("color_range must be positive")
        if self.size < 16:
            raise InvalidParameterError("panel size must be at least 16 pixels")


def shared_color_range(fields: np.ndarray) -> float:
    """Symmetric bound covering every panel; 1 for an all-zero field."""
    bound = float(np.abs(fields).max()) if np.size(fields) else 0.0
    return bound if bound > 0 else 1.0


def parse_modes(text: str) -> tuple[int, ...]:
    try:
        modes = tuple(int(item) for item in text.split(",") if item.strip())
    except ValueError as exc:
        raise InvalidParameterError(f"modes must be comma-separated integers, got {text!r}") from exc
    if not modes or min(modes) < 1:
        raise InvalidParameterError("modes are 1-based and at least one is required")
    return modes


def _to_pixels(points: np.ndarray, radius: float, size: int, offset: float) -> np.ndarray:
    scale = size * (1.0 - 2 * MARGIN) / (2.0 * radius)
    x = offset + size / 2.0 + points[..., 0] * scale
    y = size / 2.0 - points[..., 1] * scale
    return np.stack((x, y), axis=-1)


def _points(polygon: np.ndarray) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in polygon)


def render_modes_svg(mesh: Mesh, fields: np.ndarray, spec: RenderSpec) -> str:
    """Side-by-side panels, one per column of ``fields`` (M, k), on one shared color scale."""
    fields = np.atleast_2d(np.asarray(fields, dtype=float).T).T
    if fields.shape[0] != mesh.element_count:
        raise InvalidParameterError(f"fields have {fields.shape[0]} rows, mesh has {mesh.element_count} elements")
    if fields.shape[1] != len(spec.panel_modes):
        raise InvalidParameterError("one field column per panel mode is required")
    cmap = colormaps[spec.colormap]
    norm = Normalize(vmin=-spec.color_range, vmax=spec.color_range, clip=True)
    panels = []
    for j, mode in enumerate(spec.panel_modes):
        pixels = _to_pixels(mesh.nodes[mesh.triangles], mesh.radius, spec.size, j * spec.size)
        colors = cmap(norm(fields[:, j]))
        panels.append(
            {
                "title": f"mode {mode}",
                "x": j * spec.size + spec.size / 2.0,
                "triangles": [
                    {"points": _points(poly), "fill": to_hex(color)} for poly, color in zip(pixels, colors)
                ],
            }
        )
    ticks = np.linspace(-spec.color_range, spec.color_range, COLORBAR_STEPS)
    step = spec.size * len(panels) / COLORBAR_STEPS
    colorbar = [
        {"x": f"{i * step:.2f}", "width": f"{step:.2f}", "fill": to_hex(cmap(norm(v)))}
        for i, v in enumerate(ticks)
    ]
    return _env.get_template("modes.svg.j2").render(
        width=spec.size * len(panels),
        height=spec.size + 48,
        size=spec.size,
        panels=panels,
        colorbar=colorbar,
        color_range=f"{spec.color_range:.4g}",
    )


def render_layout_svg(
    slot_count: int,
    selected: Sequence[int],
    electrode_arc: float,
    size: int = 320,
    reference: Sequence[int] = (),
    title: str = "",
) -> str:
    """Candidate slots as ticks, chosen electrodes as thick arcs, optional reference band dashed."""
    radius = 1.0
    centre = size / 2.0
    scale = size * (1.0 - 2 * MARGIN) / 2.0

    def arc(slot: int) -> dict:
        theta = 2.0 * np.pi * slot / slot_count
        a0, a1 = theta - electrode_arc, theta + electrode_arc
        return {
            "slot": slot,
            "x0": f"{centre + scale * np.cos(a0):.2f}",
            "y0": f"{centre - scale * np.sin(a0):.2f}",
            "x1": f"{centre + scale * np.cos(a1):.2f}",
            "y1": f"{centre - scale * np.sin(a1):.2f}",
            "lx": f"{centre + 1.12 * scale * np.cos(theta):.2f}",
            "ly": f"{centre - 1.12 * scale * np.sin(theta):.2f}",
        }

    return _env.get_template("layout.svg.j2").render(
        size=size,
        centre=f"{centre:.2f}",
        radius=f"{scale * radius:.2f}",
        slots=[arc(s) for s in range(slot_count)],
        selected=[arc(int(s)) for s in sorted(selected)],
        reference=[arc(int(s)) for s in sorted(reference)],
        title=title,
    )
