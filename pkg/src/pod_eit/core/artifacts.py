"""Reading and writing the toolkit's on-disk artifacts.

JSON documents go through the pydantic models in :mod:`pod_eit.core.models`;
frame files are CSV with one ``# key=value;...`` header line followed by one
frame per row.
"""

import hashlib
import io
import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Mapping, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from pod_eit.core.exceptions import ArtifactError, ProtocolMismatchError

M = TypeVar("M", bound=BaseModel)

HASH_LENGTH = 12


def content_hash(content: str | bytes) -> str:
    """Short sha256 digest used to stamp artifacts."""
    if isinstance(content, str):
        content = content.encode("utf-8")
    return hashlib.sha256(content).hexdigest()[:HASH_LENGTH]


def canonical_json(data: object) -> str:
    return json.dumps(data, separators=(",", ":"), sort_keys=True)


def file_hash(path: Path | str) -> str:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"file not found: {path}")
    return content_hash(path.read_bytes())


def atomic_write_text(path: Path | str, content: str, backup: bool = False) -> None:
    """Replace ``path`` in one rename so readers never see a half-written artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if backup and path.exists():
        shutil.copy2(path, path.with_name(path.name + ".bak"))
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def write_document(path: Path | str, document: BaseModel) -> str:
    """Write a pydantic document as indented JSON, returning its content hash."""
    content = json.dumps(document.model_dump(mode="json"), indent=2) + "\n"
    atomic_write_text(Path(path), content)
    return content_hash(content)


def read_document(path: Path | str, model: Type[M]) -> M:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ArtifactError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ArtifactError(f"{path}: not a valid {model.__name__}: {exc.error_count()} errors") from exc


def format_header(fields: Mapping[str, object]) -> str:
    return ";".join(f"{key}={value}" for key, value in fields.items())


def parse_header(line: str) -> dict[str, str]:
    body = line.lstrip("#").strip()
    fields: dict[str, str] = {}
    for item in filter(None, body.split(";")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ArtifactError(f"malformed header field: {item!r}")
        fields[key.strip()] = value.strip()
    return fields


def write_frames(path: Path | str, frames: np.ndarray, header: Mapping[str, object]) -> str:
    """Write an (n, D) frame array, one frame per row, with a provenance header."""
    frames = np.atleast_2d(np.asarray(frames, dtype=float))
    buffer = io.StringIO()
    np.savetxt(buffer, frames, delimiter=",", fmt="%.17g", header=format_header(header), comments="# ")
    content = buffer.getvalue()
    atomic_write_text(Path(path), content)
    return content_hash(content)


def read_frames(path: Path | str) -> tuple[np.ndarray, dict[str, str]]:
    """Return ``(frames, header)`` with frames shaped (n, D)."""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise ArtifactError(f"{path}: missing '# protocol_id=...' header line")
    header = parse_header(first)
    if "protocol_id" not in header:
        raise ArtifactError(f"{path}: header carries no protocol_id")
    try:
        frames = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as exc:
        raise ArtifactError(f"{path}: unreadable frame data ({exc})") from exc
    if frames.size == 0:
        raise ArtifactError(f"{path}: contains no frames")
    if not np.all(np.isfinite(frames)):
        raise ArtifactError(f"{path}: contains non-finite entries")
    return frames, header


def require_same_protocol(expected: str, actual: str, what: str) -> None:
    if expected != actual:
        raise ProtocolMismatchError(
            f"protocol mismatch: {what} was built for protocol {actual}, expected {expected}"
        )
