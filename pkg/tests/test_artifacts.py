import numpy as np
import pytest

from pod_eit.core.artifacts import (
    atomic_write_text,
    content_hash,
    read_document,
    read_frames,
    require_same_protocol,
    write_document,
    write_frames,
)
from pod_eit.core.exceptions import ArtifactError, ProtocolMismatchError
from pod_eit.core.models import MeshDocument


def test_frames_keep_full_precision(tmp_path):
    path = tmp_path / "frames.csv"
    frames = np.random.default_rng(0).standard_normal((3, 5)) * 1e-3
    digest = write_frames(path, frames, {"protocol_id": "abc123", "electrodes": 8})
    rows, header = read_frames(path)
    np.testing.assert_array_equal(rows, frames)
    assert header == {"protocol_id": "abc123", "electrodes": "8"}
    assert digest == content_hash(path.read_text())


def test_single_frame_stays_two_dimensional(tmp_path):
    path = tmp_path / "one.csv"
    write_frames(path, np.arange(4.0), {"protocol_id": "x"})
    rows, _ = read_frames(path)
    assert rows.shape == (1, 4)


def test_frames_without_header_are_rejected(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("1,2,3\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        read_frames(path)
    path.write_text("# electrodes=8\n1,2,3\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        read_frames(path)


def test_missing_and_malformed_documents(tmp_path):
    with pytest.raises(ArtifactError):
        read_document(tmp_path / "absent.json", MeshDocument)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ArtifactError):
        read_document(broken, MeshDocument)
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"radius": 1.0}', encoding="utf-8")
    with pytest.raises(ArtifactError):
        read_document(wrong, MeshDocument)


def test_documents_are_stable(tmp_path):
    document = MeshDocument(radius=1.0, nodes=[(0.0, 0.0)], triangles=[], boundary=[])
    first = write_document(tmp_path / "a.json", document)
    second = write_document(tmp_path / "b.json", document)
    assert first == second
    assert read_document(tmp_path / "a.json", MeshDocument) == document


def test_protocol_mismatch():
    require_same_protocol("abc", "abc", "frames")
    with pytest.raises(ProtocolMismatchError):
        require_same_protocol("abc", "def", "frames")


def test_atomic_write_keeps_backup_and_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out" / "layout.svg"
    atomic_write_text(target, "<svg>old</svg>")
    atomic_write_text(target, "<svg>new</svg>", backup=True)
    assert target.read_text() == "<svg>new</svg>"
    assert (target.parent / "layout.svg.bak").read_text() == "<svg>old</svg>"
    assert sorted(p.name for p in target.parent.iterdir()) == ["layout.svg", "layout.svg.bak"]
