import pytest

from pod_eit.core.models import SessionSpec
from pod_eit.eit.mesh import build_disk_mesh, evenly_spaced_layout
from pod_eit.eit.protocol import skip_protocol
from pod_eit.pod.basis import fit_pod
from pod_eit.synth.session import simulate_session


@pytest.fixture(scope="session")
def disk():
    return build_disk_mesh(symmetry=16)


@pytest.fixture(scope="session")
def band():
    return evenly_spaced_layout(8)


@pytest.fixture(scope="session")
def skip8():
    return skip_protocol(8)


@pytest.fixture(scope="session")
def training(disk, band, skip8):
    spec = SessionSpec(frame_count=120, contact_noise=0.05, seed=0)
    return simulate_session(disk, band, skip8, spec)


@pytest.fixture(scope="session")
def trained_basis(training, skip8):
    return fit_pod(training.frames, skip8, source="training")
