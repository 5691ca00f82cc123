import itertools

import numpy as np
import pytest

from pod_eit.core.exceptions import ArtifactError, InvalidParameterError
from pod_eit.core.models import ProtocolDocument
from pod_eit.eit.protocol import (
    NO_PARTNER,
    build_protocol,
    deduplicate_onsager,
    max_independent,
    protocol_from_document,
    protocol_id,
    protocol_to_document,
    rotate_measurements,
    skip_protocol,
    valid_subset,
)


def test_max_independent():
    assert max_independent(8) == 20
    assert max_independent(16) == 104
    assert max_independent(3) == 0
    with pytest.raises(InvalidParameterError):
        max_independent(2)


def test_skip_protocol_for_eight(skip8):
    assert skip8.measurement_count == 40
    assert skip8.measurements[0].tolist() == [0, 1, 2, 3]
    # drive-major: five sense pairs per drive pair
    assert skip8.measurements[:5, :2].tolist() == [[0, 1]] * 5
    assert len({tuple(row) for row in skip8.measurements.tolist()}) == 40
    for a, b, c, d in skip8.measurements.tolist():
        assert {a, b}.isdisjoint({c, d})


@pytest.mark.parametrize("count", range(5, 17))
def test_skip_protocol_doubles_independent_count(count):
    assert skip_protocol(count).measurement_count == 2 * max_independent(count)


def test_skip_protocol_needs_five_electrodes():
    with pytest.raises(InvalidParameterError):
        skip_protocol(4)


def test_onsager_pairing_is_an_involution(skip8):
    partner = skip8.onsager_partner
    assert np.all(partner != NO_PARTNER)
    assert np.array_equal(partner[partner], np.arange(40))
    assert np.all(partner != np.arange(40))
    swapped = skip8.measurements[partner][:, [2, 3, 0, 1]]
    assert np.array_equal(swapped, skip8.measurements)


def test_protocol_without_partners():
    protocol = build_protocol(8, [(0, 1, 2, 3), (0, 1, 4, 5)])
    assert protocol.onsager_partner.tolist() == [NO_PARTNER, NO_PARTNER]


def test_repeated_electrode_rejected():
    with pytest.raises(InvalidParameterError):
        build_protocol(8, [(0, 1, 1, 2)])
    with pytest.raises(InvalidParameterError):
        build_protocol(8, [(0, 1, 2, 8)])


def test_no_dropout_keeps_everything(skip8):
    assert valid_subset(skip8, []) == list(range(40))


def test_single_dropout_leaves_twenty(skip8):
    for electrode in range(8):
        brute = [i for i, m in enumerate(skip8.measurements.tolist()) if electrode not in m]
        valid = valid_subset(skip8, {electrode})
        assert valid == brute
        assert len(valid) == 20


def test_valid_subset_is_monotone(skip8):
    for small in itertools.combinations(range(8), 1):
        for extra in range(8):
            larger = set(small) | {extra}
            assert set(valid_subset(skip8, larger)) <= set(valid_subset(skip8, small))


def test_dropout_invalidating_everything_rejected(skip8):
    with pytest.raises(InvalidParameterError):
        valid_subset(skip8, range(5))


def test_dropout_outside_range_rejected(skip8):
    with pytest.raises(InvalidParameterError):
        valid_subset(skip8, [8])


def test_deduplicate_keeps_one_of_each_pair(skip8):
    reduced, kept = deduplicate_onsager(skip8)
    assert reduced.measurement_count == 20
    assert kept == sorted(kept)
    rows = {tuple(row) for row in reduced.measurements.tolist()}
    for a, b, c, d in rows:
        assert (c, d, a, b) not in rows


def test_rotation_permutes_measurements(skip8):
    p = rotate_measurements(skip8, 3)
    assert sorted(p.tolist()) == list(range(40))
    assert np.array_equal(skip8.measurements[p], (skip8.measurements + 3) % 8)


def test_protocol_document_roundtrip(skip8):
    restored = protocol_from_document(protocol_to_document(skip8))
    assert np.array_equal(restored.measurements, skip8.measurements)
    assert protocol_id(restored) == protocol_id(skip8)
    assert protocol_id(skip8) != protocol_id(skip_protocol(6))


def test_invalid_protocol_document():
    with pytest.raises(ArtifactError):
        protocol_from_document(ProtocolDocument(electrode_count=4, measurements=[(0, 1, 2, 2)]))
