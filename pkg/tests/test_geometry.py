import numpy as np
import pytest

from urbanrt.city import Building
from urbanrt.geometry import (
    Boxes,
    boxes_from_buildings,
    first_blocker,
    mirror_across_plane,
    points_in_footprint,
    segments_blocked,
)

from oracles import segment_hits_box


@pytest.fixture
def boxes():
    return boxes_from_buildings(
        [
            Building(center=(10.0, 0.0), width=4.0, height=20.0),
            Building(center=(30.0, 5.0), width=6.0, height=8.0),
        ]
    )


class TestSegmentsBlocked:
    def test_clear_above_buildings(self, boxes):
        assert not segments_blocked((0, 0, 25.0), (40, 0, 25.0), boxes)

    def test_through_building(self, boxes):
        assert segments_blocked((0, 0, 5.0), (20, 0, 5.0), boxes)

    def test_grazing_face_is_unblocked(self, boxes):
        # runs exactly along the x = 8 face of the first building
        assert not segments_blocked((8.0, -10, 5.0), (8.0, 10, 5.0), boxes)

    def test_endpoint_on_face_is_unblocked(self, boxes):
        # starts on the face and leaves outward
        assert not segments_blocked((8.0, 0, 5.0), (0.0, 0, 5.0), boxes)

    def test_agrees_with_scalar_oracle(self, boxes):
        rng = np.random.default_rng(11)
        lo = boxes.lo
        hi = boxes.hi
        for _ in range(1000):
            p0 = rng.uniform((-5, -15, 0.1), (45, 20, 30))
            p1 = rng.uniform((-5, -15, 0.1), (45, 20, 30))
            mine = bool(segments_blocked(p0, p1, boxes))
            ref = any(
                segment_hits_box(p0, p1, lo[i], hi[i]) for i in range(boxes.n)
            )
            assert mine == ref

    def test_vectorized_batch(self, boxes):
        p0 = np.array([[0, 0, 25.0], [0, 0, 5.0]])
        p1 = np.array([[40, 0, 25.0], [20, 0, 5.0]])
        assert segments_blocked(p0, p1, boxes).tolist() == [False, True]

    def test_empty_boxes(self):
        empty = Boxes(lo=np.zeros((0, 3)), hi=np.zeros((0, 3)))
        assert not segments_blocked((0, 0, 1.0), (1, 1, 1.0), empty)


class TestFirstBlocker:
    def test_nearest_box_wins(self, boxes):
        blocked, idx = first_blocker(np.array([0, 0, 5.0]), np.array([40, 2, 5.0]), boxes)
        assert blocked and idx == 0

    def test_direction_dependent(self, boxes):
        blocked, idx = first_blocker(np.array([40, 5, 5.0]), np.array([0, 0, 4.0]), boxes)
        assert blocked and idx == 1

    def test_clear(self, boxes):
        blocked, idx = first_blocker(np.array([0, -10, 5.0]), np.array([40, -10, 5.0]), boxes)
        assert not blocked and idx is None


def test_mirror_across_plane():
    p = np.array([3.0, 4.0, 5.0])
    assert np.allclose(mirror_across_plane(p, 0, 10.0), [17.0, 4.0, 5.0])
    assert np.allclose(mirror_across_plane(p, 2, 0.0), [3.0, 4.0, -5.0])
    # involution
    assert np.allclose(mirror_across_plane(mirror_across_plane(p, 1, -2.0), 1, -2.0), p)


def test_points_in_footprint(boxes):
    pts = np.array([[10.0, 0.0], [8.0, 0.0], [0.0, 0.0], [30.0, 5.0]])
    inside = points_in_footprint(pts, boxes)
    # boundary (8, 0) counts as outside (open footprint)
    assert inside.tolist() == [True, False, False, True]
