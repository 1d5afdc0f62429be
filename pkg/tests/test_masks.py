import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clickloop.exceptions import ConfigError, InputError, ShapeMismatchError
from clickloop.masks import (
    connected_components,
    distance_transform,
    erode,
    iou,
    largest_region,
    region_center,
    threshold,
)

from .oracles import brute_distance_to_false, brute_iou, flood_fill_components

masks_16 = st.builds(
    lambda bits: np.array(bits, dtype=bool).reshape(8, 8),
    st.lists(st.booleans(), min_size=64, max_size=64),
)


def random_mask(rng, shape=(16, 16), density=0.5):
    return rng.random(shape) < density


class TestIou:
    def test_identity(self):
        m = np.eye(5, dtype=bool)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), dtype=bool)
        b = np.zeros((4, 4), dtype=bool)
        a[0, 0] = True
        b[3, 3] = True
        assert iou(a, b) == 0.0

    def test_left_columns_vs_top_rows(self):
        # 8 px each, overlapping in a 2x2 corner: 4 / 12
        a = np.zeros((4, 4), dtype=bool)
        a[:, :2] = True
        b = np.zeros((4, 4), dtype=bool)
        b[:2, :] = True
        assert iou(a, b) == pytest.approx(4 / 12)

    def test_both_empty_is_perfect(self):
        e = np.zeros((3, 3), dtype=bool)
        assert iou(e, e) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            iou(np.zeros((2, 2), dtype=bool), np.zeros((3, 3), dtype=bool))

    @given(masks_16, masks_16)
    def test_symmetry_and_bounds(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = random_mask(rng, (9, 11))
            b = random_mask(rng, (9, 11))
            assert iou(a, b) == pytest.approx(brute_iou(a, b))


class TestThreshold:
    def test_boundary_is_inclusive(self):
        p = np.full((2, 2), 0.5)
        assert threshold(p, 0.5).all()

    def test_just_below(self):
        p = np.full((2, 2), 0.49)
        assert not threshold(p, 0.5).any()

    def test_mixed_values(self):
        p = np.array([[0.2, 0.5], [0.7, 0.4]])
        expected = np.array([[False, True], [True, False]])
        assert (threshold(p, 0.5) == expected).all()

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 1.5])
    def test_tau_out_of_range(self, tau):
        with pytest.raises(ConfigError):
            threshold(np.zeros((2, 2)), tau)


class TestConnectedComponents:
    def test_empty_mask(self):
        assert connected_components(np.zeros((4, 4), dtype=bool), 8) == []

    def test_diagonal_connectivity(self):
        m = np.zeros((2, 2), dtype=bool)
        m[0, 0] = m[1, 1] = True
        assert len(connected_components(m, 4)) == 2
        assert len(connected_components(m, 8)) == 1

    def test_two_blocks(self):
        m = np.zeros((8, 8), dtype=bool)
        m[0:3, 0:3] = True
        m[5:7, 5:7] = True
        regions = connected_components(m, 8)
        assert [r.area for r in regions] == [9, 4]

    def test_labels_in_raster_discovery_order(self):
        m = np.zeros((5, 5), dtype=bool)
        m[0, 4] = True
        m[2, 0] = True
        m[4, 2] = True
        regions = connected_components(m, 4)
        assert [r.label for r in regions] == [1, 2, 3]
        assert [tuple(r.pixels[0]) for r in regions] == [(0, 4), (2, 0), (4, 2)]

    @pytest.mark.parametrize("connectivity", [4, 8])
    def test_matches_flood_fill(self, connectivity):
        rng = np.random.default_rng(11)
        for _ in range(25):
            m = random_mask(rng, (12, 12), density=0.45)
            regions = connected_components(m, connectivity)
            expected = flood_fill_components(m, connectivity)
            assert [sorted(map(tuple, r.pixels)) for r in regions] == expected

    @given(masks_16, st.sampled_from([4, 8]))
    @settings(max_examples=40)
    def test_partition_property(self, m, connectivity):
        regions = connected_components(m, connectivity)
        covered = np.zeros_like(m)
        total = 0
        for r in regions:
            covered[r.pixels[:, 0], r.pixels[:, 1]] = True
            total += r.area
        assert (covered == m).all()
        assert total == int(m.sum())

    def test_bad_connectivity(self):
        with pytest.raises(ConfigError):
            connected_components(np.zeros((2, 2), dtype=bool), 6)


class TestLargestRegion:
    def test_empty(self):
        assert largest_region([]) is None

    def test_strict_max(self):
        m = np.zeros((8, 8), dtype=bool)
        m[0:3, 0:3] = True
        m[5:7, 5:7] = True
        assert largest_region(connected_components(m, 8)).area == 9

    def test_tie_breaks_on_bbox_origin(self):
        m = np.zeros((8, 8), dtype=bool)
        m[5:7, 5:7] = True
        m[0:2, 0:2] = True
        winner = largest_region(connected_components(m, 8))
        assert winner.area == 4
        assert winner.bbox_origin == (0, 0)


class TestDistanceTransform:
    def test_all_false(self):
        assert (distance_transform(np.zeros((4, 4), dtype=bool)) == 0).all()

    def test_single_pixel(self):
        m = np.zeros((5, 5), dtype=bool)
        m[2, 2] = True
        assert distance_transform(m)[2, 2] == pytest.approx(1.0)

    def test_all_true_center_is_three(self):
        # border treated as false: the 5x5 center is 3 steps from outside
        dt = distance_transform(np.ones((5, 5), dtype=bool))
        assert dt[2, 2] == pytest.approx(3.0)

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            m = random_mask(rng, (16, 16), density=0.7)
            assert np.array_equal(distance_transform(m), brute_distance_to_false(m))


class TestRegionCenter:
    def test_single_pixel(self):
        m = np.zeros((5, 5), dtype=bool)
        m[3, 1] = True
        (region,) = connected_components(m, 8)
        assert region_center(region, distance_transform(m)) == (3, 1)

    def test_square_center(self):
        m = np.zeros((9, 9), dtype=bool)
        m[3:6, 3:6] = True
        (region,) = connected_components(m, 8)
        assert region_center(region, distance_transform(m)) == (4, 4)

    def test_l_shape_tie_break(self):
        # both arms are 1 px wide: dt is 1.0 everywhere, lexicographic min wins
        m = np.zeros((7, 7), dtype=bool)
        m[2, 2:5] = True
        m[2:5, 2] = True
        (region,) = connected_components(m, 8)
        assert region_center(region, distance_transform(m)) == (2, 2)

    @given(masks_16)
    @settings(max_examples=40)
    def test_membership(self, m):
        dt = distance_transform(m)
        for region in connected_components(m, 8):
            center = region_center(region, dt)
            assert m[center]

    def test_matches_exhaustive_argmax(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            m = random_mask(rng, (12, 12), density=0.6)
            dt = distance_transform(m)
            brute_dt = brute_distance_to_false(m)
            for region in connected_components(m, 8):
                pixels = sorted(map(tuple, region.pixels))
                best = max(pixels, key=lambda rc: (brute_dt[rc], (-rc[0], -rc[1])))
                assert region_center(region, dt) == best


class TestErode:
    def test_radius_zero_identity(self):
        rng = np.random.default_rng(1)
        m = random_mask(rng, (10, 10))
        assert (erode(m, 0) == m).all()

    def test_five_square_radius_one(self):
        m = np.ones((5, 5), dtype=bool)
        expected = np.zeros((5, 5), dtype=bool)
        expected[1:4, 1:4] = True
        assert (erode(m, 1) == expected).all()

    def test_single_pixel_vanishes(self):
        m = np.zeros((5, 5), dtype=bool)
        m[2, 2] = True
        assert not erode(m, 1).any()

    @given(masks_16, st.integers(0, 3), st.integers(0, 3))
    @settings(max_examples=40)
    def test_monotone_in_radius(self, m, r1, r2):
        small, big = sorted((r1, r2))
        assert not (erode(m, big) & ~erode(m, small)).any()


class TestValidation:
    def test_as_bool_requires_2d(self):
        with pytest.raises(ShapeMismatchError):
            connected_components(np.zeros((2, 2, 2), dtype=bool), 8)

    def test_empty_array_rejected(self):
        with pytest.raises(ShapeMismatchError):
            iou(np.zeros((0, 4), dtype=bool), np.zeros((0, 4), dtype=bool))
