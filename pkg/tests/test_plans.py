import json
import math

import numpy as np
import pytest

from planforge.plans import (
    BOUNDARY_CORNERS,
    CANVAS,
    FloorPlan,
    Room,
    canonical_order,
    check_dataset_conventions,
    decode_plan,
    denormalize,
    encode_condition,
    encode_plan,
    load_plan,
    normalize,
    pad_boundary,
    plan_from_dict,
    plan_to_dict,
    save_plan,
)

RECT = [(0, 0), (100, 0), (100, 200), (0, 200)]


class TestNormalize:
    def test_coordinate_endpoints(self):
        assert normalize(0, "coordinate") == -1.0
        assert normalize(255, "coordinate") == 1.0
        assert normalize(127.5, "coordinate") == 0.0

    def test_type_endpoints(self):
        assert normalize(0, "type") == -1.0
        assert normalize(6, "type") == 1.0
        assert normalize(3, "type") == 0.0

    def test_flag(self):
        assert normalize(0, "flag") == -1.0
        assert normalize(1, "flag") == 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            normalize(256, "coordinate")
        with pytest.raises(ValueError):
            normalize(-0.5, "coordinate")
        with pytest.raises(ValueError):
            normalize(7, "type")

    def test_unknown_domain(self):
        with pytest.raises(ValueError):
            normalize(0, "pixels")

    def test_roundtrip_integer_grid(self):
        v = np.arange(256, dtype=np.float64)
        back = denormalize(normalize(v, "coordinate"), "coordinate")
        assert np.allclose(back, v, atol=1e-9)

    def test_example_row_values(self):
        # living room (type 1) at (85, 120), 70x90 -- derived by hand:
        # flag 2*1-1, type 1/3-1, coords (v-127.5)/127.5
        t = encode_plan(FloorPlan((Room(1, 85, 120, 70, 90),)))
        expected = [1.0, -2.0 / 3.0, -1.0 / 3.0, -1.0 / 17.0, -23.0 / 51.0, -5.0 / 17.0]
        assert np.allclose(t[0], expected, atol=1e-12)
        # frozen decimals for the same row
        assert np.allclose(
            t[0],
            [1.0, -0.6666666666666667, -0.33333333333333337,
             -0.05882352941176472, -0.45098039215686275, -0.2941176470588235],
            atol=1e-12,
        )


class TestRoomAndPlanInvariants:
    def test_bad_type(self):
        with pytest.raises(ValueError):
            Room(0, 50, 50, 10, 10)
        with pytest.raises(ValueError):
            Room(7, 50, 50, 10, 10)

    def test_nonpositive_size(self):
        with pytest.raises(ValueError):
            Room(1, 50, 50, 0, 10)
        with pytest.raises(ValueError):
            Room(1, 50, 50, 10, -5)

    def test_center_out_of_canvas(self):
        with pytest.raises(ValueError):
            Room(1, 300, 50, 10, 10)

    def test_too_many_rooms(self):
        rooms = tuple(Room(2, 20 + 10 * i, 20, 10, 10) for i in range(9))
        with pytest.raises(ValueError):
            FloorPlan(rooms)

    def test_boundary_corner_out_of_range(self):
        with pytest.raises(ValueError):
            FloorPlan((), boundary=[(0, 0), (256, 0), (256, 100), (0, 100)])

    def test_entrance_needs_four_corners(self):
        with pytest.raises(ValueError):
            FloorPlan((), boundary=RECT, entrance=[(0, 0), (10, 0), (10, 5)])

    def test_single_living_convention(self):
        two_living = FloorPlan((Room(1, 50, 50, 40, 40), Room(1, 150, 50, 40, 40)))
        with pytest.raises(ValueError):
            check_dataset_conventions(two_living)
        check_dataset_conventions(two_living, single_living=False)
        check_dataset_conventions(FloorPlan())  # empty plan is fine

    def test_boundary_canonical_start(self):
        p = FloorPlan((), boundary=[(100, 0), (100, 200), (0, 200), (0, 0)])
        assert p.boundary == ((0.0, 0.0), (100.0, 0.0), (100.0, 200.0), (0.0, 200.0))


class TestCanonicalOrder:
    def test_living_first_then_area_then_position(self):
        living = Room(1, 200, 200, 30, 30)  # smallest area but living
        big_a = Room(2, 60, 50, 60, 50)     # area 3000
        big_b = Room(3, 40, 50, 50, 60)     # area 3000, smaller cx
        small = Room(4, 100, 100, 25, 40)   # area 1000
        ordered = canonical_order([small, big_a, living, big_b])
        assert ordered == [living, big_b, big_a, small]

    def test_encode_uses_canonical_order(self):
        p1 = FloorPlan((Room(2, 60, 50, 60, 50), Room(1, 200, 200, 30, 30)))
        p2 = FloorPlan((Room(1, 200, 200, 30, 30), Room(2, 60, 50, 60, 50)))
        assert np.array_equal(encode_plan(p1), encode_plan(p2))


class TestCodec:
    def test_padding_rows_are_minus_one(self):
        t = encode_plan(FloorPlan((Room(1, 85, 120, 70, 90),)))
        assert np.array_equal(t[1:], np.full((7, 6), -1.0))

    def test_shape_and_range(self):
        rooms = (Room(1, 128, 128, 80, 60), Room(2, 40, 40, 30, 30))
        t = encode_plan(FloorPlan(rooms))
        assert t.shape == (8, 6)
        assert t.min() >= -1.0 and t.max() <= 1.0

    def test_decode_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            decode_plan(np.zeros((8, 5)))

    def test_roundtrip(self):
        rooms = (Room(1, 85, 120, 70, 90), Room(3, 40, 40, 30, 30), Room(2, 200, 64, 50, 48))
        plan = FloorPlan(rooms)
        back = decode_plan(encode_plan(plan))
        assert back.n_rooms() == 3
        for got, want in zip(back.rooms, canonical_order(rooms)):
            assert got.type_id == want.type_id
            assert math.isclose(got.cx, want.cx, abs_tol=1e-9)
            assert math.isclose(got.cy, want.cy, abs_tol=1e-9)
            assert math.isclose(got.w, want.w, abs_tol=1e-9)
            assert math.isclose(got.h, want.h, abs_tol=1e-9)

    def test_roundtrip_random_plans(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            rooms = []
            for i in range(n):
                w = int(rng.integers(8, 60))
                h = int(rng.integers(8, 60))
                cx = int(rng.integers(w // 2 + 1, 255 - w // 2))
                cy = int(rng.integers(h // 2 + 1, 255 - h // 2))
                rooms.append(Room(1 if i == 0 else int(rng.integers(2, 7)), cx, cy, w, h))
            plan = FloorPlan(tuple(rooms))
            t = encode_plan(plan)
            t2 = encode_plan(decode_plan(t))
            assert np.allclose(t, t2, atol=1e-12)

    def test_decode_is_total_on_noise(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            t = rng.uniform(-1, 1, size=(8, 6))
            plan = decode_plan(t)  # must not raise
            for r in plan.rooms:
                assert 1 <= r.type_id <= 6
                assert r.w >= 1.0 and r.h >= 1.0
                assert 0 <= r.cx <= 255 and 0 <= r.cy <= 255

    def test_decode_clamps(self):
        t = np.full((8, 6), -1.0)
        # type value 0.4 -> raw 4.2 -> rounds to bathroom (4)
        t[0] = [0.5, 0.4, 0.0, 0.0, 0.0, 0.0]
        # type below range clamps to 1, width -1 -> 0px -> floored to 1px
        t[1] = [1.0, -1.0, 0.0, 0.0, -1.0, 0.0]
        # type above range clamps to 6
        t[2] = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        # is-room exactly 0 is absent; slightly above is present
        t[3] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        t[4] = [1e-4, 0.0, 0.0, 0.0, 0.0, 0.0]
        plan = decode_plan(t)
        assert plan.n_rooms() == 4
        assert plan.rooms[0].type_id == 4
        assert plan.rooms[1].type_id == 1
        assert plan.rooms[1].w == 1.0
        assert plan.rooms[2].type_id == 6
        assert plan.rooms[3].type_id == 3  # raw 3.0 from value 0.0


class TestPadBoundary:
    def test_rectangle_to_eight_corners(self):
        # hand-simulated longest-edge midpoint splits, ties to lowest index:
        # split (100,0)-(100,200), then (0,200)-(0,0), then (0,0)-(100,0),
        # then (100,0)-(100,100)
        got = pad_boundary(RECT, n=8)
        assert got == [
            (0.0, 0.0), (50.0, 0.0), (100.0, 0.0), (100.0, 50.0),
            (100.0, 100.0), (100.0, 200.0), (0.0, 200.0), (0.0, 100.0),
        ]

    def test_default_pads_to_forty(self):
        got = pad_boundary(RECT)
        assert len(got) == BOUNDARY_CORNERS

    def test_originals_preserved_in_order(self):
        got = pad_boundary(RECT)
        idx = [got.index((float(x), float(y))) for x, y in RECT]
        assert idx == sorted(idx)
        assert idx[0] == 0

    def test_perimeter_preserved(self):
        got = pad_boundary(RECT)
        def perim(pts):
            return sum(math.dist(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))
        assert math.isclose(perim(got), perim(RECT), rel_tol=1e-12)

    def test_all_points_on_rectangle_sides(self):
        for x, y in pad_boundary(RECT):
            assert x in (0.0, 100.0) or y in (0.0, 200.0)

    def test_no_duplicate_corners(self):
        got = pad_boundary(RECT)
        assert len(set(got)) == len(got)

    def test_l_shape(self):
        l_shape = [(0, 0), (200, 0), (200, 100), (100, 100), (100, 200), (0, 200)]
        got = pad_boundary(l_shape)
        assert len(got) == 40
        idx = [got.index((float(x), float(y))) for x, y in l_shape]
        assert idx == sorted(idx)

    def test_too_many_corners_rejected(self):
        pts = [(i, 0) for i in range(41)]
        with pytest.raises(ValueError):
            pad_boundary(pts)

    def test_short_input_rejected(self):
        with pytest.raises(ValueError):
            pad_boundary([(0, 0), (10, 10)])


class TestCondition:
    def test_shapes(self):
        c = encode_condition(RECT, entrance=[(10, 0), (26, 0), (26, 6), (10, 6)])
        assert c.boundary_mat.shape == (8, 80)
        assert c.entrance_mat.shape == (8, 8)
        assert c.features().shape == (8, 88)

    def test_rows_replicated(self):
        c = encode_condition(RECT)
        assert all(np.array_equal(c.boundary_mat[0], c.boundary_mat[i]) for i in range(8))

    def test_entrance_values(self):
        c = encode_condition(RECT, entrance=[(10, 0), (26, 0), (26, 6), (10, 6)])
        row = [10 / 127.5 - 1, -1.0, 26 / 127.5 - 1, -1.0,
               26 / 127.5 - 1, 6 / 127.5 - 1, 10 / 127.5 - 1, 6 / 127.5 - 1]
        assert np.allclose(c.entrance_mat[0], row, atol=1e-12)

    def test_missing_entrance_is_zeros(self):
        c = encode_condition(RECT)
        assert np.array_equal(c.entrance_mat, np.zeros((8, 8)))

    def test_disabled_is_all_zeros(self):
        c = encode_condition(enabled=False)
        assert not c.enabled
        assert np.array_equal(c.features(), np.zeros((8, 88)))

    def test_enabled_without_boundary_rejected(self):
        with pytest.raises(ValueError):
            encode_condition(None)

    def test_rotation_invariance(self):
        rot = RECT[2:] + RECT[:2]
        a = encode_condition(RECT).features()
        b = encode_condition(rot).features()
        assert np.array_equal(a, b)


class TestInterchange:
    def test_roundtrip_file(self, tmp_path):
        plan = FloorPlan(
            (Room(1, 85, 120, 70, 90), Room(4, 40, 40, 30, 30)),
            boundary=RECT,
            entrance=[(10, 0), (26, 0), (26, 6), (10, 6)],
        )
        path = tmp_path / "p.json"
        save_plan(plan, path)
        back = load_plan(path)
        assert back == plan

    def test_integer_pixels_in_file(self, tmp_path):
        plan = FloorPlan((Room(2, 85.4, 120.6, 70.2, 89.9),))
        path = tmp_path / "p.json"
        save_plan(plan, path)
        d = json.loads(path.read_text())
        assert d["rooms"][0] == {"type": 2, "cx": 85, "cy": 121, "w": 70, "h": 90}
        assert d["boundary"] is None

    def test_load_then_encode_is_stable(self, tmp_path):
        plan = FloorPlan((Room(1, 85, 120, 70, 90), Room(3, 40, 40, 30, 30)))
        path = tmp_path / "p.json"
        save_plan(plan, path)
        t1 = encode_plan(load_plan(path))
        save_plan(load_plan(path), path)
        t2 = encode_plan(load_plan(path))
        assert np.array_equal(t1, t2)

    def test_polygon_passthrough(self, tmp_path):
        plan = FloorPlan((
            Room(2, 50, 50, 40, 40, polygon=((30, 30), (70, 30), (70, 90), (30, 90)), merged_with=1),
            Room(2, 50, 80, 40, 20, merged_with=0),
        ))
        path = tmp_path / "p.json"
        save_plan(plan, path)
        back = load_plan(path)
        assert back.rooms[0].polygon == ((30.0, 30.0), (70.0, 30.0), (70.0, 90.0), (30.0, 90.0))
        assert back.rooms[0].merged_with == 1
        assert back.rooms[1].merged_with == 0
        d = plan_to_dict(plan)
        assert "polygon" not in d["rooms"][1]
        assert plan_from_dict(d) == back
