import numpy as np

from mrmlab.rng import stream, stream_key


class TestStreamKeys:
    def test_deterministic(self):
        assert np.array_equal(stream_key(1, "field", 2, 3),
                              stream_key(1, "field", 2, 3))

    def test_distinct_across_path(self):
        keys = {
            tuple(stream_key(1, "field", 0, 0)),
            tuple(stream_key(1, "field", 0, 1)),
            tuple(stream_key(1, "field", 1, 0)),
            tuple(stream_key(2, "field", 0, 0)),
            tuple(stream_key(1, "bm", 0, 0)),
            tuple(stream_key(1, "corner")),
        }
        assert len(keys) == 6

    def test_order_insensitive_draws(self):
        # consuming stream A never perturbs stream B
        a1 = stream(7, "field", 0, 0).standard_normal(4)
        _ = stream(7, "field", 1, 0).standard_normal(1000)
        a2 = stream(7, "field", 0, 0).standard_normal(4)
        assert np.array_equal(a1, a2)

    def test_known_key_pinned(self):
        # frozen so that published grids stay reproducible across releases
        key = stream_key(42, "field", 0, 0)
        assert key.dtype == np.uint64
        assert tuple(key) == (4712685428258506665, 14294034866186181125)

    def test_string_and_int_parts_disambiguated(self):
        assert tuple(stream_key(0, "1")) != tuple(stream_key(0, 1))
