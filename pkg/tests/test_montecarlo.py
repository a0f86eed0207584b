import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyntk.montecarlo import McEstimate, chunked_mean


def normal(rng, n):
    return rng.standard_normal(n)


class TestChunkedMean:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            chunked_mean(normal, 0, seed=1)

    def test_single_sample(self):
        est = chunked_mean(normal, 1, seed=3)
        assert est.samples == 1 and est.std_error == 0.0

    @pytest.mark.parametrize("workers", [2, 4])
    def test_worker_invariance(self, workers):
        a = chunked_mean(normal, 10_000, seed=7, chunk_size=1000)
        b = chunked_mean(normal, 10_000, seed=7, workers=workers, chunk_size=1000)
        assert a == b

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3000), st.integers(50, 700))
    def test_merge_matches_direct(self, samples, chunk):
        est = chunked_mean(normal, samples, seed=5, chunk_size=chunk)
        from polyntk.montecarlo import substream

        sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
        vals = np.concatenate([normal(substream(5, i), s) for i, s in enumerate(sizes)])
        assert est.value == pytest.approx(vals.mean(), abs=1e-12)
        if samples > 1:
            assert est.std_error == pytest.approx(vals.std(ddof=1) / math.sqrt(samples), rel=1e-9)

    def test_seed_changes_value(self):
        assert chunked_mean(normal, 100, seed=1).value != chunked_mean(normal, 100, seed=2).value

    def test_within(self):
        est = McEstimate(1.0, 0.1, 100)
        assert est.within(1.25) and not est.within(1.35)
        assert est.within(1.35, floor=0.1)
