import numpy as np
import pytest

from ldenhancer import light_label

from label_oracle import dense_solve


def interior_curvature(x):
    lap = x[:-2, 1:-1] + x[2:, 1:-1] + x[1:-1, :-2] + x[1:-1, 2:] - 4 * x[1:-1, 1:-1]
    return float((lap**2).sum())


class TestClosedFormMatchesDenseSolve:
    @pytest.mark.parametrize("size", [8, 16, 32])
    @pytest.mark.parametrize("lam", [0.5, 10.0])
    def test_random_images(self, size, lam):
        rng = np.random.default_rng(size)
        img = rng.uniform(0.1, 0.9, (size, size))
        pair = light_label(img, lambda_smooth=lam)
        expected = dense_solve(img, lam)
        assert np.abs(pair.light - expected).max() <= 1e-6

    def test_three_channels_are_independent(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(0.1, 0.9, (16, 16, 3))
        pair = light_label(img, lambda_smooth=10.0)
        for c in range(3):
            single = light_label(img[..., c], lambda_smooth=10.0)
            assert np.array_equal(pair.light[..., c], single.light)


class TestFixedPoints:
    def test_constant_image(self):
        img = np.full((32, 32, 3), 0.3)
        pair = light_label(img)
        assert np.abs(pair.residual).max() < 1e-5
        assert np.abs(pair.light - img).max() < 1e-5

    def test_linear_ramp(self):
        ramp = np.tile(np.linspace(0.0, 1.0, 32), (32, 1))
        img = np.repeat(ramp[..., None], 3, axis=2)
        pair = light_label(img)
        assert np.abs(pair.residual).max() < 1e-5

    def test_tilted_plane(self):
        yy, xx = np.meshgrid(np.linspace(0, 0.5, 24), np.linspace(0, 0.4, 24), indexing="ij")
        pair = light_label(yy + xx)
        assert np.abs(pair.residual).max() < 1e-5


class TestCheckerboard:
    def test_high_frequency_collapses_to_mean(self):
        board = (np.indices((32, 32)).sum(axis=0) % 2).astype(np.float64)
        pair = light_label(board, lambda_smooth=10.0)
        assert np.abs(pair.light - 0.5).max() <= 0.05
        expected = dense_solve(board, 10.0)
        assert np.abs(pair.light - np.clip(expected, 0, 1)).max() <= 1e-6


class TestPairInvariants:
    def test_additivity(self):
        rng = np.random.default_rng(4)
        img = rng.random((24, 24, 3))
        pair = light_label(img)
        assert np.abs(pair.light + pair.residual - img).max() <= 1e-15

    def test_light_layer_in_unit_range_and_clips_reported(self):
        img = np.zeros((64, 64))
        img[20:40, 20:40] = 1.0  # sharp edge causes ringing past the range
        pair = light_label(img)
        assert pair.light.min() >= 0.0 and pair.light.max() <= 1.0
        assert pair.clipped > 0

    def test_no_clipping_on_gentle_images(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(0.3, 0.7, (32, 32))
        pair = light_label(img)
        assert pair.clipped == 0

    def test_smoothing_never_adds_curvature(self):
        rng = np.random.default_rng(6)
        img = rng.uniform(0.2, 0.8, (32, 32))
        pair = light_label(img)
        assert interior_curvature(pair.light) <= interior_curvature(img)

    def test_smoothing_monotone_in_lambda(self):
        rng = np.random.default_rng(7)
        img = rng.uniform(0.2, 0.8, (32, 32))
        energies = [
            interior_curvature(light_label(img, lambda_smooth=lam).light)
            for lam in (0.1, 1.0, 10.0, 100.0)
        ]
        assert all(a >= b for a, b in zip(energies, energies[1:]))

    def test_relabeling_contracts(self):
        rng = np.random.default_rng(8)
        img = rng.uniform(0.1, 0.9, (32, 32))
        first = light_label(img)
        second = light_label(first.light)
        assert np.abs(second.light - first.light).max() < np.abs(first.light - img).max()


class TestErrors:
    def test_non_positive_lambda(self):
        with pytest.raises(ValueError, match="lambda"):
            light_label(np.zeros((8, 8)), lambda_smooth=0.0)

    def test_non_finite_input(self):
        img = np.zeros((8, 8))
        img[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            light_label(img)

    def test_bad_rank(self):
        with pytest.raises(ValueError, match="2-D or 3-D"):
            light_label(np.zeros((8,)))
