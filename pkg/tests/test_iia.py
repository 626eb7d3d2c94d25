import pytest
import torch

from ldenhancer import interweave_adjust


def rand(shape, seed, low=0.0, high=1.0):
    gen = torch.Generator().manual_seed(seed)
    return low + (high - low) * torch.rand(*shape, generator=gen)


class TestIdentityAndFixedPoints:
    def test_equal_maps_leave_image_unchanged(self):
        image = rand((2, 3, 8, 8), 0)
        maps = rand((2, 3, 8, 8), 1, -1.0, 1.0)
        trace = interweave_adjust(image, maps, maps, 8)
        assert torch.equal(trace.final, image)
        assert trace.clamp_counts == [0] * 8

    def test_zero_and_one_are_fixed_points(self):
        image = torch.zeros(1, 3, 4, 4)
        image[0, :, :2] = 1.0
        suppression = rand((1, 3, 4, 4), 2, -1.0, 1.0)
        enhancement = rand((1, 3, 4, 4), 3, -1.0, 1.0)
        trace = interweave_adjust(image, suppression, enhancement, 8)
        assert torch.equal(trace.final, image)

    def test_scalar_single_step(self):
        # 0.5 + 0.8 * 0.5 * 0.5 = 0.7
        image = torch.full((1, 1, 1, 1), 0.5)
        suppression = torch.zeros(1, 1, 1, 1)
        enhancement = torch.full((1, 1, 1, 1), 0.8)
        trace = interweave_adjust(image, suppression, enhancement, 1)
        assert float(trace.final) == pytest.approx(0.7, abs=1e-7)


class TestRangeAndTrace:
    def test_output_stays_in_unit_range(self):
        for seed in range(5):
            image = rand((1, 3, 16, 16), seed)
            s = rand((1, 3, 16, 16), seed + 100, -1.0, 1.0)
            e = rand((1, 3, 16, 16), seed + 200, -1.0, 1.0)
            trace = interweave_adjust(image, s, e, 8)
            for frame in trace.frames:
                assert float(frame.min()) >= 0.0
                assert float(frame.max()) <= 1.0

    def test_trace_has_n_plus_one_frames(self):
        image = rand((1, 3, 4, 4), 0)
        zero = torch.zeros_like(image)
        trace = interweave_adjust(image, zero, zero, 5)
        assert len(trace.frames) == 6
        assert torch.equal(trace.frames[0], image)
        assert trace.iterations == 5

    def test_clamp_events_are_counted(self):
        # 0.75 + 2 * 0.75 * 0.25 = 1.125 leaves the range and is clamped
        image = torch.full((1, 1, 1, 1), 0.75)
        suppression = torch.full((1, 1, 1, 1), -1.0)
        enhancement = torch.full((1, 1, 1, 1), 1.0)
        trace = interweave_adjust(image, suppression, enhancement, 1)
        assert float(trace.final) == 1.0
        assert trace.clamp_counts[0] == 1


class TestMonotoneDirection:
    def test_positive_gain_increases_interior_pixels(self):
        image = rand((1, 3, 8, 8), 4, 0.05, 0.95)
        suppression = torch.zeros_like(image)
        enhancement = torch.full_like(image, 0.3)
        trace = interweave_adjust(image, suppression, enhancement, 1)
        assert bool((trace.final > image).all())

    def test_negative_gain_decreases_interior_pixels(self):
        image = rand((1, 3, 8, 8), 5, 0.05, 0.95)
        suppression = torch.full_like(image, 0.3)
        enhancement = torch.zeros_like(image)
        trace = interweave_adjust(image, suppression, enhancement, 1)
        assert bool((trace.final < image).all())


class TestErrors:
    def test_shape_mismatch(self):
        image = torch.rand(1, 3, 8, 8)
        with pytest.raises(ValueError, match="shape"):
            interweave_adjust(image, torch.rand(1, 3, 4, 4), torch.zeros_like(image), 2)

    def test_iterations_below_one(self):
        image = torch.rand(1, 3, 8, 8)
        with pytest.raises(ValueError, match="iterations"):
            interweave_adjust(image, torch.zeros_like(image), torch.zeros_like(image), 0)


class TestGradients:
    def test_matches_finite_differences_at_interior_points(self):
        gen = torch.Generator().manual_seed(6)
        image = (0.3 + 0.4 * torch.rand(1, 1, 4, 4, generator=gen)).double().requires_grad_(True)
        s = (0.05 * torch.rand(1, 1, 4, 4, generator=gen)).double().requires_grad_(True)
        e = (0.05 * torch.rand(1, 1, 4, 4, generator=gen)).double().requires_grad_(True)

        def scalar():
            return interweave_adjust(image, s, e, 4).final.sum()

        loss = scalar()
        grads = torch.autograd.grad(loss, (image, s, e))
        h = 1e-6
        for tensor, grad in zip((image, s, e), grads):
            flat = tensor.detach().reshape(-1)
            for i in range(0, flat.numel(), 3):
                orig = float(flat[i])
                with torch.no_grad():
                    flat[i] = orig + h
                plus = float(scalar().detach())
                with torch.no_grad():
                    flat[i] = orig - h
                minus = float(scalar().detach())
                with torch.no_grad():
                    flat[i] = orig
                fd = (plus - minus) / (2 * h)
                an = float(grad.reshape(-1)[i])
                assert abs(fd - an) <= 1e-4 * max(abs(fd), abs(an), 1e-8)
