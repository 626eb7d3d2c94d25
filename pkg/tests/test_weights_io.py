import struct

import numpy as np
import pytest
import torch

from ldenhancer import EnhancerNet, NetworkConfig, load_arrays, save_arrays
from ldenhancer.weights_io import (
    arrays_to_optimizer,
    load_model_weights,
    model_to_arrays,
    optimizer_to_arrays,
    save_model_weights,
)


class TestArrayRoundTrip:
    def test_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "a.weight": rng.standard_normal((4, 3, 2, 2)).astype(np.float32),
            "a.bias": rng.standard_normal(4).astype(np.float32),
            "scalar": np.float32(3.25),
            "unicode/ключ": rng.standard_normal((5,)).astype(np.float32),
        }
        path = tmp_path / "arrays.bin"
        save_arrays(path, arrays)
        loaded = load_arrays(path)
        assert set(loaded) == set(arrays)
        for name in arrays:
            original = np.asarray(arrays[name], dtype=np.float32)
            assert loaded[name].dtype == np.float32
            assert loaded[name].shape == original.shape
            assert np.array_equal(
                loaded[name].view(np.uint32), original.view(np.uint32)
            ), name

    def test_layout_is_parseable_without_the_library(self, tmp_path):
        # independent reader: walk the documented byte layout directly
        arr = np.arange(6, dtype=np.float32).reshape(2, 3)
        path = tmp_path / "one.bin"
        save_arrays(path, {"m": arr})
        blob = path.read_bytes()
        assert blob[:4] == b"LDWA"
        version, count = struct.unpack_from("<II", blob, 4)
        assert (version, count) == (1, 1)
        (name_len,) = struct.unpack_from("<I", blob, 12)
        name = blob[16 : 16 + name_len].decode("utf-8")
        assert name == "m"
        offset = 16 + name_len
        (ndim,) = struct.unpack_from("<I", blob, offset)
        dims = struct.unpack_from(f"<{ndim}I", blob, offset + 4)
        assert dims == (2, 3)
        data = np.frombuffer(blob, dtype="<f4", count=6, offset=offset + 4 + 4 * ndim)
        assert np.array_equal(data.reshape(2, 3), arr)
        assert len(blob) == offset + 4 + 4 * ndim + 4 * 6

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_arrays(path)


class TestModelRoundTrip:
    def test_state_and_forward_bit_exact(self, tmp_path):
        config = NetworkConfig(input_size=32, seed=1)
        net = EnhancerNet(config)
        net.eval()
        x = torch.rand(1, 3, 32, 32, generator=torch.Generator().manual_seed(2))
        with torch.no_grad():
            before = net(x)
        path = tmp_path / "model.weights"
        save_model_weights(net, path)

        other = EnhancerNet(NetworkConfig(input_size=32, seed=99))
        load_model_weights(other, path)
        for name, tensor in net.state_dict().items():
            assert torch.equal(other.state_dict()[name].float(), tensor.float()), name
        other.eval()
        with torch.no_grad():
            after = other(x)
        assert torch.equal(before.suppression, after.suppression)
        assert torch.equal(before.enhancement, after.enhancement)
        assert torch.equal(before.light_map, after.light_map)

    def test_mismatched_archive_rejected(self, tmp_path):
        net = EnhancerNet(NetworkConfig(input_size=32))
        arrays = model_to_arrays(net)
        arrays.pop(next(iter(arrays)))
        path = tmp_path / "bad.weights"
        save_arrays(path, arrays)
        with pytest.raises(ValueError, match="does not match"):
            load_model_weights(EnhancerNet(NetworkConfig(input_size=32)), path)


class TestOptimizerRoundTrip:
    def test_moments_survive(self, tmp_path):
        net = EnhancerNet(NetworkConfig(input_size=32))
        optimizer = torch.optim.AdamW(net.parameters(), lr=1e-4)
        x = torch.rand(2, 3, 32, 32, generator=torch.Generator().manual_seed(3))
        maps = net(x)
        (maps.suppression.sum() + maps.enhancement.sum()).backward()
        optimizer.step()

        path = tmp_path / "optim.bin"
        save_arrays(path, optimizer_to_arrays(optimizer))

        fresh = torch.optim.AdamW(net.parameters(), lr=1e-4)
        arrays_to_optimizer(fresh, load_arrays(path))
        for param, original in optimizer.state.items():
            restored = fresh.state[param]
            assert float(restored["step"]) == float(original["step"])
            assert torch.allclose(restored["exp_avg"], original["exp_avg"], atol=0, rtol=0)
            assert torch.allclose(
                restored["exp_avg_sq"], original["exp_avg_sq"], atol=0, rtol=0
            )
