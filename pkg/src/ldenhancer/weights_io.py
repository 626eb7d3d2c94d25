"""Binary archive of named float32 arrays.

The format is deliberately minimal so any language can read it:

    magic   4 bytes   b"LDWA"
    version u32 LE    currently 1
    count   u32 LE    number of entries
    entry:
        name_len u32 LE
        name     UTF-8 bytes
        ndim     u32 LE
        dims     ndim x u32 LE
        data     prod(dims) x float32 LE, row-major

Weight archives, optimizer-state sidecars, and light-label cache files all
use this container.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"LDWA"
VERSION = 1


def save_arrays(path, arrays: dict) -> None:
    """Write named arrays to ``path``, casting every entry to float32."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(arrays)))
        for name, value in arrays.items():
            # astype keeps 0-dim arrays 0-dim; tobytes serializes row-major
            arr = np.asarray(value).astype("<f4", order="C", copy=False)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes(order="C"))


def load_arrays(path) -> dict:
    """Read an archive written by :func:`save_arrays`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path} is not a weight archive (bad magic {magic!r})")
        version, count = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"unsupported archive version {version}")
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim)) if ndim else ()
            n_items = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            data = np.frombuffer(fh.read(4 * n_items), dtype="<f4")
            arrays[name] = data.reshape(shape).copy()
        return arrays


def model_to_arrays(module: torch.nn.Module) -> dict:
    """Flatten a module state dict into named float32 arrays.

    Integer buffers (batch-norm step counters) are stored as float32; their
    values stay exact well past any realistic training length.
    """
    arrays = {}
    for name, tensor in module.state_dict().items():
        arrays[name] = tensor.detach().cpu().numpy()
    return arrays


def arrays_to_model(module: torch.nn.Module, arrays: dict) -> None:
    """Load arrays produced by :func:`model_to_arrays` back into a module."""
    state = module.state_dict()
    missing = set(state) - set(arrays)
    unexpected = set(arrays) - set(state)
    if missing or unexpected:
        raise ValueError(
            f"archive does not match model: missing {sorted(missing)}, "
            f"unexpected {sorted(unexpected)}"
        )
    new_state = {}
    for name, current in state.items():
        value = torch.from_numpy(np.asarray(arrays[name]))
        if tuple(value.shape) != tuple(current.shape):
            raise ValueError(
                f"shape mismatch for {name}: archive {tuple(value.shape)} "
                f"vs model {tuple(current.shape)}"
            )
        new_state[name] = value.to(dtype=current.dtype)
    module.load_state_dict(new_state)


def save_model_weights(module: torch.nn.Module, path) -> None:
    save_arrays(path, model_to_arrays(module))


def load_model_weights(module: torch.nn.Module, path) -> None:
    arrays_to_model(module, load_arrays(path))


def optimizer_to_arrays(optimizer: torch.optim.Optimizer) -> dict:
    """Serialize AdamW moment estimates keyed by parameter position."""
    arrays = {}
    index = 0
    for group in optimizer.param_groups:
        for param in group["params"]:
            state = optimizer.state.get(param, {})
            if state:
                arrays[f"param{index:04d}.step"] = np.asarray(
                    float(state["step"]), dtype=np.float32
                )
                arrays[f"param{index:04d}.exp_avg"] = (
                    state["exp_avg"].detach().cpu().numpy()
                )
                arrays[f"param{index:04d}.exp_avg_sq"] = (
                    state["exp_avg_sq"].detach().cpu().numpy()
                )
            index += 1
    return arrays


def arrays_to_optimizer(optimizer: torch.optim.Optimizer, arrays: dict) -> None:
    """Restore AdamW state saved by :func:`optimizer_to_arrays`."""
    index = 0
    for group in optimizer.param_groups:
        for param in group["params"]:
            key = f"param{index:04d}"
            if f"{key}.step" in arrays:
                optimizer.state[param] = {
                    "step": torch.tensor(float(arrays[f"{key}.step"])),
                    "exp_avg": torch.from_numpy(arrays[f"{key}.exp_avg"]).to(
                        dtype=param.dtype
                    ).reshape(param.shape),
                    "exp_avg_sq": torch.from_numpy(arrays[f"{key}.exp_avg_sq"]).to(
                        dtype=param.dtype
                    ).reshape(param.shape),
                }
            index += 1
