"""Binary checkpoint format.

Layout: ``b"DNLB1"``, an unsigned 64-bit little-endian header length, the
UTF-8 JSON manifest, then the raw parameters and the EMA parameters as
little-endian float64 arrays in manifest order.
"""
import json
import struct

import numpy as np

from ..errors import FlowdenError
from .optim import ParamStore

MAGIC = b"DNLB1"
_LE_F64 = np.dtype("<f8")


def save_checkpoint(path, store, meta=None):
    ema = store.ema if store.ema is not None else store.params
    manifest = {
        "params": [{"name": k, "shape": list(p.shape)} for k, p in store.params.items()],
        "step": store.step,
        "has_ema": store.ema is not None,
        "meta": meta or {},
    }
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for k in store.params:
            f.write(np.ascontiguousarray(store.params[k], dtype=_LE_F64).tobytes())
        for k in store.params:
            f.write(np.ascontiguousarray(ema[k], dtype=_LE_F64).tobytes())


def load_checkpoint(path):
    """Returns ``(store, meta)``; the store carries raw params and the EMA shadow."""
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(MAGIC):
        raise FlowdenError(f"{path}: not a checkpoint (bad magic)")
    off = len(MAGIC)
    (hlen,) = struct.unpack_from("<Q", blob, off)
    off += 8
    manifest = json.loads(blob[off:off + hlen].decode("utf-8"))
    off += hlen

    def read_block(off):
        out = {}
        for entry in manifest["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(blob, dtype=_LE_F64, count=count, offset=off)
            out[entry["name"]] = arr.reshape(shape).astype(np.float64)
            off += count * 8
        return out, off

    params, off = read_block(off)
    ema, off = read_block(off)
    if off != len(blob):
        raise FlowdenError(f"{path}: trailing or missing bytes")
    store = ParamStore(params=params, step=manifest["step"])
    store.ema = ema if manifest["has_ema"] else None
    return store, manifest["meta"]
