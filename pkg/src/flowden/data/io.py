"""Dataset files: ``b"FDS1"``, u64 LE header length, canonical JSON header, LE float64 samples."""
import json
import struct

import numpy as np

from ..errors import FlowdenError

MAGIC = b"FDS1"


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_dataset(path, samples, header):
    samples = np.ascontiguousarray(samples, dtype="<f8")
    head = dict(header)
    head["shape"] = list(samples.shape)
    raw = canonical_json(head).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(raw)))
        f.write(raw)
        f.write(samples.tobytes())


def read_dataset(path):
    """Returns ``(samples, header)``."""
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(MAGIC):
        raise FlowdenError(f"{path}: not a dataset file")
    off = len(MAGIC)
    (hlen,) = struct.unpack_from("<Q", blob, off)
    off += 8
    header = json.loads(blob[off:off + hlen].decode("utf-8"))
    off += hlen
    shape = tuple(header["shape"])
    count = int(np.prod(shape))
    if len(blob) - off != 8 * count:
        raise FlowdenError(f"{path}: payload size does not match header shape {shape}")
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape).astype(np.float64)
    return data, header
