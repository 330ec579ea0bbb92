"""On-disk formats: PDNT tensors, PPM (P6) frames, PGM (P5) map exports.

PDNT is the project's exact-precision tensor container: magic b"PDNT",
little-endian u32 rank, u32 dims, then raw little-endian float64 values in
row-major order.  PPM/PGM are used for frame input and visual inspection.
"""

import struct

import numpy as np

MAGIC = b"PDNT"


def save_tensor(path, array):
    """Write a float64 ndarray to `path` in PDNT format."""
    arr = np.ascontiguousarray(array, dtype="<f8")
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite tensor")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def load_tensor(path):
    """Read a PDNT file back into a float64 ndarray."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        (rank,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{rank}I", fh.read(4 * rank))
        count = int(np.prod(shape)) if rank else 1
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after tensor payload")
    arr = data.reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: tensor contains non-finite values")
    return arr


def _read_pnm_header(fh, magic):
    """Parse a PNM header (magic, then 3 whitespace-separated ints, '#' comments allowed)."""
    if fh.read(2) != magic:
        raise ValueError(f"not a {magic.decode()} file")
    fields = []
    while len(fields) < 3:
        tok = b""
        ch = fh.read(1)
        while ch.isspace():
            ch = fh.read(1)
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        while ch and not ch.isspace():
            tok += ch
            ch = fh.read(1)
        if not tok:
            raise ValueError("truncated PNM header")
        fields.append(int(tok))
    return fields


def write_ppm(path, frame):
    """Write an (H, W, 3) float frame in [0, 1] as a binary 8-bit PPM."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) frame, got {frame.shape}")
    if frame.min() < 0.0 or frame.max() > 1.0:
        raise ValueError("frame values must lie in [0, 1]")
    data = np.rint(frame * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (frame.shape[1], frame.shape[0]))
        fh.write(data.tobytes())


def read_ppm(path):
    """Read a binary 8-bit PPM into an (H, W, 3) float frame in [0, 1]."""
    with open(path, "rb") as fh:
        width, height, maxval = _read_pnm_header(fh, b"P6")
        if maxval != 255:
            raise ValueError(f"{path}: only 8-bit PPM supported (maxval {maxval})")
        raw = fh.read(width * height * 3)
    data = np.frombuffer(raw, dtype=np.uint8, count=width * height * 3)
    return data.reshape(height, width, 3).astype(np.float64) / 255.0


def write_pgm16(path, values):
    """Write a nonnegative 2-D map as a 16-bit PGM, scaled so the max maps to 65535."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected 2-D map, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or values.min() < 0.0:
        raise ValueError("map must be finite and nonnegative")
    peak = values.max()
    scaled = np.zeros_like(values) if peak == 0.0 else values / peak * 65535.0
    data = np.rint(scaled).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n65535\n" % (values.shape[1], values.shape[0]))
        fh.write(data.tobytes())


def read_pgm16(path):
    """Read a 16-bit PGM back into an integer-valued 2-D float array."""
    with open(path, "rb") as fh:
        width, height, maxval = _read_pnm_header(fh, b"P5")
        if maxval != 65535:
            raise ValueError(f"{path}: expected 16-bit PGM, got maxval {maxval}")
        raw = fh.read(width * height * 2)
    data = np.frombuffer(raw, dtype=">u2", count=width * height)
    return data.reshape(height, width).astype(np.float64)


def save_bundle(directory, name, arrays, meta=None):
    """Persist named arrays as '<name>_<field>.pdnt' files plus a JSON manifest."""
    import json
    import os

    manifest = {"fields": sorted(arrays), "meta": meta or {}}
    for fieldname in manifest["fields"]:
        save_tensor(os.path.join(directory, f"{name}_{fieldname}.pdnt"), arrays[fieldname])
    with open(os.path.join(directory, f"{name}.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True)
        fh.write("\n")


def load_bundle(directory, name):
    """Load a save_bundle manifest; returns (arrays dict, meta dict)."""
    import json
    import os

    with open(os.path.join(directory, f"{name}.json")) as fh:
        manifest = json.load(fh)
    arrays = {
        fieldname: load_tensor(os.path.join(directory, f"{name}_{fieldname}.pdnt"))
        for fieldname in manifest["fields"]
    }
    return arrays, manifest.get("meta", {})
