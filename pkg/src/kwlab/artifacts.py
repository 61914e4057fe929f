"""Output files: atomic CSV/JSON writers and the binary KWLF field format.

KWLF layout (little endian)::

    b"KWLF"  uint16 version  uint32 header_len  header (UTF-8 JSON)  payload

The header lists every array as ``{name, dtype, shape, offset, nbytes}``
(offsets into the payload) plus a free-form ``meta`` dict.
"""
import csv
import io
import json
import os
import struct
import tempfile
from datetime import datetime, timezone

import numpy as np

MAGIC = b"KWLF"
KWLF_VERSION = 1
ENV_OUTPUT = "KWLAB_OUTPUT_DIR"


def output_dir(default="."):
    path = os.environ.get(ENV_OUTPUT) or default
    os.makedirs(path, exist_ok=True)
    return path


def resolve(name, directory=None):
    """Absolute paths pass through; bare names land in the output dir."""
    if os.path.isabs(name) or os.path.dirname(name):
        return name
    return os.path.join(directory or output_dir(), name)


def atomic_write(path, data):
    """Write bytes or text via a temp file in the same directory and rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".kwlab-", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        # mkstemp creates 0600; give the file the usual umask-based mode
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0  # folds -0.0 into 0.0
        return "nan" if v != v else repr(v)
    return str(v)


def csv_text(command, header, rows, stamp=None):
    """CSV body with a leading ``# kwlab <command> <timestamp>`` line."""
    stamp = stamp or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    buf = io.StringIO(newline="")
    buf.write(f"# kwlab {command} {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def csv_body(text):
    """The CSV text minus the timestamped first line."""
    return text.split("\n", 1)[1] if text.startswith("#") else text


def write_csv(path, command, header, rows):
    return atomic_write(path, csv_text(command, header, rows))


def write_json(path, obj):
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_kwlf(path, arrays, meta=None):
    entries, chunks, off = [], [], 0
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr)
        dt = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
        a = a.astype(dt, copy=False)
        b = a.tobytes()
        entries.append({"name": name, "dtype": dt.str, "shape": list(a.shape), "offset": off, "nbytes": len(b)})
        chunks.append(b)
        off += len(b)
    header = json.dumps({"arrays": entries, "meta": meta or {}}, sort_keys=True).encode()
    blob = MAGIC + struct.pack("<HI", KWLF_VERSION, len(header)) + header + b"".join(chunks)
    return atomic_write(path, blob)


def read_kwlf(path):
    """Return ``(arrays, meta)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path} is not a KWLF file")
    version, hlen = struct.unpack("<HI", data[4:10])
    if version != KWLF_VERSION:
        raise ValueError(f"unsupported KWLF version {version}")
    header = json.loads(data[10:10 + hlen])
    base = 10 + hlen
    arrays = {}
    for e in header["arrays"]:
        start = base + e["offset"]
        arrays[e["name"]] = np.frombuffer(data[start:start + e["nbytes"]], dtype=e["dtype"]).reshape(e["shape"])
    return arrays, header["meta"]
