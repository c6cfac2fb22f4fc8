"""Readers and writers: time tags, frames, PGM images, field maps, reports.

Time-tag binary: 9-byte little-endian records (u8 channel, u64 ps), no
header, sorted by time.  A sidecar ``<file>.meta`` holds ``key=value``
lines with the duration and channel labels.
"""

import hashlib
import json
import os

import numpy as np

from .coincidence import CSV_HEADER, CoincidenceReport
from .errors import DataError, ParseError
from .scan import Channel, HologramFrame
from .source_sim import TimeTagStream

TAG_DTYPE = np.dtype([("channel", "u1"), ("timestamp", "<u8")])
CHANNEL_LABELS = {1: "herald", 2: "monitor_a", 3: "monitor_b", 4: "imaging_a", 5: "imaging_b"}


# time tags ------------------------------------------------------------------

def _merge(streams):
    ch = np.concatenate([np.full(len(s.tags), s.channel, dtype=np.uint8) for s in streams])
    ts = np.concatenate([np.asarray(s.tags, dtype=np.int64) for s in streams])
    order = np.lexsort((ch, ts))
    return ch[order], ts[order]


def write_tags(path, streams, duration_ps=None):
    """Write one or more streams as a single time-sorted binary file plus sidecar."""
    if isinstance(streams, TimeTagStream):
        streams = [streams]
    ch, ts = _merge(streams)
    rec = np.empty(len(ts), dtype=TAG_DTYPE)
    rec["channel"], rec["timestamp"] = ch, ts
    with open(path, "wb") as fh:
        fh.write(rec.tobytes())
    if duration_ps is None:
        duration_ps = max((s.duration_ps for s in streams), default=0)
    lines = [f"duration_ps={int(duration_ps)}"]
    lines += [f"channel.{s.channel}={CHANNEL_LABELS.get(s.channel, 'ch%d' % s.channel)}"
              for s in sorted(streams, key=lambda s: s.channel)]
    with open(str(path) + ".meta", "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_meta(path):
    meta = {}
    side = str(path) + ".meta"
    if not os.path.exists(side):
        return meta
    with open(side) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{side}:{n}: expected key=value")
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    return meta


def _split(ch, ts, offsets, duration_ps):
    if ts.size > 1:
        back = np.flatnonzero(ts[1:] < ts[:-1])
        if back.size:
            raise ParseError("time tags out of order", int(offsets[back[0] + 1]))
    out = {}
    for c in np.unique(ch):
        sel = ch == c
        t = ts[sel]
        if t.size > 1:
            dup = np.flatnonzero(t[1:] == t[:-1])
            if dup.size:
                raise ParseError(f"duplicate tag on channel {c}",
                                 int(offsets[np.flatnonzero(sel)[dup[0] + 1]]))
        out[int(c)] = TimeTagStream(int(c), t, duration_ps)
    return out


def read_tags(path):
    """Binary tag file -> dict channel -> TimeTagStream."""
    with open(path, "rb") as fh:
        raw = fh.read()
    n, extra = divmod(len(raw), TAG_DTYPE.itemsize)
    if extra:
        raise ParseError("truncated time-tag record", n * TAG_DTYPE.itemsize)
    rec = np.frombuffer(raw, dtype=TAG_DTYPE, count=n)
    ts = rec["timestamp"]
    big = np.flatnonzero(ts > np.iinfo(np.int64).max)
    if big.size:
        raise ParseError("timestamp out of range", int(big[0]) * TAG_DTYPE.itemsize)
    meta = read_meta(path)
    duration = int(meta.get("duration_ps", 0)) or (int(ts.max()) if n else 0)
    offsets = np.arange(n) * TAG_DTYPE.itemsize
    return _split(rec["channel"].astype(np.int64), ts.astype(np.int64), offsets, duration)


def write_tags_csv(path, streams):
    if isinstance(streams, TimeTagStream):
        streams = [streams]
    ch, ts = _merge(streams)
    with open(path, "w") as fh:
        fh.write("channel,timestamp_ps\n")
        fh.writelines(f"{c},{t}\n" for c, t in zip(ch.tolist(), ts.tolist()))


def read_tags_csv(path, duration_ps=0):
    with open(path, "rb") as fh:
        data = fh.read()
    ch, ts, offsets = [], [], []
    pos = 0
    for k, line in enumerate(data.splitlines(keepends=True)):
        start, pos = pos, pos + len(line)
        text = line.decode("ascii", "replace").strip()
        if k == 0 and text.startswith("channel"):
            continue
        if not text:
            continue
        parts = text.split(",")
        try:
            c, t = int(parts[0]), int(parts[1])
            if len(parts) != 2 or not 0 <= c < 256 or t < 0:
                raise ValueError
        except (ValueError, IndexError):
            raise ParseError(f"bad time-tag line {text!r}", start) from None
        ch.append(c)
        ts.append(t)
        offsets.append(start)
    ts = np.array(ts, dtype=np.int64)
    duration = duration_ps or (int(ts.max()) if ts.size else 0)
    return _split(np.array(ch, dtype=np.int64), ts, np.array(offsets), duration)


# frames --------------------------------------------------------------------

def write_frame(path, frame):
    ny, nx = frame.shape
    header = (f"rows={ny}\ncols={nx}\npixel_size_m={frame.pixel_size!r}\n"
              f"integration_s={frame.integration_time!r}\nchannel={frame.channel.value}")
    np.savetxt(path, frame.counts, fmt="%d", delimiter=",", header=header)


def _header(path):
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
    return meta


def read_frame(path):
    meta = _header(path)
    try:
        counts = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None
    if "rows" in meta and counts.shape != (int(meta["rows"]), int(meta["cols"])):
        raise DataError(f"{path}: header says {meta['rows']}x{meta['cols']}, "
                        f"data is {counts.shape[0]}x{counts.shape[1]}")
    return HologramFrame(counts, float(meta.get("pixel_size_m", 30e-6)),
                         float(meta.get("integration_s", 1.0)),
                         Channel(meta.get("channel", "heralded")))


def write_array(path, values, header=""):
    np.savetxt(path, np.atleast_2d(values), fmt="%.17g", delimiter=",", header=header)


def read_array(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_field(prefix, field):
    """``<prefix>_amplitude.csv`` and ``<prefix>_phase.csv``."""
    write_array(f"{prefix}_amplitude.csv", field.amplitude)
    write_array(f"{prefix}_phase.csv", field.phase)


def read_field(prefix):
    from .reconstruct import ComplexField

    amp = read_array(f"{prefix}_amplitude.csv")
    phase = read_array(f"{prefix}_phase.csv")
    return ComplexField(amp * np.exp(1j * phase))


# PGM -----------------------------------------------------------------------

def to_gray(values, maxval=255, lo=None, hi=None):
    """Linear map of a real array onto 0..maxval."""
    v = np.asarray(values, dtype=float)
    lo = np.nanmin(v) if lo is None else lo
    hi = np.nanmax(v) if hi is None else hi
    if hi <= lo:
        return np.zeros(v.shape, dtype=np.int64)
    return np.clip(np.round((v - lo) / (hi - lo) * maxval), 0, maxval).astype(np.int64)


def write_pgm(path, image, maxval=None):
    """Plain (P2) PGM.  Integer images in 0..65535 are written unscaled."""
    img = np.asarray(image)
    if not np.issubdtype(img.dtype, np.integer):
        img = to_gray(img)
        maxval = maxval or 255
    if img.ndim != 2 or img.min(initial=0) < 0:
        raise DataError("PGM needs a 2-D non-negative image")
    maxval = maxval or max(1, int(img.max(initial=0)))
    if maxval > 65535 or img.max(initial=0) > maxval:
        raise DataError("PGM values exceed maxval")
    ny, nx = img.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{nx} {ny}\n{maxval}\n")
        for row in img:
            fh.write(" ".join(map(str, row.tolist())) + "\n")


def read_pgm(path):
    with open(path) as fh:
        text = fh.read()
    tokens = []
    for line in text.splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise DataError(f"{path}: not a plain PGM")
    nx, ny, maxval = (int(t) for t in tokens[1:4])
    data = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if data.size != nx * ny:
        raise DataError(f"{path}: expected {nx * ny} pixels, found {data.size}")
    if data.size and (data.min() < 0 or data.max() > maxval):
        raise DataError(f"{path}: pixel outside 0..{maxval}")
    return data.reshape(ny, nx)


# reports ---------------------------------------------------------------------

def write_reports(path, reports, bin_duration=None, total=None):
    """Rolling g2 CSV: one line per bin, then a ``total`` line."""
    with open(path, "w") as fh:
        fh.write("bin,start_s," + CSV_HEADER + "\n")
        for k, r in enumerate(reports):
            start = "" if bin_duration is None else repr(k * bin_duration)
            fh.write(f"{k},{start},{r.to_csv()}\n")
        if total is not None:
            fh.write(f"total,,{total.to_csv()}\n")


def read_reports(path):
    """(per-bin reports, total report or None)."""
    bins, total = [], None
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "bin,start_s," + CSV_HEADER:
            raise DataError(f"{path}: unexpected header {header!r}")
        for line in fh:
            tag, _, rest = line.rstrip("\n").split(",", 2)
            r = CoincidenceReport.from_csv(rest)
            if tag == "total":
                total = r
            else:
                bins.append(r)
    return bins, total


def write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else str(v) for v in row) + "\n")


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, seed, config_text, files):
    manifest = {
        "seed": int(seed),
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "config": config_text,
        "files": {os.path.relpath(f, out_dir): sha256(f) for f in sorted(files)},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
