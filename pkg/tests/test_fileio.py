import json

import numpy as np
import pytest

from qholo import fileio
from qholo.coincidence import CoincidenceReport
from qholo.errors import DataError, ParseError
from qholo.reconstruct import ComplexField
from qholo.scan import Channel, HologramFrame
from qholo.source_sim import TimeTagStream


def _streams():
    rng = np.random.default_rng(0)
    out = []
    for ch in (1, 2, 3):
        t = np.unique(rng.integers(0, 10**9, 200))
        out.append(TimeTagStream(ch, t, 10**9))
    # a timestamp shared between channels must survive
    out.append(TimeTagStream(4, out[0].tags[:5], 10**9))
    return out


def test_binary_round_trip(tmp_path):
    p = tmp_path / "t.bin"
    streams = _streams()
    fileio.write_tags(p, streams)
    assert p.stat().st_size == 9 * sum(len(s) for s in streams)
    back = fileio.read_tags(p)
    assert back == {s.channel: s for s in streams}
    assert fileio.read_meta(p)["channel.1"] == "herald"


def test_binary_records_time_sorted(tmp_path):
    p = tmp_path / "t.bin"
    fileio.write_tags(p, _streams())
    rec = np.fromfile(p, dtype=fileio.TAG_DTYPE)
    assert np.all(np.diff(rec["timestamp"].astype(np.int64)) >= 0)


def test_csv_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    streams = _streams()
    fileio.write_tags_csv(p, streams)
    assert fileio.read_tags_csv(p, 10**9) == {s.channel: s for s in streams}


def test_empty_tag_file(tmp_path):
    p = tmp_path / "e.bin"
    fileio.write_tags(p, [TimeTagStream(1, np.zeros(0, np.int64), 100)])
    assert fileio.read_tags(p) == {}


def test_truncated_record_offset(tmp_path):
    p = tmp_path / "t.bin"
    fileio.write_tags(p, _streams())
    raw = p.read_bytes()
    p.write_bytes(raw[:-4])
    with pytest.raises(ParseError) as e:
        fileio.read_tags(p)
    assert e.value.offset == len(raw) - 9


def test_out_of_order_offset(tmp_path):
    rec = np.zeros(4, dtype=fileio.TAG_DTYPE)
    rec["channel"] = 1
    rec["timestamp"] = [10, 20, 15, 30]
    p = tmp_path / "t.bin"
    p.write_bytes(rec.tobytes())
    with pytest.raises(ParseError) as e:
        fileio.read_tags(p)
    assert e.value.offset == 18


def test_duplicate_tag_offset(tmp_path):
    rec = np.zeros(3, dtype=fileio.TAG_DTYPE)
    rec["channel"] = [1, 2, 1]
    rec["timestamp"] = [10, 10, 10]
    p = tmp_path / "t.bin"
    p.write_bytes(rec.tobytes())
    with pytest.raises(ParseError) as e:
        fileio.read_tags(p)
    assert e.value.offset == 18


def test_csv_bad_line_offset(tmp_path):
    p = tmp_path / "t.csv"
    p.write_bytes(b"channel,timestamp_ps\n1,10\n1,x\n")
    with pytest.raises(ParseError) as e:
        fileio.read_tags_csv(p)
    assert e.value.offset == 26


def test_frame_round_trip(tmp_path):
    f = HologramFrame(np.arange(12).reshape(3, 4), 25e-6, 2.5, Channel.NONHERALDED)
    p = tmp_path / "f.csv"
    fileio.write_frame(p, f)
    assert fileio.read_frame(p) == f


def test_frame_shape_mismatch(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("# rows=3\n# cols=2\n1,2\n3,4\n")
    with pytest.raises(DataError):
        fileio.read_frame(p)


def test_pgm_round_trip(tmp_path):
    img = np.arange(20).reshape(4, 5) * 100
    p = tmp_path / "a.pgm"
    fileio.write_pgm(p, img)
    assert np.array_equal(fileio.read_pgm(p), img)
    fileio.write_pgm(p, np.linspace(-1, 1, 20).reshape(4, 5))
    back = fileio.read_pgm(p)
    assert back.min() == 0 and back.max() == 255


def test_pgm_rejects_negative(tmp_path):
    with pytest.raises(DataError):
        fileio.write_pgm(tmp_path / "a.pgm", np.array([[-1, 2]]))


def test_field_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    f = ComplexField(rng.normal(size=(5, 6)) + 1j * rng.normal(size=(5, 6)))
    fileio.write_field(tmp_path / "x", f)
    back = fileio.read_field(tmp_path / "x")
    assert np.allclose(back.data, f.data, rtol=1e-14, atol=1e-15)


def test_report_round_trip(tmp_path):
    reports = [CoincidenceReport.from_counts(1000, 40, 35, 0, 2.0),
               CoincidenceReport.from_counts(900, 0, 30, 0, 2.0)]
    total = reports[0] + reports[1]
    p = tmp_path / "g2.csv"
    fileio.write_reports(p, reports, 1.0, total)
    bins, back = fileio.read_reports(p)
    assert back == total
    assert bins[0] == reports[0]
    assert np.isnan(bins[1].g2)


def test_manifest(tmp_path):
    a = tmp_path / "a.txt"
    a.write_text("hello")
    fileio.write_manifest(tmp_path, 7, "[run]\nseed = 7\n", [a])
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["seed"] == 7
    assert m["files"] == {"a.txt": fileio.sha256(a)}
    assert len(m["config_sha256"]) == 64
