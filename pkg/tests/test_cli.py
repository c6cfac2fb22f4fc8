import filecmp
import json
import os

import numpy as np
import pytest

from qholo import fileio
from qholo.cli import main
from qholo.config import PipelineConfig, load_config, parse_config, validate
from qholo.errors import ConfigurationError
from qholo.scan import HologramFrame
from qholo.source_sim import TimeTagStream

SMALL = """
[run]
seed = 5
[source]
duration = 0.5
[object]
kind = mirror
[scan]
width = 24
height = 20
integration_time = 5
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return str(p)


def test_defaults_validate():
    validate(load_config())


def test_ini_round_trip():
    cfg = parse_config(SMALL)
    again = parse_config(cfg.to_ini())
    assert again.to_ini() == cfg.to_ini()
    assert again["scan.width"] == 24


@pytest.mark.parametrize("text, msg", [
    ("[scan]\nwidht = 3\n", "unknown key scan.widht"),
    ("[scna]\nwidth = 3\n", "unknown section [scna]"),
    ("[scan]\nwidth = many\n", "scan.width"),
    ("[scan]\nmode = slow\n", "scan.mode"),
    ("[source]\nduration = nan\n", "source.duration"),
    ("[scan]\nwidth = none\n", "scan.width cannot be none"),
])
def test_config_errors_name_the_key(text, msg):
    with pytest.raises(ConfigurationError, match=msg.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


def test_invalid_value_fails_validation():
    cfg = PipelineConfig()
    cfg.set("source.pair_rate", -1.0)
    with pytest.raises(ConfigurationError, match="source"):
        validate(cfg)


def test_exit_code_unknown_key(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[scan]\nbogus = 1\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "unknown key scan.bogus" in capsys.readouterr().err


def test_exit_code_missing_config(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.ini")]) == 2


def test_exit_code_missing_frame(tmp_path, small):
    assert main(["metrics", str(tmp_path / "none.csv"), "--config", small,
                 "--out", str(tmp_path / "o")]) == 3


def test_simulate_deterministic(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", small, "--out", str(a)]) == 0
    assert main(["simulate", "--config", small, "--out", str(b)]) == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors
    m = json.loads((a / "manifest.json").read_text())
    assert m["seed"] == 5
    assert "tags_ch1.bin" in m["files"]


def test_seed_override_changes_output(tmp_path, small):
    main(["simulate", "--config", small, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", small, "--out", str(tmp_path / "b"), "--seed", "6"])
    assert not filecmp.cmp(tmp_path / "a" / "tags_ch1.bin", tmp_path / "b" / "tags_ch1.bin",
                           shallow=False)


def test_g2_on_simulated_tags(tmp_path, small, capsys):
    out = tmp_path / "s"
    main(["simulate", "--config", small, "--out", str(out)])
    tags = [str(out / f"tags_ch{c}.bin") for c in (1, 2, 3)]
    assert main(["g2", *tags, "--config", small, "--out", str(tmp_path / "g"),
                 "--bin-duration", "0.25"]) == 0
    bins, total = fileio.read_reports(tmp_path / "g" / "g2.csv")
    assert len(bins) == 2
    assert total.N1 == sum(b.N1 for b in bins)
    assert total.g2 < 0.5
    assert "g2(0)" in capsys.readouterr().out


def test_g2_empty_channel_exit_4(tmp_path, small):
    p = tmp_path / "t.bin"
    fileio.write_tags(p, [TimeTagStream(1, np.arange(0, 10**6, 1000), 10**6)])
    assert main(["g2", str(p), "--config", small, "--out", str(tmp_path / "g")]) == 4
    # the per-bin file is still written
    assert (tmp_path / "g" / "g2.csv").exists()


def test_reconstruct_fringe_free_exit_4(tmp_path, small):
    p = tmp_path / "flat.csv"
    fileio.write_frame(p, HologramFrame(np.full((16, 16), 7)))
    assert main(["reconstruct", str(p), "--config", small, "--out", str(tmp_path / "r")]) == 4


def test_calibration_method_needs_frame(tmp_path, small):
    p = tmp_path / "flat.csv"
    fileio.write_frame(p, HologramFrame(np.full((16, 16), 7)))
    assert main(["reconstruct", str(p), "--config", small, "--method", "calibration_frame",
                 "--out", str(tmp_path / "r")]) == 2


def test_metrics_flat_frame_flags_rows(tmp_path, small):
    p = tmp_path / "flat.csv"
    fileio.write_frame(p, HologramFrame(np.full((16, 30), 7)))
    assert main(["metrics", str(p), "--config", small, "--out", str(tmp_path / "m")]) == 0
    text = (tmp_path / "m" / "metrics.csv").read_text()
    assert "heralded.profile.visibility,,InsufficientFringeError" in text


def test_methods_agree_through_files(tmp_path, small):
    out = tmp_path / "s"
    main(["simulate", "--config", small, "--out", str(out)])
    frame = str(out / "frame_heralded.csv")
    phases = {}
    for m in ("conjugate_multiply", "recenter"):
        d = tmp_path / m
        assert main(["reconstruct", frame, "--config", small, "--method", m,
                     "--out", str(d)]) == 0
        f = fileio.read_field(d / "recon_heralded")
        phases[m] = f
    a, b = phases["conjugate_multiply"], phases["recenter"]
    w = np.abs(a.data) > 0.3 * np.abs(a.data).max()
    d = np.angle(a.data[w] * np.conj(b.data[w]))
    # the two methods differ by a constant phase only
    assert np.std(np.angle(np.exp(1j * (d - np.angle(np.mean(np.exp(1j * d))))))) < 0.05


def test_pipeline_outputs(tmp_path, small):
    out = tmp_path / "p"
    assert main(["pipeline", "--config", small, "--out", str(out)]) == 0
    rows = {r.split(",")[0]: r.split(",")[1:] for r in
            (out / "metrics.csv").read_text().splitlines()[1:]}
    assert "g2" in rows and "snr_h.per_pixel" in rows
    m = json.loads((out / "manifest.json").read_text())
    for name, digest in m["files"].items():
        assert fileio.sha256(out / name) == digest
