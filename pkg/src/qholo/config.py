"""Pipeline configuration: INI file with dotted section names.

Every section and key is listed in SCHEMA; anything else is rejected with
its ``section.key`` path.  Missing keys take the defaults below.  Values
``none`` (case-insensitive) or empty leave optional keys unset.
"""

import configparser
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError, DataError
from .experiment import DetectorSet
from .interferometer import (
    BeamProfile,
    RateCalibration,
    TiltConfig,
    half_circles_object,
    mirror_object,
    objectmap_from_csv,
    phase_step_object,
)
from .reconstruct import MaskShape, Method
from .scan import Mode, ScanConfig, setup_calibration
from .source_sim import DetectorConfig, SourceConfig

_DETECTOR = {
    "efficiency": (float, 0.5),
    "dark_rate": (float, 460.0),
    "dead_time": (float, 22e-9),
    "jitter_sigma": (float, 350e-12),
}

# section -> key -> (type, default); a tuple type lists allowed strings
SCHEMA = {
    "run": {"seed": (int, 0), "out": (str, "out")},
    "source": {
        "pair_rate": (float, 2.37e5),
        "multi_pair_prob": (float, 5e-4),
        "duration": (float, 10.0),
    },
    "detector.herald": dict(_DETECTOR),
    "detector.monitor": dict(_DETECTOR),
    "detector.imaging": dict(_DETECTOR),
    "object": {
        "kind": (("mirror", "half_circles", "phase_step", "file"), "half_circles"),
        "reflectance": (float, 1.0),
        "step": (float, math.pi / 2),
        "radius_fraction": (float, 0.3),
        "gap_fraction": (float, 0.06),
        "amplitude_csv": (str, None),
        "phase_csv": (str, None),
    },
    "beam": {
        "waist_fraction": (float, 0.45),
        "waist": (float, None),
        "x0": (float, None),
        "y0": (float, None),
    },
    "tilt": {"cycles_x": (float, None), "cycles_y": (float, 0.0)},
    "scan": {
        "width": (int, 64),
        "height": (int, 64),
        "pixel_size": (float, 30e-6),
        "integration_time": (float, 5.0),
        "coincidence_window": (float, 2.0),
        "mode": (tuple(m.value for m in Mode), "fast_poisson"),
        "throughput": (float, 1.0),
    },
    "calibration": {
        "rates": (("table", "setup"), "table"),
        "heralded_scale": (float, None),
        "nonheralded_scale": (float, None),
        "background": (float, None),
        "herald_singles_rate": (float, None),
    },
    "g2": {"window_ns": (float, 2.0), "bin_duration": (float, 1.0)},
    "mask": {
        "radius": (int, None),
        "shape": (tuple(s.value for s in MaskShape), "disk"),
        "method": (tuple(m.value for m in Method), "conjugate_multiply"),
        "half_width": (int, 0),
    },
    "metrics": {
        "include_dd": (bool, False),
        "profile_rows": (int, 8),
        "line_row": (int, None),
        "line_oversample": (float, 4.0),
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(path, kind, text):
    text = text.strip()
    if text == "" or text.lower() == "none":
        return None
    try:
        if kind is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError
        if isinstance(kind, tuple):
            if text not in kind:
                raise ValueError
            return text
        if kind is int:
            return int(text)
        if kind is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        return text
    except ValueError:
        expected = "one of " + "|".join(kind) if isinstance(kind, tuple) else kind.__name__
        raise ConfigurationError(f"{path}: cannot read {text!r} as {expected}") from None


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class PipelineConfig:
    values: dict = field(default_factory=lambda: {
        s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})

    def __getitem__(self, dotted):
        section, key = dotted.rsplit(".", 1)
        return self.values[section][key]

    def set(self, dotted, value):
        section, key = dotted.rsplit(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigurationError(f"unknown key {dotted}")
        self.values[section][key] = value

    @property
    def seed(self):
        return self["run.seed"]

    def to_ini(self):
        """Canonical text: every key in schema order, except the output directory.

        This is what the manifest hashes, so the same run written to two
        places gives identical manifests.
        """
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"[{section}]")
            out += [f"{k} = {_format(self.values[section][k])}" for k in keys
                    if (section, k) != ("run", "out")]
            out.append("")
        return "\n".join(out)

    # builders ----------------------------------------------------------------

    def source(self):
        s = self.values["source"]
        return _build("source", SourceConfig, s["pair_rate"], s["multi_pair_prob"],
                      s["duration"], self.seed)

    def detectors(self):
        parts = [_build(f"detector.{n}", DetectorConfig, **self.values[f"detector.{n}"])
                 for n in ("herald", "monitor", "imaging")]
        return DetectorSet(*parts)

    def scan(self):
        s = self.values["scan"]
        return _build("scan", ScanConfig, s["width"], s["height"], s["pixel_size"],
                      s["integration_time"], s["coincidence_window"], Mode(s["mode"]),
                      self.seed, s["throughput"])

    def object_map(self):
        o = self.values["object"]
        scan = self.scan()
        shape, pitch = scan.shape, scan.pixel_size
        kind = o["kind"]
        if kind == "mirror":
            return mirror_object(shape, pitch, o["reflectance"])
        if kind == "half_circles":
            return half_circles_object(shape, pitch, o["radius_fraction"], o["gap_fraction"],
                                       o["reflectance"])
        if kind == "phase_step":
            return phase_step_object(shape, pitch, o["step"], o["reflectance"])
        if not o["amplitude_csv"] or not o["phase_csv"]:
            raise ConfigurationError("object.amplitude_csv and object.phase_csv are required "
                                     "for object.kind = file")
        obj = objectmap_from_csv(o["amplitude_csv"], o["phase_csv"])
        if obj.shape != shape:
            raise ConfigurationError(f"object file grid {obj.shape} does not match scan {shape}")
        return obj

    def beam(self):
        b = self.values["beam"]
        scan = self.scan()
        base = BeamProfile.centered(scan.shape, scan.pixel_size, b["waist_fraction"])
        changes = {k: b[k] for k in ("waist", "x0", "y0") if b[k] is not None}
        return _build("beam", replace, base, **changes)

    def tilt(self):
        t = self.values["tilt"]
        scan = self.scan()
        return _build("tilt", TiltConfig.cycles, scan.shape, scan.pixel_size,
                      t["cycles_x"], t["cycles_y"])

    def calibration(self):
        c = self.values["calibration"]
        if c["rates"] == "setup":
            base = setup_calibration(self.source(), self.detectors(), self.scan())
        else:
            base = RateCalibration()
        changes = {k: v for k, v in c.items() if k != "rates" and v is not None}
        return _build("calibration", replace, base, **changes)


def _build(section, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except ConfigurationError as e:
        msg = str(e)
        raise ConfigurationError(msg if msg.startswith(section) else f"{section}: {msg}") from None
    except (DataError, TypeError, ValueError) as e:
        raise ConfigurationError(f"{section}: {e}") from None


def parse_config(text, source="<string>"):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"{source}: {e}") from None
    cfg = PipelineConfig()
    if parser.defaults():
        raise ConfigurationError(f"unknown key DEFAULT.{next(iter(parser.defaults()))}")
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]")
        for key, text_value in parser.items(section, raw=True):
            path = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {path}")
            cfg.values[section][key] = _convert(path, SCHEMA[section][key][0], text_value)
    _required(cfg)
    return cfg


def _required(cfg):
    for section, keys in SCHEMA.items():
        for key, (kind, default) in keys.items():
            if default is not None and cfg.values[section][key] is None:
                raise ConfigurationError(f"{section}.{key} cannot be none")


def load_config(path=None):
    """Defaults, overlaid with the INI file at ``path`` when given."""
    if path is None:
        return PipelineConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text, str(path))


def validate(cfg):
    """Build every component once so invalid values fail early."""
    cfg.source()
    cfg.detectors()
    cfg.scan()
    cfg.object_map()
    cfg.beam()
    cfg.tilt()
    cfg.calibration()
    if not cfg["g2.window_ns"] > 0:
        raise ConfigurationError("g2.window_ns must be > 0")
    if not cfg["g2.bin_duration"] > 0:
        raise ConfigurationError("g2.bin_duration must be > 0")
    if cfg["mask.radius"] is not None and cfg["mask.radius"] < 1:
        raise ConfigurationError("mask.radius must be >= 1")
    if cfg["mask.half_width"] < 0:
        raise ConfigurationError("mask.half_width must be >= 0")
    if cfg["metrics.profile_rows"] < 1:
        raise ConfigurationError("metrics.profile_rows must be >= 1")
    if not cfg["metrics.line_oversample"] > 0:
        raise ConfigurationError("metrics.line_oversample must be > 0")
    row = cfg["metrics.line_row"]
    if row is not None and not 0 <= row < cfg["scan.height"]:
        raise ConfigurationError("metrics.line_row outside the scan")
    return cfg
