"""Pipeline configuration.

Every default is the reference parameterisation; a config file
only needs the keys it changes. The file format is ``key=value`` lines with
``#`` comments. Classifier thresholds live under the ``classify.`` prefix,
e.g. ``classify.alpha_overlap_bipolar = 0.91``.
"""

from __future__ import annotations

import dataclasses
import os
import typing
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class ClassifyParams:
    # topographic maps
    grid_size: int = 64
    topo_threshold: float = 0.2
    boundary_width: float = 0.2
    min_region_area: float = 0.01
    secondary_min_area: float = 0.05
    secondary_min_arc: float = 0.10
    max_neutral_regions: int = 1
    frontal_y: float = 0.33
    blink_anterior_fraction: float = 0.6
    saccade_min_separation: float = 0.5
    # alpha protection
    occipital_radius: float = 0.25
    alpha_overlap_unipolar: float = 0.4
    alpha_overlap_bipolar: float = 0.91
    guard_alpha_band: tuple = (7.0, 13.0)
    guard_search_band: tuple = (1.0, 70.0)
    # single channel
    sc_ratio_second: float = 5.0
    sc_ratio_third: float = 10.0
    sc_kurtosis: float = 4.0
    sc_alpha_band: tuple = (8.0, 12.0)
    # muscle
    muscle_band: tuple = (30.0, 60.0)
    # BCG spectrum (dB)
    cardio_band: tuple = (2.0, 7.0)
    neuro_band: tuple = (8.0, 12.0)
    spectrum_floor_band: tuple = (1.0, 30.0)
    bcg_rise_fraction: float = 0.2
    bcg_neuro_fraction: float = 0.33
    bcg_margin_db: float = 3.0
    # BCG contribution
    contrib_mean_ratio: float = 0.97
    contrib_min_ratio: float = 0.95


@dataclass
class PipelineConfig:
    mode: str = "rest"
    # scanner
    n_slices_per_volume: int = 39
    tr_seconds: float = 2.0
    slice_freq_hz: typing.Optional[float] = None
    slice_marker_label: str = "R128"
    vibration_freq_hz: float = 26.0
    line_freq_hz: float = 60.0
    # gradient removal
    gradient_method: str = "OBS"
    gradient_window: int = 15
    gradient_n_pc: int = 4
    gradient_align_max_shift: int = 0
    gradient_obs_highpass_hz: float = 70.0
    # filtering
    target_fs: float = 250.0
    rest_band: tuple = (1.0, 70.0)
    task_band: tuple = (0.1, 70.0)
    reject_bw_hz: float = 1.0
    harmonic_max_hz: float = 120.0
    # cardiac
    oximetry_fs: float = 40.0
    bcg_n_template: int = 21
    cardiac_ica_max_seconds: float = 240.0
    # bad intervals
    bad_window_s: float = 1.0
    bad_step_s: float = 0.5
    bad_band: tuple = (20.0, 40.0)
    bad_power_db: float = 10.0
    bad_abs_uv: float = 250.0
    bad_pad_s: float = 0.25
    bad_max_fraction: float = 0.5
    # ICA
    seed: int = 1
    ica_block: int = 128
    ica_max_sweeps: int = 512
    ica_tol: float = 1e-6
    ica_min_samples_factor: float = 20.0
    # spectra and ERP
    psd_window_s: float = 4.096
    psd_overlap: float = 0.5
    stim_marker_label: str = "S  1"
    classify: ClassifyParams = field(default_factory=ClassifyParams)

    def __post_init__(self):
        self.validate()

    @property
    def effective_slice_freq(self):
        derived = self.n_slices_per_volume / self.tr_seconds
        return derived if self.slice_freq_hz is None else self.slice_freq_hz

    @property
    def band(self):
        return self.task_band if self.mode == "task" else self.rest_band

    def validate(self):
        if self.mode not in ("rest", "task"):
            raise ConfigError(f"mode must be rest or task, got {self.mode!r}")
        if self.gradient_method.upper() not in ("AAS", "OBS"):
            raise ConfigError(f"unknown gradient method {self.gradient_method!r}")
        if self.n_slices_per_volume < 1 or self.tr_seconds <= 0:
            raise ConfigError("slice count and TR must be positive")
        if self.slice_freq_hz is not None:
            derived = self.n_slices_per_volume / self.tr_seconds
            if abs(derived - self.slice_freq_hz) > 1e-6 * derived:
                raise ConfigError(
                    f"slice_freq_hz={self.slice_freq_hz} disagrees with "
                    f"n_slices/TR={derived}")
        for name in ("rest_band", "task_band", "bad_band"):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi:
                raise ConfigError(f"{name} edges must be ordered, got {(lo, hi)}")

    def to_dict(self):
        return dataclasses.asdict(self)


def _coerce(value: str, hint, key):
    origin = typing.get_origin(hint)
    try:
        if origin is typing.Union:
            args = [a for a in typing.get_args(hint) if a is not type(None)]
            if value.lower() in ("", "none", "null"):
                return None
            return _coerce(value, args[0], key)
        if hint is bool:
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if hint is int:
            return int(value)
        if hint is float:
            return float(value)
        if hint is tuple or origin is tuple:
            return tuple(float(v) for v in value.replace(";", ",").split(","))
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _apply(obj, key, raw, full_key):
    hints = typing.get_type_hints(type(obj))
    head, _, rest = key.partition(".")
    if head not in hints:
        raise ConfigError(f"unknown config key {full_key!r}")
    if rest:
        target = getattr(obj, head)
        if not dataclasses.is_dataclass(target):
            raise ConfigError(f"unknown config key {full_key!r}")
        _apply(target, rest, raw, full_key)
    else:
        setattr(obj, head, _coerce(raw, hints[head], full_key))


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    cfg = dataclasses.replace(base) if base is not None else PipelineConfig()
    cfg.classify = dataclasses.replace(cfg.classify)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        _apply(cfg, key.strip(), value.strip(), key.strip())
    cfg.validate()
    return cfg


def load_config(path=None, env_var="APPEAR_CONFIG") -> PipelineConfig:
    """Load a config file; falls back to ``$APPEAR_CONFIG``, then defaults."""
    path = path or os.environ.get(env_var)
    if not path:
        return PipelineConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: PipelineConfig) -> str:
    lines = []

    def walk(obj, prefix):
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if dataclasses.is_dataclass(v):
                walk(v, prefix + f.name + ".")
                continue
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            elif v is None:
                v = "none"
            lines.append(f"{prefix}{f.name}={v}")

    walk(cfg, "")
    return "\n".join(lines) + "\n"
