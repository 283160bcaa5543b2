"""Scenario configuration: defaults, INI-style file format and derived objects."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass

from .channel import Geometry, LinkBudget, LinkGains, RisConfig, link_gains
from .rate import FblParams

# section -> keys, fixes the on-disk layout and the serialization order
_LAYOUT = {
    "geometry": ("ap_pos", "ac_pos", "ris_pos"),
    "budget": ("tx_power_mw", "bandwidth_hz", "noise_density_dbm_hz", "noise_figure_db",
               "apply_noise_figure"),
    "ris": ("n_elements", "quant_bits", "amplitude", "direct_link"),
    "fbl": ("epsilon", "blocklength_r", "payload_bits_L"),
    "simulation": ("samples", "seed", "workers"),
}


class ConfigError(ValueError):
    """Malformed or out-of-range scenario description."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one run.

    The noise figure is carried but only enters ``rho`` when
    ``apply_noise_figure`` is set.
    """

    ap_pos: tuple = (0.0, 0.0)
    ac_pos: tuple = (100.0, 0.0)
    ris_pos: tuple = (50.0, 10.0)
    tx_power_mw: float = 200.0
    bandwidth_hz: float = 200e3
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 3.0
    apply_noise_figure: bool = False
    n_elements: int = 1024
    quant_bits: int | None = None
    amplitude: float = 1.0
    direct_link: bool = False
    epsilon: float = 1e-9
    blocklength_r: int = 100
    payload_bits_L: int = 80
    samples: int = 10_000
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        try:
            self.geometry, self.budget, self.ris, self.fbl  # noqa: B018 - validation only
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.samples < 1 or self.workers < 1:
            raise ConfigError("samples and workers must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.ap_pos, self.ac_pos, self.ris_pos)

    @property
    def budget(self) -> LinkBudget:
        nf = self.noise_figure_db if self.apply_noise_figure else 0.0
        return LinkBudget.from_db(self.tx_power_mw, self.noise_density_dbm_hz, self.bandwidth_hz, nf)

    @property
    def ris(self) -> RisConfig:
        return RisConfig(self.n_elements, self.quant_bits, self.amplitude)

    @property
    def fbl(self) -> FblParams:
        return FblParams(self.blocklength_r, self.payload_bits_L, self.epsilon)

    @property
    def gains(self) -> LinkGains:
        return link_gains(self.geometry, self.direct_link)

    def replace(self, **changes) -> "ScenarioConfig":
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_ris_at(self, d: float) -> "ScenarioConfig":
        """Move the RIS along x, keeping its height."""
        return self.replace(ris_pos=(float(d), self.ris_pos[1]))

    def dumps(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in _LAYOUT.items():
            parser[section] = {k: _format(getattr(self, k)) for k in keys}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def digest(self, *extra) -> str:
        """SHA-256 of the serialized scenario plus any extra run arguments."""
        h = hashlib.sha256(self.dumps().encode())
        for item in extra:
            h.update(repr(item).encode())
        return h.hexdigest()


def _format(value) -> str:
    if value is None:
        return "perfect"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return repr(value)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _parse(key: str, text: str):
    text = text.strip()
    kind = type(_FIELDS[key].default)
    if key == "quant_bits":
        return None if text.lower() in ("perfect", "none", "") else int(text)
    if kind is tuple:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected 'x, y', got {text!r}")
        return tuple(parts)
    if kind is bool:
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(f"expected a boolean, got {text!r}")
        return low in ("true", "yes", "1")
    if kind is int:
        return int(float(text)) if float(text).is_integer() else int(text)
    return float(text)


def loads(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse a scenario; unknown sections or keys are errors, missing keys take defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _LAYOUT:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in _LAYOUT[section]:
                # configparser lowercases keys
                match = [k for k in _LAYOUT[section] if k.lower() == key]
                if not match:
                    raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
                key = match[0]
            try:
                values[key] = _parse(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: [{section}] {key}: {exc}") from exc
    return ScenarioConfig(**values)


def load(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
