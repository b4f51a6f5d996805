"""INI-style run configuration for the command-line front end.

Every key has a default, so an empty file (or no file) reproduces the
published setup. ``--set section.key=value`` overrides are applied after the file.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .detector import ThresholdDetector
from .experiment import ExperimentConfig
from .fock import BeamSplitter
from .source import PairSource, Statistics
from .spectral import GaussianFilter, PumpPulse

NM = 1e-9


class ConfigError(ValueError):
    pass


def _float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none", "auto") else _float(text)


def _int(text: str) -> int:
    return int(text, 0)


def _statistics(text: str) -> Statistics:
    try:
        return Statistics(text)
    except ValueError:
        raise ValueError(f"unknown statistics {text!r}; use thermal, gaussian or poisson") from None


def _backend(text: str) -> str:
    text = text.strip().lower()
    if text not in ("auto", "compiled", "python"):
        raise ValueError("backend must be auto, compiled or python")
    return text


SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], str]]] = {
    "source": {
        "n_bar": (_float, "0.025"),
        "statistics": (_statistics, "thermal"),
        "truncation": (_int, "2"),
    },
    "detectors": {
        "eta_i": (_float, "0.05"),
        "eta_s": (_float, "0.034"),
        "eta_i1": (_opt_float, "auto"),
        "eta_i2": (_opt_float, "auto"),
        "eta_s3": (_opt_float, "auto"),
        "eta_s4": (_opt_float, "auto"),
        "dark_rate_per_pulse": (_float, "0"),
    },
    "coupler": {
        "transmittance": (_float, "0.5"),
        "t": (_opt_float, "auto"),
        "r": (_opt_float, "auto"),
    },
    "pump": {
        "wavelength_nm": (_float, "708"),
        "duration_ps": (_float, "1.5"),
        "sigma_p": (_opt_float, "auto"),
        "rep_rate": (_float, "8.2e7"),
    },
    "filters": {
        "sigma_ratio": (_opt_float, "0.80"),
        "signal_wavelength_nm": (_float, "583"),
        "signal_fwhm_nm": (_float, "0.2"),
        "idler_wavelength_nm": (_float, "900"),
        "idler_fwhm_nm": (_float, "2"),
    },
    "scan": {
        "delay": (_float, "0"),
        "delay_min": (_float, "-3e-12"),
        "delay_max": (_float, "3e-12"),
        "delay_steps": (_int, "31"),
    },
    "run": {
        "pulses": (_int, "1000000"),
        "seed": (_int, "12345"),
        "batches": (_int, "1"),
        "workers": (_int, "1"),
        "backend": (_backend, "auto"),
        "max_photons": (_int, "24"),
    },
    "rates": {
        "k_pairs": (_int, "3"),
    },
}


@dataclass
class RunConfig:
    values: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        section, name = key.split(".", 1)
        return self.values[section][name]

    def experiment(self) -> ExperimentConfig:
        try:
            return self._experiment()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def _experiment(self) -> ExperimentConfig:
        v = self.values
        src = PairSource(v["source"]["n_bar"], v["source"]["statistics"], v["source"]["truncation"])
        det = v["detectors"]
        dark = det["dark_rate_per_pulse"]

        def detector(name: str, fallback: str) -> ThresholdDetector:
            eta = det[name] if det[name] is not None else det[fallback]
            return ThresholdDetector(eta, dark)

        cp = v["coupler"]
        if (cp["t"] is None) != (cp["r"] is None):
            raise ValueError("coupler.t and coupler.r must be given together")
        if cp["t"] is not None:
            coupler = BeamSplitter.from_coefficients(cp["t"], cp["r"])
        else:
            coupler = BeamSplitter.from_transmittance(cp["transmittance"])

        pp = v["pump"]
        pump = PumpPulse.from_duration(pp["wavelength_nm"] * NM, pp["duration_ps"] * 1e-12, pp["rep_rate"])
        if pp["sigma_p"] is not None:
            pump = PumpPulse(pump.center, pp["sigma_p"], pp["rep_rate"])

        fl = v["filters"]
        signal = GaussianFilter.from_wavelength(fl["signal_wavelength_nm"] * NM, fl["signal_fwhm_nm"] * NM)
        if fl["sigma_ratio"] is not None:
            if fl["sigma_ratio"] <= 0:
                raise ValueError(f"filters.sigma_ratio must be positive, got {fl['sigma_ratio']}")
            signal = replace(signal, sigma=fl["sigma_ratio"] * pump.sigma_p)
        idler = GaussianFilter.from_wavelength(fl["idler_wavelength_nm"] * NM, fl["idler_fwhm_nm"] * NM)

        return ExperimentConfig(
            source_a=src,
            source_b=src,
            det_i1=detector("eta_i1", "eta_i"),
            det_i2=detector("eta_i2", "eta_i"),
            det_s3=detector("eta_s3", "eta_s"),
            det_s4=detector("eta_s4", "eta_s"),
            coupler=coupler,
            pump=pump,
            signal_filter=signal,
            idler_filter=idler,
            delay=v["scan"]["delay"],
        )

    def delay_grid(self) -> np.ndarray:
        s = self.values["scan"]
        if s["delay_steps"] < 1:
            raise ConfigError("[scan] delay_steps must be >= 1")
        if s["delay_steps"] > 1 and not s["delay_max"] > s["delay_min"]:
            raise ConfigError("[scan] delay_max must exceed delay_min")
        return np.linspace(s["delay_min"], s["delay_max"], s["delay_steps"])


def _key_lines(path: Path) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        header = re.match(r"\s*\[([^\]]+)\]", line)
        if header:
            section = header.group(1).strip().lower()
            continue
        key = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if key:
            lines[(section, key.group(1).strip().lower())] = lineno
    return lines


def _coerce(section: str, key: str, text: str, where: str) -> Any:
    parser, _ = SCHEMA[section][key]
    try:
        return parser(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}[{section}] {key} = {text!r}: {exc}") from None


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    values = {sec: {k: parser(default) for k, (parser, default) in keys.items()} for sec, keys in SCHEMA.items()}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
        try:
            parser.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        lines = _key_lines(path)
        for section in parser.sections():
            sec = section.strip().lower()
            if sec not in SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]; expected one of {sorted(SCHEMA)}")
            for key, text in parser.items(section):
                where = f"{path}:{lines.get((sec, key), '?')}: "
                if key not in SCHEMA[sec]:
                    raise ConfigError(f"{where}unknown key {key!r} in [{sec}]")
                values[sec][key] = _coerce(sec, key, text, where)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        dotted, text = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"--set key must be section.key, got {dotted!r}")
        sec, key = (part.strip().lower() for part in dotted.split(".", 1))
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigError(f"--set: unknown key {dotted!r}")
        values[sec][key] = _coerce(sec, key, text, "--set: ")
    return RunConfig(values)


def default_config_text() -> str:
    """The full default configuration, as a commented INI file."""
    out = ["# fwmhom run configuration; every key is optional"]
    for section, keys in SCHEMA.items():
        out.append(f"\n[{section}]")
        for key, (_, default) in keys.items():
            out.append(f"{key} = {default}")
    return "\n".join(out) + "\n"
