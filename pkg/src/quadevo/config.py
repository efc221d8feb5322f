"""Flat ``key = value`` run configuration files.

Grammar
-------
One ``key = value`` pair per line.  Blank lines and lines starting with ``#``
are ignored.  Keys are case-sensitive and unknown keys are rejected.

``transmittances``
    comma-separated ``re:im`` pairs; a single pair is repeated ``m`` times.
``window_c``
    comma-separated floats, empty when ``window_p = 0``.
``reg_eps``
    ``auto`` or a nonnegative float.
``cov_mode``
    ``empirical`` or ``analytic``.

Optional keys: ``detection_variance``, ``eve_excess``, ``key_lags`` and
``key_batches``.
"""
from __future__ import annotations

import configparser
from pathlib import Path

from .core import SimConfig, WindowSpec

__all__ = ["ConfigError", "REQUIRED_KEYS", "OPTIONAL_KEYS", "parse_config",
           "load_config", "format_config", "config_to_dict"]

REQUIRED_KEYS = (
    "d", "m", "sigma_w0_sq", "sigma_w_sq", "sigma_n_sq", "transmittances",
    "seed", "trials", "window_p", "window_c", "theta_points", "reg_eps",
    "cov_mode", "lambda0",
)
OPTIONAL_KEYS = ("detection_variance", "eve_excess", "key_lags", "key_batches")

_SECTION = "run"


class ConfigError(ValueError):
    """Malformed, incomplete or inconsistent configuration."""


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(t) for t in text.split(","))


def _pairs(text: str, m: int) -> tuple[tuple[float, float], ...]:
    pairs = []
    for tok in text.split(","):
        parts = tok.strip().split(":")
        if len(parts) != 2:
            raise ConfigError(f"transmittance {tok.strip()!r} is not a re:im pair")
        pairs.append((float(parts[0]), float(parts[1])))
    if len(pairs) == 1:
        pairs = pairs * m
    return tuple(pairs)


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"{text.strip()!r} is not an integer") from None
        return int(value)


def parse_config(text: str) -> SimConfig:
    """Parse configuration text into a validated :class:`SimConfig`."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",),
                                       delimiters=("=",), strict=True)
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    raw = dict(parser[_SECTION])
    unknown = sorted(set(raw) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    try:
        m = _int(raw["m"])
        C = _floats(raw["window_c"])
        window = WindowSpec(_int(raw["window_p"]), C)
        reg = raw["reg_eps"].strip()
        kwargs = dict(
            d=_int(raw["d"]),
            m=m,
            sigma_w0_sq=float(raw["sigma_w0_sq"]),
            sigma_w_sq=float(raw["sigma_w_sq"]),
            sigma_n_sq=float(raw["sigma_n_sq"]),
            transmittances=_pairs(raw["transmittances"], m),
            seed=_int(raw["seed"]),
            trials=_int(raw["trials"]),
            window=window,
            theta_points=_int(raw["theta_points"]),
            reg_eps=None if reg == "auto" else float(reg),
            cov_mode=raw["cov_mode"].strip(),
            lambda0=float(raw["lambda0"]),
        )
        if "detection_variance" in raw:
            kwargs["detection_variance"] = float(raw["detection_variance"])
        if "eve_excess" in raw:
            kwargs["eve_excess"] = float(raw["eve_excess"])
        if "key_lags" in raw:
            kwargs["key_lags"] = _int(raw["key_lags"])
        if "key_batches" in raw:
            kwargs["key_batches"] = _int(raw["key_batches"])
        return SimConfig(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SimConfig:
    """Read and parse a configuration file; ``OSError`` propagates."""
    return parse_config(Path(path).read_text())


def format_config(cfg: SimConfig) -> str:
    """Serialise ``cfg`` so that ``parse_config(format_config(cfg)) == cfg``."""
    def num(v):
        return repr(float(v))

    lines = [
        f"d = {cfg.d}",
        f"m = {cfg.m}",
        f"sigma_w0_sq = {num(cfg.sigma_w0_sq)}",
        f"sigma_w_sq = {num(cfg.sigma_w_sq)}",
        f"sigma_n_sq = {num(cfg.sigma_n_sq)}",
        "transmittances = " + ", ".join(f"{num(a)}:{num(b)}" for a, b in cfg.transmittances),
        f"seed = {cfg.seed}",
        f"trials = {cfg.trials}",
        f"window_p = {cfg.window.P}",
        "window_c = " + ", ".join(num(c) for c in cfg.window.C),
        f"theta_points = {cfg.theta_points}",
        f"reg_eps = {'auto' if cfg.reg_eps is None else num(cfg.reg_eps)}",
        f"cov_mode = {cfg.cov_mode.value}",
        f"lambda0 = {num(cfg.lambda0)}",
        f"detection_variance = {num(cfg.detection_variance)}",
        f"eve_excess = {num(cfg.eve_excess)}",
        f"key_batches = {cfg.key_batches}",
    ]
    if cfg.key_lags is not None:
        lines.append(f"key_lags = {cfg.key_lags}")
    return "\n".join(lines) + "\n"


def config_to_dict(cfg: SimConfig) -> dict:
    """JSON-friendly echo of a configuration."""
    return {
        "d": cfg.d, "m": cfg.m, "sigma_w0_sq": cfg.sigma_w0_sq,
        "sigma_w_sq": cfg.sigma_w_sq, "sigma_n_sq": cfg.sigma_n_sq,
        "transmittances": [list(p) for p in cfg.transmittances],
        "seed": cfg.seed, "trials": cfg.trials,
        "window_p": cfg.window.P, "window_c": list(cfg.window.C),
        "theta_points": cfg.theta_points, "reg_eps": cfg.reg_eps,
        "cov_mode": cfg.cov_mode.value, "lambda0": cfg.lambda0,
        "detection_variance": cfg.detection_variance, "eve_excess": cfg.eve_excess,
        "key_lags": cfg.key_lags, "key_batches": cfg.key_batches,
    }

