"""Line-oriented ``key=value`` experiment configuration."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .certification import FrequencyGrid
from .errors import ConfigError, EnclosureError
from .series import DEFAULT_N, ExpMonomial, Geometry, Monomial

MODES = ("forward", "indicator", "certify", "region",
         "reproduce-fig1", "reproduce-fig2", "reproduce-fig3")

KEYS = ("a", "a_L", "a_U", "T", "source", "N", "N_t", "tau_start", "tau_step", "tau_end",
        "bound", "delta", "epsilon", "eta", "tau0", "mode", "output_dir", "stream", "nu", "c")

_MONOMIAL = re.compile(r"^t\^([0-9])$")
_EXPMONO = re.compile(r"^t\^2\*exp\(-(NU|[0-9.eE+-]+)\*t\)$")


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: Optional[Geometry]
    source: object
    N: int = DEFAULT_N
    N_t: Optional[Tuple[int, ...]] = None
    grid: FrequencyGrid = field(default_factory=FrequencyGrid)
    bound: float = 0.01
    delta: float = 5.0
    tau0: float = 3.0
    epsilon: Optional[float] = None
    eta: Optional[float] = None
    mode: str = "region"
    output_dir: str = "output"
    stream: bool = False


def _number(key, text, line):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite, got {text!r}", line)
    return value


def _integer(key, text, line):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as an integer", line) from None
    if not math.isfinite(value) or value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {text!r}", line)
    if value < 1:
        raise ConfigError(f"{key}: must be at least 1, got {text!r}", line)
    return int(value)


def _boolean(key, text, line):
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected true or false, got {text!r}", line)


def parse_source(text, nu=None, c=None, line=None):
    """Monomial for ``t^r`` (0 <= r <= 9), ExpMonomial for ``t^2*exp(-NU*t)``."""
    compact = text.replace(" ", "")
    m = _MONOMIAL.match(compact)
    if m:
        if nu is not None or c is not None:
            raise ConfigError("keys nu and c only apply to the exponential source", line)
        return Monomial(int(m.group(1)))
    m = _EXPMONO.match(compact)
    if m:
        rate = m.group(1)
        if rate == "NU":
            if nu is None:
                raise ConfigError("source uses NU but no nu key is given", line)
        else:
            literal = _number("source", rate, line)
            if nu is not None and nu != literal:
                raise ConfigError(f"source fixes the decay rate to {literal} but nu={nu}", line)
            nu = literal
        return ExpMonomial(1.0 if c is None else c, nu)
    raise ConfigError(f"unrecognized source {text!r}; expected t^0..t^9 or t^2*exp(-NU*t)", line)


def parse_config(text):
    """Parse and validate configuration text; every error names its line."""
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key=value, got {body!r}", lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        raw[key] = value
        lines[key] = lineno

    def num(key, default=None):
        return _number(key, raw[key], lines[key]) if key in raw else default

    mode = raw.get("mode", "region")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choose one of {', '.join(MODES)}", lines.get("mode"))
    reproducing = mode.startswith("reproduce-")

    missing = [k for k in ("a", "source") if k not in raw]
    if missing and not reproducing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    geometry = None
    if "a" in raw:
        try:
            geometry = Geometry(num("a"), num("a_L"), num("a_U"), num("T", 5.0))
        except EnclosureError as exc:
            bad = [k for k in ("a_L", "a_U", "T") if k in raw]
            raise ConfigError(str(exc), lines[bad[-1]] if bad else lines["a"]) from None
    elif any(k in raw for k in ("a_L", "a_U")):
        raise ConfigError("a_L and a_U need a", lines.get("a_L", lines.get("a_U")))

    source = None
    if "source" in raw:
        try:
            source = parse_source(raw["source"], num("nu"), num("c"), lines["source"])
        except ConfigError:
            raise
        except EnclosureError as exc:
            raise ConfigError(str(exc), lines["source"]) from None
    elif "nu" in raw or "c" in raw:
        raise ConfigError("nu and c need a source", lines.get("nu", lines.get("c")))

    N = _integer("N", raw["N"], lines["N"]) if "N" in raw else DEFAULT_N
    N_t: Optional[List[int]] = None
    if "N_t" in raw:
        N_t = [_integer("N_t", item.strip(), lines["N_t"]) for item in raw["N_t"].split(",")]

    try:
        grid = FrequencyGrid(num("tau_start", 1.0), num("tau_end", 15.0), num("tau_step", 0.5))
    except EnclosureError as exc:
        where = [lines[k] for k in ("tau_start", "tau_step", "tau_end") if k in lines]
        raise ConfigError(str(exc), max(where) if where else None) from None

    bound = num("bound", 0.01)
    if not bound > 0:
        raise ConfigError("bound must be positive", lines["bound"])
    delta = num("delta", 5.0)
    if not delta > 0:
        raise ConfigError("delta must be positive", lines["delta"])
    tau0 = num("tau0", 3.0)
    if not tau0 > 0:
        raise ConfigError("tau0 must be positive", lines["tau0"])
    epsilon, eta = num("epsilon"), num("eta")
    for key, value in (("epsilon", epsilon), ("eta", eta)):
        if value is not None and not 0 < value < 1:
            raise ConfigError(f"{key} must lie in (0, 1)", lines[key])

    stream = _boolean("stream", raw["stream"], lines["stream"]) if "stream" in raw else False
    return ExperimentConfig(geometry, source, N, tuple(N_t) if N_t else None, grid, bound, delta, tau0, epsilon, eta,
                            mode, raw.get("output_dir", "output"), stream)
