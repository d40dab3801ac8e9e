"""Run configuration: command-line flags, config files and unit conversion."""

from __future__ import annotations

import argparse
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import DotParams, StateKind, to_natural_units
from .errors import DomainError, IoError, UsageError

COMMANDS = ("spectrum", "capture", "resonances", "delay", "consistency", "spinor", "convert")
FORMATS = ("csv", "json", "svg")
CONFIG_KEYS = ("mu", "v", "ell", "v_min", "v_max", "steps", "eps_min", "eps_max", "output", "format")
V_STEP = 0.05


class Direction(str, enum.Enum):
    TO_NATURAL = "ToNatural"
    FROM_NATURAL = "FromNatural"


@dataclass(frozen=True)
class OutputSpec:
    path: str | None
    format: str


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one command.

    ``grids`` holds the command-specific ranges and step counts.
    """

    command: str
    mu: float
    ell: int
    v: float | None
    grids: dict
    output: OutputSpec
    extra: dict = field(default_factory=dict)

    @property
    def params(self) -> DotParams:
        return DotParams(self.mu, 0.0 if self.v is None else self.v, self.ell)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_seeds(text: str) -> list:
    """Comma-separated complex literals such as ``2.9-0.6i,1+2i``."""
    out = []
    for item in text.split(","):
        item = item.strip().replace(" ", "")
        if not item:
            continue
        try:
            out.append(complex(item.replace("i", "j").replace("I", "j")))
        except ValueError:
            raise UsageError(f"--seeds: cannot parse {item!r} as a complex number") from None
    if not out:
        raise UsageError("--seeds: no values given")
    return out


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file with ``#`` comments."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diracdot", description="Dirac particles in a circular step well.")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress log lines")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "spectrum": "bound-state levels against depth",
        "capture": "critical and supercritical capture depths",
        "resonances": "resonance poles at one depth, or tracked over a depth range",
        "delay": "phase shift and Wigner delay against energy",
        "consistency": "resonance energies against delay maxima",
        "spinor": "radial spinor components against radius",
        "convert": "convert between physical and natural units",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--output", help="output path (default: standard output)")
        p.add_argument("--format", choices=FORMATS, help="output format (default: from suffix, else csv)")
        if name == "convert":
            p.add_argument("--to", choices=("natural", "physical"), required=True)
            for flag in ("E", "V0", "m", "eps", "v", "mu"):
                p.add_argument(f"--{flag}", type=float)
            p.add_argument("--R", type=float, default=1.0)
            p.add_argument("--vF", type=float, default=1.0)
            p.add_argument("--hbar", type=float, default=1.0)
            continue
        p.add_argument("--mu", type=float)
        p.add_argument("--ell", type=int)
        if name != "capture":
            p.add_argument("--v", type=float)
        if name in ("spectrum", "resonances"):
            p.add_argument("--v-min", type=float)
            p.add_argument("--v-max", type=float)
            p.add_argument("--v-steps", type=int)
        if name in ("delay", "consistency"):
            p.add_argument("--eps-min", type=float)
            p.add_argument("--eps-max", type=float)
            p.add_argument("--eps-steps", type=int)
        if name in ("resonances", "consistency"):
            p.add_argument("--seeds", help="comma-separated complex literals a+bi")
        if name == "capture":
            p.add_argument("--count", type=int, default=3)
        if name == "spinor":
            p.add_argument("--eps", type=float)
            p.add_argument("--kind", choices=[k.value for k in StateKind], default=StateKind.BOUND.value)
            p.add_argument("--rho-max", type=float, default=3.0)
            p.add_argument("--rho-steps", type=int, default=301)
    return parser


def _number(key, text, kind=float):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: cannot parse {text!r}") from None


def parse_config(args: list, config_file: str | None = None) -> RunConfig:
    """Parse command-line arguments (and an optional config file).

    Flags override config-file keys.  Ranges are checked against the
    preconditions of the target pipeline.

    Raises
    ------
    UsageError
        Unknown flag or key, missing value, or a range the pipeline rejects.
    """
    ns = build_parser().parse_args(args)
    path = config_file or getattr(ns, "config", None)
    cfg = read_config_file(path) if path else {}
    cmd = ns.command

    def pick(flag, key=None, kind=float):
        value = getattr(ns, flag, None)
        if value is not None:
            return value
        key = key or flag
        if key in cfg:
            return _number(key, cfg[key], kind)
        return None

    out_path = ns.output if ns.output is not None else cfg.get("output")
    fmt = ns.format or cfg.get("format")
    if fmt is None:
        suffix = Path(out_path).suffix.lstrip(".").lower() if out_path else ""
        fmt = suffix if suffix in FORMATS else "csv"
    if fmt not in FORMATS:
        raise UsageError(f"format must be one of {', '.join(FORMATS)}, got {fmt!r}")
    output = OutputSpec(out_path, fmt)

    if cmd == "convert":
        if fmt == "svg":
            raise UsageError("convert has no chart output; use csv or json")
        extra = {"to": ns.to, "R": ns.R, "vF": ns.vF, "hbar": ns.hbar}
        for key in ("E", "V0", "m", "eps", "v", "mu"):
            if getattr(ns, key) is not None:
                extra[key] = getattr(ns, key)
        return RunConfig(cmd, 0.0, 0, None, {}, output, extra)

    mu = pick("mu")
    ell = pick("ell", kind=int)
    if mu is None:
        raise UsageError("--mu is required")
    if ell is None:
        ell = 0
    if not (math.isfinite(mu) and mu >= 0):
        raise UsageError(f"--mu must be >= 0, got {mu}")
    v = pick("v") if cmd != "capture" else None
    grids: dict = {}
    extra: dict = {}

    if cmd in ("spectrum", "resonances"):
        v_min, v_max = pick("v_min"), pick("v_max")
        steps = pick("v_steps", "steps", int)
        if cmd == "spectrum" or v_min is not None or v_max is not None:
            if v_min is None or v_max is None:
                raise UsageError("--v-min and --v-max are required")
            if not v_min < v_max:
                raise UsageError(f"need v_min < v_max, got {v_min} and {v_max}")
            if steps is None:
                steps = int(round((v_max - v_min) / V_STEP)) + 1
            if steps < (10 if cmd == "spectrum" else 2):
                raise UsageError(f"--v-steps too small: {steps}")
            grids.update(v_min=v_min, v_max=v_max, v_steps=steps)
        elif v is None:
            raise UsageError("give --v for a single depth or --v-min/--v-max for a track")
        if cmd == "spectrum":
            if not mu > 0:
                raise UsageError("spectrum needs --mu > 0")
            if ell < 0:
                raise UsageError("spectrum needs --ell >= 0")
            if not v_max < 0:
                raise UsageError("spectrum needs v_max < 0")
    if cmd in ("delay", "consistency"):
        lower = mu if mu > 0 else 0.0
        eps_min, eps_max = pick("eps_min"), pick("eps_max")
        steps = pick("eps_steps", "steps", int)
        if eps_min is None:
            eps_min = lower + (1e-3 if mu > 0 else 1e-2)
        if not eps_min > lower:
            raise UsageError(f"eps_min must exceed {lower}, got {eps_min}")
        if eps_max is None:
            eps_max = max(eps_min + 10.0, 2 * abs(v or 0.0) + mu)
        if not eps_max > eps_min:
            raise UsageError(f"need eps_max > eps_min, got {eps_min} and {eps_max}")
        steps = 800 if steps is None else steps
        if steps < 100:
            raise UsageError(f"--eps-steps must be >= 100, got {steps}")
        grids.update(eps_min=eps_min, eps_max=eps_max, eps_steps=steps)
    if cmd in ("delay", "consistency", "spinor") and v is None:
        raise UsageError("--v is required")
    if cmd == "capture":
        if ns.count < 1:
            raise UsageError("--count must be >= 1")
        extra["count"] = ns.count
    if cmd == "spinor":
        if not ns.rho_max > 0 or ns.rho_steps < 2:
            raise UsageError("need --rho-max > 0 and --rho-steps >= 2")
        grids.update(rho_max=ns.rho_max, rho_steps=ns.rho_steps)
        extra.update(eps=ns.eps, kind=ns.kind)
    if getattr(ns, "seeds", None):
        extra["seeds"] = parse_seeds(ns.seeds)
    try:
        DotParams(mu, 0.0 if v is None else v, ell)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    extra["quiet"] = ns.quiet
    return RunConfig(cmd, float(mu), int(ell), None if v is None else float(v), grids, output, extra)


def convert_units(direction, values: dict, constants: dict) -> dict:
    """Convert between physical quantities and natural units.

    Parameters
    ----------
    direction : Direction or str
        ``ToNatural`` maps ``E, V0, m`` to ``eps, v, mu``; ``FromNatural``
        maps back.  Any subset of the keys may be given.
    constants : dict
        ``R``, ``vF`` and ``hbar``, all positive.  A mass ``m`` (or ``mu``
        for the inverse direction) given here is converted as well.
    """
    direction = Direction(direction)
    try:
        R, vF, hbar = (float(constants[k]) for k in ("R", "vF", "hbar"))
    except KeyError as exc:
        raise DomainError(f"missing constant {exc.args[0]}") from None
    for name, value in (("R", R), ("vF", vF), ("hbar", hbar)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")
    values = dict(values)
    mass_key = "m" if direction is Direction.TO_NATURAL else "mu"
    if mass_key in constants and mass_key not in values:
        values[mass_key] = constants[mass_key]
    keys = ("E", "V0", "m") if direction is Direction.TO_NATURAL else ("eps", "v", "mu")
    unknown = set(values) - set(keys)
    if unknown:
        raise DomainError(f"unknown quantities for {direction.value}: {sorted(unknown)}")
    out = {}
    if direction is Direction.TO_NATURAL:
        eps, v, mu = to_natural_units(values.get("E", 0.0), values.get("V0", 0.0), R, values.get("m", 0.0), vF, hbar)
        for key, name, value in (("E", "eps", eps), ("V0", "v", v), ("m", "mu", mu)):
            if key in values:
                out[name] = value
    else:
        energy = hbar * vF / R
        if "mu" in values and values["mu"] < 0:
            raise DomainError("mu must be non-negative")
        for key, name, scale in (("eps", "E", energy), ("v", "V0", energy), ("mu", "m", hbar / (vF * R))):
            if key in values:
                out[name] = float(values[key]) * scale
    return out
