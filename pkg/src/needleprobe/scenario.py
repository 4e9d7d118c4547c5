"""Scenario files: flat dotted key/value documents driving the CLI runner."""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass, field

from .geometry import parse_geometry

KINDS = ("Eval2D", "Eval3D", "EvalHelmholtz", "ForwardOracle", "ProbeScan")

_KNOWN_KEYS = {
    "scenario.kind",
    "geometry.outer",
    "needle.tip",
    "needle.dir",
    "frame.theta1",
    "frame.theta2",
    "params.alpha",
    "params.tau",
    "params.lambda",
    "schedule.eps0",
    "schedule.n_max",
    "grid.nx",
    "grid.ny",
    "grid.directions",
    "verdict.theta_cap",
    "verdict.window",
    "verdict.ratio",
    "output.dir",
    "rng.seed",
}
_CAVITY_RE = re.compile(r"^geometry\.cavity\[(\d+)\]$")


class ScenarioError(ValueError):
    """Parse or validation failure; the message names the offending key."""


@dataclass
class Scenario:
    kind: str
    outer: str = "circle r=1"
    cavities: list[str] = field(default_factory=list)
    needle_tip: tuple[float, float] = (0.0, 0.0)
    needle_dir: tuple[float, float] = (1.0, 0.0)
    theta1: tuple[float, float, float] = (1.0, 0.0, 0.0)
    theta2: tuple[float, float, float] = (0.0, 1.0, 0.0)
    alpha: float = 0.5
    tau: float = 10.0
    lam: float = 1.0
    eps0: float = 1e-2
    n_max: int = 12
    grid_nx: int | None = None
    grid_ny: int | None = None
    directions: int = 8
    theta_cap: float | None = None  # None = calibrate from the scan
    window: int = 4
    ratio: float = 1.3
    output_dir: str = "out"
    seed: int = 0

    def digest(self) -> str:
        import hashlib

        blob = serialize_scenario(self).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_floats(key: str, value: str, n: int) -> tuple[float, ...]:
    parts = value.split()
    if len(parts) != n:
        raise ScenarioError(f"{key}: expected {n} numbers, got {value!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ScenarioError(f"{key}: {exc}") from exc


def _positive(key: str, v: float) -> float:
    if v <= 0:
        raise ScenarioError(f"{key} must be positive, got {v}")
    return v


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a flat key = value document."""
    raw: dict[str, str] = {}
    cavity_items: dict[int, str] = {}
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        m = _CAVITY_RE.match(key)
        if m:
            cavity_items[int(m.group(1))] = value
            continue
        if key not in _KNOWN_KEYS:
            raise ScenarioError(f"unknown key {key!r}")
        if key in raw:
            raise ScenarioError(f"duplicate key {key!r}")
        raw[key] = value

    if "scenario.kind" not in raw:
        raise ScenarioError("missing required key scenario.kind")
    kind = raw.pop("scenario.kind")
    if kind not in KINDS:
        raise ScenarioError(f"scenario.kind must be one of {KINDS}, got {kind!r}")

    s = Scenario(kind=kind)
    s.cavities = [cavity_items[i] for i in sorted(cavity_items)]
    if sorted(cavity_items) != list(range(len(cavity_items))):
        raise ScenarioError("geometry.cavity indices must be contiguous from 0")

    for key, value in raw.items():
        try:
            if key == "geometry.outer":
                s.outer = value
            elif key == "needle.tip":
                s.needle_tip = _parse_floats(key, value, 2)
            elif key == "needle.dir":
                s.needle_dir = _parse_floats(key, value, 2)
            elif key == "frame.theta1":
                s.theta1 = _parse_floats(key, value, 3)
            elif key == "frame.theta2":
                s.theta2 = _parse_floats(key, value, 3)
            elif key == "params.alpha":
                s.alpha = float(value)
            elif key == "params.tau":
                s.tau = _positive(key, float(value))
            elif key == "params.lambda":
                s.lam = _positive(key, float(value))
            elif key == "schedule.eps0":
                s.eps0 = _positive(key, float(value))
            elif key == "schedule.n_max":
                s.n_max = int(value)
            elif key == "grid.nx":
                s.grid_nx = int(value)
            elif key == "grid.ny":
                s.grid_ny = int(value)
            elif key == "grid.directions":
                s.directions = int(value)
            elif key == "verdict.theta_cap":
                s.theta_cap = None if value.lower() == "auto" else _positive(key, float(value))
            elif key == "verdict.window":
                s.window = int(value)
            elif key == "verdict.ratio":
                s.ratio = float(value)
            elif key == "output.dir":
                s.output_dir = value
            elif key == "rng.seed":
                s.seed = int(value)
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"{key}: {exc}") from exc

    if not (0 < s.alpha <= 1):
        raise ScenarioError(f"params.alpha out of ]0,1]: {s.alpha}")
    if s.n_max < 1:
        raise ScenarioError(f"schedule.n_max must be >= 1, got {s.n_max}")
    if s.window < 1:
        raise ScenarioError(f"verdict.window must be >= 1, got {s.window}")
    if s.ratio <= 1:
        raise ScenarioError(f"verdict.ratio must exceed 1, got {s.ratio}")
    if s.directions < 1:
        raise ScenarioError(f"grid.directions must be >= 1, got {s.directions}")
    if s.kind == "ProbeScan" and (s.grid_nx is None or s.grid_ny is None):
        raise ScenarioError("ProbeScan requires grid (grid.nx and grid.ny)")
    # geometry must parse and validate for kinds that consume it
    if s.kind in ("Eval2D", "ForwardOracle", "ProbeScan"):
        try:
            parse_geometry(s.outer, s.cavities)
        except Exception as exc:
            raise ScenarioError(f"geometry: {exc}") from exc
    return s


def serialize_scenario(s: Scenario) -> str:
    lines = [f"scenario.kind = {s.kind}", f"geometry.outer = {s.outer}"]
    for i, c in enumerate(s.cavities):
        lines.append(f"geometry.cavity[{i}] = {c}")
    lines += [
        f"needle.tip = {s.needle_tip[0]:g} {s.needle_tip[1]:g}",
        f"needle.dir = {s.needle_dir[0]:g} {s.needle_dir[1]:g}",
        "frame.theta1 = " + " ".join(f"{v:g}" for v in s.theta1),
        "frame.theta2 = " + " ".join(f"{v:g}" for v in s.theta2),
        f"params.alpha = {s.alpha:g}",
        f"params.tau = {s.tau:g}",
        f"params.lambda = {s.lam:g}",
        f"schedule.eps0 = {s.eps0:g}",
        f"schedule.n_max = {s.n_max}",
    ]
    if s.grid_nx is not None:
        lines.append(f"grid.nx = {s.grid_nx}")
    if s.grid_ny is not None:
        lines.append(f"grid.ny = {s.grid_ny}")
    lines.append(f"grid.directions = {s.directions}")
    lines.append(
        "verdict.theta_cap = auto" if s.theta_cap is None else f"verdict.theta_cap = {s.theta_cap:g}"
    )
    lines += [
        f"verdict.window = {s.window}",
        f"verdict.ratio = {s.ratio:g}",
        f"output.dir = {s.output_dir}",
        f"rng.seed = {s.seed}",
    ]
    return "\n".join(lines) + "\n"


def metadata_header(s: Scenario, extra: dict | None = None) -> str:
    meta = {
        "scenario_hash": s.digest(),
        "kind": s.kind,
        "alpha": s.alpha,
        "tau": s.tau,
        "lambda": s.lam,
        "n_max": s.n_max,
        "seed": s.seed,
    }
    if extra:
        meta.update(extra)
    return "# " + json.dumps(meta, sort_keys=True)
