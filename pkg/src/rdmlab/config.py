"""Strict TOML experiment configuration.

Layout (every table optional; unknown tables or keys are rejected)::

    seed = 12345                     # required by stochastic commands

    [potential]                      # default: preset = "canonical"
    preset = "canonical"             # canonical | zero | alternative-ii
    # or explicitly:
    # support_radius = 0.25
    # pieces = [[-0.25, 0.25, -10.0]]
    # d_max = 0.25                   # optional; must equal 1/2 - support_radius

    [distribution]                   # default: symmetric-bernoulli
    kind = "symmetric-bernoulli"     # bernoulli (p), uniform, atoms
    p = 0.5
    atoms = [[-0.25, 0.5], [0.25, 0.5]]

    [cell-scan]      points = 101 | a_grid = [...]
    [transfer-check] signs = [-1, 1] | displacements = [...]; energy = "E0" | float; dps
    [minimizers]     L = 4; tol = 1e-7; interior_samples = 0
    [ids]            samples; energies | gaps; policy = "adaptive" | "fixed:L"; beta; bc
    [tail]           input = "ids.csv"
    [grid2d]         mode = "compare" | "landscape"; h; depth; support_radius; points
    [verify]         instances = 10
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cell import tuned_alternative_ii
from .errors import GeometryError, ValidationError
from .model import DisplacementDistribution, SingleSitePotential

_NUM = (int, float)

SCHEMA = {
    "": {"seed": int},
    "potential": {"preset": str, "support_radius": _NUM, "pieces": list, "d_max": _NUM},
    "distribution": {"kind": str, "p": _NUM, "atoms": list},
    "cell-scan": {"points": int, "a_grid": list},
    "transfer-check": {"signs": list, "displacements": list, "energy": (str, int, float),
                       "dps": int, "periodic": bool},
    "minimizers": {"L": int, "tol": _NUM, "interior_samples": int},
    "ids": {"samples": int, "energies": list, "gaps": list, "policy": str,
            "beta": (int, float, str), "bc": str, "calibration_samples": int},
    "tail": {"input": str, "E0": _NUM},
    "grid2d": {"mode": str, "h": _NUM, "depth": _NUM, "support_radius": _NUM,
               "points": int},
    "verify": {"instances": int},
}

DEFAULTS = {
    "cell-scan": {"points": 101},
    "transfer-check": {"signs": [-1, 1], "energy": "E0", "periodic": True},
    "minimizers": {"L": 4, "tol": 1e-7, "interior_samples": 0},
    "ids": {"samples": 20000, "gaps": [1e-3, 1e-4, 1e-5, 1e-6], "policy": "adaptive",
            "beta": 1.0, "bc": "D", "calibration_samples": 20000},
    "tail": {"input": "ids.csv"},
    "grid2d": {"mode": "compare", "h": 1 / 32, "depth": -10.0, "support_radius": 0.125,
               "points": 9},
    "verify": {"instances": 10},
}

PRESETS = ("canonical", "zero", "alternative-ii")


def _line_of(text, section, key=None):
    """1-based line of ``[section]`` (or of ``key`` inside it) in the TOML source."""
    lines = text.splitlines()
    start = 0
    if section:
        pat = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]")
        for i, ln in enumerate(lines):
            if pat.match(ln):
                start = i
                if key is None:
                    return i + 1
                break
    if key is not None:
        kp = re.compile(r"^\s*(\"?)" + re.escape(key) + r"\1\s*=")
        for i in range(start, len(lines)):
            if i > start and section == "" and re.match(r"^\s*\[", lines[i]):
                break
            if kp.match(lines[i]):
                return i + 1
    return None


def _where(path, text, section, key=None):
    line = _line_of(text, section, key) if text else None
    loc = f"{path}:{line}" if line else str(path)
    return loc


@dataclass
class ExperimentConfig:
    potential: SingleSitePotential
    distribution: dict
    seed: int | None
    sections: dict
    raw: dict = field(default_factory=dict)
    source: str | None = None

    def section(self, name):
        out = dict(DEFAULTS.get(name, {}))
        out.update(self.sections.get(name, {}))
        return out

    def make_distribution(self):
        return DisplacementDistribution.from_dict(self.distribution, self.potential.d_max)

    def canonical(self):
        return {"potential": self.potential.to_dict(), "distribution": self.distribution,
                "seed": self.seed, "sections": self.sections}

    def digest(self, extra=None):
        """sha256 of the effective configuration, independent of key order."""
        payload = self.canonical()
        if extra:
            payload = dict(payload, overrides=extra)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_types(data, text, path):
    for key, val in data.items():
        if isinstance(val, dict):
            if key not in SCHEMA or key == "":
                raise ValidationError(f"{_where(path, text, key)}: unknown table [{key}]")
            spec = SCHEMA[key]
            for k, v in val.items():
                if k not in spec:
                    raise ValidationError(
                        f"{_where(path, text, key, k)}: unknown key '{k}' in [{key}]; "
                        f"allowed: {', '.join(sorted(spec))}")
                if isinstance(v, bool) and spec[k] is not bool:
                    raise ValidationError(f"{_where(path, text, key, k)}: '{k}' must not be a boolean")
                if not isinstance(v, spec[k]):
                    raise ValidationError(f"{_where(path, text, key, k)}: '{k}' has the wrong type")
        else:
            if key not in SCHEMA[""]:
                raise ValidationError(
                    f"{_where(path, text, '', key)}: unknown top-level key '{key}'")
            if isinstance(val, bool) or not isinstance(val, SCHEMA[""][key]):
                raise ValidationError(f"{_where(path, text, '', key)}: '{key}' must be an integer")


def build_potential(spec, where="potential"):
    spec = dict(spec)
    d_max = spec.pop("d_max", None)
    q = _build_potential(spec, where)
    if d_max is not None and abs(float(d_max) + q.support_radius - 0.5) > 1e-12:
        raise GeometryError(
            f"{where}: non-overlap condition violated: support_radius + d_max = "
            f"{q.support_radius + float(d_max)!r}, must equal 1/2")
    return q


def _build_potential(spec, where):
    if not spec:
        return SingleSitePotential.well()
    if "preset" in spec:
        if set(spec) - {"preset"}:
            raise ValidationError(f"{where}: 'preset' cannot be combined with explicit pieces")
        name = spec["preset"]
        if name == "canonical":
            return SingleSitePotential.well()
        if name == "zero":
            return SingleSitePotential.zero()
        if name == "alternative-ii":
            return tuned_alternative_ii()
        raise ValidationError(f"{where}: unknown preset {name!r}; expected one of {PRESETS}")
    if "support_radius" not in spec or "pieces" not in spec:
        raise ValidationError(f"{where}: explicit potentials need support_radius and pieces")
    r = float(spec["support_radius"])
    pieces = spec["pieces"]
    try:
        pieces = tuple((float(a), float(b), float(v)) for a, b, v in pieces)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: pieces must be [start, end, value] triples") from None
    free = all(v == 0.0 for _, _, v in pieces)
    return SingleSitePotential(r, pieces, free=free)


def load_config(path=None, text=None):
    """Parse and validate a TOML experiment config (``path=None``: all defaults)."""
    if path is not None and text is None:
        try:
            with open(path, "rb") as fh:
                text = fh.read().decode("utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
    text = text or ""
    src = path or "<config>"
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{src}: TOML parse error: {exc}") from None
    _check_types(data, text, src)
    pot_spec = data.get("potential", {})
    try:
        q = build_potential(pot_spec, _where(src, text, "potential"))
    except GeometryError as exc:
        msg = str(exc)
        if not msg.startswith(str(src)):
            msg = f"{_where(src, text, 'potential')}: {msg}"
        raise GeometryError(msg) from None
    dist = dict(data.get("distribution", {"kind": "symmetric-bernoulli"}))
    dist.setdefault("kind", "symmetric-bernoulli")
    try:
        DisplacementDistribution.from_dict(dist, q.d_max)
    except ValidationError as exc:
        raise type(exc)(f"{_where(src, text, 'distribution')}: {exc} "
                        f"(displacements must stay in [-d_max, d_max], d_max = 1/2 - r = {q.d_max})"
                        ) from None
    sections = {k: v for k, v in data.items() if isinstance(v, dict)
                and k not in ("potential", "distribution")}
    cfg = ExperimentConfig(q, dist, data.get("seed"), sections, data, path)
    _validate_sections(cfg, text, src)
    return cfg


def _validate_sections(cfg, text, src):
    ids = cfg.section("ids")
    if ids["samples"] < 1:
        raise ValidationError(f"{_where(src, text, 'ids', 'samples')}: samples must be >= 1")
    if ids["bc"] not in ("D", "N"):
        raise ValidationError(f"{_where(src, text, 'ids', 'bc')}: bc must be 'D' or 'N'")
    parse_policy(ids["policy"])
    b = ids["beta"]
    if isinstance(b, str) and b != "calibrate":
        raise ValidationError(f"{_where(src, text, 'ids', 'beta')}: beta must be a number or 'calibrate'")
    if not isinstance(b, str) and not b > 0:
        raise ValidationError(f"{_where(src, text, 'ids', 'beta')}: beta must be positive")
    for key in ("energies", "gaps"):
        vals = cfg.sections.get("ids", {}).get(key)
        if vals is not None and not all(isinstance(v, _NUM) and math.isfinite(v) for v in vals):
            raise ValidationError(f"{_where(src, text, 'ids', key)}: {key} must be numbers")
    if cfg.section("minimizers")["L"] < 1:
        raise ValidationError(f"{_where(src, text, 'minimizers', 'L')}: L must be >= 1")
    g = cfg.section("grid2d")
    if g["mode"] not in ("compare", "landscape"):
        raise ValidationError(f"{_where(src, text, 'grid2d', 'mode')}: mode must be compare or landscape")


def parse_policy(text):
    """'adaptive' or 'fixed:L' -> ('adaptive', None) or ('fixed', L)."""
    if text == "adaptive":
        return "adaptive", None
    m = re.fullmatch(r"fixed:(\d+)", text)
    if not m or int(m.group(1)) < 1:
        raise ValidationError(f"policy must be 'adaptive' or 'fixed:L' with L >= 1, got {text!r}")
    return "fixed", int(m.group(1))
