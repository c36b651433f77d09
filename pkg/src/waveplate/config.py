"""Flat key=value run configuration.

One option per line, dotted section prefixes, '#' comments, blank lines
ignored.  Unknown keys are errors (typos must not silently fall back to
defaults), every parse failure carries its line number.  The full key table
lives in the README.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

SCENARIOS = ("global_W1", "blowup_negative", "blowup_positive_W2", "custom")


class ConfigError(ValueError):
    pass


def _to_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _to_floats(s: str) -> tuple[float, ...]:
    return tuple(float(part) for part in s.split(","))


@dataclass
class RunConfig:
    # geometry
    dim: int = 2
    extents: tuple[float, ...] | None = None  # None: unit box
    n: int = 65
    # model parameters
    p: float = 3.0
    q: float = 3.0
    m: float = 2.0
    r: float = 2.0
    alpha: float = 1.0
    beta: float | None = None  # None: same as alpha
    # initial data
    preset: str = ""  # empty: scenario picks its default
    amplitude: float | None = None
    energy_target: float | None = None
    # time stepping
    dt: float = 0.0  # 0: cfl * smallest mesh spacing
    cfl: float = 0.2
    t_end: float = 10.0
    stride: int = 10
    cap_rel: float = 1e8
    cap_abs: float = 1e8
    residual_budget: float = 1e-3
    max_halvings: int = 3
    wallclock: float = 0.0  # seconds; 0: unlimited
    # scenario plumbing
    scenario: str = "custom"
    seed: int = 0
    # constants pipeline
    n_dirs: int = 128
    n_starts: int = 8
    maxiter: int = 10000
    # blow-up post-processing
    eps_scale: float = 1.0
    tail_exclude: float = 0.05
    # output
    out_dir: str = "out"
    plots: bool = True
    checkpoint: bool = False


# key -> (attribute, converter, help)
KEY_TABLE: dict[str, tuple[str, object, str]] = {
    "geometry.dim": ("dim", int, "spatial dimension of the chamber, 2 or 3"),
    "geometry.extents": ("extents", _to_floats,
                         "comma-separated box edge lengths (default: unit box)"),
    "geometry.n": ("n", int, "grid nodes per axis (>= 5)"),
    "params.p": ("p", float, "wave source exponent (> max(1, m))"),
    "params.q": ("q", float, "plate source exponent (> max(1, r))"),
    "params.m": ("m", float, "wave damping exponent (>= 1)"),
    "params.r": ("r", float, "plate damping exponent (>= 1)"),
    "params.alpha": ("alpha", float, "wave damping coefficient (> 0)"),
    "params.beta": ("beta", float, "plate damping coefficient (default: alpha)"),
    "initial.preset": ("preset", str,
                       "bump_wave | bump_plate | bump_both | W1_small | W2_large"),
    "initial.amplitude": ("amplitude", float,
                          "literal amplitude; bypasses target bisection"),
    "initial.energy_target": ("energy_target", float,
                              "initial total-energy level for the amplitude solve"),
    "time.dt": ("dt", float, "time step; 0 selects cfl * min spacing"),
    "time.cfl": ("cfl", float, "step-to-spacing ratio used when dt = 0"),
    "time.t_end": ("t_end", float, "final time"),
    "time.stride": ("stride", int, "steps between recorded samples (>= 1)"),
    "time.cap_rel": ("cap_rel", float,
                     "divergence cap multiplier on the initial quadratic energy"),
    "time.cap_abs": ("cap_abs", float, "divergence cap offset"),
    "time.residual_budget": ("residual_budget", float,
                             "per-step energy-identity tolerance before dt halving"),
    "time.max_halvings": ("max_halvings", int, "dt halvings before giving up"),
    "time.wallclock": ("wallclock", float, "wall-clock budget in seconds; 0 = none"),
    "scenario": ("scenario", str, " | ".join(SCENARIOS)),
    "seed": ("seed", int, "sweep and sampling seed"),
    "constants.n_dirs": ("n_dirs", int, "sampled ray directions for the depth estimate"),
    "constants.n_starts": ("n_starts", int, "multi-starts for each embedding ascent"),
    "constants.maxiter": ("maxiter", int, "iteration cap per ascent start"),
    "blowup.eps_scale": ("eps_scale", float,
                         "multiplier on the selected weight (sweep experiments)"),
    "blowup.tail_exclude": ("tail_exclude", float,
                            "final fraction of the run excluded from fits"),
    "output.dir": ("out_dir", str, "output directory"),
    "output.plots": ("plots", _to_bool, "emit plot images"),
    "output.checkpoint": ("checkpoint", _to_bool, "save the final state"),
}


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_TABLE:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        attr, conv, _ = KEY_TABLE[key]
        try:
            setattr(cfg, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    _validate(cfg, source)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


def _validate(cfg: RunConfig, source: str) -> None:
    errors = []
    if cfg.dim not in (2, 3):
        errors.append(f"geometry.dim must be 2 or 3, got {cfg.dim}")
    if cfg.extents is not None and len(cfg.extents) != cfg.dim:
        errors.append(
            f"geometry.extents has {len(cfg.extents)} entries for dim {cfg.dim}")
    if cfg.n < 5:
        errors.append(f"geometry.n must be at least 5, got {cfg.n}")
    if cfg.dt < 0.0:
        errors.append(f"time.dt must be nonnegative, got {cfg.dt}")
    if cfg.dt == 0.0 and cfg.cfl <= 0.0:
        errors.append(f"time.cfl must be positive when dt is automatic, got {cfg.cfl}")
    if cfg.t_end <= 0.0:
        errors.append(f"time.t_end must be positive, got {cfg.t_end}")
    if cfg.stride < 1:
        errors.append(f"time.stride must be at least 1, got {cfg.stride}")
    if cfg.scenario not in SCENARIOS:
        errors.append(f"unknown scenario {cfg.scenario!r}")
    if cfg.preset and cfg.preset not in (
            "bump_wave", "bump_plate", "bump_both", "W1_small", "W2_large"):
        errors.append(f"unknown preset {cfg.preset!r}")
    if cfg.amplitude is not None and cfg.energy_target is not None:
        errors.append("initial.amplitude and initial.energy_target are exclusive")
    if not 0.0 <= cfg.tail_exclude < 1.0:
        errors.append(f"blowup.tail_exclude must lie in [0, 1), got {cfg.tail_exclude}")
    if cfg.eps_scale <= 0.0:
        errors.append(f"blowup.eps_scale must be positive, got {cfg.eps_scale}")
    if errors:
        raise ConfigError(f"{source}: " + "; ".join(errors))


def config_lines(cfg: RunConfig) -> list[str]:
    """Round-trippable echo of a config, defaults included."""
    out = []
    for key, (attr, _, _) in KEY_TABLE.items():
        val = getattr(cfg, attr)
        if val is None:
            continue
        if isinstance(val, tuple):
            val = ",".join(f"{v:g}" for v in val)
        elif isinstance(val, bool):
            val = "true" if val else "false"
        out.append(f"{key}={val}")
    return out
