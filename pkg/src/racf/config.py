"""Run configuration: defaults, key=value files, validation.

Config files are plain text, one `key = value` per line, `#` comments
allowed. Emitting and re-parsing a config is byte-stable, which the
determinism checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class RunConfig:
    # detection search grid
    scales: int = 5
    scale_step: float = 1.01
    rot_halfcount: int = 2
    rot_delta: float = 5.0
    fpe_rho: float = 1.0
    newton_iters: int = 5
    min_confidence: float = 0.01
    search_padding: float = 2.0
    # appearance model
    cell_size: int = 4
    sigma_factor: float = 0.0625
    reg_min: float = 0.1
    reg_scale: float = 3.0
    reg_trunc: int = 5
    learning_rate: float = 0.025
    memory_capacity: int = 30
    cold_sweeps: int = 30
    warm_sweeps: int = 4
    solver_tol: float = 0.001
    # illumination correction
    ic_amount: float = 0.8
    ic_sigma: float = 1.0
    ic_threshold: float = 0.5
    # displacement consistency
    omega_d: float = 0.9
    omega_a: float = 0.9
    # component toggles
    use_ic: bool = True
    use_rotation: bool = True
    use_fpe: bool = True
    use_dc: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        checks = [
            (self.scales >= 1 and self.scales % 2 == 1, "scales must be odd and >= 1"),
            (self.scale_step > 1.0, "scale_step must be > 1"),
            (self.rot_halfcount >= 0, "rot_halfcount must be >= 0"),
            (self.rot_delta > 0, "rot_delta must be > 0"),
            (self.fpe_rho > 0, "fpe_rho must be > 0"),
            (self.newton_iters >= 0, "newton_iters must be >= 0"),
            (self.min_confidence >= 0, "min_confidence must be >= 0"),
            (self.search_padding >= 1.0, "search_padding must be >= 1"),
            (self.cell_size >= 1, "cell_size must be >= 1"),
            (self.sigma_factor > 0, "sigma_factor must be > 0"),
            (self.reg_min > 0, "reg_min must be > 0"),
            (self.reg_scale >= 0, "reg_scale must be >= 0"),
            (self.reg_trunc >= 1 and self.reg_trunc % 2 == 1,
             "reg_trunc must be odd and >= 1"),
            (0.0 < self.learning_rate < 1.0, "learning_rate must be in (0, 1)"),
            (self.memory_capacity >= 1, "memory_capacity must be >= 1"),
            (self.cold_sweeps >= 1, "cold_sweeps must be >= 1"),
            (self.warm_sweeps >= 1, "warm_sweeps must be >= 1"),
            (self.solver_tol > 0, "solver_tol must be > 0"),
            (self.ic_amount >= 0, "ic_amount must be >= 0"),
            (self.ic_sigma > 0, "ic_sigma must be > 0"),
            (0.0 <= self.ic_threshold <= 1.0, "ic_threshold must be in [0, 1]"),
            (0.0 <= self.omega_d <= 1.0, "omega_d must be in [0, 1]"),
            (0.0 <= self.omega_a <= 1.0, "omega_a must be in [0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"invalid config: {msg}")

    def emit(self) -> str:
        """Serialize in declaration order; round-trips byte-identically."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                s = "true" if v else "false"
            else:
                s = repr(v)
            lines.append(f"{f.name} = {s}")
        return "\n".join(lines) + "\n"


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse key=value lines on top of base (defaults when None).

    Unknown keys and malformed values are rejected outright.
    """
    values = {f.name: getattr(base, f.name) for f in fields(RunConfig)} \
        if base is not None else {}
    types = {f.name: f.type for f in fields(RunConfig)}
    defaults = RunConfig.__dict__
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw, type(defaults[key]))
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return parse_config(p.read_text())


def _parse_value(key: str, raw: str, kind: type):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: {exc}") from exc
