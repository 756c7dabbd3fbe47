"""File-backed experiment configuration.

The format is a flat ``key = value`` text file: one assignment per line,
``#`` starts a comment, blank lines ignored.  Unknown keys are rejected
so a typo cannot silently fall back to a default.  Units are part of the
key names (rad, gauss, cm, angstrom).

The SU(2) coil is given either as the three transformation parameters
(``xi_rad``, ``delta_rad``, ``zeta_rad``) or as an axis-angle rotation
(``coil_axis_x``, ``coil_axis_z``, ``coil_angle_rad``; the axis is
constrained to the xz-plane).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .beamline import BeamlineConfig, ConfigError, ScanPlan
from .counting import CountingPlan
from .spincore import AxisAngle, Su2Params

__all__ = ["ConfigError", "ExperimentConfig"]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return tuple(float(s) for s in items)


# key -> (parser, default); required keys have the _REQUIRED marker.
_REQUIRED = object()
_SCHEMA: dict[str, tuple] = {
    "xi_rad": (float, None),
    "delta_rad": (float, None),
    "zeta_rad": (float, None),
    "coil_axis_x": (float, None),
    "coil_axis_z": (float, None),
    "coil_angle_rad": (float, None),
    "r0": (float, _REQUIRED),
    "guide_field_gauss": (float, 5.893),
    "wavelength_angstrom": (float, 1.99),
    "n_wind": (int, 1),
    "l0_cm": (float, None),
    "contamination_eps": (float, 0.072),
    "inhomogeneity_beta_max": (float, 0.0),
    "turners_in_field": (_parse_bool, False),
    "counts_scale": (float, 2000.0),
    "background": (float, 0.0),
    "seed": (int, 1),
    "n_points": (int, 41),
    "live_time_s": (float, 60.0),
    "r_targets": (_parse_float_list, (0.8, 0.6, 0.3)),
    "fit_mode": (str, "agnostic"),
    "bootstrap": (int, 0),
    "scan_csv": (str, None),
    "report_json": (str, None),
    "reference_json": (str, None),
    "compare_tolerance_rad": (float, 0.02),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated contents of one experiment config file."""

    xi_rad: float | None
    delta_rad: float | None
    zeta_rad: float | None
    coil_axis_x: float | None
    coil_axis_z: float | None
    coil_angle_rad: float | None
    r0: float
    guide_field_gauss: float
    wavelength_angstrom: float
    n_wind: int
    l0_cm: float | None
    contamination_eps: float
    inhomogeneity_beta_max: float
    turners_in_field: bool
    counts_scale: float
    background: float
    seed: int
    n_points: int
    live_time_s: float
    r_targets: tuple[float, ...]
    fit_mode: str
    bootstrap: int
    scan_csv: str | None
    report_json: str | None
    reference_json: str | None
    compare_tolerance_rad: float
    source_dir: Path | None = None

    def __post_init__(self):
        params_given = all(v is not None for v in (self.xi_rad, self.delta_rad, self.zeta_rad))
        axis_given = all(v is not None
                         for v in (self.coil_axis_x, self.coil_axis_z, self.coil_angle_rad))
        if params_given == axis_given:
            raise ConfigError(
                "specify the coil either as xi_rad/delta_rad/zeta_rad or as "
                "coil_axis_x/coil_axis_z/coil_angle_rad (exactly one form)")
        if self.fit_mode not in ("agnostic", "corrected"):
            raise ConfigError(f"fit_mode must be 'agnostic' or 'corrected', "
                              f"got {self.fit_mode!r}")
        if self.n_points < 6:
            raise ConfigError("n_points must be at least 6")
        if self.bootstrap < 0:
            raise ConfigError("bootstrap must be nonnegative")

    @classmethod
    def from_text(cls, text: str, source_dir: Path | None = None) -> "ExperimentConfig":
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            parser, _ = _SCHEMA[key]
            try:
                values[key] = parser(val.strip())
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
        for key, (_, default) in _SCHEMA.items():
            if key not in values:
                if default is _REQUIRED:
                    raise ConfigError(f"missing required key {key!r}")
                values[key] = default
        return cls(**values, source_dir=source_dir)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, source_dir=path.parent)

    @property
    def su2(self) -> Su2Params | AxisAngle:
        if self.xi_rad is not None:
            return Su2Params(self.xi_rad, self.delta_rad, self.zeta_rad)
        return AxisAngle((self.coil_axis_x, 0.0, self.coil_axis_z), self.coil_angle_rad)

    def beamline_config(self, **overrides) -> BeamlineConfig:
        kwargs = dict(
            r0=self.r0,
            su2=self.su2,
            guide_field_gauss=self.guide_field_gauss,
            wavelength_angstrom=self.wavelength_angstrom,
            n_wind=self.n_wind,
            l0_cm=self.l0_cm,
            contamination_eps=self.contamination_eps,
            inhomogeneity_beta_max=self.inhomogeneity_beta_max,
            turners_in_field=self.turners_in_field,
        )
        kwargs.update(overrides)
        return BeamlineConfig(**kwargs)

    def counting_plan(self, cfg: BeamlineConfig, **overrides) -> CountingPlan:
        kwargs = dict(
            scan=ScanPlan.default(cfg, self.n_points),
            counts_scale=self.counts_scale,
            background=self.background,
            seed=self.seed,
            live_time_s=self.live_time_s,
        )
        kwargs.update(overrides)
        return CountingPlan(**kwargs)

    def resolve_input(self, name: str) -> Path:
        """Input paths resolve against the CWD first, then the config dir."""
        p = Path(name)
        if p.is_absolute() or p.exists() or self.source_dir is None:
            return p
        candidate = self.source_dir / name
        return candidate if candidate.exists() else p
