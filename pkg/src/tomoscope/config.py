"""JSON run configuration, validated with pydantic."""

from __future__ import annotations

import hashlib
import json
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from tomoscope.analysis import REFERENCE_GRIDS, grid_values

COMMANDS = ("spectrum", "svne", "tomogram", "indicators", "sweep", "correlate", "disorder")
DEFAULT_SWEPT = {"bec": "omega1", "atom_field": "g", "tc": "Lambda"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BecModel(_Strict):
    kind: Literal["bec"]
    N: int = Field(4, ge=1, le=64)
    omega1: float = 0.25
    lam: float = 0.25
    omega0: float = 1.0
    U: float = Field(1.0, gt=0, description="must be positive")


class AtomFieldModel(_Strict):
    kind: Literal["atom_field"]
    N: int = Field(4, ge=1, le=64)
    omega_f: float = 1.0
    omega_a: float = 1.0
    gamma: float = Field(1.0, gt=0)
    g: float = 0.0


class TcModel(_Strict):
    kind: Literal["tc"]
    N: int = Field(6, ge=0, le=40)
    M: int = Field(5, ge=1, le=10)
    Delta: tuple[float, ...] | None = None
    gap_mean: float = 5.6
    gap_sd: float = Field(1.12, ge=0)
    Omega_f: float = 7.78
    chi: float = 0.0
    Lambda: float = 0.0
    Lambda_s: float = 0.0
    epsilon: float = 4.62
    case: Literal["i", "ii", "iii"] | None = None

    @model_validator(mode="after")
    def _gaps(self):
        if self.Delta is not None and len(self.Delta) != self.M:
            raise ValueError(f"Delta has {len(self.Delta)} entries but M = {self.M}")
        return self


ModelBlock = Annotated[Union[BecModel, AtomFieldModel, TcModel], Field(discriminator="kind")]

SWEEPABLE = {
    "bec": ("omega1", "lam", "omega0", "U"),
    "atom_field": ("omega_f", "omega_a", "gamma", "g"),
    "tc": ("Omega_f", "chi", "Lambda", "Lambda_s", "epsilon"),
}


class SweepRange(_Strict):
    """Either explicit ``values``, an arithmetic ``start/step/count`` run, or
    ``preset: "reference"`` for the reference grid of the model."""

    values: tuple[float, ...] | None = None
    start: float | None = None
    step: float | None = None
    count: int | None = Field(None, ge=1)
    preset: Literal["reference"] | None = None
    append: tuple[float, ...] = ()

    @model_validator(mode="after")
    def _one_form(self):
        forms = [self.values is not None, self.start is not None or self.step is not None or self.count is not None,
                 self.preset is not None]
        if sum(forms) != 1:
            raise ValueError("give exactly one of: values, start/step/count, preset")
        if forms[1] and None in (self.start, self.step, self.count):
            raise ValueError("start, step and count are all required")
        return self

    def resolve(self, model: str, param: str) -> tuple:
        if self.values is not None:
            vals = tuple(self.values)
        elif self.preset is not None:
            if (model, param) not in REFERENCE_GRIDS:
                raise ValueError(f"no reference grid for {model}.{param}")
            vals = REFERENCE_GRIDS[(model, param)]
        else:
            vals = grid_values(self.start, self.step, self.count)
        return vals + tuple(self.append)


class PlanBlock(_Strict):
    cv_angles: int = Field(5, ge=1)
    field_angles: int = Field(5, ge=1)
    axes: tuple[Literal["x", "y", "z"], ...] = ("x", "y", "z")


class NumericsBlock(_Strict):
    x_max: float = Field(8.0, gt=0)
    n_points: int = Field(321, ge=3)
    plan: PlanBlock = PlanBlock()

    @model_validator(mode="after")
    def _odd(self):
        if self.n_points % 2 == 0:
            raise ValueError("n_points must be odd")
        return self


class SectionBlock(_Strict):
    """A CV section ``(theta_a, theta_b)`` or a hybrid one ``(theta_f, axes)``."""

    theta_a: float | None = None
    theta_b: float | None = None
    theta_f: float | None = None
    axes: str | None = None

    @model_validator(mode="after")
    def _shape(self):
        cv = self.theta_a is not None and self.theta_b is not None
        hy = self.theta_f is not None and self.axes is not None
        if cv == hy or (cv and (self.theta_f is not None or self.axes is not None)):
            raise ValueError("give theta_a and theta_b (two modes) or theta_f and axes (field and qubits)")
        if hy and self.axes not in ("x", "y", "z"):
            raise ValueError(f"axes must be x, y or z, got {self.axes!r}")
        return self

    def spec(self):
        if self.theta_a is not None:
            return (self.theta_a, self.theta_b)
        return (self.theta_f, self.axes)


class DisorderBlock(_Strict):
    sd_points: int = Field(100, ge=2)
    fine: bool = False
    sd_values: tuple[float, ...] | None = None
    Lambda: float = 1.2e-3
    case: Literal["i", "ii", "iii"] = "i"


class RunConfig(_Strict):
    command: Literal[COMMANDS]
    model: ModelBlock
    numerics: NumericsBlock = NumericsBlock()
    sweep: dict[str, SweepRange] | None = None
    states: tuple[int, ...] | None = None
    state: int = Field(0, ge=0)
    sections: tuple[SectionBlock, ...] = ()
    closed_form: bool = False
    disorder: DisorderBlock = DisorderBlock()
    input: str | None = None
    output: str = "out"
    seed: int | None = None
    threads: int = Field(1, ge=1, le=256)
    plots: bool = True

    @model_validator(mode="after")
    def _cross(self):
        kind = self.model.kind
        if self.sweep is not None:
            if len(self.sweep) != 1:
                raise ValueError(f"sweep: exactly one swept parameter allowed, got {sorted(self.sweep)}")
            (name,) = self.sweep
            if name not in SWEEPABLE[kind]:
                raise ValueError(f"sweep.{name}: parameter {name!r} does not belong to model {kind}; "
                                 f"choose from {list(SWEEPABLE[kind])}")
        for sec in self.sections:
            if (kind == "tc") != (sec.theta_f is not None):
                raise ValueError(f"sections: section {sec.spec()} does not match model {kind}")
        if self.closed_form and kind != "bec":
            raise ValueError("closed_form: applies only to the bec model")
        if self.command == "disorder" and kind != "tc":
            raise ValueError("command: disorder needs the tc model")
        return self

    @property
    def swept(self) -> str:
        return next(iter(self.sweep)) if self.sweep else DEFAULT_SWEPT[self.model.kind]

    def sweep_values(self) -> tuple:
        if self.sweep:
            return self.sweep[self.swept].resolve(self.model.kind, self.swept)
        return (getattr(self.model, self.swept),)

    def default_sweep_values(self) -> tuple:
        """Values for commands that sweep by default (``sweep``, ``correlate``)."""
        if self.sweep:
            return self.sweep_values()
        return REFERENCE_GRIDS[(self.model.kind, self.swept)]

    def content_hash(self) -> str:
        """Hash of everything that can change results (not threads or paths)."""
        data = self.model_dump(mode="json", exclude={"output", "input", "threads", "plots"})
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _loc(loc) -> str:
    # drop discriminator tags pydantic inserts into union locations
    parts = [str(p) for p in loc if p not in ("bec", "atom_field", "tc") or loc.index(p) == 0]
    return ".".join(parts) or "<root>"


def format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        msg = e["msg"].removeprefix("Value error, ")
        if not e["loc"]:
            lines.append(msg)
            continue
        if e["type"] == "greater_than" and e["loc"][-1:] in (("U",), ("gamma",)):
            msg += " (parameter must be positive)"
        lines.append(f"{_loc(e['loc'])}: {msg}")
    return "\n".join(lines)


def parse_config(text: str | dict) -> RunConfig:
    """Validate a JSON document (string or already-parsed dict)."""
    if isinstance(text, str):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<document>: invalid JSON: {exc}") from None
    else:
        data = text
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from None
