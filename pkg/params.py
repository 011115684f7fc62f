from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import DEFAULT_C_P, DEFAULT_DELTA, DEFAULT_TOLERANCES

RhsMethod = Literal["oracle", "convolution"]
Experiment = Literal["simulate", "normalized", "rates", "verify", "sweep"]


class FlowParams(BaseModel):
    """Flow exponent p, mode radius N and the right-hand-side evaluator."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    p: int = 1
    N: int = 16
    rhs_method: RhsMethod = "convolution"

    @field_validator("p")
    @classmethod
    def _check_p(cls, value: int) -> int:
        if value < 1:
            raise ValueError("p must be ≥ 1")
        return value

    @field_validator("N")
    @classmethod
    def _check_n(cls, value: int) -> int:
        if value < 1:
            raise ValueError("N must be ≥ 1")
        return value

    @field_validator("rhs_method", mode="before")
    @classmethod
    def _alias_conv(cls, value):
        return "convolution" if value == "conv" else value


def default_blowup_cap(p: int) -> float:
    # six decades of T - t for every p
    return 10.0 ** (6.0 / (p + 1))


class IntegratorOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_init: float = 1e-4
    dt_min: float = 1e-15
    blowup_cap: float | None = None
    max_steps: int = 500_000
    sample_stride: int = 1

    @model_validator(mode="after")
    def _check(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("rel_tol and abs_tol must be positive")
        if not 0 < self.dt_min <= self.dt_init:
            raise ValueError("need 0 < dt_min ≤ dt_init")
        if self.max_steps < 1 or self.sample_stride < 1:
            raise ValueError("max_steps and sample_stride must be ≥ 1")
        return self

    def cap_for(self, p: int) -> float:
        return self.blowup_cap if self.blowup_cap is not None else default_blowup_cap(p)


class SupportSpec(BaseModel):
    """
    Support function h(θ) = base + Σ a_n cos nθ + b_n sin nθ of a convex curve.
    A spec with a seed and no harmonics asks for randomly drawn admissible data.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    base: float = 1.0
    harmonics: dict[int, tuple[float, float]] = Field(default_factory=dict)
    seed: int | None = None

    @field_validator("base")
    @classmethod
    def _check_base(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("base must be positive")
        return value

    @field_validator("harmonics")
    @classmethod
    def _check_harmonics(cls, value: dict[int, tuple[float, float]]) -> dict[int, tuple[float, float]]:
        for n in value:
            if n < 2:
                raise ValueError(f"support harmonic {n} not allowed, harmonics start at n = 2")
        return dict(sorted(value.items()))


class StateSpec(BaseModel):
    """Explicit FourierState in its JSON form, coefficients ordered n = -N..N."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    N: int
    re: list[float]
    im: list[float]
    t: float = 0.0

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.re) != 2 * self.N + 1 or len(self.im) != 2 * self.N + 1:
            raise ValueError("re and im must hold 2N+1 coefficients")
        return self


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    p_list: list[int] = Field(default_factory=lambda: [1, 2, 3])
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    params: FlowParams = Field(default_factory=FlowParams)
    opts: IntegratorOptions = Field(default_factory=IntegratorOptions)
    init: SupportSpec | StateSpec = Field(default_factory=SupportSpec)
    experiment: Experiment = "simulate"
    output_dir: Path = Path("out")
    delta: float = DEFAULT_DELTA
    c_p: float = DEFAULT_C_P
    tolerances: dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    tau_start: float | None = None
    tau_max: float | None = None
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    jobs: int | None = None

    @field_validator("tolerances")
    @classmethod
    def _merge_tolerances(cls, value: dict[str, float]) -> dict[str, float]:
        return {**DEFAULT_TOLERANCES, **value}

    @field_validator("delta")
    @classmethod
    def _check_delta(cls, value: float) -> float:
        if not 0 < value < 0.25:
            raise ValueError("delta must lie in (0, 1/4)")
        return value

    def resolved_tau_max(self) -> float:
        # the mean mode grows like e^{(p+1)τ}, so an error in T limits how far τ can go
        return self.tau_max if self.tau_max is not None else 3.0 / self.params.p

    def resolved_tau_window(self) -> tuple[float, float]:
        start = self.tau_start if self.tau_start is not None else 1.0 / (self.params.p + 1)
        return start, self.resolved_tau_max()
