from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional, Tuple, Union

from .bounds import BoundKind, DecayModel

FamilyName = Literal["tridiag", "shifted_skew", "laplace2d", "covariance", "gmrf", "file"]
FunctionName = Literal["inv", "invsqrt", "log", "exp"]
NormName = Literal["fro", "1", "2", "max"]


class LatticeSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    dims: Tuple[int, ...] = Field(min_length=1)

    @field_validator("dims")
    @classmethod
    def _positive(cls, v):
        if any(N < 1 for N in v):
            raise ValueError(f"lattice extents must be >= 1, got {v}")
        return v

    @classmethod
    def parse(cls, text: str) -> "LatticeSpec":
        return cls(dims=tuple(int(p) for p in text.lower().split("x")))

    @property
    def D(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        total = 1
        for N in self.dims:
            total *= N
        return total


class StepRule(BaseModel):
    purpose: Literal["sparse_approx", "trace"]
    hermitian: bool = True
    d: int = Field(ge=1)


class MatrixSpec(BaseModel):
    """One test-matrix family plus its size parameters."""
    model_config = ConfigDict(frozen=True)

    family: FamilyName
    n: Optional[int] = Field(default=None, ge=1)
    N: Optional[int] = Field(default=None, ge=1)
    # tridiag(a, b, c): sub-, main and super-diagonal
    a: complex = -1
    b: complex = 4
    c: complex = -1
    shift: float = 4.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    phi: Optional[float] = None
    delta: Optional[float] = None
    seed: Optional[int] = None
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check_family(self):
        fam = self.family
        if fam in ("tridiag", "shifted_skew", "gmrf") and self.n is None:
            raise ValueError(f"{fam} needs n")
        if fam in ("laplace2d", "covariance") and self.N is None:
            raise ValueError(f"{fam} needs N")
        if fam == "covariance":
            if self.alpha is None or self.alpha <= 0 or self.beta is None or self.beta <= 0:
                raise ValueError("covariance needs alpha > 0 and beta > 0")
        if fam == "gmrf":
            if self.phi is None or self.phi <= 0:
                raise ValueError("gmrf needs phi > 0")
            if self.delta is not None and not 0 < self.delta < 1:
                raise ValueError("gmrf needs delta in (0, 1)")
        if fam == "file" and not self.path:
            raise ValueError("file family needs path")
        return self

    @classmethod
    def parse(cls, text: str) -> "MatrixSpec":
        """Parse ``family:key=value,...``, e.g. ``tridiag:n=1000,a=-1,b=4,c=-1``."""
        family, _, rest = text.partition(":")
        fields: Dict[str, object] = {"family": family.strip()}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {item!r}")
            key, value = key.strip(), value.strip()
            if key in ("a", "b", "c"):
                fields[key] = complex(value.replace("i", "j"))
            else:
                fields[key] = value
        return cls(**fields)

    def with_size(self, size: int) -> "MatrixSpec":
        key = "N" if self.family in ("laplace2d", "covariance") else "n"
        return self.model_copy(update={key: size})

    @property
    def hermitian(self) -> bool:
        if self.family == "shifted_skew":
            return False
        if self.family == "tridiag":
            return self.b.imag == 0 and self.a == self.c.conjugate()
        return self.family != "file"

    @property
    def normal(self) -> bool:
        return self.hermitian or self.family == "shifted_skew"


class SweepSpec(BaseModel):
    variable: Literal["n", "d", "s"]
    values: List[int] = Field(min_length=1)

    @field_validator("values")
    @classmethod
    def _positive(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("sweep values must be >= 1")
        return v


class ExperimentConfig(BaseModel):
    family: MatrixSpec
    function: FunctionName = "inv"
    task: Literal["trace", "sparse"] = "trace"
    sweep: SweepSpec
    distance: int = Field(default=5, ge=1)
    steps: Union[int, Literal["exact", "auto"]] = "exact"
    coloring: Literal["auto", "greedy", "banded", "lattice", "rcm"] = "auto"
    norm: NormName = "fro"
    model: Union[Literal["auto", "fit", "envelope"], DecayModel] = "auto"
    bound: Optional[BoundKind] = None
    hermitian: Optional[bool] = None
    label: Optional[str] = None

    @field_validator("family", mode="before")
    @classmethod
    def _family_from_string(cls, v):
        if isinstance(v, str):
            return MatrixSpec.parse(v)
        return v

    @field_validator("steps")
    @classmethod
    def _steps_positive(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("steps must be >= 1")
        return v


class ErrorReport(BaseModel):
    trace: Optional[float] = None
    fro: Optional[float] = None
    one: Optional[float] = None
    two: Optional[float] = None
    max: Optional[float] = None

    def get(self, norm: str) -> Optional[float]:
        return {"fro": self.fro, "1": self.one, "2": self.two, "max": self.max, "trace": self.trace}[norm]


class ExperimentRecord(BaseModel):
    family: str
    n: int
    f: str
    d: int
    m_colors: int
    s_steps: Union[int, Literal["exact"]]
    # trace estimate; empty for the sparse task
    estimate: Optional[complex] = None
    # stored entries of f(A)^[d]; empty for the trace task
    nnz: Optional[int] = None
    exact: Optional[complex] = None
    abs_error: Optional[float] = None
    bound: Optional[float] = None
    ratio: Optional[float] = None
    seconds: float = 0.0
    task: str = "trace"
    coloring: str = ""
    norm: str = ""
    bound_kind: Optional[str] = None
    bound_label: Optional[str] = None
    oracle_skipped: bool = False
    sweep_value: int = 0
