"""Data models for chunglil."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .errors import DomainError


class Representation(Enum):
    """Series used to evaluate the Brownian small-ball probability."""
    THETA = "theta-series"
    REFLECTION = "reflection-series"


class Theorem(Enum):
    T1 = "T1"
    T2 = "T2"


class ScheduleForm(Enum):
    CONSTANT_TAU = "constant-tau-over-loglog"
    ZERO = "zero"


class PsiFamily(Enum):
    C_OVER_SQRT_LOGLOG = "c-over-sqrt-loglog"
    TABULATED = "general-tabulated"


class Verdict(Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"


@dataclass(frozen=True)
class SmallBallResult:
    """P(sup_{0<=s<=1} |W(s)| <= x) with its evaluation provenance."""
    value: float
    terms_used: int
    representation: Representation
    error_bound: float


@dataclass(frozen=True)
class LimitConstant:
    """Closed-form right-hand side of a weighted-series limit theorem."""
    value: float
    theorem: Theorem
    params: Dict[str, float]


@dataclass(frozen=True)
class WeightParams:
    """Exponent pair (a, b) of the weights (log n)^a (log log n)^b / n."""
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > -1.0 and self.b > -1.0):
            raise DomainError(f"weight exponents require a > -1 and b > -1, got a={self.a}, b={self.b}")

    @property
    def critical_eps(self) -> float:
        """Boundary 1/sqrt(1+a) between convergence and divergence."""
        return 1.0 / math.sqrt(1.0 + self.a)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Perturbation a_n(eps) of the small-deviation radius."""
    tau: float = 0.0
    form: ScheduleForm = ScheduleForm.CONSTANT_TAU

    def offset(self, loglog_n: float) -> float:
        """a_n(eps) given log log n; tau / log log n for the built-in form."""
        if self.form is ScheduleForm.ZERO:
            return 0.0
        return self.tau / loglog_n

    @property
    def limit_tau(self) -> float:
        """Limit of a_n(eps) * log log n."""
        return 0.0 if self.form is ScheduleForm.ZERO else self.tau


@dataclass(frozen=True)
class PsiSpec:
    """Eventually non-increasing boundary function psi(n).

    The parametric family is psi_c(n) = c / sqrt(log log n); a tabulated
    psi is a step function through sorted (n, psi(n)) pairs.
    """
    family: PsiFamily
    c: Optional[float] = None
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.family is PsiFamily.C_OVER_SQRT_LOGLOG:
            if self.c is None or not self.c > 0:
                raise DomainError(f"psi_c requires c > 0, got {self.c}")
        elif not self.table:
            raise DomainError("tabulated psi requires a non-empty table")

    @classmethod
    def c_over_sqrt_loglog(cls, c: float) -> "PsiSpec":
        return cls(PsiFamily.C_OVER_SQRT_LOGLOG, c=c)

    @classmethod
    def tabulated(cls, pairs: Sequence[Tuple[float, float]]) -> "PsiSpec":
        return cls(PsiFamily.TABULATED, table=tuple(sorted((float(n), float(v)) for n, v in pairs)))


@dataclass(frozen=True)
class KernelSumResult:
    """Partial sum of a weighted series with its tail control."""
    partial_sum: float
    n_max: int
    tail_bound: float
    scaled_value: float
    head_sum: float = 0.0  # terms with n < e^e, where both guarded logs are flat
    edge_term: float = 0.0

    def integral_bracket(self) -> Tuple[float, float]:
        """Interval that must contain the integral over [e^e, inf)."""
        core = self.partial_sum - self.head_sum
        return core - self.edge_term, core + self.tail_bound + self.edge_term


@dataclass(frozen=True)
class ScaledLimitRow:
    eps: float
    scaled_value: float
    deviation: float


@dataclass(frozen=True)
class IncrementProfile:
    """Partial sums at checkpoints and the local decay of their increments."""
    n_grid: List[int]
    partial_sums: List[float]
    increments: List[float]
    ratios: List[float]
    decay_exponent: float


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate of P(M_n <= sigma phi(n) (eps + a_n(eps)))."""
    p_hat: float
    stderr: float
    reps: int
    seed: int
    n: int
    eps: float
    dist: Dict[str, Any]
    tau: float = 0.0
    threshold: float = 0.0
    reference: Optional[float] = None
    model_error_budget: float = 0.01

    @property
    def deviation(self) -> Optional[float]:
        if self.reference is None:
            return None
        return self.p_hat - self.reference


@dataclass(frozen=True)
class TruncationStats:
    """Diagnostics of the truncate-and-recenter construction."""
    n: int
    p_exponent: float
    threshold: float
    B_n: float
    B_n_over_n_sigma2: float
    delta_quantiles: Dict[str, float]
    B_n_empirical: float
    variance_deficit: float
    reps: int
    seed: int


@dataclass(frozen=True)
class RateRegression:
    """Least-squares slope of log p_hat against log log n."""
    n_grid: List[int]
    p_hats: List[float]
    stderrs: List[float]
    slope: float
    intercept: float
    expected_slope: float
    slope_stderr: float
    eps: float
    reps: int
    seed: int
    dist: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionRow:
    """One point of the tail-moment profile loglog t * E[X^2 I{|X| >= t}]."""
    log_t: float
    loglog_t: float
    tail_second_moment: float
    value: float


@dataclass
class RunConfig:
    """Everything needed to re-execute a command."""
    command: str
    params: Dict[str, Any]
    output_format: str = "csv"
    output_path: Optional[str] = None
    threads: int = 1
    seed: Optional[int] = None
    store: bool = False
