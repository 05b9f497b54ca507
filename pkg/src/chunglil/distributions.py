"""Built-in mean-zero step distributions for the random-walk simulations."""

import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy import special, stats

from .errors import CapabilityError, DomainError, ParameterError
from .rngcore import RandomStream

logger = logging.getLogger(__name__)

# exp(e^7) is outside the double range.
MAX_SAMPLABLE_ATOM = 6
_LOG_DOUBLE_MAX = math.log(np.finfo(np.float64).max)


class DistributionSpec(ABC):
    """Mean-zero step law with finite positive variance."""

    name: str = ""

    @property
    @abstractmethod
    def variance(self) -> float:
        ...

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def support_bound(self) -> Optional[float]:
        """max |X| for bounded laws, None otherwise."""
        return None

    def check_samplable(self) -> None:
        """Raise CapabilityError when draws cannot be represented."""

    @abstractmethod
    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        ...

    @abstractmethod
    def truncated_moments(self, t: float) -> Tuple[float, float]:
        """(E[X I{|X| <= t}], E[X^2 I{|X| <= t}])."""

    @abstractmethod
    def tail_second_moment(self, t: float) -> float:
        """E[X^2 I{|X| >= t}]."""

    def tail_second_moment_log(self, log_t: float) -> float:
        """tail_second_moment at t = exp(log_t), usable beyond the double range."""
        if log_t >= _LOG_DOUBLE_MAX:
            return 0.0
        return self.tail_second_moment(math.exp(log_t))

    def params(self) -> Dict[str, Any]:
        return {}

    def summary(self) -> Dict[str, Any]:
        return {"name": self.name, **self.params(), "variance": self.variance}

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Rademacher(DistributionSpec):
    name = "rademacher"

    @property
    def variance(self) -> float:
        return 1.0

    @property
    def support_bound(self) -> Optional[float]:
        return 1.0

    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        return stream.rademacher(size)

    def truncated_moments(self, t: float) -> Tuple[float, float]:
        return 0.0, (1.0 if t >= 1.0 else 0.0)

    def tail_second_moment(self, t: float) -> float:
        return 1.0 if t <= 1.0 else 0.0


class StdNormal(DistributionSpec):
    name = "normal"

    @property
    def variance(self) -> float:
        return 1.0

    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        return stream.gaussian(size)

    def truncated_moments(self, t: float) -> Tuple[float, float]:
        return 0.0, 1.0 - self.tail_second_moment(t)

    def tail_second_moment(self, t: float) -> float:
        # E[X^2 I{|X| >= t}] = 2 t pdf(t) + 2 sf(t)
        if not math.isfinite(t):
            return 0.0
        t = abs(t)
        return float(2.0 * t * stats.norm.pdf(t) + 2.0 * stats.norm.sf(t))


class CenteredUniform(DistributionSpec):
    """Uniform on [-w, w]."""

    name = "uniform"

    def __init__(self, w: float = math.sqrt(3.0)):
        if not w > 0:
            raise DomainError(f"uniform half-width must satisfy w > 0, got w={w}")
        self.w = float(w)

    @property
    def variance(self) -> float:
        return self.w * self.w / 3.0

    @property
    def support_bound(self) -> Optional[float]:
        return self.w

    def params(self) -> Dict[str, Any]:
        return {"w": self.w}

    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        return self.w * (2.0 * stream.uniform01(size) - 1.0)

    def truncated_moments(self, t: float) -> Tuple[float, float]:
        if t >= self.w:
            return 0.0, self.variance
        cut = max(t, 0.0)
        return 0.0, cut ** 3 / (3.0 * self.w)

    def tail_second_moment(self, t: float) -> float:
        cut = min(max(t, 0.0), self.w)
        return (self.w ** 3 - cut ** 3) / (3.0 * self.w)


class TwoPoint(DistributionSpec):
    """X = v with probability p, -p v / (1 - p) otherwise.

    The default p = 1 / (1 + v^2) gives unit variance.
    """

    name = "twopoint"

    def __init__(self, v: float = 10.0, p: Optional[float] = None):
        if v == 0 or not math.isfinite(v):
            raise DomainError(f"two-point value must be finite and nonzero, got v={v}")
        if p is None:
            p = 1.0 / (1.0 + v * v)
        if not 0 < p < 1:
            raise DomainError(f"two-point probability must satisfy 0 < p < 1, got p={p}")
        self.v = float(v)
        self.p = float(p)
        self.other = -self.p * self.v / (1.0 - self.p)

    @property
    def atoms(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (self.v, self.p), (self.other, 1.0 - self.p)

    @property
    def variance(self) -> float:
        return sum(p * x * x for x, p in self.atoms)

    @property
    def support_bound(self) -> Optional[float]:
        return max(abs(self.v), abs(self.other))

    def params(self) -> Dict[str, Any]:
        return {"v": self.v, "p": self.p}

    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        return np.where(stream.uniform01(size) < self.p, self.v, self.other)

    def truncated_moments(self, t: float) -> Tuple[float, float]:
        kept = [(x, p) for x, p in self.atoms if abs(x) <= t]
        return sum(p * x for x, p in kept), sum(p * x * x for x, p in kept)

    def tail_second_moment(self, t: float) -> float:
        return sum(p * x * x for x, p in self.atoms if abs(x) >= t)


class AtomsDoublyExp(DistributionSpec):
    """Symmetric atoms at +-x_k, x_k = exp(e^k), with P(|X| = x_k) = c / (k^2 x_k^2).

    Remaining mass sits at 0, so E[X^2] = c sum_{k <= k_max} k^{-2} while
    log log t * E[X^2 I{|X| >= t}] stays near c along t = x_k. k_max = inf
    gives the full ladder; it can be profiled in the log domain but not sampled.
    """

    name = "atoms"

    def __init__(self, c: float = 1.0, k_max: Union[int, float, str] = MAX_SAMPLABLE_ATOM):
        if not c > 0:
            raise DomainError(f"atom scale must satisfy c > 0, got c={c}")
        if k_max in ("inf", math.inf):
            k_max = None
        elif int(k_max) != k_max or k_max < 1:
            raise DomainError(f"k_max must be a positive integer or inf, got k_max={k_max}")
        self.c = float(c)
        self.k_max = None if k_max is None else int(k_max)
        # masses below 1e-300 beyond k = 5, so a short prefix fixes the total
        k = np.arange(1, min(self.k_max or MAX_SAMPLABLE_ATOM, MAX_SAMPLABLE_ATOM) + 1, dtype=np.float64)
        self._log_atoms = np.exp(k)
        self._masses = np.exp(math.log(self.c) - 2.0 * np.log(k) - 2.0 * self._log_atoms)
        if self._masses.sum() > 1.0:
            raise DomainError(f"atom masses exceed 1 for c={c}")

    @property
    def variance(self) -> float:
        return self._second_moment_from(1)

    @property
    def support_bound(self) -> Optional[float]:
        if self.k_max is None or self.k_max > MAX_SAMPLABLE_ATOM:
            return None
        return math.exp(self._log_atoms[-1])

    def params(self) -> Dict[str, Any]:
        return {"c": self.c, "k_max": "inf" if self.k_max is None else self.k_max}

    def check_samplable(self) -> None:
        if self.k_max is None or self.k_max > MAX_SAMPLABLE_ATOM:
            raise CapabilityError(
                f"atoms x_k = exp(e^k) overflow double precision for k > {MAX_SAMPLABLE_ATOM} (k_max={self.params()['k_max']})"
            )

    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        self.check_samplable()
        values = np.exp(self._log_atoms)
        # layout: +x_1, -x_1, +x_2, -x_2, ... then 0
        edges = np.cumsum(np.repeat(0.5 * self._masses, 2))
        signed = np.stack([values, -values], axis=1).ravel()
        index = np.searchsorted(edges, stream.uniform01(size), side="right")
        return np.where(index < len(signed), signed[np.minimum(index, len(signed) - 1)], 0.0)

    def _second_moment_from(self, k_first: int) -> float:
        """c sum_{k_first <= k <= k_max} k^{-2}."""
        k_first = max(k_first, 1)
        if self.k_max is None:
            return float(self.c * special.polygamma(1, k_first))
        if k_first > self.k_max:
            return 0.0
        k = np.arange(k_first, self.k_max + 1, dtype=np.float64)
        return self.c * math.fsum((1.0 / (k * k)).tolist())

    @staticmethod
    def _first_index(log_t: float, strict: bool) -> int:
        """Smallest k with x_k >= t (or x_k > t when strict), given log t."""
        if log_t < math.e or (not strict and log_t == math.e):
            return 1
        level = math.log(log_t)
        if strict:
            return int(math.floor(level * (1.0 + 1e-12))) + 1
        return max(int(math.ceil(level * (1.0 - 1e-12))), 1)

    def truncated_moments(self, t: float) -> Tuple[float, float]:
        if t <= 0:
            return 0.0, 0.0
        return 0.0, self.variance - self._second_moment_from(self._first_index(math.log(t), strict=True))

    def tail_second_moment(self, t: float) -> float:
        if t <= 0:
            return self.variance
        return self.tail_second_moment_log(math.log(t))

    def tail_second_moment_log(self, log_t: float) -> float:
        # |X| = x_k >= t  iff  e^k >= log t
        return self._second_moment_from(self._first_index(log_t, strict=False))


_REGISTRY = {
    Rademacher.name: Rademacher,
    StdNormal.name: StdNormal,
    CenteredUniform.name: CenteredUniform,
    TwoPoint.name: TwoPoint,
    AtomsDoublyExp.name: AtomsDoublyExp,
}

DISTRIBUTION_NAMES = tuple(_REGISTRY)


def build_distribution(name: str, **params: Any) -> DistributionSpec:
    """Distribution by registry name; unset (None) parameters take defaults."""
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ParameterError(f"unknown distribution {name!r}; expected one of {', '.join(DISTRIBUTION_NAMES)}")
    given = {key: value for key, value in params.items() if value is not None}
    try:
        return cls(**given)
    except TypeError as exc:
        raise ParameterError(f"invalid parameters for {name}: {exc}")
