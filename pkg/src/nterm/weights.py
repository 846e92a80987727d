"""Weight sequences for weighted lp sequence-space balls.

A weight model is a nondecreasing sequence 1 <= w_1 <= w_2 <= ... that can
be evaluated at any index j >= 1.  Four families are built in:

* ``ConstantWeights()``          -- w_j = 1
* ``LogPowerWeights(beta)``      -- w_j = (1 + ln j)**beta, beta >= 0
* ``PowLogWeights(alpha, beta)`` -- w_j = max_{i<=j} i**alpha * log2(i+1)**beta
* ``TabulatedWeights(values)``   -- explicit finite table

``PowLogWeights`` applies a running maximum so the sequence is nondecreasing
for every real beta; the base-2 logarithm makes the first weight exactly 1
for all parameter choices.  ``predicted_rate`` maps a closed-form family and
an exponent p to the polynomial/logarithmic decay exponents expected of the
worst-case n-term error, plus the hypotheses under which the prediction
holds.

Models can also be written as short text specs (``const``,
``logpow:beta=1``, ``powlog:alpha=1,beta=0``, ``file:weights.txt``) for CLI
and config use; see ``parse_weight_spec``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "WeightModel",
    "ConstantWeights",
    "LogPowerWeights",
    "PowLogWeights",
    "TabulatedWeights",
    "RatePrediction",
    "WeightValidationError",
    "UnsupportedFamilyError",
    "WeightSpecError",
    "validate",
    "weight_value",
    "predicted_rate",
    "parse_weight_spec",
]

# indices used to spot-check monotonicity of closed-form families
_SAMPLE_GRID = np.unique(np.concatenate([
    np.arange(1, 1025),
    2 ** np.arange(10, 21),
])).astype(np.int64)


class WeightValidationError(ValueError):
    """A weight sequence is not nondecreasing or starts below 1."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class UnsupportedFamilyError(ValueError):
    """Operation needs a closed-form family but got something else."""


class WeightSpecError(ValueError):
    """A textual weight spec could not be parsed."""


class WeightModel:
    """Base class; concrete families implement ``values``."""

    def values(self, m: int) -> np.ndarray:
        """Return w_1..w_m as a float64 array."""
        raise NotImplementedError

    def value(self, j: int) -> float:
        if j < 1:
            raise ValueError(f"weight index must be >= 1, got {j}")
        return float(self.values(int(j))[-1])

    @property
    def known_length(self) -> int | None:
        """Largest evaluable index, or None when unbounded."""
        return None

    @property
    def asymptotic_exponents(self) -> tuple[float, float] | None:
        """(a, b) with W_m growing like m**(a + 1/p) * (log m)**b, if known."""
        return None

    def spec_string(self) -> str:
        raise NotImplementedError

    def _check(self) -> None:
        """Verify w_1 >= 1 and monotonicity on a sample grid."""
        vals = self.values(int(_SAMPLE_GRID[-1]))[_SAMPLE_GRID - 1]
        if vals[0] < 1.0:
            raise WeightValidationError(
                f"w_1 = {vals[0]} is below 1", index=1)
        bad = np.nonzero(np.diff(vals) < 0)[0]
        if bad.size:
            j = int(_SAMPLE_GRID[bad[0] + 1])
            raise WeightValidationError(
                f"weights decrease at index {j}", index=j)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec_string()!r})"


class ConstantWeights(WeightModel):
    """w_j = 1 for every j."""

    def values(self, m: int) -> np.ndarray:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        return np.ones(int(m))

    @property
    def asymptotic_exponents(self) -> tuple[float, float]:
        return (0.0, 0.0)

    def spec_string(self) -> str:
        return "const"


class LogPowerWeights(WeightModel):
    """w_j = (1 + ln j)**beta with beta >= 0."""

    def __init__(self, beta: float):
        self.beta = float(beta)
        if self.beta < 0:
            # (1 + ln j)**beta decreases for beta < 0
            raise WeightValidationError(
                f"logpow requires beta >= 0, got {self.beta}"
                " (weights would decrease at index 2)", index=2)
        self._check()

    def values(self, m: int) -> np.ndarray:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        j = np.arange(1, int(m) + 1, dtype=np.float64)
        return (1.0 + np.log(j)) ** self.beta

    @property
    def asymptotic_exponents(self) -> tuple[float, float]:
        return (0.0, self.beta)

    def spec_string(self) -> str:
        return f"logpow:beta={self.beta!r}"


class PowLogWeights(WeightModel):
    """Running maximum of i**alpha * log2(i+1)**beta.

    The running maximum keeps the sequence nondecreasing for beta < 0, where
    the raw formula dips before the power term takes over.  The evaluated
    prefix is cached and grows on demand; access is lock-protected so
    instances behave as pure functions under concurrent use.
    """

    def __init__(self, alpha: float, beta: float):
        self.alpha = float(alpha)
        self.beta = float(beta)
        self._lock = threading.Lock()
        self._cache = np.empty(0)
        self._check()

    def raw_value(self, j) -> np.ndarray:
        """Formula value i**alpha * log2(i+1)**beta without the running max."""
        j = np.asarray(j, dtype=np.float64)
        return j ** self.alpha * np.log2(j + 1.0) ** self.beta

    def _fill(self, m: int) -> None:
        with self._lock:
            have = self._cache.size
            if have >= m:
                return
            grow = max(m, 2 * have, 1024)
            new_j = np.arange(have + 1, grow + 1, dtype=np.float64)
            raw = self.raw_value(new_j)
            if have:
                raw[0] = max(raw[0], self._cache[-1])
            self._cache = np.concatenate(
                [self._cache, np.maximum.accumulate(raw)])

    def values(self, m: int) -> np.ndarray:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        m = int(m)
        self._fill(m)
        with self._lock:
            return self._cache[:m].copy()

    @property
    def asymptotic_exponents(self) -> tuple[float, float]:
        if self.alpha > 0:
            return (self.alpha, self.beta)
        if self.alpha == 0 and self.beta > 0:
            return (0.0, self.beta)
        # formula tends to 0 or stays flat: running max is constant
        return (0.0, 0.0)

    def spec_string(self) -> str:
        return f"powlog:alpha={self.alpha!r},beta={self.beta!r}"


class TabulatedWeights(WeightModel):
    """Explicit weight table, index 1 first; validated exhaustively."""

    def __init__(self, values: Sequence[float], source: str | None = None):
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise WeightValidationError("weight table is empty")
        if arr[0] < 1.0:
            raise WeightValidationError(
                f"w_1 = {arr[0]} is below 1", index=1)
        bad = np.nonzero(np.diff(arr) < 0)[0]
        if bad.size:
            j = int(bad[0]) + 2  # 1-based index of the violating entry
            raise WeightValidationError(
                f"weights decrease at index {j}", index=j)
        arr.setflags(write=False)
        self._values = arr
        self._source = source

    def values(self, m: int) -> np.ndarray:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        if m > self._values.size:
            raise ValueError(
                f"tabulated weights defined only up to index "
                f"{self._values.size}, requested {m}")
        return self._values[:int(m)].copy()

    @property
    def known_length(self) -> int:
        return int(self._values.size)

    def spec_string(self) -> str:
        if self._source is not None:
            return f"file:{self._source}"
        return f"tabulated[{self._values.size}]"


def validate(w: WeightModel) -> WeightModel:
    """Re-check a model and hand it back; raises ``WeightValidationError``.

    Construction already validates, so this mainly serves call sites that
    receive a model of unknown provenance.
    """
    if isinstance(w, TabulatedWeights):
        TabulatedWeights(w.values(w.known_length))
    else:
        w._check()
    return w


def weight_value(w: WeightModel, j: int) -> float:
    """w_j for a validated model; j runs from 1."""
    return w.value(j)


@dataclass(frozen=True)
class RatePrediction:
    """Expected decay sigma_n ~ n**(-poly) * (log(n+1))**(-log_exponent)."""

    poly_exponent: float
    log_exponent: float
    valid: bool
    validity_condition: str


def predicted_rate(w: WeightModel, p: float) -> RatePrediction:
    """Predicted worst-case decay exponents for a built-in family.

    ``valid`` is False when the hypothesis behind the prediction fails; the
    exponents are still reported for diagnostics.  Tabulated models carry no
    closed form and are rejected.
    """
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if isinstance(w, (ConstantWeights, LogPowerWeights)):
        beta = 0.0 if isinstance(w, ConstantWeights) else w.beta
        return RatePrediction(
            poly_exponent=inv_p - 0.5,
            log_exponent=beta,
            valid=bool(beta >= 0 and 0 < p < 2),
            validity_condition="beta >= 0 and 0 < p < 2",
        )
    if isinstance(w, PowLogWeights):
        poly = w.alpha + inv_p - 0.5
        return RatePrediction(
            poly_exponent=poly,
            log_exponent=w.beta,
            valid=bool(w.alpha > 0 and poly > 0),
            validity_condition="alpha > 0 and alpha + 1/p - 1/2 > 0",
        )
    raise UnsupportedFamilyError(
        f"no closed-form rate for {type(w).__name__}")


def _parse_params(body: str, spec: str) -> dict[str, float]:
    params: dict[str, float] = {}
    for part in body.split(","):
        if "=" not in part:
            raise WeightSpecError(f"bad parameter {part!r} in {spec!r}")
        key, _, raw = part.partition("=")
        try:
            params[key.strip()] = float(raw)
        except ValueError:
            raise WeightSpecError(
                f"bad numeric value {raw!r} in {spec!r}") from None
    return params


def parse_weight_spec(spec: str) -> WeightModel:
    """Build a validated model from its textual form.

    Accepted forms: ``const``, ``logpow:beta=<f>``,
    ``powlog:alpha=<f>,beta=<f>``, ``file:<path>`` (text file, one weight
    per line, line k is w_k).
    """
    spec = spec.strip()
    if spec == "const":
        return ConstantWeights()
    head, sep, body = spec.partition(":")
    if not sep:
        raise WeightSpecError(f"unknown weight spec {spec!r}")
    if head == "logpow":
        params = _parse_params(body, spec)
        if set(params) != {"beta"}:
            raise WeightSpecError(f"logpow takes exactly beta=, got {spec!r}")
        return LogPowerWeights(params["beta"])
    if head == "powlog":
        params = _parse_params(body, spec)
        if set(params) != {"alpha", "beta"}:
            raise WeightSpecError(
                f"powlog takes exactly alpha=,beta=, got {spec!r}")
        return PowLogWeights(params["alpha"], params["beta"])
    if head == "file":
        path = Path(body)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise WeightSpecError(f"cannot read weight file {body!r}: {exc}")
        vals = []
        for lineno, line in enumerate(lines, 1):
            text = line.strip()
            if not text:
                if any(l.strip() for l in lines[lineno:]):
                    raise WeightSpecError(
                        f"{body}:{lineno}: blank line inside weight table")
                break
            try:
                vals.append(float(text))
            except ValueError:
                raise WeightSpecError(
                    f"{body}:{lineno}: not a number: {text!r}") from None
        return TabulatedWeights(vals, source=body)
    raise WeightSpecError(f"unknown weight family {head!r}")
