"""Finite populations and their centered product moments.

Two divisor conventions coexist in this package and are easy to mix up,
so they are fixed here once:

* ``S^2`` (population variance, :attr:`Population.sy2` and friends) and
  ``s^2`` (:func:`sample_variance`) use divisor ``N - 1`` / ``n - 1``.
* Central product moments ``mu_pqr`` (:func:`central_moment`) use
  divisor ``N``.  The standardized moments ``delta_pqr`` built from
  them therefore also use divisor ``N`` throughout, numerator and
  denominator alike, and the mismatch with ``S^2`` cancels nowhere; it
  simply never enters, because every delta is a ratio of divisor-``N``
  quantities.

All moment computations are two-pass (center first, then average
products of deviations), which keeps them stable for the badly scaled
populations that show up in stress tests.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePopulationError, InvalidInputError, PopulationFormatError

#: Largest total order ``p + q + r`` accepted by the moment routines.
#: Fourth-order theory needs nothing beyond 4; the slack is for
#: exploratory use, not a license for unstable high orders.
MAX_MOMENT_ORDER = 8

_VARIATES = ("y", "x", "z")


def _as_readonly_float_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise InvalidInputError(f"variate {name!r} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"variate {name!r} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Population:
    """A finite population of triples ``(y_i, x_i, z_i)``.

    The study variable is ``y``; ``x`` and ``z`` are auxiliary
    variables, conventionally positively and negatively correlated
    with ``y``.  Arrays are copied and frozen on construction, so a
    ``Population`` never changes under its consumers.

    Parameters
    ----------
    y, x, z : array_like
        One-dimensional, finite, of common length at least 2.
    """

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        for name in _VARIATES:
            object.__setattr__(self, name, _as_readonly_float_vector(getattr(self, name), name))
        if not (self.y.size == self.x.size == self.z.size):
            raise InvalidInputError(
                "variates must have a common length, got "
                f"y:{self.y.size} x:{self.x.size} z:{self.z.size}"
            )
        if self.y.size < 2:
            raise InvalidInputError("a population needs at least two units")

    @property
    def size(self) -> int:
        """Number of units ``N``."""
        return int(self.y.size)

    def __len__(self) -> int:
        return self.size

    @property
    def mean_y(self) -> float:
        return float(self.y.mean())

    @property
    def mean_x(self) -> float:
        return float(self.x.mean())

    @property
    def mean_z(self) -> float:
        return float(self.z.mean())

    @property
    def sy2(self) -> float:
        """Population variance of ``y``, divisor ``N - 1``."""
        return float(np.var(self.y, ddof=1))

    @property
    def sx2(self) -> float:
        """Population variance of ``x``, divisor ``N - 1``."""
        return float(np.var(self.x, ddof=1))

    @property
    def sz2(self) -> float:
        """Population variance of ``z``, divisor ``N - 1``."""
        return float(np.var(self.z, ddof=1))

    def variate(self, name: str) -> np.ndarray:
        if name not in _VARIATES:
            raise InvalidInputError(f"unknown variate {name!r}, expected one of {_VARIATES}")
        return getattr(self, name)


def _check_order(p: int, q: int, r: int, max_order: int) -> None:
    for label, value in (("p", p), ("q", q), ("r", r)):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise InvalidInputError(f"moment order {label} must be an integer, got {value!r}")
        if value < 0:
            raise InvalidInputError(f"moment order {label} must be non-negative, got {value}")
    total = p + q + r
    if total > max_order:
        raise InvalidInputError(
            f"total moment order {total} exceeds the cap {max_order}; "
            "raise max_order explicitly if you accept the numerical risk"
        )


def central_moment(pop: Population, p: int, q: int, r: int, *, max_order: int = MAX_MOMENT_ORDER) -> float:
    """Centered product moment ``mu_pqr`` with divisor ``N``.

    ``mu_pqr = (1/N) * sum_i (y_i - mean_y)^p (x_i - mean_x)^q (z_i - mean_z)^r``

    Parameters
    ----------
    pop : Population
    p, q, r : int
        Non-negative exponents for the ``y``, ``x`` and ``z``
        deviations; their sum may not exceed ``max_order``.
    max_order : int, optional
        Guard against accidental high-order requests.

    Returns
    -------
    float
    """
    _check_order(p, q, r, max_order)
    product = None
    for name, exponent in zip(_VARIATES, (p, q, r)):
        if exponent == 0:
            continue
        values = pop.variate(name)
        deviations = values - values.mean()
        factor = deviations if exponent == 1 else deviations**exponent
        product = factor if product is None else product * factor
    if product is None:
        return 1.0
    return float(product.mean())


def delta(pop: Population, p: int, q: int, r: int, *, max_order: int = MAX_MOMENT_ORDER) -> float:
    """Standardized moment ``delta_pqr``.

    ``delta_pqr = mu_pqr / (mu_200^(p/2) * mu_020^(q/2) * mu_002^(r/2))``

    where only the variances of variates that actually appear (nonzero
    exponent) enter the denominator.  Divisor ``N`` everywhere.

    Raises
    ------
    DegeneratePopulationError
        If a variate appearing with nonzero exponent has zero variance.
    """
    _check_order(p, q, r, max_order)
    numerator = central_moment(pop, p, q, r, max_order=max_order)
    denominator = 1.0
    for name, exponent, variance_order in (
        ("y", p, (2, 0, 0)),
        ("x", q, (0, 2, 0)),
        ("z", r, (0, 0, 2)),
    ):
        if exponent == 0:
            continue
        variance = central_moment(pop, *variance_order)
        if variance <= 0.0:
            raise DegeneratePopulationError(
                f"variate {name!r} has zero variance, delta_{p}{q}{r} is undefined"
            )
        denominator *= variance ** (exponent / 2.0)
    return numerator / denominator


@dataclass(frozen=True)
class DeltaTable:
    """The six fourth-order standardized moments the theory consumes.

    ``d400``, ``d040``, ``d004`` are the kurtoses of ``y``, ``x``,
    ``z``; ``d220``, ``d202``, ``d022`` are the pairwise squared-deviation
    cross moments.  Values are required to be finite, but the moment
    *bounds* (kurtoses at least 1, cross moments inside their
    Cauchy-Schwarz box) are deliberately not enforced at construction:
    hand-built tables may be anything, and :meth:`violations` reports
    what is wrong with them.
    """

    d400: float
    d040: float
    d004: float
    d220: float
    d202: float
    d022: float

    def __post_init__(self) -> None:
        for name in self.field_names():
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f"moment {name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return ("d400", "d040", "d004", "d220", "d202", "d022")

    def violations(self, tol: float = 1e-9) -> list[str]:
        """Describe every way this table fails to be realizable.

        A table computed from an actual population always passes: the
        kurtoses satisfy ``d >= 1`` (Jensen) and each cross moment
        satisfies ``|d_cross - 1| <= sqrt((d_a - 1)(d_b - 1))``
        (Cauchy-Schwarz on squared deviations).  The ``tol`` slack
        absorbs floating-point noise on populations that sit exactly on
        a bound.
        """
        problems: list[str] = []
        for name in ("d400", "d040", "d004"):
            if getattr(self, name) < 1.0 - tol:
                problems.append(f"{name} = {getattr(self, name)!r} is below 1")
        for cross, left, right in (
            ("d220", "d400", "d040"),
            ("d202", "d400", "d004"),
            ("d022", "d040", "d004"),
        ):
            spread_left = max(getattr(self, left) - 1.0, 0.0)
            spread_right = max(getattr(self, right) - 1.0, 0.0)
            bound = math.sqrt(spread_left * spread_right)
            excess = abs(getattr(self, cross) - 1.0) - bound
            if excess > tol:
                problems.append(
                    f"|{cross} - 1| = {abs(getattr(self, cross) - 1.0)!r} exceeds "
                    f"sqrt(({left} - 1)({right} - 1)) = {bound!r}"
                )
        return problems

    @property
    def is_valid(self) -> bool:
        return not self.violations()

    def to_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.field_names()}

    @classmethod
    def from_dict(cls, data: dict) -> "DeltaTable":
        if not isinstance(data, dict):
            raise PopulationFormatError(f"moment table must be a JSON object, got {type(data).__name__}")
        missing = [name for name in cls.field_names() if name not in data]
        if missing:
            raise PopulationFormatError(f"moment table is missing keys: {', '.join(missing)}")
        values = {}
        for name in cls.field_names():
            raw = data[name]
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise PopulationFormatError(f"moment table key {name!r} must be a number, got {raw!r}")
            if not math.isfinite(float(raw)):
                raise PopulationFormatError(f"moment table key {name!r} must be finite, got {raw!r}")
            values[name] = float(raw)
        return cls(**values)


def delta_table(pop: Population) -> DeltaTable:
    """Compute all six fourth-order standardized moments in one pass.

    Raises
    ------
    DegeneratePopulationError
        If any of the three variates has zero variance.
    """
    squared = {}
    for name in _VARIATES:
        values = pop.variate(name)
        deviations = values - values.mean()
        squared[name] = deviations * deviations
        if float(squared[name].mean()) <= 0.0:
            raise DegeneratePopulationError(
                f"variate {name!r} has zero variance, standardized moments are undefined"
            )
    mu2 = {name: float(squared[name].mean()) for name in _VARIATES}

    def one(a: str, b: str) -> float:
        return float((squared[a] * squared[b]).mean()) / (mu2[a] * mu2[b])

    return DeltaTable(
        d400=one("y", "y"),
        d040=one("x", "x"),
        d004=one("z", "z"),
        d220=one("y", "x"),
        d202=one("y", "z"),
        d022=one("x", "z"),
    )


def save_delta_table(table: DeltaTable, path) -> None:
    """Write a moment table as JSON with the six ``dpqr`` keys."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(table.to_dict(), handle, indent=2)
        handle.write("\n")


def load_delta_table(path) -> DeltaTable:
    """Read a moment table from JSON, insisting on all six finite keys."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise PopulationFormatError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return DeltaTable.from_dict(data)
    except PopulationFormatError as exc:
        raise PopulationFormatError(f"{path}: {exc}") from exc


def load_population_csv(path) -> Population:
    """Read a population from CSV: header ``y,x,z``, one triple per row.

    Parsing is strict: a wrong header, a row with the wrong field
    count, or a non-numeric or non-finite field is a hard error naming
    the line, never skipped.  A variate with zero variance loads fine
    but triggers a warning, since most estimators will refuse it later.
    """
    rows: list[tuple[float, float, float]] = []
    with open(path, "r", encoding="utf-8-sig", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise PopulationFormatError(f"{path}: empty file, expected header 'y,x,z'")
        if [field.strip() for field in header] != ["y", "x", "z"]:
            raise PopulationFormatError(
                f"{path}: line 1: expected header 'y,x,z', got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise PopulationFormatError(
                    f"{path}: line {lineno}: expected 3 comma-separated values, got {len(row)}"
                )
            try:
                triple = (float(row[0]), float(row[1]), float(row[2]))
            except ValueError:
                raise PopulationFormatError(
                    f"{path}: line {lineno}: non-numeric field in {row!r}"
                ) from None
            if not all(math.isfinite(value) for value in triple):
                raise PopulationFormatError(
                    f"{path}: line {lineno}: non-finite value in {row!r}"
                )
            rows.append(triple)
    if len(rows) < 2:
        raise InvalidInputError(
            f"{path}: a population needs at least two data rows, found {len(rows)}"
        )
    data = np.asarray(rows, dtype=np.float64)
    pop = Population(data[:, 0], data[:, 1], data[:, 2])
    for name in _VARIATES:
        if float(np.var(pop.variate(name), ddof=1)) == 0.0:
            warnings.warn(
                f"{path}: variate {name!r} has zero variance; estimators that "
                "use it will fail",
                stacklevel=2,
            )
    return pop


def save_population_csv(pop: Population, path) -> None:
    """Write a population as CSV, round-tripping values exactly.

    Fields use ``repr`` formatting (shortest string that parses back to
    the same float), so save followed by load reproduces the population
    bit for bit.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["y", "x", "z"])
        for yi, xi, zi in zip(pop.y, pop.x, pop.z):
            writer.writerow([repr(float(yi)), repr(float(xi)), repr(float(zi))])


def sample_variance(values) -> float:
    """Unbiased sample variance ``s^2`` with divisor ``n - 1``.

    Parameters
    ----------
    values : array_like
        One-dimensional, finite, length at least 2.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError("sample must be one-dimensional")
    if arr.size < 2:
        raise InvalidInputError(f"sample variance needs at least two values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("sample contains non-finite values")
    return float(np.var(arr, ddof=1))
