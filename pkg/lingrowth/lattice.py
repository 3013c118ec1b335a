"""Sites of Z^d and finitely supported fields on them.

A :class:`SparseField` maps lattice sites to reals and never stores exact
zeros. :class:`MassField` additionally requires every stored value to be
positive; it is the type used for densities, mean kernels and the partial
Green functions ``g_n``. Signed tables such as ``k - delta_0`` or the pair
sums of ``beta`` are plain :class:`SparseField` instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidParameterError

Site = tuple[int, ...]


def origin(d: int) -> Site:
    """Return the origin of Z^d."""

    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    return (0,) * d


def unit_vectors(d: int) -> list[Site]:
    """Return the ``2d`` nearest neighbours of the origin, ``+e_i`` before ``-e_i``."""

    sites: list[Site] = []
    for axis in range(d):
        for sign in (1, -1):
            coords = [0] * d
            coords[axis] = sign
            sites.append(tuple(coords))
    return sites


def l1_norm(site: Sequence[int]) -> int:
    return sum(abs(c) for c in site)


def add_sites(a: Site, b: Site) -> Site:
    return tuple(x + y for x, y in zip(a, b))


def sub_sites(a: Site, b: Site) -> Site:
    return tuple(x - y for x, y in zip(a, b))


def neg_site(a: Site) -> Site:
    return tuple(-x for x in a)


def ball(d: int, radius: int) -> list[Site]:
    """Return the sites of the closed l1-ball of ``radius`` in sorted order."""

    span = range(-radius, radius + 1)
    return [s for s in product(span, repeat=d) if l1_norm(s) <= radius]


def as_site(coords: Iterable[int], d: int | None = None) -> Site:
    """Coerce ``coords`` to a :data:`Site`, checking the dimension when given."""

    site = tuple(int(c) for c in coords)
    if d is not None and len(site) != d:
        raise InvalidParameterError(
            f"site {site} has length {len(site)}, expected dimension {d}"
        )
    return site


@dataclass(frozen=True)
class SparseField:
    """Finitely supported real function on Z^d."""

    d: int
    entries: Mapping[Site, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {self.d}")
        cleaned: dict[Site, float] = {}
        for key in sorted(self.entries):
            site = as_site(key, self.d)
            value = float(self.entries[key])
            if not math.isfinite(value):
                raise InvalidParameterError(f"non-finite value {value} at {site}")
            if value != 0.0:
                cleaned[site] = value
        self._check_values(cleaned)
        object.__setattr__(self, "entries", cleaned)

    def _check_values(self, entries: Mapping[Site, float]) -> None:
        """Hook for subclasses that restrict the sign of stored values."""

    @classmethod
    def from_items(
        cls, d: int, items: Iterable[tuple[Sequence[int], float]]
    ) -> "SparseField":
        acc: dict[Site, float] = {}
        for coords, value in items:
            site = as_site(coords, d)
            acc[site] = acc.get(site, 0.0) + float(value)
        return cls(d, acc)

    @classmethod
    def delta(cls, d: int, site: Site | None = None, value: float = 1.0):
        return cls(d, {site if site is not None else origin(d): value})

    @classmethod
    def zero(cls, d: int):
        return cls(d, {})

    def __getitem__(self, site: Site) -> float:
        return self.entries.get(site, 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.entries)

    def __contains__(self, site: object) -> bool:
        return site in self.entries

    def items(self):
        return self.entries.items()

    def support(self) -> list[Site]:
        return list(self.entries)

    def total(self) -> float:
        """Return the signed sum of all values (``|f|`` for a mass field)."""

        return math.fsum(self.entries.values())

    def abs_total(self) -> float:
        return math.fsum(abs(v) for v in self.entries.values())

    def sum_squares(self) -> float:
        return math.fsum(v * v for v in self.entries.values())

    def max_value(self) -> float:
        return max(self.entries.values(), default=0.0)

    def radius(self) -> int:
        """Return the largest l1-norm in the support (0 for an empty field)."""

        return max((l1_norm(s) for s in self.entries), default=0)

    def _like(self, entries: Mapping[Site, float], other: "SparseField | None" = None):
        keep_mass = isinstance(self, MassField) and (
            other is None or isinstance(other, MassField)
        )
        if keep_mass and all(v >= 0.0 for v in entries.values()):
            return MassField(self.d, entries)
        return SparseField(self.d, entries)

    def reflect(self):
        """Return ``f(-x)``."""

        return self._like({neg_site(s): v for s, v in self.entries.items()})

    def scale(self, factor: float):
        entries = {s: v * factor for s, v in self.entries.items()}
        if factor < 0:
            return SparseField(self.d, entries)
        return self._like(entries)

    def add(self, other: "SparseField", factor: float = 1.0) -> "SparseField":
        """Return ``self + factor * other``."""

        self._check_dim(other)
        acc = dict(self.entries)
        for s, v in other.entries.items():
            acc[s] = acc.get(s, 0.0) + factor * v
        if factor >= 0:
            return self._like(acc, other)
        return SparseField(self.d, acc)

    def convolve(self, other: "SparseField") -> "SparseField":
        """Return ``(self * other)(x) = sum_y self(y) other(x - y)``."""

        self._check_dim(other)
        acc: dict[Site, float] = {}
        for s, v in self.entries.items():
            for t, w in other.entries.items():
                key = add_sites(s, t)
                acc[key] = acc.get(key, 0.0) + v * w
        return self._like(acc, other)

    def inner(self, other: "SparseField") -> float:
        """Return the l2 inner product ``<self, other>``."""

        self._check_dim(other)
        small, large = (self, other) if len(self) <= len(other) else (other, self)
        return math.fsum(v * large[s] for s, v in small.entries.items())

    def value_at_offsets(self, center: Site, offsets: Iterable[Site]) -> list[float]:
        return [self[add_sites(center, u)] for u in offsets]

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return all(abs(v - self[neg_site(s)]) <= tol for s, v in self.entries.items())

    def to_dense(self, radius: int) -> np.ndarray:
        """Return a dense array on ``[-radius, radius]^d`` with the origin centred.

        Entries outside the box are dropped.
        """

        size = 2 * radius + 1
        arr = np.zeros((size,) * self.d)
        for s, v in self.entries.items():
            if all(abs(c) <= radius for c in s):
                arr[tuple(c + radius for c in s)] = v
        return arr

    def as_dict(self) -> dict[str, float]:
        """Return a JSON-friendly mapping ``"x,y,..." -> value``."""

        return {",".join(str(c) for c in s): v for s, v in self.entries.items()}

    def _check_dim(self, other: "SparseField") -> None:
        if other.d != self.d:
            raise InvalidParameterError(
                f"dimension mismatch: {self.d} and {other.d}"
            )


@dataclass(frozen=True)
class MassField(SparseField):
    """Finitely supported nonnegative field; stored values are strictly positive."""

    def _check_values(self, entries: Mapping[Site, float]) -> None:
        for site, value in entries.items():
            if value < 0.0:
                raise InvalidParameterError(
                    f"mass field value at {site} is negative: {value}"
                )


def from_dense(arr: np.ndarray, *, mass: bool = False) -> SparseField:
    """Inverse of :meth:`SparseField.to_dense` for a centred cubic array."""

    d = arr.ndim
    radius = (arr.shape[0] - 1) // 2
    entries: dict[Site, float] = {}
    for index in zip(*np.nonzero(arr)):
        entries[tuple(int(i) - radius for i in index)] = float(arr[index])
    cls = MassField if mass else SparseField
    return cls(d, entries)


def quadratic_form(g: SparseField, f: SparseField) -> float:
    """Return ``<g * f, f> = sum_{x,y} g(x - y) f(x) f(y)``."""

    sites = list(f.entries.items())
    acc = []
    for x, fx in sites:
        acc.append(fx * math.fsum(g[sub_sites(x, y)] * fy for y, fy in sites))
    return math.fsum(acc)


__all__ = [
    "Site",
    "SparseField",
    "MassField",
    "origin",
    "unit_vectors",
    "l1_norm",
    "add_sites",
    "sub_sites",
    "neg_site",
    "ball",
    "as_site",
    "from_dense",
    "quadratic_form",
]
