"""Kernel laws of linear systems on Z^d.

A kernel law is a finite list of atoms ``(prob, xi)`` where each ``xi`` is a
nonnegative, finitely supported vector. The builders below cover the binary
contact path process, the potlatch process and arbitrary user supplied laws;
the moment helpers compute everything the phase criteria need exactly, as
finite sums over atoms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy import linalg

from .errors import AssumptionError, ConfigError, InvalidParameterError
from .lattice import MassField, Site, SparseField, as_site, origin, unit_vectors

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12
PIVOT_TOLERANCE = 1e-12
FAMILIES = ("bcpp", "potlatch", "custom")


@dataclass(frozen=True)
class KernelAtom:
    """One realisation ``xi`` of the random kernel together with its probability."""

    prob: float
    vector: MassField

    @property
    def size(self) -> float:
        """Return ``|xi|``."""

        return self.vector.total()

    def increment(self) -> SparseField:
        """Return ``xi - delta_0`` as a signed field."""

        return self.vector.add(SparseField.delta(self.vector.d), factor=-1.0)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the standing-assumption checks for a kernel law."""

    bounded: bool
    spanning_support: bool
    nonconstant_total: bool
    rank: int
    unit_total_probability: float
    b_K: float
    r_K: int

    @property
    def failed(self) -> list[str]:
        names = []
        if not self.bounded:
            names.append("bounded")
        if not self.spanning_support:
            names.append("spanning_support")
        if not self.nonconstant_total:
            names.append("nonconstant_total")
        return names

    @property
    def ok(self) -> bool:
        return not self.failed


@dataclass(frozen=True)
class KernelDistribution:
    """Finite-atom law of the random kernel ``K``."""

    d: int
    atoms: tuple[KernelAtom, ...]
    b_K: float
    r_K: int
    family: str = field(default="custom", compare=False)
    params: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.cumsum([atom.prob for atom in self.atoms])

    @cached_property
    def mean(self) -> MassField:
        return mean_kernel(self)

    @property
    def k_norm(self) -> float:
        return self.mean.total()

    @property
    def k0(self) -> float:
        return self.mean[origin(self.d)]

    def probabilities(self) -> list[float]:
        return [atom.prob for atom in self.atoms]


@dataclass(frozen=True)
class BetaTable:
    """Symmetric table ``beta_{x,y} = E[(K - delta_0)_x (K - delta_0)_y]``."""

    d: int
    entries: Mapping[tuple[Site, Site], float]

    def __getitem__(self, pair: tuple[Site, Site]) -> float:
        return self.entries.get(pair, 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return all(
            abs(v - self[(y, x)]) <= tol for (x, y), v in self.entries.items()
        )

    def pair_sums(self) -> SparseField:
        """Return ``B(u) = sum_x beta_{x, x-u}`` keyed by the difference ``u``."""

        acc: dict[Site, float] = {}
        for (x, y), value in self.entries.items():
            u = tuple(a - b for a, b in zip(x, y))
            acc[u] = acc.get(u, 0.0) + value
        return SparseField(self.d, acc)

    def row_sums_by_offset(self) -> SparseField:
        """Return ``y -> sum_z beta_{z, z+y}``, the origin-row correction of ``q``."""

        acc: dict[Site, float] = {}
        for (z, w), value in self.entries.items():
            y = tuple(b - a for a, b in zip(z, w))
            acc[y] = acc.get(y, 0.0) + value
        return SparseField(self.d, acc)

    def contract(self, g: SparseField) -> float:
        """Return ``sum_{x,y} g(x-y) beta_{x,y}``."""

        return math.fsum(
            g[tuple(a - b for a, b in zip(x, y))] * value
            for (x, y), value in self.entries.items()
        )

    def with_entry(self, x: Site, y: Site, value: float) -> "BetaTable":
        """Return a copy with ``beta_{x,y}`` replaced, without symmetrising."""

        entries = dict(self.entries)
        entries[(x, y)] = value
        return BetaTable(self.d, entries)


def _normalize_atoms(
    atoms: Sequence[KernelAtom], tol: float
) -> tuple[KernelAtom, ...]:
    if not atoms:
        raise InvalidParameterError("a kernel law needs at least one atom")
    for index, atom in enumerate(atoms):
        if not (atom.prob > 0.0) or atom.prob > 1.0 + tol:
            raise InvalidParameterError(
                f"atom {index} has probability {atom.prob}, expected a value in (0, 1]"
            )
    total = math.fsum(atom.prob for atom in atoms)
    if abs(total - 1.0) > tol:
        raise InvalidParameterError(
            f"atom probabilities sum to {total!r}, expected 1 within {tol:g}"
        )
    return tuple(KernelAtom(atom.prob / total, atom.vector) for atom in atoms)


def _support_rank(k: MassField, tol: float) -> int:
    vectors = [site for site in k if any(site)]
    if not vectors:
        return 0
    matrix = np.asarray(vectors, dtype=float).T
    _, r, _ = linalg.qr(matrix, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.sum(diag > tol * max(1.0, diag[0])))


def validate(
    dist: KernelDistribution, *, pivot_tolerance: float = PIVOT_TOLERANCE
) -> AssumptionReport:
    """Check boundedness, the spanning support of ``k`` and ``P(|K| = 1) < 1``."""

    observed_b = max((atom.vector.max_value() for atom in dist.atoms), default=0.0)
    observed_r = max((atom.vector.radius() for atom in dist.atoms), default=0)
    bounded = observed_b <= dist.b_K and observed_r <= dist.r_K
    rank = _support_rank(mean_kernel(dist), pivot_tolerance)
    unit = math.fsum(atom.prob for atom in dist.atoms if atom.size == 1.0)
    report = AssumptionReport(
        bounded=bounded,
        spanning_support=rank == dist.d,
        nonconstant_total=unit < 1.0 - PROBABILITY_TOLERANCE,
        rank=rank,
        unit_total_probability=unit,
        b_K=dist.b_K,
        r_K=dist.r_K,
    )
    if report.failed:
        logger.debug("kernel assumptions failed: %s", ", ".join(report.failed))
    return report


def _build(
    d: int,
    atoms: Sequence[KernelAtom],
    *,
    family: str,
    params: Mapping[str, Any] | None = None,
    b_K: float | None = None,
    r_K: int | None = None,
    strict: bool = True,
) -> KernelDistribution:
    for atom in atoms:
        if atom.vector.d != d:
            raise InvalidParameterError(
                f"atom dimension {atom.vector.d} does not match d={d}"
            )
    normalized = _normalize_atoms(atoms, PROBABILITY_TOLERANCE)
    observed_b = max((a.vector.max_value() for a in normalized), default=0.0)
    observed_r = max((a.vector.radius() for a in normalized), default=0)
    dist = KernelDistribution(
        d=d,
        atoms=normalized,
        b_K=observed_b if b_K is None else float(b_K),
        r_K=observed_r if r_K is None else int(r_K),
        family=family,
        params=dict(params or {}),
    )
    report = validate(dist)
    if report.failed:
        if strict:
            raise AssumptionError(report)
        logger.warning(
            "kernel violates standing assumptions: %s", ", ".join(report.failed)
        )
    return dist


def make_bcpp(d: int, lam: float) -> KernelDistribution:
    """Return the binary contact path process law with infection rate ``lam``."""

    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    if not (lam > 0.0) or not math.isfinite(lam):
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    denom = 2 * d * lam + 1
    zero = origin(d)
    atoms = [
        KernelAtom(lam / denom, MassField(d, {zero: 1.0, e: 1.0}))
        for e in unit_vectors(d)
    ]
    atoms.append(KernelAtom(1.0 / denom, MassField.zero(d)))
    return _build(d, atoms, family="bcpp", params={"lambda": float(lam)})


def make_potlatch(
    k_table: MassField, w_atoms: Sequence[tuple[float, float]]
) -> KernelDistribution:
    """Return the law of ``K = W k`` for a finite-atom weight ``W`` with mean one."""

    if len(k_table) == 0:
        raise InvalidParameterError("potlatch table k must have nonempty support")
    if not w_atoms:
        raise InvalidParameterError("potlatch weight W needs at least one atom")
    for prob, value in w_atoms:
        if value < 0.0 or not math.isfinite(value):
            raise InvalidParameterError(f"W atoms must be nonnegative, got {value}")
    total = math.fsum(prob for prob, _ in w_atoms)
    mean = math.fsum(prob * value for prob, value in w_atoms) / (total or 1.0)
    if abs(mean - 1.0) > PROBABILITY_TOLERANCE:
        raise InvalidParameterError(f"W must have mean one, got E[W] = {mean!r}")
    at_one = math.fsum(prob for prob, value in w_atoms if value == 1.0)
    if at_one >= total - PROBABILITY_TOLERANCE:
        raise InvalidParameterError("W must satisfy P(W = 1) < 1")
    atoms = [
        KernelAtom(prob, k_table.scale(value)) for prob, value in w_atoms
    ]
    params = {
        "k_table": k_table,
        "w_atoms": tuple((float(p), float(v)) for p, v in w_atoms),
    }
    return _build(k_table.d, atoms, family="potlatch", params=params)


def make_custom(
    atoms: Sequence[KernelAtom],
    *,
    d: int | None = None,
    b_K: float | None = None,
    r_K: int | None = None,
    strict: bool = True,
) -> KernelDistribution:
    """Validate an arbitrary finite-atom law.

    ``strict=False`` keeps a law that fails the standing assumptions and only
    logs a warning; the returned report is available through :func:`validate`.
    """

    if d is None:
        if not atoms:
            raise InvalidParameterError("a kernel law needs at least one atom")
        d = atoms[0].vector.d
    return _build(d, atoms, family="custom", b_K=b_K, r_K=r_K, strict=strict)


def sample_index(dist: KernelDistribution, rng: np.random.Generator) -> int:
    """Return the index of an atom drawn with its probability."""

    index = int(np.searchsorted(dist.cumulative, rng.random(), side="right"))
    return min(index, len(dist.atoms) - 1)


def sample(dist: KernelDistribution, rng: np.random.Generator) -> MassField:
    return dist.atoms[sample_index(dist, rng)].vector


def mean_kernel(dist: KernelDistribution) -> MassField:
    """Return ``k = E[K]``."""

    acc: dict[Site, list[float]] = {}
    for atom in dist.atoms:
        for site, value in atom.vector.items():
            acc.setdefault(site, []).append(atom.prob * value)
    return MassField(dist.d, {site: math.fsum(parts) for site, parts in acc.items()})


def beta_matrix(dist: KernelDistribution) -> BetaTable:
    """Return ``beta_{x,y} = E[(K - delta_0)_x (K - delta_0)_y]`` summed over atoms."""

    acc: dict[tuple[Site, Site], list[float]] = {}
    for atom in dist.atoms:
        inc = list(atom.increment().items())
        for x, ax in inc:
            for y, ay in inc:
                acc.setdefault((x, y), []).append(atom.prob * ax * ay)
    entries = {pair: math.fsum(parts) for pair, parts in acc.items()}
    return BetaTable(dist.d, {pair: v for pair, v in entries.items() if v != 0.0})


def second_moment_total(dist: KernelDistribution) -> float:
    """Return ``E[(|K| - 1)^2]``."""

    return math.fsum(atom.prob * (atom.size - 1.0) ** 2 for atom in dist.atoms)


def _xlogx(value: float) -> float:
    return value * math.log(value) if value > 0.0 else 0.0


def log_moment_margin(dist: KernelDistribution) -> float:
    """Return ``sum_x E[K_x ln K_x] - (|k| - 1)``; positive certifies slow growth."""

    entropy = math.fsum(
        atom.prob * _xlogx(value)
        for atom in dist.atoms
        for value in atom.vector.entries.values()
    )
    return entropy - (mean_kernel(dist).total() - 1.0)


def potlatch_log_moment_condition(dist: KernelDistribution) -> tuple[float, float]:
    """Return ``(E[W ln W], (|k| - 1 - sum k ln k) / |k|)`` for a potlatch law."""

    if dist.family != "potlatch":
        raise InvalidParameterError(
            "potlatch log-moment condition needs a potlatch law"
        )
    k_table: MassField = dist.params["k_table"]
    w_atoms = dist.params["w_atoms"]
    total = math.fsum(p for p, _ in w_atoms)
    w_entropy = math.fsum(p * _xlogx(v) for p, v in w_atoms) / total
    k_norm = k_table.total()
    k_entropy = math.fsum(_xlogx(v) for v in k_table.entries.values())
    return w_entropy, (k_norm - 1.0 - k_entropy) / k_norm


def _parse_site_table(
    raw: Any, pointer: str, d: int | None = None
) -> MassField:
    if not isinstance(raw, list):
        raise ConfigError(pointer, "expected a list of [site, value] pairs")
    items = []
    for index, entry in enumerate(raw):
        where = f"{pointer}/{index}"
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not isinstance(entry[0], list)
            or not isinstance(entry[1], (int, float))
            or isinstance(entry[1], bool)
        ):
            raise ConfigError(where, "expected [[x1, ..., xd], value]")
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in entry[0]):
            raise ConfigError(f"{where}/0", "site coordinates must be integers")
        if d is not None and len(entry[0]) != d:
            raise ConfigError(f"{where}/0", f"site must have length d={d}")
        items.append((entry[0], float(entry[1])))
    if d is None:
        if not items:
            raise ConfigError(pointer, "table must not be empty")
        d = len(items[0][0])
    if any(len(site) != d for site, _ in items):
        raise ConfigError(pointer, "all sites must have the same length")
    if any(value < 0 for _, value in items):
        raise ConfigError(pointer, "kernel entries must be nonnegative")
    return MassField.from_items(d, items)  # type: ignore[return-value]


def _require(spec: Mapping[str, Any], key: str, pointer: str, kind: type | tuple):
    if key not in spec:
        raise ConfigError(f"{pointer}/{key}", "required field is missing")
    value = spec[key]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ConfigError(f"{pointer}/{key}", f"unexpected type {type(value).__name__}")
    return value


def kernel_from_spec(
    spec: Mapping[str, Any], *, pointer: str = "/model"
) -> KernelDistribution:
    """Build a kernel law from its run-config description."""

    if not isinstance(spec, Mapping):
        raise ConfigError(pointer, "kernel specification must be an object")
    family = _require(spec, "type", pointer, str)
    if family == "bcpp":
        d = _require(spec, "d", pointer, int)
        lam = _require(spec, "lambda", pointer, (int, float))
        return make_bcpp(d, float(lam))
    if family == "potlatch":
        d = spec.get("d")
        if d is not None and (isinstance(d, bool) or not isinstance(d, int)):
            raise ConfigError(f"{pointer}/d", "dimension must be an integer")
        raw_k = _require(spec, "k", pointer, list)
        k_table = _parse_site_table(raw_k, f"{pointer}/k", d)
        raw_w = _require(spec, "w_atoms", pointer, list)
        w_atoms = []
        for index, entry in enumerate(raw_w):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in entry
                )
            ):
                where = f"{pointer}/w_atoms/{index}"
                raise ConfigError(where, "expected [prob, value]")
            w_atoms.append((float(entry[0]), float(entry[1])))
        return make_potlatch(k_table, w_atoms)
    if family == "custom":
        d = _require(spec, "d", pointer, int)
        raw_atoms = _require(spec, "atoms", pointer, list)
        atoms = []
        for index, entry in enumerate(raw_atoms):
            where = f"{pointer}/atoms/{index}"
            if not isinstance(entry, Mapping):
                raise ConfigError(where, "atom must be an object")
            prob = _require(entry, "prob", where, (int, float))
            vector = _parse_site_table(entry.get("vector", []), f"{where}/vector", d)
            atoms.append(KernelAtom(float(prob), vector))
        return make_custom(atoms, d=d)
    raise ConfigError(
        f"{pointer}/type", f"unknown kernel type {family!r}; expected one of {FAMILIES}"
    )


def _table_to_spec(field_: SparseField) -> list[list[Any]]:
    return [[list(site), value] for site, value in field_.items()]


def kernel_to_spec(dist: KernelDistribution) -> dict[str, Any]:
    """Return the run-config description of ``dist``."""

    if dist.family == "bcpp":
        return {"type": "bcpp", "d": dist.d, "lambda": dist.params["lambda"]}
    if dist.family == "potlatch":
        return {
            "type": "potlatch",
            "d": dist.d,
            "k": _table_to_spec(dist.params["k_table"]),
            "w_atoms": [list(pair) for pair in dist.params["w_atoms"]],
        }
    return {
        "type": "custom",
        "d": dist.d,
        "atoms": [
            {"prob": atom.prob, "vector": _table_to_spec(atom.vector)}
            for atom in dist.atoms
        ],
    }


def neighbour_table(d: int, weight: float = 1.0) -> MassField:
    """Return ``weight`` times the uniform table on the ``2d`` nearest neighbours."""

    return MassField(d, {e: weight / (2 * d) for e in unit_vectors(d)})


def site_field(d: int, items: Iterable[tuple[Sequence[int], float]]) -> MassField:
    field_ = MassField.from_items(d, ((as_site(s, d), v) for s, v in items))
    return field_  # type: ignore[return-value]


__all__ = [
    "KernelAtom",
    "KernelDistribution",
    "AssumptionReport",
    "BetaTable",
    "make_bcpp",
    "make_potlatch",
    "make_custom",
    "validate",
    "sample",
    "sample_index",
    "mean_kernel",
    "beta_matrix",
    "second_moment_total",
    "log_moment_margin",
    "potlatch_log_moment_condition",
    "kernel_from_spec",
    "kernel_to_spec",
    "neighbour_table",
    "site_field",
]
