"""Exact drift of the overlap functional ``S = <g * rho, rho>``.

For a finite-atom kernel law every expectation over the law of ``K`` is a
finite sum, so the drift of ``S`` under one event and the terms of its
lower bound can be evaluated exactly for any finite density ``rho``.

For an atom ``xi`` with ``a = xi - delta_0`` and a site ``z`` the updated
density is ``J / m`` with ``J = rho + rho_z a(. - z)`` and
``m = 1 + (|xi| - 1) rho_z``, and

    <g * J, J> = S + 2 rho_z sum_u a_u (g * rho)(z + u)
                 + rho_z^2 sum_{u,v} a_u a_v g(u - v).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .config import numerics_setting
from .errors import InvalidParameterError
from .kernel import BetaTable, KernelAtom, KernelDistribution, beta_matrix
from .lattice import (
    MassField,
    Site,
    SparseField,
    add_sites,
    origin,
    quadratic_form,
    sub_sites,
)
from .theory import transition_p

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DriftBreakdown:
    drift: float
    u_term: float
    v_term: float
    w_term: float
    lower_bound_lhs: float
    lower_bound_rhs: float
    overlap: float
    s_value: float
    extinction_mass: float = 0.0

    @property
    def slack(self) -> float:
        """Return ``lower_bound_lhs - lower_bound_rhs``."""

        return self.lower_bound_lhs - self.lower_bound_rhs

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DriftConstants:
    c1: float
    c2: float


@dataclass(frozen=True)
class DriftAudit:
    constants: DriftConstants
    records: tuple[DriftBreakdown, ...]
    violations: int
    skipped: int = 0

    @property
    def subsampled(self) -> bool:
        return self.skipped > 0

    @property
    def worst_margin(self) -> float:
        """Return ``min(drift - c1 R + c2 R^{3/2})`` over the audited records."""

        return min(
            (
                r.drift - self.constants.c1 * r.overlap
                + self.constants.c2 * r.overlap**1.5
                for r in self.records
            ),
            default=math.inf,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "c1": self.constants.c1,
            "c2": self.constants.c2,
            "violations": self.violations,
            "skipped": self.skipped,
            "subsampled": self.subsampled,
            "audited": len(self.records),
            "worst_margin": self.worst_margin if self.records else None,
            "records": [r.to_dict() for r in self.records],
        }


@dataclass(frozen=True)
class FBoundReport:
    max_abs_f: float
    bound_all: float
    small_density_constant: float
    max_small_ratio: float

    @property
    def holds(self) -> bool:
        return (
            self.max_abs_f <= self.bound_all * (1 + 1e-12) + 1e-12
            and self.max_small_ratio
            <= self.small_density_constant * (1 + 1e-12) + 1e-12
        )


def overlap_functional_S(rho: SparseField, g: SparseField) -> float:
    """Return ``<g * rho, rho>``."""

    return quadratic_form(g, rho)


def _increment(atom: KernelAtom) -> list[tuple[Site, float]]:
    return list(atom.increment().items())


def _pair_energy(inc: Sequence[tuple[Site, float]], g: SparseField) -> float:
    return math.fsum(
        au * av * g[sub_sites(u, v)] for u, au in inc for v, av in inc
    )


def _g_rho(
    g: SparseField, rho: SparseField, sites: Iterable[Site]
) -> dict[Site, float]:
    items = list(rho.items())
    return {
        w: math.fsum(g[sub_sites(w, y)] * ry for y, ry in items) for w in set(sites)
    }


def _site_terms(
    rho: SparseField, dist: KernelDistribution, g: SparseField
) -> tuple[float, float, list[tuple[float, float, float, float, float]]]:
    """Return ``S``, ``R`` and per (atom, site) ``(q, s, rho_z, Q_z - S, m)``."""

    increments = [_increment(atom) for atom in dist.atoms]
    needed = set(rho.support())
    for inc in increments:
        for z in rho:
            needed.update(add_sites(z, u) for u, _ in inc)
    conv = _g_rho(g, rho, needed)
    s_value = math.fsum(rz * conv[z] for z, rz in rho.items())
    overlap = rho.sum_squares()
    terms = []
    for atom, inc in zip(dist.atoms, increments):
        energy = _pair_energy(inc, g)
        size = atom.size
        for z, rz in rho.items():
            cross = math.fsum(au * conv[add_sites(z, u)] for u, au in inc)
            delta = 2.0 * rz * cross + rz * rz * energy
            m = 1.0 + (size - 1.0) * rz
            terms.append((atom.prob, size, rz, delta, m))
    return s_value, overlap, terms


def exact_drift(
    rho: SparseField, dist: KernelDistribution, g: SparseField
) -> DriftBreakdown:
    """Return the exact drift of ``S`` at ``rho`` and its decomposition.

    Atoms with ``m <= 0`` (extinction of a single-site density) are left
    out of ``drift`` and their total rate is reported as ``extinction_mass``;
    ``u_term``, ``v_term`` and ``w_term`` run over every atom.
    """

    if rho.d != dist.d or g.d != dist.d:
        raise InvalidParameterError("rho, g and the kernel must share a dimension")
    s_value, overlap, terms = _site_terms(rho, dist, g)
    drift, u_parts, v_parts, w_parts = [], [], [], []
    extinction = 0.0
    for q, size, rz, delta, m in terms:
        u_parts.append(q * delta)
        v_parts.append(q * (size - 1.0) * rz * delta)
        w_parts.append(q * (size - 1.0) * rz * s_value)
        if m > 0.0:
            drift.append(q * ((s_value + delta) / (m * m) - s_value))
        else:
            extinction += q
    u_term = math.fsum(u_parts)
    w_term = math.fsum(w_parts)
    k = dist.mean
    rate = k.total() - k[origin(dist.d)]
    beta_sum = beta_matrix(dist).contract(g)
    return DriftBreakdown(
        drift=math.fsum(drift),
        u_term=u_term,
        v_term=math.fsum(v_parts),
        w_term=w_term,
        lower_bound_lhs=u_term - 2.0 * w_term,
        lower_bound_rhs=(beta_sum - 2.0 * rate) * overlap,
        overlap=overlap,
        s_value=s_value,
        extinction_mass=extinction,
    )


def _smoothed_form(g: SparseField, c: SparseField, rho: SparseField) -> float:
    """Return ``<g * c * rho, rho>`` evaluating ``g * c`` only where it is needed."""

    offsets = {sub_sites(x, z) for x in rho for z in rho}
    kernel = {
        u: math.fsum(cy * g[sub_sites(u, y)] for y, cy in c.items()) for u in offsets
    }
    return math.fsum(
        rx * rz * kernel[sub_sites(x, z)]
        for x, rx in rho.items()
        for z, rz in rho.items()
    )


def u_term_identity(
    rho: SparseField,
    dist: KernelDistribution,
    g: SparseField,
    *,
    beta: BetaTable | None = None,
) -> float:
    """Return ``<g*(k-d0)*rho, rho> + <g*(k^-d0)*rho, rho> + sum g beta * R``."""

    centred = dist.mean.add(SparseField.delta(dist.d), factor=-1.0)
    left = _smoothed_form(g, centred, rho)
    right = _smoothed_form(g, centred.reflect(), rho)
    beta = beta if beta is not None else beta_matrix(dist)
    return left + right + beta.contract(g) * rho.sum_squares()


def w_term_identity(
    rho: SparseField, dist: KernelDistribution, g: SparseField
) -> float:
    """Return ``(|k| - 1) <g * rho, rho>``."""

    return (dist.k_norm - 1.0) * overlap_functional_S(rho, g)


def _atom_spread(atom: KernelAtom) -> tuple[float, float]:
    a1 = atom.increment().abs_total()
    return a1, atom.size - 1.0


def v_term_constant(dist: KernelDistribution, g: SparseField) -> float:
    """Return ``c`` with ``|v_term| <= c R^{3/2}``.

    ``c = |g| E[ ||xi| - 1| (2 |xi - delta_0|_1 + |xi - delta_0|_1^2) ]``.
    """

    g_mass = g.abs_total()
    return g_mass * math.fsum(
        atom.prob * abs(s1) * (2.0 * a1 + a1 * a1)
        for atom in dist.atoms
        for a1, s1 in [_atom_spread(atom)]
    )


def drift_positivity_witness(
    dist: KernelDistribution, g: SparseField
) -> DriftConstants:
    """Return ``c1 = sum g beta - 2(|k| - k_0)`` and ``c2 = 2 v_term_constant``.

    With ``g = g_n`` the drift is at least ``c1 R - c2 R^{3/2}``.
    """

    rate = transition_p(dist.mean).jump_rate
    c1 = beta_matrix(dist).contract(g) - 2.0 * rate
    if c1 <= 0.0:
        raise InvalidParameterError(
            f"g does not witness a positive drift: c1 = {c1:.6g}"
        )
    return DriftConstants(c1=c1, c2=2.0 * v_term_constant(dist, g))


def audit_drift(
    dist: KernelDistribution,
    g: SparseField,
    configs: Iterable[SparseField],
    *,
    site_limit: int | None = None,
    constants: DriftConstants | None = None,
) -> DriftAudit:
    """Check ``drift >= c1 R - c2 R^{3/2}`` on sampled densities.

    Densities with more than ``site_limit`` sites are skipped and counted.
    """

    if site_limit is None:
        site_limit = int(numerics_setting("analysis", "audit_site_limit"))
    constants = constants or drift_positivity_witness(dist, g)
    records = []
    violations = 0
    skipped = 0
    for rho in configs:
        if len(rho) == 0:
            continue
        if len(rho) > site_limit:
            skipped += 1
            continue
        record = exact_drift(rho, dist, g)
        bound = constants.c1 * record.overlap - constants.c2 * record.overlap**1.5
        if record.drift < bound - 1e-12 * max(1.0, abs(bound)):
            violations += 1
        records.append(record)
    if skipped:
        logger.warning(
            "drift audit skipped %d densities above %d sites", skipped, site_limit
        )
    return DriftAudit(
        constants=constants,
        records=tuple(records),
        violations=violations,
        skipped=skipped,
    )


def f_bound_check(
    rho: SparseField, dist: KernelDistribution, g: SparseField
) -> FBoundReport:
    """Evaluate ``F_z(xi) = <g * J/m, J/m> - S`` for every atom and site.

    Returns the largest ``|F|``, the bound ``2|g|``, the constant
    ``c_F = 4 max g max_xi(2|a|_1 + |a|_1^2 + 2||xi|-1| + (|xi|-1)^2)`` and the
    largest ``|F| / rho_z`` over sites with ``rho_z <= 1/2``.
    """

    s_value, _, terms = _site_terms(rho, dist, g)
    worst = 0.0
    worst_ratio = 0.0
    for _, _, rz, delta, m in terms:
        if m <= 0.0:
            continue
        value = abs((s_value + delta) / (m * m) - s_value)
        worst = max(worst, value)
        if rz <= 0.5:
            worst_ratio = max(worst_ratio, value / rz)
    spread = max(
        2.0 * a1 + a1 * a1 + 2.0 * abs(s1) + s1 * s1
        for a1, s1 in (_atom_spread(atom) for atom in dist.atoms)
    )
    return FBoundReport(
        max_abs_f=worst,
        bound_all=2.0 * g.abs_total(),
        small_density_constant=4.0 * g.max_value() * spread,
        max_small_ratio=worst_ratio,
    )


def hausdorff_young_check(f: SparseField, h: SparseField) -> tuple[float, float]:
    """Return ``(||f * h||_2, ||f||_1 ||h||_2)``."""

    lhs = math.sqrt(f.convolve(h).sum_squares())
    rhs = f.abs_total() * math.sqrt(h.sum_squares())
    if lhs > rhs * (1 + 1e-12) + 1e-300:
        logger.error("Hausdorff-Young violated: %.17g > %.17g", lhs, rhs)
    return lhs, rhs


def random_density(
    rng: np.random.Generator, d: int, sites: int, radius: int
) -> MassField:
    """Return a random normalised density on ``sites`` points of a box."""

    chosen: dict[Site, float] = {}
    while len(chosen) < sites:
        site = tuple(int(c) for c in rng.integers(-radius, radius + 1, size=d))
        chosen[site] = float(rng.random()) + 1e-3
    total = math.fsum(chosen.values())
    return MassField(d, {s: v / total for s, v in chosen.items()})


__all__ = [
    "DriftBreakdown",
    "DriftConstants",
    "DriftAudit",
    "FBoundReport",
    "overlap_functional_S",
    "exact_drift",
    "u_term_identity",
    "w_term_identity",
    "v_term_constant",
    "drift_positivity_witness",
    "audit_drift",
    "f_bound_check",
    "hausdorff_young_check",
    "random_density",
]
