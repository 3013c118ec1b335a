"""Event-driven simulation of linear systems started from a single particle.

The state is kept as unnormalised weights ``w`` with a tracked total ``W``,
a tracked ``sum w**2`` and a log offset, so that ``rho = w / W`` and
``ln|eta| = log_offset + ln W``. Every ``renormalize_every`` events the
totals are recomputed from the weights and the weights are rescaled to total
one, which keeps them far from overflow and underflow.

Only active sites carry clocks in the primal simulator: an update at a site
with zero mass leaves the configuration unchanged. The dual simulator keeps
the halo of occupied sites as its event set instead, since a dual update at
an empty site can create mass.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import numerics_setting
from .errors import InvalidParameterError, InvalidStateError
from .kernel import KernelDistribution, sample_index
from .lattice import MassField, Site, add_sites, as_site, neg_site, origin
from .seeds import site_seed

logger = logging.getLogger(__name__)

STOP_HORIZON = "horizon"
STOP_EXTINCTION = "extinction"
STOP_MAX_EVENTS = "max_events"


@dataclass(frozen=True)
class EventRecord:
    time: float
    site: Site
    atom_index: int
    mass_ratio: float


@dataclass(frozen=True)
class Observables:
    """Sampled observables; ``log_mass`` is ``-inf`` after extinction."""

    time: float
    rho_star: float
    overlap: float
    active_sites: int
    log_mass: float
    log_normalized_mass: float
    integrated_overlap: float
    integrated_overlap_32: float = 0.0
    time_above: float = 0.0

    @property
    def normalized_mass(self) -> float:
        """Return ``e^{-(|k|-1)t} |eta_t|`` (zero after extinction)."""

        return math.exp(self.log_normalized_mass)


@dataclass(frozen=True)
class TrajectoryRecord:
    rows: tuple[Observables, ...]
    final: Observables
    survived: bool
    seed: int
    stop_reason: str = STOP_HORIZON
    events: int = 0
    pruned: bool = False
    snapshots: tuple[tuple[float, MassField], ...] = ()


class _WeightedState:
    """Sparse nonnegative weights with O(1) uniform site selection."""

    def __init__(self, d: int, *, time_above_level: float | None = None) -> None:
        if d < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {d}")
        self.d = d
        self.weights: dict[Site, float] = {}
        self.sites: list[Site] = []
        self._index: dict[Site, int] = {}
        self.total = 0.0
        self.square_total = 0.0
        self.log_offset = 0.0
        self.time = 0.0
        self.extinct = False
        self.pruned = False
        self.integrated_overlap = 0.0
        self.integrated_overlap_32 = 0.0
        self.time_above = 0.0
        self.time_above_level = (
            float(numerics_setting("engine", "time_above_level"))
            if time_above_level is None
            else float(time_above_level)
        )
        self._set_weight(origin(d), 1.0)

    # -- weight bookkeeping -------------------------------------------------
    def _insert_site(self, site: Site) -> None:
        self._index[site] = len(self.sites)
        self.sites.append(site)
        self._on_occupied(site)

    def _remove_site(self, site: Site) -> None:
        position = self._index.pop(site)
        last = self.sites.pop()
        if last != site:
            self.sites[position] = last
            self._index[last] = position
        self._on_vacated(site)

    def _on_occupied(self, site: Site) -> None:
        pass

    def _on_vacated(self, site: Site) -> None:
        pass

    def _set_weight(self, site: Site, value: float) -> None:
        old = self.weights.get(site, 0.0)
        if value == 0.0:
            if old != 0.0:
                del self.weights[site]
                self._remove_site(site)
        else:
            if old == 0.0:
                self.weights[site] = value
                self._insert_site(site)
            else:
                self.weights[site] = value
        self.total += value - old
        self.square_total += value * value - old * old

    def _mark_extinct(self) -> None:
        self.extinct = True
        self.total = 0.0
        self.square_total = 0.0

    def renormalize(self, prune_threshold: float | None = None) -> None:
        """Recompute totals exactly and rescale the weights to total one."""

        if self.extinct:
            return
        total = math.fsum(self.weights.values())
        if prune_threshold:
            heaviest = max(self.weights, key=self.weights.__getitem__)
            doomed = [
                s
                for s, w in self.weights.items()
                if w < prune_threshold * total and s != heaviest
            ]
            for site in doomed:
                del self.weights[site]
                self._remove_site(site)
            if doomed:
                if not self.pruned:
                    logger.warning(
                        "pruning densities below %g changes the law of the process",
                        prune_threshold,
                    )
                self.pruned = True
                total = math.fsum(self.weights.values())
        self.log_offset += math.log(total)
        for site in self.weights:
            self.weights[site] /= total
        self.total = math.fsum(self.weights.values())
        self.square_total = math.fsum(w * w for w in self.weights.values())

    # -- normalised view ----------------------------------------------------
    @property
    def rho(self) -> MassField:
        if self.extinct:
            return MassField.zero(self.d)
        total = self.total
        return MassField(self.d, {s: w / total for s, w in self.weights.items()})

    @property
    def log_mass(self) -> float:
        if self.extinct:
            return -math.inf
        return self.log_offset + math.log(self.total)

    @property
    def active_sites(self) -> int:
        return len(self.sites)

    def current_overlap(self) -> float:
        """Return ``R`` from the tracked totals (cheap, used for time integrals)."""

        if self.extinct:
            return 0.0
        return min(1.0, self.square_total / (self.total * self.total))

    def advance_to(self, time: float) -> None:
        """Move the clock to ``time``, integrating the (constant) overlap exactly."""

        dt = time - self.time
        if dt < 0:
            raise InvalidParameterError(f"cannot move time backwards to {time}")
        if dt > 0 and not self.extinct:
            overlap = self.current_overlap()
            self.integrated_overlap += overlap * dt
            self.integrated_overlap_32 += overlap * math.sqrt(overlap) * dt
            if overlap >= self.time_above_level:
                self.time_above += dt
        self.time = time


class Configuration(_WeightedState):
    """State of the primal process: ``rho``, ``ln|eta|``, time and extinction."""


class DualConfiguration(_WeightedState):
    """State of the dual process together with its event halo."""

    def __init__(
        self,
        d: int,
        halo_offsets: Iterable[Site],
        *,
        time_above_level: float | None = None,
    ) -> None:
        self.halo_offsets = tuple(sorted(set(halo_offsets) | {origin(d)}))
        self.halo: list[Site] = []
        self._halo_index: dict[Site, int] = {}
        self._halo_count: dict[Site, int] = {}
        super().__init__(d, time_above_level=time_above_level)

    def _on_occupied(self, site: Site) -> None:
        for h in self.halo_offsets:
            z = add_sites(site, h)
            count = self._halo_count.get(z, 0)
            self._halo_count[z] = count + 1
            if count == 0:
                self._halo_index[z] = len(self.halo)
                self.halo.append(z)

    def _on_vacated(self, site: Site) -> None:
        for h in self.halo_offsets:
            z = add_sites(site, h)
            count = self._halo_count[z] - 1
            if count:
                self._halo_count[z] = count
                continue
            del self._halo_count[z]
            position = self._halo_index.pop(z)
            last = self.halo.pop()
            if last != z:
                self.halo[position] = last
                self._halo_index[last] = position


def dual_halo_offsets(dist: KernelDistribution) -> set[Site]:
    """Return ``{0} U {-u : u in supp xi for some atom}``."""

    offsets = {origin(dist.d)}
    for atom in dist.atoms:
        offsets.update(neg_site(u) for u in atom.vector)
    return offsets


def init_config(d: int, *, time_above_level: float | None = None) -> Configuration:
    """Return the configuration ``delta_0`` at time zero."""

    return Configuration(d, time_above_level=time_above_level)


def init_dual_config(
    dist: KernelDistribution, *, time_above_level: float | None = None
) -> DualConfiguration:
    return DualConfiguration(
        dist.d, dual_halo_offsets(dist), time_above_level=time_above_level
    )


def observables(config: _WeightedState, k_norm: float) -> Observables:
    """Return ``rho*``, ``R`` and the mass observables of ``config``.

    ``R`` is recomputed from the weights and clipped into
    ``[rho*^2, rho*]`` so the ordering holds at floating-point level.
    """

    if config.extinct:
        return Observables(
            time=config.time,
            rho_star=0.0,
            overlap=0.0,
            active_sites=0,
            log_mass=-math.inf,
            log_normalized_mass=-math.inf,
            integrated_overlap=config.integrated_overlap,
            integrated_overlap_32=config.integrated_overlap_32,
            time_above=config.time_above,
        )
    total = math.fsum(config.weights.values())
    densities = [w / total for w in config.weights.values()]
    rho_star = max(densities)
    overlap = math.fsum(r * r for r in densities)
    overlap = min(max(overlap, rho_star * rho_star), rho_star)
    log_mass = config.log_offset + math.log(total)
    return Observables(
        time=config.time,
        rho_star=rho_star,
        overlap=overlap,
        active_sites=len(config.sites),
        log_mass=log_mass,
        log_normalized_mass=log_mass - (k_norm - 1.0) * config.time,
        integrated_overlap=config.integrated_overlap,
        integrated_overlap_32=config.integrated_overlap_32,
        time_above=config.time_above,
    )


def apply_event(
    config: Configuration, dist: KernelDistribution, z: Site, atom_index: int
) -> EventRecord:
    """Apply atom ``atom_index`` at site ``z`` (the clock is not moved).

    ``w'_z = xi_0 w_z`` and ``w'_x = w_x + xi_{x-z} w_z`` for ``x != z``.
    """

    if config.extinct:
        raise InvalidStateError("cannot step an extinct configuration")
    atom = dist.atoms[atom_index]
    w_z = config.weights.get(z, 0.0)
    if w_z == 0.0:
        return EventRecord(config.time, z, atom_index, 1.0)
    ratio = 1.0 + (atom.size - 1.0) * w_z / config.total
    zero = origin(config.d)
    for u, value in atom.vector.items():
        if u == zero:
            continue
        x = add_sites(z, u)
        config._set_weight(x, config.weights.get(x, 0.0) + value * w_z)
    config._set_weight(z, atom.vector[zero] * w_z)
    if not config.sites:
        config._mark_extinct()
        ratio = 0.0
    return EventRecord(config.time, z, atom_index, ratio)


def apply_dual_event(
    config: DualConfiguration, dist: KernelDistribution, z: Site, atom_index: int
) -> EventRecord:
    """Apply the transposed update ``zeta'_z = sum_u xi_u zeta_{z+u}`` at ``z``."""

    if config.extinct:
        raise InvalidStateError("cannot step an extinct configuration")
    atom = dist.atoms[atom_index]
    value = math.fsum(
        xi * config.weights.get(add_sites(z, u), 0.0) for u, xi in atom.vector.items()
    )
    old = config.weights.get(z, 0.0)
    ratio = 1.0 + (value - old) / config.total
    config._set_weight(z, value)
    if not config.sites:
        config._mark_extinct()
        ratio = 0.0
    return EventRecord(config.time, z, atom_index, max(ratio, 0.0))


def _draw(
    event_sites: Sequence[Site], dist: KernelDistribution, rng: np.random.Generator
) -> tuple[float, Site, int]:
    rate = len(event_sites)
    dt = float(rng.exponential(1.0 / rate))
    z = event_sites[int(rng.integers(rate))]
    return dt, z, sample_index(dist, rng)


def step(
    config: Configuration, dist: KernelDistribution, rng: np.random.Generator
) -> EventRecord:
    """Advance to the next event of the primal process and apply it."""

    if config.extinct:
        raise InvalidStateError("cannot step an extinct configuration")
    dt, z, index = _draw(config.sites, dist, rng)
    config.advance_to(config.time + dt)
    return apply_event(config, dist, z, index)


def apply_dual_step(
    config: DualConfiguration, dist: KernelDistribution, rng: np.random.Generator
) -> EventRecord:
    """Advance to the next event of the dual process and apply it."""

    if config.extinct:
        raise InvalidStateError("cannot step an extinct configuration")
    dt, z, index = _draw(config.halo, dist, rng)
    config.advance_to(config.time + dt)
    return apply_dual_event(config, dist, z, index)


def _check_schedule(t_max: float, sample_times: Sequence[float]) -> list[float]:
    if t_max < 0 or not math.isfinite(t_max):
        raise InvalidParameterError(f"t_max must be finite and >= 0, got {t_max}")
    times = [float(t) for t in sample_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise InvalidParameterError("sample times must be sorted")
    if times and (times[0] < 0 or times[-1] > t_max):
        raise InvalidParameterError(f"sample times must lie in [0, {t_max}]")
    return times


def _simulate(
    config: _WeightedState,
    dist: KernelDistribution,
    events_for,
    apply,
    *,
    t_max: float,
    sample_times: Sequence[float],
    seed: int,
    max_events: int | None,
    prune_threshold: float | None,
    renormalize_every: int | None,
    snapshots: bool,
) -> TrajectoryRecord:
    times = _check_schedule(t_max, sample_times)
    every = (
        int(numerics_setting("engine", "renormalize_every"))
        if renormalize_every is None
        else int(renormalize_every)
    )
    rng = np.random.default_rng(seed)
    k_norm = dist.k_norm
    rows: list[Observables] = []
    shots: list[tuple[float, MassField]] = []
    pending = 0
    events = 0
    stop_reason = STOP_HORIZON

    def emit_until(limit: float, inclusive: bool) -> None:
        nonlocal pending
        while pending < len(times) and (
            times[pending] < limit or (inclusive and times[pending] == limit)
        ):
            config.advance_to(times[pending])
            rows.append(observables(config, k_norm))
            if snapshots:
                shots.append((times[pending], config.rho))
            pending += 1

    while True:
        if config.extinct:
            stop_reason = STOP_EXTINCTION
            emit_until(t_max, inclusive=True)
            config.advance_to(max(config.time, t_max))
            break
        dt, z, index = _draw(events_for(config), dist, rng)
        next_time = config.time + dt
        if next_time > t_max:
            emit_until(t_max, inclusive=True)
            config.advance_to(t_max)
            break
        emit_until(next_time, inclusive=False)
        if max_events is not None and events >= max_events:
            stop_reason = STOP_MAX_EVENTS
            logger.warning(
                "run with seed %d truncated after %d events at t=%.6g",
                seed,
                events,
                config.time,
            )
            break
        config.advance_to(next_time)
        apply(config, dist, z, index)
        events += 1
        if events % every == 0:
            config.renormalize(prune_threshold)

    final = observables(config, k_norm)
    logger.debug(
        "seed %d stopped (%s) after %d events, log_mass=%.6g",
        seed,
        stop_reason,
        events,
        final.log_mass,
    )
    return TrajectoryRecord(
        rows=tuple(rows),
        final=final,
        survived=not config.extinct,
        seed=seed,
        stop_reason=stop_reason,
        events=events,
        pruned=config.pruned,
        snapshots=tuple(shots),
    )


def run(
    dist: KernelDistribution,
    t_max: float,
    sample_times: Sequence[float],
    seed: int,
    *,
    max_events: int | None = None,
    prune_threshold: float | None = None,
    renormalize_every: int | None = None,
    snapshots: bool = False,
    time_above_level: float | None = None,
) -> TrajectoryRecord:
    """Simulate the primal process from ``delta_0`` up to ``t_max``.

    Rows are emitted at ``sample_times`` from the configuration in force at
    that instant. After extinction the remaining rows are still emitted (with
    zero overlap and ``-inf`` log-mass); truncation by ``max_events`` stops
    the emission.
    """

    return _simulate(
        init_config(dist.d, time_above_level=time_above_level),
        dist,
        lambda config: config.sites,
        apply_event,
        t_max=t_max,
        sample_times=sample_times,
        seed=seed,
        max_events=max_events,
        prune_threshold=prune_threshold,
        renormalize_every=renormalize_every,
        snapshots=snapshots,
    )


def run_dual(
    dist: KernelDistribution,
    t_max: float,
    sample_times: Sequence[float],
    seed: int,
    *,
    max_events: int | None = None,
    renormalize_every: int | None = None,
    snapshots: bool = False,
    time_above_level: float | None = None,
) -> TrajectoryRecord:
    """Simulate the dual (transposed) process from ``delta_0``."""

    return _simulate(
        init_dual_config(dist, time_above_level=time_above_level),
        dist,
        lambda config: config.halo,
        apply_dual_event,
        t_max=t_max,
        sample_times=sample_times,
        seed=seed,
        max_events=max_events,
        prune_threshold=None,
        renormalize_every=renormalize_every,
        snapshots=snapshots,
    )


@dataclass
class _SiteClock:
    rng: np.random.Generator
    next_time: float
    queued: bool = False


@dataclass
class ClockedSimulator:
    """Reference simulator driven by independent per-site Poisson clocks.

    Every site owns a random stream seeded from ``(seed, site)``; each ring
    consumes one mark (an atom index) followed by one exponential gap. With
    ``sites`` given, clocks run on that fixed set and rings at empty sites are
    identities; with ``sites=None`` only active sites are scheduled and a
    newly activated site first skips the rings it slept through. Both modes
    read the same per-site streams, so they produce the same trajectory.
    """

    dist: KernelDistribution
    seed: int
    sites: Iterable[Sequence[int]] | None = None
    renormalize_every: int | None = None
    _clocks: dict[Site, _SiteClock] = field(default_factory=dict, init=False)

    def _clock(self, site: Site) -> _SiteClock:
        clock = self._clocks.get(site)
        if clock is None:
            rng = np.random.default_rng(site_seed(self.seed, site))
            clock = _SiteClock(rng, float(rng.exponential(1.0)))
            self._clocks[site] = clock
        return clock

    def _ring(self, clock: _SiteClock) -> int:
        mark = sample_index(self.dist, clock.rng)
        clock.next_time += float(clock.rng.exponential(1.0))
        return mark

    def run(self, t_max: float, sample_times: Sequence[float]) -> TrajectoryRecord:
        times = _check_schedule(t_max, sample_times)
        every = (
            int(numerics_setting("engine", "renormalize_every"))
            if self.renormalize_every is None
            else int(self.renormalize_every)
        )
        fixed = None
        if self.sites is not None:
            fixed = {as_site(s, self.dist.d) for s in self.sites}
        config = init_config(self.dist.d)
        if fixed is not None and origin(self.dist.d) not in fixed:
            raise InvalidParameterError("fixed clock set must contain the origin")
        k_norm = self.dist.k_norm
        heap: list[tuple[float, Site]] = []

        def schedule(site: Site) -> None:
            clock = self._clock(site)
            while clock.next_time < config.time:
                self._ring(clock)
            if not clock.queued:
                clock.queued = True
                heapq.heappush(heap, (clock.next_time, site))

        for site in sorted(fixed) if fixed is not None else list(config.sites):
            schedule(site)

        rows: list[Observables] = []
        pending = 0
        events = 0
        while heap:
            next_time, site = heapq.heappop(heap)
            clock = self._clocks[site]
            clock.queued = False
            if config.extinct or next_time > t_max:
                break
            active = site in config.weights
            if fixed is None and not active:
                continue
            while pending < len(times) and times[pending] < next_time:
                config.advance_to(times[pending])
                rows.append(observables(config, k_norm))
                pending += 1
            mark = self._ring(clock)
            if active:
                config.advance_to(next_time)
                reach = [add_sites(site, u) for u in self.dist.atoms[mark].vector]
                fresh = [s for s in reach if s not in config.weights]
                apply_event(config, self.dist, site, mark)
                events += 1
                if events % every == 0:
                    config.renormalize()
                born = [s for s in fresh if s in config.weights]
                if fixed is not None and any(s not in fixed for s in born):
                    raise InvalidStateError(
                        "fixed clock set is too small for this trajectory"
                    )
                if fixed is None:
                    for s in born:
                        schedule(s)
            clock.queued = True
            heapq.heappush(heap, (clock.next_time, site))
        while pending < len(times):
            config.advance_to(times[pending])
            rows.append(observables(config, k_norm))
            pending += 1
        config.advance_to(max(config.time, t_max))
        return TrajectoryRecord(
            rows=tuple(rows),
            final=observables(config, k_norm),
            survived=not config.extinct,
            seed=self.seed,
            stop_reason=STOP_EXTINCTION if config.extinct else STOP_HORIZON,
            events=events,
        )


__all__ = [
    "Configuration",
    "DualConfiguration",
    "EventRecord",
    "Observables",
    "TrajectoryRecord",
    "ClockedSimulator",
    "init_config",
    "init_dual_config",
    "dual_halo_offsets",
    "observables",
    "apply_event",
    "apply_dual_event",
    "step",
    "apply_dual_step",
    "run",
    "run_dual",
]
