"""Green functions, return probabilities and phase classification.

The symmetrised jump law of a kernel with mean ``k`` is

    p(x) = (k_x + k_{-x}) / (2 (|k| - k_0))   for x != 0,   p(0) = 0,

and the continuous-time walk with generator ``L_S`` jumps at total rate
``|k| - k_0`` according to ``p``. Its Green function is therefore
``G = G_p / (|k| - k_0)`` where ``G_p = sum_n p_n`` is the Green function of
the discrete walk. ``G_p`` is computed either by the pyramid quadrature of
:mod:`lingrowth.fourier` or by exact partial sums with an asymptotic tail.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import fft, special

from .config import numerics_setting
from .errors import (
    ConditionNotSatisfiedError,
    DegenerateKernelError,
    DivergentGreenFunctionError,
    InvalidParameterError,
)
from .fourier import lattice_green_integral, lattice_index
from .kernel import (
    BetaTable,
    KernelDistribution,
    beta_matrix,
    log_moment_margin,
    second_moment_total,
)
from .lattice import (
    MassField,
    Site,
    SparseField,
    add_sites,
    ball,
    from_dense,
    neg_site,
    origin,
    sub_sites,
    unit_vectors,
)

logger = logging.getLogger(__name__)

SLOW_GROWTH = "slow_growth_certified"
LOCALIZATION = "localization_condition_holds"
REGULAR_GROWTH = "regular_growth_sufficient"
INCONCLUSIVE = "inconclusive"
METHODS = ("series", "fourier")

# closed form of the simple random walk Green function at the origin in d = 3
_WATSON_PREFACTOR = math.sqrt(6.0) / (32.0 * math.pi**3)


@dataclass(frozen=True)
class JumpLaw:
    """Symmetric jump law ``p`` and the total jump rate ``|k| - k_0``."""

    d: int
    probs: MassField
    jump_rate: float = 1.0

    @property
    def range(self) -> int:
        return self.probs.radius()


@dataclass(frozen=True)
class PhaseReport:
    k_norm: float
    k0: float
    log_moment_margin: float
    classification: str
    d: int
    loc_statistic: float | None = None
    witness_n: int | None = None
    pi_d: float | None = None
    g0: float | None = None
    threshold: float | None = None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "d": self.d,
            "k_norm": self.k_norm,
            "k0": self.k0,
            "log_moment_margin": self.log_moment_margin,
            "classification": self.classification,
        }
        for key in ("loc_statistic", "witness_n", "pi_d", "g0", "threshold"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        if self.notes:
            data["notes"] = list(self.notes)
        return data


@dataclass(frozen=True)
class HarmonicReport:
    """``h = 1 + c G`` on a window and the residual of its defining equation."""

    h: MassField
    c: float
    statistic: float
    max_residual: float
    residuals: SparseField = field(repr=False)
    window_radius: int = 0


# -- jump law -----------------------------------------------------------------


def transition_p(k: SparseField) -> JumpLaw:
    """Return the symmetrised jump law of the mean kernel ``k``."""

    zero = origin(k.d)
    rate = k.total() - k[zero]
    if rate <= 1e-15 * max(1.0, k.total()):
        raise DegenerateKernelError("|k| equals k_0: the symmetrised walk never jumps")
    entries: dict[Site, float] = {}
    for site, value in k.items():
        if site == zero:
            continue
        share = value / (2.0 * rate)
        entries[site] = entries.get(site, 0.0) + share
        mirror = neg_site(site)
        entries[mirror] = entries.get(mirror, 0.0) + share
    return JumpLaw(k.d, MassField(k.d, entries), rate)


def srw_jump_law(d: int) -> JumpLaw:
    return JumpLaw(d, MassField(d, {e: 1.0 / (2 * d) for e in unit_vectors(d)}), 1.0)


def walk_covariance(p: JumpLaw) -> np.ndarray:
    """Return the one-step covariance ``sum_x p(x) x x^T``."""

    cov = np.zeros((p.d, p.d))
    for site, prob in p.probs.items():
        v = np.asarray(site, dtype=float)
        cov += prob * np.outer(v, v)
    return cov


# -- dense walk arithmetic ----------------------------------------------------


class _DenseWalk:
    """Repeated convolution with ``p`` on the box ``[-R, R]^d``.

    Only the sub-box reached so far is touched; mass pushed outside the box
    is dropped and accounted for in :attr:`lost`.
    """

    def __init__(self, p: JumpLaw, box_radius: int) -> None:
        self.d = p.d
        self.radius = box_radius
        self.reach = p.range
        self.offsets = list(p.probs.entries)
        self.weights = list(p.probs.entries.values())
        self.current = np.zeros((2 * box_radius + 1,) * p.d)
        self.current[(box_radius,) * p.d] = 1.0
        self.cur_radius = 0
        self.lost = 0.0

    def _box(self, radius: int) -> tuple[slice, ...]:
        span = slice(self.radius - radius, self.radius + radius + 1)
        return (span,) * self.d

    def advance(self) -> np.ndarray:
        R, cur = self.radius, self.cur_radius
        src = self.current[self._box(cur)]
        out = np.zeros_like(self.current)
        size = 2 * R + 1
        for off, weight in zip(self.offsets, self.weights):
            dst_index, src_index = [], []
            for o in off:
                lo = R - cur + o
                hi = lo + 2 * cur + 1
                clo, chi = max(lo, 0), min(hi, size)
                if clo >= chi:
                    break
                dst_index.append(slice(clo, chi))
                src_index.append(slice(clo - lo, chi - lo))
            else:
                out[tuple(dst_index)] += weight * src[tuple(src_index)]
        before = float(src.sum())
        self.current = out
        self.cur_radius = min(cur + self.reach, R)
        self.lost += before - float(out[self._box(self.cur_radius)].sum())
        return out

    def value(self, arr: np.ndarray, site: Site) -> float:
        if any(abs(c) > self.radius for c in site):
            return 0.0
        return float(arr[tuple(c + self.radius for c in site)])


def g_n(p: JumpLaw, n: int) -> MassField:
    """Return ``g_n = delta_0 + sum_{m=1}^n p_m``."""

    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    radius = max(1, n * max(1, p.range))
    walk = _DenseWalk(p, radius)
    acc = walk.current.copy()
    for _ in range(n):
        acc += walk.advance()
    return from_dense(acc, mass=True)


def p_power(p: JumpLaw, n: int) -> MassField:
    """Return the ``n``-step law ``p_n``."""

    radius = max(1, n * max(1, p.range))
    walk = _DenseWalk(p, radius)
    arr = walk.current
    for _ in range(n):
        arr = walk.advance()
    return from_dense(arr, mass=True)


# -- Green functions ----------------------------------------------------------


def _series_partial_sums(
    p: JumpLaw, sites: Sequence[Site], ladder: Sequence[int], box_sigmas: float
) -> np.ndarray:
    """Return ``S_n(x) = sum_{m<=n} p_m(x)`` for every ``n`` in ``ladder``.

    The sums are computed on a periodic box with one FFT per ``n``; the box
    is wide enough that wrapped mass is below double precision.
    """

    d = p.d
    cov = walk_covariance(p)
    n_max = max(ladder)
    extent = [max(abs(s[i]) for s in sites) if sites else 0 for i in range(d)]
    shape = []
    for i in range(d):
        spread = box_sigmas * math.sqrt(cov[i, i] * n_max)
        width = spread + 2 * extent[i] + 2 * p.range + 2
        shape.append(fft.next_fast_len(int(math.ceil(width)), real=True))
    field_ = np.zeros(shape)
    for site, prob in p.probs.items():
        field_[tuple(c % n for c, n in zip(site, shape))] += prob
    symbol = fft.rfftn(field_).real
    gap = 1.0 - symbol
    results = np.empty((len(ladder), len(sites)))
    index = tuple(
        np.asarray([s[i] % shape[i] for s in sites], dtype=int) for i in range(d)
    )
    for row, n in enumerate(ladder):
        with np.errstate(divide="ignore", invalid="ignore"):
            positive = symbol > 0.0
            power = np.where(
                positive,
                -np.expm1((n + 1) * np.log(np.where(positive, symbol, 1.0))),
                1.0 - symbol ** (n + 1),
            )
            ratio = np.where(gap > 0.0, power / np.where(gap > 0.0, gap, 1.0), n + 1.0)
        partial = fft.irfftn(ratio, s=shape)
        results[row] = partial[index]
    return results


def _series_green(
    p: JumpLaw,
    sites: Sequence[Site],
    *,
    ladder: Sequence[int] | None = None,
    box_sigmas: float | None = None,
) -> np.ndarray:
    """Return ``G_p`` at ``sites`` from exact partial sums and a fitted tail.

    ``G_p - S_n`` has an expansion in half-odd powers of ``n``; its leading
    term follows from the local limit theorem and the next ones are fitted by
    least squares over a ladder of odd ``n``.
    """

    d = p.d
    ladder = list(ladder or numerics_setting("series", "ladder"))
    box_sigmas = float(box_sigmas or numerics_setting("series", "box_sigmas"))
    sums = _series_partial_sums(p, sites, ladder, box_sigmas)
    det = float(np.linalg.det(walk_covariance(p)))
    index = lattice_index(p.probs)
    lead = index * (2.0 / (d - 2)) * (2.0 * math.pi) ** (-d / 2) / math.sqrt(det)
    n = np.asarray(ladder, dtype=float)
    n0 = n[0]
    powers = [d / 2.0 + j for j in range(min(len(ladder) - 2, 4))]
    design = np.column_stack([np.ones_like(n)] + [(n / n0) ** (-a) for a in powers])
    values = np.empty(len(sites))
    for col in range(len(sites)):
        column = sums[:, col]
        if np.all(np.abs(column) < 1e-300):
            values[col] = 0.0
            continue
        target = column + lead * n ** (1.0 - d / 2.0)
        solution, *_ = np.linalg.lstsq(design, target, rcond=None)
        values[col] = solution[0]
    return values


def _walk_key(p: JumpLaw) -> tuple:
    return (p.d, tuple(sorted(p.probs.items())))


@lru_cache(maxsize=64)
def _green_p_cached(
    key: tuple, sites: tuple[Site, ...], method: str
) -> tuple[float, ...]:
    d, items = key
    walk = JumpLaw(d, MassField(d, dict(items)))
    # G_p(x) = G_p(-x); evaluate one representative of each pair
    reps: list[Site] = []
    seen: dict[Site, int] = {}
    for site in sites:
        if site in seen or neg_site(site) in seen:
            continue
        seen[site] = len(reps)
        reps.append(site)
    if method == "fourier":
        values = lattice_green_integral(walk.probs, reps)
    elif method == "series":
        values = _series_green(walk, reps)
    else:
        raise InvalidParameterError(f"unknown Green function method {method!r}")
    out = []
    for site in sites:
        position = seen.get(site)
        if position is None:
            position = seen[neg_site(site)]
        out.append(float(values[position]))
    return tuple(out)


def walk_green(
    p: JumpLaw, sites: Sequence[Site], method: str | None = None
) -> np.ndarray:
    """Return the discrete Green function ``G_p`` at ``sites``."""

    if p.d <= 2:
        raise DivergentGreenFunctionError(
            f"the Green function is infinite in dimension {p.d}"
        )
    method = method or str(numerics_setting("green", "default_method"))
    if method not in METHODS:
        raise InvalidParameterError(f"method must be one of {METHODS}, got {method!r}")
    if method == "fourier" and lattice_index(p.probs) != 1:
        logger.warning("walk support generates a sublattice; using the series method")
        method = "series"
    sites = tuple(tuple(s) for s in sites)
    return np.asarray(_green_p_cached(_walk_key(p), sites, method))


def green_function(
    k: SparseField, x: Sequence[int], method: str | None = None
) -> float:
    """Return ``G(x)``, the Green function of the walk generated by ``L_S``."""

    p = transition_p(k)
    return float(walk_green(p, [tuple(x)], method)[0]) / p.jump_rate


def green_window(k: SparseField, radius: int, method: str | None = None) -> MassField:
    """Return ``G`` on the l1-ball of ``radius`` as a field."""

    p = transition_p(k)
    sites = ball(k.d, radius)
    values = walk_green(p, sites, method) / p.jump_rate
    return MassField(k.d, dict(zip(sites, (float(v) for v in values))))


def _green_on(k: SparseField, sites: Iterable[Site], method: str | None) -> SparseField:
    p = transition_p(k)
    sites = sorted(set(sites))
    values = walk_green(p, sites, method) / p.jump_rate
    return SparseField(k.d, dict(zip(sites, (float(v) for v in values))))


# -- simple random walk return probability ------------------------------------


def srw_return_probability(d: int, method: str = "fourier") -> float:
    """Return the probability that the simple random walk on Z^d ever returns."""

    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    if d <= 2:
        return 1.0
    g0 = float(walk_green(srw_jump_law(d), [origin(d)], method)[0])
    return 1.0 - 1.0 / g0


def srw_return_probability_closed_form(d: int = 3) -> float:
    """Return the return probability in d = 3 from the Gamma-function closed form."""

    if d != 3:
        raise InvalidParameterError("the closed form is only available for d = 3")
    g0 = _WATSON_PREFACTOR * float(
        special.gamma(1 / 24)
        * special.gamma(5 / 24)
        * special.gamma(7 / 24)
        * special.gamma(11 / 24)
    )
    return 1.0 - 1.0 / g0


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _return_at(d: int, n: int) -> Fraction:
    """Return ``P(S_{2n} = 0)`` for the simple random walk, exactly."""

    acc = 0
    for parts in _compositions(n, d):
        multinomial = math.factorial(n)
        for part in parts:
            multinomial //= math.factorial(part)
        acc += multinomial * multinomial
    return Fraction(math.comb(2 * n, n) * acc, (2 * d) ** (2 * n))


def srw_return_probability_by_step(d: int, steps: int) -> list[float]:
    """Return ``P(first return <= 2n)`` for ``n = 1..steps`` (renewal equation)."""

    u = [Fraction(1)] + [_return_at(d, n) for n in range(1, steps + 1)]
    f = [Fraction(0)] * (steps + 1)
    cumulative = []
    running = Fraction(0)
    for n in range(1, steps + 1):
        f[n] = u[n] - sum((f[j] * u[n - j] for j in range(1, n)), Fraction(0))
        running += f[n]
        cumulative.append(float(running))
    return cumulative


def srw_return_frequency(
    d: int, walks: int, steps: int, rng: np.random.Generator
) -> float:
    """Return the fraction of ``walks`` simple walks back at 0 within ``steps``."""

    position = np.zeros((walks, d), dtype=np.int64)
    returned = np.zeros(walks, dtype=bool)
    rows = np.arange(walks)
    for _ in range(steps):
        axis = rng.integers(d, size=walks)
        sign = rng.integers(2, size=walks) * 2 - 1
        position[rows, axis] += sign
        returned |= ~position.any(axis=1)
    return float(returned.mean())


# -- phase criteria -----------------------------------------------------------


def localization_statistic(
    dist: KernelDistribution, method: str | None = None
) -> float:
    """Return ``sum_{x,y} G(x-y) beta_{x,y}`` (d >= 3)."""

    if dist.d <= 2:
        raise DivergentGreenFunctionError("the localization statistic needs d >= 3")
    pair = beta_matrix(dist).pair_sums()
    green = _green_on(dist.mean, pair.support(), method)
    return math.fsum(green[u] * value for u, value in pair.items())


def _green_quadratic(green: SparseField, k: SparseField) -> float:
    return math.fsum(
        green[sub_sites(x, y)] * kx * ky for x, kx in k.items() for y, ky in k.items()
    )


def _potlatch_parts(dist: KernelDistribution, method: str | None):
    if dist.family != "potlatch":
        raise InvalidParameterError("expected a potlatch kernel law")
    if dist.d <= 2:
        raise DivergentGreenFunctionError("potlatch thresholds need d >= 3")
    k_table: MassField = dist.params["k_table"]
    differences = {sub_sites(x, y) for x in k_table for y in k_table}
    green = _green_on(dist.mean, differences | {origin(dist.d)}, method)
    return k_table, green


def potlatch_threshold(dist: KernelDistribution, method: str | None = None) -> float:
    """Return ``(2|k| - 1) G(0) / <G * k, k>``.

    Localization holds iff ``E[W^2]`` exceeds this value.
    """

    k_table, green = _potlatch_parts(dist, method)
    return (2.0 * k_table.total() - 1.0) * green[origin(dist.d)] / _green_quadratic(
        green, k_table
    )


def potlatch_statistic(dist: KernelDistribution, method: str | None = None) -> float:
    """Return ``E[W^2] <G * k, k> + 2 - (2|k| - 1) G(0)``."""

    k_table, green = _potlatch_parts(dist, method)
    w_atoms = dist.params["w_atoms"]
    total = math.fsum(p for p, _ in w_atoms)
    second = math.fsum(p * v * v for p, v in w_atoms) / total
    return (
        second * _green_quadratic(green, k_table)
        + 2.0
        - (2.0 * k_table.total() - 1.0) * green[origin(dist.d)]
    )


def bcpp_statistic(d: int, lam: float, pi_d: float | None = None) -> float:
    """Return the closed form ``(2 d lam + 1) / (2 d lam (1 - pi_d))``."""

    if d <= 2:
        raise DivergentGreenFunctionError("the BCPP statistic needs d >= 3")
    pi_d = srw_return_probability(d) if pi_d is None else pi_d
    return (2 * d * lam + 1) / (2 * d * lam * (1.0 - pi_d))


def bcpp_threshold(d: int, pi_d: float | None = None) -> float:
    """Return ``1 / (2d (1 - 2 pi_d))``, below which the statistic exceeds 2."""

    if d <= 2:
        raise DivergentGreenFunctionError("the BCPP threshold needs d >= 3")
    pi_d = srw_return_probability(d) if pi_d is None else pi_d
    return 1.0 / (2 * d * (1.0 - 2.0 * pi_d))


def q_matrix(
    dist: KernelDistribution,
    x: Sequence[int],
    y: Sequence[int],
    *,
    beta: BetaTable | None = None,
) -> float:
    """Return the pair generator entry ``q(x, y)``.

    ``q(x,y) = k_{x-y} + k_{y-x} - 2|k| delta_{x,y}
    + delta_{0,x} sum_z beta_{z,z+y}``.
    """

    x, y = tuple(x), tuple(y)
    k = dist.mean
    value = k[sub_sites(x, y)] + k[sub_sites(y, x)]
    if x == y:
        value -= 2.0 * k.total()
    if x == origin(dist.d):
        beta = beta if beta is not None else beta_matrix(dist)
        value += beta.row_sums_by_offset()[y]
    return value


def _generator(k: SparseField, f: SparseField, x: Site) -> float:
    """Return ``(L_S f)(x)`` for the symmetrised rates ``(k + k^)/2`` off the origin."""

    zero = origin(k.d)
    fx = f[x]
    acc = []
    for y, value in k.items():
        if y == zero:
            continue
        acc.append(0.5 * value * (f[add_sites(x, y)] - fx))
        acc.append(0.5 * value * (f[sub_sites(x, y)] - fx))
    return math.fsum(acc)


def harmonic_h(
    dist: KernelDistribution,
    *,
    window_radius: int | None = None,
    evaluation_radius: int | None = None,
    method: str | None = None,
) -> HarmonicReport:
    """Return ``h = 1 + c G`` with ``c = E[(|K|-1)^2] / (2 - statistic)``.

    This value of ``c`` makes ``(L_S h)(x) + delta_{0,x} / 2 sum h(y-z) beta_{y,z}``
    vanish; the residual is evaluated on the l1-ball of ``window_radius``.
    """

    if dist.d <= 2:
        raise DivergentGreenFunctionError("h = 1 + cG needs d >= 3")
    window = int(window_radius or numerics_setting("phase", "window_radius"))
    evaluation = int(
        evaluation_radius or numerics_setting("phase", "evaluation_radius")
    )
    beta = beta_matrix(dist)
    pair = beta.pair_sums()
    reach = max(dist.r_K, 1)
    radius = max(evaluation, window + reach, 2 * reach)
    green = green_window(dist.mean, radius, method)
    statistic = math.fsum(green[u] * v for u, v in pair.items())
    if statistic >= 2.0:
        raise ConditionNotSatisfiedError(
            f"h = 1 + cG needs a localization statistic below 2, got {statistic:.6g}"
        )
    c = second_moment_total(dist) / (2.0 - statistic)
    h = MassField(dist.d, {x: 1.0 + c * g for x, g in green.items()})
    zero = origin(dist.d)
    origin_term = 0.5 * math.fsum(
        (1.0 + c * green[u]) * v for u, v in pair.items()
    )
    residuals = {}
    for x in ball(dist.d, window):
        value = _generator(dist.mean, h, x)
        if x == zero:
            value += origin_term
        residuals[x] = value
    field_ = SparseField(dist.d, residuals)
    worst = max((abs(v) for v in residuals.values()), default=0.0)
    return HarmonicReport(
        h=h,
        c=c,
        statistic=statistic,
        max_residual=worst,
        residuals=field_,
        window_radius=window,
    )


def green_identity_residual(
    k: SparseField, radius: int, method: str | None = None
) -> float:
    """Return ``max |(k + k^)/2 * G - |k| G + delta_0|`` on the l1-ball."""

    reach = max(k.radius(), 1)
    green = green_window(k, radius + reach, method)
    sym = k.add(k.reflect()).scale(0.5)
    zero = origin(k.d)
    norm = k.total()
    worst = 0.0
    for x in ball(k.d, radius):
        conv = math.fsum(v * green[sub_sites(x, y)] for y, v in sym.items())
        value = conv - norm * green[x] + (1.0 if x == zero else 0.0)
        worst = max(worst, abs(value))
    return worst


# -- witness search -----------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    n: int
    value: float
    target: float
    g: MassField


def _box_radius(d: int) -> int:
    radii = numerics_setting("witness", "box_radius")
    value = radii.get(d, radii.get(str(d))) if isinstance(radii, dict) else None
    if value is None:
        value = max(int(v) for v in radii.values())
    return int(value)


def find_witness(
    dist: KernelDistribution,
    *,
    n_max: int | None = None,
    box_radius: int | None = None,
) -> Witness | None:
    """Return the smallest ``n`` with ``sum g_n(x-y) beta_{x,y} > 2(|k| - k_0)``.

    The search stops at ``n_max``. Mass leaving the dense box is reported
    with a warning.
    """

    n_max = int(n_max or numerics_setting("witness", "n_max"))
    p = transition_p(dist.mean)
    target = 2.0 * p.jump_rate
    pair = beta_matrix(dist).pair_sums()
    radius = min(int(box_radius or _box_radius(dist.d)), n_max * max(1, p.range) + 1)
    radius = max(radius, pair.radius())
    walk = _DenseWalk(p, radius)
    acc = walk.current.copy()
    terms = [walk.value(acc, u) * v for u, v in pair.items()]
    value = math.fsum(terms)
    n = 0
    while value <= target:
        if n >= n_max:
            logger.info(
                "no witness up to n=%d (sum %.6g, target %.6g)", n, value, target
            )
            return None
        arr = walk.advance()
        acc += arr
        n += 1
        value += math.fsum(walk.value(arr, u) * v for u, v in pair.items())
    if walk.lost > 1e-12:
        logger.warning(
            "witness search lost %.3g of walk mass at the box edge", walk.lost
        )
    return Witness(n=n, value=value, target=target, g=from_dense(acc, mass=True))


def witness_ruled_out(
    dist: KernelDistribution, statistic: float, margin: float
) -> bool:
    """Return True when no ``g_n`` can witness a positive drift in d >= 3.

    With a statistic below 2 and nonnegative pair sums the sums
    ``sum g_n beta`` increase to a limit below the target.
    """

    pair = beta_matrix(dist).pair_sums()
    return statistic < 2.0 - margin and all(v >= 0.0 for v in pair.entries.values())


def classify(
    d: int, margin_value: float, statistic: float | None, inconclusive_margin: float
) -> str:
    if d <= 2 or margin_value > 0.0:
        return SLOW_GROWTH
    assert statistic is not None
    if abs(statistic - 2.0) < inconclusive_margin:
        return INCONCLUSIVE
    if statistic > 2.0:
        return LOCALIZATION
    return REGULAR_GROWTH


def phase_report(
    dist: KernelDistribution,
    *,
    method: str | None = None,
    inconclusive_margin: float | None = None,
    n_max: int | None = None,
    search_witness: bool = True,
) -> PhaseReport:
    """Compute the moment and Green-function criteria and classify ``dist``."""

    margin = (
        float(numerics_setting("phase", "inconclusive_margin"))
        if inconclusive_margin is None
        else float(inconclusive_margin)
    )
    k = dist.mean
    lm = log_moment_margin(dist)
    notes: list[str] = []
    statistic = pi_d = g0 = threshold = None
    if dist.d >= 3:
        statistic = localization_statistic(dist, method)
        g0 = green_function(k, origin(dist.d), method)
        pi_d = srw_return_probability(dist.d, method or "fourier")
        if dist.family == "bcpp":
            threshold = bcpp_threshold(dist.d, pi_d)
        elif dist.family == "potlatch":
            threshold = potlatch_threshold(dist, method)
    witness_n = None
    if search_witness:
        if dist.d >= 3 and witness_ruled_out(dist, statistic, margin):
            notes.append(
                "witness search skipped: statistic below 2 with nonnegative pair sums"
            )
        else:
            witness = find_witness(dist, n_max=n_max)
            witness_n = witness.n if witness is not None else None
            if witness is None:
                notes.append("no witness found within n_max")
    classification = classify(dist.d, lm, statistic, margin)
    logger.info("phase classification: %s", classification)
    return PhaseReport(
        k_norm=k.total(),
        k0=k[origin(dist.d)],
        log_moment_margin=lm,
        classification=classification,
        d=dist.d,
        loc_statistic=statistic,
        witness_n=witness_n,
        pi_d=pi_d,
        g0=g0,
        threshold=threshold,
        notes=tuple(notes),
    )


__all__ = [
    "JumpLaw",
    "PhaseReport",
    "HarmonicReport",
    "Witness",
    "SLOW_GROWTH",
    "LOCALIZATION",
    "REGULAR_GROWTH",
    "INCONCLUSIVE",
    "transition_p",
    "srw_jump_law",
    "walk_covariance",
    "g_n",
    "p_power",
    "walk_green",
    "green_function",
    "green_window",
    "srw_return_probability",
    "srw_return_probability_closed_form",
    "srw_return_probability_by_step",
    "srw_return_frequency",
    "localization_statistic",
    "potlatch_threshold",
    "potlatch_statistic",
    "bcpp_statistic",
    "bcpp_threshold",
    "q_matrix",
    "harmonic_h",
    "green_identity_residual",
    "find_witness",
    "witness_ruled_out",
    "classify",
    "phase_report",
]
