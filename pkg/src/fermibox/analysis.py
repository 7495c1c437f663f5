"""Empirical estimators, kernel distances, and scaling-limit studies.

The estimators turn point configurations into binned one- and two-point
correlation estimates with Poisson error bars.  The study functions build
the rescaled finite-size kernels around a bulk point or an edge, measure
their distance to the matching limit kernel, and fit the decay rate; the
committed reference values for those runs live in :mod:`fermibox.baselines`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryMatrix, make_preset
from .kernels import (
    Kernel,
    cue_kernel,
    ground_state_kernel,
    kernel_finite_t_sine,
    kernel_sine,
    parse_kernel_spec,
)
from .thermo import solve_lambda

__all__ = [
    "CorrelationEstimate",
    "ScalingReport",
    "estimate_density",
    "estimate_pair_correlation",
    "kernel_distance",
    "bulk_scaling_study",
    "edge_scaling_study",
    "finite_t_bulk_study",
    "monotone_tail_ok",
    "default_bulk_grid",
    "default_edge_grid",
]

TWO_PI = 2.0 * np.pi


def default_bulk_grid() -> np.ndarray:
    return np.linspace(-2.0, 2.0, 33)


def default_edge_grid() -> np.ndarray:
    # Start away from the origin: the kernel is pinned there by the boundary
    # condition itself, and the sup-norm should probe the nontrivial region.
    return np.linspace(0.1, 2.0, 33)


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class CorrelationEstimate:
    """Binned correlation estimate with per-bin standard errors.

    ``grid`` holds the bin centers: a single array for one-dimensional
    estimates, a pair of axis arrays for two-dimensional ones (``values``
    is then indexed ``[i, j]``).
    """

    grid: np.ndarray | tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    stderr: np.ndarray
    n_samples: int

    def __post_init__(self):
        axes = self.grid if isinstance(self.grid, tuple) else (self.grid,)
        for axis in axes:
            if np.any(np.diff(axis) <= 0):
                raise ValueError("grid must be strictly ordered per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("estimate contains non-finite values")
        if np.any(self.stderr < 0):
            raise ValueError("standard errors must be nonnegative")


def _as_edges(bins, support: tuple[float, float]) -> np.ndarray:
    if np.isscalar(bins):
        nb = int(bins)
        if nb < 4:
            raise ValueError(f"need at least 4 bins, got {nb}")
        lo, hi = float(support[0]), float(support[1])
        if not hi > lo:
            raise ValueError("empty support interval")
        return np.linspace(lo, hi, nb + 1)
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 5 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be increasing with at least 4 bins")
    return edges


def _clean_samples(samples, minimum: int) -> list[np.ndarray]:
    configs = [np.asarray(s, dtype=float).ravel() for s in samples]
    if not configs:
        raise ValueError("empty sample set")
    if len(configs) < minimum:
        raise ValueError(f"need at least {minimum} samples, got {len(configs)}")
    return configs


def estimate_density(samples, bins, support: tuple[float, float] = (0.0, TWO_PI),
                     ) -> CorrelationEstimate:
    """Histogram estimate of the one-point function with Poisson errors.

    Normalized per sample, so the estimate integrates to the mean particle
    count by construction.  ``bins`` is a bin count over ``support`` or an
    explicit edge array.
    """
    configs = _clean_samples(samples, 100)
    edges = _as_edges(bins, support)
    counts = np.zeros(edges.size - 1)
    for pts in configs:
        counts += np.histogram(pts, bins=edges)[0]
    width = np.diff(edges)
    m = len(configs)
    values = counts / (m * width)
    stderr = np.sqrt(counts) / (m * width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return CorrelationEstimate(grid=centers, values=values, stderr=stderr,
                               n_samples=m)


def estimate_pair_correlation(samples, grid2d,
                              support: tuple[float, float] = (0.0, TWO_PI),
                              reduced: bool = False) -> CorrelationEstimate:
    """Binned estimate of the two-point function from ordered pairs.

    With ``reduced=True`` the process is treated as translation invariant on
    the circle ``support`` and the estimate is collapsed to a function of
    the separation ``(x - y) mod length``; otherwise a full two-dimensional
    histogram over ``support x support`` is returned.  Counting ordered
    pairs makes the estimator unbiased for the binned average of the
    two-point function, including the diagonal bins.  A point participates
    in every pair it forms, so per-bin counts are overdispersed relative to
    Poisson; the standard errors therefore come from the across-sample
    spread of the per-sample counts.
    """
    configs = _clean_samples(samples, 1000)
    edges = _as_edges(grid2d, support)
    m = len(configs)
    width = np.diff(edges)
    length = float(support[1]) - float(support[0])

    if reduced:
        counts = np.zeros(edges.size - 1)
        squares = np.zeros(edges.size - 1)
        for pts in configs:
            if pts.size < 2:
                continue
            sep = (pts[:, None] - pts[None, :]) % length
            sep = sep[~np.eye(pts.size, dtype=bool)]
            h = np.histogram(sep, bins=edges)[0]
            counts += h
            squares += h.astype(float) ** 2
        norm = m * length * width
        values = counts / norm
        spread = np.sqrt(np.maximum(squares - counts ** 2 / m, 0.0) / (m - 1))
        stderr = spread / (np.sqrt(m) * length * width)
        centers = 0.5 * (edges[:-1] + edges[1:])
        return CorrelationEstimate(grid=centers, values=values, stderr=stderr,
                                   n_samples=m)

    counts = np.zeros((edges.size - 1, edges.size - 1))
    squares = np.zeros_like(counts)
    for pts in configs:
        if pts.size < 2:
            continue
        xi = np.repeat(pts, pts.size)
        yj = np.tile(pts, pts.size)
        keep = xi != yj
        h = np.histogram2d(xi[keep], yj[keep], bins=(edges, edges))[0]
        counts += h
        squares += h ** 2
    area = width[:, None] * width[None, :]
    values = counts / (m * area)
    spread = np.sqrt(np.maximum(squares - counts ** 2 / m, 0.0) / (m - 1))
    stderr = spread / (np.sqrt(m) * area)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return CorrelationEstimate(grid=(centers, centers), values=values,
                               stderr=stderr, n_samples=m)


# ---------------------------------------------------------------------------
# kernel distances


def kernel_distance(ka, kb, grid2d) -> dict[str, float]:
    """Sup and root-mean-square distance between two kernels on a grid.

    ``grid2d`` is a pair of axis arrays; the kernels are evaluated on their
    product.  Either argument may be a :class:`~fermibox.kernels.Kernel` or
    any callable of two broadcastable arguments.
    """
    xs, ys = (np.asarray(g, dtype=float) for g in grid2d)
    a = np.asarray(ka(xs[:, None], ys[None, :]))
    b = np.asarray(kb(xs[:, None], ys[None, :]))
    diff = np.abs(a - b)
    return {"sup": float(diff.max()), "l2": float(np.sqrt(np.mean(diff ** 2)))}


# ---------------------------------------------------------------------------
# scaling studies


@dataclass(frozen=True)
class ScalingReport:
    """Distances of the rescaled kernels to their limit, per system size."""

    sizes: tuple[int, ...]
    distances: tuple[float, ...]
    fitted_rate: float

    def __post_init__(self):
        if np.any(np.diff(self.sizes) <= 0):
            raise ValueError("sizes must be strictly increasing")
        if any(d <= 0 for d in self.distances):
            raise ValueError("distances must be positive")


def monotone_tail_ok(distances) -> bool:
    """Eventually decreasing: at most one increase, and only at the start."""
    d = list(distances)
    rises = [i for i in range(len(d) - 1) if d[i + 1] >= d[i]]
    return rises in ([], [0])


def _fit_rate(sizes, distances) -> float:
    return float(np.polyfit(np.log(sizes), np.log(distances), 1)[0])


def _checked_sizes(sizes) -> list[int]:
    out = [int(n) for n in sizes]
    if len(out) < 2 or any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError("need at least two strictly increasing sizes")
    if any(n < 1 for n in out):
        raise ValueError("sizes must be positive")
    return out


def _sup_gap(rescaled: np.ndarray, limit: np.ndarray) -> float:
    if np.iscomplexobj(rescaled):
        # Kernels carrying a position-dependent phase (twisted closures) are
        # only determined up to that gauge; compare the invariant modulus.
        return float(np.max(np.abs(np.abs(rescaled) - np.abs(limit))))
    return float(np.max(np.abs(rescaled - limit)))


def bulk_scaling_study(bc, x0: float, sizes, grid=None) -> ScalingReport:
    """Rescale the ground-state kernel around an interior point.

    For each size ``N`` builds ``(2 pi / N) K_N(x0 + 2 pi x / N,
    x0 + 2 pi y / N)`` and measures its sup distance to the sine kernel on
    ``grid x grid``; fits the log-log decay rate across sizes.
    """
    if not 0.0 < float(x0) < TWO_PI:
        raise ValueError(f"bulk point must be strictly interior, got {x0}")
    ns = _checked_sizes(sizes)
    u = default_bulk_grid() if grid is None else np.asarray(grid, dtype=float)
    target = kernel_sine()(u[:, None], u[None, :])
    dists = []
    for n in ns:
        kern = ground_state_kernel(bc, n)
        x = float(x0) + TWO_PI * u / n
        rescaled = (TWO_PI / n) * kern(x[:, None], x[None, :])
        dists.append(_sup_gap(rescaled, target))
    return ScalingReport(sizes=tuple(ns), distances=tuple(dists),
                         fitted_rate=_fit_rate(ns, dists))


# Edge classes of the named boundary presets, as (at 0, at 2 pi).
_EDGE_CLASSES = {
    "dirichlet": ("dirichlet", "dirichlet"),
    "neumann": ("neumann", "neumann"),
    "zaremba": ("dirichlet", "neumann"),
    "robin": ("robin", "robin"),
    "dirichlet_robin": ("dirichlet", "robin"),
    "delta": ("delta", "delta"),
}

_CLASS_TO_LIMIT = {
    "dirichlet": "BesselMinus",
    "neumann": "BesselPlus",
    "robin": "RobinEdge",
    "delta": "DeltaEdge",
}


def _preset_form(bc) -> tuple[str, tuple[float, ...]]:
    if isinstance(bc, BoundaryMatrix):
        name, params = bc.label, bc.params
    elif isinstance(bc, str):
        name, params = bc, ()
    elif isinstance(bc, dict) and "preset" in bc:
        name, params = bc["preset"], tuple(bc.get("params", ()))
    else:
        raise ValueError(
            "edge study needs a preset boundary (name, preset dict, or a "
            "matrix built from one); a bare custom matrix has no declared "
            "edge class")
    if name not in _EDGE_CLASSES:
        raise ValueError(f"boundary {name!r} has no edge to rescale at")
    return name, params


def _limit_form(limit) -> tuple[str, dict]:
    if isinstance(limit, Kernel):
        spec = limit.spec
        if not (isinstance(spec, dict) and "Limit" in spec):
            raise ValueError("limit kernel carries no Limit spec")
        inner = spec["Limit"]
    elif isinstance(limit, dict):
        inner = limit.get("Limit", limit)
    else:
        raise ValueError(f"cannot read a limit spec from {limit!r}")
    (tag, cfg), = inner.items()
    return tag, dict(cfg)


def _class_coupling(klass: str, params: tuple[float, ...]) -> float | None:
    """Zoom-invariant coupling of the limit this edge class targets."""
    if klass == "robin":
        return float(np.tan(0.5 * params[0]))
    if klass == "delta":
        return float(params[0])
    return None


def _sized_preset(name: str, params: tuple[float, ...], n: int) -> BoundaryMatrix:
    """The preset whose coupling, measured at the mean-spacing scale, stays put.

    A boundary coefficient h at unit scale appears as 2 pi h / N after the
    edge zoom, so holding the zoomed coupling at ``c`` means growing the raw
    one like c N / (2 pi).  Dirichlet, Neumann and the mixed
    Dirichlet/Neumann preset are fixed points of the rescaling.
    """
    if name == "delta":
        return make_preset(name, params[0] * n / TWO_PI)
    if name in ("robin", "dirichlet_robin"):
        raw = np.tan(0.5 * params[0]) * n / TWO_PI
        return make_preset(name, 2.0 * np.arctan(raw))
    return make_preset(name, *params)


def edge_scaling_study(bc, x0: float, limit, sizes, grid=None) -> ScalingReport:
    """Rescale the ground-state kernel at an edge against a limit kernel.

    ``x0`` must be 0 or 2 pi; ``limit`` a limit-kernel spec (or a kernel
    carrying one) whose class matches the boundary's class at that edge:
    absorbing edges pair with the odd hard-edge kernel, reflecting ones
    with the even one, elastic (Robin) edges with the matching positive
    coupling, and point scatterers likewise.  The boundary coupling is held
    fixed at the zoomed scale while the sizes grow.
    """
    name, params = _preset_form(bc)
    if float(x0) == 0.0:
        side = 0
    elif float(x0) == TWO_PI:
        side = 1
    else:
        raise ValueError(f"edge must be 0 or 2*pi, got {x0}")
    klass = _EDGE_CLASSES[name][side]
    tag, cfg = _limit_form(limit)
    if _CLASS_TO_LIMIT[klass] != tag:
        raise ValueError(
            f"boundary {name!r} at edge {'0' if side == 0 else '2*pi'} is "
            f"{klass}-type and does not pair with limit {tag!r}")
    coupling = _class_coupling(klass, params)
    if coupling is not None:
        want = float(cfg["c"])
        if not np.isclose(coupling, want, rtol=1e-8, atol=1e-12):
            raise ValueError(
                f"limit coupling {want} does not match the boundary's "
                f"{coupling}")
    ns = _checked_sizes(sizes)
    u = default_edge_grid() if grid is None else np.asarray(grid, dtype=float)
    target_kernel = parse_kernel_spec({"Limit": {tag: cfg}})
    target = target_kernel(u[:, None], u[None, :])
    dists = []
    for n in ns:
        kern = ground_state_kernel(_sized_preset(name, params, n), n)
        x = TWO_PI * u / n if side == 0 else TWO_PI - TWO_PI * u / n
        rescaled = (TWO_PI / n) * kern(x[:, None], x[None, :])
        dists.append(_sup_gap(rescaled, target))
    return ScalingReport(sizes=tuple(ns), distances=tuple(dists),
                         fitted_rate=_fit_rate(ns, dists))


def finite_t_bulk_study(c: float, sizes, grid=None) -> ScalingReport:
    """Rescaled high-temperature kernels against the Fermi-smoothed sine.

    For each size ``N`` takes the twisted-closure thermal kernel at
    temperature ``c N^2`` and chemical potential ``c N^2 log(lambda)``,
    with the fugacity solving the density constraint at scaled temperature
    ``c``, and measures ``(pi / N) K(pi x / N, pi y / N)`` against the
    finite-temperature sine kernel on ``grid x grid``.
    """
    if c <= 0:
        raise ValueError(f"scaled temperature must be positive, got {c}")
    ns = _checked_sizes(sizes)
    u = default_bulk_grid() if grid is None else np.asarray(grid, dtype=float)
    lam = solve_lambda(c)
    target = kernel_finite_t_sine(c, lam)(u[:, None], u[None, :])
    log_lam = float(np.log(lam))
    dists = []
    for n in ns:
        t = c * n * n
        kern = cue_kernel(t, t * log_lam)
        x = np.pi * u / n
        rescaled = (np.pi / n) * kern(x[:, None], x[None, :])
        dists.append(_sup_gap(rescaled, target))
    return ScalingReport(sizes=tuple(ns), distances=tuple(dists),
                         fitted_rate=_fit_rate(ns, dists))
