"""Heat kernels on the circle and the interval, and the non-intersecting
loop measures built from them.

The four propagator families share one convention: time t drives the
generator (1/2) d^2/dx^2, so the short-time profile is a Gaussian of
variance t.  Circle kernels are theta functions; interval kernels combine
them by reflection.  Loop configurations that return to their starting set
carry the weight det[p_t(x_i, x_j)]; because every propagator here is a
positive mode sum, that determinant factors through a rectangular mode
matrix, and a pivoted QR of the factor evaluates the log-weight stably far
below where a plain LU determinant drowns in roundoff.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as pivoted_qr

from .kernels import cue_kernel, finite_t_modes
from .sampling import make_rng, sample_grand_canonical_many
from .thermo import fermi_factor

__all__ = [
    "FAMILIES",
    "MixtureReport",
    "NonPositiveDeterminant",
    "circle_propagator",
    "gc_mixture_check",
    "heat_propagator",
    "km_log_density",
    "km_mcmc",
    "theta3",
]

TWO_PI = 2.0 * np.pi

FAMILIES = ("A", "B", "C", "D")


class NonPositiveDeterminant(RuntimeError):
    """The loop-weight determinant came out zero or negative."""


def _decay_exponent(eps: float) -> float:
    return max(40.0, -np.log(max(eps, 1e-300)) + 8.0)


def theta3(z, t: float, eps: float = 1e-14) -> np.ndarray:
    """sum_k exp(-t k^2) exp(2 pi i k z), real-valued.

    For t >= 1 the frequency series converges in a handful of terms; below
    that the image (modular-transformed) Gaussian sum takes over.  Both
    truncations leave tails below eps.
    """
    if t <= 0:
        raise ValueError(f"theta time must be positive, got {t}")
    z = np.asarray(z, dtype=float)
    decay = _decay_exponent(eps)
    if t >= 1.0:
        k_max = int(np.ceil(np.sqrt(decay / t))) + 1
        ks = np.arange(1, k_max + 1)
        w = np.exp(-t * ks.astype(float) ** 2)
        return 1.0 + 2.0 * np.einsum("k,k...->...", w, np.cos(TWO_PI * np.multiply.outer(ks, z)))
    half = max(4, int(np.ceil(np.sqrt(decay * t) / np.pi)) + 1)
    base = np.round(z)
    ms = np.arange(-half, half + 1)
    d = z[..., None] - (base[..., None] + ms)
    return np.sqrt(np.pi / t) * np.sum(np.exp(-np.pi**2 * d * d / t), axis=-1)


def _theta_half(s, t: float, eps: float = 1e-14) -> np.ndarray:
    """sum over half-integers k of exp(-t k^2) exp(i k s), real-valued."""
    s = np.asarray(s, dtype=float)
    decay = _decay_exponent(eps)
    if t >= 1.0:
        j_max = int(np.ceil(np.sqrt(decay / t))) + 1
        js = np.arange(0, j_max + 1) + 0.5
        w = np.exp(-t * js**2)
        return 2.0 * np.einsum("k,k...->...", w, np.cos(np.multiply.outer(js, s)))
    half = max(4, int(np.ceil(np.sqrt(decay * t) / np.pi)) + 1)
    z = s / TWO_PI
    base = np.round(z)
    ms = np.arange(-half, half + 1)
    mm = base[..., None] + ms
    d = s[..., None] - TWO_PI * mm
    sign = np.where(np.mod(mm.astype(np.int64), 2) == 0, 1.0, -1.0)
    return np.sqrt(np.pi / t) * np.sum(sign * np.exp(-d * d / (4.0 * t)), axis=-1)


def _theta_full(s, t: float, eps: float = 1e-14) -> np.ndarray:
    """theta3 written in angle units: sum_k exp(-t k^2) cos(k s)."""
    return theta3(np.asarray(s, dtype=float) / TWO_PI, t, eps)


def heat_propagator(family: str, t: float, eps: float = 1e-14):
    """Transition density of family A, B, C or D at time t.

    A: free motion on the circle [0, 2pi), mode weights exp(-k^2 t / 2).
    B: interval [0, pi], absorbing at 0, reflecting at pi.
    C: interval [0, pi], absorbing at both ends.
    D: interval [0, pi], reflecting at both ends.
    Returns a callable p(x, y) broadcasting over arrays.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown propagator family {family!r}")
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    tau = 0.5 * t

    if family == "A":
        return lambda x, y: _theta_full(
            np.asarray(x, float) - np.asarray(y, float), tau, eps) / TWO_PI
    if family == "B":
        return lambda x, y: (
            _theta_half(np.asarray(x, float) - np.asarray(y, float), tau, eps)
            - _theta_half(np.asarray(x, float) + np.asarray(y, float), tau, eps)) / TWO_PI
    if family == "C":
        return lambda x, y: (
            _theta_full(np.asarray(x, float) - np.asarray(y, float), tau, eps)
            - _theta_full(np.asarray(x, float) + np.asarray(y, float), tau, eps)) / TWO_PI
    return lambda x, y: (
        _theta_full(np.asarray(x, float) - np.asarray(y, float), tau, eps)
        + _theta_full(np.asarray(x, float) + np.asarray(y, float), tau, eps)) / TWO_PI


def circle_propagator(t: float, eps: float = 1e-14):
    """Periodic heat kernel (1/2pi) theta3((x - y)/2pi, t).

    Here the theta time already absorbs the 1/2 from the generator, so this
    equals the family-A propagator at physical time 2t.  Both conventions
    are kept on purpose; pick by whether a formula quotes exp(-k^2 t) or
    exp(-k^2 t / 2) weights.
    """
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    return lambda x, y: theta3(
        (np.asarray(x, float) - np.asarray(y, float)) / TWO_PI, t, eps) / TWO_PI


# ---------------------------------------------------------------------------
# loop-weight determinants


def _domain_top(family: str) -> float:
    return TWO_PI if family == "A" else np.pi


def _check_config(family: str, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or len(points) == 0:
        raise ValueError("configuration must be a nonempty 1-d array")
    top = _domain_top(family)
    if family == "A":
        if np.any(points < 0) or np.any(points >= top):
            raise ValueError("circle points must lie in [0, 2pi)")
    elif np.any(points <= 0) or np.any(points >= top):
        raise ValueError("interval points must lie strictly inside (0, pi)")
    if family == "A" and len(points) % 2 == 0:
        raise ValueError("circular loop weights need an odd number of points")
    return points


def _mode_factor(family: str, tau: float, points: np.ndarray) -> np.ndarray:
    """G with det[p_t(x_i, x_j)] = det(G G†) — rows points, columns modes.

    The cutoff keeps at least as many modes as points (else the factor is
    rank deficient) plus enough decay margin that dropped modes are
    negligible relative to the kept ones.
    """
    k_max = len(points) + int(np.ceil(np.sqrt(120.0 / tau))) + 1
    if family == "A":
        k_max = (len(points) + 1) // 2 + int(np.ceil(np.sqrt(120.0 / tau))) + 1
        ks = np.arange(-k_max, k_max + 1, dtype=float)
        return np.exp(1j * np.outer(points, ks) - 0.5 * tau * ks**2) / np.sqrt(TWO_PI)
    if family == "B":
        ks = np.arange(0, k_max + 1, dtype=float) + 0.5
        return np.sqrt(2.0 / np.pi) * np.sin(np.outer(points, ks)) * np.exp(-0.5 * tau * ks**2)
    if family == "C":
        ks = np.arange(1, k_max + 1, dtype=float)
        return np.sqrt(2.0 / np.pi) * np.sin(np.outer(points, ks)) * np.exp(-0.5 * tau * ks**2)
    ks = np.arange(0, k_max + 1, dtype=float)
    g = np.sqrt(2.0 / np.pi) * np.cos(np.outer(points, ks)) * np.exp(-0.5 * tau * ks**2)
    g[:, 0] = 1.0 / np.sqrt(np.pi)
    return g


def _loop_logdet(family: str, t: float, points: np.ndarray) -> float:
    """log det[p_t(x_i, x_j)] through a pivoted QR of the mode factor.

    The quadratic form G G† makes positivity structural; the factorization
    keeps log-weights accurate far below the absolute-size floor where an
    LU determinant of the n x n matrix degenerates into rounding noise.
    """
    g = _mode_factor(family, 0.5 * t, points)
    r = pivoted_qr(g.conj().T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diagonal(r))[: len(points)]
    if np.any(diag == 0.0):
        return -np.inf
    return float(2.0 * np.sum(np.log(diag)))


def km_log_density(family: str, t: float, points) -> tuple[float, float]:
    """Log of the unnormalized loop weight det[p_t(x_i, x_j)] and its sign.

    The value is exactly permutation invariant and is never clamped; a zero
    or negative weight (coincident points, or a parity-violating circular
    configuration) raises NonPositiveDeterminant.
    """
    points = _check_config(family, points)
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    if np.any(np.diff(np.sort(points)) == 0.0):
        raise NonPositiveDeterminant("coincident points give a zero weight")
    logdet = _loop_logdet(family, t, points)
    if not np.isfinite(logdet):
        raise NonPositiveDeterminant(
            f"loop determinant vanished for family {family} at t={t}"
        )
    return logdet, 1.0


# ---------------------------------------------------------------------------
# Metropolis sampler


def _fold(family: str, v: float, top: float) -> float:
    if family == "A":
        return v % top
    v = v % (2.0 * top)
    return 2.0 * top - v if v > top else v


def km_mcmc(family: str, t: float, n: int, steps: int, rng,
            step: float = 0.25, thin: int = 10, burn: int = 0):
    """Single-site Metropolis over sorted n-point loop configurations.

    One coordinate moves by a Gaussian step, wrapped on the circle and
    reflected on the interval; proposals that break the ordering or carry
    nonpositive weight are rejected.  Returns (samples, acceptance_rate),
    samples shaped (kept, n); acceptance below 1% triggers a warning.
    """
    if n < 1:
        raise ValueError("need at least one loop")
    if family == "A" and n % 2 == 0:
        raise ValueError("circular loop weights need an odd number of points")
    if steps < 1 or thin < 1 or burn < 0:
        raise ValueError("steps and thin must be positive, burn nonnegative")
    if step <= 0:
        raise ValueError("step size must be positive")
    rng = make_rng(rng)
    top = _domain_top(family)
    x = top * np.arange(1, n + 1) / (n + 1.0)
    logp = _loop_logdet(family, t, x)
    if not np.isfinite(logp):
        raise NonPositiveDeterminant("could not start from the uniform configuration")
    kept = []
    accepted = 0
    lo_edge = 0.0 if family == "A" else np.nextafter(0.0, 1.0)
    for it in range(steps):
        i = int(rng.integers(n))
        xi = _fold(family, x[i] + step * rng.standard_normal(), top)
        ordered = (
            xi >= (x[i - 1] if i > 0 else lo_edge)
            and xi < (x[i + 1] if i + 1 < n else top)
            and (family == "A" or xi > 0.0)
            and (i == 0 or xi != x[i - 1])
        )
        if ordered:
            cand = x.copy()
            cand[i] = xi
            lp2 = _loop_logdet(family, t, cand)
            if np.isfinite(lp2) and np.log(rng.random()) < lp2 - logp:
                x, logp = cand, lp2
                accepted += 1
        if it >= burn and (it - burn) % thin == 0:
            kept.append(x.copy())
    rate = accepted / steps
    if rate < 0.01:
        warnings.warn(f"loop sampler acceptance rate {rate:.4f}; reduce the step size")
    return np.array(kept), rate


# ---------------------------------------------------------------------------
# grand-canonical / loop-ensemble consistency


@dataclass(frozen=True)
class MixtureReport:
    """Comparison of sampled grand-canonical statistics with kernel predictions.

    z-scores use the Gaussian approximation to binned counts; under the
    model about 0.3% of bins should exceed |z| = 3.
    """

    temperature: float
    mu: float
    loop_time: float
    samples: int
    mean_count: float
    expected_count: float
    density_z: np.ndarray
    pair_z: np.ndarray
    sup_density_err: float
    sup_pair_err: float
    pair_fraction_above_3: float

    @property
    def passed(self) -> bool:
        return self.pair_fraction_above_3 < 0.01


def gc_mixture_check(family: str, t_temp: float, mu: float, bins: int,
                     samples: int, rng) -> MixtureReport:
    """Sample the grand-canonical circle process and test it against its kernel.

    The Bernoulli-mode construction is taken as the operative definition of
    the ensemble; predictions come from the finite-temperature kernel.  The
    loop-time identification t = 2/T is recorded in the report.
    """
    if family != "A":
        raise ValueError("the mixture identification holds on the circle (family A)")
    if bins < 4:
        raise ValueError("need at least 4 bins")
    rng = make_rng(rng)
    fam = finite_t_modes("periodic", t_temp, mu)
    occ = fermi_factor(fam.energies, t_temp, mu)
    n_bar = float(np.sum(occ))
    draws = sample_grand_canonical_many(fam, t_temp, mu, samples, rng)
    counts = np.array([len(d) for d in draws], dtype=float)

    edges = np.linspace(0.0, TWO_PI, bins + 1)
    width = edges[1] - edges[0]

    all_pts = np.concatenate([d for d in draws if len(d)]) if np.any(counts) else np.empty(0)
    hist1 = np.histogram(all_pts, bins=edges)[0].astype(float)
    dens = n_bar / TWO_PI
    expect1 = samples * dens * width
    density_z = (hist1 - expect1) / np.sqrt(max(expect1, 1.0))

    seps = []
    for d in draws:
        if len(d) < 2:
            continue
        diff = np.mod(d[:, None] - d[None, :], TWO_PI)
        seps.append(diff[~np.eye(len(d), dtype=bool)])
    seps = np.concatenate(seps) if seps else np.empty(0)
    hist2 = np.histogram(seps, bins=edges)[0].astype(float)
    kappa = cue_kernel(t_temp, mu)
    # bin-averaged pair density: the repulsion dip near zero separation is
    # too curved for a midpoint value
    fine = np.linspace(0.0, TWO_PI, 16 * bins + 1)
    rho_fine = dens**2 - np.asarray(kappa(fine, np.zeros_like(fine))) ** 2
    cell = 0.5 * (rho_fine[:-1] + rho_fine[1:])
    rho2 = np.mean(cell.reshape(bins, 16), axis=1)
    expect2 = samples * TWO_PI * rho2 * width
    pair_z = (hist2 - expect2) / np.sqrt(np.maximum(expect2, 1.0))

    return MixtureReport(
        temperature=t_temp,
        mu=mu,
        loop_time=2.0 / t_temp,
        samples=samples,
        mean_count=float(np.mean(counts)),
        expected_count=n_bar,
        density_z=density_z,
        pair_z=pair_z,
        sup_density_err=float(np.max(np.abs(hist1 / (samples * width) - dens))),
        sup_pair_err=float(np.max(np.abs(hist2 / (samples * TWO_PI * width) - rho2))),
        pair_fraction_above_3=float(np.mean(np.abs(pair_z) > 3.0)),
    )
