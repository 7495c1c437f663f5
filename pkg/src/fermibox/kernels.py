"""Projection kernels for boxed fermions, compact-group eigenangle kernels,
and the scaling-limit kernels they converge to.

Ground states of N noninteracting fermions give determinantal processes with
kernel sum_k psi_k(x) conj(psi_k(y)); for the closed-form boundary presets
these match the eigenangle kernels of the unitary, symplectic and orthogonal
groups after doubling the angle.  Finite-temperature (grand canonical) states
replace the sharp filling by Fermi weights.  Everything evaluates pointwise
with numpy broadcasting; `evaluate_grid` gives the outer-product matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1

from .boundary import (
    BoundaryMatrix,
    from_json as boundary_from_json,
    make_preset,
    to_json as boundary_to_json,
)
from .spectral import Spectrum, eigenfunction_eval, solve_spectrum
from .thermo import fermi_factor

__all__ = [
    "Kernel",
    "ModeFamily",
    "cue_kernel",
    "delta_line_projection",
    "evaluate_grid",
    "finite_t_kernel",
    "finite_t_modes",
    "ground_state_kernel",
    "ground_state_modes",
    "group_kernel",
    "half_line_robin_projection",
    "kernel_bessel",
    "kernel_delta_edge",
    "kernel_finite_t_sine",
    "kernel_robin_edge",
    "kernel_sine",
    "kernel_spec",
    "parse_kernel_spec",
    "sn_ratio",
]

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# periodized sine ratio


def sn_ratio(n: int, z) -> np.ndarray:
    """(1/2pi) sin(n z / 2) / sin(z / 2), continued through z = 2 pi m.

    The continuation carries the parity factor (-1)^(m (n-1)); within 1e-6
    of a multiple of 2 pi a two-term series replaces the ratio.
    """
    if n < 1:
        raise ValueError(f"order must be a positive integer, got {n}")
    z = np.asarray(z, dtype=float)
    m = np.round(z / TWO_PI)
    w = z - TWO_PI * m
    sign = np.where((m.astype(np.int64) * (n - 1)) % 2 == 0, 1.0, -1.0)
    series = sign * n * (1.0 - (n * n - 1.0) * w * w / 24.0) / TWO_PI
    small = np.abs(w) < 1e-6
    safe = np.where(small, 1.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(0.5 * n * safe) / np.sin(0.5 * safe) / TWO_PI
    return np.where(small, series, direct)


# ---------------------------------------------------------------------------
# kernel wrapper


@dataclass(frozen=True)
class Kernel:
    """A pointwise-evaluable kernel with an optional serializable spec.

    Calling broadcasts x against y elementwise; `evaluate_grid` builds the
    full matrix over a coordinate product.
    """

    fn: Callable
    spec: dict | None = None
    domain: tuple[float, float] | None = None

    def __call__(self, x, y):
        return self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def evaluate_grid(kernel, xs, ys) -> np.ndarray:
    """Matrix K[i, j] = kernel(xs[i], ys[j])."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return np.asarray(kernel(xs[:, None], ys[None, :]))


# ---------------------------------------------------------------------------
# compact-group eigenangle kernels


def group_kernel(group: str, n: int) -> Kernel:
    """Eigenangle kernel of U(n), Sp(n) (n even) or SO(n).

    U(n) lives on [0, 2pi); the others on [0, pi) after folding the spectrum
    to the upper half circle.
    """
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    if group == "U":
        fn = lambda x, y: sn_ratio(n, x - y)
        dom = (0.0, TWO_PI)
    elif group == "Sp":
        if n % 2:
            raise ValueError("symplectic groups have even matrix size")
        fn = lambda x, y: sn_ratio(n + 1, x - y) - sn_ratio(n + 1, x + y)
        dom = (0.0, np.pi)
    elif group == "SO":
        if n % 2 == 0:
            if n < 2:
                raise ValueError("SO kernel needs n >= 2")
            fn = lambda x, y: sn_ratio(n - 1, x - y) + sn_ratio(n - 1, x + y)
        else:
            fn = lambda x, y: sn_ratio(n - 1, x - y) - sn_ratio(n - 1, x + y)
        dom = (0.0, np.pi)
    else:
        raise ValueError(f"unknown group {group!r}; use U, Sp or SO")
    return Kernel(fn=fn, spec={"Group": {"G": group, "N": n}}, domain=dom)


# ---------------------------------------------------------------------------
# mode families


@dataclass(frozen=True)
class ModeFamily:
    """Orthonormal single-particle modes with an evaluation matrix."""

    energies: np.ndarray
    _evals: tuple[Callable, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self._evals)

    def eval_matrix(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return np.array([f(xs) for f in self._evals], dtype=complex)


def _closed_family(label: str, count: int) -> ModeFamily | None:
    """Closed-form families for the separable presets; None if no closed form."""
    sp = np.sqrt(np.pi)

    def sin_mode(k):
        return lambda x, _k=k: np.sin(_k * x / 2.0) / sp

    def cos_mode(k):
        return lambda x, _k=k: np.cos(_k * x / 2.0) / sp

    def exp_mode(k):
        return lambda x, _k=k: np.exp(1j * _k * x) / np.sqrt(TWO_PI)

    if label == "dirichlet":
        funcs = [sin_mode(k) for k in range(1, count + 1)]
        energies = [(k / 2.0) ** 2 for k in range(1, count + 1)]
    elif label == "neumann":
        funcs = [lambda x: np.full_like(x, 1.0 / np.sqrt(TWO_PI), dtype=float)]
        funcs += [cos_mode(k) for k in range(1, count)]
        energies = [0.0] + [(k / 2.0) ** 2 for k in range(1, count)]
    elif label == "zaremba":
        funcs = [sin_mode(k + 0.5) for k in range(count)]
        energies = [((2 * k + 1) / 4.0) ** 2 for k in range(count)]
    elif label == "periodic":
        ks: list[int] = [0]
        while len(ks) < count:
            nxt = len(ks) // 2 + 1
            ks += [-nxt, nxt]
        ks = ks[:count]
        funcs = [exp_mode(k) for k in ks]
        energies = [float(k * k) for k in ks]
        if count % 2 == 0:
            # the top shell is half filled; take its even (cosine) member,
            # matching the deterministic null-vector order of the solver
            top = count // 2
            funcs[-1] = cos_mode(2 * top)
            energies[-1] = float(top * top)
    else:
        return None
    return ModeFamily(energies=np.asarray(energies, dtype=float), _evals=tuple(funcs))


def _family_from_spectrum(spectrum: Spectrum) -> ModeFamily:
    funcs = tuple(
        (lambda x, _m=m: eigenfunction_eval(_m, x)) for m in spectrum.modes
    )
    return ModeFamily(energies=spectrum.energies, _evals=funcs)


def _source_to_bc(source) -> BoundaryMatrix:
    if isinstance(source, BoundaryMatrix):
        return source
    if isinstance(source, str):
        return make_preset(source)
    if isinstance(source, dict):
        if "entries" in source:
            return boundary_from_json(source)
        return make_preset(source["preset"], *source.get("params", ()))
    raise TypeError(f"cannot interpret {type(source).__name__} as a boundary condition")


def _source_spec(source) -> dict | str:
    if isinstance(source, str):
        return source
    if isinstance(source, dict):
        return source
    if isinstance(source, BoundaryMatrix):
        if source.label == "custom":
            import json

            return json.loads(boundary_to_json(source))
        if source.params:
            return {"preset": source.label, "params": list(source.params)}
        return source.label
    raise TypeError("spectrum sources have no serializable spec")


def ground_state_modes(source, n: int) -> ModeFamily:
    """First n orthonormal modes of a boundary condition.

    Closed forms are used for the separable presets; anything else goes
    through the spectral solver.  `source` may be a preset name, a
    BoundaryMatrix, a parsed boundary JSON object, or a Spectrum.
    """
    if n < 1:
        raise ValueError(f"mode count must be positive, got {n}")
    if isinstance(source, Spectrum):
        if len(source) < n:
            source = solve_spectrum(source.bc, count=n)
        return _family_from_spectrum(
            Spectrum(source.bc, source.modes[:n], source.modes[n - 1].energy)
        )
    bc = _source_to_bc(source)
    fam = _closed_family(bc.label, n)
    if fam is not None:
        return fam
    return _family_from_spectrum(solve_spectrum(bc, count=n))


def _kernel_from_modes(family: ModeFamily, weights, spec: dict | None) -> Kernel:
    w = np.asarray(weights, dtype=float)

    def fn(x, y):
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        fx = family.eval_matrix(np.ravel(x))
        fy = family.eval_matrix(np.ravel(y))
        vals = np.einsum("k,ki,ki->i", w, fx, fy.conj())
        vals = vals.reshape(shape)
        if np.max(np.abs(vals.imag), initial=0.0) < 1e-13 * max(1.0, np.max(np.abs(vals.real), initial=0.0)):
            return vals.real
        return vals

    return Kernel(fn=fn, spec=spec, domain=(0.0, TWO_PI))


def ground_state_kernel(source, n: int) -> Kernel:
    """Projection kernel onto the lowest n modes: sum psi_k(x) conj(psi_k(y))."""
    fam = ground_state_modes(source, n)
    try:
        spec = {"GroundState": {"source": _source_spec(source), "N": n}}
    except TypeError:
        spec = None
    return _kernel_from_modes(fam, np.ones(len(fam)), spec)


# ---------------------------------------------------------------------------
# finite temperature


def _closed_finite_t_family(label: str, t: float, mu: float, eps: float) -> ModeFamily | None:
    """Closed family truncated with a certified geometric tail bound."""
    if label == "dirichlet":
        e_of = lambda j: (j / 2.0) ** 2          # j = 1, 2, ...
        first = 1
    elif label == "neumann":
        e_of = lambda j: (j / 2.0) ** 2          # j = 0, 1, ...
        first = 0
    elif label == "zaremba":
        e_of = lambda j: ((2 * j + 1) / 4.0) ** 2
        first = 0
    elif label == "periodic":
        e_of = lambda j: float(j * j)            # then doubled for +-j
        first = 0
    else:
        return None
    j = first
    while e_of(j) <= mu:
        j += 1
    # extend until the remaining occupancy sum is certifiably below eps:
    # sum_{i > j} F(E_i) <= F(E_{j+1}) / (1 - exp(-gap/t))
    while True:
        gap = e_of(j + 1) - e_of(j)
        tail = 2.0 * fermi_factor(e_of(j + 1), t, mu) / max(1e-300, -np.expm1(-gap / t))
        if tail < eps:
            break
        j += 1
    count = j - first + 1
    if label == "periodic":
        ks = range(-j, j + 1)
        sq = np.sqrt(TWO_PI)
        funcs = [(lambda x, _k=k: np.exp(1j * _k * x) / sq) for k in ks]
        energies = [float(k * k) for k in ks]
        return ModeFamily(np.asarray(energies), tuple(funcs))
    return _closed_family(label, count)


def finite_t_modes(source, t: float, mu: float, eps: float = 1e-12) -> ModeFamily:
    """Every mode whose Fermi weight matters at (t, mu), with a certified cut."""
    if t <= 0:
        raise ValueError(f"temperature must be positive, got {t}")
    if isinstance(source, Spectrum):
        fam = _family_from_spectrum(source)
        top = fermi_factor(np.max(fam.energies), t, mu)
        if top > eps:
            raise ValueError(
                f"spectrum too short: top occupancy {top:.2g} above {eps:.2g}"
            )
        return fam
    bc = _source_to_bc(source)
    fam = _closed_finite_t_family(bc.label, t, mu, eps)
    if fam is not None:
        return fam
    # generic route: Weyl growth bounds the number of modes per energy window,
    # so cutting at mu + t * max(45, ln(1/eps) + 8) certifies the tail
    e_cut = mu + t * max(45.0, -np.log(eps) + 8.0)
    spectrum = solve_spectrum(bc, e_max=max(e_cut, 1.0))
    return _family_from_spectrum(spectrum)


def finite_t_kernel(source, t: float, mu: float, eps: float = 1e-12) -> Kernel:
    """Fermi-weighted kernel sum_k F(E_k) psi_k(x) conj(psi_k(y))."""
    fam = finite_t_modes(source, t, mu, eps)
    try:
        spec = {"FiniteT": {"source": _source_spec(source), "T": t, "mu": mu}}
    except TypeError:
        spec = None
    return _kernel_from_modes(fam, fermi_factor(fam.energies, t, mu), spec)


def cue_kernel(t: float, mu: float, eps: float = 1e-14) -> Kernel:
    """Finite-temperature kernel of the periodic box, directly as a mode sum.

    (1/2pi) sum_{k in Z} F(k^2) cos(k (x - y)), truncated with a certified
    geometric tail bound.
    """
    if t <= 0:
        raise ValueError(f"temperature must be positive, got {t}")
    k = int(np.ceil(np.sqrt(max(mu, 0.0)))) + 1
    while True:
        tail = 2.0 * fermi_factor(float((k + 1) ** 2), t, mu) \
            / max(1e-300, -np.expm1(-(2.0 * k + 1.0) / t))
        if tail < TWO_PI * eps:
            break
        k += 1
    ks = np.arange(1, k + 1)
    p = fermi_factor(ks.astype(float) ** 2, t, mu)
    p0 = float(fermi_factor(0.0, t, mu))

    def fn(x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return (p0 + 2.0 * np.einsum("k,k...->...", p, np.cos(np.multiply.outer(ks, d)))) / TWO_PI

    return Kernel(fn=fn, spec={"FiniteT": {"source": "periodic", "T": t, "mu": mu}},
                  domain=(0.0, TWO_PI))


# ---------------------------------------------------------------------------
# scaling-limit kernels


def kernel_sine() -> Kernel:
    """Bulk limit: sin(pi (x-y)) / (pi (x-y)), unit density."""
    return Kernel(fn=lambda x, y: np.sinc(x - y), spec={"Limit": {"Sine": {}}})


def kernel_bessel(sign: int) -> Kernel:
    """Hard-edge limits: sine(x-y) -+ sine(x+y) for the two reflection signs.

    sign=-1 is the absorbing (odd) edge, sign=+1 the reflecting (even) one.
    Arguments live on the half-line.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")

    def fn(x, y):
        _require_half_line(x, y)
        return np.sinc(x - y) + sign * np.sinc(x + y)

    name = "BesselMinus" if sign == -1 else "BesselPlus"
    return Kernel(fn=fn, spec={"Limit": {name: {}}})


def _require_half_line(x, y) -> None:
    if np.any(np.asarray(x) < 0) or np.any(np.asarray(y) < 0):
        raise ValueError("edge-limit kernels take nonnegative coordinates")


def _scaled_e1(z: complex) -> complex:
    """e^z E1(z) for Re z >= 0, stable at any magnitude.

    Small |z| goes through scipy's exp1; large |z| through the contracted
    continued fraction 1/(z+1- 1/(z+3- 4/(z+5- 9/(...)))) with modified
    Lentz evaluation.
    """
    if abs(z) <= 30.0:
        return complex(np.exp(z) * exp1(z))
    tiny = 1e-300
    f = z + 1.0
    if f == 0.0:
        f = tiny
    c = f
    d = 0.0
    for n in range(1, 300):
        a = -(n * n)
        b = z + (2.0 * n + 1.0)
        d = b + a * d
        if d == 0.0:
            d = tiny
        c = b + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / f


def _robin_tail(c: float, s) -> np.ndarray:
    """2c int_0^inf e^(-c xi) sinc-form(s + xi) d xi, in closed form.

    Equals (2c/pi) Im[e^(cs) E1((c - i pi) s)]; evaluated through the scaled
    exponential integral so large c s stays in range.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    flat_idx = np.ndindex(s.shape)
    for idx in flat_idx:
        si = s[idx]
        if si < 1e-12:
            out[idx] = (2.0 * c / np.pi) * np.arctan(np.pi / c)
        else:
            z = complex(c * si, -np.pi * si)
            out[idx] = (2.0 * c / np.pi) * (np.exp(1j * np.pi * si) * _scaled_e1(z)).imag
    return out


def kernel_robin_edge(c: float) -> Kernel:
    """Edge limit of a repulsive Robin boundary, coefficient c > 0.

    sine(x-y) + sine(x+y) - 2c int_0^inf sine(x+y+xi) e^(-c xi) d xi.
    Interpolates the two hard-edge kernels: recovers the absorbing one as
    c -> infinity and the reflecting one as c -> 0.
    """
    if c <= 0:
        raise ValueError(f"Robin coefficient must be positive, got {c}")

    def fn(x, y):
        _require_half_line(x, y)
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.sinc(x - y) + np.sinc(x + y) - _robin_tail(c, x + y).reshape(x.shape)

    return Kernel(fn=fn, spec={"Limit": {"RobinEdge": {"c": c}}})


def _scatterer_tail(c: float, s: float, u_max: float) -> float:
    """int_0^u_max c (2 pi u sin(pi s u) - c cos(pi s u)) / ((2 pi u)^2 + c^2) du.

    Im[c e^(i pi s u) / (2 pi u + i c)] integrated over the scattering band;
    the even modes cos(p|x| + delta(p)) carry phase shift tan(delta) = -c/2p
    and this is their interference term with the free sine part.
    """
    def integrand(u: float) -> float:
        w = TWO_PI * u
        return c * (w * np.sin(np.pi * s * u) - c * np.cos(np.pi * s * u)) / (w * w + c * c)

    val, _ = quad(integrand, 0.0, u_max, epsabs=1e-10, epsrel=1e-10, limit=200)
    return val


def kernel_delta_edge(c: float) -> Kernel:
    """Edge limit at a point scatterer of strength c >= 0.

    sine(x-y) + int_0^1 c (2 pi u sin(pi(x+y)u) - c cos(pi(x+y)u)) /
    ((2 pi u)^2 + c^2) du.  Interpolates between the plain sine kernel at
    c = 0 (the scatterer vanishes) and the absorbing-edge kernel as
    c -> infinity (the barrier decouples the two sides).
    """
    if c < 0:
        raise ValueError(f"scatterer strength must be nonnegative, got {c}")

    vec = np.vectorize(lambda s: _scatterer_tail(c, s, 1.0), otypes=[float])

    def fn(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.sinc(x - y) + vec(x + y)

    return Kernel(fn=fn, spec={"Limit": {"DeltaEdge": {"c": c}}})


def kernel_finite_t_sine(c: float, lam: float) -> Kernel:
    """Bulk limit at finite temperature: Fermi-smoothed sine kernel.

    int_0^inf cos(pi (x-y) u) / (1 + exp(u^2/c)/lam) du; with lam solving the
    density constraint at scaled temperature c the diagonal is 1.
    """
    if c <= 0 or lam <= 0:
        raise ValueError("scaled temperature and fugacity must be positive")
    u_max = float(np.sqrt(c * (36.0 + np.log1p(lam))))
    log_lam = np.log(lam)

    def one(d: float) -> float:
        val, _ = quad(
            lambda u: np.cos(np.pi * d * u) / (1.0 + np.exp(min(u * u / c - log_lam, 700.0))),
            0.0, u_max, epsabs=1e-10, epsrel=1e-10, limit=200,
        )
        return val

    vec = np.vectorize(one, otypes=[float])

    def fn(x, y):
        return vec(np.asarray(x, float) - np.asarray(y, float))

    return Kernel(fn=fn, spec={"Limit": {"FiniteTSine": {"c": c, "lam": lam}}})


def half_line_robin_projection(c: float, e: float) -> Kernel:
    """Spectral projection of the half-line Robin Laplacian up to energy e.

    int_0^(sqrt(e)/pi) [cos(pi(x-y)u) + cos(pi(x+y)u)
                        - 2c (c cos(pi(x+y)u) - pi u sin(pi(x+y)u)) / (c^2 + pi^2 u^2)] du
    for repulsive coefficient c > 0; at e = pi^2 this is the Robin edge kernel.
    """
    if c <= 0:
        raise ValueError(f"Robin coefficient must be positive, got {c}")
    if e < 0:
        raise ValueError(f"energy cut must be nonnegative, got {e}")
    u_max = np.sqrt(e) / np.pi

    def one(d: float, s: float) -> float:
        def integrand(u: float) -> float:
            denom = c * c + np.pi * np.pi * u * u
            robin = 2.0 * c * (c * np.cos(np.pi * s * u) - np.pi * u * np.sin(np.pi * s * u)) / denom
            return np.cos(np.pi * d * u) + np.cos(np.pi * s * u) - robin

        val, _ = quad(integrand, 0.0, u_max, epsabs=1e-10, epsrel=1e-10, limit=200)
        return val

    vec = np.vectorize(one, otypes=[float])

    def fn(x, y):
        _require_half_line(x, y)
        return vec(np.asarray(x, float) - np.asarray(y, float),
                   np.asarray(x, float) + np.asarray(y, float))

    return Kernel(fn=fn, spec={"Limit": {"HalfLineRobin": {"c": c, "e": e}}})


def delta_line_projection(c: float, e: float) -> Kernel:
    """Spectral projection of the full-line Laplacian with a point scatterer.

    int_0^(sqrt(e)/pi) cos(pi(x-y)u) du plus the scatterer interference term
    of :func:`kernel_delta_edge` taken at separation |x| + |y|, c >= 0;
    symmetric under reflecting both arguments through the scatterer.
    """
    if c < 0:
        raise ValueError(f"scatterer strength must be nonnegative, got {c}")
    if e < 0:
        raise ValueError(f"energy cut must be nonnegative, got {e}")
    u_max = np.sqrt(e) / np.pi

    def one(d: float, s: float) -> float:
        free, _ = quad(lambda u: np.cos(np.pi * d * u), 0.0, u_max,
                       epsabs=1e-10, epsrel=1e-10, limit=200)
        return free + _scatterer_tail(c, s, u_max)

    vec = np.vectorize(one, otypes=[float])

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return vec(x - y, np.abs(x) + np.abs(y))

    return Kernel(fn=fn, spec={"Limit": {"DeltaLine": {"c": c, "e": e}}})


# ---------------------------------------------------------------------------
# serialization


_LIMIT_BUILDERS = {
    "Sine": lambda cfg: kernel_sine(),
    "BesselMinus": lambda cfg: kernel_bessel(-1),
    "BesselPlus": lambda cfg: kernel_bessel(+1),
    "RobinEdge": lambda cfg: kernel_robin_edge(cfg["c"]),
    "DeltaEdge": lambda cfg: kernel_delta_edge(cfg["c"]),
    "FiniteTSine": lambda cfg: kernel_finite_t_sine(cfg["c"], cfg["lam"]),
    "HalfLineRobin": lambda cfg: half_line_robin_projection(cfg["c"], cfg["e"]),
    "DeltaLine": lambda cfg: delta_line_projection(cfg["c"], cfg["e"]),
}


def parse_kernel_spec(obj) -> Kernel:
    """Build a kernel from its tagged-union JSON form.

    {"Limit": {...}}, {"Group": {"G": .., "N": ..}},
    {"GroundState": {"source": .., "N": ..}},
    {"FiniteT": {"source": .., "T": .., "mu": ..}}.
    """
    if isinstance(obj, str):
        import json

        obj = json.loads(obj)
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError("kernel spec must be a single-key tagged object")
    (tag, cfg), = obj.items()
    if tag == "Limit":
        if len(cfg) != 1:
            raise ValueError("limit spec must carry exactly one variant")
        (variant, params), = cfg.items()
        try:
            return _LIMIT_BUILDERS[variant](params)
        except KeyError:
            raise ValueError(f"unknown limit kernel {variant!r}") from None
    if tag == "Group":
        return group_kernel(cfg["G"], int(cfg["N"]))
    if tag == "GroundState":
        return ground_state_kernel(cfg["source"], int(cfg["N"]))
    if tag == "FiniteT":
        return finite_t_kernel(cfg["source"], float(cfg["T"]), float(cfg["mu"]))
    raise ValueError(f"unknown kernel tag {tag!r}")


def kernel_spec(kernel: Kernel) -> dict:
    """The serializable spec of a kernel; raises for ad-hoc kernels."""
    if kernel.spec is None:
        raise ValueError("kernel was built from a non-serializable source")
    return kernel.spec
