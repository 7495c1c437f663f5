"""Spectral solver for -d^2/dx^2 on (0, 2*pi) under a unitary boundary matrix.

The eigenvalue condition is reduced to a pair of continuous eigenphase
functions of a 2x2 unitary built from boundary trace matrices; eigenvalues are
the parameter points where an eigenphase passes through a multiple of 2*pi.
The phase unwrapping is done in closed form, not numerically, so the scan is
robust to coarse grids.  Degeneracies (at most double here) are resolved
through the singular values of the boundary pencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .boundary import BoundaryData, BoundaryMatrix

__all__ = [
    "EigenMode",
    "NormalizationFailure",
    "RootSearchFailure",
    "Spectrum",
    "WeylReport",
    "eigenfunction_eval",
    "mode_boundary_data",
    "orthonormality_check",
    "secular_det",
    "solve_spectrum",
    "weyl_check",
]

L = 2.0 * np.pi  # box length; everything below is hard-wired to it

GRID_STEP = np.pi / 8.0
DEGENERACY_TOL = 1e-8
ZERO_MODE_TOL = 1e-8
OMEGA_FLOOR = 1e-6


class RootSearchFailure(RuntimeError):
    """Raised when the eigenvalue scan cannot deliver the requested modes."""


class NormalizationFailure(RuntimeError):
    """Raised when a candidate eigenfunction cannot be L2-normalized."""


@dataclass(frozen=True)
class EigenMode:
    """One orthonormal eigenfunction of the boxed Laplacian.

    kind "trig":        psi(x) = a cos(w x) + b sin(w x),   w = sqrt(energy)
    kind "hyperbolic":  psi(x) = a cosh(k x) + b sinh(k x), k = sqrt(-energy)
    kind "linear":      psi(x) = a + b x                    (energy = 0)

    Hyperbolic modes additionally carry ``decay`` = (c1, c2) with
    psi(x) = c1 exp(-k x) + c2 exp(-k (2*pi - x)); that pair is the
    numerically faithful representation for large k (the cosh/sinh pair
    cancels catastrophically) and is what evaluation uses when present.
    """

    kind: str
    energy: float
    a: complex
    b: complex
    index: int = 0
    decay: tuple[complex, complex] | None = None

    @property
    def omega(self) -> float:
        if self.kind != "trig":
            raise ValueError(f"omega undefined for kind {self.kind!r}")
        return float(np.sqrt(self.energy))

    @property
    def kappa(self) -> float:
        if self.kind != "hyperbolic":
            raise ValueError(f"kappa undefined for kind {self.kind!r}")
        return float(np.sqrt(-self.energy))


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenmodes of one boundary condition, up to a scan ceiling."""

    bc: BoundaryMatrix
    modes: tuple[EigenMode, ...]
    e_max: float

    @property
    def energies(self) -> np.ndarray:
        return np.array([m.energy for m in self.modes])

    def __len__(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class WeylReport:
    max_abs_deviation: float
    at_energy: float
    n_modes: int


# ---------------------------------------------------------------------------
# boundary trace matrices
#
# P rows are (value at 2*pi, value at 0) of the basis functions; Q rows are
# the inward derivatives at the same edges.  The self-adjointness relation for
# psi = x1 f1 + x2 f2 becomes (P - iQ) x = U (P + iQ) x.


def _trig_pq(omega: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(L * omega), np.sin(L * omega)
    p = np.array([[c, s], [1.0, 0.0]])
    q = np.array([[omega * s, -omega * c], [0.0, omega]])
    return p, q


def _hyp_pq(kappa: float) -> tuple[np.ndarray, np.ndarray]:
    # in the decaying basis {exp(-k x), exp(-k (2*pi - x))}; bounded for any k
    q_ = np.exp(-L * kappa)
    p = np.array([[q_, 1.0], [1.0, q_]])
    q = np.array([[kappa * q_, -kappa], [-kappa, kappa * q_]])
    return p, q


def _hyp_pq_coshsinh(kappa: float) -> tuple[np.ndarray, np.ndarray]:
    # only for the secular_det diagnostic; overflows for kappa >~ 56
    ch, sh = np.cosh(L * kappa), np.sinh(L * kappa)
    p = np.array([[ch, sh], [1.0, 0.0]])
    q = np.array([[-kappa * sh, -kappa * ch], [0.0, kappa]])
    return p, q


def _linear_pq() -> tuple[np.ndarray, np.ndarray]:
    p = np.array([[1.0, L], [1.0, 0.0]])
    q = np.array([[0.0, -1.0], [0.0, 1.0]])
    return p, q


def _pencil(u: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return (p - 1j * q) - u @ (p + 1j * q)


def secular_det(bc: BoundaryMatrix, e: float) -> complex:
    """det of the boundary pencil at trial energy e (diagnostic).

    Uses the (cos, sin) basis for e > 0, (cosh, sinh) for e < 0 and (1, x)
    at e = 0, so the value jumps across e = 0 while the zero set does not.
    """
    u = bc.matrix
    if e > 0:
        p, q = _trig_pq(np.sqrt(e))
    elif e < 0:
        p, q = _hyp_pq_coshsinh(np.sqrt(-e))
    else:
        p, q = _linear_pq()
    return complex(np.linalg.det(_pencil(u, p, q)))


# ---------------------------------------------------------------------------
# continuous eigenphases
#
# With A = P - iQ, B = P + iQ (P, Q real) the condition det(A - U B) = 0 is
# equivalent to 1 in spec(V), V = U^H A B^{-1}, and V is unitary.  Its two
# eigenphases are phi/2 +- rho with e^{i phi} = det V; phi is made globally
# continuous through a closed-form factorization of det B.


def _arg_det_b_trig(omega: float) -> float:
    # det B = (i/2) [(1+w)^2 e^{i L w} - (1-w)^2 e^{-i L w}]
    r = ((1.0 - omega) / (1.0 + omega)) ** 2
    tail = 1.0 - r * np.exp(-2j * L * omega)
    return 0.5 * np.pi + L * omega + np.angle(tail)


def _arg_det_b_hyp(kappa: float) -> float:
    # det B = -(1 - i k)^2 [1 - e^{-2 L k} ((1+ik)/(1-ik))^2]
    q2 = np.exp(-2.0 * L * kappa)
    rot = np.exp(4j * np.arctan(kappa))
    return np.pi - 2.0 * np.arctan(kappa) + np.angle(1.0 - q2 * rot)


def _alpha_u(bc: BoundaryMatrix) -> float:
    return float(-np.angle(np.linalg.det(bc.matrix)))


def _theta_pair(bc: BoundaryMatrix, x: float, sector: str, alpha: float) -> tuple[float, float]:
    if sector == "trig":
        p, q = _trig_pq(x)
        phi = alpha - 2.0 * _arg_det_b_trig(x)
    else:
        p, q = _hyp_pq(x)
        phi = alpha - 2.0 * _arg_det_b_hyp(x)
    a = p - 1j * q
    b = p + 1j * q
    v = bc.matrix.conj().T @ a @ np.linalg.inv(b)
    c = np.clip((np.exp(-0.5j * phi) * np.trace(v)).real / 2.0, -1.0, 1.0)
    rho = float(np.arccos(c))
    return phi / 2.0 + rho, phi / 2.0 - rho


def _branch_roots(
    bc: BoundaryMatrix, sector: str, x_lo: float, x_hi: float, alpha: float
) -> list[float]:
    """All parameter points in [x_lo, x_hi] where an eigenphase hits 2*pi*Z."""
    n_cells = max(2, int(np.ceil((x_hi - x_lo) / GRID_STEP)))
    nodes = np.linspace(x_lo, x_hi, n_cells + 1)
    thetas = np.array([_theta_pair(bc, x, sector, alpha) for x in nodes])
    roots: list[float] = []
    for branch in (0, 1):
        th = thetas[:, branch]
        for i in range(n_cells):
            t0, t1 = th[i], th[i + 1]
            m_lo = int(np.ceil(min(t0, t1) / (2.0 * np.pi) - 1e-12))
            m_hi = int(np.floor(max(t0, t1) / (2.0 * np.pi) + 1e-12))
            for m in range(m_lo, m_hi + 1):
                level = 2.0 * np.pi * m
                f0, f1 = t0 - level, t1 - level
                if abs(f0) < 1e-13:
                    roots.append(float(nodes[i]))
                    continue
                if abs(f1) < 1e-13:
                    if i == n_cells - 1:
                        roots.append(float(nodes[i + 1]))
                    continue
                if f0 * f1 < 0.0:
                    def fn(x: float, _b: int = branch, _lv: float = level) -> float:
                        return _theta_pair(bc, x, sector, alpha)[_b] - _lv

                    roots.append(float(brentq(fn, nodes[i], nodes[i + 1], xtol=1e-13, rtol=8.9e-16)))
    return sorted(roots)


# ---------------------------------------------------------------------------
# mode construction


def _gram_trig(omega: float) -> np.ndarray:
    s4 = np.sin(2.0 * L * omega) / (4.0 * omega)
    ics = np.sin(L * omega) ** 2 / (2.0 * omega)
    return np.array([[np.pi + s4, ics], [ics, np.pi - s4]])


def _gram_hyp_decay(kappa: float) -> np.ndarray:
    q_ = np.exp(-L * kappa)
    diag = (1.0 - q_ * q_) / (2.0 * kappa)
    off = L * q_
    return np.array([[diag, off], [off, diag]])


def _gram_linear() -> np.ndarray:
    return np.array([[L, L * L / 2.0], [L * L / 2.0, L**3 / 3.0]])


def _phase_fix(x: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(x)))
    if np.abs(x[j]) == 0.0:
        return x
    return x * (x[j].conjugate() / np.abs(x[j]))


def _orthonormalize(vecs: list[np.ndarray], gram: np.ndarray) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vecs:
        w = v.astype(complex)
        for u in out:
            w = w - (u.conj() @ gram @ w) * u
        nrm2 = (w.conj() @ gram @ w).real
        if not np.isfinite(nrm2) or nrm2 <= 0.0:
            raise NormalizationFailure(
                f"Gram norm {nrm2!r} for candidate eigenfunction; boundary coupling too extreme"
            )
        out.append(_phase_fix(w / np.sqrt(nrm2)))
    return out


def _modes_at(bc: BoundaryMatrix, sector: str, x: float, group_size: int) -> list[EigenMode]:
    u = bc.matrix
    if sector == "trig":
        p, q = _trig_pq(x)
        gram = _gram_trig(x)
        energy = x * x
    else:
        p, q = _hyp_pq(x)
        gram = _gram_hyp_decay(x)
        energy = -x * x
    m = _pencil(u, p, q)
    scale = np.linalg.norm(p - 1j * q) + np.linalg.norm(u @ (p + 1j * q))
    _, s, vh = np.linalg.svd(m)
    mult = min(2, max(int(np.sum(s <= DEGENERACY_TOL * scale)), 1, group_size))
    # right singular vectors, smallest singular value last; emit the pair
    # largest-first so the deterministic phase choice is reproducible
    vecs = [vh[1].conj()] if mult == 1 else [vh[0].conj(), vh[1].conj()]
    coeffs = _orthonormalize(vecs, gram)
    modes = []
    for cf in coeffs:
        if sector == "trig":
            modes.append(EigenMode("trig", energy, complex(cf[0]), complex(cf[1])))
        else:
            c1, c2 = complex(cf[0]), complex(cf[1])
            qfac = np.exp(-L * x)
            a = c1 + c2 * qfac
            b = -c1 + c2 * qfac
            modes.append(EigenMode("hyperbolic", energy, a, b, decay=(c1, c2)))
    return modes


def _zero_modes(bc: BoundaryMatrix) -> list[EigenMode]:
    u = bc.matrix
    p, q = _linear_pq()
    m = _pencil(u, p, q)
    scale = np.linalg.norm(p - 1j * q) + np.linalg.norm(u @ (p + 1j * q))
    _, s, vh = np.linalg.svd(m)
    mult = int(np.sum(s <= ZERO_MODE_TOL * scale))
    if mult == 0:
        return []
    vecs = [vh[2 - k].conj() for k in range(1, mult + 1)][::-1]
    coeffs = _orthonormalize(vecs, _gram_linear())
    return [EigenMode("linear", 0.0, complex(c[0]), complex(c[1])) for c in coeffs]


def _group_roots(roots: list[float], atol_scale: float = 1e-6) -> list[tuple[float, int]]:
    groups: list[tuple[float, int]] = []
    for r in roots:
        if groups and abs(r - groups[-1][0]) <= atol_scale * max(1.0, abs(r)):
            x0, n = groups[-1]
            groups[-1] = ((x0 * n + r) / (n + 1), n + 1)
        else:
            groups.append((r, 1))
    return groups


def _refine_double(bc: BoundaryMatrix, sector: str, x0: float, alpha: float) -> float:
    """Polish a double root via the branch-phase sum.

    Individual eigenphase branches have a kink at a tangency, so brentq only
    locates such roots to about sqrt(machine eps).  Their sum phi is smooth
    and crosses 2*pi*(m1 + m2) transversally at the double root; root-find on
    that instead.
    """
    argd = _arg_det_b_trig if sector == "trig" else _arg_det_b_hyp

    def phi(x: float) -> float:
        return alpha - 2.0 * argd(x)

    target = 2.0 * np.pi * np.round(phi(x0) / (2.0 * np.pi))
    h = 1e-5 * max(1.0, abs(x0))
    lo, hi = max(x0 - h, OMEGA_FLOOR / 2.0), x0 + h
    f_lo, f_hi = phi(lo) - target, phi(hi) - target
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        return x0
    return float(brentq(lambda x: phi(x) - target, lo, hi, xtol=1e-14, rtol=8.9e-16))


def _kappa_ceiling(bc: BoundaryMatrix) -> float:
    """Scan ceiling for bound states: 2x the largest plausible coupling.

    For labeled presets the coupling is read off the parameters.  For raw
    matrices it is estimated from the Cayley transform of the eigenphases,
    clipped at 64 (a bound state needs an attractive coupling of that order
    to push kappa anywhere near the clip).
    """
    if bc.label in ("dirichlet", "neumann", "zaremba", "periodic", "pseudo_periodic"):
        return 2.0
    if bc.label in ("robin", "dirichlet_robin"):
        return 2.0 * max(1.0, abs(np.tan(bc.params[0] / 2.0)))
    if bc.label == "delta":
        return 2.0 * max(1.0, abs(bc.params[0]))
    phases = np.angle(np.linalg.eigvals(bc.matrix))
    couplings = np.abs(np.tan(phases / 2.0))
    couplings = couplings[np.isfinite(couplings)]
    top = float(np.max(couplings)) if couplings.size else 1.0
    return 2.0 * max(1.0, min(top, 64.0))


def solve_spectrum(
    bc: BoundaryMatrix,
    count: int | None = None,
    e_max: float | None = None,
) -> Spectrum:
    """Solve for all eigenvalues up to e_max, or for the first `count` modes.

    Modes come back sorted by energy, L2-normalized with deterministic phases
    (largest coefficient real positive), orthonormalized within degenerate
    pairs.  Raises RootSearchFailure if the scan cannot deliver.
    """
    if (count is None) == (e_max is None):
        raise ValueError("give exactly one of count, e_max")
    if count is not None and count < 1:
        raise ValueError("count must be positive")

    alpha = _alpha_u(bc)
    target = count
    ceiling = e_max if e_max is not None else ((target + 6) / 2.0) ** 2

    for _attempt in range(7):
        modes: list[EigenMode] = []

        kappa_max = _kappa_ceiling(bc)
        neg_groups = _group_roots(_branch_roots(bc, "hyp", OMEGA_FLOOR, kappa_max, alpha))
        for kappa, size in neg_groups:
            if size >= 2:
                kappa = _refine_double(bc, "hyp", kappa, alpha)
            modes.extend(_modes_at(bc, "hyp", kappa, size))
        modes.sort(key=lambda m: m.energy)

        omega_max = float(np.sqrt(ceiling))
        pos_groups = []
        if omega_max > OMEGA_FLOOR:
            pos_groups = _group_roots(_branch_roots(bc, "trig", OMEGA_FLOOR, omega_max, alpha))

        # The linear sector's singular values scale with the distance to the
        # nearest eigenvalue, so a root just above the scan floor would be
        # double-counted as a zero mode; drop one for each near-zero root.
        zero = _zero_modes(bc)
        n_near = sum(size for x, size in neg_groups if x <= 2e-4)
        n_near += sum(size for x, size in pos_groups if x <= 2e-4)
        modes.extend(zero[: max(0, len(zero) - n_near)])

        for omega, size in pos_groups:
            if size >= 2:
                omega = _refine_double(bc, "trig", omega, alpha)
            modes.extend(_modes_at(bc, "trig", omega, size))

        modes = [m for m in modes if m.energy <= ceiling + 1e-9]
        if target is None or len(modes) >= target:
            break
        ceiling *= 1.8
    else:
        raise RootSearchFailure(
            f"found {len(modes)} modes below e_max={ceiling:.3g}, wanted {target}"
        )

    if target is not None:
        modes = modes[:target]
        ceiling = modes[-1].energy if modes else 0.0
    modes = [
        EigenMode(m.kind, m.energy, m.a, m.b, index=i, decay=m.decay)
        for i, m in enumerate(modes)
    ]
    return Spectrum(bc=bc, modes=tuple(modes), e_max=float(ceiling))


# ---------------------------------------------------------------------------
# evaluation and checks


def eigenfunction_eval(mode: EigenMode, x: np.ndarray | float) -> np.ndarray:
    """psi(x), vectorized; stable for hyperbolic modes at any kappa."""
    x = np.asarray(x, dtype=float)
    if mode.kind == "trig":
        w = mode.omega
        return mode.a * np.cos(w * x) + mode.b * np.sin(w * x)
    if mode.kind == "linear":
        return mode.a + mode.b * x
    k = mode.kappa
    if mode.decay is not None:
        c1, c2 = mode.decay
        return c1 * np.exp(-k * x) + c2 * np.exp(-k * (L - x))
    return mode.a * np.cosh(k * x) + mode.b * np.sinh(k * x)


def mode_boundary_data(mode: EigenMode) -> BoundaryData:
    """Boundary trace (values and derivatives at 2*pi and 0) of a mode."""
    if mode.kind == "trig":
        w = mode.omega
        c, s = np.cos(L * w), np.sin(L * w)
        return BoundaryData(
            psi_minus=mode.a * c + mode.b * s,
            psi_plus=mode.a,
            dpsi_minus=w * (-mode.a * s + mode.b * c),
            dpsi_plus=mode.b * w,
        )
    if mode.kind == "linear":
        return BoundaryData(
            psi_minus=mode.a + mode.b * L,
            psi_plus=mode.a,
            dpsi_minus=mode.b,
            dpsi_plus=mode.b,
        )
    k = mode.kappa
    if mode.decay is not None:
        c1, c2 = mode.decay
        q_ = np.exp(-L * k)
        return BoundaryData(
            psi_minus=c1 * q_ + c2,
            psi_plus=c1 + c2 * q_,
            dpsi_minus=k * (-c1 * q_ + c2),
            dpsi_plus=k * (-c1 + c2 * q_),
        )
    ch, sh = np.cosh(L * k), np.sinh(L * k)
    return BoundaryData(
        psi_minus=mode.a * ch + mode.b * sh,
        psi_plus=mode.a,
        dpsi_minus=k * (mode.a * sh + mode.b * ch),
        dpsi_plus=mode.b * k,
    )


def orthonormality_check(spectrum: Spectrum, n_quad: int = 2048) -> float:
    """Max deviation of the L2 Gram matrix from the identity (quadrature)."""
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * L * (nodes + 1.0)
    w = 0.5 * L * weights
    psi = np.array([eigenfunction_eval(m, x) for m in spectrum.modes])
    gram = (psi.conj() * w) @ psi.T
    return float(np.max(np.abs(gram - np.eye(len(spectrum.modes)))))


def weyl_check(bc: BoundaryMatrix, e_max: float = 1e4) -> WeylReport:
    """Sup over energies up to e_max of |counting function - 2 sqrt(E)|.

    The counting deviation is bounded by the boundary-condition deficiency;
    values above ~3 indicate missed or spurious roots.
    """
    spec = solve_spectrum(bc, e_max=e_max)
    energies = np.sort(spec.energies)
    worst, where = 0.0, 0.0

    def check(dev: float, e: float) -> None:
        nonlocal worst, where
        if dev > worst:
            worst, where = dev, e

    for j, e in enumerate(energies):
        if e < 0:
            continue
        rt = 2.0 * np.sqrt(max(e, 0.0))
        check(abs(j - rt), e)          # just below the jump
        check(abs(j + 1 - rt), e)      # just above
    n_total = len(energies)
    check(abs(n_total - 2.0 * np.sqrt(e_max)), e_max)
    return WeylReport(max_abs_deviation=float(worst), at_energy=float(where), n_modes=n_total)
