"""Characteristic matrix of a neutral delay system and root-chain geometry.

For d/dt[z(t) - A z(t-h)] = L z_t + B u(t) the characteristic matrix is

    D(lam) = -lam I + lam e^{-lam h} A
             + sum_seg [ e^{lam a} (e^{lam (b-a)} - 1) ] A2_seg
             + sum_seg [ (b-a) e^{lam a} phi((b-a) lam) ] A3_seg
             + sum_atoms e^{lam theta_j} A3_j

with phi(x) = (e^x - 1)/x.  Both segment coefficients are closed forms of the
exponential integrals over [a, b], written so that the removable singularity
at lam = 0 never produces cancellation: phi and its derivative switch to a
short Taylor series for small arguments.  D is therefore evaluated with no
quadrature error and is an entire function of lam.

Root chains: every eigenvalue mu != 0 of A generates the vertical sequence of
asymptotic root locations (ln|mu| + i(arg mu + 2 pi k))/h, k integer.  Large-k
roots of det D cluster around those points, with total multiplicity equal to
the rootspace dimension of mu; the chain grid records the centers and a safe
circle radius (a fraction of one third of the minimal center separation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import cluster_eigenvalues, default_cluster_tol
from .errors import NoChainsError
from .sysmodel import NeutralSystem

_SERIES_CUT = 1e-4


def _phi0(x: np.ndarray) -> np.ndarray:
    """(e^x - 1)/x, series-guarded near 0."""
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUT
    xs = x[small]
    out[small] = 1.0 + xs / 2.0 + xs**2 / 6.0 + xs**3 / 24.0 + xs**4 / 120.0
    xl = x[~small]
    out[~small] = (np.exp(xl) - 1.0) / xl
    return out


def _phi1(x: np.ndarray) -> np.ndarray:
    """d/dx[(e^x - 1)/x], series-guarded near 0."""
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUT
    xs = x[small]
    out[small] = 0.5 + xs / 3.0 + xs**2 / 8.0 + xs**3 / 30.0 + xs**4 / 144.0
    xl = x[~small]
    out[~small] = ((xl - 1.0) * np.exp(xl) + 1.0) / xl**2
    return out


def _expm1c(x: np.ndarray) -> np.ndarray:
    """e^x - 1 computed as x * phi0(x) so it stays accurate near 0."""
    x = np.asarray(x, dtype=complex)
    return x * _phi0(x)


def delta_batch(sys_: NeutralSystem, lams) -> np.ndarray:
    """Characteristic matrix at an array of points; shape (N, n, n)."""
    lam = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = sys_.n
    eye = np.eye(n)
    out = np.zeros((lam.size, n, n), dtype=complex)
    out -= lam[:, None, None] * eye
    out += (lam * np.exp(-lam * sys_.h))[:, None, None] * sys_.A_minus1

    bp2, seg2 = sys_.A2.breakpoints, sys_.A2.segments
    for i in range(seg2.shape[0]):
        M = seg2[i]
        if not np.any(M):
            continue
        a, b = bp2[i], bp2[i + 1]
        # lam * integral_a^b e^{lam s} ds = e^{lam a}(e^{lam (b-a)} - 1), exact at lam = 0
        coeff = np.exp(lam * a) * _expm1c(lam * (b - a))
        out += coeff[:, None, None] * M

    bp3, seg3 = sys_.A3.breakpoints, sys_.A3.segments
    for i in range(seg3.shape[0]):
        M = seg3[i]
        if not np.any(M):
            continue
        a, b = bp3[i], bp3[i + 1]
        coeff = (b - a) * np.exp(lam * a) * _phi0(lam * (b - a))
        out += coeff[:, None, None] * M

    for theta, M in sys_.A3.atoms:
        out += np.exp(lam * theta)[:, None, None] * M
    return out


def delta(sys_: NeutralSystem, lam: complex) -> np.ndarray:
    """Characteristic matrix at a single point; shape (n, n)."""
    return delta_batch(sys_, [lam])[0]


def delta_derivative_batch(sys_: NeutralSystem, lams) -> np.ndarray:
    """Entrywise d/dlam of the characteristic matrix, term by term in closed form."""
    lam = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = sys_.n
    h = sys_.h
    out = np.zeros((lam.size, n, n), dtype=complex)
    out -= np.eye(n)
    out += ((1.0 - lam * h) * np.exp(-lam * h))[:, None, None] * sys_.A_minus1

    bp2, seg2 = sys_.A2.breakpoints, sys_.A2.segments
    for i in range(seg2.shape[0]):
        M = seg2[i]
        if not np.any(M):
            continue
        a, b = bp2[i], bp2[i + 1]
        w = b - a
        coeff = np.exp(lam * a) * (a * _expm1c(lam * w) + w * np.exp(lam * w))
        out += coeff[:, None, None] * M

    bp3, seg3 = sys_.A3.breakpoints, sys_.A3.segments
    for i in range(seg3.shape[0]):
        M = seg3[i]
        if not np.any(M):
            continue
        a, b = bp3[i], bp3[i + 1]
        w = b - a
        coeff = w * np.exp(lam * a) * (a * _phi0(lam * w) + w * _phi1(lam * w))
        out += coeff[:, None, None] * M

    for theta, M in sys_.A3.atoms:
        out += (theta * np.exp(lam * theta))[:, None, None] * M
    return out


def delta_derivative(sys_: NeutralSystem, lam: complex) -> np.ndarray:
    return delta_derivative_batch(sys_, [lam])[0]


def det_delta(sys_: NeutralSystem, lam: complex) -> complex:
    """det D(lam) via pivoted elimination."""
    return complex(np.linalg.det(delta(sys_, lam)))


def det_delta_batch(sys_: NeutralSystem, lams) -> np.ndarray:
    return np.linalg.det(delta_batch(sys_, lams))


@dataclass(frozen=True)
class ChainEigenvalue:
    mu: complex
    rootspace_dim: int


@dataclass(frozen=True)
class ChainGrid:
    """Asymptotic root-chain centers and the circle radius used around them."""

    eigenvalues: tuple[ChainEigenvalue, ...]
    centers: dict
    radius: float
    r0: float
    h: float

    def center(self, m: int, k: int) -> complex:
        return self.centers[(m, k)]

    def label_for(self, lam: complex):
        """(m, k) of the chain circle containing lam, or None."""
        for (m, k), c in self.centers.items():
            if abs(lam - c) <= self.radius:
                return (m, k)
        return None


def chain_centers_radius0(mus, h: float) -> float:
    """One third of the minimal distance between distinct chain centers.

    Within one chain consecutive centers are 2 pi / h apart; across chains the
    minimum over the integer offset reduces the angle difference to [-pi, pi].
    """
    best = 2.0 * np.pi
    mus = list(mus)
    for i in range(len(mus)):
        for j in range(i + 1, len(mus)):
            dlog = np.log(abs(mus[i])) - np.log(abs(mus[j]))
            darg = np.angle(mus[i]) - np.angle(mus[j])
            darg -= 2.0 * np.pi * np.round(darg / (2.0 * np.pi))
            best = min(best, float(np.hypot(dlog, darg)))
    return best / (3.0 * h)


def chain_grid(
    sys_: NeutralSystem,
    k_min: int,
    k_max: int,
    radius_fraction: float = 0.5,
    zero_tol: float | None = None,
) -> ChainGrid:
    """Chain centers for every nonzero eigenvalue of the difference matrix and
    k in [k_min, k_max], with radius = radius_fraction * r0.

    Eigenvalues with |mu| below zero_tol have no finite chain center and are
    skipped; if all of them are (numerically) zero the spectrum is
    retarded-like and NoChainsError is raised.
    """
    if not (0.0 < radius_fraction <= 1.0):
        raise ValueError("radius_fraction must lie in (0, 1]")
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    A = sys_.A_minus1
    if zero_tol is None:
        scale = float(np.linalg.norm(A, 2)) if np.any(A) else 0.0
        zero_tol = np.sqrt(np.finfo(float).eps) * max(1.0, scale)
    clusters, _ = cluster_eigenvalues(A, default_cluster_tol(A))
    kept = [(mu, p) for mu, p in clusters if abs(mu) > zero_tol]
    if not kept:
        raise NoChainsError(
            "all eigenvalues of the difference matrix vanish; no root chains"
        )
    r0 = chain_centers_radius0([mu for mu, _ in kept], sys_.h)
    centers = {}
    for m, (mu, _) in enumerate(kept):
        base = np.log(abs(mu)) + 1j * np.angle(mu)  # arg branch (-pi, pi]
        for k in range(k_min, k_max + 1):
            centers[(m, k)] = complex((base + 2j * np.pi * k) / sys_.h)
    return ChainGrid(
        eigenvalues=tuple(ChainEigenvalue(mu, p) for mu, p in kept),
        centers=centers,
        radius=radius_fraction * r0,
        r0=r0,
        h=sys_.h,
    )


@dataclass(frozen=True)
class EigenvectorCandidate:
    """Null vector of D(lam) packaged as a generator eigenvector.

    The abstract eigenvector attached to (lam, C) has head C - e^{-lam h} A C
    and history segment theta -> e^{lam theta} C; the tail is kept symbolic.
    """

    lam: complex
    C: np.ndarray
    head: np.ndarray
    residual: float
    tol: float

    def tail(self, theta) -> np.ndarray:
        return np.exp(self.lam * np.asarray(theta))[..., None] * self.C


def kernel_basis(sys_: NeutralSystem, lam: complex, tol: float = 1e-6) -> np.ndarray:
    """Orthonormal basis of the numerical null space of D(lam), shape (n, k).

    tol is relative to the largest singular value; at refined roots of
    det D the null directions sit many orders below the cutoff.
    """
    D = delta(sys_, lam)
    _, sigma, vh = np.linalg.svd(D)
    smax = sigma[0] if sigma.size else 0.0
    null = sigma <= tol * max(smax, 1e-300)
    return vh[null].conj().T


def eigenvector_candidates(
    sys_: NeutralSystem, lam: complex, tol: float = 1e-6
) -> list[EigenvectorCandidate]:
    """One candidate per null direction of D(lam); empty if D is regular there."""
    basis = kernel_basis(sys_, lam, tol)
    D = delta(sys_, lam)
    scale = float(np.linalg.norm(D, 2))
    out = []
    for j in range(basis.shape[1]):
        C = basis[:, j]
        residual = float(np.linalg.norm(D @ C))
        head = C - np.exp(-lam * sys_.h) * (sys_.A_minus1 @ C)
        out.append(
            EigenvectorCandidate(
                lam=complex(lam), C=C, head=head, residual=residual, tol=tol * scale
            )
        )
    return out


def subspace_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Principal angle between the complex lines spanned by u and v, in radians."""
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    c = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.arccos(min(1.0, c)))
