"""Truncated Bergman space L^p_a(B_n) with normalised volume measure dv.

Orthonormal basis e_a(z) = z^a sqrt((n+|a|)! / (a! n!)), |a| <= N.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre

from .errors import NumericalError, ParameterError, TruncationWarning
from .fock import AnalyticVector, QuadratureRule, quadrature_gram
from .geometry import as_points, mobius, norm2, dot
from .indexing import basis_size, evaluate_monomials, monomial_table, multi_indices


@dataclass(frozen=True)
class BergmanParams:
    p: float = 2.0
    n: int = 1
    N: int = 20
    quad: str = "polar-jacobi"
    s: float | None = None
    radial_nodes: int | None = None
    angular_nodes: int | None = None

    def __post_init__(self):
        if not 1 < self.p < np.inf:
            raise ParameterError("p must lie in (1, inf)")
        if self.n < 1 or self.N < 0:
            raise ParameterError("need n >= 1 and N >= 0")
        if self.s is not None and not 0 < self.s < min(self.p, self.q):
            raise ParameterError("s must satisfy 0 < s < min(p, q)")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def s_value(self) -> float:
        return self.s if self.s is not None else min(self.p, self.q) / 2

    @property
    def dim(self) -> int:
        return basis_size(self.n, self.N)

    def with_(self, **kw) -> "BergmanParams":
        return replace(self, **kw)


# ------------------------------------------------------------------------ basis


@lru_cache(maxsize=64)
def _basis_scale(n: int, N: int) -> np.ndarray:
    deg = multi_indices(n, N).sum(axis=1)
    return np.exp(0.5 * (gammaln(n + deg + 1) - gammaln(n + 1)))


def bergman_basis(z, params: BergmanParams) -> np.ndarray:
    """Matrix of e_a(z); z of shape (..., n), result (..., dim)."""
    z = as_points(z, params.n)
    table = monomial_table(z, params.N)
    return evaluate_monomials(table, params.n, params.N) * _basis_scale(params.n, params.N)


def bergman_kernel(z, w) -> np.ndarray:
    """K_z(w) = (1 - w . conj z)^{-(n+1)}."""
    z = as_points(z)
    w = as_points(w, z.shape[-1])
    return (1.0 - dot(w, z)) ** (-(z.shape[-1] + 1))


def _check_truncation(z, params: BergmanParams):
    if params.N > 0 and np.any(np.sqrt(norm2(z)) > 1 - 10 / params.N):
        warnings.warn("|z| close to the boundary for this truncation", TruncationWarning, stacklevel=3)


def bergman_kernel_vectors(z, params: BergmanParams, kind: str = "K", p: float | None = None, warn: bool = True) -> np.ndarray:
    """Kernel coefficient rows.

    kind 'K' gives K_z, 'k' the L^2-normalised k_z, 'kp' the L^p-adapted
    k_z^{(p)} = (1-|z|^2)^{(n+1)/q} K_z.
    """
    z = as_points(z, params.n)
    if np.any(norm2(z) >= 1):
        from .errors import DomainError

        raise DomainError("kernel point outside the ball")
    if warn:
        _check_truncation(z, params)
    K = np.conj(bergman_basis(z, params))
    n = params.n
    if kind == "K":
        return K
    if kind == "k":
        return K * ((1 - norm2(z)) ** ((n + 1) / 2))[..., None]
    if kind == "kp":
        pp = params.p if p is None else p
        qq = pp / (pp - 1)
        return K * ((1 - norm2(z)) ** ((n + 1) / qq))[..., None]
    raise ParameterError(f"unknown kernel kind {kind!r}")


def bergman_kernel_vector(z, params: BergmanParams) -> AnalyticVector:
    return AnalyticVector(bergman_kernel_vectors(z, params, "K"), "bergman", params)


def normalized_kernels(z, p: float, params: BergmanParams) -> tuple[AnalyticVector, AnalyticVector]:
    """(k_z, k_z^{(p)})."""
    k = bergman_kernel_vectors(z, params, "k")
    kp = bergman_kernel_vectors(z, params, "kp", p=p)
    return AnalyticVector(k, "bergman", params), AnalyticVector(kp, "bergman", params)


def kernel_norm(z, n: int = 1) -> np.ndarray:
    """Exact ||K_z||_2 = (1-|z|^2)^{-(n+1)/2}."""
    z = as_points(z, n)
    return (1 - norm2(z)) ** (-(n + 1) / 2)


# ------------------------------------------------------------------- quadrature


@lru_cache(maxsize=32)
def _simplex_rule(n: int, m: int):
    """Nodes/weights for the uniform (Dirichlet(1,...,1)) law on the (n-1)-simplex."""
    if n == 1:
        return np.ones((1, 1)), np.ones(1)
    # first coordinate ~ Beta(1, n-1): density (n-1)(1-u)^{n-2}
    x, w = roots_jacobi(m, 0, n - 2)
    u = (1 - x) / 2
    w = w / w.sum()
    rest, rw = _simplex_rule(n - 1, m)
    U = np.repeat(u, len(rw))
    nodes = np.concatenate([U[:, None], (1 - U)[:, None] * np.tile(rest, (len(u), 1))], axis=1)
    weights = np.outer(w, rw).ravel()
    return nodes, weights


@lru_cache(maxsize=32)
def _sphere_rule(n: int, m: int, angular: int):
    """Rule on the unit sphere of C^n with normalised surface measure."""
    simp, sw = _simplex_rule(n, m)
    theta = 2 * np.pi * np.arange(angular) / angular
    phases = np.exp(1j * theta)
    grids = np.meshgrid(*([np.arange(angular)] * n), indexing="ij")
    ang_idx = np.stack([g.ravel() for g in grids], axis=-1)
    ph = phases[ang_idx]  # (angular^n, n)
    nodes = np.sqrt(simp)[:, None, :] * ph[None, :, :]
    weights = np.repeat(sw / angular**n, len(ph))
    return nodes.reshape(-1, n), weights


@lru_cache(maxsize=64)
def _disk_rule(n: int, radial: int, angular: int, simplex: int, measure: str, beta_max: float):
    zeta, sw = _sphere_rule(n, simplex, angular)
    if measure == "dv":
        # |w|^2 = R has density n R^{n-1} on [0, 1]
        x, w = roots_jacobi(radial, 0, n - 1)
        R = (1 + x) / 2
        w = w / w.sum()
    else:
        # geodesic radius: d lambda = 2n sinh^{2n-1} b cosh b db d sigma
        x, w = roots_legendre(radial)
        b = beta_max * (x + 1) / 2
        w = w * beta_max / 2 * 2 * n * np.sinh(b) ** (2 * n - 1) * np.cosh(b)
        R = np.tanh(b) ** 2
    nodes = (np.sqrt(R)[:, None, None] * zeta[None, :, :]).reshape(-1, n)
    weights = np.outer(w, sw).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def disk_quadrature(
    params: BergmanParams,
    degree: int | None = None,
    measure: str = "dv",
    rho_max: float | None = None,
    refine: int = 0,
) -> QuadratureRule:
    """Radial Gauss rule x angular trapezoid on B_n.

    ``measure='dv'`` integrates against normalised volume and is exact for
    w^a conj(w)^b with |a|, |b| <= degree.  ``measure='dlambda'`` integrates
    against the invariant measure over |w| <= rho_max (Gauss-Legendre in the
    geodesic radius, which keeps the (1-|w|^2)^{-(n+1)} growth smooth).
    """
    degree = 2 * params.N if degree is None else degree
    if degree < 1:
        raise ParameterError("quadrature degree must be at least 1")
    radial = (params.radial_nodes or degree // 2 + 8) + 8 * refine
    angular = (params.angular_nodes or 2 * degree + 4) + 8 * refine
    simplex = degree // 2 + 2 + 4 * refine
    if measure == "dv":
        nodes, weights = _disk_rule(params.n, radial, angular, simplex, "dv", 0.0)
        return QuadratureRule(nodes, weights, "dv")
    if measure in ("dlambda", "dλ", "dlambda-truncated"):
        if rho_max is None or not 0 < rho_max < 1:
            raise ParameterError("the d lambda rule needs 0 < rho_max < 1")
        nodes, weights = _disk_rule(params.n, radial, angular, simplex, "dlambda", float(np.arctanh(rho_max)))
        return QuadratureRule(nodes, weights, f"dlambda<{rho_max:g}")
    raise ParameterError(f"unknown measure {measure!r}")


# ---------------------------------------------------------------- norms, pairing


def _coeffs(f) -> np.ndarray:
    return np.asarray(f.coeffs if isinstance(f, AnalyticVector) else f, dtype=complex)


def _p_norm_level(c, params, p, level):
    deg = 4 * params.N + 48 + 32 * level if params.n == 1 else 2 * params.N + 8 + 8 * level
    rule = disk_quadrature(params, degree=deg)
    vals = bergman_basis(rule.nodes, params) @ c
    return float(np.sum(rule.weights * np.abs(vals) ** p) ** (1 / p))


def bergman_p_norm(f, params: BergmanParams, p: float | None = None, check: bool = True) -> float:
    """(int |f|^p dv)^{1/p}; p = 2 is exact, other p checked by refinement to 1e-6."""
    p = params.p if p is None else float(p)
    if p < 1:
        raise ParameterError("p-norms need p >= 1")
    c = _coeffs(f)
    if p == 2:
        rule = disk_quadrature(params)
        vals = bergman_basis(rule.nodes, params) @ c
        return float(np.sqrt(np.sum(rule.weights * np.abs(vals) ** 2)))
    value = _p_norm_level(c, params, p, 0)
    if check:
        finer = _p_norm_level(c, params, p, 1)
        if abs(finer - value) > 1e-6 * max(finer, 1e-300):
            raise NumericalError(f"L^p norm quadrature did not settle: {value} vs {finer}")
        value = finer
    return value


def bergman_pairing(f, g, params: BergmanParams) -> complex:
    rule = disk_quadrature(params)
    E = bergman_basis(rule.nodes, params)
    return complex(np.sum(rule.weights * (E @ _coeffs(f)) * np.conj(E @ _coeffs(g))))


def sup_norm_grid(n: int = 1, count: int = 2048, radius: float = 0.999) -> np.ndarray:
    """Fixed low-discrepancy sample of |w| <= radius, dense towards the boundary.

    Geodesic radii are equally spaced (so Euclidean radii crowd the boundary)
    and directions follow the golden angle; n > 1 uses a Halton sequence.
    """
    bmax = np.arctanh(radius)
    k = np.arange(count)
    beta = bmax * (k + 0.5) / count
    r = np.tanh(beta)
    if n == 1:
        ang = k * np.pi * (3 - np.sqrt(5))
        return (r * np.exp(1j * ang))[:, None]
    from scipy.stats import qmc

    h = qmc.Halton(d=2 * n - 1, scramble=False).random(count)
    g = np.sqrt(-2 * np.log(np.clip(h[:, : n], 1e-12, 1))) * np.exp(2j * np.pi * np.roll(h, 1, axis=1)[:, :n])
    g /= np.sqrt(norm2(g))[:, None]
    return g * r[:, None]


def sup_norm_estimate(f, params: BergmanParams, count: int = 2048) -> float:
    pts = sup_norm_grid(params.n, count)
    return float(np.max(np.abs(bergman_basis(pts, params) @ _coeffs(f))))


# -------------------------------------------------------------------- U_z


def eta(u, z) -> np.ndarray:
    """Unimodular factor in U_u k_z = eta(u, z) k_{phi_u(z)}."""
    u = as_points(u)
    z = as_points(z, u.shape[-1])
    n = u.shape[-1]
    d = 1 - dot(u, z)
    return (np.abs(d) / d) ** (n + 1)


def _u_matrix_rule(z, params, degree):
    rule = disk_quadrature(params, degree=degree)
    w = rule.nodes
    n = params.n
    kz = (1 - norm2(z)) ** ((n + 1) / 2) / (1 - dot(w, z)) ** (n + 1)
    moved = bergman_basis(mobius(np.broadcast_to(z, w.shape), w), params) * kz[:, None]
    E = bergman_basis(w, params)
    return quadrature_gram(moved, E, rule.weights)


def u_matrix(z, params: BergmanParams, warn: bool = True, tol: float = 1e-8) -> np.ndarray:
    """Compression of U_z f = (f o phi_z) k_z, assembled by quadrature.

    Starts from a degree-4N rule and refines until successive assemblies agree
    to ``tol`` relative.
    """
    z = as_points(z, params.n)
    if np.any(norm2(z) >= 1):
        from .errors import DomainError

        raise DomainError("U_z needs |z| < 1")
    if warn:
        _check_truncation(z, params)
    r = float(np.sqrt(norm2(z)))
    # angular aliasing decays like |z|^M; start where that is already small
    degree = max(4 * params.N, int(np.ceil(np.log(1e-17) / np.log(max(r, 1e-3)) / 2)) + params.N)
    prev = _u_matrix_rule(z, params, degree)
    for _ in range(4):
        degree = int(degree * 1.5) + 8
        cur = _u_matrix_rule(z, params, degree)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, np.max(np.abs(cur))):
            return cur
        prev = cur
    raise NumericalError("U_z quadrature did not converge")
