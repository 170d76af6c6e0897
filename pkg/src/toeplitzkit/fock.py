"""Truncated Fock space F^p_t(C^n).

Functions are stored as coefficient vectors in the orthonormal basis
e_a(z) = z^a / sqrt(t^|a| a!), |a| <= N, ordered by :func:`multi_indices`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_genlaguerre

from .errors import ParameterError, TruncationWarning
from .geometry import as_points, norm2
from .indexing import basis_size, evaluate_monomials, monomial_table, multi_indices


@dataclass(frozen=True)
class FockParams:
    t: float = 1.0
    p: float = 2.0
    n: int = 1
    N: int = 24
    quad: str = "polar-laguerre"
    radial_nodes: int | None = None
    angular_nodes: int | None = None

    def __post_init__(self):
        if not self.t > 0:
            raise ParameterError("t must be positive")
        if not 1 < self.p < np.inf:
            raise ParameterError("p must lie in (1, inf)")
        if self.n < 1 or self.N < 0:
            raise ParameterError("need n >= 1 and N >= 0")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def dim(self) -> int:
        return basis_size(self.n, self.N)

    def with_(self, **kw) -> "FockParams":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class AnalyticVector:
    coeffs: np.ndarray
    space: str
    params: object

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __array__(self, dtype=None):
        return self.coeffs if dtype is None else self.coeffs.astype(dtype)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    measure: str

    def integrate(self, values) -> complex:
        return np.sum(self.weights * values, axis=-1)


# ------------------------------------------------------------------------ kernels


def fock_kernel(z, w, t: float = 1.0):
    """K_z(w) = exp(w . conj(z) / t)."""
    z = as_points(z)
    w = as_points(w, z.shape[-1])
    return np.exp(np.sum(w * np.conj(z), axis=-1) / t)


def fock_basis(z, params: FockParams) -> np.ndarray:
    """Matrix of e_a(z); z of shape (..., n), result (..., dim)."""
    z = as_points(z, params.n)
    table = monomial_table(z, params.N, np.sqrt(params.t))
    return evaluate_monomials(table, params.n, params.N)


def fock_kernel_vectors(z, params: FockParams, warn: bool = True) -> np.ndarray:
    """Coefficients of the normalised kernels k_z, one row per point."""
    z = as_points(z, params.n)
    if warn and np.any(norm2(z) / params.t > params.N):
        warnings.warn("|z|^2/t exceeds N: kernel tail not negligible", TruncationWarning, stacklevel=2)
    return np.conj(fock_basis(z, params)) * np.exp(-norm2(z) / (2 * params.t))[..., None]


def fock_kernel_vector(z, params: FockParams) -> AnalyticVector:
    z = as_points(z, params.n)
    return AnalyticVector(fock_kernel_vectors(z, params)[..., :], "fock", params)


def fock_reproducing_vector(z, params: FockParams) -> np.ndarray:
    """Coefficients of the unnormalised kernel K_z: conj(e_a(z))."""
    return np.conj(fock_basis(z, params))


# --------------------------------------------------------------------- quadrature


@lru_cache(maxsize=128)
def _polar_rule(t: float, n: int, radial: int, angular: int):
    x, wx = roots_genlaguerre(radial, 0.0)
    wx = wx / wx.sum()
    theta = 2 * np.pi * np.arange(angular) / angular
    r = np.sqrt(t * x)
    nodes1 = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w1 = np.repeat(wx / angular, angular)
    nodes = nodes1[:, None]
    weights = w1
    for _ in range(1, n):
        nodes = np.concatenate(
            [np.repeat(nodes, len(nodes1), axis=0), np.tile(nodes1, len(weights))[:, None]], axis=1
        )
        weights = np.outer(weights, w1).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _rule_sizes(params: FockParams, degree: int | None):
    degree = 2 * params.N if degree is None else degree
    radial = params.radial_nodes or degree + 8
    angular = params.angular_nodes or 2 * degree + 4
    return radial, angular


def gaussian_quadrature(params: FockParams, degree: int | None = None, t: float | None = None, refine: int = 0) -> QuadratureRule:
    """Polar Gauss-Laguerre rule for mu_t, tensorised over coordinates.

    Exact for z^a conj(z)^b whenever |a|, |b| <= degree.  ``t`` overrides the
    Gaussian parameter of the target measure (mu_{2t/p} for p-norms).
    ``refine`` adds nodes, used for self-convergence checks.
    """
    if degree is not None and degree < 1:
        raise ParameterError("quadrature degree must be at least 1")
    radial, angular = _rule_sizes(params, degree)
    radial += 8 * refine
    angular += 8 * refine
    tt = params.t if t is None else t
    nodes, weights = _polar_rule(float(tt), params.n, int(radial), int(angular))
    return QuadratureRule(nodes, weights, f"mu_{tt:g}")


def quadrature_gram(f_values: np.ndarray, g_values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return (g_values.conj().T * weights) @ f_values


# ------------------------------------------------------------------ norms/pairing


def _coeffs(f) -> np.ndarray:
    return np.asarray(f.coeffs if isinstance(f, AnalyticVector) else f, dtype=complex)


@lru_cache(maxsize=64)
def _panel_rule(tp: float, n: int, N: int, p: float, level: int):
    """Composite Gauss-Legendre in r (graded towards 0) x trapezoid in angle, for mu_tp.

    |f|^p is not polynomial and has kinks at zeros of f, so a graded panel
    rule converges far more reliably than a global Laguerre rule.
    """
    from scipy.special import roots_legendre

    if n == 1:
        panels, order, angular, grading = 24 * 2**level, 12, max(4 * N + 4, 96) * 2**level, 10
    else:
        panels, order, angular, grading = 6 * 2**level, 8, max(2 * N + 8, 24) * 2**level, 4
    r_max = np.sqrt(tp * (p * N / 2 + 10 * np.sqrt(p * N + 1) + 60))
    edges = np.linspace(0.0, r_max, panels + 1)
    first = edges[1] * 2.0 ** -np.arange(grading, 0, -1)
    edges = np.concatenate([[0.0], first, edges[1:]])
    x, w = roots_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    r = (a + (b - a) * (x + 1) / 2).ravel()
    wr = ((b - a) / 2 * w).ravel()
    # d mu_tp = (1/(pi tp)) e^{-r^2/tp} r dr d theta, angle folded into the trapezoid
    wr = wr * 2 * r * np.exp(-r * r / tp) / tp
    theta = 2 * np.pi * (np.arange(angular) + 0.5) / angular
    nodes1 = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w1 = np.repeat(wr / angular, angular)
    nodes, weights = nodes1[:, None], w1
    for _ in range(1, n):
        nodes = np.concatenate(
            [np.repeat(nodes, len(nodes1), axis=0), np.tile(nodes1, len(weights))[:, None]], axis=1
        )
        weights = np.outer(weights, w1).ravel()
    return nodes, weights


def _p_norm_with(c: np.ndarray, params: FockParams, p: float, level: int) -> float:
    tp = 2 * params.t / p
    if p == 2:
        rule = gaussian_quadrature(params, t=tp)
        nodes, weights = rule.nodes, rule.weights
    else:
        nodes, weights = _panel_rule(float(tp), params.n, params.N, float(p), level)
    vals = fock_basis(nodes, params) @ c
    return float(np.sum(weights * np.abs(vals) ** p) ** (1.0 / p))


def fock_p_norm(f, params: FockParams, p: float | None = None, check: bool = True) -> float:
    """||f||_{F^p_t} = (int |f|^p d mu_{2t/p})^{1/p} by quadrature.

    p = 2 uses the exact Laguerre rule; otherwise a graded panel rule whose
    refinement must agree to 1e-6 relative when ``check`` is set.
    """
    p = params.p if p is None else float(p)
    if p < 1:
        raise ParameterError("p-norms need p >= 1")
    c = _coeffs(f)
    value = _p_norm_with(c, params, p, 0)
    if check and p != 2:
        finer = _p_norm_with(c, params, p, 1)
        if abs(finer - value) > 1e-6 * max(abs(finer), 1e-300):
            from .errors import NumericalError

            raise NumericalError(f"F^p norm quadrature did not settle: {value} vs {finer}")
        value = finer
    return value


def fock_pairing(f, g, params: FockParams) -> complex:
    """<f, g>_t by quadrature against mu_t."""
    rule = gaussian_quadrature(params)
    E = fock_basis(rule.nodes, params)
    return complex(np.sum(rule.weights * (E @ _coeffs(f)) * np.conj(E @ _coeffs(g))))


# ----------------------------------------------------------------------- Weyl


def _weyl_1d(z: complex, t: float, N: int) -> np.ndarray:
    """<W_z e_b, e_a> for one complex coordinate (displacement by conj(z)/sqrt t)."""
    alpha = np.conj(z) / np.sqrt(t)
    x = abs(alpha) ** 2
    a = np.arange(N + 1)[:, None]
    b = np.arange(N + 1)[None, :]
    lo = np.minimum(a, b)
    diff = np.abs(a - b)
    lag = eval_genlaguerre(lo, diff, x)
    scale = np.exp(0.5 * (gammaln(lo + 1) - gammaln(np.maximum(a, b) + 1)) - x / 2)
    base = np.where(a >= b, alpha, -np.conj(alpha))
    return scale * np.power(base, diff) * lag


def weyl_matrix(z, params: FockParams, method: str = "laguerre", warn: bool = True) -> np.ndarray:
    """Compression of W_z f(w) = k_z(w) f(w - z) to degree <= N."""
    z = as_points(z, params.n)
    if warn and norm2(z) / params.t > params.N / 4:
        warnings.warn("|z|^2/t exceeds N/4: Weyl compression inaccurate", TruncationWarning, stacklevel=2)
    if method == "quadrature":
        return _weyl_quadrature(z, params)
    if method != "laguerre":
        raise ParameterError(f"unknown Weyl method {method!r}")
    idx = multi_indices(params.n, params.N)
    out = np.ones((len(idx), len(idx)), dtype=complex)
    for j in range(params.n):
        m = _weyl_1d(complex(z[j]), params.t, params.N)
        out = out * m[idx[:, j][:, None], idx[:, j][None, :]]
    return out


def _weyl_quadrature(z: np.ndarray, params: FockParams) -> np.ndarray:
    rule = gaussian_quadrature(params, degree=2 * params.N + 8)
    w = rule.nodes
    kz = np.exp(np.sum(w * np.conj(z), axis=-1) / params.t - norm2(z) / (2 * params.t))
    shifted = fock_basis(w - z, params) * kz[:, None]
    E = fock_basis(w, params)
    return quadrature_gram(shifted, E, rule.weights)


def weyl_phase(w, z, t: float) -> complex:
    """exp(-i Im(w . conj z)/t), the cocycle of W_w W_z = phase W_{w+z}."""
    w = as_points(w)
    z = as_points(z)
    return complex(np.exp(-1j * np.imag(np.sum(w * np.conj(z))) / t))


def kernel_tail(z, params: FockParams) -> float:
    """1 - ||P_N k_z||^2, the kernel mass lost to truncation."""
    k = fock_kernel_vectors(z, params, warn=False)
    return float(max(0.0, 1.0 - np.sum(np.abs(k) ** 2)))
