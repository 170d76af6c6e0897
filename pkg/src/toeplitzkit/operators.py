"""Operator-level tools shared by both spaces.

Toeplitz compressions, rank-one kernel tensors, Berezin transforms, adjoints,
operator-norm estimates and weak-localisation scans.  Operators are dense
matrices on the coefficient space of the truncated basis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, roots_legendre

from .bergman import BergmanParams, _sphere_rule, bergman_basis, bergman_kernel_vectors, disk_quadrature, kernel_norm
from .errors import NumericalError, ParameterError
from .fock import FockParams, _panel_rule, fock_basis, fock_kernel_vectors, gaussian_quadrature
from .geometry import as_points, hyperbolic_radial_density, mobius, norm2
from .indexing import degrees
from .symbols import SymbolFn

Params = FockParams | BergmanParams


def space_of(params) -> str:
    if isinstance(params, FockParams):
        return "fock"
    if isinstance(params, BergmanParams):
        return "bergman"
    raise ParameterError(f"not a space parameter set: {params!r}")


def params_dict(params) -> dict:
    from dataclasses import asdict

    d = asdict(params)
    d["space"] = space_of(params)
    return d


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    data: np.ndarray
    space: str
    params: object = field(repr=False)

    def __post_init__(self):
        a = np.array(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("operator matrices are square")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def _wrap(self, data):
        return OperatorMatrix(data, self.space, self.params)

    def _check(self, other: "OperatorMatrix"):
        if other.space != self.space or other.dim != self.dim:
            raise ParameterError("operators act on different spaces")

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return self._wrap(self.data @ other.data)
        return self.data @ np.asarray(other)

    def __add__(self, other):
        self._check(other)
        return self._wrap(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self._wrap(self.data - other.data)

    def __mul__(self, c):
        return self._wrap(complex(c) * self.data)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.data)

    def adjoint(self) -> "OperatorMatrix":
        return self._wrap(self.data.conj().T)

    def input_degrees(self) -> np.ndarray:
        return degrees(self.params.n, self.params.N)

    def restricted(self, max_degree: int) -> np.ndarray:
        """Columns acting on inputs of total degree <= max_degree."""
        return self.data[:, self.input_degrees() <= max_degree]

    def norm2(self, max_degree: int | None = None) -> float:
        a = self.data if max_degree is None else self.restricted(max_degree)
        return float(np.linalg.norm(a, 2)) if a.size else 0.0

    def to_dict(self) -> dict:
        return {
            "rows": self.dim,
            "cols": self.dim,
            "re": self.data.real.ravel().tolist(),
            "im": self.data.imag.ravel().tolist(),
            "space": self.space,
            "params": params_dict(self.params),
        }


def wrap(data, params) -> OperatorMatrix:
    return OperatorMatrix(data, space_of(params), params)


def identity(params) -> OperatorMatrix:
    return wrap(np.eye(params.dim), params)


def zero(params) -> OperatorMatrix:
    return wrap(np.zeros((params.dim, params.dim)), params)


def basis_values(points, params) -> np.ndarray:
    return fock_basis(points, params) if space_of(params) == "fock" else bergman_basis(points, params)


def kernel_vectors(points, params, warn: bool = True) -> np.ndarray:
    """Normalised kernel coefficient rows k_z (either space)."""
    if space_of(params) == "fock":
        return fock_kernel_vectors(points, params, warn=warn)
    return bergman_kernel_vectors(points, params, "k", warn=warn)


# ------------------------------------------------------------------ Toeplitz


def _global_toeplitz(phi: SymbolFn, params, refine: int) -> np.ndarray:
    if space_of(params) == "fock":
        rule = gaussian_quadrature(params, degree=2 * params.N + 8 * refine, refine=refine)
    else:
        rule = disk_quadrature(params, degree=2 * params.N + 16 + 16 * refine, refine=refine)
    E = basis_values(rule.nodes, params)
    vals = phi(rule.nodes)
    return (E.conj().T * (rule.weights * vals)) @ E


def _local_ball_rule(n: int, l: float, radial: int, angular: int, simplex: int):
    """Geodesic polar rule on D(0, 2l) split at the bump kink radii l and 2l."""
    x, w = roots_legendre(radial)
    betas, wb = [], []
    for lo, hi in ((0.0, l), (l, 2 * l)):
        b = lo + (hi - lo) * (x + 1) / 2
        betas.append(b)
        wb.append((hi - lo) / 2 * w * hyperbolic_radial_density(b, n))
    b = np.concatenate(betas)
    wb = np.concatenate(wb)
    zeta, sw = _sphere_rule(n, simplex, angular)
    nodes = (np.tanh(b)[:, None, None] * zeta[None, :, :]).reshape(-1, n)
    weights = np.outer(wb, sw).ravel()
    return b, nodes, weights


def bump_toeplitz(center, l: float, params: BergmanParams, refine: int = 0) -> np.ndarray:
    """Compression of T_{Phi^l_center} by a quadrature living on the bump's support.

    Uses the invariance of d lambda: int Phi^l_0(phi_c xi) e_b conj(e_a) dv(xi)
    = int Phi^l_0(eta) [e_b conj(e_a) (1-|.|^2)^{n+1}](phi_c eta) d lambda(eta).
    """
    from .geometry import bump

    n = params.n
    c = as_points(center, n)
    radial = 20 + 8 * refine
    angular = max(48, 2 * params.N + 16) + 16 * refine
    simplex = params.N // 2 + 4 + 2 * refine
    b, eta, w = _local_ball_rule(n, l, radial, angular, simplex)
    prof = np.repeat(bump(l).radial(b), len(w) // len(b))
    xi = mobius(np.broadcast_to(c, eta.shape), eta)
    E = bergman_basis(xi, params)
    dens = (1 - norm2(xi)) ** (n + 1)
    return (E.conj().T * (w * prof * dens)) @ E


def _atom_toeplitz(phi: SymbolFn, params, refine: int) -> np.ndarray:
    out = np.zeros((params.dim, params.dim), dtype=complex)
    for atom in phi.atoms:
        out += atom.coeff * bump_toeplitz(np.asarray(atom.center), atom.l, params, refine)
    return out


def toeplitz_matrix(phi: SymbolFn, params, check: bool = True, tol: float = 1e-6) -> OperatorMatrix:
    """P_N M_phi P_N, entries <phi e_b, e_a> by quadrature, with a refinement check."""
    space = space_of(params)
    if phi.domain not in (space, "any") and phi.symbol_id != "one":
        warnings.warn(f"symbol {phi.symbol_id!r} declared for {phi.domain}, used on {space}", stacklevel=2)
    use_atoms = space == "bergman" and phi.atoms is not None
    assemble = _atom_toeplitz if use_atoms else _global_toeplitz
    mat = assemble(phi, params, 0)
    if check:
        finer = assemble(phi, params, 1)
        gap = np.max(np.abs(finer - mat))
        if gap > tol * max(1.0, phi.bound):
            raise NumericalError(f"Toeplitz quadrature refinement moved entries by {gap:.2e}")
        mat = finer
    return wrap(mat, params)


def rank_one(x, y, params) -> OperatorMatrix:
    """k_x (x) k_y : h -> <h, k_y> k_x."""
    kx = kernel_vectors(as_points(x, params.n), params)
    ky = kernel_vectors(as_points(y, params.n), params)
    return wrap(np.outer(kx, ky.conj()), params)


def tensor(f, g, params) -> OperatorMatrix:
    """f (x) g for coefficient vectors."""
    return wrap(np.outer(np.asarray(f), np.conj(np.asarray(g))), params)


def berezin(T: OperatorMatrix, z) -> complex:
    """<T k_z, k_z>."""
    return complex(berezin_many(T, as_points(z, T.params.n)[None, :])[0])


def berezin_many(T: OperatorMatrix, Z, warn: bool = True) -> np.ndarray:
    Z = as_points(Z, T.params.n)
    if Z.ndim == 1:
        Z = Z[None, :]
    K = kernel_vectors(Z, T.params, warn=warn)
    return np.einsum("ia,ab,ib->i", K.conj(), T.data, K)


def banach_adjoint(T: OperatorMatrix) -> OperatorMatrix:
    """Adjoint for the duality pairing: conjugate transpose in the orthonormal basis."""
    return T.adjoint()


def product(Ts: list[OperatorMatrix]) -> OperatorMatrix:
    if not Ts:
        raise ParameterError("empty product")
    out = Ts[0]
    for T in Ts[1:]:
        if T.dim != out.dim or T.space != out.space:
            raise ParameterError("shape mismatch in operator product")
        out = out @ T
    return out


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormEstimate:
    value: float
    protocol: str
    p: float
    seeds: int = 0
    iterations: int = 0
    trace: tuple[float, ...] = ()

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "protocol": self.protocol,
            "p": self.p,
            "seeds": self.seeds,
            "iterations": self.iterations,
            "trace": list(self.trace),
        }


def _norm_nodes(params, p):
    if space_of(params) == "fock":
        nodes, weights = _panel_rule(float(2 * params.t / p), params.n, params.N, float(p), 0)
    else:
        rule = disk_quadrature(params, degree=4 * params.N + 48 if params.n == 1 else 2 * params.N + 8)
        nodes, weights = rule.nodes, rule.weights
    return basis_values(nodes, params), weights


def p_norm(coeffs, params, p: float, check: bool = True) -> float:
    from .bergman import bergman_p_norm
    from .fock import fock_p_norm

    if space_of(params) == "fock":
        return fock_p_norm(coeffs, params, p, check)
    return bergman_p_norm(coeffs, params, p, check)


def op_norm(
    T: OperatorMatrix,
    p: float = 2.0,
    protocol: str = "exact2",
    iters: int = 40,
    seeds: int = 16,
    seed: int = 0,
) -> NormEstimate:
    """Operator norm on the truncated L^p / F^p space.

    ``exact2``: largest singular value (p = 2 only).  ``ascent``: a lower
    bound, the best ratio ||Tf||_p / ||f||_p found by normalised gradient
    ascent from seeded random polynomials (plus the top singular vector).
    """
    if protocol == "exact2":
        if p != 2:
            raise ParameterError("exact2 is only valid for p = 2")
        return NormEstimate(float(np.linalg.norm(T.data, 2)), "exact2", 2.0)
    if protocol != "ascent":
        raise ParameterError(f"unknown norm protocol {protocol!r}")
    return _ascent(T, float(p), iters, seeds, seed)


def _ascent(T: OperatorMatrix, p: float, iters: int, seeds: int, seed: int) -> NormEstimate:
    E, w = _norm_nodes(T.params, p)
    A = T.data
    rng = np.random.default_rng(seed)
    dim = T.dim
    decay = 0.8 ** T.input_degrees()
    C = (rng.standard_normal((dim, seeds)) + 1j * rng.standard_normal((dim, seeds))) * decay[:, None]
    _, _, vh = np.linalg.svd(A)
    C = np.concatenate([vh[0].conj()[:, None], C], axis=1)
    C /= np.linalg.norm(C, axis=0)

    def log_ratio(C):
        F = E @ C
        G = E @ (A @ C)
        nF = np.sum(w[:, None] * np.abs(F) ** p, axis=0)
        nG = np.sum(w[:, None] * np.abs(G) ** p, axis=0)
        return (np.log(nG) - np.log(nF)) / p, F, G, nF, nG

    val, F, G, nF, nG = log_ratio(C)
    step = np.full(C.shape[1], 0.5)
    trace = [float(np.exp(val.max()))]
    for _ in range(iters):
        # Wirtinger gradient of log||.||_p^p with respect to conj(c)
        gF = E.conj().T @ (w[:, None] * np.abs(F) ** (p - 2) * F) * (p / 2) / nF
        gG = A.conj().T @ (E.conj().T @ (w[:, None] * np.abs(G) ** (p - 2) * G)) * (p / 2) / nG
        g = (gG - gF) / p
        g /= np.maximum(np.linalg.norm(g, axis=0), 1e-300)
        trial = C + step * g
        trial /= np.linalg.norm(trial, axis=0)
        tval, tF, tG, tnF, tnG = log_ratio(trial)
        better = tval > val
        C = np.where(better, trial, C)
        val = np.where(better, tval, val)
        F = np.where(better, tF, F)
        G = np.where(better, tG, G)
        nF = np.where(better, tnF, nF)
        nG = np.where(better, tnG, nG)
        step = np.where(better, step * 1.2, step * 0.5)
        trace.append(float(np.exp(val.max())))
    best = C[:, int(np.argmax(val))]
    certified = p_norm(A @ best, T.params, p, check=False) / p_norm(best, T.params, p, check=False)
    return NormEstimate(float(certified), "ascent", p, seeds + 1, iters, tuple(trace))


# ---------------------------------------------------------------- localisation


@dataclass(frozen=True)
class LocalizationReport:
    r_grid: tuple[float, ...]
    E: tuple[float, ...]
    Eprime: tuple[float, ...] | None
    z_sample: tuple[tuple[float, ...], ...]
    space: str
    params: dict
    extent: float
    s: float | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "localization",
            "space": self.space,
            "params": self.params,
            "extent": self.extent,
            "s": self.s,
            "z_sample": [list(z) for z in self.z_sample],
            "r": list(self.r_grid),
            "E": list(self.E),
            "Eprime": None if self.Eprime is None else list(self.Eprime),
        }

    def to_csv(self) -> str:
        lines = ["r,E,Eprime"]
        for i, r in enumerate(self.r_grid):
            ep = "" if self.Eprime is None else repr(float(self.Eprime[i]))
            lines.append(f"{float(r)!r},{float(self.E[i])!r},{ep}")
        return "\n".join(lines) + "\n"


def _radial_panels(lo: float, hi: float, per_unit: int = 2, order: int = 16):
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    panels = max(1, int(np.ceil((hi - lo) * per_unit)))
    edges = np.linspace(lo, hi, panels + 1)
    x, w = roots_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * (x + 1) / 2).ravel(), ((b - a) / 2 * w).ravel()


def _z_rows(z_sample, n):
    Z = as_points(z_sample, n)
    return Z[None, :] if Z.ndim == 1 else Z


def localization_scan(
    T: OperatorMatrix,
    params,
    r_grid,
    z_sample,
    extent: float | None = None,
    angular: int | None = None,
) -> LocalizationReport:
    """Off-diagonal kernel mass outside balls of radius r, maximised over z_sample.

    Fock: E(r) = max_z int_{|w-z| >= r} |<T k_z, k_w>| dV(w), integrated in
    polar coordinates about z out to ``extent`` (Euclidean).  Bergman: the
    weighted functionals E_r(T, s) and E'_r(T, s) over the geodesic annulus
    r <= beta(z, w) <= ``extent``, parametrised as w = phi_z(eta).
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0 or np.any(np.diff(r_grid) <= 0):
        raise ParameterError("r_grid must be nonempty and increasing")
    n = params.n
    Z = _z_rows(z_sample, n)
    space = space_of(params)
    if space == "fock":
        ext = extent if extent is not None else float(r_grid.max() + 12 * np.sqrt(params.t))
        reach = np.sqrt(norm2(Z)).max()
        if ext < r_grid.max() + reach:
            warnings.warn("lattice cutoff smaller than max r + max |z|", stacklevel=2)
        E = _fock_scan(T, params, r_grid, Z, ext, angular)
        return LocalizationReport(tuple(r_grid.tolist()), tuple(E), None, _ztuple(Z), space, params_dict(params), ext)
    ext = extent if extent is not None else 8.0
    s = params.s_value
    e1 = 1 - 2 * s / (params.q * (n + 1))
    e2 = 1 - 2 * s / (params.p * (n + 1))
    E = _bergman_scan(T.data, params, r_grid, Z, ext, e1, angular)
    Ep = _bergman_scan(T.data.conj().T, params, r_grid, Z, ext, e2, angular)
    return LocalizationReport(
        tuple(r_grid.tolist()), tuple(E), tuple(Ep), _ztuple(Z), space, params_dict(params), ext, s
    )


def _ztuple(Z):
    return tuple(tuple(float(c) for z in row for c in (z.real, z.imag)) for row in Z)


def _sphere_area(n: int) -> float:
    return float(2 * np.pi**n / gamma(n))


def _fock_scan(T, params, r_grid, Z, ext, angular):
    n = params.n
    M = angular or max(64, 4 * params.N + 4)
    zeta, sw = _sphere_rule(n, 8, M if n == 1 else max(16, M // 4))
    out = []
    for r in r_grid:
        rho, wr = _radial_panels(float(r), ext)
        if rho.size == 0:
            out.append(0.0)
            continue
        wr = wr * rho ** (2 * n - 1) * _sphere_area(n)
        best = 0.0
        for z in Z:
            w = z[None, None, :] + rho[:, None, None] * zeta[None, :, :]
            K = fock_kernel_vectors(w.reshape(-1, n), params, warn=False)
            v = T.data @ kernel_vectors(z, params, warn=False)
            mag = np.abs(K.conj() @ v).reshape(len(rho), len(sw))
            best = max(best, float(np.sum(wr[:, None] * sw[None, :] * mag)))
        out.append(best)
    return out


def _bergman_scan(A, params, r_grid, Z, ext, expo, angular):
    n = params.n
    M = angular or max(96, 4 * params.N + 16)
    zeta, sw = _sphere_rule(n, params.N // 2 + 4, M if n == 1 else max(16, M // 4))
    out = []
    for r in r_grid:
        b, wb = _radial_panels(float(r), ext, per_unit=3)
        if b.size == 0:
            out.append(0.0)
            continue
        wb = wb * hyperbolic_radial_density(b, n)
        eta = (np.tanh(b)[:, None, None] * zeta[None, :, :]).reshape(-1, n)
        best = 0.0
        for z in Z:
            w = mobius(np.broadcast_to(z, eta.shape), eta)
            kw = bergman_kernel_vectors(w, params, "k", warn=False)
            v = A @ bergman_kernel_vectors(z, params, "k", warn=False)
            mag = np.abs(kw.conj() @ v)
            ratio = (kernel_norm(z, n) / kernel_norm(w, n)) ** expo
            vals = (mag * ratio).reshape(len(b), len(sw))
            best = max(best, float(np.sum(wb[:, None] * sw[None, :] * vals)))
        out.append(best)
    return out
