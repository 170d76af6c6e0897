"""Discretised integral representations and Toeplitz-isation pipelines."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .bergman import BergmanParams, _sphere_rule, bergman_kernel_vectors
from .errors import NumericalError, ParameterError, TruncationWarning
from .fock import FockParams, fock_kernel_vectors
from .geometry import (
    Lattice,
    _square_grid,
    as_points,
    bergman_metric,
    bump,
    hyperbolic_radial_density,
    mobius,
    norm2,
)
from .operators import OperatorMatrix, kernel_vectors, params_dict, space_of, toeplitz_matrix, wrap
from .symbols import BumpAtom, SymbolFn, bump_sum, make_symbol, outer_shell_max, translate_fock

# ------------------------------------------------------------------ containers


@dataclass(frozen=True, eq=False)
class ToeplitzCombination:
    """Finite linear combination sum_i c_i T_{phi_i}."""

    terms: tuple[tuple[complex, SymbolFn], ...]
    params: object
    meta: dict = field(default_factory=dict)

    @property
    def space(self) -> str:
        return space_of(self.params)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "ToeplitzCombination") -> "ToeplitzCombination":
        if other.params != self.params:
            raise ParameterError("combinations live on different spaces")
        return ToeplitzCombination(self.terms + other.terms, self.params)

    def scaled(self, c: complex) -> "ToeplitzCombination":
        return ToeplitzCombination(tuple((c * a, f) for a, f in self.terms), self.params, dict(self.meta))

    def realize(self, params=None, check: bool = True) -> OperatorMatrix:
        params = self.params if params is None else params
        out = np.zeros((params.dim, params.dim), dtype=complex)
        for c, phi in self.terms:
            out += c * toeplitz_matrix(phi, params, check=check).data
        return wrap(out, params)

    def to_dict(self) -> dict:
        terms = []
        for c, phi in self.terms:
            c = complex(c)
            doc = {
                "coeff_re": c.real,
                "coeff_im": c.imag,
                "symbol_id": phi.symbol_id,
                "params": phi.describe()["params"],
                "translate": None if phi.translate is None else [[complex(z).real, complex(z).imag] for z in phi.translate],
            }
            if phi.atoms is not None:
                doc["atoms"] = [
                    {
                        "coeff_re": complex(a.coeff).real,
                        "coeff_im": complex(a.coeff).imag,
                        "center": [[complex(z).real, complex(z).imag] for z in a.center],
                        "l": a.l,
                    }
                    for a in phi.atoms
                ]
            terms.append(doc)
        meta = {k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool, list, dict))}
        return {"schema_version": 1, "kind": "toeplitz-combination", "space": self.space, "params": params_dict(self.params), "terms": terms, "meta": meta}


@dataclass(frozen=True)
class ConvergenceReport:
    param: str
    grid: tuple[float, ...]
    errors: tuple[float, ...]
    norm_protocol: str
    rate: float | None
    env: dict

    def __post_init__(self):
        if any(e < 0 for e in self.errors):
            raise ParameterError("errors must be nonnegative")
        g = np.asarray(self.grid)
        if g.size > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
            raise ParameterError("grid must be strictly monotone")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "convergence",
            "param": self.param,
            "grid": list(self.grid),
            "errors": list(self.errors),
            "norm_protocol": self.norm_protocol,
            "rate": self.rate,
            "env": self.env,
        }

    def to_csv(self) -> str:
        rows = [f"{self.param},error,norm_protocol"]
        rows += [f"{float(g)!r},{float(e)!r},{self.norm_protocol}" for g, e in zip(self.grid, self.errors)]
        return "\n".join(rows) + "\n"


def loglog_slope(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _rel_error(approx: np.ndarray, target: np.ndarray) -> float:
    scale = np.linalg.norm(target, 2)
    err = np.linalg.norm(approx - target, 2)
    return float(err / scale) if scale > 0 else float(err)


# ------------------------------------------------------------- Fock integral rep


def _fock_intrep_parts(A: OperatorMatrix, params: FockParams, r_max: float, h: float, R_z: float):
    if h <= 0:
        raise ParameterError("lattice spacing h must be positive")
    n = params.n
    if R_z**2 < params.t * (params.N + 4 * np.sqrt(params.N + 1)):
        warnings.warn("R_z is small for N: kernel mass outside the z-lattice", TruncationWarning, stacklevel=3)
    Z = _square_grid(h, R_z, n)
    X = _square_grid(h, R_z + r_max, n)
    Kz = fock_kernel_vectors(Z, params, warn=False)
    Kx = fock_kernel_vectors(X, params, warn=False)
    G = Kx.conj() @ A.data @ Kz.T  # <A k_z, k_x>
    dist = np.sqrt(norm2(X[:, None, :] - Z[None, :, :]))
    c = (h ** (2 * n) / (np.pi * params.t) ** n) ** 2
    return Kx, Kz, G, dist, c, len(Z)


def _fock_assemble(parts, r: float) -> np.ndarray:
    Kx, Kz, G, dist, c, _ = parts
    M = dist < r
    return c * (Kx.T @ np.where(M, G, 0) @ Kz.conj())


def fock_intrep(A: OperatorMatrix, r: float, h: float = 0.35, R_z: float = 5.0, params: FockParams | None = None) -> OperatorMatrix:
    """Riemann sum of the two-variable kernel representation of A.

    (pi t)^{-2n} sum over z in hZ^{2n} cap B(0, R_z) and w in hZ^{2n} cap B(0, r)
    of <A k_z, k_{z+w}> k_{z+w} (x) k_z, with cell volume h^{2n} per variable.
    """
    params = A.params if params is None else params
    if r <= 0:
        return wrap(np.zeros_like(A.data), params)
    return wrap(_fock_assemble(_fock_intrep_parts(A, params, r, h, R_z), r), params)


def fock_intrep_scan(A: OperatorMatrix, r_grid, h: float = 0.35, R_z: float = 5.0) -> ConvergenceReport:
    params = A.params
    r_grid = [float(r) for r in r_grid]
    parts = _fock_intrep_parts(A, params, max(r_grid), h, R_z)
    errors = [_rel_error(_fock_assemble(parts, r), A.data) for r in r_grid]
    env = {"N": params.N, "t": params.t, "n": params.n, "h": h, "R_z": R_z, "z_points": parts[5]}
    return ConvergenceReport("r", tuple(r_grid), tuple(errors), "exact2", _decay_rate(r_grid, errors), env)


def _decay_rate(grid, errors) -> float | None:
    """Fitted exponential rate: slope of -log(error) against the parameter."""
    g, e = np.asarray(grid, float), np.asarray(errors, float)
    ok = e > 0
    if ok.sum() < 2:
        return None
    return float(-np.polyfit(g[ok], np.log(e[ok]), 1)[0])


# ---------------------------------------------------------- Bergman integral rep


@dataclass(frozen=True, eq=False)
class RingLattice:
    """Geodesic-polar point set on D(0, extent) carrying d lambda cell masses."""

    points: np.ndarray
    weights: np.ndarray
    beta: np.ndarray
    extent: float
    n: int

    def __len__(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "extent": self.extent,
            "points": [[c for z in p for c in (float(z.real), float(z.imag))] for p in self.points],
            "weights": self.weights.tolist(),
        }


def ring_lattice(
    extent: float | None = None,
    n: int = 1,
    rho_max: float | None = None,
    breaks=(),
    panel: float = 0.25,
    order: int = 4,
    angular: int = 88,
    simplex: int = 6,
) -> RingLattice:
    """Rings of Gauss-Legendre radii in beta, each carrying equal angular cells.

    ``breaks`` are radii forced onto panel edges so that truncation at those
    radii is exact.  The extent is min(extent, artanh(rho_max)).
    """
    limits = [e for e in (extent, None if rho_max is None else float(np.arctanh(rho_max))) if e is not None]
    if not limits:
        raise ParameterError("give an extent or rho_max")
    ext = float(min(limits))
    edges = set(np.linspace(0, ext, max(1, int(np.ceil(ext / panel))) + 1).tolist())
    edges |= {float(b) for b in breaks if 0 < b < ext}
    edges = np.array(sorted(edges))
    x, w = roots_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    beta = (a + (b - a) * (x + 1) / 2).ravel()
    wb = ((b - a) / 2 * w).ravel() * hyperbolic_radial_density(beta, n)
    if n > 1:
        zeta, sw = _sphere_rule(n, simplex, angular)
        pts = (np.tanh(beta)[:, None, None] * zeta[None, :, :]).reshape(-1, n)
        weights = np.outer(wb, sw).ravel()
        return RingLattice(pts, weights, np.repeat(beta, len(sw)), ext, n)
    # kernels at radius tanh(beta) vary on angular scales ~ 1/cosh^2(beta)
    pts, weights, radii = [], [], []
    for b, wt in zip(beta, wb):
        m = angular * int(np.ceil(np.cosh(b) ** 2 / 4))
        theta = 2 * np.pi * np.arange(m) / m
        pts.append(np.tanh(b) * np.exp(1j * theta))
        weights.append(np.full(m, wt / m))
        radii.append(np.full(m, b))
    return RingLattice(np.concatenate(pts)[:, None], np.concatenate(weights), np.concatenate(radii), ext, n)


def _shell_masks(lattice: RingLattice, r_grid) -> list[np.ndarray]:
    lows = [0.0] + list(r_grid[:-1])
    return [(lattice.beta >= lo) & (lattice.beta < hi) for lo, hi in zip(lows, r_grid)]


def _bergman_intrep_shells(T: np.ndarray, N_in: int, N_out: int, lattice: RingLattice, masks, u_extent: float, u_panels: int, u_order: int):
    """Per-shell pieces of sum_u sum_v <T k_u, k_x> k_x (x) k_u, x = phi_u(v), output degrees <= N_out.

    u runs over geodesic rings out to ``u_extent``; the angular part of the u
    sum is done exactly: for u = rho e^{i theta}, averaging over theta keeps
    the entries with matching degree shifts, out[a, a+s] =
    conj(k_rho[a+s]) sum_c X[a, c] T[c, c+s] k_rho[c+s], X = sum_v k_x (x) k_x.
    """
    params_in = BergmanParams(N=N_in)
    d, D = N_out + 1, N_in + 1
    shifts = np.arange(-N_out, N_out + 1)
    cidx = np.arange(D)[:, None] + shifts[None, :]
    inside = (cidx >= 0) & (cidx < D)
    cidx_c = np.clip(cidx, 0, D - 1)
    T_shift = np.where(inside, T[np.arange(D)[:, None], cidx_c], 0)
    a_idx = np.arange(d)[:, None]
    b_idx = np.arange(d)[None, :]
    s_col = b_idx - a_idx + N_out
    x, w = roots_legendre(u_order)
    edges = np.linspace(0.0, u_extent, u_panels + 1)
    pieces = [np.zeros((d, d), dtype=complex) for _ in masks]
    V, wv = lattice.points, lattice.weights
    for lo, hi in zip(edges[:-1], edges[1:]):
        betas = lo + (hi - lo) * (x + 1) / 2
        wb = (hi - lo) / 2 * w * hyperbolic_radial_density(betas, 1)
        for beta, weight in zip(betas, wb):
            rho = np.tanh(beta) + 0j
            kr = bergman_kernel_vectors(np.array([[rho]]), params_in, "k", warn=False).ravel()
            X = mobius(np.full(V.shape, rho), V)
            kx = bergman_kernel_vectors(X, params_in, "k", warn=False)
            Z = T_shift * kr[cidx_c] * inside
            for j, m in enumerate(masks):
                if not m.any():
                    continue
                Xs = (kx[m, :d].T * wv[m]) @ kx[m].conj()
                W = Xs @ Z
                pieces[j] += weight * W[a_idx, s_col] * np.conj(kr[:d])[None, :]
    return pieces


def _intrep_inputs(T: OperatorMatrix, params):
    params = T.params if params is None else params
    if space_of(T.params) != "bergman" or space_of(params) != "bergman":
        raise ParameterError("bergman_intrep needs Bergman operators")
    if T.params.n != 1 or params.n != 1:
        raise ParameterError("bergman_intrep is implemented for n = 1")
    if params.N > T.params.N:
        raise ParameterError("output truncation cannot exceed the operator's")
    return params


def bergman_intrep(
    T: OperatorMatrix,
    r: float,
    lattice: RingLattice | None = None,
    params: BergmanParams | None = None,
    u_extent: float = 8.0,
    u_panels: int = 24,
    u_order: int = 8,
) -> OperatorMatrix:
    """Discretised double integral over v in D(0, r) and u in the ball.

    The integrand <T U_u k_0, U_u k_v> (U_u k_v) (x) (U_u k_0) equals
    <T k_u, k_x> k_x (x) k_u with x = phi_u(v), phases cancelling.  v runs
    over ``lattice`` (restricted to beta < r), u over geodesic rings out to
    ``u_extent``.  T may carry a finer truncation than ``params``: the sum
    is formed with T's kernels and the result compressed to ``params``.
    """
    params = _intrep_inputs(T, params)
    if r <= 0:
        return wrap(np.zeros((params.dim, params.dim)), params)
    lattice = ring_lattice(rho_max=0.99, breaks=[r]) if lattice is None else lattice
    if r > lattice.extent + 1e-12:
        warnings.warn("r exceeds the v-lattice extent; integrating over the lattice only", stacklevel=2)
    masks = [lattice.beta < r]
    (piece,) = _bergman_intrep_shells(T.data, T.params.N, params.N, lattice, masks, u_extent, u_panels, u_order)
    return wrap(piece, params)


def bergman_intrep_scan(
    T: OperatorMatrix,
    r_grid,
    params: BergmanParams | None = None,
    lattice: RingLattice | None = None,
    rho_max: float = 0.99,
    u_extent: float = 8.0,
    u_panels: int = 24,
    u_order: int = 8,
) -> ConvergenceReport:
    """Relative 2-norm error of bergman_intrep against T compressed to ``params``."""
    params = _intrep_inputs(T, params)
    r_grid = [float(r) for r in r_grid]
    if lattice is None:
        lattice = ring_lattice(rho_max=rho_max, n=1, breaks=r_grid)
    if max(r_grid) > lattice.extent + 1e-12:
        warnings.warn("r grid exceeds the v-lattice extent", stacklevel=2)
    masks = _shell_masks(lattice, r_grid)
    pieces = _bergman_intrep_shells(T.data, T.params.N, params.N, lattice, masks, u_extent, u_panels, u_order)
    target = T.data[: params.dim, : params.dim]
    acc = np.zeros_like(target)
    errors = []
    for piece in pieces:
        acc = acc + piece
        errors.append(_rel_error(acc, target))
    env = {
        "N": params.N,
        "N_inner": T.params.N,
        "n": 1,
        "v_extent": lattice.extent,
        "rho_max": float(np.tanh(lattice.extent)),
        "v_points": len(lattice),
        "u_extent": u_extent,
    }
    return ConvergenceReport("r", tuple(r_grid), tuple(errors), "exact2", _decay_rate(r_grid, errors), env)


# ------------------------------------------------------- Fock Toeplitz-isation


def diagonal_toeplitzize(h: SymbolFn, z, params: FockParams) -> ToeplitzCombination:
    """int h(u) (W_u k_z) (x) (W_u k_z) dV(u) = (pi t)^n T_{h(. - z)}."""
    z = as_points(z, params.n)
    return ToeplitzCombination((((np.pi * params.t) ** params.n, translate_fock(h, -z)),), params)


def _translated_kernels(U: np.ndarray, w: np.ndarray, params: FockParams) -> np.ndarray:
    """Rows: W_u k_w = exp(-i Im(u . conj w)/t) k_{u+w}."""
    phase = np.exp(-1j * np.imag(np.sum(U * np.conj(w), axis=-1)) / params.t)
    return phase[:, None] * fock_kernel_vectors(U + w, params, warn=False)


def lattice_weyl_integral(h: SymbolFn, w, z, params: FockParams, spacing: float = 0.3, radius: float = 5.0) -> np.ndarray:
    """Riemann sum of int h(u) (W_u k_w) (x) (W_u k_z) dV(u) over a square grid."""
    w = as_points(w, params.n)
    z = as_points(z, params.n)
    U = _square_grid(spacing, radius, params.n)
    A = _translated_kernels(U, w, params)
    B = _translated_kernels(U, z, params)
    hv = h(U) * spacing ** (2 * params.n)
    return (A.T * hv) @ B.conj()


Stencil = dict  # {(i, j): complex}, offsets in units of the step along Re and Im


def _apply(stencil: Stencil, op: Stencil) -> Stencil:
    out: Stencil = {}
    for (i, j), a in stencil.items():
        for (di, dj), b in op.items():
            key = (i + di, j + dj)
            out[key] = out.get(key, 0) + a * b
    return {k: v for k, v in out.items() if v != 0}


def _wirtinger_ops(step: float) -> tuple[Stencil, Stencil]:
    """Central-difference d/dzeta and d/dconj(zeta): (d_x -+ i d_y)/2."""
    c = 1 / (4 * step)
    dz = {(1, 0): c, (-1, 0): -c, (0, 1): -1j * c, (0, -1): 1j * c}
    dzb = {(1, 0): c, (-1, 0): -c, (0, 1): 1j * c, (0, -1): -1j * c}
    return dz, dzb


def derivative_stencils(order: int, step: float) -> dict[tuple[int, int], Stencil]:
    """S[a, b] approximating d_{conj zeta}^a d_zeta^b at 0, built recursively.

    S[a, b] = dzbar S[a-1, b] and S[0, b] = dz S[0, b-1]: each level applies
    one real and one imaginary increment, second-order accurate in ``step``.
    """
    dz, dzb = _wirtinger_ops(step)
    S: dict[tuple[int, int], Stencil] = {(0, 0): {(0, 0): 1.0}}
    for b in range(1, order + 1):
        S[0, b] = _apply(S[0, b - 1], dz)
    for a in range(1, order + 1):
        for b in range(order + 1):
            S[a, b] = _apply(S[a - 1, b], dzb)
    return S


def _diag_value_weight(offset, step, t, n_dim):
    zeta = step * complex(*offset)
    return np.exp(abs(zeta) ** 2 / t) * (np.pi * t) ** n_dim, zeta


def mixed_derivative_terms(h: SymbolFn, params: FockParams, order: int, fd_step: float, richardson: bool = True):
    """Stencils for L(g_a, g_b) = t^{a+b} d_conj^a d^b D(0), D(zeta) = ||K_zeta||^2 (pi t)^n T_{h(.-zeta)}.

    Returns {(a, b): {zeta: coefficient}} so that L(g_a, g_b) is
    sum_zeta coefficient * T_{h(. - zeta)}.
    """
    if params.n != 1:
        raise ParameterError("polarisation is implemented for n = 1")
    if fd_step <= 0:
        raise ParameterError("fd_step must be positive")
    t = params.t
    fine = derivative_stencils(order, fd_step)
    coarse = derivative_stencils(order, 2 * fd_step) if richardson else None
    out = {}
    for key, st in fine.items():
        combo: dict[complex, complex] = {}
        parts = [(st, fd_step, 4 / 3 if richardson else 1.0)]
        if richardson:
            parts.append((coarse[key], 2 * fd_step, -1 / 3))
        for stencil, step, weight in parts:
            for off, c in stencil.items():
                scale, zeta = _diag_value_weight(off, step, t, 1)
                zeta = complex(round(zeta.real / fd_step) * fd_step, round(zeta.imag / fd_step) * fd_step)
                combo[zeta] = combo.get(zeta, 0) + weight * c * scale * t ** (key[0] + key[1])
        out[key] = combo
    return out


class _TranslateCache:
    def __init__(self, h: SymbolFn, params):
        self.h, self.params, self.mats = h, params, {}

    def __call__(self, zeta: complex) -> np.ndarray:
        if zeta not in self.mats:
            self.mats[zeta] = toeplitz_matrix(translate_fock(self.h, np.array([-zeta])), self.params, check=False).data
        return self.mats[zeta]


def realize_terms(combo: dict, cache: _TranslateCache) -> np.ndarray:
    return sum(c * cache(z) for z, c in combo.items())


def polarized_toeplitzize(
    h: SymbolFn,
    w,
    z,
    order: int = 6,
    fd_step: float = 0.05,
    params: FockParams | None = None,
    tol: float = 1e-2,
    richardson: bool = True,
) -> ToeplitzCombination:
    """Toeplitz combination approximating int h(u) (W_u k_w) (x) (W_u k_z) dV(u).

    Taylor recombination L(K_w, K_z) = sum_{a,b<=order} conj(w)^a z^b /(t^{a+b} a! b!) L(g_a, g_b)
    of finite-difference mixed derivatives of the diagonal values, then
    normalised by exp(-(|w|^2 + |z|^2)/2t).  Every term is a translate of h.
    """
    params = FockParams() if params is None else params
    w = complex(as_points(w, 1)[0])
    z = complex(as_points(z, 1)[0])
    if w == z:
        return diagonal_toeplitzize(h, np.array([z]), params)
    t = params.t
    from math import factorial

    def assemble(step, rich):
        terms = mixed_derivative_terms(h, params, order, step, rich)
        total: dict[complex, complex] = {}
        for (a, b), combo in terms.items():
            c = np.conj(w) ** a * z**b / (t ** (a + b) * factorial(a) * factorial(b))
            for zeta, v in combo.items():
                total[zeta] = total.get(zeta, 0) + c * v
        norm = np.exp(-(abs(w) ** 2 + abs(z) ** 2) / (2 * t))
        return {k: norm * v for k, v in total.items() if v != 0}

    main = assemble(fd_step, richardson)
    cache = _TranslateCache(h, params)
    M = realize_terms(main, cache)
    # stability probe: the unextrapolated fine and coarse assemblies
    lo = realize_terms(assemble(fd_step, False), cache)
    hi = realize_terms(assemble(2 * fd_step, False), cache)
    scale = max(np.linalg.norm(M, 2), 1e-300)
    gap = float(np.linalg.norm(lo - hi, 2) / scale)
    if gap > 10 * tol:
        raise NumericalError(f"finite-difference levels disagree by {gap:.2e}; adjust fd_step")
    terms = tuple((complex(c), translate_fock(h, np.array([-zeta]))) for zeta, c in sorted(main.items(), key=lambda kv: (kv[0].real, kv[0].imag)))
    comb = ToeplitzCombination(terms, params, {"fd_gap": gap, "order": order, "fd_step": fd_step})
    object.__setattr__(comb, "_cache", cache)
    return comb


def realize_fast(comb: ToeplitzCombination) -> np.ndarray:
    """Realise a polarisation result reusing its cached translate matrices."""
    cache = getattr(comb, "_cache", None)
    if cache is None:
        return comb.realize(check=False).data
    return sum(c * cache(-complex(phi.translate[0]) if phi.translate else 0j) for c, phi in comb.terms)


# ------------------------------------------------------------- Bergman pipeline


def bergman_rank_sum(f: SymbolFn, lattice: Lattice, z, params: BergmanParams) -> OperatorMatrix:
    """sum_{u in lattice} f(u) k_{phi_u(z)} (x) k_{phi_u(z)}."""
    P = lattice.points
    if len(P) == 0:
        return wrap(np.zeros((params.dim, params.dim)), params)
    z = as_points(z, params.n)
    X = mobius(P, np.broadcast_to(z, P.shape))
    K = bergman_kernel_vectors(X, params, "k", warn=False)
    fv = f(P)
    return wrap((K.T * fv) @ K.conj(), params)


def toeplitz_A_l(f: SymbolFn, lattice: Lattice, z, l: float, params: BergmanParams) -> ToeplitzCombination:
    """Single Toeplitz term with symbol sum_u f(u) Phi^l_{phi_u(z)} / a_l."""
    if not 0 < l < 1:
        raise ParameterError("bump radius l must lie in (0, 1)")
    z = as_points(z, params.n)
    P = lattice.points
    a_l = bump(l).volume(params.n)
    fv = f(P) if len(P) else np.zeros(0)
    centers = mobius(P, np.broadcast_to(z, P.shape)) if len(P) else P
    atoms = [BumpAtom(complex(v) / a_l, tuple(complex(c) for c in x), float(l)) for v, x in zip(fv, centers)]
    sym = bump_sum(atoms, params.n, symbol_id="A_l")
    return ToeplitzCombination(((1.0, sym),), params, {"a_l": a_l, "l": l})


def A_l_error(f: SymbolFn, lattice: Lattice, z, l: float, params: BergmanParams) -> float:
    A = toeplitz_A_l(f, lattice, z, l, params).realize()
    R = bergman_rank_sum(f, lattice, z, params)
    return float(np.linalg.norm(A.data - R.data, 2))


def A_l_scan(f: SymbolFn, lattice: Lattice, z, l_grid, params: BergmanParams) -> ConvergenceReport:
    errs = [A_l_error(f, lattice, z, l, params) for l in l_grid]
    env = {"N": params.N, "n": params.n, "lattice_points": len(lattice), "z": [[complex(c).real, complex(c).imag] for c in as_points(z, params.n)]}
    return ConvergenceReport("l", tuple(float(l) for l in l_grid), tuple(errs), "exact2", loglog_slope(l_grid, errs), env)


def synthesize_compact(targets, l: float, params: BergmanParams) -> ToeplitzCombination:
    """C0-symbol Toeplitz combination approximating sum_i c_i k_{x_i} (x) k_{x_i}."""
    terms: tuple = ()
    target = np.zeros((params.dim, params.dim), dtype=complex)
    one = make_symbol("one", domain="bergman")
    origin = np.zeros(params.n, dtype=complex)
    for x, y, c in targets:
        x = as_points(x, params.n)
        if not np.allclose(x, as_points(y, params.n)):
            raise ParameterError("only diagonal targets k_x (x) k_x are supported")
        single = Lattice(x[None, :], 0.0, "bergman")
        part = toeplitz_A_l(one, single, origin, l, params).scaled(c)
        terms = terms + part.terms
        k = bergman_kernel_vectors(x, params, "k", warn=False)
        target += c * np.outer(k, k.conj())
    comb = ToeplitzCombination(terms, params, {"l": l})
    err = float(np.linalg.norm(comb.realize().data - target, 2)) if terms else 0.0
    comb.meta["error"] = err
    return comb


def c0_decay_ratio(comb: ToeplitzCombination, shell: float = 0.99, samples: int = 512) -> float:
    """Outer-shell maximum of the combined symbol relative to its peak."""
    syms = [(c, phi) for c, phi in comb.terms]
    n = comb.params.n

    def total(w):
        return sum(c * phi(w) for c, phi in syms)

    peak = 0.0
    for _, phi in syms:
        for a in phi.atoms or ():
            peak = max(peak, abs(total(np.asarray(a.center)[None, :])[0]))
    probe = SymbolFn("combined", total, 1.0, domain="bergman")
    edge = outer_shell_max(probe, shell, samples, n)
    return float(edge / peak) if peak > 0 else 0.0


# --------------------------------------------------------------- diagnostics


def product_berezin_diagnostics(symbols: list[SymbolFn], params, grid_size: int = 41, shells: int = 12, threshold: float = 1e-2) -> dict:
    """Berezin transform of T_{phi_1} ... T_{phi_m}: continuity modulus and decay profile."""
    from .operators import berezin_many, product

    if not symbols:
        raise ParameterError("need at least one symbol")
    space = space_of(params)
    T = product([toeplitz_matrix(s, params) for s in symbols])
    if space == "fock":
        radius = float(np.sqrt(params.t * params.N) / 2)
        radii = np.linspace(0, radius, shells)
    else:
        radius = 0.95
        radii = np.tanh(np.linspace(0, np.arctanh(radius), shells))
    ang = 2 * np.pi * (np.arange(64) + 0.5) / 64
    profile = []
    for rr in radii:
        pts = (rr * np.exp(1j * ang))[:, None]
        if params.n > 1:
            pts = np.concatenate([pts, np.zeros((len(ang), params.n - 1))], axis=1)
        profile.append(float(np.max(np.abs(berezin_many(T, pts, warn=False)))))
    # continuity modulus on a square grid, in the space's own metric
    # the square grid is inscribed in the profile disc, where truncation is controlled
    ax = np.linspace(-radius, radius, grid_size) / np.sqrt(2)
    g = (ax[:, None] + 1j * ax[None, :]).ravel()[:, None]
    if params.n > 1:
        g = np.concatenate([g, np.zeros((len(g), params.n - 1))], axis=1)
    B = berezin_many(T, g, warn=False)
    deltas = (0.1, 0.2, 0.4, 0.8)
    D = bergman_metric(g[:, None, :], g[None, :, :]) if space == "bergman" else np.sqrt(norm2(g[:, None, :] - g[None, :, :]))
    diff = np.abs(B[:, None] - B[None, :])
    modulus = [[d, float(np.max(np.where(D <= d, diff, 0)))] for d in deltas]
    all_c0 = all(s.is_c0 for s in symbols)
    ratio = profile[-1] / profile[0] if profile[0] > 0 else 0.0
    return {
        "schema_version": 1,
        "kind": "berezin-diagnostics",
        "space": space,
        "symbols": [s.describe() for s in symbols],
        "profile": [[float(r), v] for r, v in zip(radii, profile)],
        "modulus": modulus,
        "all_c0": all_c0,
        "outer_ratio": float(ratio),
        "decay_ok": (ratio <= threshold) if all_c0 else None,
    }
