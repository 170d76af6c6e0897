"""Geometry of C^n (Euclidean) and of the unit ball B_n (Moebius, Bergman metric).

Points are complex numpy arrays whose last axis has length n.  A Python
complex scalar is promoted to a point of C^1.  All functions broadcast over
leading axes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CoverageError, DomainError, ParameterError

_BALL_TOL = 0.0


def as_points(z, n: int | None = None) -> np.ndarray:
    """Promote scalars / sequences to an array with trailing dimension n."""
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if n is not None and arr.shape[-1] != n:
        if n == 1:
            arr = arr[..., None]
        else:
            raise ParameterError(f"expected points in C^{n}, got shape {arr.shape}")
    return arr


def dot(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """z . conj(w) summed over the coordinate axis."""
    return np.sum(z * np.conj(w), axis=-1)


def norm2(z: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(z) ** 2, axis=-1)


def _check_ball(*pts: np.ndarray) -> None:
    for p in pts:
        if np.any(norm2(p) >= 1.0 - _BALL_TOL):
            raise DomainError("point outside the open unit ball")


def mobius(a, z) -> np.ndarray:
    """phi_a(z): the involutive automorphism of B_n exchanging 0 and a."""
    a = as_points(a)
    z = as_points(z, a.shape[-1])
    _check_ball(a, z)
    aa = norm2(a)[..., None]
    za = dot(z, a)[..., None]
    safe = np.where(aa > 0, aa, 1.0)
    proj = za / safe * a
    s = np.sqrt(1.0 - aa)
    num = a - proj - s * (z - proj)
    out = num / (1.0 - za)
    return np.where(aa > 0, out, -z)


def disk_mobius(a, z):
    """Scalar (n=1) version of mobius for plain complex arrays."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return (a - z) / (1.0 - np.conj(a) * z)


def pseudo_hyperbolic(u, v) -> np.ndarray:
    """rho(u, v) = |phi_u(v)|, computed without cancellation for nearby points."""
    u = as_points(u)
    v = as_points(v, u.shape[-1])
    _check_ball(u, v)
    n = u.shape[-1]
    diff = norm2(u - v)
    wedge = np.zeros(np.broadcast_shapes(u.shape[:-1], v.shape[:-1]))
    for i in range(n):
        for j in range(i + 1, n):
            wedge = wedge + np.abs(u[..., i] * v[..., j] - u[..., j] * v[..., i]) ** 2
    den = np.abs(1.0 - dot(v, u)) ** 2
    rho2 = np.clip((diff - wedge) / den, 0.0, 1.0)
    return np.sqrt(rho2)


def bergman_metric(u, v) -> np.ndarray:
    """beta(u, v) = artanh rho(u, v)."""
    rho = pseudo_hyperbolic(u, v)
    with np.errstate(divide="ignore"):
        return np.arctanh(np.minimum(rho, 1.0))


def euclidean_metric(u, v) -> np.ndarray:
    u = as_points(u)
    v = as_points(v, u.shape[-1])
    return np.sqrt(norm2(u - v))


def invariant_measure_weight(w) -> np.ndarray:
    """Density (1-|w|^2)^{-(n+1)} of d lambda with respect to dv."""
    w = as_points(w)
    _check_ball(w)
    return (1.0 - norm2(w)) ** (-(w.shape[-1] + 1))


def hyperbolic_ball_volume(r: float, n: int = 1) -> float:
    """lambda(D(0, r)) = sinh(r)^(2n)."""
    return float(np.sinh(r) ** (2 * n))


def hyperbolic_radial_density(beta, n: int = 1):
    """d lambda = density(beta) d beta d sigma in geodesic polar coordinates."""
    beta = np.asarray(beta, dtype=float)
    return 2 * n * np.sinh(beta) ** (2 * n - 1) * np.cosh(beta)


def contraction_ratio(u, v, z) -> np.ndarray:
    """tanh beta(phi_u z, phi_v z) (1-|z|)^2 / tanh beta(u, v).

    The supremum of this ratio over small beta(u, v) is the constant G in
    the contraction estimate comparing translated lattice points.
    """
    top = pseudo_hyperbolic(mobius(u, z), mobius(v, z))
    zr = np.sqrt(norm2(as_points(z)))
    return top * (1 - zr) ** 2 / pseudo_hyperbolic(u, v)


# --------------------------------------------------------------------------- lattices

METRICS = ("euclidean", "bergman")


@dataclass(frozen=True, eq=False)
class Lattice:
    points: np.ndarray
    delta: float
    metric: str
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts = np.array(pts, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.metric not in METRICS:
            raise ParameterError(f"unknown metric {self.metric!r}")
        if self.labels is not None:
            labels = tuple(int(x) for x in self.labels)
            if len(labels) != len(pts):
                raise ParameterError("one label per point required")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def num_classes(self) -> int:
        return 0 if self.labels is None else len(set(self.labels))

    def distances(self, other=None) -> np.ndarray:
        q = self.points if other is None else as_points(other, self.n)
        dist = bergman_metric if self.metric == "bergman" else euclidean_metric
        return dist(self.points[:, None, :], q[None, :, :])

    def min_separation(self) -> float:
        if len(self) < 2:
            return float("inf")
        d = self.distances()
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    def classes(self) -> list[np.ndarray]:
        if self.labels is None:
            return [self.points]
        lab = np.array(self.labels)
        return [self.points[lab == j] for j in sorted(set(self.labels))]

    def to_dict(self) -> dict:
        pts = [[float(c) for z in p for c in (z.real, z.imag)] for p in self.points]
        return {
            "metric": self.metric,
            "delta": float(self.delta),
            "n": self.n,
            "points": pts,
            "labels": None if self.labels is None else list(self.labels),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "Lattice":
        n = int(doc["n"])
        raw = np.asarray(doc["points"], dtype=float).reshape(-1, 2 * n)
        pts = raw[:, 0::2] + 1j * raw[:, 1::2]
        return cls(pts, float(doc["delta"]), doc["metric"], doc.get("labels"))

    @classmethod
    def from_json(cls, text: str) -> "Lattice":
        return cls.from_dict(json.loads(text))


def _sample_ball(rng: np.random.Generator, count: int, radius: float, n: int, metric: str):
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    g /= np.sqrt(norm2(g))[:, None]
    u = rng.random(count) ** (1.0 / (2 * n))
    if metric == "bergman":
        # uniform in hyperbolic volume: sinh^(2n)(beta) is uniform
        r = np.tanh(np.arcsinh(u * np.sinh(radius)))
    else:
        r = radius * u
    return g * r[:, None]


def sample_ball(count: int, radius: float, n: int = 1, metric: str = "bergman", seed: int = 0):
    """Uniform (hyperbolic or Euclidean volume) samples of the metric ball."""
    return _sample_ball(np.random.default_rng(seed), count, radius, n, metric)


def _square_grid(delta: float, radius: float, n: int) -> np.ndarray:
    k = int(np.floor(radius / delta))
    ax = delta * np.arange(-k, k + 1)
    mesh = np.meshgrid(*([ax] * (2 * n)), indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    pts = flat[:, 0::2] + 1j * flat[:, 1::2]
    keep = norm2(pts) <= radius**2 * (1 + 1e-12)
    pts = pts[keep]
    keys = [(round(float(norm2(p)), 12),) + tuple(float(c) for z in p for c in (z.real, z.imag)) for p in pts]
    return pts[sorted(range(len(pts)), key=keys.__getitem__)]


def build_lattice(
    metric: str,
    delta: float,
    radius: float,
    seed: int = 0,
    n: int = 1,
    grid: str | None = None,
    max_points: int | None = None,
    pool: int = 20000,
) -> Lattice:
    """Maximal delta-separated subset of the metric ball B(0, radius).

    Greedy farthest-point insertion over seeded candidate pools, starting at
    the origin and refreshing the pool until no candidate can be added.
    ``grid='square'`` gives the exact spacing-delta grid (Euclidean only).
    ``max_points`` keeps the points closest to the origin.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}")
    if grid is not None:
        if metric != "euclidean" or grid != "square":
            raise ParameterError("only the Euclidean square grid is available")
        pts = _square_grid(delta, radius, n)
    else:
        pts = _farthest_point(metric, delta, radius, n, seed, pool)
    if max_points is not None and len(pts) > max_points:
        key = norm2(pts)
        pts = pts[np.argsort(key, kind="stable")[:max_points]]
    return Lattice(pts, delta, metric)


def _farthest_point(metric, delta, radius, n, seed, pool):
    rng = np.random.default_rng(seed)
    dist = bergman_metric if metric == "bergman" else euclidean_metric
    chosen = [np.zeros(n, dtype=complex)]
    for _ in range(50):
        cand = _sample_ball(rng, pool, radius, n, metric)
        current = np.array(chosen)
        dmin = np.full(pool, np.inf)
        for start in range(0, len(current), 256):
            block = current[start : start + 256]
            dmin = np.minimum(dmin, dist(cand[:, None, :], block[None, :, :]).min(axis=1))
        added = 0
        while True:
            i = int(np.argmax(dmin))
            if dmin[i] < delta:
                break
            chosen.append(cand[i])
            dmin = np.minimum(dmin, dist(cand, cand[i][None, :]))
            added += 1
        if added == 0:
            break
    return np.array(chosen)


def is_maximal(lattice: Lattice, radius: float, samples: int = 10_000, seed: int = 1) -> bool:
    """Rejection-sampling maximality check: no sampled admissible point is far from all."""
    cand = sample_ball(samples, radius, lattice.n, lattice.metric, seed)
    d = lattice.distances(cand).min(axis=0)
    return bool(np.all(d < lattice.delta))


# --------------------------------------------------------------------- partitioning


def partition_radius(r: float, rho: float) -> float:
    """R = r + log((1+rho)/(1-rho)), the conflict threshold."""
    return r + np.log((1 + rho) / (1 - rho))


def partition_class_bound(R: float, c: float, n: int = 1) -> int:
    """floor(lambda(D(0, R + c/2)) / lambda(D(0, c/2))) + 2."""
    return int(np.floor(hyperbolic_ball_volume(R + c / 2, n) / hyperbolic_ball_volume(c / 2, n))) + 2


def partition_separated(lattice: Lattice, r: float, rho: float) -> Lattice:
    """Colour the points so that each class stays r-separated after any phi_u(z), |z| <= rho.

    Greedy colouring of the conflict graph (edge when beta(u, v) <= R), visiting
    points by distance from the origin and then lexicographically.
    """
    if not 0 <= rho < 1:
        raise ParameterError("rho must lie in [0, 1)")
    if r < 0:
        raise ParameterError("r must be nonnegative")
    if lattice.metric != "bergman":
        raise ParameterError("partitioning is defined for Bergman lattices")
    R = partition_radius(r, rho)
    pts = lattice.points
    m = len(pts)
    keys = [(float(norm2(p).round(14)),) + tuple(float(c) for z in p for c in (z.real, z.imag)) for p in pts]
    order = sorted(range(m), key=lambda i: keys[i])
    d = lattice.distances()
    conflict = (d <= R) & ~np.eye(m, dtype=bool) if R > 0 else np.zeros((m, m), dtype=bool)
    labels = [-1] * m
    for i in order:
        taken = {labels[j] for j in np.flatnonzero(conflict[i]) if labels[j] >= 0}
        colour = 0
        while colour in taken:
            colour += 1
        labels[i] = colour
    return Lattice(pts, lattice.delta, lattice.metric, tuple(labels))


def pushforward_separated(lattice: Lattice, r: float, z_grid) -> bool:
    """True when every class {phi_u(z)} is r-separated for every z in the grid."""
    z_grid = as_points(z_grid, lattice.n)
    if z_grid.ndim == 1:
        z_grid = z_grid[None, :]
    for cls in lattice.classes():
        if len(cls) < 2:
            continue
        for z in z_grid:
            moved = mobius(cls, np.broadcast_to(z, cls.shape))
            d = bergman_metric(moved[:, None, :], moved[None, :, :])
            d[np.diag_indices_from(d)] = np.inf
            if d.min() < r:
                return False
    return True


def disk_grid(radius: float, count: int = 9) -> np.ndarray:
    """Deterministic grid of `count` points in the closed disk |z| <= radius (n=1)."""
    if count == 1:
        return np.zeros((1, 1), dtype=complex)
    ring = count - 1
    ang = 2 * np.pi * np.arange(ring) / ring
    pts = np.concatenate([[0.0], radius * np.exp(1j * ang)])
    return pts[:, None]


# -------------------------------------------------------------------------- bumps


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


@dataclass(frozen=True)
class SmoothBump:
    """Radial bump: 1 on D(0, l), 0 off D(0, 2l), smoothstep in the geodesic radius between."""

    l: float
    profile: str = "smoothstep"

    def radial(self, beta):
        s = (np.asarray(beta, dtype=float) - self.l) / self.l
        return 1.0 - smoothstep(s)

    def __call__(self, xi) -> np.ndarray:
        xi = as_points(xi)
        r = np.sqrt(norm2(xi))
        if np.any(r >= 1):
            raise DomainError("bump evaluated outside the ball")
        return self.radial(np.arctanh(r))

    def volume(self, n: int = 1, nodes: int = 64) -> float:
        """a_l = integral of the bump against d lambda."""
        from scipy.special import roots_legendre

        x, w = roots_legendre(nodes)
        total = 0.0
        for lo, hi in ((0.0, self.l), (self.l, 2 * self.l)):
            b = lo + (hi - lo) * (x + 1) / 2
            total += (hi - lo) / 2 * np.sum(w * self.radial(b) * hyperbolic_radial_density(b, n))
        return float(total)


def bump(l: float) -> SmoothBump:
    if l <= 0:
        raise ParameterError("bump radius must be positive")
    return SmoothBump(float(l))


def bump_translate(b: SmoothBump, zeta) -> Callable[[np.ndarray], np.ndarray]:
    """xi -> Phi(phi_zeta(xi))."""
    zeta = as_points(zeta)

    def translated(xi):
        xi = as_points(xi, zeta.shape[-1])
        return b(mobius(np.broadcast_to(zeta, xi.shape), xi))

    return translated


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    centers: Lattice
    c: float
    _bump: SmoothBump = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_bump", bump(self.c))

    def numerators(self, xi) -> np.ndarray:
        xi = as_points(xi, self.centers.n)
        out = []
        for zeta in self.centers.points:
            out.append(self._bump(mobius(np.broadcast_to(zeta, xi.shape), xi)))
        return np.array(out)

    def __call__(self, xi) -> np.ndarray:
        """All Psi_zeta(xi), stacked along a leading axis."""
        num = self.numerators(xi)
        den = num.sum(axis=0)
        if np.any(den <= 0):
            raise CoverageError("sample point not covered by the partition of unity")
        return num / den

    def psi(self, index: int, xi) -> np.ndarray:
        return self(xi)[index]


def partition_of_unity(lattice: Lattice, c: float) -> PartitionOfUnity:
    if c <= 0:
        raise ParameterError("c must be positive")
    if lattice.metric != "bergman":
        raise ParameterError("partition of unity needs a Bergman lattice")
    return PartitionOfUnity(lattice, float(c))


# ------------------------------------------------------------------- translations


def translate_fock(phi, z):
    """alpha_z phi: w -> phi(w + z)."""
    from .symbols import translate_fock as _tf

    return _tf(phi, z)


def translate_bergman(f, z):
    """tau_z f: u -> f(phi_u(z))."""
    from .symbols import translate_bergman as _tb

    return _tb(f, z)


__all__: Sequence[str] = [
    "Lattice",
    "PartitionOfUnity",
    "SmoothBump",
    "as_points",
    "bergman_metric",
    "build_lattice",
    "bump",
    "bump_translate",
    "contraction_ratio",
    "disk_mobius",
    "euclidean_metric",
    "hyperbolic_ball_volume",
    "invariant_measure_weight",
    "is_maximal",
    "mobius",
    "partition_class_bound",
    "partition_of_unity",
    "partition_radius",
    "partition_separated",
    "pseudo_hyperbolic",
    "pushforward_separated",
    "translate_bergman",
    "translate_fock",
]
