"""Bounded symbols with class tags, plus the built-in symbol registry."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ParameterError
from .geometry import as_points, bergman_metric, bump, mobius, norm2

TAGS = ("BUC", "C0", "translation-family")


@dataclass(frozen=True)
class BumpAtom:
    """coeff * Phi^l(phi_center(.)), a translated Bergman bump."""

    coeff: complex
    center: tuple[complex, ...]
    l: float


@dataclass(frozen=True, eq=False)
class SymbolFn:
    symbol_id: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    bound: float
    tags: frozenset = frozenset()
    domain: str = "fock"
    params: tuple = ()
    translate: tuple[complex, ...] | None = None
    atoms: tuple[BumpAtom, ...] | None = None
    radial: bool = False

    def __call__(self, pts) -> np.ndarray:
        pts = as_points(pts)
        return np.asarray(self.func(pts), dtype=complex)

    @property
    def is_c0(self) -> bool:
        return "C0" in self.tags

    def describe(self) -> dict:
        return {
            "id": self.symbol_id,
            "domain": self.domain,
            "tags": sorted(self.tags),
            "params": {k: _plain(v) for k, v in self.params},
            "bound": float(self.bound),
        }

    def modulus(self, deltas=(0.05, 0.1, 0.2, 0.4, 0.8), samples: int = 4000, seed: int = 0, n: int = 1):
        """Empirical continuity modulus: max |f(x) - f(y)| over sampled pairs within each delta."""
        return estimate_modulus(self, deltas, samples, seed, n)


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    return v


def estimate_modulus(sym: SymbolFn, deltas, samples: int = 4000, seed: int = 0, n: int = 1):
    rng = np.random.default_rng(seed)
    deltas = np.sort(np.asarray(deltas, dtype=float))
    out = []
    if sym.domain == "bergman":
        from .geometry import sample_ball

        x = sample_ball(samples, 3.0, n, "bergman", seed)
        for d in deltas:
            # y = phi_x(eta) with beta(0, eta) <= d realises beta(x, y) <= d
            eta = sample_ball(samples, d, n, "bergman", seed + 1)
            y = mobius(x, eta)
            out.append(float(np.max(np.abs(sym(x) - sym(y)))))
    else:
        x = (rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))) * 3
        for d in deltas:
            step = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
            step *= d * rng.random((samples, 1)) / np.sqrt(norm2(step))[:, None]
            out.append(float(np.max(np.abs(sym(x) - sym(x + step)))))
    out = np.maximum.accumulate(out)
    return tuple(zip(deltas.tolist(), out.tolist()))


def outer_shell_max(sym: SymbolFn, radius: float, samples: int = 512, n: int = 1) -> float:
    """max |f| on the sphere |w| = radius (sampled), the C0 decay probe."""
    ang = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    if n == 1:
        pts = (radius * np.exp(1j * ang))[:, None]
    else:
        rng = np.random.default_rng(0)
        g = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
        pts = radius * g / np.sqrt(norm2(g))[:, None]
    return float(np.max(np.abs(sym(pts))))


# -------------------------------------------------------------------- operations


def translate_fock(phi: SymbolFn, z) -> SymbolFn:
    """alpha_z phi: w -> phi(w + z)."""
    z = as_points(z)
    if np.all(z == 0):
        return phi
    base = phi.translate if phi.translate is not None else (0j,) * z.shape[-1]
    total = tuple(complex(a) + complex(b) for a, b in zip(base, z))
    inner = phi.func
    return replace(phi, func=lambda w: inner(as_points(w) + z), translate=total, radial=False)


def translate_bergman(f: SymbolFn, z) -> SymbolFn:
    """tau_z f: u -> f(phi_u(z))."""
    z = as_points(z)
    if np.all(z == 0):
        return f
    inner = f.func

    def moved(u):
        u = as_points(u, z.shape[-1])
        return inner(mobius(u, np.broadcast_to(z, u.shape)))

    return replace(f, symbol_id=f"tau[{f.symbol_id}]", func=moved, translate=tuple(complex(c) for c in z), atoms=None, radial=False)


def compose_mobius(f: SymbolFn, z) -> SymbolFn:
    """f o phi_z, the symbol appearing in the Moebius covariance identity."""
    z = as_points(z)
    inner = f.func

    def moved(w):
        w = as_points(w, z.shape[-1])
        return inner(mobius(np.broadcast_to(z, w.shape), w))

    atoms = None
    if f.atoms is not None and all(not any(a.center) for a in f.atoms):
        # Phi^l_0 o phi_z = Phi^l_z
        atoms = tuple(BumpAtom(a.coeff, tuple(complex(c) for c in z), a.l) for a in f.atoms)
    return replace(f, symbol_id=f"{f.symbol_id}@phi", func=moved, atoms=atoms, radial=False)


def conjugate(f: SymbolFn) -> SymbolFn:
    inner = f.func
    atoms = None if f.atoms is None else tuple(replace(a, coeff=complex(np.conj(a.coeff))) for a in f.atoms)
    return replace(f, symbol_id=f"conj[{f.symbol_id}]", func=lambda w: np.conj(inner(w)), atoms=atoms)


def scaled(f: SymbolFn, c: complex) -> SymbolFn:
    inner = f.func
    atoms = None if f.atoms is None else tuple(replace(a, coeff=a.coeff * c) for a in f.atoms)
    return replace(f, func=lambda w: c * inner(w), bound=abs(c) * f.bound, atoms=atoms)


def bump_sum(atoms: list[BumpAtom], n: int = 1, symbol_id: str = "bump-sum") -> SymbolFn:
    """Finite sum of translated Bergman bumps; carries its atoms for local quadrature."""
    atoms = tuple(atoms)
    bumps = {a.l: bump(a.l) for a in atoms}

    def evaluate(w):
        w = as_points(w, n)
        total = np.zeros(w.shape[:-1], dtype=complex)
        for a in atoms:
            c = np.asarray(a.center, dtype=complex)
            total = total + a.coeff * bumps[a.l](mobius(np.broadcast_to(c, w.shape), w))
        return total

    bound = float(sum(abs(a.coeff) for a in atoms))
    return SymbolFn(symbol_id, evaluate, bound, frozenset({"BUC", "C0"}), "bergman", atoms=atoms)


# ---------------------------------------------------------------------- registry


def _gauss(a: float = 1.0) -> SymbolFn:
    return SymbolFn(
        "gauss",
        lambda w: np.exp(-a * norm2(w)),
        1.0,
        frozenset({"BUC"}),
        "fock",
        (("a", float(a)),),
        radial=True,
    )


def _plane_wave(b_re: float = 1.0, b_im: float = 0.0) -> SymbolFn:
    b = complex(b_re, b_im)
    return SymbolFn(
        "plane-wave",
        lambda w: np.exp(1j * np.real(np.sum(w * np.conj(b), axis=-1))),
        1.0,
        frozenset({"BUC", "translation-family"}),
        "fock",
        (("b_im", float(b_im)), ("b_re", float(b_re))),
    )


def _oscillation() -> SymbolFn:
    return SymbolFn("oscillation", lambda w: np.sin(np.sqrt(norm2(w))), 1.0, frozenset({"BUC"}), "fock", radial=True)


def _hyperbolic_oscillation() -> SymbolFn:
    def f(w):
        return np.sin(bergman_metric(np.zeros_like(w), w))

    return SymbolFn("hyperbolic-oscillation", f, 1.0, frozenset({"BUC"}), "bergman", radial=True)


def _c0_bump(l: float = 0.5) -> SymbolFn:
    b = bump(l)
    return SymbolFn(
        "c0-bump",
        lambda w: b(w),
        1.0,
        frozenset({"BUC", "C0"}),
        "bergman",
        (("l", float(l)),),
        atoms=(BumpAtom(1.0, (0j,), float(l)),),
        radial=True,
    )


def _radial_poly(k: int = 1) -> SymbolFn:
    return SymbolFn(
        "radial-poly",
        lambda w: norm2(w) ** k + 0j,
        1.0,
        frozenset({"BUC"}),
        "bergman",
        (("k", int(k)),),
        radial=True,
    )


def _defect(k: int = 1) -> SymbolFn:
    return SymbolFn(
        "radial-defect",
        lambda w: (1.0 - norm2(w)) ** k + 0j,
        1.0,
        frozenset({"BUC", "C0"}),
        "bergman",
        (("k", int(k)),),
        radial=True,
    )


def _one(domain: str = "fock") -> SymbolFn:
    return SymbolFn("one", lambda w: np.ones(np.shape(w)[:-1], dtype=complex), 1.0, frozenset({"BUC"}), domain, (("domain", domain),), radial=True)


REGISTRY: dict[str, tuple[Callable[..., SymbolFn], str]] = {
    "gauss": (_gauss, "Gaussian exp(-a|w|^2) on C^n"),
    "plane-wave": (_plane_wave, "exp(i Re(w . conj b)) on C^n"),
    "oscillation": (_oscillation, "sin(|w|) on C^n"),
    "hyperbolic-oscillation": (_hyperbolic_oscillation, "sin(beta(0, w)) on the ball"),
    "c0-bump": (_c0_bump, "smoothstep bump, 1 on D(0,l), 0 off D(0,2l)"),
    "radial-poly": (_radial_poly, "|w|^(2k) on the ball"),
    "radial-defect": (_defect, "(1-|w|^2)^k on the ball"),
    "one": (_one, "the constant symbol 1"),
}


def make_symbol(symbol_id: str, **params) -> SymbolFn:
    try:
        factory, _ = REGISTRY[symbol_id]
    except KeyError:
        raise ParameterError(f"unknown symbol {symbol_id!r}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for symbol {symbol_id!r}: {exc}") from None


def list_symbols() -> list[dict]:
    rows = []
    for sid in sorted(REGISTRY):
        sym = make_symbol(sid)
        doc = sym.describe()
        doc["description"] = REGISTRY[sid][1]
        rows.append(doc)
    return rows


def dump_registry(rows: list[dict] | None = None) -> str:
    rows = list_symbols() if rows is None else rows
    return json.dumps({"schema_version": 1, "symbols": rows}, sort_keys=True, indent=2) + "\n"


def load_registry(text: str) -> list[dict]:
    doc = json.loads(text)
    return doc["symbols"]
