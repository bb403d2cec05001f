"""Catalog of analytic immersions into round spheres and into S^1(r) x S^2(s).

Every catalog surface is described by its mixed partial derivatives of any
order, ``partial(u, v, i, j)`` = d^{i+j} x / du^i dv^j, evaluated on arrays of
parameters. Most surfaces are finite sums of terms ``c * cos(a*u + b*v + phase)``
which makes exact derivatives of arbitrary order trivial; the bipolar surface
is built from its parent by the Leibniz rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import GeometryError

ROUND_SPHERE = "round_sphere"
PRODUCT = "product"

SURFACE_NAMES = ("clifford", "equilateral", "section5", "sphere", "lawson31", "bipolar-lawson31")

# index pairs of Lambda^2 R^4, in the fixed order 12, 13, 14, 23, 24, 34
WEDGE_PAIRS = tuple(combinations(range(4), 2))


@dataclass(frozen=True)
class LatticeDomain:
    """Fundamental domain of R^2 / Z b1 + Z b2, sampled on an N1 x N2 grid."""

    basis: np.ndarray
    resolution: tuple[int, int] = (64, 64)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.shape != (2, 2):
            raise ValueError("lattice basis must be two vectors in R^2")
        if abs(np.linalg.det(basis)) < 1e-14:
            raise ValueError("lattice generators are linearly dependent")
        if min(self.resolution) < 3:
            raise ValueError("resolution components must be >= 3")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))

    def with_resolution(self, res) -> "LatticeDomain":
        return LatticeDomain(self.basis, tuple(res))


@dataclass(frozen=True)
class SphereDomain:
    """Longitude/latitude chart of S^2 closed up with two pole vertices.

    Chart 0 is (lon, lat); chart 1 is the same chart with the ambient axes
    cycled so that both poles of chart 0 are regular points of chart 1.
    """

    resolution: tuple[int, int] = (512, 256)

    def __post_init__(self):
        if min(self.resolution) < 3:
            raise ValueError("resolution components must be >= 3")
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))

    def with_resolution(self, res) -> "SphereDomain":
        return SphereDomain(tuple(res))


PartialFn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class AnalyticSurface:
    """A parametric surface x(u, v) in the unit sphere of R^{ambient_dim}.

    ``partial(u, v, i, j, chart=0)`` returns an array of shape
    ``broadcast(u, v).shape + (ambient_dim,)``.
    """

    name: str
    ambient_dim: int
    domain: LatticeDomain | SphereDomain
    partial: PartialFn = field(repr=False)
    ambient_kind: str = ROUND_SPHERE
    product_radius: float | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    euler_characteristic: int = 0
    covering: int = 1
    covering_note: str = ""

    def position(self, u, v, chart: int = 0) -> np.ndarray:
        return self.partial(u, v, 0, 0, chart)

    def derivatives(self, u, v, chart: int = 0):
        """Return (x, x_u, x_v, x_uu, x_uv, x_vv)."""
        p = self.partial
        return (
            p(u, v, 0, 0, chart),
            p(u, v, 1, 0, chart),
            p(u, v, 0, 1, chart),
            p(u, v, 2, 0, chart),
            p(u, v, 1, 1, chart),
            p(u, v, 0, 2, chart),
        )

    @property
    def is_product(self) -> bool:
        return self.ambient_kind == PRODUCT


# --------------------------------------------------------------------------
# trigonometric surfaces

Term = tuple[float, float, float, float]  # (coefficient, a, b, phase)


def _trig_partial(components: Sequence[Sequence[Term]], charts: Sequence[Sequence[int]] | None = None):
    dim = len(components)
    charts = charts or [list(range(dim))]

    def partial(u, v, i, j, chart=0):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(u, v).shape
        base = np.zeros(shape + (dim,))
        shift = (i + j) * math.pi / 2
        for k, terms in enumerate(components):
            for c, a, b, phase in terms:
                scale = c * a**i * b**j
                if scale != 0.0:
                    base[..., k] += scale * np.cos(a * u + b * v + phase + shift)
        return base[..., list(charts[chart])]

    return partial


_H = -math.pi / 2  # cos(t - pi/2) = sin t


def clifford_torus() -> AnalyticSurface:
    """(cos u, sin u, cos v, sin v)/sqrt(2), the minimal flat torus in S^3."""
    c = 1 / math.sqrt(2)
    comps = [[(c, 1, 0, 0)], [(c, 1, 0, _H)], [(c, 0, 1, 0)], [(c, 0, 1, _H)]]
    return AnalyticSurface(
        name="clifford",
        ambient_dim=4,
        domain=LatticeDomain([[2 * math.pi, 0], [0, 2 * math.pi]]),
        partial=_trig_partial(comps),
    )


def equilateral_torus() -> AnalyticSurface:
    """Flat torus on the hexagonal lattice, minimally immersed in S^5.

    Induced metric is (1/3)[[2, 1], [1, 2]]: equal generators at 60 degrees.
    """
    c = 1 / math.sqrt(3)
    comps = [
        [(c, 1, 0, 0)],
        [(c, 1, 0, _H)],
        [(c, 0, 1, 0)],
        [(c, 0, 1, _H)],
        [(c, 1, 1, 0)],
        [(c, 1, 1, math.pi / 2)],  # -sin(u + v)
    ]
    return AnalyticSurface(
        name="equilateral",
        ambient_dim=6,
        domain=LatticeDomain([[2 * math.pi, 0], [0, 2 * math.pi]]),
        partial=_trig_partial(comps),
    )


def section5_torus(r: float, t: float, h: float, tol: float = 1e-9) -> AnalyticSurface:
    """Flat torus S^1(r) x S^1(t) x {h} inside S^1(r) x S^2(s), s^2 = t^2 + h^2."""
    if not (r > 0 and t > 0):
        raise GeometryError(f"radii must be positive, got r={r}, t={t}")
    if abs(r * r + t * t + h * h - 1.0) > tol:
        raise GeometryError(f"r^2 + t^2 + h^2 must equal 1, got {r * r + t * t + h * h!r}")
    comps = [
        [(r, 1, 0, 0)],
        [(r, 1, 0, _H)],
        [(t, 0, 1, 0)],
        [(t, 0, 1, _H)],
        [(h, 0, 0, 0)] if h != 0 else [],
    ]
    return AnalyticSurface(
        name="section5",
        ambient_dim=5,
        domain=LatticeDomain([[2 * math.pi, 0], [0, 2 * math.pi]]),
        partial=_trig_partial(comps),
        ambient_kind=PRODUCT,
        product_radius=float(r),
        params={"r": float(r), "t": float(t), "h": float(h)},
    )


def great_sphere(n: int = 3) -> AnalyticSurface:
    """Totally geodesic S^2 in S^n (first three coordinates)."""
    if n < 2:
        raise GeometryError("ambient sphere dimension must be >= 2")
    comps: list[list[Term]] = [
        [(0.5, 1, 1, 0), (0.5, 1, -1, 0)],  # cos u cos v
        [(0.5, 1, 1, _H), (0.5, 1, -1, _H)],  # sin u cos v
        [(1.0, 0, 1, _H)],  # sin v
    ]
    comps += [[] for _ in range(n + 1 - 3)]
    rest = list(range(3, n + 1))
    charts = [list(range(n + 1)), [2, 0, 1] + rest]
    return AnalyticSurface(
        name="sphere",
        ambient_dim=n + 1,
        domain=SphereDomain(),
        partial=_trig_partial(comps, charts),
        params={"n": n},
        euler_characteristic=2,
    )


def lawson_torus_31() -> AnalyticSurface:
    """psi(x, y) = (cos3x cos y, sin3x cos y, cos x sin y, sin x sin y) in S^3.

    The square [0, 2pi)^2 covers the torus twice: psi(x + pi, y + pi) = psi(x, y).
    """
    comps = [
        [(0.5, 3, 1, 0), (0.5, 3, -1, 0)],
        [(0.5, 3, 1, _H), (0.5, 3, -1, _H)],
        [(0.5, 1, 1, _H), (-0.5, 1, -1, _H)],
        [(0.5, 1, -1, 0), (-0.5, 1, 1, 0)],
    ]
    return AnalyticSurface(
        name="lawson31",
        ambient_dim=4,
        domain=LatticeDomain([[2 * math.pi, 0], [0, 2 * math.pi]]),
        partial=_trig_partial(comps),
        covering=2,
        covering_note="[0,2pi)^2 double covers tau_{3,1} (period (pi, pi))",
    )


# --------------------------------------------------------------------------
# bipolar construction


def cross4(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vector n in R^4 with <n, w> = det[a; b; c; w] for every w."""
    m = np.stack([a, b, c], axis=-2)
    out = np.empty(np.broadcast(a, b, c).shape)
    for i in range(4):
        cols = [k for k in range(4) if k != i]
        out[..., i] = (-1) ** (3 + i) * np.linalg.det(m[..., cols])
    return out


def wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a ^ b in Lambda^2 R^4 = R^6, pairs ordered 12, 13, 14, 23, 24, 34."""
    return np.stack([a[..., i] * b[..., j] - a[..., j] * b[..., i] for i, j in WEDGE_PAIRS], axis=-1)


def _slot_terms(i: int, j: int):
    """Expansion of d^(i,j) cross4(psi, psi_u, psi_v) as multilinear terms.

    Each term is a triple of derivative multi-indices, one per slot.
    """
    terms = {((0, 0), (1, 0), (0, 1)): 1}
    for step in [(1, 0)] * i + [(0, 1)] * j:
        nxt: dict = {}
        for slots, coef in terms.items():
            for k in range(3):
                new = list(slots)
                new[k] = (slots[k][0] + step[0], slots[k][1] + step[1])
                key = tuple(new)
                nxt[key] = nxt.get(key, 0) + coef
        terms = nxt
    return terms


def _normal_partials(P, order: int = 2):
    """Partials up to ``order`` of the unit normal n/|n|, n = cross4(psi, psi_u, psi_v).

    ``P[(i, j)]`` holds the base partials (needed up to order + 1).
    """
    n = {}
    for i in range(order + 1):
        for j in range(order + 1 - i):
            acc = 0.0
            for (s0, s1, s2), coef in _slot_terms(i, j).items():
                if s0 == s1 or s1 == s2 or s0 == s2:
                    continue  # repeated argument, vanishes
                acc = acc + coef * cross4(P[s0], P[s1], P[s2])
            n[(i, j)] = acc

    q = np.einsum("...k,...k->...", n[(0, 0)], n[(0, 0)])
    if np.any(q < 1e-24):
        raise GeometryError("degenerate tangent frame: Gauss map undefined")
    first = [d for d in [(1, 0), (0, 1)] if d in n]
    dq = {d: 2 * np.einsum("...k,...k->...", n[(0, 0)], n[d]) for d in first}
    # w = q^{-1/2} and its partials
    w = {(0, 0): q**-0.5}
    for d in first:
        w[d] = -0.5 * q**-1.5 * dq[d]
    second = {(2, 0): ((1, 0), (1, 0)), (1, 1): ((1, 0), (0, 1)), (0, 2): ((0, 1), (0, 1))}
    for d, (a, b) in second.items():
        if d not in n:
            continue
        dqab = 2 * (np.einsum("...k,...k->...", n[a], n[b]) + np.einsum("...k,...k->...", n[(0, 0)], n[d]))
        w[d] = 0.75 * q**-2.5 * dq[a] * dq[b] - 0.5 * q**-1.5 * dqab

    def leibniz(i, j):
        acc = 0.0
        for a in range(i + 1):
            for b in range(j + 1):
                acc = acc + math.comb(i, a) * math.comb(j, b) * n[(a, b)] * w[(i - a, j - b)][..., None]
        return acc

    return {(i, j): leibniz(i, j) for i in range(order + 1) for j in range(order + 1 - i)}


def bipolar(surface: AnalyticSurface) -> AnalyticSurface:
    """Lawson's bipolar surface psi ^ psi* in S^5, psi* the Gauss map in S^3."""
    if surface.ambient_dim != 4:
        raise GeometryError(f"bipolar needs a surface in S^3, got ambient dimension {surface.ambient_dim}")
    base = surface.partial

    def partial(u, v, i, j, chart=0):
        order = i + j
        if order > 2:
            raise NotImplementedError("bipolar partials are available up to order 2")
        P = {(a, b): base(u, v, a, b, chart) for a in range(order + 2) for b in range(order + 2 - a)}
        N = _normal_partials(P, order=order)
        acc = 0.0
        for a in range(i + 1):
            for b in range(j + 1):
                acc = acc + math.comb(i, a) * math.comb(j, b) * wedge(P[(a, b)], N[(i - a, j - b)])
        return acc

    domain = surface.domain
    covering, note = surface.covering, surface.covering_note
    if surface.name == "lawson31":
        # psi(x + pi, y) = psi(x, y + pi) = -psi(x, y) leaves psi ^ psi* unchanged
        domain = LatticeDomain([[math.pi, 0], [0, math.pi]], domain.resolution)
        covering, note = 2, "[0,pi)^2 is the orientable double cover of the bipolar Klein bottle"
    return AnalyticSurface(
        name=f"bipolar-{surface.name}",
        ambient_dim=6,
        domain=domain,
        partial=partial,
        params=dict(surface.params),
        euler_characteristic=surface.euler_characteristic,
        covering=covering,
        covering_note=note,
    )


def get_surface(name: str, **params) -> AnalyticSurface:
    """Look up a catalog surface by its CLI name."""
    if name == "clifford":
        return clifford_torus()
    if name == "equilateral":
        return equilateral_torus()
    if name == "section5":
        try:
            return section5_torus(params["r"], params["t"], params["h"])
        except KeyError as exc:
            raise GeometryError(f"section5 needs parameters r, t, h (missing {exc})") from None
    if name == "sphere":
        return great_sphere(int(params.get("n", 3)))
    if name == "lawson31":
        return lawson_torus_31()
    if name == "bipolar-lawson31":
        return bipolar(lawson_torus_31())
    raise KeyError(f"unknown surface {name!r}; choose from {', '.join(SURFACE_NAMES)}")
