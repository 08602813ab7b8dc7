"""Collide-and-stream time stepping on periodic boxes, disks, spheres and sphere octants.

Populations live on a grid padded by GHOST layers on every side. Each step
collides on all nodes with the population-space matrix M^-1 Psi M, fills the
ghost layers (periodic wrap, mirror images across symmetry planes, or zeros),
pulls streamed values, then rebuilds the populations that would have come from
solid nodes with interpolated (anti-)bounce-back.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .schemes import PsiMatrix, SchemeDefinition

log = logging.getLogger(__name__)

GHOST = 2
SURFACE_TOL = 1e-12


# ---------------------------------------------------------------- geometry

@dataclass(frozen=True)
class Geometry:
    kind: str                         # periodic | disk | sphere | octant
    shape: tuple[int, ...]            # interior node counts
    fluid_padded: np.ndarray = field(repr=False)
    center: tuple[float, ...] | None = None
    radius: float | None = None
    parity: tuple[int, ...] | None = None   # octant only: +1 even, -1 odd per axis

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def interior(self) -> tuple[slice, ...]:
        return tuple(slice(GHOST, GHOST + n) for n in self.shape)

    @property
    def fluid(self) -> np.ndarray:
        return self.fluid_padded[self.interior]

    @property
    def fluid_count(self) -> int:
        return int(self.fluid.sum())

    def coordinates(self, padded: bool = False) -> list[np.ndarray]:
        """Node positions relative to the center (plain indices for periodic boxes)."""
        off = GHOST if padded else 0
        axes = [np.arange(n + (2 * GHOST if padded else 0), dtype=float) - off for n in self.shape]
        grids = np.meshgrid(*axes, indexing="ij")
        if self.center is None:
            return grids
        return [g - c for g, c in zip(grids, self.center)]


def _padded_shape(shape):
    return tuple(n + 2 * GHOST for n in shape)


def periodic_box(shape) -> Geometry:
    shape = tuple(int(n) for n in shape)
    if any(n < 1 for n in shape):
        raise ValueError("box dimensions must be positive")
    return Geometry("periodic", shape, np.ones(_padded_shape(shape), dtype=bool))


def _ball(kind, radius, center_offset, shape, dim):
    if radius <= 0:
        raise ValueError("radius must be positive")
    off = tuple(float(c) for c in center_offset)
    if len(off) != dim:
        raise ValueError(f"center offset needs {dim} components")
    if shape is None:
        n = 2 * int(math.ceil(radius + max(abs(c) for c in off))) + 3
        shape = (n,) * dim
    shape = tuple(int(n) for n in shape)
    center = tuple((n - 1) / 2 + c for n, c in zip(shape, off))
    for n, c in zip(shape, center):
        if c - radius <= -1 + 1e-9 or c + radius >= n - 1e-9:
            raise ValueError(f"radius {radius} does not fit in the grid {shape}")
    g = Geometry(kind, shape, np.zeros(_padded_shape(shape), dtype=bool), center, float(radius))
    r2 = sum(x * x for x in g.coordinates(padded=True))
    mask = r2 < radius * radius
    _warn_on_surface(r2, radius)
    return Geometry(kind, shape, mask, center, float(radius))


def _warn_on_surface(r2, radius):
    hits = int(np.sum(np.abs(np.sqrt(r2) - radius) < SURFACE_TOL))
    if hits:
        log.warning("%d nodes lie on the boundary surface; links toward them get q = 1", hits)


def disk(radius: float, center_offset=(0.5, 0.3), shape=None) -> Geometry:
    return _ball("disk", radius, center_offset, shape, 2)


def sphere(radius: float, center_offset=(0.5, 0.3, 0.2), shape=None) -> Geometry:
    return _ball("sphere", radius, center_offset, shape, 3)


PARITY_NAMES = {"even": 1, "odd": -1, 1: 1, -1: -1}


def octant(radius: float, parity=("even", "even", "even"), shape=None) -> Geometry:
    """Positive octant of a sphere centered half a node below the first interior node.

    Ghost node -m mirrors node m-1 on each low face. An even plane copies the
    mirrored populations (density even, normal velocity zero on the plane); an
    odd plane negates them (density zero on the plane).
    """
    try:
        par = tuple(PARITY_NAMES[p] for p in parity)
    except KeyError:
        raise ValueError(f"parity flags must be even/odd, got {parity}") from None
    if len(par) != 3:
        raise ValueError("octant needs three parity flags")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if shape is None:
        shape = (int(math.ceil(radius)) + 2,) * 3
    shape = tuple(int(n) for n in shape)
    if any(n - 0.5 <= radius for n in shape):
        raise ValueError(f"radius {radius} does not fit in the grid {shape}")
    center = (-0.5, -0.5, -0.5)
    g = Geometry("octant", shape, np.zeros(_padded_shape(shape), dtype=bool), center, float(radius), par)
    r2 = sum(x * x for x in g.coordinates(padded=True))
    _warn_on_surface(r2, radius)
    return Geometry("octant", shape, r2 < radius * radius, center, float(radius), par)


# ---------------------------------------------------------------- boundary links

BOUNDARY_KINDS = {"bounce-back": 1.0, "anti-bounce-back": -1.0}


@dataclass(frozen=True)
class BoundaryRule:
    kind: str = "anti-bounce-back"
    order: int = 1

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"boundary kind must be one of {sorted(BOUNDARY_KINDS)}")
        if self.order not in (1, 2):
            raise ValueError("interpolation order must be 1 or 2")

    @property
    def sign(self) -> float:
        return BOUNDARY_KINDS[self.kind]


@dataclass(frozen=True)
class LinkTable:
    node: np.ndarray      # padded flat index of the fluid node x
    velocity: np.ndarray  # j with x + e_j solid
    q: np.ndarray         # fraction of the link inside the fluid

    def __len__(self) -> int:
        return len(self.q)


def _cut_fraction(d: np.ndarray, e: np.ndarray, radius: float) -> float:
    """Smallest t in (0, 1] with |d + t e| = R, for d inside and d + e outside."""
    a = float(e @ e)
    b = float(d @ e)
    c = float(d @ d) - radius * radius
    disc = b * b - a * c
    t = (-b + math.sqrt(max(disc, 0.0))) / a
    return min(max(t, 0.0), 1.0)


def build_boundary_links(geometry: Geometry, scheme: SchemeDefinition) -> LinkTable:
    if geometry.dim != scheme.dim:
        raise ValueError(f"geometry is {geometry.dim}D but the scheme is {scheme.dim}D")
    if geometry.kind == "periodic":
        return LinkTable(np.zeros(0, int), np.zeros(0, int), np.zeros(0))
    fp = geometry.fluid_padded
    pshape = fp.shape
    vel = np.asarray(scheme.lattice_velocities, dtype=int)
    interior = np.zeros(pshape, dtype=bool)
    interior[geometry.interior] = True
    src = np.argwhere(fp & interior)
    coords = geometry.coordinates(padded=True)
    nodes, js, qs = [], [], []
    on_surface = 0
    for j, e in enumerate(vel):
        if not e.any():
            continue
        dst = src + e
        hit = ~fp[tuple(dst.T)]
        for x in src[hit]:
            d = np.array([c[tuple(x)] for c in coords])
            q = _cut_fraction(d, e.astype(float), geometry.radius)
            if abs(float(np.linalg.norm(d + e)) - geometry.radius) < SURFACE_TOL:
                on_surface += 1
                q = 1.0
            nodes.append(np.ravel_multi_index(tuple(x), pshape))
            js.append(j)
            qs.append(q)
    if on_surface:
        log.info("%d boundary links end exactly on the surface (q = 1)", on_surface)
    return LinkTable(np.array(nodes, dtype=np.int64), np.array(js, dtype=np.int64), np.array(qs, dtype=float))


@dataclass(frozen=True)
class _LinkStencil:
    """Missing population = sum_c coef[c] * fstar[pop[c], node[c]] over five gathered terms."""
    target_pop: np.ndarray
    target_node: np.ndarray
    pop: np.ndarray       # shape (5, L)
    node: np.ndarray      # shape (5, L)
    coef: np.ndarray      # shape (5, L)
    fallbacks: int


def _stencil(links: LinkTable, rule: BoundaryRule, scheme: SchemeDefinition, geometry: Geometry) -> _LinkStencil:
    fp = geometry.fluid_padded
    pshape = fp.shape
    flat = fp.ravel()
    strides = np.array([int(np.prod(pshape[a + 1:])) for a in range(len(pshape))])
    vel = np.asarray(scheme.lattice_velocities, dtype=int)
    opp = np.array([scheme.opposite(j) for j in range(scheme.q)])
    L = len(links)
    pop = np.zeros((5, L), dtype=np.int64)
    node = np.zeros((5, L), dtype=np.int64)
    coef = np.zeros((5, L))
    sgn = rule.sign
    fallbacks = 0
    for i in range(L):
        x, j, q = int(links.node[i]), int(links.velocity[i]), float(links.q[i])
        jb = opp[j]
        step = int(vel[j] @ strides)
        x1, x2 = x - step, x - 2 * step
        ok1 = 0 <= x1 < flat.size and flat[x1]
        ok2 = ok1 and 0 <= x2 < flat.size and flat[x2]
        order = rule.order
        if order == 2 and not (ok2 if q < 0.5 else ok1):
            order = 1
        if order == 1 and q < 0.5 and not ok1:
            order = 0
        if order < rule.order:
            fallbacks += 1
        terms = []
        if order == 0:
            terms = [(j, x, sgn)]
        elif order == 1 and q < 0.5:
            terms = [(j, x, sgn * 2 * q), (j, x1, sgn * (1 - 2 * q))]
        elif order == 1:
            terms = [(j, x, sgn / (2 * q)), (jb, x, (2 * q - 1) / (2 * q))]
        elif q < 0.5:
            terms = [(j, x, sgn * q * (1 + 2 * q)), (j, x1, sgn * (1 - 4 * q * q)),
                     (j, x2, -sgn * q * (1 - 2 * q))]
        else:
            terms = [(j, x, sgn / (q * (2 * q + 1))), (jb, x, (2 * q - 1) / q),
                     (jb, x1, -(2 * q - 1) / (2 * q + 1))]
        for c, (p, n, w) in enumerate(terms):
            pop[c, i], node[c, i], coef[c, i] = p, n, w
    if fallbacks:
        log.info("%d boundary links fell back to a lower interpolation order", fallbacks)
    return _LinkStencil(opp[links.velocity], links.node.copy(), pop, node, coef, fallbacks)


# ---------------------------------------------------------------- stepping

@dataclass
class LatticeState:
    f: np.ndarray          # (Q, *padded shape)
    time: int = 0


class Simulator:
    """Linear lattice Boltzmann evolution for one scheme, collision matrix, geometry and boundary rule."""

    def __init__(self, scheme: SchemeDefinition, psi: PsiMatrix, geometry: Geometry,
                 rule: BoundaryRule | None = None):
        if geometry.dim != scheme.dim:
            raise ValueError(f"geometry is {geometry.dim}D but the scheme is {scheme.dim}D")
        self.scheme = scheme
        self.geometry = geometry
        self.rule = rule or BoundaryRule()
        m = scheme.moments.to_numpy()
        p = psi.to_numpy()
        self.moments = m
        self.moments_inv = np.linalg.inv(m)
        self.collision = self.moments_inv @ p @ m
        n = psi.conserved
        self.conserved = n
        rates = np.array([float(s) for s in psi.rates])
        # equilibrium moments m_k = (Psi_kj / s_k) W_j for the relaxed moments
        self.equilibrium_block = np.zeros((scheme.q, n))
        self.equilibrium_block[:n] = np.eye(n)
        for k in range(n, scheme.q):
            self.equilibrium_block[k] = p[k, :n] / rates[k]
        self.velocities = np.asarray(scheme.lattice_velocities, dtype=int)
        self.pshape = geometry.fluid_padded.shape
        self.links = build_boundary_links(geometry, scheme)
        self.stencil = _stencil(self.links, self.rule, scheme, geometry) if len(self.links) else None
        interior = np.zeros(self.pshape, dtype=bool)
        interior[geometry.interior] = True
        self.active = geometry.fluid_padded & interior
        self._active_flat = np.flatnonzero(self.active.ravel())
        if geometry.kind == "octant":
            self._mirror = [np.array([self._reflect(j, a) for j in range(scheme.q)]) for a in range(scheme.dim)]

    # -------------------------------------------------------------- fields

    def _reflect(self, j: int, axis: int) -> int:
        v = list(self.velocities[j])
        v[axis] = -v[axis]
        return self.scheme.lattice_velocities.index(tuple(v))

    def empty_state(self) -> LatticeState:
        return LatticeState(np.zeros((self.scheme.q,) + self.pshape))

    def equilibrium(self, conserved: np.ndarray) -> LatticeState:
        """Populations at equilibrium for conserved fields given on the interior grid."""
        w = np.asarray(conserved, dtype=float)
        if w.shape != (self.conserved,) + self.geometry.shape:
            raise ValueError(f"conserved fields need shape {(self.conserved,) + self.geometry.shape}")
        moments = np.tensordot(self.equilibrium_block, w, axes=1)
        f_int = np.tensordot(self.moments_inv, moments, axes=1)
        state = self.empty_state()
        state.f[(slice(None),) + self.geometry.interior] = f_int
        state.f *= self.active
        return state

    def conserved_fields(self, state: LatticeState) -> np.ndarray:
        f = state.f[(slice(None),) + self.geometry.interior]
        return np.tensordot(self.moments[:self.conserved], f, axes=1)

    def pack(self, state: LatticeState) -> np.ndarray:
        return state.f.reshape(self.scheme.q, -1)[:, self._active_flat].ravel()

    def unpack(self, vec: np.ndarray) -> LatticeState:
        state = self.empty_state()
        state.f.reshape(self.scheme.q, -1)[:, self._active_flat] = np.asarray(vec).reshape(self.scheme.q, -1)
        return state

    @property
    def size(self) -> int:
        return self.scheme.q * len(self._active_flat)

    # -------------------------------------------------------------- update pieces

    def collide(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(self.collision, f, axes=1)

    def fill_ghosts(self, f: np.ndarray) -> None:
        g = self.geometry
        if g.kind == "periodic":
            for a in range(g.dim):
                ax = a + 1
                n = g.shape[a]
                lo_src = [slice(None)] * f.ndim
                lo_dst = [slice(None)] * f.ndim
                lo_dst[ax] = slice(0, GHOST)
                lo_src[ax] = slice(n, n + GHOST)
                f[tuple(lo_dst)] = f[tuple(lo_src)]
                hi_dst = [slice(None)] * f.ndim
                hi_src = [slice(None)] * f.ndim
                hi_dst[ax] = slice(n + GHOST, n + 2 * GHOST)
                hi_src[ax] = slice(GHOST, 2 * GHOST)
                f[tuple(hi_dst)] = f[tuple(hi_src)]
            return
        inactive = ~self.active
        f[:, inactive] = 0.0
        if g.kind == "octant":
            apply_symmetry_planes(self, f)

    def stream(self, fstar: np.ndarray) -> np.ndarray:
        out = np.zeros_like(fstar)
        n = fstar.shape[1:]
        for j, e in enumerate(self.velocities):
            dst = tuple(slice(GHOST, m - GHOST) for m in n)
            src = tuple(slice(GHOST - c, m - GHOST - c) for c, m in zip(e, n))
            out[(j,) + dst] = fstar[(j,) + src]
        return out

    def apply_boundary(self, fnew: np.ndarray, fstar: np.ndarray) -> None:
        st = self.stencil
        if st is None:
            return
        q = self.scheme.q
        star = fstar.reshape(q, -1)
        value = np.sum(st.coef * star[st.pop, st.node], axis=0)
        fnew.reshape(q, -1)[st.target_pop, st.target_node] = value

    def step(self, state: LatticeState) -> LatticeState:
        fstar = self.collide(state.f)
        self.fill_ghosts(fstar)
        fnew = self.stream(fstar)
        self.apply_boundary(fnew, fstar)
        fnew *= self.active
        t = state.time + 1
        if not np.isfinite(fnew.sum()):
            raise FloatingPointError(f"non-finite populations after step {t}")
        return LatticeState(fnew, t)

    def run(self, state: LatticeState, steps: int) -> LatticeState:
        for _ in range(steps):
            state = self.step(state)
        return state

    def operator(self, power: int = 1):
        """Matrix-free map on packed fluid populations: power time steps."""
        def apply(vec):
            return self.pack(self.run(self.unpack(vec), power))
        return apply


def apply_symmetry_planes(sim: Simulator, f: np.ndarray) -> None:
    """Fill the low ghost layers of an octant with signed mirror images of the interior."""
    g = sim.geometry
    if g.kind != "octant":
        raise ValueError("symmetry planes apply to octant geometries only")
    for a in range(g.dim):
        ax = a + 1
        sign = float(g.parity[a])
        perm = sim._mirror[a]
        for m in range(1, GHOST + 1):
            dst = [slice(None)] * f.ndim
            src = [slice(None)] * f.ndim
            dst[ax] = GHOST - m
            src[ax] = GHOST + m - 1
            f[tuple(dst)] = sign * f[(perm,) + tuple(src[1:])]


# ---------------------------------------------------------------- initial fields

def plane_wave(geometry: Geometry, modes, component: int = 0, conserved: int = 1, phase: float = 0.0) -> np.ndarray:
    """cos(2 pi sum_a I_a x_a / N_a + phase) in one conserved component."""
    w = np.zeros((conserved,) + geometry.shape)
    grids = np.meshgrid(*[np.arange(n, dtype=float) for n in geometry.shape], indexing="ij")
    arg = sum(2 * math.pi * i * x / n for i, x, n in zip(modes, grids, geometry.shape))
    w[component] = np.cos(arg + phase)
    return w


def bessel_seed(geometry: Geometry, problem: str, ell: int, n: int, conserved: int) -> np.ndarray:
    """Conserved fields shaped like the analytic mode; zero outside the fluid."""
    from .analytics import bessel_j, bessel_zero

    coords = geometry.coordinates()
    R = geometry.radius
    w = np.zeros((conserved,) + geometry.shape)
    mask = geometry.fluid
    if problem == "heat-disk":
        x, y = coords
        r = np.hypot(x, y)
        z = bessel_zero(ell, n)
        vals = np.vectorize(lambda t: bessel_j(ell, t))(z * r / R)
        w[0] = vals * np.cos(ell * np.arctan2(y, x))
    elif problem == "heat-sphere":
        if ell != 0:
            raise ValueError("the sphere heat seed is the radial mode ell = 0")
        r = np.sqrt(sum(c * c for c in coords))
        z = bessel_zero(ell + 0.5, n)
        rr = np.maximum(r, 1e-12)
        vals = np.vectorize(lambda t: bessel_j(ell + 0.5, t))(z * rr / R) / np.sqrt(rr)
        w[0] = vals
    elif problem == "stokes-disk":
        if ell != 1:
            raise ValueError("the disk Stokes seed is the swirl mode ell = 1")
        x, y = coords
        r = np.hypot(x, y)
        z = bessel_zero(1, n)
        vals = np.vectorize(lambda t: bessel_j(1, t))(z * r / R)
        rr = np.maximum(r, 1e-12)
        w[1] = -vals * y / rr
        w[2] = vals * x / rr
    else:
        raise ValueError(f"no seed for problem {problem!r}")
    return w * mask


def random_fields(geometry: Geometry, conserved: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((conserved,) + geometry.shape) * geometry.fluid
