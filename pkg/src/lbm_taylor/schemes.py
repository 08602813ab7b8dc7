"""Velocity sets, moment matrices and linearized collision matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .algebra import MomentMatrix, ScalarMode, matmul

Vector = tuple[int, ...]


@dataclass(frozen=True)
class SchemeDefinition:
    name: str
    dim: int
    lattice_velocities: tuple[Vector, ...]
    lam: object
    moments: MomentMatrix
    moment_names: tuple[str, ...]
    conserved: int

    @property
    def mode(self) -> ScalarMode:
        return self.moments.mode

    @property
    def q(self) -> int:
        return len(self.lattice_velocities)

    def velocity(self, j: int) -> tuple:
        return tuple(self.lam * c for c in self.lattice_velocities[j])

    def opposite(self, j: int) -> int:
        target = tuple(-c for c in self.lattice_velocities[j])
        return self.lattice_velocities.index(target)

    def with_conserved(self, n: int) -> "SchemeDefinition":
        return SchemeDefinition(self.name, self.dim, self.lattice_velocities, self.lam,
                                self.moments, self.moment_names, n)


def _build(name, velocities, rows, names, lam, mode, conserved):
    m = MomentMatrix(rows, mode, name=f"{name} moment matrix")
    return SchemeDefinition(name, len(velocities[0]), tuple(velocities), lam, m, tuple(names), conserved)


def make_d1q3(lam=1, mode: ScalarMode = ScalarMode.RATIONAL) -> SchemeDefinition:
    lam = mode.coerce(lam)
    vel = [(-1,), (0,), (1,)]
    z = mode.zero
    rows = [[1, 1, 1], [-lam, z, lam], [lam * lam / 2, z, lam * lam / 2]]
    return _build("d1q3", vel, rows, ["density", "momentum", "energy"], lam, mode, 1)


def make_d2q5(lam=1, mode: ScalarMode = ScalarMode.RATIONAL) -> SchemeDefinition:
    lam = mode.coerce(lam)
    vel = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)]
    rows = [[1] * 5,
            [lam * v[0] for v in vel],
            [lam * v[1] for v in vel],
            [-4, 1, 1, 1, 1],
            [0, 1, -1, 1, -1]]
    names = ["density", "momentum_x", "momentum_y", "energy", "xx_minus_yy"]
    return _build("d2q5", vel, rows, names, lam, mode, 1)


def make_d2q9(lam=1, mode: ScalarMode = ScalarMode.RATIONAL) -> SchemeDefinition:
    lam = mode.coerce(lam)
    vel = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)]
    rows = [[1] * 9,
            [lam * v[0] for v in vel],
            [lam * v[1] for v in vel],
            [-4, -1, -1, -1, -1, 2, 2, 2, 2],
            [4, -2, -2, -2, -2, 1, 1, 1, 1],
            [0, -2, 0, 2, 0, 1, -1, -1, 1],
            [0, 0, -2, 0, 2, 1, 1, -1, -1],
            [0, 1, -1, 1, -1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 1, -1, 1, -1]]
    names = ["density", "momentum_x", "momentum_y", "energy", "energy_square",
             "heat_flux_x", "heat_flux_y", "stress_xx_yy", "stress_xy"]
    return _build("d2q9", vel, rows, names, lam, mode, 1)


def make_d3q7(lam=1, mode: ScalarMode = ScalarMode.RATIONAL) -> SchemeDefinition:
    lam = mode.coerce(lam)
    vel = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]
    rows = [[1] * 7] + [[lam * v[a] for v in vel] for a in range(3)] + [
        [0, -1, -1, 2, -1, -1, 2],
        [0, 1, -1, 0, 1, -1, 0],
        [-6, 1, 1, 1, 1, 1, 1]]
    names = ["density", "momentum_x", "momentum_y", "momentum_z",
             "stress_zz", "stress_xx_yy", "energy"]
    return _build("d3q7", vel, rows, names, lam, mode, 1)


D3Q19_VELOCITIES = (
    (0, 0, 0),
    (1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1),
    (1, 1, 0), (1, -1, 0), (-1, 1, 0), (-1, -1, 0),
    (0, 1, 1), (0, -1, 1), (0, 1, -1), (0, -1, -1),
    (1, 0, 1), (1, 0, -1), (-1, 0, 1), (-1, 0, -1),
)


def _d3q19_raw_rows(lam, mode: ScalarMode) -> list[list]:
    def row(fn):
        out = []
        for c in D3Q19_VELOCITIES:
            x, y, z = (lam * mode.coerce(a) for a in c)
            out.append(mode.coerce(fn(x, y, z)))
        return out

    sq = lambda x, y, z: x * x + y * y + z * z
    half21 = mode.coerce(21) / 2
    return [
        row(lambda x, y, z: 1 + 0 * x),
        row(lambda x, y, z: x),
        row(lambda x, y, z: y),
        row(lambda x, y, z: z),
        row(lambda x, y, z: 19 * sq(x, y, z)),
        row(lambda x, y, z: 2 * x * x - y * y - z * z),
        row(lambda x, y, z: y * y - z * z),
        row(lambda x, y, z: x * y),
        row(lambda x, y, z: y * z),
        row(lambda x, y, z: z * x),
        row(lambda x, y, z: 5 * x * sq(x, y, z)),
        row(lambda x, y, z: 5 * y * sq(x, y, z)),
        row(lambda x, y, z: 5 * z * sq(x, y, z)),
        row(lambda x, y, z: half21 * sq(x, y, z) ** 2),
        row(lambda x, y, z: 3 * (2 * x * x - y * y - z * z) * sq(x, y, z)),
        row(lambda x, y, z: 3 * (y * y - z * z) * sq(x, y, z)),
        row(lambda x, y, z: x * (y * y - z * z)),
        row(lambda x, y, z: y * (z * z - x * x)),
        row(lambda x, y, z: z * (x * x - y * y)),
    ]


def gram_schmidt(rows: list[list], start: int, mode: ScalarMode) -> list[list]:
    """Classical Gram-Schmidt of rows[start:] against every earlier row, without normalization."""
    out = [list(r) for r in rows[:start]]
    dot = lambda a, b: sum((x * y for x, y in zip(a, b)), start=mode.zero)
    for raw in rows[start:]:
        new = list(raw)
        for prev in out:
            g = dot(raw, prev) / dot(prev, prev)
            new = [a - g * b for a, b in zip(new, prev)]
        if all(x == 0 for x in new) if mode is not ScalarMode.FLOAT else max(abs(x) for x in new) < 1e-12:
            raise ArithmeticError("rank lost during moment orthogonalization")
        out.append(new)
    return out


def make_d3q19(lam=1, mode: ScalarMode = ScalarMode.RATIONAL) -> SchemeDefinition:
    lam = mode.coerce(lam)
    rows = gram_schmidt(_d3q19_raw_rows(lam, mode), 4, mode)
    names = ["density", "momentum_x", "momentum_y", "momentum_z", "energy",
             "stress_xx", "stress_ww", "stress_xy", "stress_yz", "stress_zx",
             "heat_flux_x", "heat_flux_y", "heat_flux_z", "energy_square",
             "energy_stress_xx", "energy_stress_ww", "third_x", "third_y", "third_z"]
    return _build("d3q19", D3Q19_VELOCITIES, rows, names, lam, mode, 4)


SCHEMES: dict[str, Callable[..., SchemeDefinition]] = {
    "d1q3": make_d1q3, "d2q5": make_d2q5, "d2q9": make_d2q9,
    "d3q7": make_d3q7, "d3q19": make_d3q19,
}


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class ModelKind:
    scheme: str
    conserved: int
    groups: Mapping[str, tuple[int, ...]]
    params: Mapping[str, object]          # defaults (None = required)
    equilibrium: Callable                 # (params, lam, mode) -> {(k, j): coefficient}


def _thermal_d1q3(p, lam, mode):
    return {(1, 0): p["u"] * lam, (2, 0): p["alpha"] * lam * lam / 2}


def _fluid_d1q3(p, lam, mode):
    return {(2, 0): p["alpha"] * lam * lam / 2}


def _thermal_d2q5(p, lam, mode):
    return {(3, 0): p["alpha"]}


def _advective_d2q9(p, lam, mode):
    u, v = p["u"], p["v"]
    a3 = 3 * (u * u + v * v) - 4 + 6 * p["xi"] if p["a3"] is None else p["a3"]
    a7 = u * u - v * v if p["a7"] is None else p["a7"]
    a8 = u * v if p["a8"] is None else p["a8"]
    return {(1, 0): u * lam, (2, 0): v * lam, (3, 0): a3, (4, 0): p["a4"],
            (5, 0): p["a5"] * u, (6, 0): p["a6"] * v, (7, 0): a7, (8, 0): a8}


def _fluid_d2q9(p, lam, mode):
    return {(3, 0): mode.coerce(-2), (4, 0): mode.one, (5, 1): -1 / lam, (6, 2): -1 / lam}


def _thermal_d3q7(p, lam, mode):
    return {(6, 0): p["alpha"]}


def d3q19_theta(alpha2):
    """Energy equilibrium coefficient giving sound speed sqrt(alpha2)*lambda."""
    return 57 * alpha2 - 30


def _fluid_d3q19(p, lam, mode):
    theta = d3q19_theta(p["alpha2"])
    eq = {(4, 0): theta * lam * lam, (13, 0): p["beta"] * lam ** 4}
    # heat flux follows momentum; -2/3 makes the viscous stress isotropic with nu = lam^2 sigma5 / 3
    for a in range(3):
        eq[(10 + a, 1 + a)] = p["heat_flux"] * lam * lam
    return eq


MODEL_KINDS: dict[str, ModelKind] = {
    "thermal-d1q3": ModelKind("d1q3", 1, {"s1": (1,), "s2": (2,)},
                              {"u": 0, "alpha": None}, _thermal_d1q3),
    "fluid-d1q3": ModelKind("d1q3", 2, {"s2": (2,)}, {"alpha": None}, _fluid_d1q3),
    "thermal-d2q5": ModelKind("d2q5", 1, {"s1": (1, 2), "s3": (3,), "s4": (4,)},
                              {"alpha": None}, _thermal_d2q5),
    "advective-d2q9": ModelKind("d2q9", 1,
                                {"s1": (1, 2), "s3": (3,), "s4": (4,), "s5": (5, 6), "s7": (7,), "s8": (8,)},
                                {"u": 0, "v": 0, "xi": None, "a3": None, "a4": None,
                                 "a5": -2, "a6": -2, "a7": None, "a8": None}, _advective_d2q9),
    "fluid-d2q9": ModelKind("d2q9", 3, {"s3": (3,), "s4": (4,), "s5": (5, 6), "s7": (7, 8)},
                            {}, _fluid_d2q9),
    "thermal-d3q7": ModelKind("d3q7", 1, {"s1": (1, 2, 3), "s4": (4, 5), "s6": (6,)},
                              {"alpha": None}, _thermal_d3q7),
    "fluid-d3q19": ModelKind("d3q19", 4,
                             {"s4": (4,), "s5": (5, 6, 7, 8, 9), "s10": (10, 11, 12), "s13": (13,),
                              "s14": (14, 15), "s16": (16, 17, 18)},
                             {"alpha2": None, "beta": 0, "heat_flux": Fraction(-2, 3)}, _fluid_d3q19),
}
# advective-d2q9 requires a4 explicitly; the other optional keys have defaults or derived values
_OPTIONAL_NONE = {"advective-d2q9": {"a3", "a7", "a8"}}


def sigma_of(s):
    return 1 / s - Fraction(1, 2)


def rate_of(sigma):
    return 1 / (sigma + Fraction(1, 2))


@dataclass(frozen=True)
class CollisionModel:
    """Relaxation rates per moment group plus named equilibrium parameters."""

    kind: str
    rates: Mapping[str, object]
    params: Mapping[str, object] = field(default_factory=dict)

    @classmethod
    def from_sigmas(cls, kind: str, sigmas: Mapping[str, object], params=None) -> "CollisionModel":
        return cls(kind, {k: rate_of(v) for k, v in sigmas.items()}, dict(params or {}))

    @property
    def sigmas(self) -> dict[str, object]:
        return {k: sigma_of(v) for k, v in self.rates.items()}

    @property
    def spec(self) -> ModelKind:
        try:
            return MODEL_KINDS[self.kind]
        except KeyError:
            raise ValueError(f"unknown model kind {self.kind!r}; known: {sorted(MODEL_KINDS)}") from None


@dataclass(frozen=True)
class PsiMatrix:
    matrix: tuple[tuple, ...]
    conserved: int
    rates: tuple            # s_k per moment; conserved entries are zero

    @property
    def size(self) -> int:
        return len(self.matrix)

    def to_numpy(self):
        import numpy as np

        return np.array([[float(x) for x in r] for r in self.matrix])


def resolve_params(model: CollisionModel, mode: ScalarMode) -> dict:
    kind = model.spec
    unknown = set(model.params) - set(kind.params)
    if unknown:
        raise ValueError(f"unknown parameters for {model.kind}: {sorted(unknown)}")
    out = {}
    for name, default in kind.params.items():
        val = model.params.get(name, default)
        if val is None and name not in _OPTIONAL_NONE.get(model.kind, ()):
            raise ValueError(f"model {model.kind} requires parameter {name!r}")
        out[name] = None if val is None else mode.coerce(val)
    return out


def build_psi(scheme: SchemeDefinition, model: CollisionModel) -> PsiMatrix:
    kind = model.spec
    if kind.scheme != scheme.name:
        raise ValueError(f"model {model.kind} needs scheme {kind.scheme}, got {scheme.name}")
    mode = scheme.mode
    missing = set(kind.groups) - set(model.rates)
    extra = set(model.rates) - set(kind.groups)
    if missing or extra:
        raise ValueError(f"rates for {model.kind}: missing {sorted(missing)}, unknown {sorted(extra)}")
    n = scheme.q
    rates = [mode.zero] * n
    for group, moments in kind.groups.items():
        s = mode.coerce(model.rates[group])
        if not (0 < s < 2):
            raise ValueError(f"relaxation rate {group}={float(s):g} outside (0, 2)")
        for k in moments:
            rates[k] = s
    nc = kind.conserved
    if any(rates[k] == 0 for k in range(nc, n)):
        raise ValueError("every nonconserved moment needs a relaxation rate")
    eq = kind.equilibrium(resolve_params(model, mode), scheme.lam, mode)
    psi = [[mode.one if i == j else mode.zero for j in range(n)] for i in range(n)]
    for k in range(nc, n):
        psi[k][k] = 1 - rates[k]
    for (k, j), g in eq.items():
        psi[k][j] = rates[k] * mode.coerce(g)
    return PsiMatrix(tuple(map(tuple, psi)), nc, tuple(rates))


def collision_matrix(scheme: SchemeDefinition, psi: PsiMatrix):
    """Population-space collision operator M^-1 Psi M."""
    return matmul(matmul(scheme.moments.inverse, psi.matrix), scheme.moments.rows)


def make_model(kind: str, rates: Mapping[str, object], params=None, lam=1,
               mode: ScalarMode = ScalarMode.RATIONAL) -> tuple[SchemeDefinition, PsiMatrix]:
    """Convenience: build the scheme matching kind and its collision matrix."""
    spec = MODEL_KINDS.get(kind)
    if spec is None:
        raise ValueError(f"unknown model kind {kind!r}")
    scheme = SCHEMES[spec.scheme](lam, mode).with_conserved(spec.conserved)
    return scheme, build_psi(scheme, CollisionModel(kind, dict(rates), dict(params or {})))
