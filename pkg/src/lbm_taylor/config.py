"""Flat key = value experiment configuration shared by every CLI subcommand.

One entry per line, '#' starts a comment. Scalars are exact expressions over
integers, decimals, '/', '*', '+', '-', '**', parentheses, the constant sqrt3 and
sqrt(x) for x a rational square or three times one. Lists are comma separated.
Relaxation rates are given per moment group either as a rate (s5 = 1.1) or as
the associated sigma (sigma5 = 1/6), never both.
"""
from __future__ import annotations

import ast
import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

from .algebra import QSqrt3, ScalarMode
from .lattice import BOUNDARY_KINDS, PARITY_NAMES
from .schemes import MODEL_KINDS, rate_of, sigma_of


class ConfigError(ValueError):
    """Every problem found in a configuration, reported together."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b}


def _exact_sqrt(x) -> QSqrt3 | Fraction:
    if isinstance(x, QSqrt3):
        if x.b != 0:
            raise ValueError("sqrt of an irrational argument")
        x = x.a
    x = Fraction(x)
    if x < 0:
        raise ValueError("sqrt of a negative number")
    for factor in (1, 3):
        q = x / factor
        num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if num * num == q.numerator and den * den == q.denominator:
            root = Fraction(num, den)
            return root if factor == 1 else QSqrt3(0, root)
    raise ValueError(f"sqrt({x}) is outside Q[sqrt3]")


def _simplify(x):
    if isinstance(x, QSqrt3) and x.b == 0:
        return x.a
    return x


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        # decimals are read from their literal text, so 1.2 is exactly 6/5
        return Fraction(repr(node.value)) if isinstance(node.value, float) else Fraction(node.value)
    if isinstance(node, ast.Name) and node.id == "sqrt3":
        return QSqrt3.sqrt3()
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        a, b = _eval(node.left), _eval(node.right)
        if isinstance(b, QSqrt3) and isinstance(a, Fraction):
            a = QSqrt3(a)
        return _simplify(_BINOPS[type(node.op)](a, b))
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
        a, b = _eval(node.left), _eval(node.right)
        if not (isinstance(b, Fraction) and b.denominator == 1):
            raise ValueError("only integer exponents are allowed")
        n = int(b)
        if n < 0:
            return _simplify(1 / (a ** -n)) if isinstance(a, QSqrt3) else a ** n
        return _simplify(a ** n)
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt"
            and len(node.args) == 1 and not node.keywords):
        return _simplify(_exact_sqrt(_eval(node.args[0])))
    raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")


def parse_scalar(text: str):
    """Exact value (Fraction or QSqrt3) of a scalar expression."""
    text = text.strip()
    if not text:
        raise ValueError("empty value")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse {text!r}") from None
    try:
        return _simplify(_eval(tree))
    except ZeroDivisionError:
        raise ValueError(f"division by zero in {text!r}") from None


def format_scalar(x) -> str:
    if isinstance(x, QSqrt3):
        if x.b == 0:
            return str(x.a)
        sq = f"{x.b}*sqrt3" if x.b.denominator == 1 else f"({x.b})*sqrt3"
        return sq if x.a == 0 else f"{x.a} + {sq}"
    return str(Fraction(x))


# ---------------------------------------------------------------- keys

def _int(text):
    v = parse_scalar(text)
    if not (isinstance(v, Fraction) and v.denominator == 1):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _word(choices):
    def parse(text):
        t = text.strip()
        if t not in choices:
            raise ValueError(f"{t!r} is not one of {sorted(choices)}")
        return t
    return parse


def _list(item):
    def parse(text):
        parts = [p for p in (s.strip() for s in text.split(",")) if p]
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)
    return parse


def _fmt_list(fmt):
    return lambda xs: ", ".join(fmt(x) for x in xs)


_GROUPS = sorted({g for k in MODEL_KINDS.values() for g in k.groups}, key=lambda g: int(g[1:]))
_PARAMS = sorted({p for k in MODEL_KINDS.values() for p in k.params})
SUBCOMMANDS = ("expand", "tune", "dispersion", "simulate", "eigen")
GEOMETRIES = ("periodic", "disk", "sphere", "octant")
INITIALS = ("plane-wave", "bessel", "random")
TUNINGS = ("general", "trt")

# key: (parser, formatter, default)
_SCALAR = (parse_scalar, format_scalar)
_INT = (_int, str)
_FIELDS = {
    "model": (_word(set(MODEL_KINDS)), str, None),
    "scalar": (_word({m.value for m in ScalarMode}), str, "rational"),
    "lambda": (*_SCALAR, Fraction(1)),
    "seed": (*_INT, 0),
    # expand
    "order": (*_INT, 4),
    "include_zero": (_bool, lambda b: "true" if b else "false", False),
    # tune
    "tuning": (_word(set(TUNINGS)), str, "general"),
    # dispersion
    "periods": (_list(_int), _fmt_list(str), (11, 16, 23, 32, 45, 64, 91)),
    "angles": (_list(parse_scalar), _fmt_list(format_scalar), (Fraction(0),)),
    "elevation": (*_SCALAR, Fraction(0)),
    # lattice
    "geometry": (_word(set(GEOMETRIES)), str, "periodic"),
    "shape": (_list(_int), _fmt_list(str), None),
    "radius": (*_SCALAR, None),
    "center_offset": (_list(parse_scalar), _fmt_list(format_scalar), None),
    "parity": (_list(_word({k for k in PARITY_NAMES if isinstance(k, str)})), _fmt_list(str), None),
    "boundary": (_word(set(BOUNDARY_KINDS)), str, "anti-bounce-back"),
    "boundary_order": (*_INT, 1),
    "initial": (_word(set(INITIALS)), str, "random"),
    "modes": (_list(_int), _fmt_list(str), None),
    "component": (*_INT, 0),
    "ell": (*_INT, 0),
    "n": (*_INT, 1),
    # simulate
    "steps": (*_INT, 100),
    "stride": (*_INT, 0),
    # eigen
    "n_wanted": (*_INT, 4),
    "krylov_size": (*_INT, 30),
    "power": (*_INT, 25),
    "tol": (*_SCALAR, Fraction(1, 10 ** 9)),
    "max_restarts": (*_INT, 300),
    "reference": (_bool, lambda b: "true" if b else "false", False),
    "mode_dump": (_bool, lambda b: "true" if b else "false", False),
}
_PARAM_KEYS = {p: _SCALAR for p in _PARAMS}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration. Rates keep the spelling they were given in."""

    model: str
    rates: tuple = ()                 # ((group, "s" | "sigma", value), ...) sorted by group
    params: tuple = ()                # ((name, value), ...) sorted by name
    settings: tuple = ()              # ((key, value), ...) for every _FIELDS key except model

    def get(self, key: str):
        return dict(self.settings)[key]

    @property
    def mode(self) -> ScalarMode:
        return ScalarMode(self.get("scalar"))

    def with_settings(self, **kw) -> "ExperimentConfig":
        s = dict(self.settings)
        for k, v in kw.items():
            if k not in s:
                raise KeyError(k)
            s[k] = v
        return replace(self, settings=tuple(sorted(s.items())))

    def with_sigmas(self, sigmas: dict) -> "ExperimentConfig":
        """Replace or add rates given as sigma values."""
        r = {g: (kind, v) for g, kind, v in self.rates}
        for g, v in sigmas.items():
            r[g] = ("sigma", v)
        return replace(self, rates=tuple(sorted(((g, k, v) for g, (k, v) in r.items()),
                                                key=lambda t: int(t[0][1:]))))

    def with_params(self, params: dict) -> "ExperimentConfig":
        p = dict(self.params)
        p.update(params)
        return replace(self, params=tuple(sorted(p.items())))

    def exact_rates(self, require_all: bool = True) -> dict:
        """Rates s per group as exact values; sigma entries are converted."""
        out = {g: (v if kind == "s" else rate_of(v)) for g, kind, v in self.rates}
        if require_all:
            missing = sorted(set(MODEL_KINDS[self.model].groups) - set(out), key=lambda g: int(g[1:]))
            if missing:
                raise ConfigError([f"missing relaxation rate for {g} (give s{g[1:]} or sigma{g[1:]})"
                                   for g in missing])
        return out

    def exact_sigmas(self) -> dict:
        return {g: (sigma_of(v) if kind == "s" else v) for g, kind, v in self.rates}

    def rates_in(self, mode: ScalarMode) -> dict:
        return {g: mode.coerce(v) for g, v in self.exact_rates().items()}

    def params_in(self, mode: ScalarMode) -> dict:
        return {k: mode.coerce(v) for k, v in self.params}


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    problems = []
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        if key in raw:
            problems.append(f"line {lineno}: duplicate key {key!r} (first on line {raw[key][0]})")
            continue
        raw[key] = (lineno, value)
    for key, value in (overrides or {}).items():
        raw[key] = (0, str(value))

    settings, rates, params = {}, {}, {}
    for key, (lineno, value) in raw.items():
        where = f"line {lineno}" if lineno else "override"
        try:
            if key in _FIELDS:
                settings[key] = _FIELDS[key][0](value)
            elif key in _PARAM_KEYS:
                params[key] = parse_scalar(value)
            elif key.startswith("sigma") and "s" + key[5:] in _GROUPS:
                rates.setdefault("s" + key[5:], []).append(("sigma", parse_scalar(value)))
            elif key in _GROUPS:
                rates.setdefault(key, []).append(("s", parse_scalar(value)))
            else:
                problems.append(f"{where}: unknown key {key!r}")
        except ValueError as exc:
            problems.append(f"{where}: {key}: {exc}")

    model = settings.pop("model", None)
    if model is None and "model" not in raw:
        problems.append("missing required key 'model'")
    kind = MODEL_KINDS.get(model) if model else None
    final_rates = []
    for g, given in rates.items():
        if len(given) > 1:
            problems.append(f"{g}: give either s{g[1:]} or sigma{g[1:]}, not both")
            continue
        if kind is not None and g not in kind.groups:
            problems.append(f"{g}: model {model} has no such moment group (groups: {', '.join(kind.groups)})")
            continue
        form, v = given[0]
        s = v if form == "s" else rate_of(v)
        if not 0 < float(s) < 2:
            problems.append(f"{g}: relaxation rate {float(s):g} outside (0, 2)")
        final_rates.append((g, form, v))
    if kind is not None:
        for p in params:
            if p not in kind.params:
                problems.append(f"parameter {p!r} does not apply to model {model}")
    for key in ("boundary_order",):
        if key in settings and settings[key] not in (1, 2):
            problems.append(f"{key} must be 1 or 2")
    for key in ("power", "krylov_size", "n_wanted", "steps", "max_restarts", "order", "n"):
        if key in settings and settings[key] < (0 if key in ("steps", "max_restarts") else 1):
            problems.append(f"{key} must be positive")
    if "power" in settings and settings["power"] % 2 == 0:
        problems.append("power must be odd; an even power folds checker-board modes onto decaying ones")
    if problems:
        raise ConfigError(problems)

    full = {k: spec[2] for k, spec in _FIELDS.items() if k != "model"}
    full.update(settings)
    return ExperimentConfig(model, tuple(sorted(final_rates, key=lambda t: int(t[0][1:]))),
                            tuple(sorted(params.items())), tuple(sorted(full.items())))


def serialize(cfg: ExperimentConfig) -> str:
    """Canonical text; parse_config(serialize(c)) == c."""
    lines = [f"model = {cfg.model}"]
    for g, form, v in cfg.rates:
        key = g if form == "s" else "sigma" + g[1:]
        lines.append(f"{key} = {format_scalar(v)}")
    for k, v in cfg.params:
        lines.append(f"{k} = {format_scalar(v)}")
    for k, v in cfg.settings:
        if v is None:
            continue
        lines.append(f"{k} = {_FIELDS[k][1](v)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()[:16]


def load_config(path: str, overrides: dict | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


KNOWN_KEYS = tuple(sorted(set(_FIELDS) | set(_PARAMS) | set(_GROUPS) | {"sigma" + g[1:] for g in _GROUPS}))
