"""Command line front end: expand, tune, dispersion, simulate and eigen over one config format.

Every subcommand writes CSV files into --out. Each file opens with a
'# config-hash: ...' comment followed by a header row; the resolved
configuration is saved next to them as config.resolved.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys

log = logging.getLogger("lbm_taylor.cli")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


class CsvSink:
    """Writes CSV files with the config-hash comment and header row."""

    def __init__(self, out_dir: str, digest: str):
        self.out_dir = out_dir
        self.digest = digest
        self.written: list[str] = []

    def write(self, name: str, header: list[str], rows) -> str:
        path = os.path.join(self.out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# config-hash: {self.digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        self.written.append(path)
        return path


# ---------------------------------------------------------------- shared builders

def _model(cfg, mode):
    from .schemes import make_model

    return make_model(cfg.model, cfg.rates_in(mode), cfg.params_in(mode), lam=mode.coerce(cfg.get("lambda")),
                      mode=mode)


def _geometry(cfg, dim):
    from .config import ConfigError
    from .lattice import disk, octant, periodic_box, sphere

    kind = cfg.get("geometry")
    shape, radius, offset = cfg.get("shape"), cfg.get("radius"), cfg.get("center_offset")
    problems = []
    if kind == "periodic" and shape is None:
        problems.append("periodic geometry needs 'shape'")
    if kind != "periodic" and radius is None:
        problems.append(f"{kind} geometry needs 'radius'")
    if kind in ("sphere", "octant") and dim != 3 or kind == "disk" and dim != 2:
        problems.append(f"{kind} geometry does not match a {dim}D model")
    if shape is not None and len(shape) != dim:
        problems.append(f"shape needs {dim} entries")
    if problems:
        raise ConfigError(problems)
    if kind == "periodic":
        return periodic_box(shape)
    r = float(radius)
    if kind == "octant":
        return octant(r, cfg.get("parity") or ("even",) * 3, shape)
    kw = {} if offset is None else {"center_offset": tuple(float(x) for x in offset)}
    return (disk if kind == "disk" else sphere)(r, shape=shape, **kw)


def _initial_fields(cfg, geo, conserved, seed):
    from .config import ConfigError
    from .experiments import PROBLEM_OF
    from .lattice import bessel_seed, plane_wave, random_fields

    kind = cfg.get("initial")
    if kind == "random":
        return random_fields(geo, conserved, seed)
    if kind == "plane-wave":
        if cfg.get("modes") is None:
            raise ConfigError(["plane-wave initial condition needs 'modes'"])
        return plane_wave(geo, cfg.get("modes"), cfg.get("component"), conserved)
    if geo.kind not in ("disk", "sphere", "octant") or cfg.model not in PROBLEM_OF:
        raise ConfigError(["bessel initial condition needs a disk, sphere or octant and a thermal or fluid model"])
    return bessel_seed(geo, PROBLEM_OF[cfg.model][0], cfg.get("ell"), cfg.get("n"), conserved)


def _field_names(conserved, dim):
    if conserved == 1:
        return ["rho"]
    return ["rho"] + ["j" + "xyz"[a] for a in range(conserved - 1)] if conserved == dim + 1 else \
        [f"w{i}" for i in range(conserved)]


# ---------------------------------------------------------------- subcommands

def cmd_expand(cfg, sink):
    from .algebra import QSqrt3, ScalarMode
    from .taylor import expand, pde_report, symbol_of

    mode = cfg.mode
    scheme, psi = _model(cfg, mode)
    exp = expand(scheme, psi, cfg.get("order"))
    rows = []
    for i in range(exp.conserved):
        for g, j, p, c in pde_report(exp, i, cfg.get("include_zero")):
            base = [i, j, symbol_of(g), p]
            if mode is ScalarMode.RATIONAL:
                rows.append(base + [c.numerator, c.denominator])
            elif mode is ScalarMode.QUADRATIC:
                c = c if isinstance(c, QSqrt3) else QSqrt3(c)
                rows.append(base + [str(c.a), str(c.b), float(c)])
            else:
                rows.append(base + [c])
    if mode is ScalarMode.RATIONAL:
        tail = ["coefficient_numerator", "coefficient_denominator"]
    elif mode is ScalarMode.QUADRATIC:
        tail = ["coefficient_rational", "coefficient_sqrt3", "coefficient_float"]
    else:
        tail = ["coefficient_float"]
    sink.write("expand.csv", ["conserved_i", "source_j", "gamma", "dt_power"] + tail, rows)
    return 0


def _tuned(cfg):
    """Quartic sigmas and model parameters for the configured model."""
    from .algebra import ScalarMode
    from .config import ConfigError
    from .quartic import (D1Q3_FLUID_ZETA3_SIGMA, quartic_d1q3_thermal, quartic_d2q5, quartic_d2q5_trt,
                          quartic_d2q9_stokes, quartic_d2q9_thermal, quartic_d2q9_thermal_trt, quartic_d3q7,
                          quartic_d3q19)

    q = ScalarMode.QUADRATIC
    sig = cfg.exact_sigmas()
    par = dict(cfg.params)
    trt = cfg.get("tuning") == "trt"

    def need(*names):
        missing = [n for n in names if (n in ("alpha",) and n not in par) or
                   (n.startswith("s") and n not in sig)]
        if missing:
            raise ConfigError([f"tuning {cfg.model} needs {', '.join(missing)}"])

    def check_fixed(expected):
        bad = [g for g, v in expected.items() if g in sig and sig[g] != v]
        if bad:
            raise ConfigError([f"{g} is fixed to {expected[g]} by the two-relaxation-time choice" for g in bad])

    kind = cfg.model
    if trt and kind not in ("thermal-d2q5", "advective-d2q9"):
        raise ConfigError([f"tuning = trt is only defined for thermal-d2q5 and advective-d2q9, not {kind}"])
    if kind == "thermal-d1q3":
        need("s1", "alpha")
        if par.get("u", 0) != 0:
            raise ConfigError(["the thermal-d1q3 tuning assumes u = 0"])
        return {"s2": quartic_d1q3_thermal(sig["s1"], par["alpha"])}, {}
    if kind == "thermal-d2q5":
        if trt:
            s1, s3 = quartic_d2q5_trt(q)
            check_fixed({"s1": s1})
            return {"s1": s1, "s3": s3, "s4": s3}, {}
        need("s1", "alpha")
        s3, s4 = quartic_d2q5(sig["s1"], par["alpha"])
        return {"s3": s3, "s4": s4}, {}
    if kind == "thermal-d3q7":
        need("s1", "alpha")
        s4, s6 = quartic_d3q7(sig["s1"], par["alpha"])
        return {"s4": s4, "s6": s6}, {}
    if kind == "advective-d2q9":
        if trt:
            s1, s3 = quartic_d2q9_thermal_trt(q)
            check_fixed({"s1": s1})
            return {"s1": s1, "s5": s1, "s3": s3, "s4": s3, "s7": s3, "s8": s3}, {}
        need("s1")
        xi, a4 = quartic_d2q9_thermal(sig["s1"])
        return {g: sig["s1"] for g in ("s1", "s3", "s4", "s5", "s7", "s8")}, {"xi": xi, "a4": a4}
    if kind == "fluid-d2q9":
        s5, s7 = quartic_d2q9_stokes(q)
        return {"s5": s5, "s7": s7}, {}
    if kind == "fluid-d3q19":
        need("s4", "s13")
        return dict(quartic_d3q19(sig["s4"], sig["s13"], q).sigmas), {}
    if kind == "fluid-d1q3":
        if cfg.mode is not ScalarMode.FLOAT:
            raise ConfigError(["the fluid-d1q3 value 1/sqrt(6) lies outside Q[sqrt3]; use scalar = float"])
        need("alpha")
        return {"s2": D1Q3_FLUID_ZETA3_SIGMA}, {}
    raise ConfigError([f"no tuning rule for {kind}"])


def _residual_rows(cfg, tuned):
    """Independent check of the tuned values: engine or closed-form residuals."""
    from .algebra import ScalarMode
    from .quartic import d3q19_closure_residuals, d1q3_fluid_zetas, delta_m3
    from .taylor import expand, pde_report, symbol_of

    q = ScalarMode.QUADRATIC
    kind = cfg.model
    if kind == "fluid-d3q19":
        s = tuned.exact_sigmas()
        res = d3q19_closure_residuals(*(s[g] for g in ("s4", "s5", "s10", "s13", "s14", "s16")))
        return [("closure", f"equation {i + 1}", q.coerce(r)) for i, r in enumerate(res)]
    if kind == "fluid-d2q9":
        s = tuned.exact_sigmas()
        return [("shear third-order term", f"k=({kx},{ky})", q.coerce(delta_m3(s["s5"], s["s7"], kx, ky)))
                for kx, ky in ((1, 0), (0, 1), (1, 1), (1, 2))]
    if kind == "fluid-d1q3":
        z3 = d1q3_fluid_zetas(float(tuned.exact_sigmas()["s2"]), float(dict(tuned.params)["alpha"]))[0]
        return [("momentum third-order factor", "zeta3", z3)]
    mode = ScalarMode.FLOAT if cfg.mode is ScalarMode.FLOAT else q
    scheme, psi = _model(tuned, mode)
    exp = expand(scheme, psi, 4)
    return [("engine order 4", symbol_of(g), c) for g, j, p, c in pde_report(exp, 0, True) if sum(g) == 4]


def cmd_tune(cfg, sink):
    from .config import format_scalar

    sigmas, params = _tuned(cfg)
    tuned = cfg.with_sigmas(sigmas).with_params(params)
    path = os.path.join(sink.out_dir, "tune.cfg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config-hash: {sink.digest}\n")
        for g in sorted(sigmas, key=lambda g: int(g[1:])):
            v = sigmas[g]
            fh.write(f"sigma{g[1:]} = {format_scalar(v) if not isinstance(v, float) else repr(v)}\n")
        for k in sorted(params):
            fh.write(f"{k} = {format_scalar(params[k])}\n")
    sink.written.append(path)
    rows = []
    for block, term, value in _residual_rows(cfg, tuned):
        exact = format_scalar(value) if not isinstance(value, float) else ""
        rows.append([block, term, exact, float(value)])
    sink.write("tune_residuals.csv", ["check", "term", "value_exact", "value_float"], rows)
    for g in sorted(sigmas, key=lambda g: int(g[1:])):
        v = sigmas[g]
        print(f"sigma{g[1:]} = {v if isinstance(v, float) else format_scalar(v)}"
              f"  (s = {1 / (float(v) + 0.5):.12g})")
    for k in sorted(params):
        print(f"{k} = {format_scalar(params[k])}")
    return 0


def cmd_dispersion(cfg, sink):
    from .algebra import ScalarMode
    from .dispersion import order_fit, sweep
    from .taylor import expand

    f = ScalarMode.FLOAT
    scheme, psi = _model(cfg, f)
    exp = expand(scheme, psi, 2)
    rows, fits = [], []
    for angle in cfg.get("angles"):
        res = sweep(scheme, psi, exp, cfg.get("periods"), float(angle), float(cfg.get("elevation")))
        for r in res:
            rows.append([r["N"], r["k"], r["angle"], r["gamma_num"], r["gamma_th"], r["error"]])
        pts = [(r["k"], r["error"]) for r in res if r["error"] > 0]
        fits.append([float(angle), order_fit(pts) if len(pts) >= 4 else float("nan")])
    sink.write("dispersion.csv", ["N", "k", "angle", "gamma_num", "gamma_th", "error"], rows)
    sink.write("dispersion_order.csv", ["angle", "slope"], fits)
    for a, s in fits:
        print(f"angle {a:.6g}: error slope {s:.4f}")
    return 0


def cmd_simulate(cfg, sink, seed):
    import numpy as np

    from .algebra import ScalarMode
    from .lattice import BoundaryRule, Simulator

    scheme, psi = _model(cfg, ScalarMode.FLOAT)
    geo = _geometry(cfg, scheme.dim)
    sim = Simulator(scheme, psi, geo, BoundaryRule(cfg.get("boundary"), cfg.get("boundary_order")))
    state = sim.equilibrium(_initial_fields(cfg, geo, psi.conserved, seed))
    steps, stride = cfg.get("steps"), cfg.get("stride")
    names = _field_names(psi.conserved, scheme.dim)
    axes = ["x", "y", "z"][:scheme.dim]
    mask = geo.fluid
    idx = np.argwhere(mask)
    rows = []

    def snapshot(t):
        w = sim.conserved_fields(state)
        vals = w[(slice(None),) + tuple(idx.T)]
        for p, pos in enumerate(idx):
            rows.append([t] + [int(c) for c in pos] + [float(v) for v in vals[:, p]])

    snapshot(0)
    for t in range(1, steps + 1):
        state = sim.step(state)
        if (stride and t % stride == 0) or t == steps:
            snapshot(t)
    sink.write("fields.csv", ["step"] + axes + names, rows)
    totals = sim.conserved_fields(state).reshape(psi.conserved, -1).sum(axis=1)
    print("final totals: " + ", ".join(f"{n}={v:.12g}" for n, v in zip(names, totals)))
    return 0


def _reference_rate(cfg, scheme, psi, geo):
    import numpy as np

    from .analytics import mode_reference
    from .config import ConfigError
    from .dispersion import amplification, diffusive_rate, measured_rate
    from .experiments import PROBLEM_OF, transport_coefficient
    from .taylor import expand

    if geo.kind == "periodic":
        modes = cfg.get("modes")
        if modes is None:
            raise ConfigError(["a periodic reference needs 'modes'"])
        k = np.array([2 * math.pi * i / n for i, n in zip(modes, geo.shape)])
        k = (k + math.pi) % (2 * math.pi) - math.pi
        # the discrete plane-wave rate is what the lattice reproduces exactly
        return measured_rate(amplification(scheme, psi, k), diffusive_rate(expand(scheme, psi, 2), k))[0]
    if geo.kind not in ("disk", "sphere", "octant") or cfg.model not in PROBLEM_OF:
        raise ConfigError(["an analytic reference needs a disk, sphere or octant geometry"])
    sig = {g: float(v) for g, v in cfg.exact_sigmas().items()}
    par = {k: float(v) for k, v in cfg.params}
    coef = transport_coefficient(cfg.model, sig, par, float(cfg.get("lambda")))
    return mode_reference(PROBLEM_OF[cfg.model][0], cfg.get("ell"), cfg.get("n"), geo.radius, coef).gamma


def cmd_eigen(cfg, sink, seed):
    import numpy as np

    from .algebra import ScalarMode
    from .arnoldi import arnoldi
    from .lattice import BoundaryRule, Simulator

    scheme, psi = _model(cfg, ScalarMode.FLOAT)
    geo = _geometry(cfg, scheme.dim)
    sim = Simulator(scheme, psi, geo, BoundaryRule(cfg.get("boundary"), cfg.get("boundary_order")))
    power = cfg.get("power")
    g_th = _reference_rate(cfg, scheme, psi, geo) if cfg.get("reference") else None
    v0 = sim.pack(sim.equilibrium(_initial_fields(cfg, geo, psi.conserved, seed)))
    guide = v0 / np.linalg.norm(v0) if cfg.get("initial") == "bessel" else None
    found = arnoldi(sim.operator(power), sim.size, cfg.get("krylov_size"), cfg.get("n_wanted"),
                    tol=float(cfg.get("tol")), max_restarts=cfg.get("max_restarts"), v0=v0, power=power,
                    target=None if g_th is None else math.exp(-power * g_th), return_vectors=cfg.get("mode_dump"),
                    guide=guide)
    rows = []
    for i, r in enumerate(found):
        err = "" if g_th is None else r.gamma / g_th - 1
        rows.append([i, r.z.real, r.z.imag, r.gamma, r.residual, r.converged, "" if g_th is None else g_th, err])
    sink.write("eigen.csv", ["index", "re_z", "im_z", "gamma_num", "residual", "converged", "gamma_th",
                             "relative_error"], rows)
    if cfg.get("mode_dump"):
        names = _field_names(psi.conserved, scheme.dim)
        axes = ["x", "y", "z"][:scheme.dim]
        idx = np.argwhere(geo.fluid)
        for i, r in enumerate(found):
            w = sim.conserved_fields(sim.unpack(r.vector.real))
            vals = w[(slice(None),) + tuple(idx.T)]
            sink.write(f"eigen_mode_{i}.csv", axes + names,
                       ([int(c) for c in pos] + [float(v) for v in vals[:, p]] for p, pos in enumerate(idx)))
    for r in rows:
        print(f"mode {r[0]}: z = {r[1]:.12g}{r[2]:+.3g}i  gamma = {r[3]:.10g}  residual = {r[4]:.2e}"
              + ("" if g_th is None else f"  error = {r[7]:+.3e}"))
    return 0


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lbm-taylor", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=("expand", "tune", "dispersion", "simulate", "eigen"))
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--scalar", choices=("rational", "quadratic", "float"), help="override the scalar mode")
    p.add_argument("--seed", type=int, help="override the random seed")
    p.add_argument("--threads", type=int, help="BLAS/OpenMP thread count for numerical kernels")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 2
        # only effective before numpy loads its BLAS, which the imports below trigger
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    from .algebra import ScalarModeError
    from .arnoldi import ArnoldiError
    from .config import ConfigError, config_hash, load_config, serialize
    from .dispersion import AcousticContaminationError

    overrides = {}
    if args.scalar:
        overrides["scalar"] = args.scalar
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = load_config(args.config, overrides)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    digest = config_hash(cfg)
    with open(os.path.join(args.out, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(f"# config-hash: {digest}\n" + serialize(cfg))
    sink = CsvSink(args.out, digest)
    seed = cfg.get("seed")
    try:
        if args.subcommand == "expand":
            status = cmd_expand(cfg, sink)
        elif args.subcommand == "tune":
            status = cmd_tune(cfg, sink)
        elif args.subcommand == "dispersion":
            status = cmd_dispersion(cfg, sink)
        elif args.subcommand == "simulate":
            status = cmd_simulate(cfg, sink, seed)
        else:
            status = cmd_eigen(cfg, sink, seed)
    except (ConfigError, ScalarModeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, ArnoldiError, AcousticContaminationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in sink.written:
        print(f"wrote {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
