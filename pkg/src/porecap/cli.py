"""Command-line front end: configs, generators, solves, sweeps and tables."""

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass, field
from math import pi
from pathlib import Path

import numpy as np
import yaml

from . import formulas
from .errors import GeometryError, InvalidInputError, PorecapError
from .geometry import (Pore, PoreConfiguration, Surface, fibonacci_sphere, pattern_planar,
                       platonic_vertices, validate_nonoverlap)
from .kernels import CACHE_ENV
from .solver import SpectralParams, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMPARE_TARGETS = ("asymptotic", "series", "homogenized", "none")
SWEEP_PARAMETERS = ("eps", "d", "M")
PARAM_KEYS = ("n_t", "n_r", "n_self", "table_deg", "table_tol")
LONG_RUNNING_N = 500
SCHEMA_VERSION = 1


class ConfigError(InvalidInputError):
    pass


class StageError(Exception):
    """A numeric failure tagged with the stage it happened in."""

    def __init__(self, stage, error):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class GeneratorSpec:
    """Named center pattern with a common radius ``eps``.

    On the sphere eps is the angular radius of each cap, on the plane the
    pore radius.  The antipodal pattern may give ``d`` instead of eps.
    """

    kind: str
    params: dict = field(default_factory=dict)
    eps: float | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        out.update(self.params)
        if self.eps is not None:
            out["eps"] = self.eps
        return out


GENERATOR_KINDS = {
    "single": ("plane", "sphere"),
    "pair": ("plane",),
    "square": ("plane",),
    "ring": ("plane",),
    "fibonacci": ("sphere",),
    "platonic": ("sphere",),
    "antipodal": ("sphere",),
}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "values": list(self.values)}


@dataclass(frozen=True)
class RunConfig:
    surface: Surface
    pores: tuple[Pore, ...] | None = None
    generator: GeneratorSpec | None = None
    diffusivity: float = 1.0
    modes: int = 10
    params: dict = field(default_factory=dict)
    compare: tuple[str, ...] = ()
    output: dict = field(default_factory=dict)
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if (self.pores is None) == (self.generator is None):
            raise ConfigError("give exactly one of 'pores' and 'generator'")

    def to_dict(self) -> dict:
        out = {"surface": self.surface.value}
        if self.pores is not None:
            out["pores"] = [{"center": list(p.center), "radius": p.radius} for p in self.pores]
        else:
            out["generator"] = self.generator.to_dict()
        out["diffusivity"] = self.diffusivity
        out["modes"] = self.modes
        if self.params:
            out["tolerances"] = dict(self.params)
        out["compare"] = list(self.compare)
        if self.output:
            out["output"] = dict(self.output)
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def spectral_params(self, threads: int = 1, modes: int | None = None) -> SpectralParams:
        M = self.modes if modes is None else modes
        return SpectralParams(M=M, threads=threads, **self.params)

    def with_value(self, parameter: str, value) -> "RunConfig":
        """Copy with one sweep parameter replaced."""
        kw = dict(surface=self.surface, pores=self.pores, generator=self.generator,
                  diffusivity=self.diffusivity, modes=self.modes, params=self.params,
                  compare=self.compare, output=self.output)
        if parameter == "M":
            kw["modes"] = int(value)
            return RunConfig(**kw)
        if self.generator is None:
            raise ConfigError(f"sweeping {parameter} needs a generator spec")
        g = self.generator
        if parameter == "eps":
            kw["generator"] = GeneratorSpec(g.kind, dict(g.params), float(value))
        elif parameter == "d":
            if g.kind not in ("pair", "antipodal"):
                raise ConfigError("sweeping d needs the 'pair' or 'antipodal' generator")
            p = dict(g.params)
            p["d"] = float(value)
            kw["generator"] = GeneratorSpec(g.kind, p, g.eps)
        else:
            raise ConfigError(f"unknown sweep parameter {parameter!r}")
        return RunConfig(**kw)


def _require(d, key, kind):
    if key not in d:
        raise ConfigError(f"missing key {key!r}")
    v = d[key]
    if not isinstance(v, kind) or isinstance(v, bool):
        raise ConfigError(f"key {key!r} has the wrong type")
    return v


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number")
    return float(v)


def _parse_pore(entry, surface):
    if not isinstance(entry, dict):
        raise ConfigError("each pore must be a mapping")
    unknown = set(entry) - {"center", "radius", "half_angle"}
    if unknown:
        raise ConfigError(f"unknown pore keys {sorted(unknown)}")
    center = entry.get("center")
    if not isinstance(center, (list, tuple)) or len(center) != 3:
        raise ConfigError("pore center must be a list of three numbers")
    center = tuple(_number(c, "center") for c in center)
    if ("radius" in entry) == ("half_angle" in entry):
        raise ConfigError("give exactly one of radius and half_angle per pore")
    if "half_angle" in entry:
        if surface is not Surface.UNIT_SPHERE:
            raise ConfigError("half_angle is only meaningful on the sphere")
        return Pore.cap(center, _number(entry["half_angle"], "half_angle"))
    return Pore(center, _number(entry["radius"], "radius"))


def _parse_generator(entry, surface):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError("generator must be a mapping with a 'kind'")
    kind = str(entry["kind"]).lower()
    if kind not in GENERATOR_KINDS:
        raise ConfigError(f"unknown generator kind {kind!r}")
    if surface.value not in GENERATOR_KINDS[kind]:
        raise ConfigError(f"generator {kind!r} is not available on the {surface.value}")
    params = {k: v for k, v in entry.items() if k not in ("kind", "eps")}
    eps = entry.get("eps")
    if eps is not None:
        eps = _number(eps, "eps")
    return GeneratorSpec(kind, params, eps)


def _parse_sweep(entry):
    if not isinstance(entry, dict):
        raise ConfigError("sweep must be a mapping")
    parameter = entry.get("parameter")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
    if "values" in entry:
        values = entry["values"]
        if not isinstance(values, list):
            raise ConfigError("sweep values must be a list")
    else:
        try:
            start, stop, steps = entry["start"], entry["stop"], int(entry["steps"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("sweep needs 'values' or start/stop/steps") from None
        spacing = entry.get("spacing", "log")
        if steps < 1:
            raise InvalidInputError("sweep range is empty")
        if parameter == "M":
            values = list(range(int(start), int(stop) + 1, max(1, int(entry.get("step", 1)))))
        elif spacing == "log":
            values = [float(v) for v in np.geomspace(start, stop, steps)]
        else:
            values = [float(v) for v in np.linspace(start, stop, steps)]
    if not values:
        raise InvalidInputError("sweep range is empty")
    if parameter == "M":
        values = [int(v) for v in values]
    else:
        values = [_number(v, "sweep value") for v in values]
    return SweepSpec(parameter, tuple(values))


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    known = {"surface", "pores", "generator", "diffusivity", "modes", "tolerances",
             "compare", "output", "sweep"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    try:
        surface = Surface.parse(_require(data, "surface", str))
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from None
    pores = generator = None
    if "pores" in data:
        if not isinstance(data["pores"], list) or not data["pores"]:
            raise ConfigError("pores must be a non-empty list")
        pores = tuple(_parse_pore(p, surface) for p in data["pores"])
    if "generator" in data:
        generator = _parse_generator(data["generator"], surface)
    D = _number(data.get("diffusivity", 1.0), "diffusivity")
    modes = data.get("modes", 10)
    if isinstance(modes, bool) or not isinstance(modes, int) or modes < 0:
        raise ConfigError("modes must be a non-negative integer")
    params = data.get("tolerances", {}) or {}
    if not isinstance(params, dict) or set(params) - set(PARAM_KEYS):
        raise ConfigError(f"tolerances may only set {PARAM_KEYS}")
    compare = data.get("compare", [])
    if isinstance(compare, str):
        compare = [compare]
    if not isinstance(compare, list) or any(c not in COMPARE_TARGETS for c in compare):
        raise ConfigError(f"compare targets must be among {COMPARE_TARGETS}")
    compare = tuple(c for c in compare if c != "none")
    output = data.get("output", {}) or {}
    if not isinstance(output, dict) or set(output) - {"json", "csv"}:
        raise ConfigError("output may only set 'json' and 'csv'")
    sweep = _parse_sweep(data["sweep"]) if "sweep" in data else None
    return RunConfig(surface, pores, generator, D, modes, dict(params), compare,
                     {k: str(v) for k, v in output.items()}, sweep)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return parse_config(data)


# ------------------------------------------------------------ generators


def generate_centers(surface: Surface, spec: GeneratorSpec) -> tuple[np.ndarray, float]:
    """Centers and common radius (plane: distance, sphere: cap angle)."""
    p = spec.params
    kind = spec.kind
    eps = spec.eps
    try:
        if kind == "single":
            centers = np.array([[0.0, 0.0, 0.0 if surface is Surface.PLANE else 1.0]])
        elif kind == "pair":
            d = float(p["d"])
            centers = np.array([[-d / 2, 0.0, 0.0], [d / 2, 0.0, 0.0]])
            eps = 1.0 if eps is None else eps
        elif kind == "square":
            centers = pattern_planar("square", scale=float(p.get("scale", 2.0)))
        elif kind == "ring":
            centers = pattern_planar("ring", int(p.get("n", p.get("count", 6))),
                                     float(p.get("scale", 2.0)))
        elif kind == "fibonacci":
            if "k" in p:
                k = int(p["k"])
            else:
                n = int(p["N"])
                if n % 2 == 0:
                    raise InvalidInputError("Fibonacci points come in odd numbers N = 2k + 1")
                k = (n - 1) // 2
            centers = fibonacci_sphere(k)
        elif kind == "platonic":
            centers = platonic_vertices(str(p.get("solid", "icosa")))
        elif kind == "antipodal":
            centers = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
            if eps is None:
                # d is the fraction of the half great circle left between the caps
                eps = 0.5 * pi * (1 - float(p["d"]))
        else:
            raise ConfigError(f"unknown generator kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"generator {kind!r} needs parameter {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise ConfigError(f"bad generator parameter: {exc}") from None
    if eps is None:
        raise ConfigError(f"generator {kind!r} needs eps")
    if not eps > 0:
        raise ConfigError("eps must be positive")
    return centers, float(eps)


def build_configuration(run: RunConfig) -> PoreConfiguration:
    if run.pores is not None:
        config = PoreConfiguration(run.surface, run.pores, run.diffusivity)
    else:
        centers, eps = generate_centers(run.surface, run.generator)
        if run.surface is Surface.UNIT_SPHERE:
            if not eps < pi:
                raise ConfigError("cap angle must be below pi")
            pores = tuple(Pore.cap(tuple(c), eps) for c in centers)
        else:
            pores = tuple(Pore(tuple(c), eps) for c in centers)
        config = PoreConfiguration(run.surface, pores, run.diffusivity)
    report = validate_nonoverlap(config)
    if not report.ok:
        raise ConfigError(f"overlapping pores {list(report.violations[:5])}")
    return config


# ------------------------------------------------------------- references


@dataclass(frozen=True)
class Reference:
    target: str
    formula: str
    value: float
    partials: tuple[float, ...] = ()
    neglected_order: str = ""
    terms: tuple = ()


def _pore_radius(config: PoreConfiguration) -> float:
    r = config.common_radius()
    if r is None:
        raise ConfigError("references need a common pore radius")
    if config.surface is Surface.UNIT_SPHERE:
        return config.pores[0].half_angle
    return r


def reference_values(config: PoreConfiguration, target: str) -> Reference:
    """Reference flux for a configuration.  On the sphere eps is the cap angle."""
    D = config.diffusivity
    eps = _pore_radius(config)
    x = config.centers
    N = config.n_pores
    if target == "asymptotic":
        if config.surface is Surface.PLANE:
            est = formulas.planar_asymptotic_flux(x, None, eps, D)
            name = "planar_asymptotic_flux"
        elif N == 1:
            est = formulas.sphere_single_pore_flux(eps, D)
            name = "sphere_single_pore_flux"
        else:
            est = formulas.sphere_asymptotic_flux(x, eps, D)
            name = "sphere_asymptotic_flux"
        partials = tuple(est.partial(n) for n in range(1, len(est.terms) + 1))
        if est.composition == "sum" and len(est.terms) == 4:
            # log and constant parts form one order
            partials = (partials[0], partials[3])
        return Reference(target, name, est.value, partials, est.neglected_order, est.terms)
    if target == "series":
        if config.surface is not Surface.PLANE or N != 2:
            raise ConfigError("the series reference needs two planar pores")
        d = float(np.hypot(*(x[0, :2] - x[1, :2])))
        s = formulas.strieder_two_pore_flux(d / eps, D)
        return Reference(target, "strieder_two_pore_flux", eps * s.value, (), s.neglected_order,
                         tuple(("d^-%d" % n, eps * v) for n, v in enumerate(s.terms)))
    if target == "homogenized":
        if config.surface is not Surface.UNIT_SPHERE:
            raise ConfigError("the homogenized reference needs pores on the sphere")
        sigma = N * eps ** 2 / 4
        return Reference(target, "homogenized_flux", formulas.homogenized_flux(sigma, eps, D))
    raise ConfigError(f"unknown comparison target {target!r}")


# ---------------------------------------------------------------- running


def _run_solve(config, params):
    try:
        return solve(config, params)
    except GeometryError as exc:
        raise ConfigError(str(exc)) from None
    except PorecapError as exc:
        raise StageError("solve", exc) from exc


def _references(config, targets):
    out = []
    for t in targets:
        try:
            out.append(reference_values(config, t))
        except ConfigError:
            raise
        except PorecapError as exc:
            raise StageError("reference", exc) from exc
    return out


def run_id(run: RunConfig) -> str:
    text = json.dumps(run.to_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def result_record(run: RunConfig, config, sol, refs) -> dict:
    comparisons = []
    for ref in refs:
        comparisons.append({
            "target": ref.target,
            "formula": ref.formula,
            "J_ref": ref.value,
            "rel_err": formulas.relative_error(sol.J, ref.value),
            "partials": list(ref.partials),
            "partial_rel_err": [formulas.relative_error(sol.J, v) for v in ref.partials],
            "neglected_order": ref.neglected_order,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": run_id(run),
        "inputs": run.to_dict(),
        "surface": config.surface.value,
        "n_pores": config.n_pores,
        "M": sol.M,
        "J": sol.J,
        "C": sol.C,
        "pore_fluxes": [float(v) for v in sol.pore_fluxes],
        "residual": sol.residual,
        "condition": sol.condition,
        "comparisons": comparisons,
        "timings": {k: float(v) for k, v in sol.timings.items()},
    }


def _write_text(path, text):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _emit(text, path):
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


def loglog_slope(x, y) -> float | None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def sweep_rows(run: RunConfig, threads=1):
    """Header and rows of a sweep; the last row holds log-log slopes for eps/d."""
    if run.sweep is None:
        raise ConfigError("config has no sweep section")
    parameter = run.sweep.parameter
    values = list(run.sweep.values)
    if not values:
        raise InvalidInputError("sweep range is empty")
    results = []
    for v in values:
        sub = run.with_value(parameter, v)
        config = build_configuration(sub)
        sol = _run_solve(config, sub.spectral_params(threads))
        refs = _references(config, run.compare)
        results.append((v, sub.modes, sol, refs))
    header = ["value", "M", "J_num"]
    if parameter == "M":
        header += ["J_ref_maxM", "rel_err_maxM"]
    n_partials = {}
    for ref in results[0][3]:
        header += [f"J_ref_{ref.target}", f"rel_err_{ref.target}"]
        n_partials[ref.target] = len(ref.partials)
        for n in range(len(ref.partials)):
            header += [f"J_ref_{ref.target}_{n + 1}", f"rel_err_{ref.target}_{n + 1}"]
    rows = []
    best = max(results, key=lambda r: r[1])[2].J if parameter == "M" else None
    for v, M, sol, refs in results:
        row = [v, M, sol.J]
        if parameter == "M":
            row += [best, formulas.relative_error(sol.J, best)]
        for ref in refs:
            row += [ref.value, formulas.relative_error(sol.J, ref.value)]
            for p in ref.partials:
                row += [p, formulas.relative_error(sol.J, p)]
        rows.append(row)
    if parameter in ("eps", "d"):
        slope = ["slope", "", ""]
        for col in range(3, len(header)):
            if header[col].startswith("rel_err"):
                s = loglog_slope([r[0] for r in rows], [r[col] for r in rows])
                slope.append("" if s is None else _fmt(s))
            else:
                slope.append("")
        rows.append(slope)
    return header, rows


def homog_table(sigmas, Ns, M=6, threads=1, long_running=False, D=1.0):
    """Percentage relative errors of homogenized_flux against solves on Fibonacci caps."""
    if not sigmas or not Ns:
        raise InvalidInputError("homogenization table needs sigma and N values")
    for n in Ns:
        if int(n) != n or n < 3 or n % 2 == 0:
            raise InvalidInputError(f"N = {n}: Fibonacci points come in odd numbers N = 2k + 1")
        if n > LONG_RUNNING_N and not long_running:
            raise InvalidInputError(f"N = {n} needs --long-running")
    table = []
    for sigma in sigmas:
        if not 0 < sigma < 1:
            raise InvalidInputError("sigma must be in (0, 1)")
        row = []
        for n in Ns:
            eps = 2 * np.sqrt(sigma / n)
            centers = fibonacci_sphere((int(n) - 1) // 2)
            config = PoreConfiguration(Surface.UNIT_SPHERE,
                                       tuple(Pore.cap(tuple(c), eps) for c in centers), D)
            if not validate_nonoverlap(config).ok:
                raise InvalidInputError(f"caps overlap at sigma = {sigma}, N = {n}")
            sol = _run_solve(config, SpectralParams(M, threads=threads))
            jh = formulas.homogenized_flux(sigma, eps, D)
            row.append(100 * formulas.relative_error(sol.J, jh))
        table.append(row)
    return table


# --------------------------------------------------------------- commands


def _parse_gen_tokens(tokens):
    params = {}
    positional = []
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            params[k] = yaml.safe_load(v)
        else:
            positional.append(tok)
    return params, positional


def cmd_gen(args):
    params, positional = _parse_gen_tokens(args.params)
    kind = args.kind.lower()
    if kind == "platonic" and positional:
        params["solid"] = positional[0]
    elif positional:
        raise ConfigError(f"unexpected arguments {positional}")
    if "n" in params and kind == "fibonacci":
        params["N"] = params.pop("n")
    surface = args.surface or ("plane" if kind in ("pair", "square", "ring") else "sphere")
    eps = params.pop("eps", args.eps)
    if kind == "antipodal" and "d" in params:
        eps = None
    spec = _parse_generator(dict(params, kind=kind, **({} if eps is None else {"eps": eps})),
                            Surface.parse(surface))
    run = RunConfig(Surface.parse(surface), generator=spec,
                    modes=args.modes if args.modes is not None else 10)
    config = build_configuration(run)
    explicit = RunConfig(config.surface, pores=config.pores, diffusivity=config.diffusivity,
                         modes=run.modes)
    _emit(explicit.dumps(), args.out)
    return EXIT_OK


def _load_run(args):
    run = load_config(args.config)
    if getattr(args, "modes", None) is not None:
        run = run.with_value("M", args.modes)
    compare = getattr(args, "compare", None)
    if compare:
        if compare not in COMPARE_TARGETS:
            raise ConfigError(f"compare target must be one of {COMPARE_TARGETS}")
        run = RunConfig(run.surface, run.pores, run.generator, run.diffusivity, run.modes,
                        run.params, () if compare == "none" else (compare,), run.output, run.sweep)
    return run


def cmd_solve(args, default_compare=()):
    run = _load_run(args)
    if default_compare and not run.compare:
        run = RunConfig(run.surface, run.pores, run.generator, run.diffusivity, run.modes,
                        run.params, default_compare, run.output, run.sweep)
    config = build_configuration(run)
    sol = _run_solve(config, run.spectral_params(args.threads))
    refs = _references(config, run.compare)
    record = result_record(run, config, sol, refs)
    _emit(json.dumps(record, indent=2) + "\n", args.out or run.output.get("json"))
    csv_path = run.output.get("csv")
    if csv_path:
        rows = [[k + 1, f] for k, f in enumerate(sol.pore_fluxes)]
        _write_text(csv_path, _csv_text(["pore", "flux"], rows))
    return EXIT_OK


def cmd_compare(args):
    return cmd_solve(args, default_compare=("asymptotic",))


def cmd_asympt(args):
    run = _load_run(args)
    config = build_configuration(run)
    targets = run.compare or ("asymptotic",)
    out = []
    for ref in _references(config, targets):
        out.append({"target": ref.target, "formula": ref.formula, "J_ref": ref.value,
                    "partials": list(ref.partials), "neglected_order": ref.neglected_order,
                    "terms": [[str(k), float(v)] for k, v in ref.terms]})
    record = {"run_id": run_id(run), "inputs": run.to_dict(), "references": out}
    _emit(json.dumps(record, indent=2) + "\n", args.out or run.output.get("json"))
    return EXIT_OK


def cmd_sweep(args):
    run = _load_run(args)
    if args.param:
        values = args.values
        if values is None:
            if args.start is None or args.stop is None or args.steps is None:
                raise ConfigError("sweep needs --values or --start/--stop/--steps")
            spec = {"parameter": args.param, "start": args.start, "stop": args.stop,
                    "steps": args.steps}
        else:
            spec = {"parameter": args.param, "values": values}
        run = RunConfig(run.surface, run.pores, run.generator, run.diffusivity, run.modes,
                        run.params, run.compare, run.output, _parse_sweep(spec))
    header, rows = sweep_rows(run, args.threads)
    _emit(_csv_text(header, rows), args.out or run.output.get("csv"))
    return EXIT_OK


def cmd_homog_table(args):
    table = homog_table(args.sigma, args.N, args.modes if args.modes is not None else 6,
                        args.threads, args.long_running)
    header = ["sigma"] + [f"N={n}" for n in args.N]
    rows = [[s] + row for s, row in zip(args.sigma, table)]
    _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="porecap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--modes", type=int, help="override the expansion degree M")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--cache-dir", help=f"table cache directory (sets ${CACHE_ENV})")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--long-running", action="store_true", help="allow large runs")

    p = sub.add_parser("solve", help="solve one configuration")
    common(p)
    p.add_argument("--compare", help="comparison target")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="solve and compare against a reference formula")
    common(p)
    p.add_argument("--compare", help="comparison target (default asymptotic)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("asympt", help="evaluate reference formulas only")
    common(p)
    p.add_argument("--compare", help="comparison target (default asymptotic)")
    p.set_defaults(func=cmd_asympt)

    p = sub.add_parser("sweep", help="sweep eps, d or M and tabulate errors")
    common(p)
    p.add_argument("--compare", help="comparison target")
    p.add_argument("--param", choices=SWEEP_PARAMETERS)
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("homog-table", help="homogenized flux errors on Fibonacci caps")
    common(p, config=False)
    p.add_argument("--sigma", type=float, nargs="+", default=[0.02, 0.05])
    p.add_argument("--N", type=int, nargs="+", default=[51, 101, 201])
    p.set_defaults(func=cmd_homog_table)

    p = sub.add_parser("gen", help="write a pore list from a generator")
    common(p, config=False)
    p.add_argument("kind", choices=sorted(GENERATOR_KINDS))
    p.add_argument("params", nargs="*", help="key=value pairs, or the solid name")
    p.add_argument("--surface", choices=["plane", "sphere"])
    p.add_argument("--eps", type=float, default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.cache_dir:
        os.environ[CACHE_ENV] = str(args.cache_dir)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"porecap: numeric failure in {exc.stage}: {exc.error}", file=sys.stderr)
        return EXIT_NUMERIC
    except PorecapError as exc:
        print(f"porecap: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
