"""Named experiments: configuration, presets, runners and CSV output.

Each runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding CSV rows and a summary dict; ``run_experiment``
also writes them to ``config.out_dir``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .assembly import l2_norm
from .helmholtz import solve_reference, write_solution, assemble_pieces
from .lod import (
    CONSTRAINT_MODES,
    CORRECTORS,
    SIGNS,
    build_basis,
    default_layers,
    error_report,
    fem_coarse_solution,
    random_experiment_layers,
    solve_coarse,
)
from .mesh import build_two_level, uniform_mesh
from .problems import builtin_problems, get_problem
from .qmc import KINDS
from .rates import fit_rate
from .stochastic import (
    FemSampleSolver,
    LodSampleSolver,
    estimate_expectation,
    make_point_sets,
    reference_family,
    truncation_study,
)

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "solve",
    "convergence-h",
    "convergence-ell",
    "boundary-correction",
    "qmc-rate",
    "truncation-rate",
    "mc-vs-qmc",
)
SCALES = ("desk", "paper")
RESOLUTION_WARNING = 4.0

LayerPolicy = Union[int, str]  # int, "global", "log" or "random"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass
class ExperimentConfig:
    experiment: str
    problem: str = "ex1-cfg1"
    dimension: int = 1
    kappa_exp: float = 6.0
    H_exps: tuple = (7, 8, 9, 10)
    h_exp: int = 14
    ell: LayerPolicy = "global"
    ell_list: tuple = ()
    boundary_corrected: bool = True
    sign: str = "plus"
    constraint_mode: str = "one-one"
    corrector: str = "split"
    # stochastic experiments
    q: tuple = (2.0,)
    delta: float = 0.5
    s: int = 32
    s_list: tuple = (8, 16, 32, 64)
    s_ref: int = 256
    N_list: tuple = (64, 128, 256, 512, 1024, 2048)
    N_ref: int = 2**15
    R: int = 16
    kinds: tuple = ("sobol", "lattice")
    solver: str = "lod"
    skip: int = 1
    seed: int = 0
    out_dir: str = "results"
    scale: str = "desk"

    @property
    def kappa(self) -> float:
        return 2.0**self.kappa_exp

    def layers_for(self, H: float) -> Optional[int]:
        return resolve_layers(self.ell, H)

    def validate(self) -> "ExperimentConfig":
        def bad(name, msg):
            raise ConfigError(f"{name}: {msg}")

        if self.experiment not in EXPERIMENTS:
            bad("experiment", f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.scale not in SCALES:
            bad("scale", f"must be one of {SCALES}, got {self.scale!r}")
        if self.dimension not in (1, 2):
            bad("dimension", f"must be 1 or 2, got {self.dimension}")
        if self.problem not in builtin_problems():
            bad("problem", f"unknown problem {self.problem!r}")
        if not self.H_exps:
            bad("H_exps", "needs at least one coarse exponent")
        if any(int(H) < 1 for H in self.H_exps):
            bad("H_exps", "coarse exponents must be >= 1")
        if self.h_exp <= max(self.H_exps):
            bad("h_exp", f"fine exponent {self.h_exp} must exceed every coarse exponent {max(self.H_exps)}")
        try:
            resolve_layers(self.ell, 0.5)
        except ValueError as exc:
            bad("ell", str(exc))
        if any(int(e) < 0 for e in self.ell_list):
            bad("ell_list", "layer counts must be nonnegative")
        if self.sign not in SIGNS:
            bad("sign", f"must be one of {tuple(SIGNS)}")
        if self.constraint_mode not in CONSTRAINT_MODES:
            bad("constraint_mode", f"must be one of {CONSTRAINT_MODES}")
        if self.corrector not in CORRECTORS:
            bad("corrector", f"must be one of {CORRECTORS}")
        if self.s < 1:
            bad("s", "truncation dimension must be >= 1")
        if self.s_list and self.s_ref <= max(self.s_list):
            bad("s_ref", f"must exceed max(s_list) = {max(self.s_list)}")
        if any(int(N) < 1 for N in self.N_list) or self.N_ref < 1:
            bad("N_list", "point counts must be positive")
        if self.R < 1:
            bad("R", "need at least one shift")
        if "lattice" in self.kinds and self.experiment in ("qmc-rate", "mc-vs-qmc") and self.R < 8:
            bad("R", "randomly shifted lattice estimates need R >= 8 shifts")
        if any(k not in KINDS for k in self.kinds):
            bad("kinds", f"entries must be among {KINDS}")
        if self.solver not in ("lod", "fem"):
            bad("solver", "must be 'lod' or 'fem'")
        if self.delta < 0:
            bad("delta", "must be nonnegative")
        for H in self.H_exps:
            if self.kappa * 2.0 ** (-H) > RESOLUTION_WARNING:
                warnings.warn(
                    f"kappa*H = {self.kappa * 2.0 ** (-H):g} exceeds {RESOLUTION_WARNING:g} "
                    f"(H = 2^-{H}); the coarse space may not resolve the wave",
                    stacklevel=2,
                )
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def resolve_layers(policy: LayerPolicy, H: float) -> Optional[int]:
    """Number of layers for coarse width ``H``; ``None`` means the global basis."""
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        if policy < 0:
            raise ValueError("layer count must be nonnegative")
        return int(policy)
    if policy in ("global", "inf", None):
        return None
    if policy == "log":
        return default_layers(H)
    if policy == "random":
        return random_experiment_layers(H)
    raise ValueError(f"layer policy must be an integer, 'global', 'log' or 'random', got {policy!r}")


def preset(experiment: str, scale: str = "desk", problem: Optional[str] = None) -> ExperimentConfig:
    """Default configuration of a named experiment at desk or paper scale."""
    paper = scale == "paper"
    base = dict(experiment=experiment, scale=scale)
    if problem is not None and problem not in builtin_problems():
        raise ConfigError(f"problem: unknown problem {problem!r}; known: {sorted(builtin_problems())}")
    if scale not in SCALES:
        raise ConfigError(f"scale: must be one of {SCALES}, got {scale!r}")
    if experiment in ("convergence-h", "solve"):
        problem = problem or "ex1-cfg1"
        if builtin_problems()[problem]().dimension == 2:
            kappa_exp = 3.0 if problem.startswith("ex2") else 4.0
            cfg = dict(dimension=2, kappa_exp=kappa_exp, H_exps=(2, 3, 4, 5), h_exp=9 if paper else 7)
        else:
            cfg = dict(dimension=1, kappa_exp=6.0, H_exps=(7, 8, 9, 10), h_exp=14)
        if experiment == "solve":
            cfg["H_exps"] = (cfg["H_exps"][-1],)
        return ExperimentConfig(problem=problem, **cfg, **base)
    if experiment == "convergence-ell":
        problem = problem or "ex4-1d"
        if builtin_problems()[problem]().dimension == 2:
            cfg = dict(dimension=2, kappa_exp=4.0, H_exps=(4,), h_exp=10 if paper else 7,
                       ell_list=tuple(range(1, 8 if paper else 7)))
        else:
            cfg = dict(dimension=1, kappa_exp=6.0, H_exps=(7,), h_exp=14,
                       ell_list=tuple(range(1, 11)))
        return ExperimentConfig(problem=problem, **cfg, **base)
    if experiment == "boundary-correction":
        return ExperimentConfig(
            problem=problem or "ex3-hetero", dimension=2, kappa_exp=4.0, H_exps=(6,),
            h_exp=9 if paper else 7, ell=10 if paper else 6, **base,
        )
    if experiment in ("qmc-rate", "mc-vs-qmc"):
        kinds = ("sobol", "lattice") if experiment == "qmc-rate" else ("sobol", "lattice", "mc")
        if paper:
            return ExperimentConfig(
                problem="ex1-cfg1", dimension=1, kappa_exp=6.0, H_exps=(9,), h_exp=14,
                ell="random", s=64, N_list=(500, 800, 1000, 4000, 8000), N_ref=50000,
                kinds=kinds, R=16, **base,
            )
        return ExperimentConfig(
            problem="ex1-cfg1", dimension=1, kappa_exp=4.0, H_exps=(6,), h_exp=10,
            ell="global", s=32, N_list=(64, 128, 256, 512, 1024), N_ref=2**15, kinds=kinds,
            R=8, **base,
        )
    if experiment == "truncation-rate":
        if paper:
            return ExperimentConfig(
                problem="ex1-cfg1", dimension=1, kappa_exp=6.0, H_exps=(9,), h_exp=14,
                ell="random", q=(2.0, 3.0), s_list=(16, 32, 64, 128, 256), s_ref=512,
                N_ref=8000, kinds=("sobol",), **base,
            )
        return ExperimentConfig(
            problem="ex1-cfg1", dimension=1, kappa_exp=4.0, H_exps=(6,), h_exp=10,
            ell="global", q=(2.0, 3.0), s_list=(8, 16, 32, 64), s_ref=256, N_ref=1024,
            kinds=("sobol",), **base,
        )
    raise ConfigError(f"experiment: unknown experiment {experiment!r}; choose from {EXPERIMENTS}")


# ---------------------------------------------------------------- config files

_TUPLE_FIELDS = {"H_exps", "ell_list", "q", "s_list", "N_list", "kinds"}


def parse_value(name: str, text: str):
    """Convert a textual ``key=value`` setting to the field's type."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if name not in fields:
        raise ConfigError(f"{name}: unknown configuration key")
    text = text.strip()
    try:
        if name in _TUPLE_FIELDS:
            items = [t.strip() for t in text.split(",") if t.strip()]
            if name == "kinds":
                return tuple(items)
            if name == "q":
                return tuple(float(t) for t in items)
            return tuple(int(t) for t in items)
        if name == "ell":
            return int(text) if text.lstrip("-").isdigit() else text
        if name == "boundary_corrected":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        default = fields[name].default
        if isinstance(default, bool):
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r}") from exc


def read_config_file(path) -> dict:
    """Plain-text ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = parse_value(key, value)
    return out


# ---------------------------------------------------------------- results and CSV


@dataclass
class ExperimentResult:
    name: str
    config: ExperimentConfig
    tables: dict = field(default_factory=dict)  # file stem -> (header, rows)
    summary: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict, repr=False)

    def add_table(self, stem: str, header: Sequence[str], rows: list) -> None:
        self.tables[stem] = (list(header), rows)


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "inf" if math.isinf(v) else f"{float(v):.17g}"
    return str(v)


def write_csv(path, header: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(row[k]) for k in header) + "\n")


def write_result(result: ExperimentResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, (header, rows) in result.tables.items():
        p = out / f"{stem}.csv"
        write_csv(p, header, rows)
        written.append(p)
    p = out / f"{result.name.replace('-', '_')}_summary.txt"
    with open(p, "w") as fh:
        for k, v in result.summary.items():
            fh.write(f"{k} = {format_cell(v)}\n")
        fh.write("# config\n")
        for f in dataclasses.fields(result.config):
            v = getattr(result.config, f.name)
            v = ",".join(format_cell(x) for x in v) if isinstance(v, tuple) else format_cell(v)
            fh.write(f"# {f.name} = {v}\n")
    written.append(p)
    return written


ERROR_HEADER = ("H", "h", "kappa", "ell", "corrected", "err_L2", "err_V", "err_AV")


def _error_row(H, h, kappa, layers, corrected, rep) -> dict:
    return dict(
        H=H, h=h, kappa=kappa, ell=math.inf if layers is None else layers, corrected=corrected,
        err_L2=rep.l2, err_V=rep.v, err_AV=rep.av,
    )


# ---------------------------------------------------------------- deterministic experiments


def _problem(cfg: ExperimentConfig):
    prob = get_problem(cfg.problem, kappa=cfg.kappa)
    if prob.dimension != cfg.dimension:
        raise ConfigError(f"dimension: problem {cfg.problem!r} is {prob.dimension}D")
    return prob


def _lod_errors(cfg, prob, mp, pieces, ref, layers, corrected=None):
    corrected = cfg.boundary_corrected if corrected is None else corrected
    basis = build_basis(
        mp, prob, layers, corrected, cfg.sign, cfg.constraint_mode, pieces=pieces,
        corrector=cfg.corrector,
    )
    sol = solve_coarse(basis, pieces=pieces)
    return sol, error_report(sol.u, ref, prob.kappa, mp.fine, prob.diffusion)


def run_solve(cfg: ExperimentConfig) -> ExperimentResult:
    prob = _problem(cfg)
    H_exp = cfg.H_exps[0]
    mp = build_two_level(cfg.dimension, H_exp, cfg.h_exp)
    pieces = assemble_pieces(prob, mp.fine)
    ref = solve_reference(prob, mp.fine)
    layers = cfg.layers_for(2.0**-H_exp)
    sol, rep = _lod_errors(cfg, prob, mp, pieces, ref.u, layers)
    res = ExperimentResult("solve", cfg)
    row = _error_row(2.0**-H_exp, 2.0**-cfg.h_exp, prob.kappa, layers, cfg.boundary_corrected, rep)
    res.add_table("solve", ERROR_HEADER, [row])
    res.summary.update(err_L2=rep.l2, err_V=rep.v, err_AV=rep.av, reference_residual=ref.residual)
    res.arrays.update(solution=sol.u, reference=ref.u)
    return res


def run_convergence_h(cfg: ExperimentConfig) -> ExperimentResult:
    prob = _problem(cfg)
    fine = uniform_mesh(cfg.dimension, 2**cfg.h_exp)
    ref = solve_reference(prob, fine).u
    h = 2.0**-cfg.h_exp
    lod_rows, fem_rows = [], []
    for H_exp in sorted(cfg.H_exps):
        t0 = time.perf_counter()
        mp = build_two_level(cfg.dimension, H_exp, cfg.h_exp)
        pieces = assemble_pieces(prob, mp.fine)
        H = 2.0**-H_exp
        layers = cfg.layers_for(H)
        _, rep = _lod_errors(cfg, prob, mp, pieces, ref, layers)
        lod_rows.append(_error_row(H, h, prob.kappa, layers, cfg.boundary_corrected, rep))
        u_fem = fem_coarse_solution(mp, prob, pieces)
        frep = error_report(u_fem, ref, prob.kappa, mp.fine, prob.diffusion)
        fem_rows.append(_error_row(H, h, prob.kappa, 0, False, frep))
        log.info("H=2^-%d done in %.1fs: L2 %.3e V %.3e (FEM L2 %.3e)", H_exp,
                 time.perf_counter() - t0, rep.l2, rep.v, frep.l2)
    res = ExperimentResult("convergence-h", cfg)
    res.add_table("convergence_h", ERROR_HEADER, lod_rows)
    res.add_table("convergence_h_fem", ERROR_HEADER, fem_rows)
    Hs = [r["H"] for r in lod_rows]
    if len(Hs) >= 3:
        res.summary["slope_L2"] = fit_rate(Hs, [r["err_L2"] for r in lod_rows]).slope
        res.summary["slope_V"] = fit_rate(Hs, [r["err_V"] for r in lod_rows]).slope
        res.summary["fem_slope_L2"] = fit_rate(Hs, [r["err_L2"] for r in fem_rows]).slope
    res.summary["fem_over_lod_L2_finest"] = fem_rows[-1]["err_L2"] / lod_rows[-1]["err_L2"]
    return res


def localization_checks(errors: Sequence[float], global_error: float, noise: float = 0.05) -> dict:
    """Monotone decrease up to relative ``noise`` and arrival at the global plateau."""
    errors = list(errors)
    increases = [
        (i, errors[i], errors[i + 1])
        for i in range(len(errors) - 1)
        if errors[i + 1] > (1.0 + noise) * errors[i]
    ]
    plateau = abs(errors[-1] - global_error) <= noise * global_error
    return dict(monotone=not increases, increases=increases, plateau=plateau)


def run_convergence_ell(cfg: ExperimentConfig) -> ExperimentResult:
    prob = _problem(cfg)
    H_exp = cfg.H_exps[0]
    mp = build_two_level(cfg.dimension, H_exp, cfg.h_exp)
    pieces = assemble_pieces(prob, mp.fine)
    ref = solve_reference(prob, mp.fine).u
    H, h = 2.0**-H_exp, 2.0**-cfg.h_exp
    ells = list(cfg.ell_list) or list(range(1, default_layers(H) + 1))
    rows = []
    for layers in ells + [None]:
        _, rep = _lod_errors(cfg, prob, mp, pieces, ref, layers)
        rows.append(_error_row(H, h, prob.kappa, layers, cfg.boundary_corrected, rep))
        log.info("l=%s: V %.3e", layers, rep.v)
    res = ExperimentResult("convergence-ell", cfg)
    res.add_table("convergence_ell", ERROR_HEADER, rows)
    chk = localization_checks([r["err_V"] for r in rows[:-1]], rows[-1]["err_V"])
    res.summary.update(
        global_err_V=rows[-1]["err_V"], monotone=chk["monotone"], plateau=chk["plateau"],
        num_increases=len(chk["increases"]),
    )
    return res


def run_boundary_correction(cfg: ExperimentConfig) -> ExperimentResult:
    prob = _problem(cfg)
    H_exp = cfg.H_exps[0]
    mp = build_two_level(cfg.dimension, H_exp, cfg.h_exp)
    pieces = assemble_pieces(prob, mp.fine)
    ref = solve_reference(prob, mp.fine).u
    H, h = 2.0**-H_exp, 2.0**-cfg.h_exp
    layers = cfg.layers_for(H)
    rows = []
    for corrected in (False, True):
        _, rep = _lod_errors(cfg, prob, mp, pieces, ref, layers, corrected)
        rows.append(_error_row(H, h, prob.kappa, layers, corrected, rep))
    res = ExperimentResult("boundary-correction", cfg)
    res.add_table("boundary_correction", ERROR_HEADER, rows)
    res.summary.update(
        err_AV_uncorrected=rows[0]["err_AV"],
        err_AV_corrected=rows[1]["err_AV"],
        improvement=rows[0]["err_AV"] / rows[1]["err_AV"],
    )
    return res


# ---------------------------------------------------------------- stochastic experiments


def sample_solver_factory(cfg: ExperimentConfig) -> Callable:
    """Map a parametric index to the configured per-sample spatial solver."""
    if cfg.dimension != 1:
        raise ConfigError("dimension: the built-in random family is one-dimensional")
    kappa = cfg.kappa
    if cfg.solver == "fem":
        mesh = uniform_mesh(1, 2**cfg.h_exp)
        return lambda par: FemSampleSolver(mesh, kappa, par)
    mp = build_two_level(1, cfg.H_exps[0], cfg.h_exp)
    layers = cfg.layers_for(2.0 ** -cfg.H_exps[0])
    return lambda par: LodSampleSolver(
        mp, kappa, par, layers, boundary_corrected=cfg.boundary_corrected, corrector=cfg.corrector
    )


def run_sampling_rate(cfg: ExperimentConfig, name: str) -> ExperimentResult:
    """Error of the expected solution versus the number of points for each point-set kind.

    The reference is a Sobol rule with ``N_ref`` points.  For shifted
    lattices and MC the error is the root mean square over ``R``
    replicates of ``|Q_r - reference|``; the ``rms`` column is the usual
    across-replicate estimate of the standard error.
    """
    rng = np.random.default_rng(cfg.seed)
    make = sample_solver_factory(cfg)
    res = ExperimentResult(name, cfg)
    for q in cfg.q:
        rows = []
        solver = make(reference_family(q, cfg.s, cfg.delta))
        mesh = solver.mesh
        norm = lambda v: l2_norm(v, mesh)  # noqa: E731
        t0 = time.perf_counter()
        ref = estimate_expectation(solver, make_point_sets("sobol", cfg.s, cfg.N_ref, skip=cfg.skip)).mean
        log.info("reference with N=%d in %.1fs", cfg.N_ref, time.perf_counter() - t0)
        scale = norm(ref)
        for kind in cfg.kinds:
            R = 1 if kind == "sobol" else cfg.R
            errs = []
            for N in cfg.N_list:
                est = estimate_expectation(
                    solver, make_point_sets(kind, cfg.s, N, R, rng, cfg.skip), norm=norm
                )
                err = math.sqrt(np.mean([norm(Q - ref) ** 2 for Q in est.shift_means])) / scale
                errs.append(err)
                rows.append(dict(N=N, s=cfg.s, R=R, kind=kind, err=err, rms=est.rms / scale))
            if len(cfg.N_list) >= 3:
                res.summary[f"slope_{kind}_q{q:g}"] = fit_rate(cfg.N_list, errs).slope
        stem = name.replace("-", "_") + (f"_q{q:g}" if len(cfg.q) > 1 else "")
        res.add_table(stem, ("N", "s", "R", "kind", "err", "rms"), rows)
    return res


def run_truncation_rate(cfg: ExperimentConfig) -> ExperimentResult:
    make = sample_solver_factory(cfg)
    res = ExperimentResult("truncation-rate", cfg)
    rows = []
    kind = cfg.kinds[0] if cfg.kinds[0] != "mc" else "sobol"
    for q in cfg.q:
        fam = reference_family(q, cfg.s_ref, cfg.delta)
        probe = make(fam.truncated(1))
        study = truncation_study(make, fam, cfg.s_list, cfg.s_ref, cfg.N_ref, probe.mesh, kind, cfg.skip)
        for s, e in zip(study.s_values, study.errors):
            rows.append(dict(q=q, s=s, s_ref=cfg.s_ref, N=cfg.N_ref, kind=kind, err=e))
        res.summary[f"slope_q{q:g}"] = study.slope
    res.add_table("truncation_rate", ("q", "s", "s_ref", "N", "kind", "err"), rows)
    return res


RUNNERS = {
    "solve": run_solve,
    "convergence-h": run_convergence_h,
    "convergence-ell": run_convergence_ell,
    "boundary-correction": run_boundary_correction,
    "qmc-rate": lambda cfg: run_sampling_rate(cfg, "qmc-rate"),
    "mc-vs-qmc": lambda cfg: run_sampling_rate(cfg, "mc-vs-qmc"),
    "truncation-rate": run_truncation_rate,
}


def run_experiment(cfg: ExperimentConfig, write: bool = True, validate: bool = True) -> ExperimentResult:
    if validate:
        cfg.validate()
    result = RUNNERS[cfg.experiment](cfg)
    if write:
        write_result(result, cfg.out_dir)
        if cfg.experiment == "solve":
            out = Path(cfg.out_dir)
            write_solution(out / "solution.txt", result.arrays["solution"], cfg.dimension,
                           cfg.H_exps[0], cfg.h_exp, cfg.kappa)
            write_solution(out / "reference.txt", result.arrays["reference"], cfg.dimension,
                           None, cfg.h_exp, cfg.kappa)
    return result
