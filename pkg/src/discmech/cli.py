"""Command-line front end: ``run`` solves shipped problems from JSON configs,
``verify`` runs the property suite. Outputs are a CSV trajectory and a JSON
report per run; floats are written as shortest round-trip decimals."""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import liealg, models, verify
from .discrete1 import ep_flow, ep_residual
from .errors import ConfigError, DiscMechError, NoConvergence, SingularJacobian
from .newton import SolverConfig
from .optimal_control import (HeavyTopParams, RigidBodyParams, gamma_propagation_defect,
                              heavytop_equilibrium, heavytop_oc_solve, heavytop_perturbed,
                              heavytop_problem, rigidbody_controls, rigidbody_lagrangian,
                              rigidbody_oc_solve)
from .second_order import BvpProblem, Trajectory, solve_bvp

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_NOCONV, EXIT_SINGULAR = 0, 1, 2, 3, 4

PROBLEMS = ("pair-spline", "rigid-body", "heavy-top", "ep-free-body", "verify")
SOLVER_KEYS = {f.name for f in fields(SolverConfig)} - {"jacobian"}

# allowed keys of the nested objects, per problem
BOUNDARY_KEYS = {
    "pair-spline": {"start", "end"},
    "rigid-body": {"R0", "Omega0", "RT", "OmegaT"},
    "heavy-top": {"kind", "tilt", "spin", "rotor"},
    "ep-free-body": {"eta0"},
    "verify": set(),
}
PARAM_KEYS = {
    "pair-spline": {"guess_noise"},
    "rigid-body": {"inertia"},
    "heavy-top": {"Ibar", "J", "Mgh"},
    "ep-free-body": {"inertia"},
    "verify": {"suite"},
}


@dataclass(frozen=True)
class RunConfig:
    problem: str
    N: int = 9
    hbar: float = 0.1
    boundary: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    out: str = "results"
    seed: int = 0
    name: Optional[str] = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {PROBLEMS}")
        if not isinstance(self.N, int) or isinstance(self.N, bool) or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if not isinstance(self.hbar, (int, float)) or not self.hbar > 0:
            raise ConfigError(f"hbar must be positive, got {self.hbar!r}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        for label, obj, allowed in (("boundary", self.boundary, BOUNDARY_KEYS[self.problem]),
                                    ("params", self.params, PARAM_KEYS[self.problem]),
                                    ("solver", self.solver, SOLVER_KEYS)):
            if not isinstance(obj, dict):
                raise ConfigError(f"{label} must be an object")
            extra = sorted(set(obj) - allowed)
            if extra:
                raise ConfigError(f"unknown {label} keys: {extra}")
        try:
            self.solver_config()
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid solver settings: {e}") from None

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = sorted(set(d) - {f.name for f in fields(cls)})
        if extra:
            raise ConfigError(f"unknown config keys: {extra}")
        if "problem" not in d:
            raise ConfigError("missing key 'problem'")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e.strerror}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        cfg = cls.from_dict(d)
        return cfg if cfg.name else cls(**{**asdict(cfg), "name": Path(path).stem})

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    def with_overrides(self, tol=None, max_iter=None, seed=None, out=None):
        solver = dict(self.solver)
        if tol is not None:
            solver["tol"] = tol
        if max_iter is not None:
            solver["max_iter"] = max_iter
        kw = {"solver": solver}
        if seed is not None:
            kw["seed"] = seed
        if out is not None:
            kw["out"] = out
        return RunConfig(**{**asdict(self), **kw})


# -- helpers -------------------------------------------------------------------

def _array(value, shape, label):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{label} must be numeric") from None
    if shape is not None and a.shape != shape:
        raise ConfigError(f"{label} must have shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{label} must be finite")
    return a


def _num(x):
    return repr(float(x))


def _plain(x):
    """JSON-ready copy with numpy scalars and arrays turned into floats."""
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (str(v) if isinstance(v, int) else _num(v)) for v in row])
    return buf.getvalue()


def _pad(values, count, width):
    values = [list(v) for v in values]
    return values + [[None] * width] * (count - len(values))


def _multiplier_cols(traj, N):
    lam = traj.multipliers
    if lam is None:
        return [], [[] for _ in range(N)]
    lam = np.asarray(lam)
    s = lam.shape[1]
    return [f"lam_{i}" for i in range(s)], _pad(lam, N, s)


def _info_report(traj):
    info = traj.info
    return {"iterations": info.iterations, "residual": info.residual,
            "action": info.action, "constraint_max": info.constraint_max, "rank": info.rank}


# -- problems --------------------------------------------------------------------

@dataclass
class BvpSolution:
    """A solved boundary-value problem together with what defines its action."""
    L2: object
    constraints: object
    traj: Trajectory
    params: object = None


def _solve_pair_spline(cfg: RunConfig) -> BvpSolution:
    b = cfg.boundary
    if set(b) != {"start", "end"}:
        raise ConfigError("pair-spline boundary needs 'start' and 'end'")
    start = _array(b["start"], None, "boundary.start")
    end = _array(b["end"], None, "boundary.end")
    if start.ndim == 1:
        start, end = start[:, None], end[:, None]
    if start.shape[0] != 2 or start.shape != end.shape:
        raise ConfigError("start and end must each hold two nodes of equal dimension")
    if cfg.N < 5:
        raise ConfigError("pair-spline needs N >= 5")
    noise = float(cfg.params.get("guess_noise", 0.1))
    s = np.linspace(0.0, 1.0, cfg.N - 2)[:, None]
    mid = start[1] + s * (end[0] - start[1])
    rng = np.random.default_rng(cfg.seed)
    mid[1:-1] += noise * rng.standard_normal(mid[1:-1].shape)
    nodes = np.vstack([start[:1], mid, end[1:]])
    L2 = models.spline(start.shape[1])
    traj = solve_bvp(BvpProblem(L2, Trajectory.from_nodes(nodes), None, cfg.solver_config()))
    return BvpSolution(L2, None, traj)


def run_pair_spline(cfg: RunConfig):
    sol = _solve_pair_spline(cfg)
    L2, traj = sol.L2, sol.traj
    m = traj.backend.rank
    q = traj.nodes()
    report = _info_report(traj)
    noether = {}
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        noether[f"translation_{i}"] = verify.noether_defect(
            L2, verify.NoetherData(verify.translation_generator(e)), traj)
    if m == 2:
        noether["rotation"] = verify.noether_defect(
            L2, verify.NoetherData(verify.rotation_generator), traj)
    report["noether_defects"] = noether
    dq = _pad(np.diff(q, axis=0), len(q), m)
    header = (["index"] + [f"q_{i}" for i in range(m)] + [f"dq_{i}" for i in range(m)])
    rows = [[k] + list(q[k]) + dq[k] for k in range(len(q))]
    return header, rows, report


def _rotation(value, label):
    R = _array(value, None, label)
    if R.shape == (3,):
        return liealg.cay(R)
    if R.shape != (3, 3):
        raise ConfigError(f"{label} must be a 3x3 matrix or a Cayley vector")
    return R


def _solve_rigid_body(cfg: RunConfig) -> BvpSolution:
    b = cfg.boundary
    p = RigidBodyParams(tuple(cfg.params.get("inertia", (1.0, 2.0, 3.0))), cfg.hbar)
    R0 = _rotation(b.get("R0", np.eye(3)), "boundary.R0")
    RT = _rotation(b.get("RT", np.eye(3)), "boundary.RT")
    O0 = _array(b.get("Omega0", np.zeros(3)), (3,), "boundary.Omega0")
    OT = _array(b.get("OmegaT", np.zeros(3)), (3,), "boundary.OmegaT")
    if cfg.N < 5:
        raise ConfigError("rigid-body needs N >= 5")
    traj = rigidbody_oc_solve(R0, O0, RT, OT, cfg.N, p, cfg.solver_config())
    return BvpSolution(rigidbody_lagrangian(p), None, traj, p)


def run_rigid_body(cfg: RunConfig):
    sol = _solve_rigid_body(cfg)
    traj, p = sol.traj, sol.params
    Rs = traj.nodes()
    xi = [liealg.cay_inv(g.payload[0]) / p.hbar for g in traj.elements]
    report = _info_report(traj)
    report["controls"] = rigidbody_controls(traj, p)
    xi = _pad(xi, len(Rs), 3)
    header = (["index"] + [f"R_{i}{j}" for i in range(3) for j in range(3)]
              + [f"xi_{i}" for i in range(3)])
    rows = [[k] + list(Rs[k].ravel()) + xi[k] for k in range(len(Rs))]
    return header, rows, report


def _solve_heavy_top(cfg: RunConfig) -> BvpSolution:
    b = dict(cfg.boundary)
    pp = cfg.params
    p = HeavyTopParams(tuple(pp.get("Ibar", (1.0, 1.2, 0.8))), tuple(pp.get("J", (0.1, 0.1))),
                       float(pp.get("Mgh", 1.0)), cfg.hbar)
    if cfg.N < 7:
        raise ConfigError("heavy-top needs N >= 7")
    kind = b.pop("kind", "perturbed")
    if kind == "equilibrium":
        if b:
            raise ConfigError("the equilibrium boundary takes no parameters")
        boundary = heavytop_equilibrium(cfg.N, p)
    elif kind == "perturbed":
        boundary = heavytop_perturbed(cfg.N, p, **{k: float(v) for k, v in b.items()})
    else:
        raise ConfigError(f"unknown heavy-top boundary kind {kind!r}")
    traj = heavytop_oc_solve(boundary, p, cfg.solver_config())
    L2, C = heavytop_problem(p)
    return BvpSolution(L2, C, traj, p)


def run_heavy_top(cfg: RunConfig):
    sol = _solve_heavy_top(cfg)
    traj, p = sol.traj, sol.params
    report = _info_report(traj)
    report["gamma_propagation_defect"] = gamma_propagation_defect(traj, p)
    els = traj.elements
    q = traj.nodes()
    R = [np.eye(3)]
    for g in els:
        R.append(R[-1] @ g.payload[1])
    inc = _pad([np.concatenate([liealg.cay_inv(g.payload[1]) / p.hbar, g.payload[2]])
                for g in els], len(q), 5)
    lam_header, lam = _multiplier_cols(traj, len(q))
    header = (["index", "Gamma_0", "Gamma_1", "Gamma_2", "theta_0", "theta_1"]
              + [f"R_{i}{j}" for i in range(3) for j in range(3)]
              + ["xi_0", "xi_1", "xi_2", "dtheta_0", "dtheta_1"] + lam_header)
    rows = [[k] + list(q[k]) + list(R[k].ravel()) + inc[k] + lam[k] for k in range(len(q))]
    return header, rows, report


def run_ep_free_body(cfg: RunConfig):
    I = _array(cfg.params.get("inertia", (1.0, 2.0, 3.0)), (3,), "params.inertia")
    if np.any(I <= 0):
        raise ConfigError("inertia must be positive")
    eta0 = _array(cfg.boundary.get("eta0", (0.3, -0.5, 0.8)), (3,), "boundary.eta0")
    if cfg.N < 2:
        raise ConfigError("ep-free-body needs N >= 2")
    l = lambda x: 0.5 * float(x @ (I * x))
    grad = lambda x: I * x
    etas = ep_flow(l, grad, eta0, cfg.hbar, cfg.N - 1, cfg.solver_config())
    res = max((float(np.max(np.abs(ep_residual(l, grad, a, b, cfg.hbar))))
               for a, b in zip(etas[:-1], etas[1:])), default=0.0)
    energy = 0.5 * np.sum(I * etas ** 2, axis=1)
    casimir = np.array([np.linalg.norm(liealg.dcay_inv(cfg.hbar * e).T @ (I * e)) for e in etas])
    report = {"residual": res, "energy_drift": float(np.max(np.abs(energy - energy[0]))),
              "casimir_drift": float(np.max(np.abs(casimir - casimir[0])))}
    header = ["index", "eta_0", "eta_1", "eta_2"]
    rows = [[k] + list(e) for k, e in enumerate(etas)]
    return header, rows, report


def run_verify_problem(cfg: RunConfig):
    suite = cfg.params.get("suite", "all")
    checks = _verify_checks(suite, cfg.seed)
    return None, None, {"checks": checks, "all_passed": all(c["passed"] for c in checks)}


def _verify_checks(suite, seed):
    try:
        checks = verify.run_suite(suite, seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return [{"name": c.name, "value": c.value, "threshold": c.threshold,
             "relation": c.relation, "passed": c.passed} for c in checks]


BVP_SOLVERS = {"pair-spline": _solve_pair_spline, "rigid-body": _solve_rigid_body,
               "heavy-top": _solve_heavy_top}


def solve_config(cfg: RunConfig) -> BvpSolution:
    """Solve the boundary-value problem a config describes, without writing files."""
    if cfg.problem not in BVP_SOLVERS:
        raise ConfigError(f"{cfg.problem!r} is not a boundary-value problem")
    return BVP_SOLVERS[cfg.problem](cfg)


RUNNERS = {"pair-spline": run_pair_spline, "rigid-body": run_rigid_body,
           "heavy-top": run_heavy_top, "ep-free-body": run_ep_free_body,
           "verify": run_verify_problem}


# -- driver ---------------------------------------------------------------------

def _write_report(out: Path, name: str, report: dict):
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.report.json"
    path.write_text(json.dumps(_plain(report), indent=2) + "\n")
    return path


def execute(cfg: RunConfig):
    """Run one config, write its files and return ``(exit code, message)``."""
    name = cfg.name or cfg.problem
    out = Path(cfg.out)
    head = {"problem": cfg.problem, "N": cfg.N, "hbar": cfg.hbar, "seed": cfg.seed}
    try:
        header, rows, report = RUNNERS[cfg.problem](cfg)
    except ConfigError as e:
        return EXIT_CONFIG, f"{name}: config error: {e}"
    except SingularJacobian as e:
        _write_report(out, name, {**head, "status": "singular_jacobian", "message": str(e),
                                  "rank": e.rank, "size": e.size})
        return EXIT_SINGULAR, f"{name}: singular Jacobian: {e}"
    except NoConvergence as e:
        _write_report(out, name, {**head, "status": "no_convergence", "message": str(e),
                                  "residual": e.residual, "constraint_max": e.constraint_max})
        return EXIT_NOCONV, f"{name}: {e}"
    except (DiscMechError, ValueError) as e:
        return EXIT_CONFIG, f"{name}: invalid input: {e}"
    code = EXIT_OK
    if cfg.problem == "verify":
        status = "passed" if report["all_passed"] else "failed"
        code = EXIT_OK if report["all_passed"] else EXIT_CHECKS
    else:
        status = "converged"
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.csv").write_text(_csv_text(header, rows))
    _write_report(out, name, {**head, "status": status, **report})
    return code, f"{name}: {status}"


def _execute_path(args):
    path, overrides = args
    try:
        cfg = RunConfig.load(path).with_overrides(**overrides)
    except ConfigError as e:
        return EXIT_CONFIG, f"{path}: config error: {e}"
    return execute(cfg)


def _parser():
    ap = argparse.ArgumentParser(prog="discmech", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve problems described by JSON configs")
    run.add_argument("configs", nargs="+", metavar="config.json")
    run.add_argument("--jobs", type=int, default=1, help="configs solved concurrently")
    ver = sub.add_parser("verify", help="run the property suite")
    ver.add_argument("--suite", default="all", choices=("all",) + verify.SUITES)
    for p in (run, ver):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "verify":
        cfg = RunConfig("verify", params={"suite": args.suite},
                        seed=0 if args.seed is None else args.seed,
                        out=args.out or "results", name="verify")
        code, msg = execute(cfg)
        if code == EXIT_CONFIG:
            print(msg, file=sys.stderr)
            return code
        report = json.loads((Path(cfg.out) / "verify.report.json").read_text())
        for c in report.get("checks", []):
            rel = "<=" if c["relation"] == "<=" else ">="
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']!r} {rel} {c['threshold']!r}")
        print(msg)
        return code
    overrides = {"tol": args.tol, "max_iter": args.max_iter, "seed": args.seed, "out": args.out}
    jobs = [(path, overrides) for path in args.configs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_execute_path, jobs))
    else:
        results = [_execute_path(j) for j in jobs]
    for code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
    return max(code for code, _ in results)


if __name__ == "__main__":
    sys.exit(main())
