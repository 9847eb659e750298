"""Command-line front end: ``kmslab <subcommand> [--config FILE] [--key value ...]``.

Configuration files are UTF-8 ``key = value`` lines with ``#`` comments.
Command-line flags override the file; unknown keys are rejected.

Exit codes: 0 success, 1 criterion failure, 2 usage/config error,
3 numerical failure (non-convergence or an exhausted numerical budget).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import clustering, commuting, io, kinetic, kms_verify, lindblad, scaling_limit
from .operator_core import (
    MAX_SITES,
    PERTURBATIONS,
    HamiltonianSpec,
    LatticeError,
    LatticeSpec,
    build_annihilation,
    build_creation,
    build_hamiltonian,
    dagger,
    eigh_blocked,
    gibbs_state,
    number_operator,
    random_density_matrix,
)

log = logging.getLogger("kmslab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    if isinstance(s, (list, tuple)):
        return tuple(float(x) for x in s)
    return tuple(float(x) for x in str(s).replace(";", ",").split(",") if x.strip())


def _ints(s):
    if isinstance(s, (list, tuple)):
        return tuple(int(x) for x in s)
    return tuple(int(x) for x in str(s).replace(";", ",").split(",") if x.strip())


def _strs(s):
    if isinstance(s, (list, tuple)):
        return tuple(str(x) for x in s)
    return tuple(x.strip() for x in str(s).split(",") if x.strip())


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s

    parse.__name__ = "choice"
    return parse


COMMON = {
    "seed": (int, 20240601, "PRNG seed (numpy PCG64)"),
    "output": (str, "kmslab-out", "output directory"),
    "plots": (_bool, False, "emit gnuplot data files and scripts"),
    "hopping": (float, 1.0, "hopping J"),
    "interaction": (float, 1.0, "interaction U"),
    "chemical_potential": (float, 0.0, "chemical potential"),
    "perturbation": (_choice(*PERTURBATIONS), "hopping-modulation", "H' template"),
    "perturbation_strength": (float, 1.0, "H' strength"),
    "boundary": (_choice("periodic", "open"), "periodic", "lattice boundary"),
}

HELP = {
    "kinetic": "relax a momentum distribution under the collision operator",
    "lindblad": "evolve the dissipative dynamics and find its stationary states",
    "kms-check": "test a state for the KMS property at some inverse temperature",
    "commute": "commutator defect of the long-time derivation",
    "cluster": "spatial decay of connected correlators in a Gibbs state",
    "lr": "sample the Lieb-Robinson cone and fit its velocity",
    "scaling": "compare exact weak-coupling dynamics with its kinetic limit",
    "accept": "run the acceptance checks and report PASS/FAIL",
}

SCHEMAS = {
    "kinetic": {
        "side": (int, 8, "grid side length L"),
        "dimension": (int, 2, "grid dimension (1 or 2)"),
        "dispersion": (_choice("cosine", "quadratic"), "cosine", "band"),
        "mode": (_choice("exact-shell", "broadened"), "exact-shell", "energy conservation"),
        "eta": (float, 0.1, "broadening width"),
        "form": (_choice("uehling-uhlenbeck", "bilinear"), "uehling-uhlenbeck", "collision form"),
        "vertex": (float, 1.0, "constant vertex W"),
        "dtau": (float, 0.01, "RK4 step"),
        "tol": (float, 1e-10, "stationarity tolerance on ||C||_inf"),
        "tau_max": (float, 100.0, "time budget"),
        "checkpoint_every": (int, 10, "steps between checkpoints"),
        "init": (_choice("random", "fermi-dirac"), "random", "initial occupation"),
        "init_beta": (float, 1.0, "beta of a Fermi-Dirac initial state"),
        "init_mu": (float, 0.0, "mu of a Fermi-Dirac initial state"),
    },
    "lindblad": {
        "sites": (int, 3, "number of sites"),
        "jump": (_choice("random", "built"), "random", "random self-adjoint W or build_W(H', K+V, eps)"),
        "epsilon": (float, 0.5, "regularization of build_W"),
        "form": (_choice("eq12-literal", "standard-gksl"), "eq12-literal", "generator form"),
        "method": (_choice("exact-exponential", "rk4", "dephasing"), "exact-exponential", "integrator"),
        "dtau": (float, 1e-3, "rk4 step"),
        "tau": (float, 2.0, "final time"),
        "steps": (int, 20, "trace points"),
        "stationary": (_bool, True, "compute stationary states (N <= 6)"),
    },
    "kms-check": {
        "sites": (int, 6, "number of sites"),
        "state": (_choice("gibbs", "pinched-kinetic", "scaled"), "gibbs", "state to test"),
        "beta": (float, 1.0, "inverse temperature of the state"),
        "gamma": (float, 2.0, "gamma for the scaled state"),
        "check_beta": (float, 1.0, "beta used in the two-point check"),
        "tol": (float, 1e-10, "pass tolerance"),
    },
    "commute": {
        "sizes": (_ints, (4, 6, 8), "chain lengths"),
        "gammas": (_floats, (0.5, 1.0, 2.0, 4.0), "gamma grid"),
        "betas": (_floats, (1.0,), "beta grid"),
    },
    "cluster": {
        "sites": (int, 12, "chain length"),
        "beta": (float, 1.0, "inverse temperature"),
        "window": (int, 3, "largest separation in the fit"),
        "min_points": (int, 3, "minimum points in the fit"),
        "three_point_j": (int, 3, "spacing of the three-point defect"),
    },
    "lr": {
        "sites": (int, 10, "chain length"),
        "xs": (_ints, (1, 2, 3, 4, 5), "separations"),
        "ts": (_floats, (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0), "times"),
    },
    "scaling": {
        "sites": (int, 6, "chain length"),
        "tau": (float, 0.5, "kinetic time"),
        "lambdas": (_floats, (0.4, 0.2, 0.1), "couplings, strictly decreasing"),
        "kappas": (_floats, (0.5, 0.25, 0.1), "eps = kappa lambda^2"),
        "epsilons": (_floats, (0.5, 0.25, 0.1), "fixed regularizations for the sensitivity report"),
        "observables": (_strs, scaling_limit.DEFAULT_OBSERVABLES, "observables"),
        "beta": (float, 1.0, "inverse temperature of the initial Gibbs state"),
        "trace_points": (int, 51, "points per lambda in the trace CSV"),
    },
    "accept": {
        "criteria": (_ints, tuple(range(1, 10)), "criteria to run"),
        "kinetic_runs": (int, 100, "random runs for criteria 1-2"),
        "lindblad_runs": (int, 200, "random runs for criterion 3"),
    },
}

# subcommand-specific overrides of common defaults
DEFAULT_OVERRIDES = {"scaling": {"perturbation": "local-potential"}}


def schema_for(command):
    sch = dict(COMMON)
    sch.update(SCHEMAS[command])
    return sch


def parse_config_text(text, schema, source="<config>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in schema:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        try:
            out[key] = schema[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for '{key}': {exc}") from None
    return out


def default_config_text():
    return resources.files("kmslab").joinpath("data/default.conf").read_text(encoding="utf-8")


def resolve_config(command, file_values, flag_values):
    schema = schema_for(command)
    cfg = {k: spec[1] for k, spec in schema.items()}
    cfg.update(DEFAULT_OVERRIDES.get(command, {}))
    cfg.update(file_values)
    cfg.update({k: v for k, v in flag_values.items() if v is not None})
    for k in ("tol", "dtau", "eta", "epsilon"):
        if k in cfg and not cfg[k] > 0:
            raise ConfigError(f"'{k}' must be positive")
    if "sites" in cfg and not 1 <= cfg["sites"] <= MAX_SITES:
        raise ConfigError(f"sites={cfg['sites']} outside [1, {MAX_SITES}]")
    cfg["command"] = command
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="kmslab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SCHEMAS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", type=Path, help="key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a key (repeatable)")
        for key, (typ, default, helptext) in schema_for(name).items():
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, type=str,
                            help=f"{helptext} (default: {default})")
    return p


def _rng(cfg):
    return np.random.Generator(np.random.PCG64(cfg["seed"]))


def _ham(cfg, **over):
    kw = dict(hopping=cfg["hopping"], interaction=cfg["interaction"], chemical_potential=cfg["chemical_potential"],
              perturbation=cfg["perturbation"], perturbation_strength=cfg["perturbation_strength"])
    kw.update(over)
    return HamiltonianSpec(**kw)


def _out(cfg):
    path = Path(cfg["output"]) / cfg["command"]
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_kinetic(cfg):
    grid = kinetic.MomentumGrid(cfg["side"], cfg["dimension"])
    eps = kinetic.make_dispersion(grid, cfg["dispersion"], cfg["hopping"])
    kernel = kinetic.CollisionKernel(grid, eps, vertex=cfg["vertex"], mode=cfg["mode"], eta=cfg["eta"],
                                     form=cfg["form"], energy_scale=abs(cfg["hopping"]) or 1.0)
    if cfg["init"] == "random":
        rho0 = _rng(cfg).uniform(0.0, 1.0, grid.size)
    else:
        rho0 = kinetic.fermi_dirac(cfg["init_beta"], cfg["init_mu"], grid, eps)
    try:
        traj = kinetic.evolve_to_stationary(rho0, kernel, cfg["tol"], cfg["tau_max"], cfg["dtau"],
                                            cfg["checkpoint_every"])
    except kinetic.StepSizeError as exc:
        raise NumericalFailure(str(exc)) from exc
    n0, e0 = kinetic.conserved_charges(rho0, eps)
    summary = dict(converged=traj.converged, tau=traj.tau, steps=traj.steps, collision_norm=traj.residual,
                   min_entropy_step=traj.min_entropy_step, n_drift=traj.n_drift, e_drift=traj.e_drift,
                   halvings=traj.halvings, invariants=int(kinetic.collision_invariants(kernel).shape[1]),
                   quadruples=int(len(kernel.quadruples[0])))
    try:
        target = kinetic.solve_beta_mu(n0, e0, grid, eps)
        summary.update(target_beta=target.beta, target_mu=target.mu, solver=target.method)
    except kinetic.DomainError as exc:
        summary.update(target_error=str(exc))
    if np.all((traj.rho > 0) & (traj.rho < 1)):
        fit = kinetic.fit_fermi_dirac(traj.rho, eps)
        summary.update(fit_beta=fit.beta, fit_mu=fit.mu, fit_residual=fit.max_residual, fit_flags=fit.flags)
    tol = dict(tol=cfg["tol"], dtau=cfg["dtau"], shell_tol=kernel.shell_tol)
    out = _out(cfg)
    io.write_csv(out / "trajectory.csv", traj.checkpoints, list(kinetic.CHECKPOINT_FIELDS), cfg, tol)
    io.write_json(out / "occupation.json", {"occupation": {str(i): float(r) for i, r in enumerate(traj.rho)}}, cfg, tol)
    io.write_json(out / "summary.json", summary, cfg, tol)
    if cfg["plots"]:
        cp = traj.checkpoints
        io.write_gnuplot(out, "entropy", {"tau": [c["tau"] for c in cp], "S": [c["entropy"] for c in cp]},
                         "set xlabel 'tau'\nset ylabel 'S'\nplot '{dat}' using 1:2 with linespoints title 'entropy'\n")
    print(f"kinetic: converged={traj.converged} tau={traj.tau:.3f} ||C||={traj.residual:.3e}")
    if not traj.converged:
        raise NumericalFailure(f"no stationary state within tau_max={cfg['tau_max']}")
    return EXIT_OK


def cmd_lindblad(cfg):
    n = cfg["sites"]
    if n > lindblad.EXACT_MAX_SITES and cfg["method"] == "exact-exponential":
        raise ConfigError(f"exact-exponential is capped at N <= {lindblad.EXACT_MAX_SITES}")
    lat = LatticeSpec.chain(n, cfg["boundary"])
    rng = _rng(cfg)
    k, v, hp = build_hamiltonian(lat, _ham(cfg))
    if cfg["jump"] == "random":
        jump = lindblad.random_jump(lat.dim, rng)
    else:
        jump = lindblad.build_W(hp, k + v, cfg["epsilon"])
    w = jump.matrix if cfg["form"] == "eq12-literal" else np.sqrt(2.0) * jump.matrix
    gen = lindblad.LindbladGenerator(lindblad.JumpOperator(w), form=cfg["form"])
    rho0 = random_density_matrix(lat.dim, rng)
    taus = np.linspace(0.0, cfg["tau"], cfg["steps"] + 1)
    rows = lindblad.evolution_trace(rho0, gen, taus, cfg["method"], cfg["dtau"], reference=k + v)
    tol = dict(eig_floor=lindblad.EIG_FLOOR, stationary_rel_tol=1e-10, entropy_factor=lindblad.ENTROPY_FACTOR)
    out = _out(cfg)
    io.write_csv(out / "trace.csv", rows, ["tau", "entropy", "trace_defect", "min_eigenvalue", "gibbs_distance"], cfg, tol)
    payload = dict(jump_selfadjoint=jump.selfadjoint, entropy_factor=lindblad.ENTROPY_FACTOR,
                   min_entropy_step=float(np.min(np.diff([r["entropy"] for r in rows]))))
    if cfg["stationary"] and n <= lindblad.EXACT_MAX_SITES:
        st = lindblad.stationary_states(gen)
        payload["stationary"] = dict(dimension=st.dimension, degenerate=st.degenerate, everything=st.everything,
                                     valid=st.valid,
                                     states=[dict(real=s.real, imag=s.imag) for s in st.states])
    io.write_json(out / "stationary.json", payload, cfg, tol)
    if cfg["plots"]:
        io.write_gnuplot(out, "entropy", {"tau": taus, "S": [r["entropy"] for r in rows]},
                         "set xlabel 'tau'\nplot '{dat}' using 1:2 with linespoints title 'S(rho(tau))'\n")
    print(f"lindblad: S {rows[0]['entropy']:.6f} -> {rows[-1]['entropy']:.6f}")
    return EXIT_OK


def cmd_kms_check(cfg):
    lat = LatticeSpec.chain(cfg["sites"], cfg["boundary"])
    k, v, _ = build_hamiltonian(lat, _ham(cfg))
    h = k + v
    eig = eigh_blocked(h)
    if cfg["state"] == "gibbs":
        rho = gibbs_state(h, cfg["beta"], eig)
    elif cfg["state"] == "pinched-kinetic":
        rho = scaling_limit.pinch(gibbs_state(k, cfg["beta"]), h, eig)
    else:
        rho = scaling_limit.pinch(gibbs_state(commuting.scaled_generator(k, v, cfg["gamma"]), cfg["beta"]), h, eig)
    a0 = build_annihilation(lat, 0)
    probe = a0 + dagger(a0) + number_operator(lat, 0)
    lt = kms_verify.kms_line_test(rho, h, probe, eig=eig)
    beta_fit, affine = kms_verify.fit_beta(rho, h, eig=eig)
    two = kms_verify.kms_two_point_check(rho, h, a0, dagger(a0), cfg["check_beta"], eig=eig)
    tol = cfg["tol"]
    verdict = dict(beta_hat=lt.beta, line_residual=lt.line_residual, flags=lt.flags, fit_beta=beta_fit,
                   affine_residual=affine, two_point_residual=two, check_beta=cfg["check_beta"],
                   kms=bool(lt.line_residual < tol), two_point_pass=bool(abs(two) < tol))
    out = _out(cfg)
    io.write_csv(out / "spectrum.csv", [dict(mu=p.mu, lam=p.lam, weight=p.weight) for p in lt.points],
                 ["mu", "lam", "weight"], cfg, dict(tol=tol))
    io.write_json(out / "verdict.json", verdict, cfg, dict(tol=tol))
    if cfg["plots"]:
        io.write_gnuplot(out, "spectrum", {"mu": [p.mu for p in lt.points], "lam": [p.lam for p in lt.points]},
                         f"set xlabel 'mu'\nset ylabel 'lambda'\nplot '{{dat}}' using 1:2 title 'joint spectrum', "
                         f"{lt.beta!r}*x title 'fitted line'\n")
    print(f"kms-check: beta_hat={lt.beta:.12f} line_residual={lt.line_residual:.3e} KMS={verdict['kms']}")
    return EXIT_OK


def cmd_commute(cfg):
    rows = []
    for n in cfg["sizes"]:
        lat = LatticeSpec.chain(n, cfg["boundary"])
        k, v, _ = build_hamiltonian(lat, _ham(cfg))
        for r in commuting.defect_table(k, v, cfg["gammas"], cfg["betas"], build_creation(lat, 0)):
            rows.append(dict(sites=n, **r))
    out = _out(cfg)
    fields = ["sites", "gamma", "beta", "commutator_defect", "centrality_defect", "invariance_defect"]
    io.write_csv(out / "defects.csv", rows, fields, cfg, {})
    print(f"commute: {len(rows)} rows")
    return EXIT_OK


def cmd_cluster(cfg):
    lat = LatticeSpec.chain(cfg["sites"], "periodic")
    k, v, _ = build_hamiltonian(lat, _ham(cfg))
    rho = gibbs_state(k + v, cfg["beta"])
    q = number_operator(lat, 0) - 0.5 * np.eye(lat.dim)
    samples = [(j, clustering.connected_correlator(rho, q, q, j, lat)) for j in range(1, cfg["sites"] // 2 + 1)]
    fit = clustering.fit_decay(samples[: cfg["window"]], min_points=cfg["min_points"])
    three = clustering.multi_cluster_defect(rho, [q, q, q], cfg["three_point_j"], lat)
    out = _out(cfg)
    io.write_csv(out / "correlators.csv", [dict(j=j, value=v) for j, v in samples], ["j", "value"], cfg, {})
    io.write_json(out / "fit.json", dict(K=fit.K, M=fit.M, goodness=fit.goodness, window=fit.window,
                                         flags=fit.flags, three_point_defect=three,
                                         three_point_bound=3 * fit.K * np.exp(-fit.M * cfg["three_point_j"])), cfg, {})
    if cfg["plots"]:
        io.write_gnuplot(out, "decay", {"j": [s[0] for s in samples], "value": [s[1] for s in samples]},
                         f"set logscale y\nplot '{{dat}}' using 1:2 title 'connected', {fit.K!r}*exp(-{fit.M!r}*x) title 'fit'\n")
    print(f"cluster: K={fit.K:.4g} M={fit.M:.4g} R2={fit.goodness:.4f}")
    return EXIT_OK


def cmd_lr(cfg):
    lat = LatticeSpec.chain(cfg["sites"], "periodic")
    k, v, _ = build_hamiltonian(lat, _ham(cfg))
    a = number_operator(lat, 0) - 0.5 * np.eye(lat.dim)
    samples = clustering.lr_sweep(a, a, k + v, lat, cfg["xs"], cfg["ts"])
    fit = clustering.fit_lr_cone(samples, 0.5, 0.5)
    viol = clustering.cone_violations(samples, fit, 0.5, 0.5) if fit.mu > 0 else []
    out = _out(cfg)
    io.write_csv(out / "samples.csv", [dict(x=s.j, t=s.t, value=s.value) for s in samples], ["x", "t", "value"], cfg, {})
    io.write_json(out / "fit.json", dict(mu=fit.mu, c=fit.c, prefactor=fit.prefactor, goodness=fit.goodness,
                                         violation_fraction=fit.violation_fraction,
                                         adjusted_prefactor=fit.adjusted_prefactor, cone_violations=viol,
                                         flags=fit.flags), cfg, {})
    if cfg["plots"]:
        io.write_gnuplot(out, "cone", {"x": [s.j for s in samples], "t": [s.t for s in samples],
                                       "value": [s.value for s in samples]},
                         "set logscale z\nsplot '{dat}' using 1:2:3 with points title '||[A(x,t),B]||'\n")
    print(f"lr: mu={fit.mu:.4g} c={fit.c:.4g} violations={len(viol)}")
    return EXIT_OK


def cmd_scaling(cfg):
    plan = scaling_limit.ScalingPlan(tau=cfg["tau"], lambdas=cfg["lambdas"], observables=cfg["observables"],
                                     sites=cfg["sites"], boundary=cfg["boundary"], beta=cfg["beta"],
                                     hamiltonian=_ham(cfg), kappas=cfg["kappas"], fixed_epsilons=cfg["epsilons"])
    rep = scaling_limit.vanhove_compare(plan)
    out = _out(cfg)
    io.write_json(out / "report.json", rep.to_dict(), cfg, dict(picture=1e-11))
    rows = []
    for lam in plan.lambdas:
        for name in plan.observables:
            for r in scaling_limit.expectation_trace(plan, lam, cfg["trace_points"], name):
                rows.append(dict(observable=name, **r))
    io.write_csv(out / "trace.csv", rows, ["observable", "lam", "t", "value"], cfg, dict(picture=1e-11))
    if cfg["plots"]:
        kappa = plan.kappas[0]
        cols = {"lambda": plan.lambdas}
        cols.update({name: rep.delta[kappa][name] for name in plan.observables})
        script = "set logscale xy\nplot " + ", ".join(
            f"'{{dat}}' using 1:{i + 2} with linespoints title '{n}'" for i, n in enumerate(plan.observables)) + "\n"
        io.write_gnuplot(out, "delta", cols, script)
    print(f"scaling: verdict={'decreasing' if rep.verdict else 'not decreasing'}")
    return EXIT_OK if rep.verdict else EXIT_FAIL


def cmd_accept(cfg):
    from .acceptance import run_all

    results = run_all(dict(kinetic_runs=cfg["kinetic_runs"], lindblad_runs=cfg["lindblad_runs"]),
                      cfg["criteria"])
    for r in results:
        print(r.line())
    out = _out(cfg)
    payload = dict(passed=all(r.passed for r in results),
                   criteria={str(r.number): dict(name=r.name, passed=r.passed, metrics=r.metrics)
                             for r in results})
    io.write_json(out / "verdict.json", payload, cfg, {})
    return EXIT_OK if payload["passed"] else EXIT_FAIL


COMMANDS = {
    "kinetic": cmd_kinetic, "lindblad": cmd_lindblad, "kms-check": cmd_kms_check, "commute": cmd_commute,
    "cluster": cmd_cluster, "lr": cmd_lr, "scaling": cmd_scaling, "accept": cmd_accept,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    schema = schema_for(args.command)
    try:
        file_values = {}
        if args.config is None and args.command == "accept":
            file_values = parse_config_text(default_config_text(), schema, "default.conf")
        if args.config is not None:
            text = args.config.read_text(encoding="utf-8")
            file_values = parse_config_text(text, schema, str(args.config))
        flags = {}
        for key in schema:
            raw = getattr(args, key)
            if raw is not None:
                try:
                    flags[key] = schema[key][0](raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for --{key.replace('_', '-')}: {exc}") from None
        flags.update(parse_config_text("\n".join(args.set), schema, "--set"))
        cfg = resolve_config(args.command, file_values, flags)
    except (ConfigError, OSError) as exc:
        print(f"kmslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg)
    except (ConfigError, LatticeError, scaling_limit.BudgetError) as exc:
        print(f"kmslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid sizes or parameters detected by the library
        print(f"kmslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, kinetic.DomainError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"kmslab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
