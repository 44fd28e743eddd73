"""Command-line entry point.

Exit codes: 0 when every solve converged (or was direct), 2 when an
iteration diverged, hit its cap or a frequency slice was singular, 1 for
bad input (missing file, malformed model, invalid flags).
"""

from __future__ import annotations

import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import benchgen, continuous, direct, iterative, queries, reproduce
from .errors import SingularSliceMatrix, SmrmError
from .model import QuadratureGrid, SolveReport, preprocess

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2

LATTICE_METHODS = ("ge", "lu", "power", "power-approx", "jacobi", "gauss-seidel")
CONT_METHODS = ("cont-power", "cont-jacobi")


def default_seed() -> int:
    return int(os.environ.get("SMRM_SEED", "0"))


class SolverFailure(Exception):
    """Carries the exit code for a solve that finished without converging."""


def _write_rows(path: Path | None, header, rows) -> None:
    if path is None:
        out = io.StringIO()
        csv.writer(out).writerows([header, *rows])
        click.echo(out.getvalue(), nl=False)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def density_rows(report: SolveReport, step: float = 1.0):
    sol = report.solution
    for j, state in enumerate(report.states):
        for r in range(sol.shape[0]):
            yield [state, repr(float(r * step)), repr(float(sol[r, j]))]


def report_row(method: str, report: SolveReport):
    return [method, report.iterations, repr(report.residual), f"{report.wall_time:.6f}",
            report.termination.value]


REPORT_HEADER = ["method", "iterations", "residual", "wall_time", "termination"]


def run_method(system, method: str, pad: int | None, cfg, quad: str, dvc_terms: int) -> SolveReport:
    k = system.length
    if method == "ge":
        return direct.solve_ge(system)
    if method == "lu":
        return direct.solve_lu_approx(system, k - 1 if pad is None else pad)
    if method == "power":
        return iterative.solve_power_exact(system, cfg)
    if method == "power-approx":
        return iterative.solve_power_approx(system, cfg, k - 1 if pad is None else pad)
    if method == "jacobi":
        return iterative.solve_jacobi(system, cfg)
    if method == "gauss-seidel":
        return iterative.solve_gauss_seidel(system, cfg)
    if method == "cont-power":
        return continuous.solve_power_continuous(system, cfg, rule=quad)
    if method == "cont-jacobi":
        return continuous.solve_jacobi_continuous(system, cfg, rule=quad, m=dvc_terms)
    raise click.BadParameter(f"unknown method {method}")


@click.group()
def cli() -> None:
    """First-passage reward densities for Markov chains with random rewards."""


@cli.command()
@click.argument("model_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--method", type=click.Choice(LATTICE_METHODS + CONT_METHODS), default="power", show_default=True)
@click.option("--k", "k", type=int, help="Lattice truncation length (values 0..k-1).")
@click.option("--interval", type=float, help="Right end b of the quadrature interval [0, b].")
@click.option("--points", type=int, help="Number of quadrature points N.")
@click.option("--pad", type=int, help="Padding for lu / power-approx (default k-1).")
@click.option("--epsilon", type=float, default=1e-7, show_default=True)
@click.option("--max-iter", type=int, default=2000, show_default=True)
@click.option("--quad", default="trapezoid", show_default=True,
              help="riemann-l, riemann-r, trapezoid or romberg:L.")
@click.option("--dvc-terms", type=int, default=40, show_default=True,
              help="Series terms for the continuous Jacobi deconvolution.")
@click.option("--cdf", is_flag=True, help="Emit cumulative values instead of densities.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              help="Density CSV path; the report goes next to it as <name>.report.csv.")
def solve(model_path, method, k, interval, points, pad, epsilon, max_iter, quad, dvc_terms, cdf, out):
    """Solve MODEL_PATH and write (state, abscissa, value) rows."""
    from .modelfile import load

    model = load(model_path)
    if method in CONT_METHODS:
        if interval is None or points is None:
            raise click.UsageError("continuous methods need --interval and --points")
        continuous.parse_rule(quad)
        system = preprocess(model, grid=QuadratureGrid(interval, points))
        step = system.grid.step
    else:
        if k is None:
            raise click.UsageError("lattice methods need --k")
        system = preprocess(model, k=k)
        step = 1.0
    cfg = iterative.IterationConfig(epsilon=epsilon, max_iterations=max_iter)
    try:
        report = run_method(system, method, pad, cfg, quad, dvc_terms)
    except SingularSliceMatrix as exc:
        click.echo(f"error: {exc}", err=True)
        raise SolverFailure() from exc
    if cdf:
        mode = "continuous" if system.is_continuous else "discrete"
        report.solution = queries.cdf_from_density(report.solution, mode=mode, step=step)
    _write_rows(out, ["state", "abscissa", "value"], density_rows(report, step))
    report_path = out.with_name(out.stem + ".report.csv") if out else None
    if report_path is not None:
        _write_rows(report_path, REPORT_HEADER, [report_row(method, report)])
    else:
        click.echo(",".join(map(str, report_row(method, report))), err=True)
    if not report.ok:
        click.echo(f"solver stopped with {report.termination.value}", err=True)
        raise SolverFailure()


@cli.command("reproduce")
@click.argument("case", type=click.Choice(["toy", "waste", "coronary"]))
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
              show_default=True)
@click.option("--seed", type=int, default=None, help="Sampling seed (default $SMRM_SEED or 0).")
@click.option("--traces", type=int, default=10000, show_default=True)
def reproduce_cmd(case, out_dir, seed, traces):
    """Run one of the embedded reference models and write plot-ready CSVs."""
    seed = default_seed() if seed is None else seed
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = {"toy": _reproduce_toy, "waste": _reproduce_waste, "coronary": _reproduce_coronary}[case](
        out_dir, seed, traces)
    if not ok:
        raise SolverFailure()


def _reproduce_toy(out_dir: Path, seed: int, traces: int) -> bool:
    k = reproduce.TOY_K
    model = reproduce.toy_model()
    system = preprocess(model, k=k)
    ge = direct.solve_ge(system)
    power = iterative.solve_power_exact(system, iterative.IterationConfig(epsilon=1e-16))
    pads = {"lu_pad_k-1": k - 1, "lu_pad_5k": 5 * k, "lu_pad_10k": 10 * k}
    lus = {name: direct.solve_lu_approx(system, pad) for name, pad in pads.items()}
    names = ["ge", "power", *lus]
    sols = [ge.solution, power.solution, *(r.solution for r in lus.values())]
    rows = []
    for j, state in enumerate(system.s_question):
        for r in range(k):
            rows.append([state, r, *(repr(float(s[r, j])) for s in sols)])
    _write_rows(out_dir / "toy_pmf.csv", ["state", "reward", *names], rows)
    errs = [[n, repr(float(np.max(np.abs(s - ge.solution))))] for n, s in zip(names, sols)]
    _write_rows(out_dir / "toy_error_vs_ge.csv", ["method", "max_abs_error"], errs)

    rng = np.random.default_rng(seed)
    sample = benchgen.sample_traces(model, "s0", traces, k, rng)
    emp = benchgen.empirical_density(sample, k=k)
    pw = power.density("s0")
    _write_rows(out_dir / "toy_sampling.csv", ["reward", "empirical", "power"],
                [[r, repr(float(emp[r])), repr(float(pw[r]))] for r in range(k)])
    gap = float(np.max(np.abs(emp - pw)))
    click.echo(f"toy: power vs ge {errs[1][1]}, sampling gap {gap:.4f}")
    return power.ok


def _reproduce_waste(out_dir: Path, seed: int, traces: int) -> bool:
    k = reproduce.WASTE_K
    system = preprocess(reproduce.waste_model(), k=k)
    ge = direct.solve_ge(system)
    power = iterative.solve_power_exact(system, iterative.IterationConfig(epsilon=1e-16))
    rows = [[r, *(repr(float(ge.solution[r, j])) for j in range(system.size))] for r in range(k)]
    _write_rows(out_dir / "waste_pmf.csv", ["reward", *system.s_question], rows)
    gap = float(np.max(np.abs(ge.solution - power.solution)))
    _write_rows(out_dir / "waste_check.csv", ["quantity", "value"],
                [["ge_vs_power_max_abs", repr(gap)],
                 *[[f"mass_{s}", repr(float(ge.solution[:, j].sum()))] for j, s in enumerate(system.s_question)]])
    click.echo(f"waste: ge vs power {gap:.3g}")
    return power.ok


def coronary_cdfs(points: int = reproduce.CORONARY_POINTS, bound: float = reproduce.CORONARY_BOUND,
                  cfg: iterative.IterationConfig | None = None):
    """Partial cdfs from the start state for each absorbing target, with their reports."""
    cfg = cfg or iterative.IterationConfig(epsilon=1e-10)
    grid = QuadratureGrid(bound, points)
    out = {}
    for target in reproduce.CORONARY_TARGETS:
        system = preprocess(reproduce.coronary_model(target), grid=grid)
        report = continuous.solve_power_continuous(system, cfg, rule="trapezoid")
        cdf = queries.cdf_from_density(report.density(reproduce.CORONARY_START), "continuous", grid.step)
        out[target] = (cdf, report)
    return grid, out


def _reproduce_coronary(out_dir: Path, seed: int, traces: int) -> bool:
    grid, res = coronary_cdfs()
    x = grid.points
    for target, (cdf, _) in res.items():
        _write_rows(out_dir / f"coronary_cdf_{target}.csv", ["time", "cdf"],
                    [[repr(float(a)), repr(float(v))] for a, v in zip(x, cdf)])
    stacked = sum(c for c, _ in res.values())
    _write_rows(out_dir / "coronary_stacked.csv", ["time", *res, "total"],
                [[repr(float(x[i])), *(repr(float(c[i])) for c, _ in res.values()), repr(float(stacked[i]))]
                 for i in range(len(x))])
    click.echo(f"coronary: stacked cdf at t={grid.b:g} is {stacked[-1]:.6f}")
    return all(r.ok for _, r in res.values())


PMF_FAMILIES = ("binomial", "gumbel", "geometric", "weibull")


def benchgen_family(name: str, p: float, k: int):
    from .rewards import Binomial, DiscreteGumbel, DiscreteWeibull, Geometric

    if name == "binomial":
        return Binomial(k, p)
    if name == "gumbel":
        return DiscreteGumbel(p, 5.0)
    if name == "geometric":
        return Geometric(p)
    return DiscreteWeibull(p, 0.5)


def bench_sample(args) -> list:
    """Generate and solve one random model; failures become rows, not exceptions."""
    index, seed_seq, mc, pmf, lo, hi, states, k, methods, epsilon = args
    rng = np.random.default_rng(seed_seq)
    rows = []
    try:
        model = benchgen.random_smrm(mc, states, lambda p: benchgen_family(pmf, p, k), (lo, hi), rng)
        system = preprocess(model, k=k)
    except SmrmError as exc:
        return [[index, m, "", "", "", f"Error: {exc}"] for m in methods]
    cfg = iterative.IterationConfig(epsilon=epsilon)
    ref = None
    for method in methods:
        try:
            rep = run_method(system, method, None, cfg, "trapezoid", 40)
        except SmrmError as exc:
            rows.append([index, method, "", "", "", f"Error: {type(exc).__name__}"])
            continue
        if ref is None:
            ref = rep.solution
        err = float(np.max(np.abs(rep.solution - ref)))
        rows.append([index, method, rep.iterations, f"{rep.wall_time:.6f}", repr(err), rep.termination.value])
    return rows


@cli.command()
@click.option("--mc", type=click.Choice(sorted(benchgen.GENERATORS)), default="uniform", show_default=True)
@click.option("--pmf", type=click.Choice(PMF_FAMILIES), default="geometric", show_default=True)
@click.option("--param-range", default="0.3:0.6", show_default=True, help="lo:hi for the free parameter.")
@click.option("--samples", type=int, default=50, show_default=True)
@click.option("--states", type=int, default=30, show_default=True)
@click.option("--k", "k", type=int, default=1501, show_default=True)
@click.option("--methods", default="power,jacobi,gauss-seidel", show_default=True)
@click.option("--epsilon", type=float, default=1e-7, show_default=True)
@click.option("--seed", type=int, default=None, help="Default $SMRM_SEED or 0.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
def bench(mc, pmf, param_range, samples, states, k, methods, epsilon, seed, jobs, out):
    """Solve random models with several methods; one CSV row per sample and method."""
    try:
        lo, hi = (float(v) for v in param_range.split(":"))
    except ValueError as exc:
        raise click.BadParameter("expected lo:hi", param_hint="--param-range") from exc
    methods = [m.strip() for m in methods.split(",") if m.strip()]
    for m in methods:
        if m not in LATTICE_METHODS:
            raise click.BadParameter(f"unknown lattice method {m}", param_hint="--methods")
    seed = default_seed() if seed is None else seed
    children = np.random.SeedSequence(seed).spawn(samples)
    tasks = [(i, children[i], mc, pmf, lo, hi, states, k, methods, epsilon) for i in range(samples)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(bench_sample, tasks))
    else:
        results = [bench_sample(t) for t in tasks]
    rows = [row for rs in results for row in rs]
    _write_rows(out, ["sample", "method", "iterations", "wall_time", "max_abs_diff_vs_first", "termination"], rows)
    for m in methods:
        its = [r[2] for r in rows if r[1] == m and r[2] != ""]
        if its:
            click.echo(f"{m}: median iterations {float(np.median(its)):g} over {len(its)} samples", err=True)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="smrm", standalone_mode=False)
    except SolverFailure:
        return EXIT_SOLVER
    except click.exceptions.Abort:
        return EXIT_INPUT
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except SmrmError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
