"""Command-line front end.

Exit codes: 0 on success, 1 when a computation fails, 2 for bad flags or
inputs.  Output files carry no timestamps, so rerunning a command with the
same flags rewrites identical bytes.

A ``--config FILE`` of ``key=value`` lines supplies defaults for any flag;
flags given on the command line win.
"""
from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analysis import (Conjecture, asymptotics_table, check_conjecture, rows_to_csv, to_json,
                       to_text, verify_spend_boundary)
from .errors import BomberError, ConfigurationError, DomainError
from .grid import Grid, Mode
from .io import FORMATS, read_field, write_field
from .model import ModelParams, classify_spend_it_all, inner_boundary, spend_all_boundary, theorem_case
from .regions import asymptotic_allocation, region_of_point
from .sim import Policy, simulate
from .solver import solve

V_TYPE = click.FloatRange(0.0, 1.0, min_open=True)
POS = click.FloatRange(0.0, min_open=True)


def _read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(f"line {lineno}: expected key=value", param_hint="--config")
        key, value = line.split("=", 1)
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


class _Group(click.Group):
    """Maps library errors onto the exit-code contract."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (DomainError, ConfigurationError) as exc:
            raise click.UsageError(str(exc), ctx) from None
        except (BomberError, ArithmeticError, RuntimeError, OSError) as exc:
            raise click.ClickException(str(exc)) from None


@click.group(cls=_Group)
@click.version_option(__version__)
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="File of key=value lines used as flag defaults.")
@click.pass_context
def cli(ctx, config):
    """Optimal ammunition rationing against Poisson-arriving enemies."""
    if config:
        flat = _read_config(config)
        ctx.default_map = {name: flat for name in cli.commands}


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@cli.command("solve")
@click.option("--v", "v", type=V_TYPE, required=True, help="Enemy kill probability, in (0, 1].")
@click.option("--xmax", type=POS, default=12.0, show_default=True)
@click.option("--nx", type=click.IntRange(2), default=1201, show_default=True)
@click.option("--tmax", type=POS, default=5.0, show_default=True)
@click.option("--nt", type=click.IntRange(2), default=2001, show_default=True)
@click.option("--discrete-step", type=POS, default=None, help="Fire only multiples of this unit.")
@click.option("--node-scan", is_flag=True, help="Continuous mode without refinement between nodes.")
@click.option("--threads", type=click.IntRange(1), default=None)
@click.option("--backend", type=click.Choice(["compiled", "python"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None,
              help="Defaults from the file suffix (.json, .csv, else binary).")
def cmd_solve(v, xmax, nx, tmax, nt, discrete_step, node_scan, threads, backend, out, fmt):
    """Solve for P, K and H on a grid and write the field."""
    grid = Grid(xmax, nx, tmax, nt)
    mode = Mode.discrete(discrete_step) if discrete_step else Mode.continuous(refine=not node_scan)
    started = time.perf_counter()
    field = solve(ModelParams(v), grid, mode, threads=threads, backend=backend)
    elapsed = time.perf_counter() - started
    write_field(field, out, fmt)
    click.echo(f"grid {nx}x{nt} on [0,{xmax:g}]x[0,{tmax:g}], mode {mode.label}, "
               f"backend {field.meta['backend']}")
    click.echo(f"runtime {elapsed:.2f}s; max P at t_max = {field.P[:, -1].max():.12g}")
    click.echo(f"wrote {out}")


@cli.command("boundary")
@click.option("--v", "v", type=V_TYPE, required=True)
@click.option("--tmin", type=POS, default=0.1, show_default=True)
@click.option("--tmax", type=POS, default=5.0, show_default=True)
@click.option("--steps", type=click.IntRange(2), default=100, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_boundary(v, tmin, tmax, steps, out):
    """Closed-form spend-it-all edges as CSV: t,f_u,g_u,case."""
    if tmax <= tmin:
        raise click.BadParameter("must exceed --tmin", param_hint="--tmax")
    params = ModelParams(v)
    lines = ["t,f_u,g_u,case"]
    for t in np.linspace(tmin, tmax, steps):
        t = float(t)
        lines.append(f"{t!r},{spend_all_boundary(t, params)!r},{inner_boundary(t, params)!r},"
                     f"{theorem_case(t, params).name}")
    _emit("\n".join(lines) + "\n", out)


@cli.command("classify")
@click.option("--v", "v", type=V_TYPE, required=True)
@click.option("--x", "x", type=POS, required=True)
@click.option("--t", "t", type=POS, required=True)
@click.option("--exact", is_flag=True, help="Use the outer edge inside the case IV band too.")
def cmd_classify(v, x, t, exact):
    """Whether firing everything at an enemy met at (x, t) is optimal."""
    r = classify_spend_it_all(x, t, ModelParams(v), exact_mode=exact)
    click.echo(json.dumps({"x": x, "t": t, "v": v, "verdict": r.verdict.value, "f_u": r.f_value,
                           "g_u": r.g_value, "case": r.theorem_case.name}, sort_keys=True))


@cli.command("check")
@click.option("--field", "field_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--conjecture", type=click.Choice(["A", "B", "C", "all"]), default="all", show_default=True)
@click.option("--tolerance", type=POS, default=None, help="Default 2*dx.")
@click.option("--boundary/--no-boundary", default=True, show_default=True,
              help="Also compare the spend-it-all edge with its estimates.")
@click.option("--tmin", type=click.FloatRange(0.0), default=0.1, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_check(field_path, conjecture, tolerance, boundary, tmin, fmt, out):
    """Monotonicity scans and the spend-it-all edge of a solved field."""
    field = read_field(field_path)
    which = "ABC" if conjecture == "all" else conjecture
    reports = [check_conjecture(field, Conjecture(c), tolerance) for c in which]
    if boundary:
        reports.append(verify_spend_boundary(field, t_min=tmin))
    if fmt == "json":
        _emit(to_json(reports) + "\n", out)
    else:
        _emit("".join(to_text(r) for r in reports), out)


@cli.command("asymptotics")
@click.option("--v", "v", type=V_TYPE, required=True)
@click.option("--rho", type=POS, required=True, help="Ratio |log t| / x held fixed.")
@click.option("--t", "t_values", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
              multiple=True, default=(1e-2, 1e-3, 1e-4), show_default=True)
@click.option("--dx", type=POS, default=0.05, show_default=True)
@click.option("--discrete-step", type=POS, default=None)
@click.option("--threads", type=click.IntRange(1), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_asymptotics(v, rho, t_values, dx, discrete_step, threads, out):
    """Small-time limits along x = |log t| / rho, as CSV."""
    mode = Mode.discrete(discrete_step) if discrete_step else None
    rows = asymptotics_table(ModelParams(v), rho, list(t_values), mode=mode, dx=dx, threads=threads)
    _emit(rows_to_csv(rows), out)


_POLICIES = ("field", "spend-it-all", "fixed-fraction", "two-stage")


@cli.command("simulate")
@click.option("--v", "v", type=V_TYPE, required=True)
@click.option("--x0", type=click.FloatRange(0.0), required=True)
@click.option("--t0", type=POS, required=True)
@click.option("--policy", type=click.Choice(_POLICIES), default="field", show_default=True)
@click.option("--field", "field_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--fraction", type=click.FloatRange(0.0, 1.0, min_open=True), default=0.5, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=200_000, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--threads", type=click.IntRange(1), default=1, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_simulate(v, x0, t0, policy, field_path, fraction, trials, seed, threads, fmt, out):
    """Monte Carlo survival estimate for a policy."""
    if policy == "field":
        if not field_path:
            raise click.BadParameter("the field policy needs --field", param_hint="--field")
        pol = Policy.from_field(read_field(field_path))
    elif policy == "spend-it-all":
        pol = Policy.spend_it_all()
    elif policy == "fixed-fraction":
        pol = Policy.fixed_fraction(fraction)
    else:
        pol = Policy.two_stage()
    rep = simulate(pol, x0, t0, ModelParams(v), trials, seed, threads=threads)
    if fmt == "json":
        _emit(rep.to_json() + "\n", out)
    else:
        from .analysis import format_columns
        _emit(format_columns(["policy", "trials", "survived", "p_hat", "std_err", "seed"],
                             [[rep.policy, rep.trials, rep.survived, rep.p_hat, rep.std_err, rep.seed]]), out)


def figure_rows(t: float, xmin: float, xmax: float, steps: int, max_region: int = 4):
    """Samples of the asymptotic allocation and the region edges between ``xmin`` and ``xmax``.

    Returns ``(samples, edges)``; samples are ``(x, t, j, K_asym)`` and edges
    ``(j, x)`` where regime ``j`` gives way to ``j + 1``.  Edge points are
    also inserted into the samples so plots show the kinks exactly.
    """
    L = -math.log(t)
    edges = [(j, L * j * (j + 1) / 2) for j in range(1, max_region + 1)]
    xs = set(np.linspace(xmin, xmax, steps).tolist())
    xs.update(x for _, x in edges if xmin <= x <= xmax)
    samples = []
    for x in sorted(xs):
        if x <= 0:
            samples.append((0.0, t, 1, 0.0))
            continue
        samples.append((x, t, region_of_point(x, t).j, asymptotic_allocation(x, t)))
    return samples, edges


@cli.command("figure")
@click.option("--t", "t", type=POS, default=1e-4, show_default=True, help="Remaining time, below 1.")
@click.option("--xmin", type=click.FloatRange(0.0), default=0.0, show_default=True)
@click.option("--xmax", type=POS, default=100.0, show_default=True)
@click.option("--steps", type=click.IntRange(2), default=401, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Samples CSV x,t,j,K_asym.")
@click.option("--edges-out", type=click.Path(dir_okay=False), default=None,
              help="Region edges CSV j,x (printed to stderr otherwise).")
def cmd_figure(t, xmin, xmax, steps, out, edges_out):
    """Data for a plot of the small-time allocation against x."""
    if t >= 1.0:
        raise click.BadParameter("must be below 1", param_hint="--t")
    if xmax <= xmin:
        raise click.BadParameter("must exceed --xmin", param_hint="--xmax")
    samples, edges = figure_rows(t, xmin, xmax, steps)
    body = "x,t,j,K_asym\n" + "".join(f"{x!r},{tt!r},{j},{k!r}\n" for x, tt, j, k in samples)
    _emit(body, out)
    edge_text = "j,x\n" + "".join(f"{j},{x!r}\n" for j, x in edges)
    if edges_out:
        Path(edges_out).write_text(edge_text)
    else:
        click.echo(edge_text, nl=False, err=True)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="bomber", standalone_mode=True)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
