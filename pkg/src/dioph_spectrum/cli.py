"""Command-line interface for dioph-spectrum."""

import functools
import logging
from collections.abc import Callable
from fractions import Fraction
from pathlib import Path
from typing import Any, TypeVar

import click
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from dioph_spectrum import __version__
from dioph_spectrum.config import SpectrumConfig, get_default_config, load_config_file
from dioph_spectrum.errors import (
    DiophantineError,
    DomainError,
    InsufficientData,
    IoError,
    QTooLarge,
)
from dioph_spectrum.log_config import LogLevel, configure_logging
from dioph_spectrum.manifest import RunManifest, write_manifest

console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("dioph_spectrum.cli")

F = TypeVar("F", bound=Callable[..., Any])


def _handle_errors(fn: F) -> F:
    """Turn library errors into a rich panel and the error's exit code."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except DiophantineError as e:
            logger.debug("%s", e.to_dict())
            err_console.print(
                Panel(
                    f"[bold red]{type(e).__name__}[/bold red]\n\n{escape(e.message)}",
                    title="Error",
                    border_style="red",
                )
            )
            raise SystemExit(e.exit_code) from e

    return wrapper  # type: ignore[return-value]


def _manifest(
    config: SpectrumConfig, command: str, inputs: dict[str, Any], **derived: str
) -> RunManifest:
    return RunManifest(
        command=command,
        inputs={k: v for k, v in inputs.items() if v is not None},
        tool_version=__version__,
        seed=config.seed,
        derived=dict(derived),
    )


def _precision(text: str | None, config: SpectrumConfig) -> Fraction:
    from dioph_spectrum.reals import parse_exact

    if text is None:
        return config.precision
    value = parse_exact(text)
    if not isinstance(value, Fraction) or value <= 0:
        raise DomainError(f"precision must be a positive rational, got {text!r}")
    return value


def _policy(config: SpectrumConfig):
    from dioph_spectrum.exponents import TailPolicy

    return TailPolicy(
        fraction=float(config.tail_fraction),
        minimum=config.tail_min,
        converge_window=config.converge_window,
        infinity_threshold=config.infinity_threshold,
    )


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="YAML configuration file (flags override it)",
)
@click.option("--threads", type=int, default=None, help="Worker threads (default: DIOPH_THREADS)")
@click.option(
    "--log-level",
    type=click.Choice([lv.value for lv in LogLevel], case_sensitive=False),
    default=None,
    help="Logging level (default: WARNING or DIOPH_LOG_LEVEL)",
)
@click.option(
    "--log-json", is_flag=True, default=False, help="Log JSON lines instead of rich records"
)
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: str | None,
    threads: int | None,
    log_level: str | None,
    log_json: bool,
) -> None:
    """dioph - exponents of simultaneous approximation and their 3-system models.

    Enumerate minimal points of a pair (xi, eta), estimate lambda,
    lambda-hat and lambda-under, build explicit 3-systems for a target
    (lambda, lambda-under), and compute kappa and parametric profiles.
    """
    try:
        config = load_config_file(config_path) if config_path else get_default_config()
    except DiophantineError as e:
        err_console.print(Panel(escape(e.message), title="Configuration error", border_style="red"))
        raise SystemExit(e.exit_code) from e
    config = config.with_overrides(
        threads=threads,
        log_level=LogLevel(log_level.upper()) if log_level else None,
        log_json=True if log_json else None,
    )
    problems = config.validate()
    if problems:
        err_console.print(
            Panel(
                "\n".join(escape(p) for p in problems),
                title="Configuration error",
                border_style="red",
            )
        )
        raise SystemExit(2)
    configure_logging(config.log_level, config.log_json)
    ctx.obj = config


@cli.command()
@click.option("--xi", required=True, help='First coordinate, e.g. "sqrt(2)"')
@click.option("--eta", required=True, help='Second coordinate, e.g. "sqrt(3)"')
@click.option("--max-x0", type=int, required=True, help="Enumeration bound on N(x)")
@click.option(
    "--gauge",
    type=click.Choice(["height", "norm"], case_sensitive=False),
    default="height",
    help="Height/error pair (default: height)",
)
@click.option("--precision", default=None, help="Absolute error of certified logs (rational)")
@click.option(
    "--out", required=True, type=click.Path(dir_okay=False), help="Points file (JSON lines)"
)
@click.pass_obj
@_handle_errors
def minpoints(
    config: SpectrumConfig,
    xi: str,
    eta: str,
    max_x0: int,
    gauge: str,
    precision: str | None,
    out: str,
) -> None:
    """Enumerate the minimal points of (XI, ETA) up to --max-x0.

    Examples:
        dioph minpoints --xi "sqrt(2)" --eta "sqrt(3)" --max-x0 1000 --out p.jsonl
        dioph minpoints --xi "cf:[1;|2]" --eta "cbrt(2)" --max-x0 100000 --gauge norm --out q.jsonl
    """
    from dioph_spectrum.minimal_points import Gauge, PairTarget, enumerate_points, save_points

    pair = PairTarget.parse(xi, eta)
    seq = enumerate_points(
        pair,
        max_x0,
        Gauge(gauge.upper()),
        _precision(precision, config),
        threads=config.threads,
        max_retries=config.max_precision_retries,
    )
    save_points(seq, out)
    write_manifest(
        _manifest(
            config,
            "minpoints",
            {
                "xi": xi,
                "eta": eta,
                "max_x0": max_x0,
                "gauge": gauge.upper(),
                "precision": precision,
            },
        ),
        out,
    )
    head = ", ".join(str(p.x) for p in seq.points[:3])
    console.print(
        Panel(
            f"Pair: [cyan]{escape(str(pair))}[/cyan]  gauge [cyan]{seq.gauge.value}[/cyan]\n"
            f"Minimal points: [green]{len(seq)}[/green]\n"
            f"First points: {head or '-'}\n"
            f"Written to: [yellow]{escape(out)}[/yellow]",
            title="Minimal points",
        )
    )


@cli.command()
@click.option("--points", "points_path", required=True, type=click.Path(dir_okay=False))
@click.option("--eps-grid", type=int, default=None, help="Depth J of the eps grid (default 8)")
@click.option(
    "--report", type=click.Path(dir_okay=False), default=None, help="Also write the report here"
)
@click.option("--beta0", is_flag=True, default=False, help="Add 1/lambda-under (lambda = 1 regime)")
@click.option("--ratios", is_flag=True, default=False, help="Print the raw consecutive ratio table")
@click.pass_obj
@_handle_errors
def exponents(
    config: SpectrumConfig,
    points_path: str,
    eps_grid: int | None,
    report: str | None,
    beta0: bool,
    ratios: bool,
) -> None:
    """Estimate lambda, lambda-hat and lambda-under from a points file."""
    from dioph_spectrum.exponents import (
        beta0_est,
        format_report,
        lambda_est,
        lambda_hat_est,
        lambda_under_est,
        ratio_table,
    )
    from dioph_spectrum.minimal_points import load_points

    depth = eps_grid if eps_grid is not None else config.eps_grid_depth
    if depth < 1:
        raise DomainError(f"--eps-grid must be at least 1, got {depth}")
    policy = _policy(config)
    seq = load_points(points_path)
    estimates = {
        "lambda": lambda_est(seq, policy),
        "lambda_hat": lambda_hat_est(seq, policy),
    }
    under, prof = lambda_under_est(seq, depth, policy)
    estimates["lambda_under"] = under
    if beta0:
        estimates["beta0"] = beta0_est(seq, depth, policy)
    text = format_report(estimates, prof)
    click.echo(text, nl=False)
    if ratios:
        click.echo()
        for row in ratio_table(seq):
            nxt = "-" if row.ratio_next is None else f"{row.ratio_next:.6f}"
            click.echo(
                f"{row.index:>6} {row.log_X:>14.6f} {row.log_Delta:>14.6f} "
                f"{row.ratio_same:>12.6f} {nxt:>12}"
            )
    if report:
        try:
            Path(report).write_text(text)
        except OSError as e:
            raise IoError(f"Cannot write report {report}: {e}") from e
        inputs = {"points": points_path, "eps_grid": depth}
        write_manifest(_manifest(config, "exponents", inputs), report)


@cli.command()
@click.option("--lambda", "lam", required=True, help="lambda: rational, surd(a,b,c,d) or inf")
@click.option("--lambda-under", "lam_under", required=True, help="lambda-under: rational or surd")
@click.option("--peaks", type=int, default=20, help="Number of peaks K (default 20)")
@click.option(
    "--case",
    "case",
    type=click.Choice(["1", "2", "auto"]),
    default="auto",
    help="Force a construction (default: auto)",
)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="System file (JSON)")
@click.pass_obj
@_handle_errors
def construct(
    config: SpectrumConfig, lam: str, lam_under: str, peaks: int, case: str, out: str
) -> None:
    """Build a 3-system realizing (--lambda, --lambda-under).

    Examples:
        dioph construct --lambda 1 --lambda-under 1/2 --peaks 20 --out s.json
        dioph construct --lambda 1 --lambda-under "surd(-1,1,5,2)" --peaks 12 --out golden.json
    """
    from dioph_spectrum import constructions
    from dioph_spectrum.three_system import save_system, validate

    target = constructions.SpectrumTarget.parse(lam, lam_under)
    cells = config.infill_cells
    if case == "1":
        system = constructions.build_case1(constructions.derive_case1(target, peaks), cells)
    elif case == "2":
        system = constructions.build_case2(constructions.derive_case2(target, peaks), cells)
    else:
        system = constructions.construct(target, peaks, cells)
    ok, violations = validate(system)
    if not ok:
        raise DomainError(f"construction failed its own validation: {violations[0]}")
    save_system(system, out)
    write_manifest(
        _manifest(
            config,
            "construct",
            {"lambda": lam, "lambda_under": lam_under, "peaks": peaks, "case": case},
            **system.construction,
        ),
        out,
    )
    table = Table(title=f"Construction for {escape(str(target))}")
    table.add_column("constant")
    table.add_column("value")
    for key, value in system.construction.items():
        table.add_row(key, escape(value))
    table.add_row("breakpoints", str(len(system.breakpoints())))
    console.print(table)
    console.print(f"Written to [yellow]{escape(out)}[/yellow]")


@cli.command()
@click.option("--system", "system_path", required=True, type=click.Path(dir_okay=False))
@click.option("--alpha", default=None, help="Evaluate kappa-alpha at this rational alpha")
@click.option("--component", type=click.IntRange(1, 3), default=3, help="Component P_j (default 3)")
@click.option("--depth", type=int, default=None, help="alpha grid depth (default 8)")
@click.option("--perturb", "bound", default=None, help="Apply a bounded perturbation first")
@click.pass_obj
@_handle_errors
def kappa(
    config: SpectrumConfig,
    system_path: str,
    alpha: str | None,
    component: int,
    depth: int | None,
    bound: str | None,
) -> None:
    """kappa-alpha or the kappa grid of one component of a system file."""
    from dioph_spectrum.reals import format_exact, parse_exact
    from dioph_spectrum.three_system import kappa_alpha, kappa_grid, load_system, perturb

    system = load_system(system_path)
    f = system.components[component - 1]
    if bound is not None:
        f = perturb(f, parse_exact(bound), config.seed)  # type: ignore[arg-type]
    if alpha is not None:
        value = parse_exact(alpha)
        if isinstance(value, float):
            raise DomainError("alpha must be finite")
        rep = kappa_alpha(f, value)
        click.echo(f"{'peak q':>24} {'intersection r':>24} {'ratio':>24}")
        for q, r, ratio in zip(rep.peaks, rep.intersections, rep.ratios):
            click.echo(f"{format_exact(q):>24} {format_exact(r):>24} {format_exact(ratio):>24}")
        click.echo(f"psi_sup = {format_exact(rep.psi_sup)}")
        click.echo(f"psi_inf = {format_exact(rep.psi_inf)}")
        click.echo(f"kappa_alpha({format_exact(rep.alpha)}) = {format_exact(rep.kappa_alpha)}")
        return
    grid = kappa_grid(f, depth if depth is not None else config.alpha_grid_depth)
    click.echo(f"{'m':>3} {'alpha':>32} {'kappa_alpha':>32}")
    for m, (a, v) in enumerate(zip(grid.alphas, grid.values), start=1):
        click.echo(f"{m:>3} {format_exact(a):>32} {format_exact(v):>32}")
    click.echo(f"psi_sup = {format_exact(grid.deepest.psi_sup)}")
    click.echo(f"psi_inf = {format_exact(grid.deepest.psi_inf)}")
    status = "converged" if grid.converged else "not converged"
    click.echo(f"kappa = {format_exact(grid.value)} (depth {grid.depth}, {status})")


@cli.command()
@click.option("--system", "system_path", required=True, type=click.Path(dir_okay=False))
@click.option("--svg", "svg_path", required=True, type=click.Path(dir_okay=False))
@click.option("--width", type=int, default=800, help="Width in px (default 800)")
@click.option("--height", type=int, default=500, help="Height in px (default 500)")
@click.option("--log-scale", is_flag=True, default=False, help="Log-log axes")
@click.pass_obj
@_handle_errors
def render(
    config: SpectrumConfig,
    system_path: str,
    svg_path: str,
    width: int,
    height: int,
    log_scale: bool,
) -> None:
    """Draw the combined graph of a system file as SVG."""
    from dioph_spectrum.render import render_svg
    from dioph_spectrum.three_system import load_system

    render_svg(load_system(system_path), svg_path, width, height, log_scale)
    write_manifest(
        _manifest(
            config,
            "render",
            {"system": system_path, "width": width, "height": height, "log_scale": log_scale},
        ),
        svg_path,
    )
    console.print(f"Written to [yellow]{escape(svg_path)}[/yellow]")


@cli.command()
@click.option("--xi", required=True)
@click.option("--eta", required=True)
@click.option("--q-min", type=float, default=2.0, help="First grid point (default 2)")
@click.option("--q-max", type=float, required=True, help="Last grid point (at most 30)")
@click.option("--step", type=float, default=0.5, help="Grid step (default 0.5)")
@click.option("--points", "points_path", type=click.Path(dir_okay=False), default=None,
              help="NORM-gauge points file for L*1 and the dictionary checks")
@click.option("--precision", default=None, help="Absolute error of certified logs (rational)")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="CSV file")
@click.pass_obj
@_handle_errors
def parametric(
    config: SpectrumConfig,
    xi: str,
    eta: str,
    q_min: float,
    q_max: float,
    step: float,
    points_path: str | None,
    precision: str | None,
    out: str,
) -> None:
    """Sample L_j and L*_j on a q grid and report the duality bands.

    Example:
        dioph parametric --xi "sqrt(2)" --eta "sqrt(3)" --q-max 20 --step 0.5 --out prof.csv
    """
    from dioph_spectrum.exponents import lambda_est, lambda_under_est
    from dioph_spectrum.minimal_points import PairTarget, load_points
    from dioph_spectrum.parametric import (
        dictionary_rows,
        format_summary,
        profile,
        q_grid,
        write_profile_csv,
    )

    if q_max > config.q_max:
        raise QTooLarge(f"--q-max {q_max:g} exceeds the cap {config.q_max:g}", {"q_max": q_max})
    pair = PairTarget.parse(xi, eta)
    grid = q_grid(q_min, q_max, step)
    points = load_points(points_path) if points_path else None
    prof = profile(
        pair,
        grid,
        points,
        _precision(precision, config),
        q_max=config.q_max,
        threads=config.threads,
        max_retries=config.max_precision_retries,
    )
    write_profile_csv(prof, out)
    write_manifest(
        _manifest(
            config,
            "parametric",
            {
                "xi": xi,
                "eta": eta,
                "q_min": q_min,
                "q_max": q_max,
                "step": step,
                "points": points_path,
            },
        ),
        out,
    )
    rows: list[tuple] = []
    if points is not None:
        policy = _policy(config)
        try:
            lam = lambda_est(points, policy).value
            under = lambda_under_est(points, config.eps_grid_depth, policy)[0].value
            rows = dictionary_rows(prof, lam, under)
        except InsufficientData as e:
            logger.warning("dictionary check skipped: %s", e.message)
    click.echo(format_summary(prof, rows), nl=False)
    console.print(f"{len(prof.samples)} rows written to [yellow]{escape(out)}[/yellow]")


@cli.command()
@click.option("--points", "points_path", required=True, type=click.Path(dir_okay=False))
@click.option("--check-x0-max", type=int, required=True, help="Brute-force scan bound")
@click.pass_obj
@_handle_errors
def verify(config: SpectrumConfig, points_path: str, check_x0_max: int) -> None:
    """Re-check a points file against an independent exhaustive scan."""
    from dioph_spectrum.minimal_points import load_points, verify_minimality

    seq = load_points(points_path)
    if verify_minimality(seq, check_x0_max):
        console.print(
            f"[bold green]{len(seq)} minimal points verified up to {check_x0_max}[/bold green]"
        )
        return
    console.print("[bold red]Minimality check failed[/bold red]")
    raise SystemExit(1)


@cli.command()
@click.pass_obj
def info(config: SpectrumConfig) -> None:
    """Show the commands and the active configuration."""
    settings = "\n".join(
        f"  {name:<22} {getattr(config, name)}"
        for name in (
            "threads",
            "precision",
            "max_precision_retries",
            "eps_grid_depth",
            "alpha_grid_depth",
            "tail_fraction",
            "tail_min",
            "q_max",
            "infill_cells",
            "seed",
        )
    )
    console.print(
        Panel(
            f"[bold blue]dioph-spectrum[/bold blue] v{__version__}\n\n"
            "[bold]Commands:[/bold]\n"
            "  minpoints   Enumerate minimal points of a pair\n"
            "  exponents   Estimate lambda, lambda-hat, lambda-under\n"
            "  verify      Re-check minimality by brute force\n"
            "  construct   Build a 3-system for (lambda, lambda-under)\n"
            "  kappa       kappa-alpha and the kappa grid of a system\n"
            "  render      Combined graph as SVG\n"
            "  parametric  Successive minima profile and duality bands\n\n"
            f"[bold]Configuration:[/bold]\n{escape(settings)}",
            title="About",
        )
    )


if __name__ == "__main__":
    cli()
