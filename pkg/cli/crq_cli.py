#!/usr/bin/env python3

import sys
from pathlib import Path
from typing import Any, Dict, Optional

import typer
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).parent.parent))

from ring_dynamics import __version__
from ring_dynamics.errors import ConfigError, CrqError
from scenario_runner.config import Scenario, configure_logging, get_settings, load_config
from scenario_runner.runner import ScenarioRunner

app = typer.Typer(
    name="crq",
    help="Emitter on a chiral sawtooth ring: exact, memory-kernel, delay-equation and closed-form decay dynamics",
    rich_markup_mode="rich"
)

console = Console()

SCENARIO_HELP = {
    Scenario.BANDS: "Band structure, couplings and crossing rates",
    Scenario.EVOLVE_EXACT: "Exact propagation (mode space or real space)",
    Scenario.EVOLVE_KERNEL: "Volterra solve with the discrete-k memory kernel",
    Scenario.EVOLVE_DDE: "Delay differential equation by the method of steps",
    Scenario.ANALYTIC: "Hypergeometric series, Laplace check and density matrix",
    Scenario.STAIRCASE: "Piecewise staircase approximants and their validity horizon",
    Scenario.SPECTRUM: "Eigenproblem, participation ratios and dark-state search",
    Scenario.CROSSCHECK: "Exact vs kernel vs delay solver deviations",
    Scenario.FIGURES: "Plot-ready datasets for the revival, staircase, transfer and odd-N figures",
}


@app.callback()
def main():
    """Configure logging before any command runs"""
    configure_logging(get_settings())


def _overrides(options: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "params": {
            "N": options["n"],
            "J": options["j"],
            "rho": options["rho"],
            "phi": options["phi"],
            "alpha": options["alpha"],
            "omega_e": options["omega_e"],
        },
        "output_dir": options["out"],
        "t_max": options["t_max"],
        "dt": options["dt"],
        "output_stride": options["stride"],
        "seed": options["seed"],
    }


def _display_report(report: Dict[str, Any]):
    plan = report.get("plan") or {}
    table = Table(title=f"📋 {plan.get('description', 'Run')}")
    table.add_column("Step", style="cyan")
    table.add_column("Status", style="white")
    table.add_column("Time [s]", justify="right")
    table.add_column("Detail", style="dim")
    for step in plan.get("steps", []):
        status = step["status"]
        style = {"completed": "green", "failed": "red", "skipped": "yellow"}.get(status, "white")
        detail = step["error"] or ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                                            for k, v in list(step["output"].items())[:3])
        table.add_row(step["name"], f"[{style}]{status}[/{style}]", f"{step['wall_time']:.2f}", detail)
    console.print(table)

    if report["success"]:
        console.print(Panel(f"✅ Outputs in {report['output_dir']}\nManifest: {report['manifest']}",
                            title="✅ Success", border_style="green"))
    else:
        console.print(Panel(f"❌ {report['message']}", title="❌ Error", border_style="red"))


def _execute(scenario: Optional[Scenario], config_path: Optional[Path], options: Dict[str, Any]):
    overrides = _overrides(options)
    if scenario is not None:
        overrides["scenario"] = scenario.value
    try:
        config = load_config(config_path, overrides)
        runner = ScenarioRunner()
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console
        ) as progress:
            task = progress.add_task(f"Running {config.scenario.value}...", total=None)
            report = runner.run(config)
            progress.remove_task(task)
    except ConfigError as e:
        console.print(Panel(f"❌ Configuration error: {e}", title="❌ Config", border_style="red"))
        raise typer.Exit(code=e.exit_code)
    except CrqError as e:
        console.print(Panel(f"❌ {type(e).__name__}: {e}", title="❌ Error", border_style="red"))
        raise typer.Exit(code=e.exit_code)

    _display_report(report)
    if report["exit_code"]:
        raise typer.Exit(code=report["exit_code"])


def _register(scenario: Scenario):
    name = scenario.value.replace("_", "-")

    @app.command(name=name, help=SCENARIO_HELP[scenario])
    def command(
        config: Optional[Path] = typer.Option(None, "--config", help="JSON config or run manifest"),
        out: Optional[Path] = typer.Option(None, "--out", help="Output directory (default $CRQ_OUT_DIR)"),
        n: Optional[int] = typer.Option(None, "--n", help="Ring size N"),
        j: Optional[float] = typer.Option(None, "--j", help="A-A hopping J"),
        rho: Optional[float] = typer.Option(None, "--rho", help="A-B hopping rho"),
        phi: Optional[str] = typer.Option(None, "--phi", help="Flux per plaquette, e.g. pi/2"),
        alpha: Optional[float] = typer.Option(None, "--alpha", help="Emitter coupling"),
        omega_e: Optional[float] = typer.Option(None, "--omega-e", help="Emitter frequency"),
        t_max: Optional[float] = typer.Option(None, "--t-max", help="Final time"),
        dt: Optional[float] = typer.Option(None, "--dt", help="Time step"),
        stride: Optional[int] = typer.Option(None, "--stride", help="Output every stride-th step"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Seed for randomized checks"),
    ):
        _execute(scenario, config, locals())

    return command


for _scenario in Scenario:
    _register(_scenario)


@app.command()
def run(
    config: Path = typer.Option(..., "--config", help="JSON config or run manifest naming the scenario"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (default $CRQ_OUT_DIR)"),
    n: Optional[int] = typer.Option(None, "--n", help="Ring size N"),
    j: Optional[float] = typer.Option(None, "--j", help="A-A hopping J"),
    rho: Optional[float] = typer.Option(None, "--rho", help="A-B hopping rho"),
    phi: Optional[str] = typer.Option(None, "--phi", help="Flux per plaquette, e.g. pi/2"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Emitter coupling"),
    omega_e: Optional[float] = typer.Option(None, "--omega-e", help="Emitter frequency"),
    t_max: Optional[float] = typer.Option(None, "--t-max", help="Final time"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step"),
    stride: Optional[int] = typer.Option(None, "--stride", help="Output every stride-th step"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for randomized checks"),
):
    """Run the scenario named in a config file"""
    _execute(None, config, locals())


@app.command()
def version():
    """Show the package version"""
    console.print(f"crq {__version__}")


if __name__ == "__main__":
    app()
