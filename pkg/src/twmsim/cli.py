"""Command line entry point.

    twmsim simulate CONFIG [--out DIR] [--preset NAME] [--set key=value ...]
    twmsim sweep CONFIG --param errors.loss_db_per_cm --values 0,0.5,1 --seeds 3
    twmsim spm-scan CONFIG --pump-photons 1e5,1e6,1e7
    twmsim init smpsg DIR

Errors are reported as one JSON object on stderr (module, operation, key,
message) with exit status 2.
"""

import json
import shutil
import sys
from importlib import resources
from pathlib import Path

import click

from .config import load_config, parse_value
from .errors import ConfigError, TwmError
from .harness import SweepSpec, default_workers, parse_values, run_single, run_spm_scan, run_sweep

TEMPLATES = ("smpsg", "bsvg", "qfc")


def _overrides(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}", operation="cli")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v.strip())
    return out


def _fail(exc):
    click.echo(json.dumps(exc.diagnostic(), sort_keys=True), err=True)
    sys.exit(2)


def _load(config, preset, sets):
    return load_config(config, overrides=_overrides(sets), preset=preset)


common = [
    click.option("--out", "out", type=click.Path(file_okay=False), default="twmsim-out", show_default=True,
                 help="Output directory."),
    click.option("--preset", default=None, help="Apply a [presets.NAME] table from the config."),
    click.option("--set", "sets", multiple=True, metavar="KEY=VALUE", help="Override a config value (repeatable)."),
    click.option("--emit-plots", is_flag=True, help="Also write PNG figures (needs matplotlib)."),
]


def with_common(f):
    for opt in reversed(common):
        f = opt(f)
    return f


@click.group()
@click.version_option(package_name="twmsim")
def cli():
    """Pulsed three-wave mixing in imperfect waveguides."""


@cli.command()
@click.argument("config", type=click.Path())
@with_common
def simulate(config, out, preset, sets, emit_plots):
    """Run one scenario and write fom.json, JSA and propagator files."""
    try:
        res = run_single(_load(config, preset, sets), out, emit_plots=emit_plots)
    except TwmError as exc:
        _fail(exc)
    for w in res.record["warnings"]:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"{res.config_hash}  {Path(out) / 'fom.json'}")


@cli.command()
@click.argument("config", type=click.Path())
@click.option("--param", required=True, help="Dotted config path to sweep, e.g. errors.loss_db_per_cm.")
@click.option("--values", "values", required=True, help="Comma list or TOML array.")
@click.option("--seeds", default=1, show_default=True, help="Repetitions (derived seeds) per value.")
@click.option("--aggregate", type=click.Choice(["mean", "min", "max"]), default="mean", show_default=True)
@click.option("--paired-seeds", is_flag=True, help="Reuse the same seeds for every value.")
@click.option("--workers", type=int, default=None, help="Parallel workers (default: $TWMSIM_WORKERS or 1).")
@with_common
def sweep(config, param, values, seeds, aggregate, paired_seeds, workers, out, preset, sets, emit_plots):
    """Sweep one parameter over values and seeds; write sweep.csv."""
    try:
        cfg = _load(config, preset, sets)
        spec = SweepSpec(param, parse_values(values), seeds, aggregate, paired_seeds)
        run_sweep(cfg, spec, out, workers=workers or default_workers(), emit_plots=emit_plots)
    except TwmError as exc:
        _fail(exc)
    click.echo(str(Path(out) / "sweep.csv"))


@cli.command("spm-scan")
@click.argument("config", type=click.Path())
@click.option("--pump-photons", "photons", required=True, help="Comma list or TOML array of pump photon numbers.")
@click.option("--thresholds", default=None, help="Two FOM thresholds, e.g. 0.99,0.9.")
@click.option("--fom-only", is_flag=True, help="Skip the state simulation, report the pump overlap only.")
@with_common
def spm_scan(config, photons, thresholds, fom_only, out, preset, sets, emit_plots):
    """Pump self-phase-modulation onset scan; write spm_scan.csv."""
    try:
        cfg = _load(config, preset, sets)
        th = parse_values(thresholds) if thresholds else None
        run_spm_scan(cfg, parse_values(photons), out, thresholds=th, simulate_states=not fom_only,
                     emit_plots=emit_plots)
    except TwmError as exc:
        _fail(exc)
    click.echo(str(Path(out) / "spm_scan.csv"))


@cli.command()
@click.argument("template", type=click.Choice(TEMPLATES))
@click.argument("directory", type=click.Path(file_okay=False))
def init(template, directory):
    """Copy a scenario template and its dispersion tables into DIRECTORY."""
    dest = Path(directory)
    dest.mkdir(parents=True, exist_ok=True)
    src = resources.files("twmsim") / "templates"
    for name in [f"{template}.toml"] + [f"{template}_{f}.csv" for f in ("signal", "idler", "pump")]:
        with resources.as_file(src / name) as p:
            shutil.copyfile(p, dest / name)
    click.echo(str(dest / f"{template}.toml"))


def main():
    cli()


if __name__ == "__main__":
    main()
