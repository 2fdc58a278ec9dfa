"""Command-line entry point.

Subcommands mirror the workflow: gen-data -> train -> eval for the
classifier, run-exp for the three studies, replay for log verification,
serve for a live console session. Exit codes: 0 success, 1 validation
error (bad config/arguments/inputs), 2 runtime failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from ..classifier import evaluate, load_checkpoint, save_checkpoint, train
from ..errors import MmgTeleopError, ValidationError
from ..sim import load_scenario, navigation_scenario
from ..synth import generate_dataset, load_dataset, save_dataset
from .config import AppConfig, load_config
from .report import (
    navigation_report,
    recognition_report,
    transfer_report,
    write_reports,
)
from .session import replay_log, session_metrics

_CONFIG_HELP = "YAML config file; sections mirror the defaults in config.py"


class _Ctx:
    def __init__(self, config: AppConfig, out: Path):
        self.config = config
        self.out = out


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help=_CONFIG_HELP)
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", type=click.Path(), default="out", help="output directory")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, seed: int | None, out: str):
    """Wearable-teleoperation simulation harness."""
    try:
        cfg = load_config(config_path, seed=seed)
    except MmgTeleopError as exc:
        raise click.exceptions.Exit(_fail(1, f"config error: {exc}"))
    ctx.obj = _Ctx(cfg, Path(out))


def _fail(code: int, message: str) -> int:
    click.echo(message, err=True)
    return code


def _out_dir(ctx: _Ctx) -> Path:
    ctx.out.mkdir(parents=True, exist_ok=True)
    return ctx.out


@cli.command("gen-data")
@click.pass_obj
def gen_data(ctx: _Ctx):
    """Generate the labeled synthetic dataset (dataset.npz)."""
    ds = generate_dataset(ctx.config.dataset)
    path = _out_dir(ctx) / "dataset.npz"
    save_dataset(path, ds)
    click.echo(
        f"wrote {path} ({len(ds.labels)} windows, "
        f"{len(ds.train_idx)} train / {len(ds.test_idx)} test)"
    )


@cli.command("train")
@click.option(
    "--data", type=click.Path(exists=True), default=None, help="dataset.npz (default: generate)"
)
@click.pass_obj
def train_cmd(ctx: _Ctx, data: str | None):
    """Train the gesture classifier and write checkpoint.json.gz."""
    ds = load_dataset(data) if data else generate_dataset(ctx.config.dataset)
    result = train(
        ds.windows[ds.train_idx],
        ds.labels[ds.train_idx],
        ds.label_order,
        ctx.config.model,
        ctx.config.train,
        log=lambda msg: click.echo(msg),
    )
    path = _out_dir(ctx) / "checkpoint.json.gz"
    save_checkpoint(
        path, result.config, result.params, result.norm_stats, result.label_order
    )
    click.echo(f"wrote {path} ({result.param_count} parameters)")


@cli.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option(
    "--data", type=click.Path(exists=True), default=None, help="dataset.npz (default: generate)"
)
@click.pass_obj
def eval_cmd(ctx: _Ctx, checkpoint: str, data: str | None):
    """Evaluate a checkpoint on the held-out split."""
    ckpt = load_checkpoint(checkpoint)
    ds = load_dataset(data) if data else generate_dataset(ctx.config.dataset)
    rep = evaluate(ckpt, ds.windows[ds.test_idx], ds.labels[ds.test_idx])
    click.echo(f"held-out accuracy: {rep.accuracy:.4f} over {rep.n} windows")
    click.echo(f"macro F1: {rep.macro_f1:.4f}")
    click.echo(f"intra-category error fraction: {rep.intra_category_error_fraction:.4f}")
    for lab, f1 in zip(ds.label_order, rep.per_class_f1):
        click.echo(f"  {lab:<10s} f1 {f1:.4f}")


@cli.command("replay")
@click.argument("log", type=click.Path(exists=True))
def replay_cmd(log: str):
    """Re-run a session log and verify the replay matches record-for-record."""
    original, replayed = replay_log(log)
    n = min(len(original), len(replayed))
    mismatch = next(
        (i for i in range(n) if original[i] != replayed[i]),
        None if len(original) == len(replayed) else n,
    )
    metrics = session_metrics(original)
    click.echo(f"records: {len(original)} original, {len(replayed)} replayed")
    click.echo(f"duration: {metrics['duration_s']:.2f} s, steps: {metrics['steps']}")
    if mismatch is None:
        click.echo("replay matches the log record-for-record")
    else:
        click.echo(f"replay DIVERGES at record {mismatch}", err=True)
        raise click.exceptions.Exit(2)


@cli.command("run-exp")
@click.argument(
    "experiment", type=click.Choice(["recognition", "navigation", "transfer"])
)
@click.option(
    "--checkpoint",
    type=click.Path(exists=True),
    default=None,
    help="trained model (recognition only)",
)
@click.option("--trials", type=int, default=None, help="override the configured trial count")
@click.pass_obj
def run_exp(ctx: _Ctx, experiment: str, checkpoint: str | None, trials: int | None):
    """Run one of the three studies and write its report files."""
    # imported here so the sim-only commands stay fast to start
    from .experiments import (
        run_navigation,
        run_recognition,
        run_transfer_ablation,
    )

    cfg = ctx.config
    if experiment == "recognition":
        if checkpoint is None:
            raise ValidationError("recognition needs --checkpoint (train first)")
        ckpt = load_checkpoint(checkpoint)
        if trials is not None:
            from dataclasses import replace

            cfg = AppConfig(
                seed=cfg.seed,
                **{
                    **{k: getattr(cfg, k) for k in cfg.section_names()},
                    "recognition": replace(cfg.recognition, trials_per_class=trials),
                },
            )
        result = run_recognition(cfg, ckpt)
        files = recognition_report(result)
        click.echo(f"accuracy {result.accuracy:.4f}, mean latency {result.mean_latency_ms:.1f} ms")
    elif experiment == "navigation":
        result = run_navigation(cfg, trials=trials)
        files = navigation_report(result)
        click.echo(
            f"success {result.success_rate:.4f}, "
            f"mean completion {result.mean_completion_s:.2f} s, "
            f"mean deviation {result.mean_deviation_m:.4f} m"
        )
    else:
        with_fb, without = run_transfer_ablation(cfg, trials_per_combo=trials)
        files = transfer_report(with_fb, without)
        click.echo(
            f"grip {with_fb.grip_rate:.4f} / release {with_fb.release_rate:.4f} / "
            f"full {with_fb.full_rate:.4f} (ablation grip {without.grip_rate:.4f})"
        )
    for path in write_reports(files, _out_dir(ctx)):
        click.echo(f"wrote {path}")


@cli.command("serve")
@click.option("--port", type=int, default=None, help="listen port (default from config)")
@click.option("--host", type=str, default=None, help="bind address (default from config)")
@click.option(
    "--scenario",
    "scenario_path",
    type=click.Path(exists=True),
    default=None,
    help="scenario YAML (default: the navigation course)",
)
@click.pass_obj
def serve_cmd(ctx: _Ctx, port: int | None, host: str | None, scenario_path: str | None):
    """Serve a live WebSocket session for the console."""
    from .serve import serve

    scen = (
        load_scenario(scenario_path)
        if scenario_path
        else navigation_scenario(seed=ctx.config.seed)
    )
    log_dir = _out_dir(ctx)
    click.echo(
        f"serving ws://{host or ctx.config.serve.host}:{port or ctx.config.serve.port}/ws "
        f"(scenario {scen.name}, logs in {log_dir})"
    )
    serve(scen, ctx.config, log_dir=log_dir, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except ValidationError as exc:
        return _fail(1, f"validation error: {exc}")
    except MmgTeleopError as exc:
        return _fail(2, f"runtime failure: {exc}")
    except OSError as exc:
        return _fail(2, f"runtime failure: {exc}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
