#!/usr/bin/env python3
"""CLI for the piano cover toolkit."""

import csv
import functools
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
)
from rich.table import Table

from . import __version__
from .checkpoint import CheckpointManager
from .config import (
    LossConfig,
    PostprocConfig,
    QmaxParams,
    SyntheticConfig,
    ToyNetHyperParams,
    TrainConfig,
    get_settings,
    load_config,
)
from .errors import PianoCoverError
from .evalkit import chroma_from_audio, chroma_from_notes, dtw_align, f1_scores, qmax, qmax_summary_csv
from .evalkit.audio import read_audio
from .loss import build_mask, total_loss
from .midi_io import decode_midi, parse_midi, write_midi
from .postproc import decode_and_clean
from .progress import ProgressUpdate
from .records import ChromaSequence, StyleVector
from .roll import notes_to_tensors, segment_count
from .style import average_style_vectors, extract_style_vector, select_by_density
from .synthetic import gen_synthetic_dataset, load_dataset, save_dataset, split_dataset
from .tensor_io import load_roll, load_tensor, save_roll
from .toynet import EvaluationReport, ToyNetParams, evaluate, infer, train
from .utils import format_time, hash_file

# Results go to stdout; logs, progress and tables to stderr
err_console = Console(stderr=True)

MIDI_SUFFIXES = {".mid", ".midi"}


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_time=False, show_path=False)],
        force=True,
    )


def handle_errors(func):
    """Turn toolkit errors into one `error: <Class>: <message>` line on stderr and exit 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (PianoCoverError, ValueError, KeyError, OSError) as e:
            message = str(e).replace("\n", " ")
            click.echo(f"error: {type(e).__name__}: {message}", err=True)
            sys.exit(1)

    return wrapper


def _echo_json(data: dict) -> None:
    click.echo(json.dumps(data, indent=2))


def create_progress_callback(progress: Progress, task_id):
    """Create a progress callback for generation and training."""

    def callback(update: ProgressUpdate):
        progress.update(
            task_id,
            completed=update.percent,
            description=f"[cyan]{update.stage}[/cyan] {update.message}",
        )

    return callback


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeElapsedColumn(),
        console=err_console,
        transient=True,
    )


def _read_notes(path: str | Path):
    return parse_midi(Path(path).read_bytes())


def _load_chroma(path: str | Path, hop: float) -> ChromaSequence:
    path = Path(path)
    if path.suffix.lower() in MIDI_SUFFIXES:
        return chroma_from_notes(_read_notes(path), hop)
    pcm, sample_rate = read_audio(path)
    return chroma_from_audio(pcm, sample_rate, hop)


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Logging level (default: PIANOCOVER_LOG_LEVEL or WARNING)",
)
def cli(log_level: Optional[str]):
    """Piano cover toolkit: style vectors, piano rolls, toy training and evaluation."""
    _configure_logging(log_level or get_settings().log_level)


@cli.command()
@click.argument("paths", nargs=-1, required=True, metavar="[MIDI_IN] JSON_OUT")
@click.option(
    "--average",
    "average_dir",
    type=click.Path(exists=True, file_okay=False),
    default=None,
    help="Average the style vectors of every MIDI file in this directory",
)
@click.option(
    "--select",
    type=click.Choice(["calm", "intense"]),
    default=None,
    help="With --average: only average the sparsest (calm) or densest (intense) covers",
)
@click.option("--top", type=int, default=3, show_default=True, help="Group size for --select")
@handle_errors
def style(paths: tuple[str, ...], average_dir: Optional[str], select: Optional[str], top: int):
    """Extract a style vector from a MIDI cover."""
    grid = get_settings().grid
    expected = 1 if average_dir else 2
    if len(paths) != expected:
        raise click.UsageError(
            "expected JSON_OUT with --average" if average_dir else "expected MIDI_IN JSON_OUT"
        )

    if average_dir:
        files = sorted(p for p in Path(average_dir).iterdir() if p.suffix.lower() in MIDI_SUFFIXES)
        if not files:
            raise ValueError(f"no MIDI files in {average_dir}")
        covers = [_read_notes(p) for p in files]
        if select:
            calm, intense = select_by_density(covers, top)
            covers = [covers[i] for i in (calm if select == "calm" else intense)]
        vector = average_style_vectors([extract_style_vector(c, grid) for c in covers])
        err_console.print(f"[dim]Averaged {len(covers)} of {len(files)} covers[/dim]")
    else:
        vector = extract_style_vector(_read_notes(paths[0]), grid)

    Path(paths[-1]).write_text(vector.to_json(), encoding="utf-8")
    _echo_json(vector.to_dict())


@cli.command()
@click.argument("midi_in", type=click.Path(exists=True, dir_okay=False))
@click.argument("tensor_out", type=click.Path(file_okay=False))
@click.option("--segment", "-k", type=int, default=0, show_default=True, help="Segment index")
@handle_errors
def roll(midi_in: str, tensor_out: str, segment: int):
    """Write the piano-roll tensors of one segment of a MIDI cover."""
    settings = get_settings()
    grid = settings.grid
    notes = _read_notes(midi_in)
    n_segments = segment_count(notes, grid)
    if not 0 <= segment < max(n_segments, 1):
        raise ValueError(f"segment {segment} out of range (cover has {n_segments} segments)")

    tensors = notes_to_tensors(notes, segment * grid.frames_per_segment, grid, settings.soft_onset_width)
    save_roll(tensor_out, tensors)
    _echo_json(
        {
            "segment": segment,
            "n_segments": n_segments,
            "onsets": int((tensors.onsets == 1.0).sum()),
            "active_cells": int(tensors.frames.sum()),
        }
    )


@cli.command()
@click.argument("pred_h1", type=click.Path(exists=True, file_okay=False))
@click.argument("pred_h2", type=click.Path(exists=True, file_okay=False))
@click.argument("truth", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", type=click.Path(), default=None, help="Loss config JSON")
@handle_errors
def loss(pred_h1: str, pred_h2: str, truth: str, config_path: Optional[str]):
    """Print the hierarchical masked loss of two predictions against a truth roll."""
    config = load_config(config_path, LossConfig)
    truth_tensors = load_roll(truth, truth=True)
    mask = build_mask(truth_tensors, config)
    breakdown = total_loss(load_roll(pred_h1), load_roll(pred_h2), truth_tensors, config, mask)
    _echo_json(breakdown.to_dict())


@cli.command()
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--n", "n_pairs", type=int, default=8, show_default=True, help="Number of pairs")
@click.option("--seed", type=int, default=0, show_default=True, help="Dataset seed")
@click.option("--hyper", "hyper_path", type=click.Path(), default=None, help="Network shape JSON (T, F_in)")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Synthetic generator JSON")
@handle_errors
def gen(out_dir: str, n_pairs: int, seed: int, hyper_path: Optional[str], config_path: Optional[str]):
    """Write a synthetic original/cover dataset."""
    settings = get_settings()
    hyper = load_config(hyper_path, ToyNetHyperParams)
    config = load_config(config_path, SyntheticConfig)

    with _progress() as progress:
        task = progress.add_task("[cyan]Starting...", total=100)
        pairs = gen_synthetic_dataset(
            n_pairs,
            seed,
            n_frames=hyper.T,
            n_features=hyper.F_in,
            grid=settings.grid,
            config=config,
            soft_onset_width=settings.soft_onset_width,
            progress_callback=create_progress_callback(progress, task),
        )
    save_dataset(out_dir, pairs, seed=seed)
    _echo_json({"out_dir": out_dir, "n_pairs": len(pairs), "seed": seed})


@cli.command(name="train")
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("ckpt_out", type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(), default=None, help="Training config JSON")
@click.option("--loss-config", "loss_config_path", type=click.Path(), default=None, help="Loss config JSON")
@click.option("--hyper", "hyper_path", type=click.Path(), default=None, help="Network shape JSON")
@click.option("--workers", type=int, default=1, show_default=True, help="Threads for per-pair gradients")
@handle_errors
def train_cmd(
    data_dir: str,
    ckpt_out: str,
    config_path: Optional[str],
    loss_config_path: Optional[str],
    hyper_path: Optional[str],
    workers: int,
):
    """Train the toy network on a synthetic dataset; writes a checkpoint and trace.csv."""
    config = load_config(config_path, TrainConfig)
    loss_config = load_config(loss_config_path, LossConfig)
    hyper = load_config(hyper_path, ToyNetHyperParams)

    dataset, held_out = split_dataset(load_dataset(data_dir), config.test_fraction, config.seed)
    params = ToyNetParams.init(hyper, seed=config.seed, use_style=config.use_style)
    started = time.monotonic()

    with _progress() as progress:
        task = progress.add_task("[cyan]Starting...", total=100)
        trace = train(
            params,
            dataset,
            config,
            loss_config,
            progress_callback=create_progress_callback(progress, task),
            workers=workers,
        )

    manager = CheckpointManager(ckpt_out)
    manager.save(
        params,
        seed=config.seed,
        settings={"train": config.model_dump(), "loss": loss_config.model_dump()},
    )
    (Path(ckpt_out) / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    report = evaluate(params, dataset, loss_config)
    elapsed = time.monotonic() - started

    table = Table(show_header=False)
    table.add_column("Property", style="cyan")
    table.add_column("Value")
    table.add_row("Pairs", f"{len(dataset)} train, {len(held_out)} held out")
    table.add_row("Epochs", str(config.epochs))
    if trace.L:
        table.add_row("Initial loss", f"{trace.L[0]:.6f}")
        table.add_row("Final loss", f"{trace.L[-1]:.6f}")
    table.add_row("Train F1 (hierarchy 1)", f"{report.f1_h1.average:.4f}")
    table.add_row("Train F1 (hierarchy 2)", f"{report.f1_h2.average:.4f}")
    table.add_row("Elapsed", format_time(elapsed))
    table.add_row("Checkpoint", ckpt_out)
    err_console.print(table)

    _echo_json(
        {
            "checkpoint": ckpt_out,
            "epochs": config.epochs,
            "n_train": len(dataset),
            "n_held_out": len(held_out),
            "initial_loss": trace.L[0] if trace.L else None,
            "final_loss": trace.L[-1] if trace.L else None,
            "train_f1": {"h1": report.f1_h1.to_dict(), "h2": report.f1_h2.to_dict()},
        }
    )


EVAL_COLUMNS = [
    "model",
    "split",
    "n_pairs",
    "loss",
    "L1",
    "L2",
    "f1_onset",
    "f1_frame",
    "f1_velocity",
    "f1",
]


def _eval_row(model: str, split: str, report: EvaluationReport) -> list:
    scores = report.f1_h2
    return [
        model,
        split,
        report.n_pairs,
        f"{report.L:.6f}",
        f"{report.L1:.6f}",
        f"{report.L2:.6f}",
        f"{scores.onset_f1:.4f}",
        f"{scores.frame_f1:.4f}",
        f"{scores.velocity_f1:.4f}",
        f"{scores.average:.4f}",
    ]


@cli.command(name="eval")
@click.argument("paths", nargs=-1, required=True, metavar="CKPT... DATA_DIR")
@click.option(
    "--split",
    type=click.Choice(["all", "train", "test"]),
    default="test",
    show_default=True,
    help="Pairs to score, using each checkpoint's own test_fraction and seed",
)
@click.option(
    "--loss-config",
    "loss_config_path",
    type=click.Path(),
    default=None,
    help="Loss config JSON (default: the one stored in each checkpoint)",
)
@handle_errors
def eval_cmd(paths: tuple[str, ...], split: str, loss_config_path: Optional[str]):
    """Score checkpoints on a dataset: mean loss and mean hierarchy-2 F1, one CSV row each."""
    if len(paths) < 2:
        raise click.UsageError("expected at least one CKPT and a DATA_DIR")
    *ckpts, data_dir = paths
    pairs = load_dataset(data_dir)

    table = Table(title=f"Evaluation ({split})")
    for column in EVAL_COLUMNS:
        table.add_column(column, style="cyan" if column == "model" else None)

    rows = []
    for ckpt in ckpts:
        manager = CheckpointManager(ckpt)
        params = manager.load()
        stored = manager.load_manifest().settings
        train_config = TrainConfig.model_validate(stored.get("train", {}))
        if loss_config_path:
            loss_config = load_config(loss_config_path, LossConfig)
        else:
            loss_config = LossConfig.model_validate(stored.get("loss", {}))

        if split == "all":
            subset = pairs
        else:
            train_part, test_part = split_dataset(pairs, train_config.test_fraction, train_config.seed)
            subset = train_part if split == "train" else test_part
        if not subset:
            raise ValueError(f"{ckpt}: no pairs in the {split} split (test_fraction={train_config.test_fraction})")

        model = "style" if params.use_style else "no-style"
        row = _eval_row(f"{Path(ckpt).name}:{model}", split, evaluate(params, subset, loss_config))
        rows.append(row)
        table.add_row(*map(str, row))

    err_console.print(table)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(EVAL_COLUMNS)
    writer.writerows(rows)
    click.echo(buffer.getvalue(), nl=False)


@cli.command(name="infer")
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.argument("features_in", type=click.Path(exists=True, dir_okay=False))
@click.argument("style_json", type=click.Path(exists=True, dir_okay=False))
@click.argument("midi_out", type=click.Path(dir_okay=False))
@click.option("--postproc", "postproc_path", type=click.Path(), default=None, help="Post-processing JSON")
@click.option(
    "--tensor-out",
    type=click.Path(file_okay=False),
    default=None,
    help="Also write the hierarchy-2 prediction roll to this directory",
)
@handle_errors
def infer_cmd(
    ckpt: str,
    features_in: str,
    style_json: str,
    midi_out: str,
    postproc_path: Optional[str],
    tensor_out: Optional[str],
):
    """Run inference and write a cleaned MIDI cover."""
    config = load_config(postproc_path, PostprocConfig)
    params = CheckpointManager(ckpt).load()
    features = load_tensor(features_in)
    style_vector = StyleVector.from_json(Path(style_json).read_text(encoding="utf-8"))

    pred = infer(params, features, style_vector)
    notes = decode_and_clean(pred, config, get_settings().grid)
    Path(midi_out).write_bytes(write_midi(notes))
    if tensor_out:
        save_roll(tensor_out, pred)
    _echo_json({"midi_out": midi_out, "n_notes": len(notes)})


@cli.command()
@click.argument("pred_tensor", type=click.Path(exists=True, file_okay=False))
@click.argument("truth_tensor", type=click.Path(exists=True, file_okay=False))
@handle_errors
def f1(pred_tensor: str, truth_tensor: str):
    """Print cell-level onset/frame/velocity F1."""
    scores = f1_scores(load_roll(pred_tensor), load_roll(truth_tensor, truth=True))
    _echo_json(scores.to_dict())


@cli.command(name="qmax")
@click.argument("paths", nargs=-1, metavar="[A B]")
@click.option("--params", "params_path", type=click.Path(), default=None, help="Q_max parameters JSON")
@click.option(
    "--batch",
    "batch_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="CSV with columns a,b (paths relative to the CSV); prints a summary CSV",
)
@click.option("--hop", type=float, default=0.05, show_default=True, help="Chroma hop in seconds")
@click.option("--workers", type=int, default=1, show_default=True, help="Pairs evaluated in parallel")
@handle_errors
def qmax_cmd(paths: tuple[str, ...], params_path: Optional[str], batch_path: Optional[str], hop: float, workers: int):
    """Q_max similarity of a cover (B) against an original (A); WAV or MIDI inputs."""
    params = load_config(params_path, QmaxParams)

    if batch_path is None:
        if len(paths) != 2:
            raise click.UsageError("expected A B, or --batch pairs.csv")
        result = qmax(_load_chroma(paths[0], hop), _load_chroma(paths[1], hop), params)
        _echo_json(result.to_dict())
        return

    if paths:
        raise click.UsageError("A B and --batch are mutually exclusive")
    base = Path(batch_path).parent
    with open(batch_path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = {"a", "b"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{batch_path}: missing column(s) {', '.join(sorted(missing))}; expected a,b")
        pairs = [(row["a"], row["b"]) for row in reader]

    def score_pair(pair: tuple[str, str]):
        a, b = pair
        return a, b, qmax(_load_chroma(base / a, hop), _load_chroma(base / b, hop), params)

    # pool.map keeps input order
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        rows = list(pool.map(score_pair, pairs))
    click.echo(qmax_summary_csv(rows), nl=False)


@cli.command()
@click.argument("a", type=click.Path(exists=True, dir_okay=False))
@click.argument("b", type=click.Path(exists=True, dir_okay=False))
@click.argument("path_out", type=click.Path(dir_okay=False))
@click.option("--hop", type=float, default=0.05, show_default=True, help="Chroma hop in seconds")
@handle_errors
def align(a: str, b: str, path_out: str, hop: float):
    """DTW-align two recordings (WAV or MIDI) and write the warping path as CSV."""
    result = dtw_align(_load_chroma(a, hop), _load_chroma(b, hop))
    with open(path_out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["i", "j"])
        writer.writerows(result.path)
    _echo_json({"cost": result.cost, "path_length": len(result.path), "path_out": path_out})


@cli.command()
@click.argument("midi_in", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def info(midi_in: str):
    """Show parse statistics of a MIDI file."""
    parsed = decode_midi(Path(midi_in).read_bytes())
    table = Table(show_header=False)
    table.add_column("Property", style="cyan")
    table.add_column("Value")
    table.add_row("Format", str(parsed.midi_format))
    table.add_row("Tracks", str(parsed.n_tracks))
    table.add_row("Ticks per beat", str(parsed.ticks_per_beat))
    table.add_row("Notes", str(len(parsed.notes)))
    table.add_row("Dropped (outside piano range)", str(parsed.dropped_out_of_range))
    table.add_row("SHA256", hash_file(midi_in)[:16])
    err_console.print(table)
    _echo_json(
        {
            "notes": len(parsed.notes),
            "dropped_out_of_range": parsed.dropped_out_of_range,
            "format": parsed.midi_format,
            "tracks": parsed.n_tracks,
        }
    )


def main():
    cli()


if __name__ == "__main__":
    main()
