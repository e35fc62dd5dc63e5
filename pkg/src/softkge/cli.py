"""Command-line entry point: train, eval, grid, recommend, synth.

Every run is declarative: options come from built-in defaults, then an
optional key=value config file, then command-line flags, and the resolved
result is snapshotted to the output directory so any run can be replayed
exactly. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from .datasets import load_dataset, write_splits, write_vocab
from .errors import DataError, NumericalError
from .evaluation import evaluate
from .losses import KINDS, LossConfig
from .model import init_embeddings, load_checkpoint, save_checkpoint
from .recommend import batch_report
from .synthetic import generate_synthetic
from .training import GridSpec, GRID_HEADER, TrainConfig, grid_report_rows, grid_search, train

SNAPSHOT_FILE = "resolved_config.txt"


class CliError(Exception):
    """Bad invocation (missing/unknown/invalid option); maps to exit 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for data
    # errors here, so route through exit code 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _comma_list(parse):
    def inner(text: str):
        items = [piece.strip() for piece in text.split(",") if piece.strip()]
        if not items:
            raise ValueError("expected a comma-separated list")
        return tuple(parse(piece) for piece in items)

    return inner


_comma_ints = _comma_list(int)
_comma_floats = _comma_list(float)
_comma_strs = _comma_list(str)


@dataclass(frozen=True)
class Key:
    parse: object
    default: object = None
    required: bool = False
    help: str = ""


DATA_KEYS = {
    "data": Key(str, help="directory containing train.tsv/valid.tsv/test.tsv"),
    "train": Key(str, help="train TSV path (overrides --data)"),
    "valid": Key(str, help="valid TSV path (overrides --data)"),
    "test": Key(str, help="test TSV path (overrides --data)"),
}

TRAIN_KEYS = {
    **DATA_KEYS,
    "out": Key(str, required=True, help="output directory"),
    "loss": Key(str, "soft_margin", help=f"objective, one of {'/'.join(KINDS)}"),
    "dim": Key(int, 50),
    "norm": Key(str, "l2", help="scoring norm, l1 or l2"),
    "learning-rate": Key(float, 0.1),
    "batch-size": Key(int, 512),
    "max-epochs": Key(int, 1000),
    "patience": Key(int, 10, help="evaluations without improvement before stopping; 0 disables"),
    "eval-every": Key(int, 10),
    "normalize-entities": Key(_parse_bool, True),
    "seed": Key(int, 0),
    "optimizer": Key(str, "adagrad", help="adagrad or sgd"),
    "epsilon": Key(float, 1e-8),
    "xi-learning-rate": Key(float, help="slack learning rate; defaults to learning-rate"),
    "negatives-per-positive": Key(int, 1),
    "filter-known": Key(_parse_bool, True),
    "false-negative-rate": Key(float, 0.0),
    "gamma": Key(float, 1.0),
    "gamma1": Key(float, 0.5),
    "gamma2": Key(float, 1.5),
    "lambda0": Key(float, 1.0),
    "lambda1": Key(float, 1.0),
    "lambda2": Key(float, 1.0),
    "rs-lambda": Key(float, 1.0),
}

EVAL_KEYS = {
    **DATA_KEYS,
    "out": Key(str, required=True),
    "checkpoint": Key(str, required=True),
    "split": Key(str, "test"),
    "ks": Key(_comma_ints, (1, 3, 10), help="Hits@k cutoffs"),
}

GRID_KEYS = {
    **TRAIN_KEYS,
    "grid-dims": Key(_comma_ints, help="dims to search; defaults to the built-in grid"),
    "grid-gammas": Key(_comma_floats),
    "grid-gamma1s": Key(_comma_floats),
    "grid-gamma2s": Key(_comma_floats),
    "grid-lambda0s": Key(_comma_floats),
}

RECOMMEND_KEYS = {
    **DATA_KEYS,
    "out": Key(str, required=True),
    "checkpoint": Key(str, required=True),
    "sources": Key(_comma_strs, required=True, help="source entity labels"),
    "relation": Key(str, required=True),
    "k": Key(int, 20),
    "exclude-known": Key(_parse_bool, True, help="drop known links from top_k queries"),
}

SYNTH_KEYS = {
    "out": Key(str, required=True),
    "entities": Key(int, 200),
    "relations": Key(int, 5),
    "dim": Key(int, 16),
    "triples-per-relation": Key(int, 400),
    "noise": Key(float, 0.0),
    "seed": Key(int, 0),
}


def load_config_file(path: str) -> dict:
    """Plain key=value lines; blank lines and # comments are skipped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def resolve(schema: dict, args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and flags; reject unknown file keys."""
    values = {key: spec.default for key, spec in schema.items()}
    if args.config:
        try:
            raw = load_config_file(args.config)
        except OSError as exc:
            raise CliError(f"cannot read config file: {exc}") from None
        for key, text in raw.items():
            if key not in schema:
                raise CliError(f"unknown config key {key!r} in {args.config}")
            try:
                values[key] = schema[key].parse(text)
            except ValueError as exc:
                raise CliError(f"bad value for {key!r} in {args.config}: {exc}") from None
    for key in schema:
        flag_value = getattr(args, key.replace("-", "_"))
        if flag_value is not None:
            values[key] = flag_value
    for key, spec in schema.items():
        if spec.required and values[key] is None:
            raise CliError(f"missing required option --{key}")
    return values


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def write_snapshot(out_dir: str, command: str, schema: dict, values: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    lines = [f"command={command}"]
    lines += [f"{key}={_format_value(values[key])}" for key in schema]
    with open(os.path.join(out_dir, SNAPSHOT_FILE), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _data_paths(values: dict):
    data = values.get("data")
    paths = []
    for name in ("train", "valid", "test"):
        explicit = values.get(name)
        if explicit:
            paths.append(explicit)
        elif data:
            paths.append(os.path.join(data, f"{name}.tsv"))
        else:
            raise CliError(f"no {name} split: give --data or --{name}")
    return paths


def _load_data(values: dict):
    train_path, valid_path, test_path = _data_paths(values)
    vocab, dataset = load_dataset(train_path, valid_path, test_path)
    if dataset.stats.warning_count:
        print(
            f"warning: {dataset.stats.unseen_entities} entities and "
            f"{dataset.stats.unseen_relations} relations appear only outside train",
            file=sys.stderr,
        )
    return vocab, dataset


def _loss_config(values: dict) -> LossConfig:
    return LossConfig(
        kind=values["loss"],
        gamma=values["gamma"],
        gamma1=values["gamma1"],
        gamma2=values["gamma2"],
        lambda0=values["lambda0"],
        lambda1=values["lambda1"],
        lambda2=values["lambda2"],
        rs_lambda=values["rs-lambda"],
    )


def _train_config(values: dict) -> TrainConfig:
    return TrainConfig(
        dim=values["dim"],
        loss=_loss_config(values),
        norm=values["norm"],
        learning_rate=values["learning-rate"],
        batch_size=values["batch-size"],
        max_epochs=values["max-epochs"],
        patience=values["patience"],
        eval_every=values["eval-every"],
        normalize_entities=values["normalize-entities"],
        seed=values["seed"],
        optimizer=values["optimizer"],
        epsilon=values["epsilon"],
        xi_learning_rate=values["xi-learning-rate"],
        negatives_per_positive=values["negatives-per-positive"],
        filter_known=values["filter-known"],
        false_negative_rate=values["false-negative-rate"],
    )


def cmd_train(args) -> int:
    values = resolve(TRAIN_KEYS, args)
    vocab, dataset = _load_data(values)
    cfg = _train_config(values)
    model = init_embeddings(vocab, cfg.dim, cfg.seed, cfg.norm)
    result = train(model, dataset, cfg)
    out = values["out"]
    write_snapshot(out, "train", TRAIN_KEYS, values)
    save_checkpoint(result.model, os.path.join(out, "checkpoint"), seed=cfg.seed)
    result.log.write(os.path.join(out, "train_log.tsv"))
    if result.best_hit10 is not None:
        print(
            f"trained {result.epochs_run} epochs; best val hit@10 "
            f"{result.best_hit10:.4f} (mr {result.best_mr:.2f}) at epoch {result.best_epoch}"
        )
    else:
        print(f"trained {result.epochs_run} epochs (no validation split)")
    print(f"checkpoint written to {os.path.join(out, 'checkpoint')}")
    return 0


def cmd_eval(args) -> int:
    values = resolve(EVAL_KEYS, args)
    vocab, dataset = _load_data(values)
    model = load_checkpoint(values["checkpoint"], vocab)
    report = evaluate(model, dataset, ks=values["ks"], split=values["split"])
    out = values["out"]
    write_snapshot(out, "eval", EVAL_KEYS, values)
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    report.write_ranks(os.path.join(out, "ranks.tsv"), vocab)
    print(report.to_text(), end="")
    return 0


def cmd_grid(args) -> int:
    values = resolve(GRID_KEYS, args)
    vocab, dataset = _load_data(values)
    base_cfg = _train_config(values)
    defaults = GridSpec()
    grids = GridSpec(
        dims=values["grid-dims"] or defaults.dims,
        gammas=values["grid-gammas"] or defaults.gammas,
        gamma1s=values["grid-gamma1s"] or defaults.gamma1s,
        gamma2s=values["grid-gamma2s"] or defaults.gamma2s,
        lambda0s=values["grid-lambda0s"] or defaults.lambda0s,
    )
    try:
        results = grid_search(vocab, dataset, base_cfg, grids)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out = values["out"]
    write_snapshot(out, "grid", GRID_KEYS, values)
    with open(os.path.join(out, "grid_report.tsv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join([GRID_HEADER] + grid_report_rows(results)) + "\n")
    best = results[0]
    print(
        f"searched {len(results)} configs; best hit@10 {best.hit10:.4f} "
        f"(mr {best.mr:.2f}) for kind={best.config.loss.kind} dim={best.config.dim} "
        f"gamma1={best.config.loss.gamma1} gamma2={best.config.loss.gamma2} "
        f"lambda0={best.config.loss.lambda0}"
    )
    return 0


def cmd_recommend(args) -> int:
    values = resolve(RECOMMEND_KEYS, args)
    vocab, dataset = _load_data(values)
    model = load_checkpoint(values["checkpoint"], vocab)
    report = batch_report(
        model,
        list(values["sources"]),
        values["relation"],
        values["k"],
        dataset,
        vocab,
    )
    out = values["out"]
    write_snapshot(out, "recommend", RECOMMEND_KEYS, values)
    with open(os.path.join(out, "report.tsv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    with open(os.path.join(out, "recommendations_long.tsv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_long_text(vocab))
    print(report.to_text(), end="")
    return 0


def cmd_synth(args) -> int:
    values = resolve(SYNTH_KEYS, args)
    vocab, dataset, planted = generate_synthetic(
        num_entities=values["entities"],
        num_relations=values["relations"],
        dim=values["dim"],
        triples_per_relation=values["triples-per-relation"],
        noise=values["noise"],
        seed=values["seed"],
    )
    out = values["out"]
    write_snapshot(out, "synth", SYNTH_KEYS, values)
    write_splits(vocab, dataset, out)
    write_vocab(vocab, out)
    save_checkpoint(planted, os.path.join(out, "planted"), seed=values["seed"])
    print(
        f"wrote {len(dataset.train)}/{len(dataset.valid)}/{len(dataset.test)} "
        f"train/valid/test triples over {vocab.n_entities} entities and "
        f"{vocab.n_relations} relations to {out}"
    )
    return 0


def _add_schema_flags(parser: argparse.ArgumentParser, schema: dict) -> None:
    parser.add_argument("--config", default=None, help="key=value config file")
    for key, spec in schema.items():
        parser.add_argument(
            f"--{key}",
            dest=key.replace("-", "_"),
            type=spec.parse,
            default=None,
            help=spec.help or None,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="softkge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, schema, func in (
        ("train", TRAIN_KEYS, cmd_train),
        ("eval", EVAL_KEYS, cmd_eval),
        ("grid", GRID_KEYS, cmd_grid),
        ("recommend", RECOMMEND_KEYS, cmd_recommend),
        ("synth", SYNTH_KEYS, cmd_synth),
    ):
        cmd = sub.add_parser(name)
        _add_schema_flags(cmd, schema)
        cmd.set_defaults(func=func, schema=schema)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
