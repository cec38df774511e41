"""Command-line entry point: ``mdiqss {run,sweep,decompose,check-tables,detect}``.

Exit status: 0 ok, 1 configuration error, 2 failed property check.
"""

from __future__ import annotations

import argparse
import itertools
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .adversary import AttackKind, measure_detection_rate
from .coding import NoiseModel
from .ghz import ProductStateSpec, all_labels, decompose_in_ghz_basis, predict_collapse, TableMismatch
from .protocol import ConfigError, SessionConfig, run_session
from .quantum import XY_EIGENSTATES
from .report import RunReport, dumps_record, to_csv
from .streams import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK = 2

_STATE_TOKEN = re.compile(r"^[+-][xyXY]$")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _session_flags(p: argparse.ArgumentParser, listy: bool = False) -> None:
    many = " (comma-separated list)" if listy else ""
    p.add_argument("--config", type=Path, help="TOML file with SessionConfig fields")
    p.add_argument("--seed", type=int, help="master seed (64-bit)")
    p.add_argument("--attack", help="none, intercept-resend or teleport" + many)
    p.add_argument("--analyzer", choices=["linear", "ideal"])
    p.add_argument("--receivers", help="number of receivers" + many)
    p.add_argument("--k1", type=int, help="entangled pairs per session")
    p.add_argument("--k2", type=int, help="decoy photons per session")
    p.add_argument("--noise-p", help="depolarizing probability per photon" + many)
    p.add_argument("--dephasing-q", type=float, help="dephasing probability per photon")
    p.add_argument("--threshold", type=float, help="abort when the check error rate exceeds this")
    p.add_argument("--decode-method", choices=["I", "II"])
    p.add_argument("--message", help="bit string to share (random if omitted)")
    p.add_argument("--repetition", type=int, help="odd repetition factor for message bits")
    p.add_argument("--check-rounds", type=int, help="check exactly this many eligible decoy rounds")
    p.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte-identical output)")


def _output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="write records here instead of stdout")
    p.add_argument("--format", choices=["lines", "csv"], default="lines")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdiqss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one session and emit a run report")
    _session_flags(p)
    _output_flags(p)
    p.add_argument("--transcript", action="store_true", help="also emit the full transcript record")

    p = sub.add_parser("sweep", help="grid over attack / noise / receiver count")
    _session_flags(p, listy=True)
    _output_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("decompose", help="GHZ decomposition of a product state, e.g. +x +x -y")
    p.add_argument("states", nargs="+")
    p.add_argument("--all", action="store_true", help="include zero amplitudes")
    _output_flags(p)

    p = sub.add_parser("check-tables", help="compare lookup-table collapse rules with the projection")
    _output_flags(p)

    p = sub.add_parser("detect", help="fraction of sessions aborted under an attack")
    _session_flags(p)
    _output_flags(p)
    p.add_argument("--trials", type=int, default=100)
    return parser


def load_config_file(path: Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    session = dict(doc.get("session", {k: v for k, v in doc.items() if k != "sweep"}))
    if "sweep" in doc:
        session["__sweep__"] = doc["sweep"]
    return session


def _split(value: str | None) -> list[str] | None:
    return None if value is None else [v.strip() for v in str(value).split(",") if v.strip()]


def _number(kind, text: str, flag: str):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{flag}: cannot parse {text!r}") from None


def config_from_args(args: argparse.Namespace) -> tuple[SessionConfig, dict[str, list]]:
    """Merge config file and flags; flags win. Returns the base config and
    any sweep axes given in the file."""
    data: dict[str, Any] = load_config_file(args.config) if getattr(args, "config", None) else {}
    sweep_axes = data.pop("__sweep__", {})
    noise = dict(data.get("noise") or {})
    overrides = {
        "master_seed": args.seed,
        "analyzer": args.analyzer,
        "k1": args.k1,
        "k2": args.k2,
        "error_threshold": args.threshold,
        "decode_method": args.decode_method,
        "message": args.message,
        "repetition": args.repetition,
        "check_rounds": args.check_rounds,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.attack is not None and "," not in args.attack:
        data["attack"] = args.attack
    if args.receivers is not None and "," not in args.receivers:
        data["n_receivers"] = _number(int, args.receivers, "--receivers")
    if args.noise_p is not None and "," not in args.noise_p:
        noise["depolarizing_p"] = _number(float, args.noise_p, "--noise-p")
    if args.dephasing_q is not None:
        noise["dephasing_q"] = args.dephasing_q
    if noise:
        data["noise"] = noise
    return SessionConfig.from_dict(data), sweep_axes


def _emit(records: list[dict], args: argparse.Namespace) -> None:
    if args.format == "csv":
        text = to_csv(records)
    else:
        text = "".join(dumps_record(r) + "\n" for r in records)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _run_report(cfg: SessionConfig, timing: bool) -> dict[str, Any]:
    t0 = time.perf_counter()
    transcript = run_session(cfg)
    wall = time.perf_counter() - t0 if timing else None
    return RunReport.from_transcript(transcript, wall).to_dict()


def cmd_run(args: argparse.Namespace) -> int:
    cfg, _ = config_from_args(args)
    t0 = time.perf_counter()
    transcript = run_session(cfg)
    wall = time.perf_counter() - t0 if args.timing else None
    records = [RunReport.from_transcript(transcript, wall).to_dict()]
    if args.transcript:
        records.append(transcript.to_dict())
    _emit(records, args)
    return EXIT_OK


def sweep_cells(base: SessionConfig, axes: dict[str, list]) -> list[tuple[int, dict[str, Any], SessionConfig]]:
    """Cartesian product of the axes; cell ``i`` gets a seed derived from
    ``(base.master_seed, i)``."""
    names = list(axes)
    cells = []
    for i, combo in enumerate(itertools.product(*(axes[n] for n in names))):
        point = dict(zip(names, combo))
        noise = NoiseModel(point["noise_p"], base.noise.dephasing_q if base.noise else 0.0)
        cfg = replace(
            base,
            attack=AttackKind.parse(point["attack"]),
            n_receivers=point["receivers"],
            noise=None if noise.is_noiseless else noise,
            master_seed=derive_seed(base.master_seed, "sweep", i),
        )
        cfg.validate()
        cells.append((i, point, cfg))
    return cells


def _cell_record(item: tuple[int, dict[str, Any], SessionConfig, bool]) -> dict[str, Any]:
    i, point, cfg, timing = item
    rec = _run_report(cfg, timing)
    return {"kind": "sweep-cell", "cell": i, "axes": point, **{k: v for k, v in rec.items() if k != "kind"}}


def cmd_sweep(args: argparse.Namespace) -> int:
    base, file_axes = config_from_args(args)
    try:
        axes = {
            "attack": _split(args.attack) or file_axes.get("attack") or [base.attack.value],
            "noise_p": [
                _number(float, v, "--noise-p") for v in (_split(args.noise_p) or file_axes.get("noise_p") or [])
            ] or [base.noise.depolarizing_p if base.noise else 0.0],
            "receivers": [
                _number(int, v, "--receivers") for v in (_split(args.receivers) or file_axes.get("receivers") or [])
            ] or [base.n_receivers],
        }
        axes["attack"] = [AttackKind.parse(a).value for a in axes["attack"]]
        cells = sweep_cells(base, axes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    items = [(i, point, cfg, args.timing) for i, point, cfg in cells]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_cell_record, items))
    else:
        records = [_cell_record(item) for item in items]
    _emit(records, args)
    return EXIT_OK


def _complex_pair(z: complex) -> list[float]:
    return [round(z.real, 12) + 0.0, round(z.imag, 12) + 0.0]


def cmd_decompose(args: argparse.Namespace) -> int:
    try:
        spec = ProductStateSpec.parse(args.states)
        dec = decompose_in_ghz_basis(spec.state())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    labels = all_labels(spec.m) if args.all else sorted(dec.support())
    record = {
        "kind": "decomposition",
        "spec": str(spec),
        "alpha": spec.alpha,
        "beta": spec.beta,
        "entries": {lab: _complex_pair(dec.amplitude(lab)) for lab in labels},
    }
    _emit([record], args)
    return EXIT_OK


def table_agreement() -> tuple[int, int, list[str]]:
    cases = agree = 0
    mismatches = []
    for pair in itertools.product(XY_EIGENSTATES, repeat=2):
        for label in ("000", "001"):
            cases += 1
            try:
                predict_collapse(label, pair, check_tables=True)
                agree += 1
            except TableMismatch as exc:
                mismatches.append(str(exc))
    return agree, cases, mismatches


def cmd_check_tables(args: argparse.Namespace) -> int:
    agree, cases, mismatches = table_agreement()
    _emit([{"kind": "check-tables", "agreements": agree, "cases": cases, "mismatches": mismatches}], args)
    return EXIT_OK if agree == cases else EXIT_CHECK


def cmd_detect(args: argparse.Namespace) -> int:
    cfg, _ = config_from_args(args)
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    attack = cfg.attack if cfg.attack is not AttackKind.NONE or args.attack else AttackKind.INTERCEPT_RESEND
    stats = measure_detection_rate(cfg, attack, args.trials)
    record = stats.to_dict()
    record["config"] = replace(cfg, attack=attack).to_dict()
    _emit([record], args)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "decompose": cmd_decompose,
    "check-tables": cmd_check_tables,
    "detect": cmd_detect,
}


def _protect_state_tokens(argv: list[str]) -> list[str]:
    """Let ``decompose -x +x +x`` through argparse, which would read ``-x`` as a flag."""
    if not argv or argv[0] != "decompose" or "--" in argv:
        return argv
    for i, tok in enumerate(argv[1:], start=1):
        if _STATE_TOKEN.match(tok):
            return argv[:i] + ["--"] + argv[i:]
    return argv


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_protect_state_tokens(argv))
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"mdiqss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
