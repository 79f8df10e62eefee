"""``fbexp`` command line: bound curves, simulations, sweeps and transcript replay."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .channel import Transcript
from .errors import InvalidParameterError, NumericFailureError, OutOfValidityError
from .exponents import bound_curve
from .harness import (
    ErrorBreakdown,
    branch_estimate,
    collision_column,
    estimate,
    feedback_audit,
    iter_outcomes,
    power_audit,
    AUDIT_MIN_TRIALS,
)
from .schemes import SchemeConfig, Variant, parse_config, parse_sweep, replay, resolve_config

LN2 = math.log(2.0)
EXIT_OK, EXIT_AUDIT, EXIT_ERROR = 0, 1, 2
BOUNDS_COLUMNS = ["R_FB", "lower", "upper", "regime", "max_order", "status"]
DEFAULT_BRANCH_TRIALS = 10000


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line diagnostics only, no usage dump
        raise CliError(message)


@dataclass
class RunManifest:
    command: list
    config: dict | None
    master_seed: int | None
    version: str = __version__
    outputs: list = field(default_factory=list)
    duration_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list; ``inf`` is accepted as a value."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise CliError(f"grid must be start:stop:step, got {text!r}")
            start, stop, step = (float(p) for p in parts)
            if not (math.isfinite(start) and math.isfinite(stop)) or step <= 0 or stop < start:
                raise CliError(f"invalid grid {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(count)]
        else:
            values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(f"invalid grid {text!r}: {exc}") from exc
    if not values:
        raise CliError(f"empty grid {text!r}")
    return values


# ---- bounds -------------------------------------------------------------------------


def cmd_bounds(args) -> int:
    scale = LN2 if args.units == "bits" else 1.0
    grid = parse_grid(args.rfb)
    rows = bound_curve(args.R * scale, args.P, [g * scale for g in grid])

    def conv(x):
        return None if x is None else x / scale

    out_rows = [
        [g, conv(row.lower), conv(row.upper), row.regime.value, row.max_order, row.status]
        for g, row in zip(grid, rows)
    ]
    out = Path(args.out)
    _write(out, _csv_text(BOUNDS_COLUMNS, out_rows))
    args._outputs.append(str(out))
    args._config = {"R": args.R, "P": args.P, "rfb": args.rfb, "units": args.units}
    return EXIT_OK


# ---- simulate --------------------------------------------------------------------------


def _load_config(path) -> SchemeConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def _audits(breakdown: ErrorBreakdown, cfg: SchemeConfig) -> list[dict]:
    audits = []
    if breakdown.valid_trials >= AUDIT_MIN_TRIALS:
        audits.append(power_audit(breakdown, cfg).to_dict())
    else:
        audits.append({"audit": "power", "passed": None,
                       "skipped": f"needs >= {AUDIT_MIN_TRIALS} trials"})
    if cfg.variant is not Variant.NO_FEEDBACK:
        audits += [a.to_dict() for a in feedback_audit(breakdown, cfg)]
    return audits


def _run_simulation(cfg: SchemeConfig, trials: int, seed: int, branch_trials: int | None,
                    workers=None):
    cfg = resolve_config(cfg).validate()
    breakdown = estimate(cfg, trials, seed, workers=workers)
    extra = None
    if cfg.variant in (Variant.TWO_PHASE, Variant.COMPRESSED_FB) and branch_trials:
        extra = branch_estimate(cfg, branch_trials, seed,
                                max_trials=100 * branch_trials).to_dict()
    breakdown = ErrorBreakdown(**{**breakdown.__dict__, "branch_estimate": extra})
    audits = _audits(breakdown, cfg)
    ok = breakdown.failed == 0 and all(a["passed"] is not False for a in audits)
    return cfg, breakdown, audits, ok


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    branch_trials = args.branch_trials
    if branch_trials is None:
        branch_trials = min(args.trials, DEFAULT_BRANCH_TRIALS)
    cfg, breakdown, audits, ok = _run_simulation(cfg, args.trials, args.seed, branch_trials,
                                                 args.workers)
    payload = breakdown.to_dict()
    payload["audits"] = audits
    out = Path(args.out)
    _write(out, json.dumps(payload, indent=2) + "\n")
    csv_path = out.with_suffix(".csv")
    _write(csv_path, _csv_text(ErrorBreakdown.CSV_COLUMNS, [breakdown.csv_row()]))
    args._outputs += [str(out), str(csv_path)]
    if args.transcripts:
        path = Path(args.transcripts)
        count = min(args.transcript_count, args.trials)
        with open(path, "w", encoding="utf-8") as fh:
            for o in iter_outcomes(cfg, args.seed, count):
                fh.write(o.transcript.to_json() + "\n")
        args._outputs.append(str(path))
    args._config = cfg.to_dict()
    args._seed = args.seed
    for a in audits:
        if a["passed"] is False:
            print(f"audit {a['audit']} FAILED: value {a['value']!r} > limit {a['limit']!r}",
                  file=sys.stderr)
    if breakdown.failed:
        print(f"{breakdown.failed} trials failed", file=sys.stderr)
    return EXIT_OK if ok else EXIT_AUDIT


# ---- sweep ---------------------------------------------------------------------------


SWEEP_PREFIX = ["key", "value", "status", "alarm_threshold", "collision_expected", "audits"]


def _alarm_threshold(cfg: SchemeConfig):
    if cfg.variant is Variant.NO_FEEDBACK:
        return None
    if cfg.variant is Variant.BLOCK_MARKOV:
        return math.sqrt(cfg.P / cfg.gamma) / 2.0
    return cfg.alarm_threshold(0)


def _grid_label(value) -> str:
    if isinstance(value, (tuple, list)):
        return ";".join(_format_cell(v) for v in value)
    return _format_cell(value)


def cmd_sweep(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {args.config}: {exc.strerror}") from exc
    key, grid, base = parse_sweep(text)
    header = SWEEP_PREFIX + ErrorBreakdown.CSV_COLUMNS
    rows, all_ok = [], True
    for value in grid:
        try:
            cfg = SchemeConfig.from_dict({**base, key: value})
            cfg, breakdown, audits, ok = _run_simulation(cfg, args.trials, args.seed, 0,
                                                         args.workers)
            verdict = "pass" if ok else "fail"
            rows.append([key, _grid_label(value), "ok", _alarm_threshold(cfg),
                         collision_column(cfg), verdict] + breakdown.csv_row())
            all_ok &= ok
        except (InvalidParameterError, OutOfValidityError, NumericFailureError) as exc:
            rows.append([key, _grid_label(value), f"error: {exc}"]
                        + [None] * (len(header) - 3))
            all_ok = False
    out = Path(args.out)
    _write(out, _csv_text(header, rows))
    args._outputs.append(str(out))
    args._config = {k: (v.value if isinstance(v, Variant) else v) for k, v in base.items()}
    args._config["sweep"] = {"key": key, "grid": [_grid_label(v) for v in grid]}
    args._seed = args.seed
    return EXIT_OK if all_ok else EXIT_AUDIT


# ---- replay --------------------------------------------------------------------------


def cmd_replay(args) -> int:
    path = Path(args.transcripts)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(f"cannot read transcripts {path}: {exc.strerror}") from exc
    total = mismatched = 0
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            transcript = Transcript.from_json(line)
        except (ValueError, KeyError, TypeError) as exc:
            raise CliError(f"{path}:{lineno}: malformed transcript: {exc}") from exc
        result = replay(transcript)
        total += 1
        if not (result["decoded_matches"] and result["feedback_matches"]):
            mismatched += 1
            print(f"trial {transcript.trial}: replay mismatch "
                  f"(decoded {result['decoded']} vs stored {transcript.decoded})")
    print(f"replayed {total} transcripts, {mismatched} mismatched")
    args._manifest = False
    return EXIT_OK if mismatched == 0 else EXIT_AUDIT


# ---- entry point -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fbexp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fbexp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bounds", help="exponent bounds over a grid of feedback rates (CSV)")
    p.add_argument("--R", type=float, required=True, help="forward rate")
    p.add_argument("--P", type=float, required=True, help="average power")
    p.add_argument("--rfb", required=True, help="feedback-rate grid: start:stop:step or a,b,c")
    p.add_argument("--units", choices=("nats", "bits"), default="nats",
                   help="units of R, the grid and all rate columns")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo error breakdown of one config (JSON + CSV)")
    p.add_argument("config", help="flat key = value config file")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0, help="master seed of the trial draws")
    p.add_argument("--out", required=True, help="output JSON path; the CSV row goes next to it")
    p.add_argument("--branch-trials", type=int, default=None,
                   help="conditioned samples per branch for product-form estimates (0 disables)")
    p.add_argument("--transcripts", help="write per-trial transcripts (JSON lines) here")
    p.add_argument("--transcript-count", type=int, default=100)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate over the grid of one swept config key (CSV)")
    p.add_argument("config", help="config file with exactly one key written as [grid]")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run receivers on stored transcripts and compare")
    p.add_argument("transcripts", help="JSON-lines transcript file")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 1:
            raise CliError("--trials must be >= 1")
        args._outputs, args._config, args._seed, args._manifest = [], None, None, True
        status = args.func(args)
        if args._manifest and args._outputs:
            manifest = RunManifest(
                command=["fbexp"] + argv,
                config=args._config,
                master_seed=args._seed,
                outputs=args._outputs,
                duration_s=time.perf_counter() - start,
            )
            _write(manifest_path(Path(args._outputs[0])), manifest.to_json())
        return status
    except (CliError, InvalidParameterError, OutOfValidityError, NumericFailureError) as exc:
        print(f"fbexp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"fbexp: error: {exc.strerror or exc}: {name}".rstrip(": "), file=sys.stderr)
        return EXIT_ERROR
