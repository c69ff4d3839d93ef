"""Command-line experiment runner.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 contract violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from .entropy import EntropyConfig, NormalizationVariant, PairConvention
from .errors import ConfigurationError, ContractViolation, SceneParseError, SceneSemanticError
from .experiments import (
    PROFILE_FIELDS, ROW_FIELDS, SWEEP_FIELDS, RunConfig, audit, entropy_profile, format_row, play_suite,
    preset_grid, preset_thresholds, run_rows, summarize, sweep,
)
from .policies import FanPolicyParams
from .scenarios import (
    DEFAULT_DT, DEFAULT_HORIZON, NamedScene, ScenarioSuite, gen_suite, load_external_mtp, read_json,
    save_suite, scene_from_dict, suite_from_dict,
)

log = logging.getLogger("trajent")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CONTRACT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text):
    return [_float_list(part) for part in text.split(";") if part.strip()]


def _add_game_args(p):
    p.add_argument("--suite", required=True,
                   help="suite/scene JSON file, or a generator shorthand KIND:N with KIND in mixed|straight|intersection")
    p.add_argument("--levels", "-K", type=int, default=3, help="number of game levels K")
    sched = p.add_mutually_exclusive_group()
    sched.add_argument("--thresholds", type=_float_list, help="comma-separated gate thresholds (K-1 values)")
    sched.add_argument("--preset", help="named threshold preset (see `trajent presets`)")
    p.add_argument("--no-gate", action="store_true", help="disable the entropy gate")
    _add_entropy_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="scenes processed in parallel")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--policy", type=Path, help="JSON file with fan-policy parameters")
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, help="steps T for generated suites")
    p.add_argument("--dt", type=float, default=DEFAULT_DT, help="step length for generated suites")


def _add_entropy_args(p):
    p.add_argument("--normalization", choices=[v.value for v in NormalizationVariant],
                   default=NormalizationVariant.UNIT_STEP_SQUARED.value)
    p.add_argument("--pairs", choices=[c.value for c in PairConvention], default=PairConvention.UNORDERED.value)
    p.add_argument("--epsilon", type=float, default=1e-9, help="floor of the normalisation denominator")


def build_parser():
    parser = _Parser(prog="trajent", description="Trajectory Entropy and entropy-gated level-k games.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="gated vs. ungated games on every scene; per-row CSV and summary")
    _add_game_args(p)
    p = sub.add_parser("entropy-profile", help="mean/std entropy per level, gated and ungated")
    _add_game_args(p)
    p = sub.add_parser("sweep", help="one row per threshold schedule")
    _add_game_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--grid", type=_grid, help="schedules separated by ';', e.g. '30,30;30,25'")
    g.add_argument("--grid-preset", help="named grid, e.g. ab-thd")

    p = sub.add_parser("audit", help="entropy and gate verdict for an external MTP file")
    p.add_argument("mtp_file", type=Path)
    p.add_argument("--threshold", type=float, required=True)
    _add_entropy_args(p)
    p.add_argument("--out", type=Path, help="write the table to this CSV file instead of stdout")

    p = sub.add_parser("generate", help="write a generated scenario suite to a JSON file")
    p.add_argument("--suite", required=True, help="generator shorthand KIND:N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--out", type=Path, required=True)

    sub.add_parser("presets", help="list threshold presets and grids")
    return parser


def _entropy_config(args):
    return EntropyConfig(NormalizationVariant(args.normalization), args.epsilon, PairConvention(args.pairs))


def _load_suite(source: str, seed: int, horizon: int, dt: float) -> ScenarioSuite:
    path = Path(source)
    if not path.exists() and ":" in source:
        kind, _, count = source.partition(":")
        try:
            n = int(count)
        except ValueError:
            raise ConfigurationError(f"bad generator shorthand {source!r}; expected KIND:N") from None
        return gen_suite(kind, n, seed, horizon, dt)
    doc = read_json(path)
    if isinstance(doc, dict) and "centerlines" in doc:
        return ScenarioSuite((NamedScene(path.stem, "simple", scene_from_dict(doc)),), seed)
    return suite_from_dict(doc)


def _run_config(args) -> RunConfig:
    suite = _load_suite(args.suite, args.seed, args.horizon, args.dt)
    if args.no_gate:
        thresholds = None
    elif args.preset:
        thresholds = preset_thresholds(args.preset)
    elif args.thresholds is not None:
        thresholds = args.thresholds
    else:
        thresholds = preset_thresholds("synthetic") if args.levels == 3 else None
        if thresholds is None:
            raise ConfigurationError("give --thresholds, --preset or --no-gate when --levels is not 3")
    params = dict(suite.policy)
    if args.policy is not None:
        params.update(json.loads(args.policy.read_text()))
    return RunConfig(suite, args.levels, thresholds, _entropy_config(args), FanPolicyParams.from_dict(params),
                     args.seed, args.jobs)


def _write_csv(path_or_stream, rows, fields):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow(format_row(row, fields))
    if isinstance(path_or_stream, Path):
        path_or_stream.write_text(buf.getvalue())
    else:
        path_or_stream.write(buf.getvalue())


def _json_ready(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, float):
            v = None if math.isnan(v) else float(f"{v:.9g}")
        out[k] = v
    return out


def cmd_run(config: RunConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    rows = run_rows(config)
    summary = summarize(rows, config.levels)
    summary["thresholds"] = None if config.thresholds is None else list(config.thresholds)
    _write_csv(out / "rows.csv", rows, ROW_FIELDS)
    (out / "summary.json").write_text(json.dumps(_json_ready(summary), indent=1, sort_keys=True) + "\n")
    return summary


def cmd_entropy_profile(config: RunConfig, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    rows = entropy_profile(config, play_suite(config))
    _write_csv(out / "entropy_profile.csv", rows, PROFILE_FIELDS)
    return rows


def cmd_sweep(config: RunConfig, grid, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep(config, grid)
    _write_csv(out / "sweep.csv", rows, SWEEP_FIELDS)
    return rows


def cmd_audit(mtp_file: Path, entropy_config: EntropyConfig, threshold: float, out=None):
    rows = [{"agent": r.agent, "entropy": r.entropy, "status": "active" if r.active else "inactive"}
            for r in audit(load_external_mtp(mtp_file), threshold, entropy_config)]
    _write_csv(out if out is not None else sys.stdout, rows, ("agent", "entropy", "status"))
    return rows


def _fmt_opt(value):
    return "n/a" if value is None else f"{value:.4f}"


def _dispatch(args):
    if args.command == "presets":
        from .experiments import load_presets

        presets = load_presets()
        for name, p in sorted(presets["thresholds"].items()):
            print(f"{name:22s} {','.join(str(t) for t in p['thresholds']):24s} horizon {p['horizon_s']} s  {p['note']}")
        for name, grid in sorted(presets["grids"].items()):
            print(f"grid {name:17s} " + " ".join(",".join(str(t) for t in g) for g in grid))
        return
    if args.command == "generate":
        kind, _, n = args.suite.partition(":")
        try:
            count = int(n)
        except ValueError:
            raise ConfigurationError(f"bad generator shorthand {args.suite!r}; expected KIND:N") from None
        save_suite(gen_suite(kind, count, args.seed, args.horizon, args.dt), args.out)
        return
    if args.command == "audit":
        cmd_audit(args.mtp_file, _entropy_config(args), args.threshold, args.out)
        return
    config = _run_config(args)
    if args.command == "run":
        s = cmd_run(config, args.out)
        print(f"eval reduction {100 * s['eval_reduction']:.2f}% "
              f"({s['eval_count_gated']} gated / {s['eval_count_ungated']} ungated); "
              f"final-level minADE {_fmt_opt(s['min_ade_gated'])} gated vs {_fmt_opt(s['min_ade_ungated'])} ungated")
    elif args.command == "entropy-profile":
        for row in cmd_entropy_profile(config, args.out):
            print(f"level {row['level']}: ungated {row['ungated_mean']:.6g}  gated {row['gated_mean']:.6g}")
    elif args.command == "sweep":
        grid = args.grid if args.grid is not None else preset_grid(args.grid_preset)
        cmd_sweep(config, grid, args.out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _dispatch(args)
    except ContractViolation as exc:
        log.error("contract violation: %s", exc)
        return EXIT_CONTRACT
    except (SceneParseError, SceneSemanticError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (OSError, UnicodeDecodeError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (TypeError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
