"""Command-line entry point.

    microgrid-rl train        --config FILE [--algorithm m-a3c] [--out DIR] [--seed N]
    microgrid-rl eval         --config FILE --checkpoint FILE [--day D] [--out FILE]
    microgrid-rl compare      --config FILE [--out DIR]
    microgrid-rl emit-figures --config FILE --checkpoint FILE [--day D] [--run DIR] [--out DIR]

Without ``--config`` the packaged defaults are used. Every command that
writes a directory also writes the fully resolved config into it as
``config.cfg``; pointing ``--config`` at that file reproduces the run.

Exit status: 0 success, 2 usage error (unknown command or flag), 3 invalid
config, 4 missing or unreadable checkpoint, 5 bad input data.
"""
from __future__ import annotations

import argparse
import csv
import logging
import shutil
import sys
from pathlib import Path

from . import nn
from .agents import greedy_policy
from .agents.common import play_day
from .config import ConfigError, ExperimentConfig, load_config, save_config
from .data import DataError, shipped_path
from .env import DayOutOfRangeError, Microgrid, write_trace_csv
from . import experiment

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CHECKPOINT = 4
EXIT_DATA = 5

DEFAULT_CONFIG = "default.cfg"
log = logging.getLogger("microgrid_rl")


def _config(args) -> ExperimentConfig:
    return load_config(args.config or shipped_path(DEFAULT_CONFIG))


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    cfg = _config(args)
    if args.episodes is not None:
        cfg.learner.episodes = args.episodes
        cfg.learner.validate()
    if args.seed is not None:
        cfg.learner.seed = args.seed
    out = _out_dir(args, cfg)
    save_config(cfg, out / "config.cfg")
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    grid = Microgrid(cfg.env)
    score = experiment.greedy_score(grid, experiment.eval_range(cfg), experiment.is_q_learner(args.algorithm))
    seen = [0]

    def monitor(params):
        k = seen[0]
        seen[0] += 1
        if args.checkpoint_every and (k + 1) % args.checkpoint_every == 0:
            nn.save_checkpoint(params, ckpt_dir / f"episode_{k + 1:04d}.mgnn")
        return score(params)

    res = experiment.train(args.algorithm, cfg, grid=grid, monitor=monitor)
    nn.save_checkpoint(res.params, ckpt_dir / "final.mgnn")
    experiment.write_history(res.history, out / "training.csv")
    last = res.history[-1]
    print(f"{args.algorithm}: {len(res.history)} episodes, final greedy reward {last.eval_reward:.2f}, "
          f"checkpoint {ckpt_dir / 'final.mgnn'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    grid = Microgrid(cfg.env)
    params = nn.load_checkpoint(args.checkpoint)
    day = cfg.eval_start_day if args.day is None else args.day
    infos = play_day(grid, day, greedy_policy(params, args.q_network))
    out = Path(args.out or "trace.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(infos, out)
    print(f"day {day}: reward {sum(i.revenue - i.cost for i in infos):.2f}, trace {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    if args.replicates is not None:
        cfg.replicates = args.replicates
        cfg.validate()
    out = _out_dir(args, cfg)
    save_config(cfg, out / "config.cfg")
    cmp = experiment.compare(cfg, progress=lambda msg: log.info(msg))
    experiment.write_comparison(cmp, out / "compare.csv", out / "compare_replicates.csv")
    table = cmp.table()
    for name in experiment.COMPARE_COLUMNS:
        if name in table:
            print(f"{name:>12}: mean daily cost {table[name].mean():10.2f}  std {table[name].std():9.2f}")
    return EXIT_OK


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_emit_figures(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    grid = Microgrid(cfg.env)
    params = nn.load_checkpoint(args.checkpoint)
    day = cfg.eval_start_day if args.day is None else args.day
    infos = play_day(grid, day, greedy_policy(params, args.q_network))
    h0 = day * 24
    sc = grid.scenario
    _write_rows(out / "wind.csv", ["hour_index", "wind_kwh"],
                [(i, repr(float(v))) for i, v in enumerate(sc.wind.generation)])
    _write_rows(out / "day_inputs.csv", ["hour", "wind", "market_price", "outdoor_temp"],
                [(h, repr(float(sc.wind.available(h0 + h))), repr(float(sc.market_price[h0 + h])),
                  repr(float(sc.outdoor_temp[h0 + h]))) for h in range(24)])
    _write_rows(out / "grid_exchange.csv", ["hour", "buy", "sell", "grid_buy_price", "grid_sell_price"],
                [(i.hour, repr(i.buy), repr(i.sell), repr(i.grid_buy_price), repr(i.grid_sell_price)) for i in infos])
    _write_rows(out / "ess.csv", ["hour", "charge", "discharge", "battery_soc"],
                [(i.hour, repr(i.ess_charge), repr(i.ess_discharge), repr(i.battery_soc)) for i in infos])
    _write_rows(out / "tcl.csv", ["hour", "tcl_energy", "mean_tcl_soc", "mean_indoor_temp", "tcl_level"],
                [(i.hour, repr(i.tcl_energy), repr(i.mean_tcl_soc), repr(i.mean_indoor_temp), i.action // 20)
                 for i in infos])
    _write_rows(out / "prices.csv", ["hour", "market_price", "internal_price"],
                [(i.hour, repr(i.market_price), repr(i.internal_price)) for i in infos])
    if args.run:
        src = Path(args.run)
        for name, dst in (("training.csv", "reward_curve.csv"), ("compare.csv", "cost_comparison.csv")):
            if (src / name).exists():
                shutil.copyfile(src / name, out / dst)
    print(f"figure data for day {day} written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="microgrid-rl", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment config file (default: packaged defaults)")
        return sp

    t = common(sub.add_parser("train", help="train one learner"))
    t.add_argument("--algorithm", choices=experiment.ALGORITHMS, default="m-a3c")
    t.add_argument("--out", help="run directory (default: output_dir from the config)")
    t.add_argument("--seed", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--checkpoint-every", type=int, default=10)
    t.set_defaults(func=cmd_train)

    for name, func in (("eval", cmd_eval), ("emit-figures", cmd_emit_figures)):
        e = common(sub.add_parser(name))
        e.add_argument("--checkpoint", required=True)
        e.add_argument("--day", type=int)
        e.add_argument("--q-network", action="store_true", help="checkpoint was trained by dqn/double-dqn")
        e.add_argument("--out")
        if name == "emit-figures":
            e.add_argument("--run", help="training or compare directory whose CSVs to include")
        e.set_defaults(func=func)

    c = common(sub.add_parser("compare", help="10-day cost table across all learners and the retailer"))
    c.add_argument("--out")
    c.add_argument("--replicates", type=int)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, nn.CheckpointError) as exc:
        if isinstance(exc, DataError):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DayOutOfRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
