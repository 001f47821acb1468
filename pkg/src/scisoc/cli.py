"""Command-line entry point.

Subcommands: ingest (dump -> corpus snapshot), simulate (epoch loop),
metrics (recompute metrics/correlations from a run snapshot), validate
(side-by-side correlation signs of real vs simulated metrics), probe
(channel throughput scaling report). Exit codes: 0 ok, 2 config error,
3 data error, 4 backend error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import sim as simmod
from .channel import throughput_probe
from .config import SimulationConfig
from .corpus import Corpus, ingest
from .errors import BackendError, ConfigError, DataError, SciSocError
from .index import CitationLedger, load_ledger
from .metrics import correlate_rows, export_metrics, import_metrics, pearson

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BACKEND = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scisoc")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="load a scholarly dump into a corpus snapshot")
    p_ingest.add_argument("--authors", required=True, type=Path)
    p_ingest.add_argument("--papers", required=True, type=Path)
    p_ingest.add_argument("--rankings", type=Path, default=None)
    p_ingest.add_argument("--out", required=True, type=Path)

    p_sim = sub.add_parser("simulate", help="run the epoch loop over a corpus snapshot")
    p_sim.add_argument("--corpus", required=True, type=Path)
    p_sim.add_argument("--out", required=True, type=Path)
    p_sim.add_argument("--config", type=Path, default=None, help="JSON config file")
    p_sim.add_argument("--resume", action="store_true",
                       help="continue from <out>/checkpoint.json")
    p_sim.add_argument("--agents", type=int, default=None)
    p_sim.add_argument("--epochs", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--backend", choices=("mock", "live"), default=None)
    p_sim.add_argument("--ports", type=int, default=None)
    p_sim.add_argument("--port-cap", type=int, default=None)
    p_sim.add_argument("--base-wait", type=float, default=None)
    p_sim.add_argument("--max-wait", type=float, default=None)
    p_sim.add_argument("--pending-threshold", type=int, default=None)
    p_sim.add_argument("--team-rate", type=float, default=None)
    p_sim.add_argument("--max-led-teams", type=int, default=None)
    p_sim.add_argument("--memory-cap", type=int, default=None)
    p_sim.add_argument("--accept-rule", choices=("mean", "median", "all"), default=None)
    p_sim.add_argument("--checkpoint-every", type=int, default=None)
    p_sim.add_argument("--deterministic", action="store_true")

    p_metrics = sub.add_parser("metrics", help="metrics/correlations from a run snapshot")
    p_metrics.add_argument("--snapshot", required=True, type=Path,
                           help="run output directory containing corpus/ and ledger data")
    p_metrics.add_argument("--out", required=True, type=Path)

    p_val = sub.add_parser("validate", help="compare real vs simulated correlation signs")
    p_val.add_argument("--real", required=True, type=Path)
    p_val.add_argument("--sim", required=True, type=Path)
    p_val.add_argument("--out", type=Path, default=None)

    p_probe = sub.add_parser("probe", help="channel throughput scaling report")
    p_probe.add_argument("--out", required=True, type=Path)
    p_probe.add_argument("--ports", type=int, nargs="+", default=[1, 2, 4, 8])
    p_probe.add_argument("--agents", type=int, nargs="+", default=[50, 100, 200])
    p_probe.add_argument("--latency", type=float, default=0.005)
    p_probe.add_argument("--requests-per-agent", type=int, default=4)
    return parser


def _cmd_ingest(args) -> int:
    corpus = ingest(args.authors, args.papers, args.rankings, args.out)
    report = corpus.report.to_dict()
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _simulate_config(args) -> SimulationConfig:
    config = SimulationConfig.load(args.config) if args.config else SimulationConfig()
    overrides = {
        "n_agents": args.agents,
        "epochs": args.epochs,
        "seed": args.seed,
        "backend": args.backend,
        "ports": args.ports,
        "port_cap": args.port_cap,
        "base_wait": args.base_wait,
        "max_wait": args.max_wait,
        "pending_threshold": args.pending_threshold,
        "team_rate": args.team_rate,
        "max_led_teams": args.max_led_teams,
        "memory_cap": args.memory_cap,
        "accept_rule": args.accept_rule,
        "checkpoint_every": args.checkpoint_every,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.deterministic:
        config.deterministic = True
    config.out_dir = str(args.out)
    return config.validate()


def _cmd_simulate(args) -> int:
    if args.resume:
        artifacts = simmod.resume(Path(args.out) / "checkpoint.json")
    else:
        config = _simulate_config(args)
        corpus = Corpus.load(args.corpus)
        artifacts = simmod.run_simulation(config, corpus)
    if artifacts.manifest:
        print(json.dumps(artifacts.manifest["totals"], indent=2))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    snapshot = Path(args.snapshot)
    corpus = Corpus.load(snapshot / "corpus")
    ledger_path = snapshot / "ledger.json"
    if ledger_path.exists():
        ledger = load_ledger(ledger_path)
    else:
        ledger = CitationLedger()
        deltas = snapshot / "citation_deltas.csv"
        if deltas.exists():
            with deltas.open(newline="", encoding="utf-8") as fh:
                for rec in csv.DictReader(fh):
                    ledger.counts[rec["paper_id"]] = int(rec["delta"])
    from .metrics import paper_metrics

    rows = []
    for paper_id in sorted(corpus.reference_db):
        paper = corpus.reference_db[paper_id]
        if paper.is_seed:
            continue
        rows.append(paper_metrics(paper, corpus.authors, ledger=ledger, source="simulated"))
    for paper_id in sorted(corpus.validation_db):
        paper = corpus.validation_db[paper_id]
        if paper.author_ids and all(a in corpus.authors for a in paper.author_ids):
            rows.append(paper_metrics(paper, corpus.authors, source=f"real{paper.year}"))
    export_metrics(rows, correlate_rows(rows), args.out)
    print(f"wrote metrics for {len(rows)} papers to {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    real_rows = import_metrics(args.real)
    sim_rows = import_metrics(args.sim)
    report_lines = [["factor", "r_real", "p_real", "n_real",
                     "r_sim", "p_sim", "n_sim", "sign_match"]]
    factors = {
        "d_eth": lambda r: r.d_eth,
        "d_aff": lambda r: r.d_aff,
        "mean_rank": lambda r: r.mean_rank,
    }
    for factor, getter in factors.items():
        stats = {}
        for name, rows in (("real", real_rows), ("sim", sim_rows)):
            pairs = [(getter(r), float(r.citations)) for r in rows if getter(r) is not None]
            if len(pairs) >= 3:
                try:
                    r, p = pearson([p_[0] for p_ in pairs], [p_[1] for p_ in pairs])
                    stats[name] = (r, p, len(pairs))
                except SciSocError:
                    pass
        if "real" in stats and "sim" in stats:
            match = (stats["real"][0] > 0) == (stats["sim"][0] > 0)
            report_lines.append([
                factor,
                repr(stats["real"][0]), repr(stats["real"][1]), stats["real"][2],
                repr(stats["sim"][0]), repr(stats["sim"][1]), stats["sim"][2],
                match,
            ])
        else:
            report_lines.append([factor, "", "", 0, "", "", 0, ""])
    text = "\n".join(",".join(str(c) for c in line) for line in report_lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def _cmd_probe(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n_ports in args.ports:
        for n_agents in args.agents:
            result = throughput_probe(n_agents, n_ports, args.latency,
                                      requests_per_agent=args.requests_per_agent)
            rows.append(result)
            print(f"ports={n_ports:3d} agents={n_agents:5d} "
                  f"wall={result.wall_clock:.3f}s thru={result.throughput:.0f} req/s")
    with (out / "scaling.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n_agents", "n_ports", "wall_clock", "throughput"])
        for result in rows:
            writer.writerow(result.csv_row())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    handlers = {
        "ingest": _cmd_ingest,
        "simulate": _cmd_simulate,
        "metrics": _cmd_metrics,
        "validate": _cmd_validate,
        "probe": _cmd_probe,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except BackendError as exc:
        logger.error("backend error: %s", exc)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
