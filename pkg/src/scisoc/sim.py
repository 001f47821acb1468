"""The epoch loop tying corpus, society, pipeline, review, and channel together.

Each epoch runs four phases: (1) eligible leaders form teams, (2) every team
formed in an earlier epoch advances one stage (concurrently through the
inference channel unless the run is deterministic), (3) peer reviews resolve
as part of the review stage, and (4) all shared-state effects -- memory
pushes, citation credit, accepted-paper insertion -- commit at the epoch
barrier in team_id order. Because stage executors only read pre-epoch shared
state and all effects are applied in a fixed order, two runs with the same
config and seed produce byte-identical logs regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backend import HttpBackend, MockBackend
from .channel import ChannelConfig, InferenceChannel
from .config import SimulationConfig
from .corpus import Corpus
from .errors import ConfigError, DataError
from .index import CitationLedger, EmbeddingIndex, build_index
from .metrics import (CorrelationReport, MetricsRow, correlate_rows,
                      export_metrics, fit_exponential, paper_metrics)
from .pipeline import (PipelineSettings, ReferenceBias, StageAction,
                       advance_team, write_actions_jsonl)
from .review import (Submission, publish_accepted, review_submission,
                     sample_reviewers, load_review_template)
from .society import Society, Stage, sample_team_size
from .records import PaperRecord

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1

DEFAULT_TEAM_RATE = 1.0


def config_hash(config: SimulationConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunArtifacts:
    out_dir: Path
    manifest: dict | None  # None while a run is checkpointed mid-way

    @property
    def completed(self) -> bool:
        return self.manifest is not None


class SimulationRun:
    """One simulation instance; create fresh or from a checkpoint."""

    def __init__(
        self,
        config: SimulationConfig,
        corpus: Corpus,
        backends: list | None = None,
        reference_bias: ReferenceBias | None = None,
        score_sampler=None,
    ) -> None:
        self.config = config.validate()
        self.corpus = corpus
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        agent_ids = corpus.sample_author_ids(config.n_agents, config.seed)
        self.society = Society(
            {aid: corpus.authors[aid] for aid in agent_ids},
            seed=config.seed,
            memory_cap=config.memory_cap,
            max_led_teams=config.max_led_teams,
        )
        self._backends = backends or self._make_backends(score_sampler)
        self.index = build_index(corpus.reference_db, self._backends[0],
                                 dim=None if config.backend == "live" else config.embed_dim)
        self.ledger = CitationLedger()
        self.settings = PipelineSettings(
            max_refs=config.max_refs,
            retry_budget=config.retry_budget,
            memory_char_budget=config.memory_char_budget,
            reference_bias=reference_bias,
        )
        self.pending_submissions: dict[str, Submission] = {}
        self.actions: list[StageAction] = []
        self.review_rows: list[dict] = []
        self.team_sizes: list[int] = []
        self.epoch_next = 0
        self._review_template = load_review_template()
        self._feature_cache: dict[str, tuple[float, float]] = {}
        self._max_rank = max(
            (a.affiliation_rank for a in corpus.authors.values()
             if a.affiliation_rank is not None),
            default=100,
        )

    @property
    def team_rate(self) -> float:
        if self.config.team_rate is not None:
            return self.config.team_rate
        if self.corpus.team_rate is not None and self.corpus.team_rate > 0:
            return self.corpus.team_rate
        return DEFAULT_TEAM_RATE

    # -- epoch phases ------------------------------------------------------

    def run(self, halt_after_epoch: int | None = None) -> RunArtifacts:
        if self.epoch_next >= self.config.epochs:
            return self._finalize()
        channel = self._open_channel()
        try:
            for epoch in range(self.epoch_next, self.config.epochs):
                self._run_epoch(epoch, channel)
                self.epoch_next = epoch + 1
                if self.config.checkpoint_every and (epoch + 1) % self.config.checkpoint_every == 0:
                    self.write_checkpoint()
                if halt_after_epoch is not None and epoch >= halt_after_epoch:
                    self.write_checkpoint()
                    return RunArtifacts(self.out_dir, None)
        finally:
            channel.shutdown()
        return self._finalize()

    def _open_channel(self) -> InferenceChannel:
        cfg = self.config
        ports = 1 if cfg.deterministic else cfg.ports
        cap = 1 if cfg.deterministic else cfg.port_cap
        backends = [self._backends[i % len(self._backends)] for i in range(ports)]
        return InferenceChannel(backends, ChannelConfig(
            port_cap=cap,
            base_wait=cfg.base_wait,
            max_wait=cfg.max_wait,
            pending_threshold=cfg.pending_threshold,
        ))

    def _run_epoch(self, epoch: int, channel: InferenceChannel) -> None:
        self._formation_phase(epoch)
        self._advance_phase(epoch, channel)
        self.society.check_consistency()

    def _formation_phase(self, epoch: int) -> None:
        cfg = self.config
        rate = self.team_rate
        for agent_id in self.society.agent_order:
            agent = self.society.agents[agent_id]
            if not agent.can_lead(cfg.max_led_teams):
                continue
            # A leader with a stage currently stuck in retries does not open
            # another front; anything else with capacity may form a team.
            if any(self.society.teams[tid].stage_delays > 0 for tid in agent.led_team_ids):
                continue
            if agent.rng.random() >= cfg.team_formation_prob:
                continue
            size = sample_team_size(agent.rng, rate)
            team = self.society.select_collaborators(
                agent, size, epoch,
                coauthor_weight=cfg.coauthor_weight,
                topic_weight=cfg.topic_weight,
                candidate_pool=cfg.candidate_pool,
            )
            self.team_sizes.append(len(team.member_ids))

    def _advance_phase(self, epoch: int, channel: InferenceChannel) -> None:
        teams = sorted(
            (t for t in self.society.live_teams() if t.formed_epoch < epoch),
            key=lambda t: t.team_id,
        )
        if not teams:
            return

        def execute(team):
            return advance_team(
                team, self.society, self.index, channel, epoch, self.settings,
                submission=self.pending_submissions.get(team.team_id),
                review_fn=self._review_fn(channel),
                paper_features=self._paper_features,
            )

        if self.config.deterministic:
            outcomes = [execute(t) for t in teams]
        else:
            workers = min(len(teams), self.config.ports * self.config.port_cap * 2)
            with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
                outcomes = list(pool.map(execute, teams))

        # Barrier: commit all shared-state effects in team_id order.
        for team, outcome in zip(teams, outcomes):
            if outcome.aborted:
                self.society.finish_team(team, "aborted", epoch)
                self.pending_submissions.pop(team.team_id, None)
                continue
            if outcome.delayed:
                continue
            if outcome.action is not None:
                self.actions.append(outcome.action)
            for agent_id, entry in outcome.memory_pushes:
                self.society.agents[agent_id].memory.append(entry)
            if outcome.citation_refs:
                self.ledger.record(epoch, team.team_id, outcome.citation_refs, self.index)
            if outcome.submission is not None:
                self.pending_submissions[team.team_id] = outcome.submission
            if outcome.review is not None:
                self._commit_review(team, outcome.review, epoch)

    def _review_fn(self, channel):
        cfg = self.config

        def review(submission: Submission, epoch: int):
            disciplines = {aid: self.society.agents[aid].profile.discipline
                           for aid in self.society.agent_order}
            reviewer_ids = sample_reviewers(
                submission, self.society.agent_order, disciplines,
                seed=cfg.seed, n_reviewers=cfg.n_reviewers,
            )
            return review_submission(
                submission, reviewer_ids, channel.chat, epoch,
                rule=cfg.accept_rule, threshold=cfg.accept_threshold,
                template=self._review_template,
            )

        return review

    def _commit_review(self, team, bundle, epoch: int) -> None:
        submission = self.pending_submissions.pop(team.team_id)
        self.review_rows.append({
            "submission_id": bundle.submission_id,
            "reviewer_ids": bundle.reviewer_ids,
            "scores": bundle.scores,
            "decision": bundle.decision,
            "epoch": epoch,
        })
        if bundle.decision == "accept":
            publish_accepted(submission, bundle, self.corpus, self.index,
                             self._backends[0], epoch)
            self.society.finish_team(team, "accepted", epoch)
        else:
            self.society.finish_team(team, "rejected", epoch)

    def _paper_features(self, paper_id: str) -> tuple[float, float]:
        """Static (ethnicity entropy, normalized rank) of a paper's authors."""
        cached = self._feature_cache.get(paper_id)
        if cached is not None:
            return cached
        paper = self.corpus.reference_db[paper_id]
        known = [self.corpus.authors[a] for a in paper.author_ids
                 if a in self.corpus.authors]
        if known:
            counts: dict[str, int] = {}
            for a in known:
                counts[a.ethnicity] = counts.get(a.ethnicity, 0) + 1
            n = len(known)
            entropy = -sum((c / n) * math.log(c / n) for c in counts.values())
            ranks = [a.affiliation_rank for a in known if a.affiliation_rank is not None]
            rank_norm = (sum(ranks) / len(ranks)) / self._max_rank if ranks else 0.5
        else:
            entropy, rank_norm = 0.0, 0.5
        features = (entropy, min(rank_norm, 1.0))
        self._feature_cache[paper_id] = features
        return features

    # -- outputs -----------------------------------------------------------

    def compute_metrics(self) -> tuple[list[MetricsRow], list[CorrelationReport]]:
        rows: list[MetricsRow] = []
        for paper_id in sorted(self.corpus.reference_db):
            paper = self.corpus.reference_db[paper_id]
            if paper.is_seed:
                continue
            rows.append(paper_metrics(paper, self.corpus.authors,
                                      ledger=self.ledger, source="simulated"))
        skipped = 0
        for paper_id in sorted(self.corpus.validation_db):
            paper = self.corpus.validation_db[paper_id]
            if any(a not in self.corpus.authors for a in paper.author_ids) or not paper.author_ids:
                skipped += 1
                continue
            rows.append(paper_metrics(paper, self.corpus.authors,
                                      ledger=None, source=f"real{paper.year}"))
        if skipped:
            logger.info("metrics: skipped %d validation papers with unresolved authors", skipped)
        return rows, correlate_rows(rows)

    def _finalize(self) -> RunArtifacts:
        out = self.out_dir
        write_actions_jsonl(self.actions, out / "actions.jsonl")
        with (out / "reviews.jsonl").open("w", encoding="utf-8") as fh:
            for row in self.review_rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        self.ledger.write_events_csv(out / "citations_events.csv")
        self.ledger.write_deltas_csv(out / "citation_deltas.csv")
        rows, reports = self.compute_metrics()
        export_metrics(rows, reports, out)
        self._write_team_sizes(out)
        (out / "society.json").write_text(
            json.dumps(self.society.to_dict(), sort_keys=True), encoding="utf-8"
        )
        self.corpus.save(out / "corpus")
        self.index.save(out / "index.npz")

        manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "config_hash": config_hash(self.config),
            "totals": {
                "epochs_run": self.epoch_next,
                "teams_formed": len(self.team_sizes),
                "accepted": sum(1 for t in self.society.teams.values()
                                if t.decision == "accepted"),
                "rejected": sum(1 for t in self.society.teams.values()
                                if t.decision == "rejected"),
                "aborted": sum(1 for t in self.society.teams.values()
                               if t.decision == "aborted"),
                "citation_events": len(self.ledger.event_log),
                "citation_delta_sum": self.ledger.total_delta(),
            },
            "files": {},
        }
        for path in sorted(out.rglob("*")):
            if not path.is_file():
                continue
            rel = str(path.relative_to(out))
            # Checkpoint state is transient, not a run output.
            if rel == "manifest.json" or rel.startswith(("checkpoint", "corpus_seed/")):
                continue
            manifest["files"][rel] = _file_sha256(path)
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        return RunArtifacts(out, manifest)

    def _write_team_sizes(self, out: Path) -> None:
        hist: dict[int, int] = {}
        for size in self.team_sizes:
            hist[size] = hist.get(size, 0) + 1
        with (out / "team_sizes.csv").open("w", encoding="utf-8") as fh:
            fh.write("size,count\n")
            for size in sorted(hist):
                fh.write(f"{size},{hist[size]}\n")
        fit: dict | None
        try:
            rate, r_squared = fit_exponential(hist)
            fit = {"rate": rate, "r_squared": r_squared}
        except Exception:
            fit = None
        (out / "team_size_fit.json").write_text(json.dumps(fit), encoding="utf-8")

    # -- checkpointing -----------------------------------------------------

    def write_checkpoint(self) -> Path:
        state = {
            "schema_version": CHECKPOINT_SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "config_hash": config_hash(self.config),
            "epoch_next": self.epoch_next,
            "society": self.society.to_dict(),
            "ledger": self.ledger.to_dict(),
            "pending_submissions": {tid: s.to_dict()
                                    for tid, s in self.pending_submissions.items()},
            "sim_papers": [self.corpus.reference_db[pid].to_dict()
                           for pid in sorted(self.corpus.reference_db)
                           if not self.corpus.reference_db[pid].is_seed],
            "actions": [json.loads(a.to_json()) for a in self.actions],
            "reviews": self.review_rows,
            "team_sizes": self.team_sizes,
        }
        self.corpus.save(self.out_dir / "corpus_seed")
        self.index.save(self.out_dir / "checkpoint_index.npz")
        path = self.out_dir / "checkpoint.json"
        path.write_text(json.dumps(state, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def from_checkpoint(
        cls, checkpoint_path: Path, backends: list | None = None,
        reference_bias: ReferenceBias | None = None,
    ) -> "SimulationRun":
        checkpoint_path = Path(checkpoint_path)
        try:
            state = json.loads(checkpoint_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"checkpoint unreadable: {exc}") from exc
        for section in ("schema_version", "config", "config_hash", "epoch_next",
                        "society", "ledger", "pending_submissions", "sim_papers",
                        "actions", "reviews", "team_sizes"):
            if section not in state:
                raise DataError(f"checkpoint integrity: missing section {section!r}")
        if state["schema_version"] != CHECKPOINT_SCHEMA_VERSION:
            raise DataError(
                f"checkpoint schema {state['schema_version']} unsupported"
            )
        config = SimulationConfig.from_dict(state["config"])
        if config_hash(config) != state["config_hash"]:
            raise DataError("checkpoint integrity: config hash mismatch")

        out_dir = checkpoint_path.parent
        corpus = Corpus.load(out_dir / "corpus_seed")
        run = cls.__new__(cls)
        run.config = config
        run.corpus = corpus
        run.out_dir = out_dir
        run._backends = backends or run._make_backends(None)
        run.index = EmbeddingIndex.load(out_dir / "checkpoint_index.npz")
        run.ledger = CitationLedger.from_dict(state["ledger"])
        run.settings = PipelineSettings(
            max_refs=config.max_refs,
            retry_budget=config.retry_budget,
            memory_char_budget=config.memory_char_budget,
            reference_bias=reference_bias,
        )
        # Re-attach simulation-authored papers that the seed snapshot lacks.
        for rec in state["sim_papers"]:
            paper = PaperRecord.from_dict(rec)
            if paper.paper_id not in corpus.reference_db:
                corpus.add_accepted(paper)
        run.society = Society.from_dict(state["society"], corpus.authors)
        run.pending_submissions = {tid: Submission.from_dict(d)
                                   for tid, d in state["pending_submissions"].items()}
        run.actions = [
            StageAction(r["team_id"], r["stage"], r["prompt"], r["response"],
                        r["refs_used"], r["epoch"])
            for r in state["actions"]
        ]
        run.review_rows = state["reviews"]
        run.team_sizes = state["team_sizes"]
        run.epoch_next = state["epoch_next"]
        run._review_template = load_review_template()
        run._feature_cache = {}
        run._max_rank = max(
            (a.affiliation_rank for a in corpus.authors.values()
             if a.affiliation_rank is not None),
            default=100,
        )
        return run

    def _make_backends(self, score_sampler=None) -> list:
        cfg = self.config
        if cfg.backend == "mock":
            backend = MockBackend(seed=cfg.seed, dim=cfg.embed_dim,
                                  score_sampler=score_sampler)
            return [backend] * max(1, cfg.ports)
        urls = cfg.live_urls or tuple(f"http://127.0.0.1:{8000 + i}" for i in range(cfg.ports))
        return [HttpBackend(url) for url in urls]


def run_simulation(
    config: SimulationConfig,
    corpus: Corpus,
    halt_after_epoch: int | None = None,
    backends: list | None = None,
    reference_bias: ReferenceBias | None = None,
    score_sampler=None,
) -> RunArtifacts:
    """Run a full simulation (or a prefix of one) into config.out_dir."""
    run = SimulationRun(config, corpus, backends=backends,
                        reference_bias=reference_bias, score_sampler=score_sampler)
    return run.run(halt_after_epoch=halt_after_epoch)


def resume(checkpoint_path: Path, backends: list | None = None,
           reference_bias: ReferenceBias | None = None) -> RunArtifacts:
    """Continue a checkpointed run; a completed run resumes as a no-op."""
    run = SimulationRun.from_checkpoint(checkpoint_path, backends=backends,
                                        reference_bias=reference_bias)
    manifest_path = run.out_dir / "manifest.json"
    if run.epoch_next >= run.config.epochs and manifest_path.exists():
        logger.info("run already complete at epoch %d; nothing to resume", run.epoch_next)
        return RunArtifacts(run.out_dir,
                            json.loads(manifest_path.read_text(encoding="utf-8")))
    return run.run()
