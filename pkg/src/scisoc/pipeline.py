"""The six-stage collaboration state machine.

One call to advance_team executes exactly one stage of one team:
collaborator selection (kickoff note), topic discussion (round-robin
utterances, leader synthesis), idea generation (the speech whose retrievals
earn citations), novelty assessment (retrieval without citation credit),
abstract generation (emits the submission), peer review (decision).

Stage executors never mutate shared state directly. They mutate only their
own team and return a StageOutcome carrying the log entry plus deferred
effects (memory pushes, citation credit, submission, review result) that the
epoch loop applies at the barrier in team_id order. A backend failure leaves
the team unchanged and marks the stage delayed; the team retries the same
stage next epoch until the retry budget runs out.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import BackendError, DataError
from .index import EmbeddingIndex
from .review import ReviewBundle, Submission
from .society import Society, Stage, Team, next_stage

logger = logging.getLogger(__name__)

MAX_REFS_PER_SPEECH = 9


def load_template(name: str) -> str:
    return (resources.files("scisoc") / "templates" / f"{name}_v1.txt").read_text(
        encoding="utf-8"
    )


@dataclass(frozen=True)
class ReferenceBias:
    """Optional planted citation policy for synthetic-society experiments.

    When set, the idea stage oversamples retrieval candidates and picks the
    final references with weights exp(eth_strength * ethnicity_entropy -
    rank_strength * normalized_rank) computed from each candidate paper's
    authorship, instead of taking the plain cosine top-k.
    """

    eth_strength: float = 0.0
    rank_strength: float = 0.0
    oversample: int = 8


@dataclass(frozen=True)
class PipelineSettings:
    max_refs: int = MAX_REFS_PER_SPEECH
    retry_budget: int = 3
    memory_char_budget: int = 240
    reference_bias: ReferenceBias | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.max_refs <= MAX_REFS_PER_SPEECH:
            raise DataError(
                f"max_refs must be in 1..{MAX_REFS_PER_SPEECH}, got {self.max_refs}"
            )


@dataclass
class StageAction:
    """One logged stage execution; serialized into actions.jsonl."""

    team_id: str
    stage: str
    prompt: str
    response: str
    refs_used: list[str]
    epoch: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "team_id": self.team_id,
                "stage": self.stage,
                "prompt": self.prompt,
                "response": self.response,
                "refs_used": self.refs_used,
            },
            sort_keys=True,
        )


@dataclass
class StageOutcome:
    team_id: str
    epoch: int
    stage: Stage
    action: StageAction | None = None
    memory_pushes: list[tuple[str, str]] = field(default_factory=list)
    citation_refs: list[str] = field(default_factory=list)
    submission: Submission | None = None
    review: ReviewBundle | None = None
    delayed: bool = False
    aborted: bool = False


class DirectCaller:
    """Adapter giving a bare backend the channel's (payload, origin) calling
    convention; unit tests use it to run stages without threads."""

    def __init__(self, backend) -> None:
        self.backend = backend

    def chat(self, prompt: str, origin) -> str:
        return self.backend.chat(prompt)

    def embed(self, text: str, origin) -> np.ndarray:
        return self.backend.embed(text)


def _truncate(text: str, budget: int) -> str:
    return text if len(text) <= budget else text[: budget - 1] + "…"


def _member_names(team: Team, society: Society) -> str:
    return ", ".join(society.agent(m).profile.display_name for m in team.member_ids)


def advance_team(
    team: Team,
    society: Society,
    index: EmbeddingIndex,
    caller,
    epoch: int,
    settings: PipelineSettings = PipelineSettings(),
    submission: Submission | None = None,
    review_fn: Callable[[Submission, int], ReviewBundle] | None = None,
    paper_features: Callable[[str], tuple[float, float]] | None = None,
) -> StageOutcome:
    """Execute the team's current stage; a no-op for finished teams."""
    if team.stage is Stage.DONE:
        return StageOutcome(team.team_id, epoch, Stage.DONE)

    stage = team.stage
    try:
        if stage is Stage.COLLABORATOR_SELECTION:
            outcome = _run_kickoff(team, society, caller, epoch, settings)
        elif stage is Stage.TOPIC_DISCUSSION:
            outcome = _run_topic_discussion(team, society, caller, epoch, settings)
        elif stage is Stage.IDEA_GENERATION:
            outcome = generate_idea(team, society, index, caller, epoch, settings,
                                    paper_features=paper_features)
        elif stage is Stage.NOVELTY_ASSESSMENT:
            outcome = assess_novelty(team, society, index, caller, epoch, settings)
        elif stage is Stage.ABSTRACT_GENERATION:
            outcome = generate_abstract(team, society, caller, epoch, settings)
        elif stage is Stage.PEER_REVIEW:
            if submission is None or review_fn is None:
                raise DataError(f"team {team.team_id}: peer review needs a submission")
            bundle = review_fn(submission, epoch)
            outcome = StageOutcome(team.team_id, epoch, stage, review=bundle)
        else:  # pragma: no cover - the enum is closed
            raise DataError(f"unknown stage {stage}")
    except BackendError as exc:
        team.delays += 1
        team.stage_delays += 1
        outcome = StageOutcome(team.team_id, epoch, stage, delayed=True)
        if team.stage_delays > settings.retry_budget:
            outcome.aborted = True
            logger.warning("team %s aborted at %s after %d delays: %s",
                           team.team_id, stage.value, team.stage_delays, exc)
        else:
            logger.info("team %s delayed at %s (retry %d): %s",
                        team.team_id, stage.value, team.stage_delays, exc)
        return outcome

    team.stage_delays = 0
    team.stage = next_stage(stage)
    return outcome


def _run_kickoff(
    team: Team, society: Society, caller, epoch: int, settings: PipelineSettings
) -> StageOutcome:
    leader = society.agent(team.leader_id)
    prompt = load_template("collaborator_selection").format(
        leader_name=leader.profile.display_name,
        discipline=leader.profile.discipline,
        topics=", ".join(leader.profile.research_topics) or "open questions",
        members=_member_names(team, society),
    )
    response = caller.chat(prompt, (team.team_id, team.leader_id, team.stage.value))
    action = StageAction(team.team_id, team.stage.value, prompt, response, [], epoch)
    pushes = [(m, _truncate(f"[kickoff {team.team_id}] {response}", settings.memory_char_budget))
              for m in team.member_ids]
    return StageOutcome(team.team_id, epoch, team.stage, action=action, memory_pushes=pushes)


def _run_topic_discussion(
    team: Team, society: Society, caller, epoch: int, settings: PipelineSettings
) -> StageOutcome:
    leader = society.agent(team.leader_id)
    utter_template = load_template("topic_utterance")
    utterances: list[str] = []
    for member_id in team.member_ids:
        member = society.agent(member_id)
        prompt = utter_template.format(
            member_name=member.profile.display_name,
            member_topics=", ".join(member.profile.research_topics) or "their field",
            leader_name=leader.profile.display_name,
            notes=" | ".join(list(member.memory)[-2:]) or "(none)",
        )
        utterances.append(caller.chat(prompt, (team.team_id, member_id, team.stage.value)))

    seeds = ", ".join(
        topic for m in team.member_ids
        for topic in society.agent(m).profile.research_topics[:2]
    )
    synth_prompt = load_template("topic_synthesis").format(
        leader_name=leader.profile.display_name,
        discipline=leader.profile.discipline,
        utterances="\n".join(f"- {u}" for u in utterances),
        seeds=seeds or "open questions",
    )
    topic = caller.chat(synth_prompt, (team.team_id, team.leader_id, team.stage.value))

    team.draft.topic = topic
    action = StageAction(team.team_id, team.stage.value, synth_prompt, topic, [], epoch)
    pushes = [(m, _truncate(f"[topic {team.team_id}] {topic}", settings.memory_char_budget))
              for m in team.member_ids]
    return StageOutcome(team.team_id, epoch, team.stage, action=action, memory_pushes=pushes)


def generate_idea(
    team: Team,
    society: Society,
    index: EmbeddingIndex,
    caller,
    epoch: int,
    settings: PipelineSettings = PipelineSettings(),
    paper_features: Callable[[str], tuple[float, float]] | None = None,
) -> StageOutcome:
    """The team speech whose retrievals earn citation credit."""
    if not team.draft.topic:
        raise DataError(f"team {team.team_id}: idea generation needs a topic")
    leader = society.agent(team.leader_id)
    prompt = load_template("idea_generation").format(
        leader_name=leader.profile.display_name,
        discipline=leader.profile.discipline,
        topic=team.draft.topic,
        notes=" | ".join(list(leader.memory)[-2:]) or "(none)",
    )
    origin = (team.team_id, team.leader_id, team.stage.value)
    speech = caller.chat(prompt, origin)

    refs: list[str] = []
    if len(index) > 0:
        query = caller.embed(f"{team.draft.topic}\n{speech}", origin)
        refs = _pick_references(team, index, query, settings, paper_features)

    team.draft.idea = speech
    team.chosen_refs = refs
    action = StageAction(team.team_id, team.stage.value, prompt, speech, list(refs), epoch)
    pushes = [(m, _truncate(f"[idea {team.team_id}] {speech}", settings.memory_char_budget))
              for m in team.member_ids]
    return StageOutcome(
        team.team_id, epoch, Stage.IDEA_GENERATION,
        action=action, memory_pushes=pushes, citation_refs=list(refs),
    )


def _pick_references(
    team: Team,
    index: EmbeddingIndex,
    query: np.ndarray,
    settings: PipelineSettings,
    paper_features: Callable[[str], tuple[float, float]] | None,
) -> list[str]:
    bias = settings.reference_bias
    if bias is None or paper_features is None:
        return [pid for pid, _ in index.retrieve(query, settings.max_refs)]
    candidates = [pid for pid, _ in index.retrieve(query, settings.max_refs * bias.oversample)]
    if len(candidates) <= settings.max_refs:
        return candidates
    weights = []
    for pid in candidates:
        eth_entropy, rank_norm = paper_features(pid)
        weights.append(math.exp(bias.eth_strength * eth_entropy
                                - bias.rank_strength * rank_norm))
    chosen: list[str] = []
    pool = list(candidates)
    w = list(weights)
    for _ in range(settings.max_refs):
        total = sum(w)
        pick = team.rng.random() * total
        acc = 0.0
        idx = len(pool) - 1
        for i, wi in enumerate(w):
            acc += wi
            if pick < acc:
                idx = i
                break
        chosen.append(pool.pop(idx))
        w.pop(idx)
    return chosen


def assess_novelty(
    team: Team,
    society: Society,
    index: EmbeddingIndex,
    caller,
    epoch: int,
    settings: PipelineSettings = PipelineSettings(),
) -> StageOutcome:
    """Nearest-work check; these retrievals never touch the citation ledger."""
    if not team.draft.idea:
        raise DataError(f"team {team.team_id}: novelty assessment needs an idea")
    leader = society.agent(team.leader_id)
    origin = (team.team_id, team.leader_id, team.stage.value)
    refs: list[str] = []
    neighbor_lines = "(no published work indexed)"
    if len(index) > 0:
        query = caller.embed(team.draft.idea, origin)
        refs = [pid for pid, _ in index.retrieve(query, settings.max_refs)]
        neighbor_lines = "\n".join(f"- {pid}" for pid in refs)
    prompt = load_template("novelty_assessment").format(
        leader_name=leader.profile.display_name,
        idea=team.draft.idea,
        neighbors=neighbor_lines,
    )
    note = caller.chat(prompt, origin)
    team.draft.novelty_note = note
    action = StageAction(team.team_id, team.stage.value, prompt, note, list(refs), epoch)
    pushes = [(m, _truncate(f"[novelty {team.team_id}] {note}", settings.memory_char_budget))
              for m in team.member_ids]
    return StageOutcome(team.team_id, epoch, Stage.NOVELTY_ASSESSMENT,
                        action=action, memory_pushes=pushes)


def generate_abstract(
    team: Team,
    society: Society,
    caller,
    epoch: int,
    settings: PipelineSettings = PipelineSettings(),
) -> StageOutcome:
    """Produce title and abstract and emit the submission for review."""
    if not team.draft.idea or not team.draft.novelty_note:
        raise DataError(f"team {team.team_id}: abstract needs idea and novelty note")
    leader = society.agent(team.leader_id)
    origin = (team.team_id, team.leader_id, team.stage.value)
    title_prompt = load_template("title").format(
        leader_name=leader.profile.display_name,
        idea=team.draft.idea,
        novelty=team.draft.novelty_note,
        topic=team.draft.topic,
    )
    title = caller.chat(title_prompt, origin).splitlines()[0][:120]
    abstract_prompt = load_template("abstract").format(
        leader_name=leader.profile.display_name,
        title=title,
        idea=team.draft.idea,
        novelty=team.draft.novelty_note,
        topic=team.draft.topic,
    )
    abstract = caller.chat(abstract_prompt, origin)

    team.draft.title = title
    team.draft.abstract = abstract
    submission = Submission(
        submission_id=f"sub-{team.team_id}",
        team_id=team.team_id,
        title=title,
        abstract=abstract,
        author_ids=list(team.member_ids),
        cited_paper_ids=list(team.chosen_refs),
        discipline=leader.profile.discipline,
        created_epoch=epoch,
    )
    action = StageAction(team.team_id, team.stage.value, abstract_prompt, abstract, [], epoch)
    pushes = [(m, _truncate(f"[abstract {team.team_id}] {title}", settings.memory_char_budget))
              for m in team.member_ids]
    return StageOutcome(team.team_id, epoch, Stage.ABSTRACT_GENERATION,
                        action=action, memory_pushes=pushes, submission=submission)


def write_actions_jsonl(actions: list[StageAction], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for action in actions:
            fh.write(action.to_json() + "\n")
