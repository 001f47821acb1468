"""Agent state, bounded memory, and team formation.

Each agent owns a seeded random stream derived from (run seed, author id), so
society evolution is reproducible regardless of how stage actions are
scheduled. Leadership is capped at 3 concurrent teams; team sizes follow
1 + floor(Exponential(rate)).
"""

from __future__ import annotations

import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .backend import stable_hash
from .errors import ConfigError, DataError
from .records import AuthorRecord

logger = logging.getLogger(__name__)

MAX_LED_TEAMS = 3
MEMORY_CAP = 5


class Stage(Enum):
    COLLABORATOR_SELECTION = "CollaboratorSelection"
    TOPIC_DISCUSSION = "TopicDiscussion"
    IDEA_GENERATION = "IdeaGeneration"
    NOVELTY_ASSESSMENT = "NoveltyAssessment"
    ABSTRACT_GENERATION = "AbstractGeneration"
    PEER_REVIEW = "PeerReview"
    DONE = "Done"


STAGE_ORDER = (
    Stage.COLLABORATOR_SELECTION,
    Stage.TOPIC_DISCUSSION,
    Stage.IDEA_GENERATION,
    Stage.NOVELTY_ASSESSMENT,
    Stage.ABSTRACT_GENERATION,
    Stage.PEER_REVIEW,
)


def next_stage(stage: Stage) -> Stage:
    i = STAGE_ORDER.index(stage)
    return STAGE_ORDER[i + 1] if i + 1 < len(STAGE_ORDER) else Stage.DONE


@dataclass
class AgentState:
    """One scientist: profile plus simulation-local state."""

    profile: AuthorRecord
    memory: deque = field(default_factory=lambda: deque(maxlen=MEMORY_CAP))
    led_team_ids: set[str] = field(default_factory=set)
    member_team_ids: set[str] = field(default_factory=set)
    rng: random.Random = field(default_factory=random.Random)

    @property
    def agent_id(self) -> str:
        return self.profile.author_id

    def can_lead(self, max_led: int = MAX_LED_TEAMS) -> bool:
        return len(self.led_team_ids) < max_led


def push_memory(agent: AgentState, entry: str) -> AgentState:
    """Append to the agent's bounded memory, evicting the oldest entry (FIFO)."""
    agent.memory.append(entry)
    return agent


@dataclass
class Draft:
    topic: str | None = None
    idea: str | None = None
    novelty_note: str | None = None
    title: str | None = None
    abstract: str | None = None


@dataclass
class Team:
    """A leader-plus-members unit walking the six-stage collaboration."""

    team_id: str
    leader_id: str
    member_ids: list[str]
    stage: Stage
    formed_epoch: int
    draft: Draft = field(default_factory=Draft)
    chosen_refs: list[str] = field(default_factory=list)
    decision: str | None = None  # accepted | rejected | aborted once Done
    decided_epoch: int | None = None
    delays: int = 0
    stage_delays: int = 0  # consecutive delays on the current stage
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self) -> None:
        if self.leader_id not in self.member_ids:
            raise DataError(f"team {self.team_id}: leader not in member list")
        if len(set(self.member_ids)) != len(self.member_ids):
            raise DataError(f"team {self.team_id}: duplicate members")

    @property
    def live(self) -> bool:
        return self.stage is not Stage.DONE


def sample_team_size(rng: random.Random, rate: float) -> int:
    """1 + floor(X) with X ~ Exponential(rate); support {1, 2, 3, ...}."""
    if rate <= 0:
        raise ConfigError(f"team size rate must be positive, got {rate}")
    return 1 + int(rng.expovariate(rate))


def _topic_jaccard(a: AuthorRecord, b: AuthorRecord) -> float:
    sa, sb = set(a.research_topics), set(b.research_topics)
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


class Society:
    """Owns all agents and the registry of live and completed teams."""

    def __init__(
        self,
        authors: dict[str, AuthorRecord],
        seed: int,
        memory_cap: int = MEMORY_CAP,
        max_led_teams: int = MAX_LED_TEAMS,
    ) -> None:
        self.seed = seed
        self.memory_cap = memory_cap
        self.max_led_teams = max_led_teams
        self.agents: dict[str, AgentState] = {}
        for author_id in sorted(authors):
            self.agents[author_id] = AgentState(
                profile=authors[author_id],
                memory=deque(maxlen=memory_cap),
                rng=random.Random(stable_hash(seed, "agent", author_id)),
            )
        self.agent_order: list[str] = sorted(self.agents)
        self.teams: dict[str, Team] = {}
        self._team_counter = 0

    def agent(self, agent_id: str) -> AgentState:
        return self.agents[agent_id]

    def live_teams(self) -> list[Team]:
        return [t for t in self.teams.values() if t.live]

    def _new_team_id(self) -> str:
        self._team_counter += 1
        return f"t{self._team_counter:06d}"

    def select_collaborators(
        self,
        leader: AgentState,
        size: int,
        epoch: int,
        coauthor_weight: float = 0.6,
        topic_weight: float = 0.4,
        candidate_pool: int = 64,
    ) -> Team:
        """Form a team around ``leader`` of up to ``size`` distinct members.

        Candidates are a seeded-random pool scored by prior co-authorship and
        research-topic overlap; a softmax over that score drives sampling
        without replacement. A shortfall of candidates shrinks the team and
        logs a warning rather than failing.
        """
        if size < 1:
            raise ConfigError(f"team size must be >= 1, got {size}")
        if not leader.can_lead(self.max_led_teams):
            raise DataError(
                f"agent {leader.agent_id} already leads {len(leader.led_team_ids)} teams"
            )

        members = [leader.agent_id]
        if size > 1:
            others = [a for a in self.agent_order if a != leader.agent_id]
            pool_size = min(candidate_pool, len(others))
            pool = leader.rng.sample(others, pool_size) if pool_size else []
            if len(pool) < size - 1:
                logger.warning(
                    "leader %s wanted %d collaborators, only %d candidates",
                    leader.agent_id, size - 1, len(pool),
                )
            scores = []
            for cand_id in pool:
                cand = self.agents[cand_id].profile
                coauthored = 1.0 if cand_id in leader.profile.coauthor_ids else 0.0
                scores.append(coauthor_weight * coauthored
                              + topic_weight * _topic_jaccard(leader.profile, cand))
            weights = [math.exp(s) for s in scores]
            chosen = _weighted_sample_without_replacement(
                leader.rng, pool, weights, min(size - 1, len(pool))
            )
            members.extend(chosen)

        team = Team(
            team_id=self._new_team_id(),
            leader_id=leader.agent_id,
            member_ids=members,
            stage=Stage.COLLABORATOR_SELECTION,
            formed_epoch=epoch,
        )
        team.rng = random.Random(stable_hash(self.seed, "team", team.team_id))
        self.teams[team.team_id] = team
        leader.led_team_ids.add(team.team_id)
        if len(leader.led_team_ids) > self.max_led_teams:
            raise AssertionError(f"agent {leader.agent_id} exceeds the led-team cap")
        for member_id in members:
            self.agents[member_id].member_team_ids.add(team.team_id)
        return team

    def finish_team(self, team: Team, decision: str, epoch: int) -> None:
        team.stage = Stage.DONE
        team.decision = decision
        team.decided_epoch = epoch
        leader = self.agents[team.leader_id]
        leader.led_team_ids.discard(team.team_id)
        for member_id in team.member_ids:
            self.agents[member_id].member_team_ids.discard(team.team_id)

    def check_consistency(self) -> None:
        """Hard assertions over team membership bookkeeping."""
        for agent in self.agents.values():
            assert len(agent.led_team_ids) <= self.max_led_teams, agent.agent_id
            for team_id in agent.led_team_ids | agent.member_team_ids:
                team = self.teams[team_id]
                assert agent.agent_id in team.member_ids, (agent.agent_id, team_id)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "memory_cap": self.memory_cap,
            "max_led_teams": self.max_led_teams,
            "team_counter": self._team_counter,
            "agents": {
                aid: {
                    "memory": list(agent.memory),
                    "led_team_ids": sorted(agent.led_team_ids),
                    "member_team_ids": sorted(agent.member_team_ids),
                    "rng_state": _rng_state_to_json(agent.rng),
                    "citation_count": agent.profile.citation_count,
                    "coauthor_ids": sorted(agent.profile.coauthor_ids),
                }
                for aid, agent in self.agents.items()
            },
            "teams": {tid: _team_to_dict(team) for tid, team in self.teams.items()},
        }

    @classmethod
    def from_dict(cls, d: dict, authors: dict[str, AuthorRecord]) -> "Society":
        society = cls(
            {aid: authors[aid] for aid in d["agents"]},
            seed=d["seed"],
            memory_cap=d["memory_cap"],
            max_led_teams=d["max_led_teams"],
        )
        society._team_counter = d["team_counter"]
        for aid, rec in d["agents"].items():
            agent = society.agents[aid]
            agent.memory = deque(rec["memory"], maxlen=society.memory_cap)
            agent.led_team_ids = set(rec["led_team_ids"])
            agent.member_team_ids = set(rec["member_team_ids"])
            agent.rng.setstate(_rng_state_from_json(rec["rng_state"]))
            agent.profile.citation_count = rec["citation_count"]
            agent.profile.coauthor_ids = set(rec["coauthor_ids"])
        for tid, rec in d["teams"].items():
            society.teams[tid] = _team_from_dict(rec)
        return society


def _weighted_sample_without_replacement(
    rng: random.Random, items: list[str], weights: list[float], k: int
) -> list[str]:
    chosen: list[str] = []
    pool = list(items)
    w = list(weights)
    for _ in range(k):
        total = sum(w)
        pick = rng.random() * total
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


def _rng_state_to_json(rng: random.Random) -> list:
    version, internal, gauss_next = rng.getstate()
    return [version, list(internal), gauss_next]


def _rng_state_from_json(state: list) -> tuple:
    version, internal, gauss_next = state
    return (version, tuple(internal), gauss_next)


def _team_to_dict(team: Team) -> dict:
    return {
        "team_id": team.team_id,
        "leader_id": team.leader_id,
        "member_ids": list(team.member_ids),
        "stage": team.stage.value,
        "formed_epoch": team.formed_epoch,
        "draft": {
            "topic": team.draft.topic,
            "idea": team.draft.idea,
            "novelty_note": team.draft.novelty_note,
            "title": team.draft.title,
            "abstract": team.draft.abstract,
        },
        "chosen_refs": list(team.chosen_refs),
        "decision": team.decision,
        "decided_epoch": team.decided_epoch,
        "delays": team.delays,
        "stage_delays": team.stage_delays,
        "rng_state": _rng_state_to_json(team.rng),
    }


def _team_from_dict(d: dict) -> Team:
    team = Team(
        team_id=d["team_id"],
        leader_id=d["leader_id"],
        member_ids=list(d["member_ids"]),
        stage=Stage(d["stage"]),
        formed_epoch=d["formed_epoch"],
        draft=Draft(**d["draft"]),
        chosen_refs=list(d["chosen_refs"]),
        decision=d["decision"],
        decided_epoch=d["decided_epoch"],
        delays=d["delays"],
        stage_delays=d["stage_delays"],
    )
    team.rng.setstate(_rng_state_from_json(d["rng_state"]))
    return team
