"""Peer review of team submissions and indexing of accepted papers.

Each submission is scored by 3 reviewers sampled from the non-author pool
(discipline-matched when enough such reviewers exist). Scores are integers
1..10 parsed from the backend's "Overall Score: <n>" line; the gate is an
aggregate strictly greater than 5, with the aggregation rule (mean, median,
or all-reviewers) configurable. Accepted papers enter the reference database
with the acceptance epoch as their year and a fresh citation counter.
"""

from __future__ import annotations

import logging
import random
import re
import statistics
from dataclasses import dataclass, field
from importlib import resources

from .backend import stable_hash
from .corpus import Corpus
from .errors import ConfigError, ReviewError
from .index import EmbeddingIndex
from .records import PaperRecord

logger = logging.getLogger(__name__)

N_REVIEWERS = 3
ACCEPT_THRESHOLD = 5
SCORE_RANGE = (1, 10)

_SCORE_RE = re.compile(r"Overall Score:\s*(\d+)")


def load_review_template() -> str:
    return (resources.files("scisoc") / "templates" / "review_rubric_v1.txt").read_text(
        encoding="utf-8"
    )


@dataclass
class Submission:
    """A finished draft emitted by the abstract-generation stage."""

    submission_id: str
    team_id: str
    title: str
    abstract: str
    author_ids: list[str]  # leader first
    cited_paper_ids: list[str]
    discipline: str
    created_epoch: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "Submission":
        return cls(**d)


@dataclass
class ReviewBundle:
    submission_id: str
    reviewer_ids: list[str]
    scores: list[int]
    comments: list[str]
    decision: str  # accept | reject
    decided_epoch: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def decide(scores: list[int], rule: str = "mean", threshold: float = ACCEPT_THRESHOLD) -> str:
    """Accept iff the aggregate score strictly exceeds the threshold."""
    if rule == "mean":
        aggregate_ok = statistics.fmean(scores) > threshold
    elif rule == "median":
        aggregate_ok = statistics.median(scores) > threshold
    elif rule == "all":
        aggregate_ok = all(s > threshold for s in scores)
    else:
        raise ConfigError(f"unknown accept rule: {rule!r}")
    return "accept" if aggregate_ok else "reject"


def parse_score(text: str) -> int | None:
    match = _SCORE_RE.search(text)
    if not match:
        return None
    score = int(match.group(1))
    if SCORE_RANGE[0] <= score <= SCORE_RANGE[1]:
        return score
    return None


def sample_reviewers(
    submission: Submission,
    candidate_ids: list[str],
    disciplines: dict[str, str],
    seed: int,
    n_reviewers: int = N_REVIEWERS,
) -> list[str]:
    """Sample reviewers without replacement, excluding all authors.

    Prefers reviewers whose discipline matches the submission when at least
    ``n_reviewers`` such candidates exist.
    """
    authors = set(submission.author_ids)
    eligible = [c for c in candidate_ids if c not in authors]
    if len(eligible) < n_reviewers:
        raise ReviewError(
            f"submission {submission.submission_id}: reviewer pool has "
            f"{len(eligible)} non-authors, need {n_reviewers}"
        )
    matched = [c for c in eligible if disciplines.get(c) == submission.discipline]
    pool = matched if len(matched) >= n_reviewers else eligible
    rng = random.Random(stable_hash(seed, "review", submission.submission_id))
    return rng.sample(sorted(pool), n_reviewers)


def review_submission(
    submission: Submission,
    reviewer_ids: list[str],
    chat,
    epoch: int,
    rule: str = "mean",
    threshold: float = ACCEPT_THRESHOLD,
    template: str | None = None,
) -> ReviewBundle:
    """Collect one scored review per reviewer and derive the decision.

    ``chat`` is a callable (prompt, origin) -> text, typically the inference
    channel. An unparseable score is re-prompted once, then defaults to 5
    with a logged parse failure.
    """
    template = template or load_review_template()
    scores: list[int] = []
    comments: list[str] = []
    for reviewer_id in reviewer_ids:
        prompt = template.format(
            discipline=submission.discipline,
            title=submission.title,
            abstract=submission.abstract,
        ) + f"\nReviewer: {reviewer_id}"
        origin = (submission.team_id, reviewer_id, "PeerReview")
        text = chat(prompt, origin)
        score = parse_score(text)
        if score is None:
            text = chat(prompt + "\nReply again, ending with the Overall Score line.", origin)
            score = parse_score(text)
        if score is None:
            logger.warning("reviewer %s on %s: unparseable score, defaulting to 5",
                           reviewer_id, submission.submission_id)
            score = 5
        scores.append(score)
        comments.append(text)
    return ReviewBundle(
        submission_id=submission.submission_id,
        reviewer_ids=list(reviewer_ids),
        scores=scores,
        comments=comments,
        decision=decide(scores, rule=rule, threshold=threshold),
        decided_epoch=epoch,
    )


def publish_accepted(
    submission: Submission,
    bundle: ReviewBundle,
    corpus: Corpus,
    index: EmbeddingIndex,
    embedder,
    epoch: int,
) -> PaperRecord:
    """Insert an accepted submission into the reference database and index.

    The new record's year is the acceptance epoch and its citation count
    starts at zero (all credit accrues through the ledger). Authors' co-author
    sets gain each other symmetrically.
    """
    if bundle.decision != "accept":
        raise ReviewError(f"submission {submission.submission_id} was not accepted")
    paper_id = f"sim-{submission.submission_id}"
    if paper_id in corpus.reference_db or paper_id in index:
        raise ReviewError(f"submission {submission.submission_id} already published")
    paper = PaperRecord(
        paper_id=paper_id,
        title=submission.title,
        abstract=submission.abstract,
        year=epoch,
        citation_count=0,
        author_ids=list(submission.author_ids),
        cited_paper_ids=list(submission.cited_paper_ids),
        discipline=submission.discipline,
    )
    corpus.add_accepted(paper)
    index.add(paper_id, embedder.embed(paper.embedding_text()))
    for a in submission.author_ids:
        for b in submission.author_ids:
            if a != b and a in corpus.authors and b in corpus.authors:
                corpus.authors[a].coauthor_ids.add(b)
    return paper
