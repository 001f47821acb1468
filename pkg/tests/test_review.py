import itertools
import statistics

import pytest

from scisoc.backend import MockBackend
from scisoc.corpus import Corpus, IngestReport
from scisoc.errors import ConfigError, ReviewError
from scisoc.index import build_index
from scisoc.records import AuthorRecord, CorpusSplit
from scisoc.review import (Submission, decide, parse_score, publish_accepted,
                           review_submission, sample_reviewers, ReviewBundle,
                           load_review_template)

from fixtures import ten_paper_reference_db


def make_submission(authors=("a1", "a2"), discipline="Physics", sid="sub-t1"):
    return Submission(
        submission_id=sid, team_id="t1", title="A study",
        abstract="We study things.", author_ids=list(authors),
        cited_paper_ids=["px00"], discipline=discipline, created_epoch=4,
    )


class TestDecide:
    def test_uniform_sixes_accept(self):
        assert decide([6, 6, 6]) == "accept"

    def test_boundary_fives_reject(self):
        assert decide([5, 5, 5]) == "reject"

    def test_mean_five_and_two_thirds_accepts(self):
        assert decide([4, 6, 7]) == "accept"  # mean 5.667

    def test_exhaustive_triples_match_brute_force(self):
        for scores in itertools.product(range(1, 11), repeat=3):
            expected = "accept" if sum(scores) / 3 > 5 else "reject"
            assert decide(list(scores)) == expected

    def test_median_rule(self):
        assert decide([1, 6, 10], rule="median") == "accept"
        assert decide([1, 5, 10], rule="median") == "reject"

    def test_all_rule(self):
        assert decide([6, 6, 6], rule="all") == "accept"
        assert decide([6, 6, 5], rule="all") == "reject"

    def test_unknown_rule_is_a_config_error(self):
        with pytest.raises(ConfigError):
            decide([6, 6, 6], rule="vibes")


class TestParseScore:
    def test_parses_the_score_line(self):
        assert parse_score("blah blah\nOverall Score: 7") == 7

    def test_out_of_range_and_missing_return_none(self):
        assert parse_score("Overall Score: 11") is None
        assert parse_score("no score here") is None


class TestSampleReviewers:
    DISCIPLINES = {f"r{i}": ("Physics" if i < 6 else "Biology") for i in range(10)}

    def test_authors_never_review_themselves(self):
        submission = make_submission(authors=("r0", "r1"))
        for seed in range(50):
            chosen = sample_reviewers(submission, list(self.DISCIPLINES),
                                      self.DISCIPLINES, seed=seed)
            assert not set(chosen) & {"r0", "r1"}
            assert len(chosen) == 3
            assert len(set(chosen)) == 3

    def test_discipline_match_preferred_when_available(self):
        submission = make_submission(authors=("r9",), discipline="Physics")
        chosen = sample_reviewers(submission, list(self.DISCIPLINES),
                                  self.DISCIPLINES, seed=3)
        assert all(self.DISCIPLINES[c] == "Physics" for c in chosen)

    def test_falls_back_to_any_reviewer_when_too_few_match(self):
        submission = make_submission(authors=("r0",), discipline="Art")
        chosen = sample_reviewers(submission, list(self.DISCIPLINES),
                                  self.DISCIPLINES, seed=3)
        assert len(chosen) == 3

    def test_small_pool_is_a_review_error(self):
        submission = make_submission(authors=("r0", "r1"))
        with pytest.raises(ReviewError):
            sample_reviewers(submission, ["r0", "r1", "r2", "r3"],
                             self.DISCIPLINES, seed=0)

    def test_deterministic_for_fixed_seed(self):
        submission = make_submission()
        a = sample_reviewers(submission, list(self.DISCIPLINES), self.DISCIPLINES, seed=9)
        b = sample_reviewers(submission, list(self.DISCIPLINES), self.DISCIPLINES, seed=9)
        assert a == b


class TestReviewSubmission:
    def chat_for(self, backend):
        return lambda prompt, origin: backend.chat(prompt)

    def test_three_scores_and_decision(self):
        backend = MockBackend(seed=2)
        bundle = review_submission(make_submission(), ["r1", "r2", "r3"],
                                   self.chat_for(backend), epoch=9)
        assert len(bundle.scores) == 3
        assert all(1 <= s <= 10 for s in bundle.scores)
        assert bundle.decision == ("accept" if statistics.fmean(bundle.scores) > 5
                                   else "reject")
        assert bundle.decided_epoch == 9

    def test_unparseable_score_reprompts_then_defaults_to_five(self, caplog):
        calls = []

        def broken_chat(prompt, origin):
            calls.append(prompt)
            return "no score in this reply"

        bundle = review_submission(make_submission(), ["r1", "r2", "r3"],
                                   broken_chat, epoch=1)
        assert bundle.scores == [5, 5, 5]
        assert len(calls) == 6  # two attempts per reviewer

    def test_template_carries_the_rubric_scale(self):
        template = load_review_template()
        assert "Overall Score" in template
        assert "Award Quality" in template
        assert "Very Strong Reject" in template


class TestPublish:
    def corpus_with_authors(self):
        authors = {
            aid: AuthorRecord(author_id=aid, display_name=aid, ethnicity="Nordic",
                              affiliations=["Inst"], discipline="Physics")
            for aid in ("a1", "a2", "a3")
        }
        split = CorpusSplit()
        for paper in ten_paper_reference_db().values():
            split.add_reference(paper)
        return Corpus(authors=authors, split=split, report=IngestReport())

    def accepted_bundle(self, sid="sub-t1"):
        return ReviewBundle(sid, ["r1", "r2", "r3"], [8, 7, 6], ["", "", ""],
                            "accept", decided_epoch=17)

    def test_published_paper_gets_epoch_year_and_zero_citations(self, mock_backend):
        corpus = self.corpus_with_authors()
        index = build_index(corpus.reference_db, mock_backend)
        paper = publish_accepted(make_submission(), self.accepted_bundle(),
                                 corpus, index, mock_backend, epoch=17)
        assert paper.year == 17
        assert paper.citation_count == 0
        assert paper.cited_paper_ids == ["px00"]
        assert paper.paper_id in corpus.reference_db

    def test_reference_db_grows_by_exactly_one(self, mock_backend):
        corpus = self.corpus_with_authors()
        index = build_index(corpus.reference_db, mock_backend)
        before = len(corpus.reference_db)
        publish_accepted(make_submission(), self.accepted_bundle(),
                         corpus, index, mock_backend, epoch=3)
        assert len(corpus.reference_db) == before + 1
        assert len(index) == before + 1

    def test_published_paper_is_retrievable_first_by_its_own_embedding(self, mock_backend):
        corpus = self.corpus_with_authors()
        index = build_index(corpus.reference_db, mock_backend)
        paper = publish_accepted(make_submission(), self.accepted_bundle(),
                                 corpus, index, mock_backend, epoch=5)
        results = index.retrieve(mock_backend.embed(paper.embedding_text()), 3)
        assert results[0][0] == paper.paper_id

    def test_coauthor_sets_grow_symmetrically(self, mock_backend):
        corpus = self.corpus_with_authors()
        index = build_index(corpus.reference_db, mock_backend)
        publish_accepted(make_submission(authors=("a1", "a3")), self.accepted_bundle(),
                         corpus, index, mock_backend, epoch=2)
        assert "a3" in corpus.authors["a1"].coauthor_ids
        assert "a1" in corpus.authors["a3"].coauthor_ids

    def test_rejected_bundle_cannot_publish(self, mock_backend):
        corpus = self.corpus_with_authors()
        index = build_index(corpus.reference_db, mock_backend)
        bundle = ReviewBundle("sub-t1", ["r1", "r2", "r3"], [3, 3, 3], ["", "", ""],
                              "reject", decided_epoch=1)
        with pytest.raises(ReviewError):
            publish_accepted(make_submission(), bundle, corpus, index, mock_backend, 1)

    def test_duplicate_publish_is_an_idempotency_error(self, mock_backend):
        corpus = self.corpus_with_authors()
        index = build_index(corpus.reference_db, mock_backend)
        publish_accepted(make_submission(), self.accepted_bundle(),
                         corpus, index, mock_backend, epoch=2)
        with pytest.raises(ReviewError, match="already published"):
            publish_accepted(make_submission(), self.accepted_bundle(),
                             corpus, index, mock_backend, epoch=3)
