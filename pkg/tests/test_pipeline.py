import pytest

from scisoc.backend import MockBackend
from scisoc.errors import BackendError, DataError
from scisoc.index import CitationLedger, build_index
from scisoc.pipeline import (DirectCaller, PipelineSettings, advance_team,
                             assess_novelty, generate_abstract, generate_idea)
from scisoc.review import ReviewBundle
from scisoc.society import Stage

from fixtures import ten_paper_reference_db, twenty_agent_society


class FlakyBackend:
    """Raises on scripted call indices (1-based) to inject stage delays."""

    mode = "mock"

    def __init__(self, inner, fail_calls=frozenset()):
        self.inner = inner
        self.fail_calls = set(fail_calls)
        self.calls = 0

    def _tick(self):
        self.calls += 1
        if self.calls in self.fail_calls:
            raise BackendError(f"injected failure on call {self.calls}")

    def chat(self, prompt):
        self._tick()
        return self.inner.chat(prompt)

    def embed(self, text):
        self._tick()
        return self.inner.embed(text)


def fresh_team(society, size=3, leader="m02", epoch=0):
    return society.select_collaborators(society.agent(leader), size, epoch=epoch)


def run_stages_until(team, society, index, caller, target_stage, settings=None,
                     start_epoch=1):
    settings = settings or PipelineSettings()
    epoch = start_epoch
    outcomes = []
    while team.stage is not target_stage:
        outcomes.append(advance_team(team, society, index, caller, epoch, settings))
        epoch += 1
    return outcomes, epoch


@pytest.fixture()
def env(mock_backend):
    society = twenty_agent_society()
    index = build_index(ten_paper_reference_db(), mock_backend)
    return society, index, DirectCaller(mock_backend)


class TestAdvance:
    def test_done_team_is_a_no_op(self, env):
        society, index, caller = env
        team = fresh_team(society)
        society.finish_team(team, "rejected", 1)
        outcome = advance_team(team, society, index, caller, 5)
        assert outcome.stage is Stage.DONE
        assert outcome.action is None

    def test_stage_sequence_is_a_prefix_of_the_canonical_order(self, env):
        society, index, caller = env
        team = fresh_team(society)
        seen = []
        epoch = 1
        while team.stage not in (Stage.PEER_REVIEW, Stage.DONE):
            outcome = advance_team(team, society, index, caller, epoch)
            seen.append(outcome.stage.value)
            epoch += 1
        assert seen == ["CollaboratorSelection", "TopicDiscussion", "IdeaGeneration",
                        "NoveltyAssessment", "AbstractGeneration"]

    def test_six_epoch_accounting_without_delays(self, env):
        society, index, caller = env
        team = fresh_team(society, epoch=0)
        epoch = 1
        decided_epoch = None
        review_fn = lambda sub, ep: ReviewBundle(sub.submission_id, ["r1", "r2", "r3"],
                                                 [7, 7, 7], ["", "", ""], "accept", ep)
        submission = None
        while decided_epoch is None:
            outcome = advance_team(team, society, index, caller, epoch,
                                   submission=submission, review_fn=review_fn)
            if outcome.submission is not None:
                submission = outcome.submission
            if outcome.review is not None:
                decided_epoch = outcome.review.decided_epoch
            epoch += 1
        assert decided_epoch - team.formed_epoch == 6

    @pytest.mark.parametrize("delays", [1, 2, 3])
    def test_delays_extend_the_schedule_exactly(self, mock_backend, delays):
        society = twenty_agent_society()
        index = build_index(ten_paper_reference_db(), mock_backend)
        # Fail the first `delays` calls: topic-stage utterances, one per epoch.
        flaky = FlakyBackend(mock_backend, fail_calls=set(range(2, 2 + delays)))
        caller = DirectCaller(flaky)
        team = fresh_team(society, size=1, epoch=0)
        review_fn = lambda sub, ep: ReviewBundle(sub.submission_id, ["r1", "r2", "r3"],
                                                 [7, 7, 7], ["", "", ""], "accept", ep)
        epoch = 1
        submission = None
        decided_epoch = None
        while decided_epoch is None:
            outcome = advance_team(team, society, index, caller, epoch,
                                   submission=submission, review_fn=review_fn)
            if outcome.submission is not None:
                submission = outcome.submission
            if outcome.review is not None:
                decided_epoch = outcome.review.decided_epoch
            epoch += 1
        assert team.delays == delays
        assert decided_epoch - team.formed_epoch == 6 + delays

    def test_delayed_stage_is_retried_not_skipped(self, mock_backend):
        society = twenty_agent_society()
        index = build_index(ten_paper_reference_db(), mock_backend)
        flaky = FlakyBackend(mock_backend, fail_calls={1})
        caller = DirectCaller(flaky)
        team = fresh_team(society, size=1)
        outcome = advance_team(team, society, index, caller, 1)
        assert outcome.delayed and team.stage is Stage.COLLABORATOR_SELECTION
        outcome = advance_team(team, society, index, caller, 2)
        assert not outcome.delayed and team.stage is Stage.TOPIC_DISCUSSION

    def test_exhausted_retry_budget_aborts(self, mock_backend):
        society = twenty_agent_society()
        index = build_index(ten_paper_reference_db(), mock_backend)
        flaky = FlakyBackend(mock_backend, fail_calls={1, 2, 3, 4})
        caller = DirectCaller(flaky)
        team = fresh_team(society, size=1)
        settings = PipelineSettings(retry_budget=3)
        outcomes = [advance_team(team, society, index, caller, e, settings)
                    for e in range(1, 5)]
        assert [o.delayed for o in outcomes] == [True] * 4
        assert outcomes[-1].aborted

    def test_memory_pushes_cover_all_members(self, env):
        society, index, caller = env
        team = fresh_team(society, size=4)
        outcome = advance_team(team, society, index, caller, 1)
        assert {a for a, _ in outcome.memory_pushes} == set(team.member_ids)


class TestIdeaGeneration:
    def prepared_team(self, society, index, caller, size=3):
        team = fresh_team(society, size=size)
        advance_team(team, society, index, caller, 1)
        advance_team(team, society, index, caller, 2)
        assert team.stage is Stage.IDEA_GENERATION
        return team

    def test_refs_clamped_by_index_size(self, mock_backend):
        society = twenty_agent_society()
        small_db = dict(list(ten_paper_reference_db().items())[:4])
        index = build_index(small_db, mock_backend)
        caller = DirectCaller(mock_backend)
        team = self.prepared_team(society, index, caller)
        outcome = generate_idea(team, society, index, caller, 3,
                                PipelineSettings(max_refs=9))
        assert 0 < len(outcome.citation_refs) <= 4

    def test_idea_text_contains_topic_tokens(self, env):
        society, index, caller = env
        team = self.prepared_team(society, index, caller)
        outcome = generate_idea(team, society, index, caller, 3)
        topic_tokens = {t for t in team.draft.topic.split() if len(t) >= 4}
        response_tokens = set(outcome.action.response.split())
        assert topic_tokens
        assert topic_tokens & response_tokens

    def test_refs_match_brute_force_cosine_topk(self, env):
        society, index, caller = env
        team = self.prepared_team(society, index, caller)
        outcome = generate_idea(team, society, index, caller, 3)
        query = caller.embed(f"{team.draft.topic}\n{team.draft.idea}", None)
        expected = [pid for pid, _ in index.retrieve(query, PipelineSettings().max_refs)]
        assert outcome.citation_refs == expected

    def test_refs_are_deduplicated_and_capped(self, env):
        society, index, caller = env
        team = self.prepared_team(society, index, caller)
        outcome = generate_idea(team, society, index, caller, 3)
        assert len(outcome.citation_refs) == len(set(outcome.citation_refs))
        assert len(outcome.citation_refs) <= 9

    def test_missing_topic_is_an_error(self, env):
        society, index, caller = env
        team = fresh_team(society)
        with pytest.raises(DataError, match="topic"):
            generate_idea(team, society, index, caller, 1)

    def test_empty_index_gives_zero_refs(self, mock_backend):
        society = twenty_agent_society()
        index = build_index(ten_paper_reference_db(), mock_backend)
        caller = DirectCaller(mock_backend)
        team = self.prepared_team(society, index, caller)
        from scisoc.index import EmbeddingIndex
        empty = EmbeddingIndex(dim=16)
        outcome = generate_idea(team, society, empty, caller, 3)
        assert outcome.citation_refs == []


class TestNovelty:
    def test_novelty_retrieves_but_never_credits_citations(self, env):
        society, index, caller = env
        team = fresh_team(society)
        ledger = CitationLedger()
        epoch = 1
        while team.stage is not Stage.NOVELTY_ASSESSMENT:
            outcome = advance_team(team, society, index, caller, epoch)
            if outcome.citation_refs:
                ledger.record(epoch, team.team_id, outcome.citation_refs, index)
            epoch += 1
        before = ledger.total_delta()
        outcome = assess_novelty(team, society, index, caller, epoch)
        assert outcome.action.refs_used  # it did retrieve neighbors
        assert outcome.citation_refs == []  # but earns no citation credit
        assert ledger.total_delta() == before

    def test_missing_idea_is_a_precondition_error(self, env):
        society, index, caller = env
        team = fresh_team(society)
        with pytest.raises(DataError, match="idea"):
            assess_novelty(team, society, index, caller, 1)


class TestAbstract:
    def finished_team(self, society, index, caller):
        team = fresh_team(society, size=3)
        epoch = 1
        while team.stage is not Stage.ABSTRACT_GENERATION:
            advance_team(team, society, index, caller, epoch)
            epoch += 1
        return team, epoch

    def test_authors_lead_with_the_leader(self, env):
        society, index, caller = env
        team, epoch = self.finished_team(society, index, caller)
        outcome = generate_abstract(team, society, caller, epoch)
        assert outcome.submission.author_ids[0] == team.leader_id
        assert outcome.submission.author_ids == team.member_ids

    def test_cited_list_equals_accumulated_idea_refs(self, env):
        society, index, caller = env
        team, epoch = self.finished_team(society, index, caller)
        outcome = generate_abstract(team, society, caller, epoch)
        assert outcome.submission.cited_paper_ids == team.chosen_refs

    def test_discipline_is_the_leaders(self, env):
        society, index, caller = env
        team, epoch = self.finished_team(society, index, caller)
        outcome = generate_abstract(team, society, caller, epoch)
        assert outcome.submission.discipline == \
               society.agent(team.leader_id).profile.discipline

    def test_preconditions(self, env):
        society, index, caller = env
        team = fresh_team(society)
        with pytest.raises(DataError):
            generate_abstract(team, society, caller, 1)


class TestStageActionInvariants:
    def test_refs_used_only_in_idea_and_novelty(self, env):
        society, index, caller = env
        team = fresh_team(society, size=2)
        epoch = 1
        while team.stage is not Stage.PEER_REVIEW:
            outcome = advance_team(team, society, index, caller, epoch)
            if outcome.action.stage in ("IdeaGeneration", "NoveltyAssessment"):
                assert outcome.action.refs_used
            else:
                assert outcome.action.refs_used == []
            assert len(outcome.action.refs_used) <= 9
            epoch += 1

    def test_settings_reject_out_of_range_max_refs(self):
        with pytest.raises(DataError):
            PipelineSettings(max_refs=10)
        with pytest.raises(DataError):
            PipelineSettings(max_refs=0)
