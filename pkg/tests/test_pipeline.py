"""Pipeline stage tests: QFS, hybrid ranking, selection, full composition."""

from dataclasses import replace

import pytest

from chronorag.corpus import SUMMARY_INDEX, Sentence, SentenceOrigin, split_sentences
from chronorag.errors import ConfigError, ProviderError, TransportError
from chronorag.lexical import build_index
from chronorag.pipeline import (
    PipelineConfig,
    RankedPassage,
    ScoredSentence,
    hybrid_rank,
    run_pipeline,
    select_passages,
    summarize_qfs,
)
from chronorag.providers import ScorerMode, StubScorer
from chronorag.question import decompose_rule_based
from chronorag.temporal import CurveParams, classify_constraint, parse_timepoints, temporal_score
from fakes import CrossStubScorer, FakeGenerator, FakeScorer
from oracles import brute_force_pipeline
from synthetic import build_semantic_trap, build_topics


class TestPipelineConfig:
    def test_defaults_are_valid(self):
        cfg = PipelineConfig()
        assert (cfg.n_retrieve, cfg.n_kw_passages, cfg.qfs_k) == (1000, 100, 5)
        assert (cfg.n_kw_sentences, cfg.top_out) == (200, 20)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"top_out": 0},
            {"n_kw_sentences": 10, "top_out": 20},
            {"n_retrieve": 50, "n_kw_passages": 100},
            {"qfs_k": 101},
            {"qfs_k": -1},
            {"n_kw_passages": 0},
        ],
    )
    def test_invalid_cardinalities_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            PipelineConfig(**kwargs)


class TestScoredSentence:
    def _sentence(self):
        return Sentence("p1", 0, "text", SentenceOrigin.ORIGINAL_SPLIT)

    def test_exact_product_enforced(self):
        ScoredSentence(self._sentence(), 0.5, 0.4, 0.5 * 0.4)
        with pytest.raises(ValueError):
            ScoredSentence(self._sentence(), 0.5, 0.4, 0.21)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ScoredSentence(self._sentence(), float("nan"), 1.0, float("nan"))


class TestSummarizeQfs:
    def test_summary_sentence_shape(self, corpus20):
        passage = corpus20.by_id["topmodel-24"]
        gen = FakeGenerator(reply="Kyla Coleman won the competition in 2018.")
        summary = summarize_qfs(passage, "Who won America's Next Top Model?", gen)
        assert summary == Sentence(
            "topmodel-24",
            SUMMARY_INDEX,
            "Kyla Coleman won the competition in 2018.",
            SentenceOrigin.SUMMARY,
        )
        assert summary.uid == "topmodel-24::-1"

    def test_prompt_is_filled(self, corpus20):
        passage = corpus20.by_id["topmodel-24"]
        gen = FakeGenerator(reply="None")
        summarize_qfs(passage, "Who won America's Next Top Model?", gen)
        prompt = gen.calls[0]
        assert passage.title in prompt
        assert passage.text in prompt
        assert "Who won America's Next Top Model?" in prompt
        assert "{title}" not in prompt and "{normalized question}" not in prompt

    @pytest.mark.parametrize("reply", ["None", "none", " NONE \n", ""])
    def test_none_reply_means_absent(self, corpus20, reply):
        passage = corpus20.by_id["grandnational-2019"]
        assert summarize_qfs(passage, "Who won the Grand National?", FakeGenerator(reply=reply)) is None

    def test_close_tag_stripped(self, corpus20):
        passage = corpus20.by_id["topmodel-24"]
        gen = FakeGenerator(reply="Kyla Coleman won in 2018.\n</Summarization>\njunk")
        summary = summarize_qfs(passage, "Who won?", gen)
        assert summary.text == "Kyla Coleman won in 2018."

    def test_generator_failure_is_absent(self, corpus20):
        passage = corpus20.by_id["topmodel-24"]
        gen = FakeGenerator(exc=TransportError("down"))
        assert summarize_qfs(passage, "Who won?", gen) is None


def _sentences(corpus, pids):
    out = []
    for pid in pids:
        out.extend(split_sentences(corpus.by_id[pid]))
    return out


class TestHybridRank:
    def test_no_constraint_equals_semantic_order(self, corpus20):
        dq = decompose_rule_based("Who won America's Next Top Model?")
        assert dq.constraint is None
        sentences = _sentences(corpus20, ["topmodel-24", "topmodel-22", "kentucky-2012"])
        scored = hybrid_rank(sentences, dq, StubScorer(), CurveParams())
        assert all(sc.temporal == 1.0 for sc in scored)
        semantics = [sc.semantic for sc in scored]
        assert semantics == sorted(semantics, reverse=True)
        assert all(sc.final == sc.semantic for sc in scored)

    def test_equal_semantic_resolved_by_temporal(self):
        dq = decompose_rule_based("Which team won the title by May 26, 2021?")
        s_near = Sentence("a", 0, "The title was won in 2018.", SentenceOrigin.ORIGINAL_SPLIT)
        s_far = Sentence("b", 0, "The title was won in 2009.", SentenceOrigin.ORIGINAL_SPLIT)
        scorer = FakeScorer(lambda q, t: 0.8)
        scored = hybrid_rank([s_far, s_near], dq, scorer, CurveParams())
        assert [sc.sentence.passage_id for sc in scored] == ["a", "b"]
        assert scored[0].temporal > scored[1].temporal
        cls = classify_constraint(dq.constraint)
        params = CurveParams()
        assert scored[0].temporal == temporal_score(cls, params, parse_timepoints(s_near.text))
        assert scored[1].temporal == temporal_score(cls, params, parse_timepoints(s_far.text))

    def test_full_ordering_matches_independent_products(self, corpus20):
        dq = decompose_rule_based("Who won the latest NCAA championship by April 2013?")
        sentences = _sentences(corpus20, [p.id for p in corpus20][:15])
        assert len(sentences) >= 30
        scorer = StubScorer()
        params = CurveParams()
        scored = hybrid_rank(sentences, dq, scorer, params, passage_order=corpus20.rank)

        cls = classify_constraint(dq.constraint)
        pool_rank = {s.uid: i for i, s in enumerate(sentences)}
        expected = []
        for s in sentences:
            sem = max(0.0, scorer.score(dq.main_content, s.text))
            t = temporal_score(cls, params, parse_timepoints(s.text))
            expected.append((s.uid, sem * t, sem))
        expected.sort(
            key=lambda e: (-e[1], -e[2], corpus20.rank[e[0].split("::")[0]], pool_rank[e[0]])
        )
        assert [sc.sentence.uid for sc in scored] == [uid for uid, _, _ in expected]
        assert [sc.final for sc in scored] == [f for _, f, _ in expected]

    def test_cross_encoder_min_max(self):
        dq = decompose_rule_based("Who won the cup?")
        sents = [
            Sentence("a", 0, "alpha", SentenceOrigin.ORIGINAL_SPLIT),
            Sentence("b", 0, "beta", SentenceOrigin.ORIGINAL_SPLIT),
            Sentence("c", 0, "gamma", SentenceOrigin.ORIGINAL_SPLIT),
        ]
        raw = {"alpha": 10.0, "beta": 30.0, "gamma": 20.0}
        scorer = FakeScorer(lambda q, t: raw[t], mode=ScorerMode.CROSS_ENCODER)
        scored = hybrid_rank(sents, dq, scorer, CurveParams())
        by_pid = {sc.sentence.passage_id: sc.semantic for sc in scored}
        assert by_pid == {"a": 0.0, "b": 1.0, "c": 0.5}

    def test_cross_encoder_all_equal_scores_one(self):
        dq = decompose_rule_based("Who won the cup?")
        sents = [Sentence(p, 0, p, SentenceOrigin.ORIGINAL_SPLIT) for p in ("a", "b")]
        scorer = FakeScorer(lambda q, t: 4.2, mode=ScorerMode.CROSS_ENCODER)
        scored = hybrid_rank(sents, dq, scorer, CurveParams())
        assert [sc.semantic for sc in scored] == [1.0, 1.0]
        # Stable on input order for full ties.
        assert [sc.sentence.passage_id for sc in scored] == ["a", "b"]

    def test_positive_rescaling_keeps_order(self, corpus20):
        dq = decompose_rule_based("Who won the latest NCAA championship by April 2013?")
        sentences = _sentences(corpus20, [p.id for p in corpus20][:10])
        base = StubScorer()

        for mode in (ScorerMode.BI_ENCODER, ScorerMode.CROSS_ENCODER):
            plain = FakeScorer(lambda q, t: base.score(q, t), mode=mode)
            scaled = FakeScorer(lambda q, t: 7.25 * base.score(q, t), mode=mode)
            order_plain = [
                sc.sentence.uid for sc in hybrid_rank(sentences, dq, plain, CurveParams())
            ]
            order_scaled = [
                sc.sentence.uid for sc in hybrid_rank(sentences, dq, scaled, CurveParams())
            ]
            assert order_plain == order_scaled, mode

    def test_empty_input(self):
        dq = decompose_rule_based("Who won?")
        assert hybrid_rank([], dq, StubScorer(), CurveParams()) == []


class TestSelectPassages:
    def _scored(self, pid, idx, sem, temp, text="s"):
        s = Sentence(pid, idx, text, SentenceOrigin.ORIGINAL_SPLIT)
        return ScoredSentence(s, sem, temp, sem * temp)

    def test_dedup_keeps_passage_max(self):
        scored = [
            self._scored("p1", 0, 0.9, 1.0),
            self._scored("p1", 1, 0.8, 1.0),
            self._scored("p1", 2, 0.1, 1.0),
        ]
        out = select_passages(scored, 20)
        assert len(out) == 1
        assert out[0].passage_id == "p1"
        assert out[0].score == 0.9
        assert out[0].best_sentence.index == 0
        assert out[0].components == (0.9, 1.0)

    def test_summary_can_carry_the_passage(self):
        summary = Sentence("p1", SUMMARY_INDEX, "summary text", SentenceOrigin.SUMMARY)
        scored = [
            ScoredSentence(summary, 0.9, 1.0, 0.9),
            self._scored("p1", 0, 0.5, 1.0),
            self._scored("p2", 0, 0.7, 1.0),
        ]
        out = select_passages(scored, 20)
        assert out[0].passage_id == "p1"
        assert out[0].best_sentence.origin is SentenceOrigin.SUMMARY
        assert out[1].passage_id == "p2"

    def test_truncates_to_top_out(self):
        scored = [self._scored(f"p{i}", 0, 1.0 - i / 10, 1.0) for i in range(8)]
        assert [rp.passage_id for rp in select_passages(scored, 3)] == ["p0", "p1", "p2"]


QFS_REPLIES = {
    "topmodel-24": "Kyla Coleman won America's Next Top Model cycle 24 in 2018.",
    "kentucky-2012": "Kentucky won the NCAA championship in 2012.",
}


def _routing_generator(corpus):
    """QFS replies keyed by passage; everything else unusable (forces fallback)."""

    def route(prompt):
        for pid, reply in QFS_REPLIES.items():
            passage = corpus.by_id.get(pid)
            if passage is not None and passage.text in prompt:
                return reply
        if "<Summarization>" in prompt:
            return "None"
        return "unusable reply"

    return FakeGenerator(func=route)


class TestRunPipeline:
    def test_trace_cardinalities_and_subsets(self, corpus20):
        index = build_index(corpus20)
        result = run_pipeline(
            "Who won the latest NCAA championship by April 2013?",
            corpus20,
            index,
            StubScorer(),
            config=PipelineConfig(),
            trace=True,
        )
        stages = {t.stage: t for t in result.trace}
        assert len(stages["retrieve"].ids) <= 1000
        assert len(stages["keyword_passages"].ids) <= 100
        assert len(stages["keyword_sentences"].ids) <= 200
        assert len(stages["selected"].ids) <= 20

        assert set(stages["keyword_passages"].ids) <= set(stages["retrieve"].ids)
        assert set(stages["semantic_passages"].ids) == set(stages["keyword_passages"].ids)
        assert set(stages["keyword_sentences"].ids) <= set(stages["sentence_pool"].ids)
        assert set(stages["hybrid_sentences"].ids) == set(stages["keyword_sentences"].ids)
        owners = {uid.rsplit("::", 1)[0] for uid in stages["hybrid_sentences"].ids}
        assert set(stages["selected"].ids) <= owners
        assert [rp.passage_id for rp in result.ranked] == stages["selected"].ids
        # Output passages come from the first retrieval stage only.
        assert {rp.passage_id for rp in result.ranked} <= set(stages["retrieve"].ids)

    def test_empty_retrieval_is_empty_result(self, corpus20):
        index = build_index(corpus20)
        result = run_pipeline("Xylophone?", corpus20, index, StubScorer(), trace=True)
        assert result.ranked == []
        assert result.trace[0].ids == []

    def test_no_generator_means_no_summaries(self, corpus20):
        index = build_index(corpus20)
        result = run_pipeline(
            "Who won the latest NCAA championship by April 2013?",
            corpus20,
            index,
            StubScorer(),
            trace=True,
        )
        pool = next(t for t in result.trace if t.stage == "sentence_pool")
        assert all("::-1" not in uid for uid in pool.ids)

    def test_qfs_zero_disables_summaries(self, corpus20):
        index = build_index(corpus20)
        gen = _routing_generator(corpus20)
        dq = decompose_rule_based("Who won the latest NCAA championship by April 2013?")
        result = run_pipeline(
            "",
            corpus20,
            index,
            StubScorer(),
            generator=gen,
            config=PipelineConfig(qfs_k=0),
            decomposed=dq,
            trace=True,
        )
        pool = next(t for t in result.trace if t.stage == "sentence_pool")
        assert all("::-1" not in uid for uid in pool.ids)

    def test_summaries_only_for_semantic_top_k(self, corpus20):
        index = build_index(corpus20)
        gen = _routing_generator(corpus20)
        dq = decompose_rule_based("Who won the latest America's Next Top Model by May 8, 2021?")
        result = run_pipeline(
            "",
            corpus20,
            index,
            StubScorer(),
            generator=gen,
            config=PipelineConfig(qfs_k=3),
            decomposed=dq,
            trace=True,
        )
        stages = {t.stage: t for t in result.trace}
        top3 = stages["semantic_passages"].ids[:3]
        summary_owners = [
            uid.rsplit("::", 1)[0]
            for uid in stages["sentence_pool"].ids
            if uid.endswith("::-1")
        ]
        assert set(summary_owners) <= set(top3)
        assert set(summary_owners) <= set(QFS_REPLIES)

    def test_summarization_failure_never_aborts(self, corpus20):
        index = build_index(corpus20)
        gen = FakeGenerator(exc=TransportError("down"))
        dq = decompose_rule_based("Who won the latest NCAA championship by April 2013?")
        result = run_pipeline(
            "", corpus20, index, StubScorer(), generator=gen, decomposed=dq
        )
        assert result.ranked

    def test_scorer_failure_propagates(self, corpus20):
        index = build_index(corpus20)

        def boom(query, text):
            raise TransportError("scorer down")

        with pytest.raises(ProviderError):
            run_pipeline(
                "Who won the latest NCAA championship by April 2013?",
                corpus20,
                index,
                FakeScorer(boom),
            )

    def test_constraint_stripped_baseline_has_unit_temporal(self, corpus20):
        index = build_index(corpus20)
        dq = decompose_rule_based("Who won the latest NCAA championship by April 2013?")
        baseline = run_pipeline(
            "", corpus20, index, StubScorer(), decomposed=replace(dq, constraint=None)
        )
        assert baseline.ranked
        assert all(rp.temporal == 1.0 for rp in baseline.ranked)
        assert all(rp.score == rp.semantic for rp in baseline.ranked)

    def test_deterministic_across_runs(self, corpus20):
        index = build_index(corpus20)
        question = "Who won the latest NCAA championship by April 2013?"
        first = run_pipeline(question, corpus20, index, StubScorer(), trace=True)
        second = run_pipeline(question, corpus20, index, StubScorer(), trace=True)
        assert first == second


ORACLE_QUERIES = [
    "Who won the latest NCAA championship by April 2013?",
    "Who won the latest America's Next Top Model by May 8, 2021?",
    "Which country hosted the Olympics between 1994 and 2004?",
    "Who won the World Cup after 2010?",
    "Which school did Marshall Sahlins go to from 1951 to 1952?",
    "Who won the first Super Bowl?",
    "Which team won the NBA championship?",
]


class TestOracleEquivalence:
    @pytest.mark.parametrize("question", ORACLE_QUERIES)
    def test_corpus20_matches_oracle(self, corpus20, question):
        index = build_index(corpus20)
        scorer = StubScorer()
        cfg = PipelineConfig(n_retrieve=20, n_kw_passages=12, qfs_k=0, n_kw_sentences=15, top_out=8)
        dq = decompose_rule_based(question)
        result = run_pipeline("", corpus20, index, scorer, config=cfg, decomposed=dq)
        got = [(rp.passage_id, rp.score) for rp in result.ranked]
        expected = brute_force_pipeline(
            corpus20, dq, scorer, cfg.curve,
            n_retrieve=20, n_kw_passages=12, n_kw_sentences=15, top_out=8,
        )
        assert got == expected

    def test_corpus20_with_summaries_matches_oracle(self, corpus20):
        index = build_index(corpus20)
        scorer = StubScorer()
        gen = _routing_generator(corpus20)
        cfg = PipelineConfig(n_retrieve=20, n_kw_passages=12, qfs_k=4, n_kw_sentences=18, top_out=8)
        dq = decompose_rule_based("Who won the latest America's Next Top Model by May 8, 2021?")
        result = run_pipeline(
            "", corpus20, index, scorer, generator=gen, config=cfg, decomposed=dq
        )
        got = [(rp.passage_id, rp.score) for rp in result.ranked]
        expected = brute_force_pipeline(
            corpus20, dq, scorer, cfg.curve,
            n_retrieve=20, n_kw_passages=12, n_kw_sentences=18, top_out=8,
            qfs_k=4, summarize=lambda p: QFS_REPLIES.get(p.id),
        )
        assert got == expected

    def test_cross_encoder_matches_oracle(self, corpus20):
        index = build_index(corpus20)
        scorer = CrossStubScorer()
        cfg = PipelineConfig(n_retrieve=20, n_kw_passages=12, qfs_k=0, n_kw_sentences=15, top_out=8)
        dq = decompose_rule_based("Who won the latest NCAA championship by April 2013?")
        result = run_pipeline("", corpus20, index, scorer, config=cfg, decomposed=dq)
        got = [(rp.passage_id, rp.score) for rp in result.ranked]
        expected = brute_force_pipeline(
            corpus20, dq, scorer, cfg.curve,
            n_retrieve=20, n_kw_passages=12, n_kw_sentences=15, top_out=8,
        )
        assert got == expected

    def test_synthetic_topics_match_oracle(self):
        corpus, queries = build_topics()
        index = build_index(corpus)
        scorer = StubScorer()
        cfg = PipelineConfig()
        for query in queries[:10]:
            dq = decompose_rule_based(query["question"])
            result = run_pipeline("", corpus, index, scorer, config=cfg, decomposed=dq)
            got = [(rp.passage_id, rp.score) for rp in result.ranked]
            expected = brute_force_pipeline(
                corpus, dq, scorer, cfg.curve,
                n_retrieve=1000, n_kw_passages=100, n_kw_sentences=200, top_out=20,
            )
            assert got == expected, query["id"]


class TestTemporalLift:
    def test_semantic_trap_gold_rises_to_top(self):
        corpus, question, gold_id = build_semantic_trap()
        index = build_index(corpus)
        result = run_pipeline(question, corpus, index, StubScorer(), trace=True)
        stages = {t.stage: t for t in result.trace}
        semantic_rank = stages["semantic_passages"].ids.index(gold_id)
        assert semantic_rank >= 40
        top5 = [rp.passage_id for rp in result.ranked[:5]]
        assert gold_id in top5
        semantic_top1 = stages["semantic_passages"].ids[0]
        ranked_ids = [rp.passage_id for rp in result.ranked]
        assert ranked_ids.index(gold_id) < ranked_ids.index(semantic_top1)

    def test_single_topic_baseline_vs_hybrid(self):
        corpus, queries = build_topics()
        index = build_index(corpus)
        scorer = StubScorer()
        query = queries[0]
        dq = decompose_rule_based(query["question"])

        hybrid = run_pipeline("", corpus, index, scorer, decomposed=dq)
        baseline = run_pipeline(
            "", corpus, index, scorer, decomposed=replace(dq, constraint=None)
        )
        gold = query["gold_evidence"][0]
        assert hybrid.ranked[0].passage_id == gold
        assert baseline.ranked[0].passage_id != gold
