"""Walk one question through every retrieval stage and print what happened.

Runs fully offline against the small fixture corpus using the built-in
hashed bag-of-words scorer, so the output is deterministic.

Usage: python3 demos/pipeline_walkthrough.py
"""

from pathlib import Path

from chronorag import (
    PipelineConfig,
    StubScorer,
    build_index,
    classify_constraint,
    decompose_rule_based,
    load_corpus,
    run_pipeline,
)

REPO = Path(__file__).resolve().parents[1]
QUESTION = "Who won the latest America's Next Top Model by May 8, 2021?"


def main() -> None:
    corpus = load_corpus(REPO / "tests" / "data" / "corpus20.jsonl")
    index = build_index(corpus)
    scorer = StubScorer()

    dq = decompose_rule_based(QUESTION)
    print(f"question:    {dq.original}")
    print(f"main content: {dq.main_content}")
    print(f"keywords:    {', '.join(dq.keywords)}")
    if dq.constraint is not None:
        cls = classify_constraint(dq.constraint)
        print(f"constraint:  {dq.constraint.raw_text!r} -> {cls.kind.value} at {cls.a1}")
    print()

    config = PipelineConfig(n_retrieve=20, n_kw_passages=12, n_kw_sentences=30, top_out=5)
    result = run_pipeline(QUESTION, corpus, index, scorer, config=config, trace=True)

    print("stage sizes:")
    for stage in result.trace:
        print(f"  {stage.stage:<18} {len(stage.ids)}")
    print()

    print("final ranking (semantic x temporal = final):")
    for rank, rp in enumerate(result.ranked, start=1):
        print(
            f"  {rank}. {rp.passage_id:<16} "
            f"{rp.semantic:.3f} x {rp.temporal:.3f} = {rp.score:.3f}"
        )
        print(f"     {rp.best_sentence.text}")


if __name__ == "__main__":
    main()
