"""Regenerates the planted 10-sample metric fixture.

Every rank below is chosen by hand; the golden report values follow from
them by simple fractions (see report_golden.json):

  answer text planted at ranks 1,1,1,1,3,3,7,7,15,absent
    -> AR@1 4/10, AR@5 6/10, AR@10 8/10, AR@20 9/10
  gold evidence planted at ranks 1,1,3,7,12,20,absent,absent (8 eligible)
    -> ER@1 2/8, ER@5 3/8, ER@10 4/8, ER@20 6/8
  predictions: five exact, one alternative-exact, one half-overlap (F1 1/2),
  two disjoint, one empty -> EM 6/10, F1 6.5/10, unanswered 1

Run it from this directory: python3 make_fixture.py
"""

import json
from pathlib import Path

HERE = Path(__file__).parent

ANSWER_TEXTS = {
    "a01": ("Northern Expedition", "Violet Harkness led the northern expedition in 1903."),
    "a02": ("Meridian Accord", "Delegates signed the Meridian Accord at the lakeside hall."),
    "a03": ("Thornfield Abbey", "Thornfield Abbey stands on a hill above the valley."),
    "a04": ("District Merger", "The council merged the districts in 2012-2013 after a referendum."),
    "a05": ("Relay Champions", "Ivor Callum anchored the winning relay team."),
    "a06": ("Delayed Games", "The delayed games finally opened in 2020 to empty stands."),
    "a07": ("Harbor Towns", "Quill Harbor exports timber and salted fish."),
    "a08": ("River Fords", "Sable Crossing floods every spring."),
    "a09": ("City Gates", "Juniper Gate guards the eastern road."),
}

# (sample id, answers, answer passage + rank, evidence ids + rank, prediction)
# q01 and q02 plant answer and evidence at the same rank, so their gold
# evidence id is the answer passage itself.
PLAN = [
    ("q01", "Violet Harkness", "a01", 1, ["a01"], 1, "Violet Harkness."),
    ("q02", "Meridian Accord", "a02", 1, ["a02", "g02b"], 1, "the Meridian Accord"),
    ("q03", "Thornfield Abbey", "a03", 1, ["g03"], 3, "Thornfield Abbey"),
    ("q04", "2012 | 2013 | 2012-2013", "a04", 1, ["g04"], 7, "2013"),
    ("q05", "Ivor Callum", "a05", 3, ["g05"], 12, "Ivor Callum"),
    ("q06", "2020", "a06", 3, ["g06"], 20, "May 20, 2020"),
    ("q07", "Quill Harbor", "a07", 7, ["g07"], None, "completely unrelated reply"),
    ("q08", "Sable Crossing", "a08", 7, ["g08"], None, "no idea"),
    ("q09", "Juniper Gate", "a09", 15, [], None, ""),
    ("q10", "Windmere Pact", None, None, [], None, "Windmere Pact"),
]


def main() -> None:
    passages = []
    for i in range(1, 21):
        passages.append({
            "id": f"f{i:02d}",
            "title": f"Reference {i}",
            "text": f"General reference material with no dated events, entry {i}.",
        })
    for pid, (title, text) in ANSWER_TEXTS.items():
        passages.append({"id": pid, "title": title, "text": text})
    for pid in ["g02b", "g03", "g04", "g05", "g06", "g07", "g08"]:
        passages.append({
            "id": pid,
            "title": f"Evidence {pid}",
            "text": f"Supporting notes filed under {pid}.",
        })

    samples = []
    run = []
    predictions = {}
    for qid, answers, a_pid, a_rank, gold, g_rank, pred in PLAN:
        samples.append({
            "id": qid,
            "question": f"Placeholder question for {qid}?",
            "answers": answers,
            "gold_evidence": gold,
            "source": "other",
            "perturbed": False,
        })
        planted = {}
        if a_rank is not None:
            planted[a_rank] = a_pid
        if g_rank is not None:
            planted[g_rank] = gold[0]
        fillers = iter(f"f{i:02d}" for i in range(1, 21))
        ranked = [planted.get(r) or next(fillers) for r in range(1, 21)]
        run.append({
            "query_id": qid,
            "ranked": [{"passage_id": pid} for pid in ranked],
            "prediction": pred,
        })
        predictions[qid] = pred

    with open(HERE / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for p in passages:
            fh.write(json.dumps(p, sort_keys=True) + "\n")
    with open(HERE / "queries.jsonl", "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s, sort_keys=True) + "\n")
    with open(HERE / "run.json", "w", encoding="utf-8") as fh:
        json.dump(run, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(HERE / "predictions.json", "w", encoding="utf-8") as fh:
        json.dump(predictions, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
