#!/usr/bin/env python3
"""Regenerate the committed question/annotation/bank files under data/bank/.

The paraphrase corpus is curated here as code so the data files stay
reproducible: positive candidates (kept + rejected) with annotation scores,
negative cross-question pairs, and the label merge groups. Run from the repo
root: ``python3 scripts/build_bank.py``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from xaichat.corpus import (  # noqa: E402
    XAI_IDS,
    AnnotatedPair,
    ReferenceQuestion,
    build_bank_entries,
    filter_candidates,
)

# (category, reference text, kept paraphrases, rejected candidates)
QUESTIONS: dict[int, tuple[str, str, list[str], list[str]]] = {
    1: ("How", "How are the parameters set?",
        ["How were the parameters set?",
         "How did you set the model's parameters?",
         "How are the system's parameters chosen?",
         "Which parameter settings were used?"],
        ["What are parameters?"]),
    2: ("How", "How does <feature> impact its predictions?",
        ["How does <feature> impact the prediction?",
         "What impact does <feature> have on its predictions?",
         "How much does <feature> influence the outcome?"],
        ["Does the prediction change?"]),
    3: ("How", "How does it weigh different features?",
        ["How are the different features weighted?",
         "How does the system weigh the features?",
         "Which features get more weight than others?"],
        ["Are all features equal?"]),
    4: ("How", "How does the system make predictions?",
        ["How does the system make its predictions?",
         "How does the model make a prediction?"],
        ["What does the system predict?"]),
    5: ("How", "Is <feature> used or not used for the predictions?",
        ["Is <feature> used for the predictions or not?",
         "Does the model use <feature> at all?",
         "Is <feature> used by the system?"],
        ["What is <feature>?"]),
    6: ("How", "What are the top features it uses?",
        ["What are the top features of the model?",
         "Which features does it use most?",
         "What are the most important features it uses?"],
        ["How many features are there?"]),
    7: ("How", "What are the top rules it uses?",
        ["What are the main rules it uses?",
         "Which rules does the system use most?"],
        ["What are rules?"]),
    8: ("How", "What features does the system consider?",
        ["What attributes are used?",
         "What features does the model use?"],
        ["Does it consider anything?"]),
    9: ("How", "What is the system's overall logic?",
        ["What is the overall logic of the system?",
         "Explain the system's overall logic to me."],
        ["Is the system logical?"]),
    10: ("How", "What kind of algorithm is used?",
         ["Which kind of algorithm is used?",
          "What algorithm does the system use?",
          "What type of algorithm is this model based on?",
          "Is this a neural network or another kind of algorithm?"],
         ["What is an algorithm?"]),
    11: ("How", "What rules does it use?",
         ["Which rules does it use?",
          "What rules does the model follow?"],
         ["Are there rules?"]),
    12: ("HowToBe", "How should this instance change to get a different prediction?",
         ["What should change in this instance to get a different prediction?",
          "How can this profile change so the prediction is different?",
          "How would this instance need to change for a different prediction?"],
         ["Can the prediction change?"]),
    13: ("HowToBe", "How should this feature change to get a different prediction?",
         ["How could I change only <feature> to get <class>?",
          "How should <feature> change to get a different prediction?",
          "What value of <feature> would give a different prediction?"],
         ["Is <feature> changeable?"]),
    14: ("HowToBe", "What kind of instance gets a different prediction?",
         ["Which kind of instance gets a different prediction?",
          "What does an instance with a different prediction look like?",
          "Show me an example that would be predicted differently."],
         ["Are there other predictions?"]),
    15: ("HowToStill", "What are the necessary features present to guarantee this prediction?",
         ["Which features must be present to guarantee this prediction?",
          "What features are necessary to guarantee this outcome?"],
         ["Are features necessary?"]),
    16: ("HowToStill", "What are the necessary features absent to guarantee this prediction?",
         ["Which features must be absent to guarantee this prediction?",
          "What features need to be absent for this outcome?"],
         ["Is anything absent?"]),
    17: ("HowToStill", "What is the highest feature one can have to still get the same prediction?",
         ["What is the highest value of <feature> that still gets the same prediction?",
          "How high can <feature> be and still get the same prediction?",
          "What is the maximum of <feature> to still get this prediction?"],
         ["Is there a highest feature?"]),
    18: ("HowToStill", "What is the lowest feature one can have to still get the same prediction?",
         ["What is the lowest value of <feature> that still gets the same prediction?",
          "How low can <feature> be and still get the same prediction?",
          "What is the minimum of <feature> to still get this prediction?"],
         ["Is there a lowest feature?"]),
    19: ("HowToStill", "What is the scope of change permitted to still get the same prediction?",
         ["What scope of change is permitted to still get the same prediction?",
          "How much change is permitted to still get the same prediction?"],
         ["Can things change?"]),
    20: ("HowToStill", "What kind of instance gets this prediction?",
         ["Which kind of instance gets this prediction?",
          "What do instances with this prediction look like?"],
         ["What is an instance?"]),
    21: ("Input", "How much data like this is the system trained on?",
         ["How much data like this was the system trained on?",
          "How much training data is like this one?",
          "How many cases like this is the system trained on?",
          "Was the system trained on much data like this?"],
         ["Is there a lot of data?"]),
    22: ("Input", "How was the ground truth produced?",
         ["How was the ground truth for the data produced?",
          "Where does the ground truth come from?",
          "How did you produce the ground truth?",
          "Who produced the ground truth?"],
         ["What is ground truth?"]),
    23: ("Input", "How were the labels produced?",
         ["How were the labels of the data produced?",
          "How was the data labeled?",
          "Where do the labels come from?",
          "Who labeled the data?"],
         ["What is a label?"]),
    24: ("Input", "What are the biases of the data?",
         ["What biases does the data have?",
          "Is the data biased?",
          "Which biases are in the data?",
          "Does the data have any biases?"],
         ["Is data ever biased?"]),
    25: ("Input", "What are the limitations of the data?",
         ["What limitations does the data have?",
          "What are the data's limitations?",
          "Where is the data limited?",
          "What are the limits of the dataset?"],
         ["Is the data perfect?"]),
    26: ("Input", "What data is the system not using?",
         ["Which data is not used by the system?",
          "What data does the model not use?",
          "Is there data the system is not using?",
          "What information is not used?"],
         ["Does it use all the data?"]),
    27: ("Input", "What is the sample size?",
         ["How many did they sample?",
          "How many items are considered in this result?",
          "What sample size was used?",
          "How big is the sample?"],
         ["Is the sample large enough for statistics?"]),
    28: ("Input", "What is the source of the data?",
         ["What is the data source?",
          "Which source does the data come from?",
          "What source was the data collected from?",
          "Where does the data come from?"],
         ["Is the data public?"]),
    29: ("Input", "What kind of data does the system learn from?",
         ["Which kind of data does the system learn from?",
          "What type of data does the model learn from?",
          "What kind of data was used for learning?",
          "What sort of data does the system train on?"],
         ["Does the system learn?"]),
    30: ("Output", "How can I best utilize the output of the system?",
         ["How can I best use the output of the system?",
          "How should I utilize the system's output?",
          "What is the best way to use the output?",
          "How do I make the best use of the output?"],
         ["Is the output useful?"]),
    31: ("Output", "How is the output used for other system component(s)?",
         ["How is the output used by other system components?",
          "Which other components use the output?",
          "How do other parts of the system use the output?",
          "What happens to the output downstream?"],
         ["Are there other components?"]),
    32: ("Output", "What does the system output mean?",
         ["What does the output of the system mean?",
          "What is the meaning of the system's output?",
          "How should I interpret the output?",
          "What does this output mean exactly?"],
         ["What is an output?"]),
    33: ("Output", "What is the scope of the system's capability? Can it do [A]?",
         ["What is the scope of the system's capabilities?",
          "What is the system capable of?",
          "Can the system do other tasks too?",
          "How far does the system's capability reach?"],
         ["Can it do everything?"]),
    34: ("Output", "What kind of output does the system give?",
         ["Which kind of output does the system give?",
          "What type of output does the system return?",
          "What kind of output do I get from the system?",
          "What form does the output take?"],
         ["Does it output?"]),
    35: ("Performance", "How accurate are the predictions?",
         ["How accurate is the system?",
          "What is the accuracy of the predictions?",
          "How accurate are the model's predictions?",
          "What accuracy does the system reach?",
          "How good are the predictions?",
          "How accurate is this model overall?"],
         ["Is it ever accurate?"]),
    36: ("Performance", "How precise are the predictions?",
         ["How precise is the system?",
          "What is the precision of the predictions?",
          "How precise are the model's predictions?",
          "What precision does the system reach?",
          "How exact are the predictions?",
          "How precise is the model overall?"],
         ["What is precision?"]),
    37: ("Performance", "How reliable are the predictions?",
         ["How reliable is the system?",
          "Can I rely on the predictions?",
          "How reliable are the model's predictions?",
          "How much can I rely on this system?",
          "Are the predictions reliable?",
          "How reliable is this model overall?"],
         ["Is anything reliable these days?"]),
    38: ("Performance", "How often does the system make mistakes?",
         ["How often does the model make mistakes?",
          "How often is the system wrong?",
          "How frequently does the system make mistakes?",
          "Does the system often make mistakes?",
          "What is the error rate?",
          "How many mistakes does the system make?"],
         ["Do systems make mistakes?"]),
    39: ("Performance", "In what situations is the system likely to be correct?",
         ["In which situations is the system likely to be correct?",
          "When is the system likely to be correct?",
          "In what cases are the predictions correct?",
          "In what situations is the system usually correct?"],
         ["Is it correct?"]),
    40: ("Performance", "In what situations is the system likely to be incorrect?",
         ["In which situations is the system likely to be incorrect?",
          "When is the system likely to be incorrect?",
          "In what cases are the predictions incorrect?",
          "In what situations is the system usually wrong?"],
         ["Is it wrong?"]),
    41: ("Performance", "Is the system's performance good enough for [A]?",
         ["Is the system's performance good enough for my application?",
          "Is the performance good enough for this task?",
          "Is the system good enough for my use case?",
          "Does the performance suffice for this purpose?"],
         ["What is performance?"]),
    42: ("Performance", "What are the limitations of the system?",
         ["What limitations does the system have?",
          "What are the system's limitations?",
          "What are the known limitations of this system?",
          "Where is the system limited?"],
         ["Is the system limited?"]),
    43: ("Performance", "What kind of mistakes is the system likely to make?",
         ["Which kind of mistakes is the system likely to make?",
          "What mistakes does the system tend to make?",
          "What kind of errors is the model likely to make?",
          "What typical mistakes does the system make?"],
         ["What is a mistake?"]),
    44: ("WhatIf", "What would the system predict for [a different instance]?",
         ["What would the system predict for another instance?",
          "What would the system predict for a different case?",
          "What would the model predict for a new instance?",
          "What would the prediction be for a different profile?"],
         ["Can it predict?"]),
    45: ("WhatIf", "What would the system predict if <feature> of this instance changes to <value>?",
         ["What would the system predict if <feature> changes to <value>?",
          "What would be predicted if <feature> of this instance were <value>?",
          "If <feature> changes to <value>, what would the system predict?",
          "What happens to the prediction if <feature> becomes <value>?"],
         ["What if things change?"]),
    46: ("WhatIf", "What would the system predict if features of this instance change to new values?",
         ["What would the system predict if several features change?",
          "What would be predicted if <feature> changed to <value> and <feature> to <value>?",
          "If multiple features of this instance change, what would the system predict?",
          "What is the prediction after changing several features?"],
         ["Do features change?"]),
    47: ("Why", "Why is this instance given this prediction?",
         ["Give me the reason for this result.",
          "What is the reason for this prediction?",
          "Why did this instance get this prediction?",
          "Why is this case given this prediction?",
          "Why was this prediction given?"],
         ["Is there a reason?"]),
    48: ("Why", "How is this instance given this prediction?",
         ["How did this instance get this prediction?",
          "How was this prediction made for this instance?",
          "How does this case end up with this prediction?",
          "How did the system arrive at this prediction?"],
         ["How does predicting work in general?"]),
    49: ("Why", "What features of this instance lead to the system's prediction?",
         ["Which features of this instance lead to the prediction?",
          "What features lead the system to this prediction?",
          "Which features of this case caused the prediction?",
          "What features drive the system's prediction here?"],
         ["What is a feature?"]),
    50: ("Why", "Why are instance A and instance B given the same prediction?",
         ["Why do instance A and instance B get the same prediction?",
          "Why are these two instances given the same prediction?",
          "How come both instances have the same prediction?"],
         ["Are A and B the same?"]),
    51: ("WhyNot", "How is this instance not predicted <class>?",
         ["Why is this instance not predicted <class>?",
          "How come this instance is not predicted <class>?",
          "Why is this case not predicted as <class>?"],
         ["What is <class>?"]),
    52: ("WhyNot", "Why are instances A and B given different predictions?",
         ["Why do instances A and B get different predictions?",
          "Why are these two instances given different predictions?",
          "How come the two instances have different predictions?"],
         ["Are the instances different?"]),
    53: ("WhyNot", "Why is this instance predicted <class> instead of <class>?",
         ["Why is this predicted <class> instead of <class>?",
          "Why does the system predict <class> instead of <class>?",
          "Why was <class> predicted instead of <class>?",
          "Why <class> and not <class>?"],
         ["Which class is better?"]),
    54: ("Others", "How to improve the system?",
         ["How can the system be improved?",
          "How could we improve the system?",
          "What can be done to improve the system?",
          "How do I improve the model?"],
         ["Is improvement possible?"]),
    55: ("Others", "What are the results of other people using the system?",
         ["What results do other people get using the system?",
          "What are the results of others using this system?",
          "How has the system worked for other people?",
          "What outcomes did other users get?"],
         []),
    56: ("Others", "What does [ML terminology] mean?",
         ["What does this machine learning term mean?",
          "What is the meaning of this ML terminology?",
          "Can you explain what this term means?",
          "Define this machine learning terminology."],
         []),
    57: ("Others", "How will the system adapt over time?",
         ["How does the system adapt over time?",
          "How will the model adapt as time passes?",
          "In what way will the system adapt over time?",
          "How is the system going to adapt over time?"],
         []),
    58: ("Others", "How will the system change over time?",
         ["How does the system change over time?",
          "How will the model change as time passes?",
          "In what way will the system change over time?",
          "How is the system going to change over time?"],
         []),
    59: ("Others", "How will the system drift over time?",
         ["How does the system drift over time?",
          "How will the model drift as time passes?",
          "How strongly will the system drift over time?",
          "How is the system going to drift over time?"],
         []),
    60: ("Others", "How will the system improve over time?",
         ["How does the system improve over time?",
          "How will the model improve as time passes?",
          "In what way will the system improve over time?",
          "How is the system going to improve over time?"],
         []),
    61: ("Others", "What will change in the system over time?",
         ["What changes in the system over time?",
          "What will change in the model as time passes?",
          "Which parts of the system will change over time?",
          "What is going to change in the system over time?"],
         []),
    62: ("Others", "What will the system adapt to over time?",
         ["What does the system adapt to over time?",
          "What will the model adapt to as time passes?",
          "To what will the system adapt over time?",
          "What is the system going to adapt to?"],
         []),
    63: ("Others", "What will the system improve over time?",
         ["What does the system improve over time?",
          "What will the model improve as time passes?",
          "Which aspects will the system improve over time?",
          "What is the system going to improve?"],
         []),
    64: ("Others", "Why will the system adapt over time?",
         ["Why does the system adapt over time?",
          "Why will the model adapt as time passes?",
          "Why would the system adapt over time?",
          "What is the reason the system adapts over time?"],
         []),
    65: ("Others", "Why will the system change over time?",
         ["Why does the system change over time?",
          "Why will the model change as time passes?",
          "Why would the system change over time?",
          "What is the reason the system changes over time?"],
         []),
    66: ("Others", "Why will the system drift over time?",
         ["Why does the system drift over time?",
          "Why will the model drift as time passes?",
          "Why would the system drift over time?",
          "What is the reason the system drifts over time?"],
         []),
    67: ("Others", "Why will the system improve over time?",
         ["Why does the system improve over time?",
          "Why will the model improve as time passes?",
          "Why would the system improve over time?",
          "What is the reason the system improves over time?"],
         []),
    68: ("Others", "Why NOT using this data?",
         ["Why is this data not used?",
          "Why is the system not using this data?"],
         []),
    69: ("Others", "Why NOT using this feature?",
         ["Why is <feature> not used by the system?"],
         []),
    70: ("Others", "Why NOT using this rule?",
         ["Why is this rule not used?"],
         []),
    71: ("Others", "Why using this data?",
         ["Why is this data used?",
          "Why is the system using this data?"],
         []),
    72: ("Others", "Why using this feature?",
         ["Why is <feature> used by the model?",
          "Why is the system using <feature>?"],
         []),
    73: ("Others", "Why using this rule?",
         ["Why is this rule used?"],
         []),
}

# questions with identical answers share one intent label
MERGE_SPEC = [
    {"ids": [2, 5], "rationale": "both ask for the (binary) contribution of one named feature"},
    {"ids": [3, 6, 8], "rationale": "all answered by the ranked feature-importance list over every feature"},
    {"ids": [4, 9], "rationale": "overall decision logic; both get the same capability notice"},
    {"ids": [7, 11], "rationale": "rule extraction; both get the same capability notice"},
    {"ids": [12, 14], "rationale": "both answered by a set of diverse counterfactual instances"},
    {"ids": [15, 16], "rationale": "necessary-feature guarantees; same attribution-with-caveat answer"},
    {"ids": [17, 18, 19, 20], "rationale": "all answered by the anchor rule bounding the prediction"},
    {"ids": [22, 23], "rationale": "ground-truth/label provenance; same datasheet field"},
    {"ids": [24, 25], "rationale": "data biases/limitations; same datasheet field"},
    {"ids": [35, 36, 37], "rationale": "accuracy/precision/reliability; same evaluation metrics answer"},
    {"ids": [47, 48, 49], "rationale": "single-instance why/how; one attribution for the current instance"},
    {"ids": [51, 53], "rationale": "counterfactual toward a class the user names"},
    {"ids": [68, 69, 70], "rationale": "design-time 'why not used'; same capability notice"},
    {"ids": [71, 72, 73], "rationale": "design-time 'why used'; same capability notice"},
]

KEPT_SCORES = [(5, 4), (4, 4), (6, 5), (5, 5), (4, 5, 4), (6, 6), (5, 6)]
DROP_SCORES = [(3, 4), (3, 3), (2, 3), (3, 2, 4), (2, 2), (1, 3)]
NEG_SCORES = [(1, 2), (2, 2), (1, 1), (2, 3), (3, 3), (1, 3)]
# a few sampled negatives were scored similar anyway; they still never enter the bank
NEG_HIGH_SCORES = [(4, 4), (5, 4), (4, 4, 5)]


def positive_pairs() -> list[AnnotatedPair]:
    pairs = []
    i = 0
    for qid in sorted(QUESTIONS):
        _, _, kept, dropped = QUESTIONS[qid]
        for phrase in kept:
            pairs.append(AnnotatedPair(qid, phrase, KEPT_SCORES[i % len(KEPT_SCORES)]))
            i += 1
        for phrase in dropped:
            pairs.append(AnnotatedPair(qid, phrase, DROP_SCORES[i % len(DROP_SCORES)]))
            i += 1
    return pairs


def negative_pairs(n: int = 59) -> list[AnnotatedPair]:
    qids = sorted(QUESTIONS)
    pairs = []
    high_slots = {10, 30, 50}  # deterministic positions for the high-scoring negatives
    for i in range(n):
        qid = qids[(i * 7) % len(qids)]
        donor = qids[(i * 7 + 31) % len(qids)]
        if donor == qid:
            donor = qids[(i * 7 + 32) % len(qids)]
        donor_kept = QUESTIONS[donor][2]
        phrase = donor_kept[i % len(donor_kept)]
        if i in high_slots:
            scores = NEG_HIGH_SCORES[sorted(high_slots).index(i)]
        else:
            scores = NEG_SCORES[i % len(NEG_SCORES)]
        pairs.append(AnnotatedPair(qid, phrase, scores, is_negative=True))
    return pairs


def main() -> None:
    out_dir = ROOT / "data" / "bank"
    out_dir.mkdir(parents=True, exist_ok=True)

    questions = {
        qid: ReferenceQuestion(qid, cat, text, qid in XAI_IDS)
        for qid, (cat, text, _, _) in QUESTIONS.items()
    }
    positives = positive_pairs()
    negatives = negative_pairs()
    assert len(positives) == 310, len(positives)
    assert len(negatives) == 59, len(negatives)
    kept = [p for p in filter_candidates(positives, 4.0) if not p.is_negative]
    assert len(kept) == 256, len(kept)

    with open(out_dir / "questions.jsonl", "w", encoding="utf-8") as fh:
        for qid in sorted(questions):
            q = questions[qid]
            fh.write(json.dumps({
                "id": q.id, "category": q.category, "text": q.text,
                "requires_xai": q.requires_xai,
            }) + "\n")

    with open(out_dir / "annotations.jsonl", "w", encoding="utf-8") as fh:
        for p in positives + negatives:
            fh.write(json.dumps({
                "question_id": p.question_id, "phrase": p.phrase,
                "scores": list(p.scores), "is_negative": p.is_negative,
            }) + "\n")

    entries = build_bank_entries(questions, positives + negatives)
    assert len(entries) == 329, len(entries)
    with open(out_dir / "bank.jsonl", "w", encoding="utf-8") as fh:
        for e in entries:
            q = questions[e.question_id]
            fh.write(json.dumps({
                "question_id": e.question_id, "phrase": e.phrase, "label": e.label,
                "category": q.category, "requires_xai": q.requires_xai,
                "is_reference": e.is_reference,
            }) + "\n")

    with open(out_dir / "merge_spec.json", "w", encoding="utf-8") as fh:
        json.dump({"groups": MERGE_SPEC}, fh, indent=2)
        fh.write("\n")

    n_labels = 73 - sum(len(g["ids"]) - 1 for g in MERGE_SPEC)
    xai_entries = sum(1 for e in entries if e.question_id in XAI_IDS)
    print(f"bank: {len(entries)} entries, {n_labels} labels after merge, "
          f"XAI subset {xai_entries} entries")


if __name__ == "__main__":
    main()
