"""Regenerates the synthetic evaluation corpus, query set and scripts.

Each topic has one long report whose answer line sits deep in the body and
shares no words with the question, plus two short keyword-dense briefs that
outrank it lexically but never state the answer.
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent
TOPICS = [
    ("harbor turbine", "Kestrel Works"),
    ("glacier pump", "Orrin Foundry"),
    ("canyon relay", "Marlow Signal Company"),
    ("desert beacon", "Tamsin Optics"),
    ("river sluice", "Bracken Hydraulics"),
    ("summit antenna", "Vessel and Pike"),
    ("valley reactor", "Quill Dynamics"),
    ("coastal crane", "Harrow Lift"),
    ("forest sensor", "Lumen Field Labs"),
    ("island generator", "Corran Electric"),
]
SYLLABLES = ["lor", "van", "tes", "quil", "mab", "ren", "dox", "pria", "sel", "kun", "obi", "tra", "zem", "ful", "nax", "ira"]
ANSWER_LINE = 90
REPORT_LINES = 120


def pseudo_word(rng):
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3)))


def filler(rng, words=9):
    return " ".join(pseudo_word(rng) for _ in range(words)) + "."


def slug(topic):
    return topic.replace(" ", "-")


def report(rng, topic, supplier):
    t = topic.capitalize()
    lines = [
        f"# {t} program review",
        "",
        f"This review covers the {topic} program from planning to commissioning.",
        f"{t} milestones, {topic} budget lines and {topic} maintenance windows are listed below.",
        "",
    ]
    while len(lines) < REPORT_LINES:
        if len(lines) == ANSWER_LINE:
            lines.append(f"Procurement note: unit delivered by {supplier} under framework contract K-{rng.randint(10, 99)}.")
        elif len(lines) % 15 == 0:
            lines.append("")
            lines.append(f"## Section {len(lines) // 15}")
        else:
            lines.append(filler(rng))
    return "\n".join(lines[:REPORT_LINES]) + "\n"


def brief(topic, kind):
    t = topic.capitalize()
    if kind == "brief":
        body = [
            f"# {t} supply brief",
            f"Who supplied the {topic}? The {topic} was supplied on schedule.",
            f"The {topic} supplier list is kept in the program review.",
        ]
    else:
        body = [
            f"# {t} questions",
            f"Q: Who supplied the {topic}?",
            f"A: The {topic} was supplied under the standard {topic} framework; see the review.",
        ]
    return "\n".join(body) + "\n"


def main():
    rng = random.Random(20240611)
    corpus = HERE / "corpus"
    corpus.mkdir(exist_ok=True)
    queries, agentic, single = [], {}, {}
    for i, (topic, supplier) in enumerate(TOPICS, start=1):
        s = slug(topic)
        (corpus / f"{s}-review.md").write_text(report(rng, topic, supplier))
        (corpus / f"{s}-brief.txt").write_text(brief(topic, "brief"))
        (corpus / f"{s}-faq.txt").write_text(brief(topic, "faq"))
        qid = f"q{i:02d}"
        query = f"Who supplied the {topic}?"
        queries.append({"query_id": qid, "query": query, "gold_doc_ids": [f"{s}-review.md"], "gold_answer": supplier})
        steps = [
            {"tool_calls": [{"name": "search", "arguments": {"queries": [query, f"{topic} supplier"]}}]},
            {
                "tool_calls": [{"name": "search", "arguments": {"query": query}}],
                "when": {"last_result_contains": "single-query mode"},
            },
        ]
        for n in range(1, 6):
            step = {"tool_calls": [{"name": "find", "arguments": {"ref_id": f"turn1search{n}", "patterns": ["procurement note"], "mode": "semantic"}}]}
            if n > 1:
                step["when"] = {"last_result_not_contains": "--- lines"}
            steps.append(step)
        steps.append({
            "tool_calls": [{"name": "open", "arguments": {"ref_id": "${last_ref}"}}],
            "when": {"last_result_contains": "--- lines"},
        })
        steps.append({
            "text": f"The {topic} was delivered by {supplier} [ref: ${{last_ref}} | 0.95].",
            "when": {"last_result_contains": "Viewing lines"},
        })
        steps.append({"text": "No supplier could be identified."})
        agentic[qid] = {"steps": steps, "fallback_text": "No supplier could be identified."}
        single[qid] = {"steps": [{"text": f"The sources do not name the {topic} supplier."}]}
    with open(HERE / "queries.jsonl", "w") as f:
        for q in queries:
            f.write(json.dumps(q) + "\n")
    (HERE / "script_agentic.json").write_text(json.dumps({"queries": agentic}, indent=2) + "\n")
    (HERE / "script_single_shot.json").write_text(json.dumps({"queries": single}, indent=2) + "\n")


if __name__ == "__main__":
    main()
