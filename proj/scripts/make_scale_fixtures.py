#!/usr/bin/env python3
"""Regenerates the synthetic corpus fixtures (deterministic).

Writes fixtures/corpus_demo.jsonl (working-size demo corpus) and
fixtures/corpus_scale.jsonl (source-study-scale stress corpus: 3,270
excerpts, 31 code categories). Quotes are synthetic; participant ids and
pool mappings are invented. Run from the repository root.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

CODES_31 = [
    "workflow-overview", "data-sources", "data-preparation", "quality-control",
    "alignment", "variant-calling", "expression-analysis", "single-cell",
    "long-reads", "genome-assembly", "annotation", "visualization-tools",
    "genome-browsers", "custom-scripts", "plotting-libraries", "figure-styling",
    "publication-figures", "interactive-exploration", "collaboration",
    "sharing-results", "reproducibility", "automation", "pipelines",
    "compute-environment", "data-volume", "tool-discovery", "learning-curve",
    "documentation", "feature-requests", "pain-points", "future-needs",
]

DEMO_CODES = [
    "workflow-overview", "visualization-tools", "data-preparation",
    "figure-styling", "pain-points", "collaboration",
]

POOLS = {
    "computational_biologist": ["P5", "P9"],
    "bioinformatician": ["P3", "P6"],
    "software_engineer": ["P11", "P12"],
    "biologist": ["P16", "P17", "P18"],
}

SUBJECTS = [
    "Most of my week", "The first pass over new data", "Every figure I publish",
    "Our shared analysis notebook", "The browser session I keep open",
    "A typical comparison plot", "The report for collaborators",
    "My plotting script", "The exploratory view I start with",
    "Any track I need to restyle",
]

ACTIONS = [
    "starts from alignment files and summary tables",
    "depends on scripts nobody wants to touch",
    "goes through three tools before it looks presentable",
    "needs the coordinates lifted over first",
    "gets rebuilt whenever the annotation changes",
    "ends up as a static image in a slide deck",
    "takes more cleanup than actual plotting",
    "is copied from an older project and adjusted",
    "breaks when the input format drifts",
    "has to work for people who never open a terminal",
]

CODAS = [
    "so I keep the defaults wherever possible.",
    "and that is the slowest part by far.",
    "which is why I rarely try new tools mid-project.",
    "so reproducibility matters more than polish.",
    "and collaborators only see the final export.",
    "so an editable starting point would help a lot.",
    "even when the dataset is small.",
    "and the styling never quite matches the journal.",
    "so I lean on whatever the browser already renders.",
    "which makes quick visual checks valuable.",
]


def make_corpus(path, n_excerpts, codes, participants, pools, seed):
    rng = random.Random(seed)
    lines = [json.dumps({"kind": "header", "codebook": codes, "pools": pools},
                        separators=(",", ":"), sort_keys=False)]
    width = len(str(n_excerpts))
    for i in range(n_excerpts):
        participant = participants[i % len(participants)]
        n_codes = 1 + rng.randrange(3)
        start = rng.randrange(len(codes))
        code_labels = [codes[(start + j) % len(codes)] for j in range(n_codes)]
        quote = " ".join([
            rng.choice(SUBJECTS),
            rng.choice(ACTIONS) + ",",
            rng.choice(CODAS),
        ])
        lines.append(json.dumps({
            "kind": "excerpt",
            "excerpt_id": f"x{i + 1:0{width}d}",
            "participant_id": participant,
            "codes": code_labels,
            "quote": quote,
        }, separators=(",", ":")))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({n_excerpts} excerpts, {len(codes)} codes)")


def main():
    fixtures = ROOT / "fixtures"
    fixtures.mkdir(exist_ok=True)

    demo_participants = [p for ids in POOLS.values() for p in ids]
    make_corpus(fixtures / "corpus_demo.jsonl", 36, DEMO_CODES,
                demo_participants, POOLS, seed=11)

    scale_participants = [f"P{i}" for i in range(1, 21)]
    make_corpus(fixtures / "corpus_scale.jsonl", 3270, CODES_31,
                scale_participants, POOLS, seed=29)


if __name__ == "__main__":
    main()
