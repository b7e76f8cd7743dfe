"""Deterministically regenerate the fixture corpus under fixtures/.

The damaging corpus is built so that the text signal (badwords_count) is a
band: damaging edits carry a mid-range count while good edits sit at either
extreme.  Trees separate the band with two splits; a linear model cannot,
so it leans on the correlated user-class features instead.  That asymmetry
is what the audit workflow needs to expose.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wikiscore.features.catalog import feature_set_document
from wikiscore.pipeline.labels import LabelHeader, labels_from_traces, write_label_file

CONTEXT = "testwiki"
FIRST_REV = 10001
N_REVISIONS = 2000
N_DAMAGING_LABELS = 1200  # exact 480/720 split
N_QUALITY_LABELS = 600

INFORMAL_LEXICON = ["haha+", "hehe+", "lol", "omg", "wtf"]
BADWORDS_LEXICON = ["vandalpow", "zomgbad", "asdfjunk", "poopnoise", "trashscrawl"]

INFORMAL_TOKENS = ["haha", "hahahaha", "hehe", "lol", "omg", "wtf"]

FILLER = (
    "the history of this region includes many notable events and the local "
    "culture reflects a long tradition of trade science agriculture and art "
    "several sources describe the development of its institutions while other "
    "records document population growth infrastructure and public life over "
    "time the area became known for education music architecture and sport"
).split()

DAMAGING_FEATURES = [
    "words_count",
    "chars_count",
    "informal_word_count",
    "badwords_count",
    "refs_count",
    "headers_count",
    "images_count",
    "categories_count",
    "markup_chars",
    "bytes_changed",
    "revision.user.is_anon",
    "revision.user.account_age_seconds",
]

QUALITY_FEATURES = [
    "words_count",
    "chars_count",
    "refs_count",
    "headers_count",
    "images_count",
    "categories_count",
    "markup_chars",
    "bytes_changed",
]

QUALITY_SCALE = ["Stub", "Start", "C", "B"]


def quality_class(structure_score: int) -> str:
    if structure_score < 3:
        return "Stub"
    if structure_score < 6:
        return "Start"
    if structure_score < 9:
        return "C"
    return "B"


def make_text(rng, damaging: bool):
    filler_count = int(rng.integers(50, 91))
    words = list(rng.choice(FILLER, size=filler_count))
    if damaging:
        n_bad = int(rng.integers(4, 9))
    elif rng.random() < 0.5:
        n_bad = int(rng.integers(0, 2))
    else:
        n_bad = int(rng.integers(11, 16))
    n_informal = int(rng.integers(0, 4))
    words += list(rng.choice(BADWORDS_LEXICON, size=n_bad))
    words += list(rng.choice(INFORMAL_TOKENS, size=n_informal))
    rng.shuffle(words)

    refs = int(rng.integers(0, 5))
    headers = int(rng.integers(0, 5))
    images = int(rng.integers(0, 5))
    categories = int(rng.integers(0, 5))
    parts = []
    for i in range(headers):
        parts.append(f"== Section {i + 1} ==")
    body = " ".join(words)
    for i in range(refs):
        body += f" <ref>source {i + 1}</ref>"
    parts.append(body)
    for i in range(images):
        parts.append(f"[[File:picture_{i + 1}.png]]")
    for i in range(categories):
        parts.append(f"[[Category:Topic {i + 1}]]")
    text = "\n".join(parts)
    parent_text = " ".join(words[: filler_count // 2])
    structure = refs + headers + images + categories
    return text, parent_text, structure


def main(out_dir: Path) -> None:
    rng = np.random.default_rng(20240131)
    out_dir.mkdir(parents=True, exist_ok=True)

    damaging_flags = [True] * 480 + [False] * (N_DAMAGING_LABELS - 480)
    rng.shuffle(damaging_flags)
    # Unlabeled tail keeps the same prevalence.
    damaging_flags += [bool(rng.random() < 0.4) for _ in range(N_REVISIONS - N_DAMAGING_LABELS)]

    revisions = []
    damaging_records = []
    assessment_events = []
    for offset, damaging in enumerate(damaging_flags):
        rev_id = FIRST_REV + offset
        text, parent_text, structure = make_text(rng, damaging)
        is_anon = bool(rng.random() < (0.9 if damaging else 0.1))
        account_age = 0 if is_anon else int(rng.integers(3600, 300_000_000))
        revisions.append(
            {
                "revision_id": rev_id,
                "context_id": CONTEXT,
                "text": text,
                "parent_text": parent_text,
                "user_is_anon": is_anon,
                "user_account_age_seconds": account_age,
                "timestamp": 1_500_000_000 + offset * 7,
            }
        )
        if offset < N_DAMAGING_LABELS:
            damaging_records.append(
                {"rev_id": rev_id, "label": damaging, "context": CONTEXT}
            )
        if offset < N_QUALITY_LABELS:
            assessment_events.append(
                {
                    "rev_id": rev_id,
                    "context": CONTEXT,
                    "assessment": quality_class(structure),
                    "timestamp": 1_500_000_000 + offset * 7 + 3,
                }
            )

    # A few re-assessments; the converter keeps the latest per revision.
    for event in assessment_events[:10]:
        assessment_events.append(dict(event))

    with open(out_dir / f"{CONTEXT}.revisions.ndjson", "w", encoding="utf-8") as fh:
        for record in revisions:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    write_label_file(
        out_dir / f"{CONTEXT}.damaging.labels.ndjson",
        LabelHeader(
            campaign_id=f"{CONTEXT}-damaging-c1",
            label_set=(False, True),
            source="manual_campaign",
        ),
        damaging_records,
    )

    with open(out_dir / f"{CONTEXT}.assessments.ndjson", "w", encoding="utf-8") as fh:
        for event in assessment_events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
    labels_from_traces(
        out_dir / f"{CONTEXT}.assessments.ndjson",
        f"{CONTEXT}-articlequality-traces",
        QUALITY_SCALE,
        out_dir / f"{CONTEXT}.articlequality.labels.ndjson",
    )

    lexicons = {"informal": INFORMAL_LEXICON, "badwords": BADWORDS_LEXICON}
    with open(out_dir / f"{CONTEXT}.damaging.features.json", "w", encoding="utf-8") as fh:
        json.dump(
            feature_set_document(CONTEXT, "damaging", DAMAGING_FEATURES, lexicons),
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    with open(
        out_dir / f"{CONTEXT}.articlequality.features.json", "w", encoding="utf-8"
    ) as fh:
        json.dump(
            feature_set_document(CONTEXT, "articlequality", QUALITY_FEATURES, {}),
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")

    # Demo precache stream: one revision-create event per unlabeled revision.
    with open(out_dir / f"{CONTEXT}.events.ndjson", "w", encoding="utf-8") as fh:
        for record in revisions[N_DAMAGING_LABELS : N_DAMAGING_LABELS + 200]:
            event = {
                "context": CONTEXT,
                "event": "revision-create",
                "rev_id": record["revision_id"],
            }
            fh.write(json.dumps(event, sort_keys=True) + "\n")
    with open(out_dir / "precache.json", "w", encoding="utf-8") as fh:
        json.dump(
            {CONTEXT: {"damaging": ["revision-create"]}}, fh, indent=2, sort_keys=True
        )
        fh.write("\n")

    print(f"wrote fixture corpus to {out_dir}")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    main(target)
