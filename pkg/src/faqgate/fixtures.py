"""Synthetic demo corpus.

The production FAQ corpora are clinical and cannot ship; this generator
produces a small English stand-in with the same file schemas so the full
pipeline (ingest -> build -> calibrate -> eval -> serve) runs end to end.
Everything is a pure function of the seed.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

CATEGORY_QUESTIONS = {
    "pain": [
        "Will it hurt?",
        "How painful is the procedure going to be?",
        "What can I take if the pain gets bad afterwards?",
        "How long does the soreness usually last?",
    ],
    "recovery": [
        "How long will recovery take?",
        "How long does recovery take for most people?",
        "When will I feel back to normal again?",
        "How many days should I rest after the procedure?",
    ],
    "anesthesia": [
        "Can this be done under general anesthesia?",
        "Will the anesthesia make me sleepy all day?",
        "Is the local anesthetic injection painful?",
        "How long does the numbness last after anesthesia?",
    ],
    "bleeding": [
        "How much bleeding means I should bite on gauze?",
        "Is it normal to see blood the next morning?",
        "What should I do if the bleeding does not stop?",
        "How long will the wound keep oozing?",
    ],
    "diet": [
        "What can I eat after the extraction?",
        "When can I drink hot coffee again?",
        "Should I avoid alcohol after the procedure?",
        "Can I eat normally the same evening?",
    ],
    "work": [
        "When can I return to work or exercise?",
        "Can I go to the gym the day after?",
        "How many days off work will I need?",
        "Is it safe to fly for business two days later?",
    ],
    "infection": [
        "How can I prevent infection after surgery?",
        "How common is infection after this procedure?",
        "What are the warning signs of an infection?",
        "Do I need antibiotics afterwards?",
    ],
    "cost": [
        "How much will it cost?",
        "Does insurance usually cover this procedure?",
        "Is there an extra fee for sedation?",
        "How much does a follow-up visit cost?",
    ],
    "medication": [
        "Should I take painkillers at every meal like the antibiotics?",
        "Can I keep taking my usual blood pressure tablets?",
        "When should I take the first painkiller?",
        "Do the antibiotics interact with my other medication?",
    ],
    "swelling": [
        "How much will I swell?",
        "Should I apply ice to the area?",
        "How many days does the swelling usually last?",
        "Is swelling on one side only normal?",
    ],
    "pregnancy": [
        "Can I undergo the procedure during pregnancy?",
        "Is the x-ray safe while breastfeeding?",
        "Should I postpone until after the baby arrives?",
        "Does the anesthetic affect the baby?",
    ],
    "scheduling": [
        "By when should I call if I need to postpone?",
        "Whom should I contact if I have questions after I go home?",
        "Can you stop the procedure halfway if I panic?",
        "How long does the whole appointment take?",
    ],
}

CATEGORY_ANSWERS = {
    "pain": "Most patients feel pressure but little pain during the procedure; mild soreness for two to three days afterwards is normal and responds to the prescribed painkillers.",
    "recovery": "Typical recovery is three to five days for daily activities and about two weeks for complete soft-tissue healing; follow the written aftercare sheet.",
    "anesthesia": "The procedure is normally done under local anesthesia; sedation or general anesthesia can be arranged in advance if you are anxious, so please ask at booking.",
    "bleeding": "Slight oozing for up to 24 hours is normal; bite firmly on the gauze for 30 minutes, and contact the clinic if bright red bleeding continues beyond that.",
    "diet": "Stick to cool, soft food for the first day, avoid alcohol and very hot drinks for 48 hours, and chew on the other side until the area feels comfortable.",
    "work": "Plan a quiet rest of the day; most people return to desk work the next day and to strenuous exercise after three to four days.",
    "infection": "Keep the area clean, take the full antibiotic course if one was prescribed, and call us if you notice growing swelling, fever, or a bad taste after day three.",
    "cost": "The standard fee is listed in the consent pack; insurance usually covers the clinical part, and reception can give you a written estimate before you decide.",
    "medication": "Take painkillers only when needed up to the stated maximum, finish any antibiotic course completely, and keep taking your regular prescriptions unless we told you otherwise.",
    "swelling": "Expect the swelling to peak around 48 hours and fade within a week; a cold pack for 10 minutes on and off during the first day helps.",
    "pregnancy": "Routine treatment is safest in the second trimester; tell the team about pregnancy or breastfeeding so imaging and medication can be adjusted.",
    "scheduling": "Call the front desk at least 24 hours ahead to change an appointment; after hours, the answerphone message lists the on-call number.",
}

# casual building blocks, disjoint in vocabulary from the clinical corpus
CASUAL_OPENERS = [
    "The weather is nice today.",
    "The clinic has a pleasant atmosphere.",
    "There's a lovely bakery around the corner.",
    "My daughter just started school this spring.",
    "I watched a great movie last weekend.",
    "The garden outside looks beautiful.",
    "Traffic was surprisingly light this morning.",
    "I've started learning to paint landscapes.",
    "Our football team finally won on Saturday.",
    "The train station has a new coffee stand.",
    "My neighbor's cat keeps visiting our porch.",
    "The cherry trees are in full bloom already.",
    "I'm planning a trip to the coast this summer.",
    "The new library downtown is very quiet.",
    "We tried that noodle place everyone talks about.",
    "The radio played my favorite song this morning.",
]

CASUAL_TOPICS = [
    "the weather", "my garden", "the neighborhood", "a new recipe",
    "the holidays", "my commute", "a book I'm reading", "the local market",
    "my weekend plans", "a concert", "the park nearby", "my old friends",
]

CASUAL_VERBS = [
    "I keep thinking about", "I really enjoy", "We were chatting about",
    "Everyone seems excited about", "I spent Sunday on", "My family loves",
]

CASUAL_TAILS = ["", " these days", " lately", " this week", " again", " at the moment"]

CLINICAL_PREFIXES = ["", "Sorry to ask, but ", "One more thing: ", "Quick question: "]
CLINICAL_SUFFIXES = ["", " Thank you.", " Just want to be sure.", " I keep worrying about it."]


def _faq_records():
    entries = []
    answers = []
    for category in sorted(CATEGORY_QUESTIONS):
        answers.append(
            {
                "answer_id": f"ans-{category}",
                "text": CATEGORY_ANSWERS[category],
                "version": 1,
                "approved_by": "fixture-reviewer",
            }
        )
        for i, question in enumerate(CATEGORY_QUESTIONS[category], start=1):
            entries.append(
                {
                    "entry_id": f"{category}-{i:02d}",
                    "category": category,
                    "question": question,
                    "answer_id": f"ans-{category}",
                }
            )
    return entries, answers


def clinical_variant(rng: random.Random) -> str:
    """A near-paraphrase of an FAQ question: same body, polite wrapper."""
    category = rng.choice(sorted(CATEGORY_QUESTIONS))
    base = rng.choice(CATEGORY_QUESTIONS[category])
    return rng.choice(CLINICAL_PREFIXES) + base + rng.choice(CLINICAL_SUFFIXES)


def casual_utterance(rng: random.Random) -> str:
    if rng.random() < 0.25:
        return rng.choice(CASUAL_OPENERS)
    return f"{rng.choice(CASUAL_VERBS)} {rng.choice(CASUAL_TOPICS)}{rng.choice(CASUAL_TAILS)}."


def _dataset(rng: random.Random, prefix: str, n_clinical: int, n_casual: int,
             exclude: set[str]) -> list[dict]:
    items = []
    texts = set(exclude)

    def fresh(maker):
        for _ in range(1000):
            t = maker(rng)
            if t not in texts:
                texts.add(t)
                return t
        raise RuntimeError("fixture vocabulary exhausted; increase variety")

    for i in range(n_clinical):
        items.append({"id": f"{prefix}-cl-{i:04d}", "text": fresh(clinical_variant), "label": "clinical"})
    for i in range(n_casual):
        items.append({"id": f"{prefix}-ca-{i:04d}", "text": fresh(casual_utterance), "label": "casual"})
    rng.shuffle(items)
    return items


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


DENYLIST_PATTERNS = ["ssn", "social security", "credit card", "password"]

# casual utterances the acceptance flow sends through the live gate; kept out
# of the validation pool so the val/test independence guard holds
ANCHOR_CASUALS = ("The weather is nice today.", "The clinic has a pleasant atmosphere.")


def generate_fixtures(out_dir: str, seed: int = 7,
                      n_val: int = 160, n_test: int = 120) -> dict:
    """Write the full fixture corpus; returns a manifest of what was written."""
    out = Path(out_dir).resolve()
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    entries, answers = _faq_records()
    _write_jsonl(out / "faq.jsonl", entries)
    _write_jsonl(out / "answers.jsonl", answers)

    faq_texts = {e["question"] for e in entries}
    val = _dataset(rng, "val", n_val // 2, n_val - n_val // 2,
                   exclude=faq_texts | set(ANCHOR_CASUALS))
    val_texts = {r["text"] for r in val}
    test = _dataset(rng, "test", n_test // 2, n_test - n_test // 2,
                    exclude=faq_texts | val_texts | set(ANCHOR_CASUALS))
    test[0:0] = [
        {"id": f"test-anchor-{i}", "text": text, "label": "casual"}
        for i, text in enumerate(ANCHOR_CASUALS)
    ]
    _write_jsonl(out / "val.jsonl", val)
    _write_jsonl(out / "test.jsonl", test)

    with open(out / "denylist.txt", "w", encoding="utf-8") as fh:
        fh.write("# demo denylist: identifiers that must never reach the engine\n")
        for pattern in DENYLIST_PATTERNS:
            fh.write(pattern + "\n")

    server_config = {
        "bind_addr": "127.0.0.1:8787",
        "faq_path": str(out / "faq.jsonl"),
        "answers_path": str(out / "answers.jsonl"),
        "threshold_path": str(out / "threshold.json"),
        "denylist_path": str(out / "denylist.txt"),
        "audit_path": str(out / "audit.jsonl"),
        "admin_token": "demo-admin-token",
        "rate_capacity": 20,
        "rate_refill_per_s": 10.0,
        "log_plaintext": False,
        "embedding_provider": {
            "provider_kind": "toy_hash",
            "model_id": "toy-hash-demo",
            "dim": 256,
        },
        "smalltalk_backend": {"kind": "stub"},
    }
    with open(out / "server.json", "w", encoding="utf-8") as fh:
        json.dump(server_config, fh, indent=2)
        fh.write("\n")

    return {
        "out_dir": str(out),
        "n_faq_entries": len(entries),
        "n_answers": len(answers),
        "n_val": len(val),
        "n_test": len(test),
        "seed": seed,
    }


def load_dataset(path: str) -> list[tuple[str, str, str]]:
    """Read a val/test JSONL file into (id, text, label) tuples."""
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            items.append((str(obj.get("id", f"item-{lineno}")), obj["text"], obj["label"]))
    return items
