import json

import httpx
import pytest

from faqgate.errors import BackendUnavailableError, ValidationError
from faqgate.smalltalk import (
    GenerationParams,
    HttpBackend,
    SmalltalkPolicy,
    StubBackend,
    generate,
    split_sentences,
    stub_generate,
    truncate_sentences,
    _STUB_TEMPLATES,
)

CLINICAL_KEYWORDS = [
    "dose", "dosage", "medication", "anesthesia", "bleeding", "infection",
    "surgery", "diagnosis", "prescription", "symptom",
]


def test_params_defaults_exact():
    p = GenerationParams()
    assert p.max_new_tokens == 60
    assert p.temperature == 0.45
    assert p.top_p == 0.9
    assert p.repetition_penalty == 1.2


def test_params_validation():
    with pytest.raises(ValidationError):
        GenerationParams(max_new_tokens=0)
    with pytest.raises(ValidationError):
        GenerationParams(temperature=-0.1)
    with pytest.raises(ValidationError):
        GenerationParams(top_p=0.0)
    with pytest.raises(ValidationError):
        GenerationParams(repetition_penalty=0.9)


def test_stub_deterministic_single_sentence():
    a = stub_generate("The weather is nice today.")
    b = stub_generate("The weather is nice today.")
    assert a == b
    assert len(split_sentences(a)) == 1


def test_stub_templates_avoid_clinical_keywords():
    for template in _STUB_TEMPLATES:
        lowered = template.lower()
        for keyword in CLINICAL_KEYWORDS:
            assert keyword not in lowered


SPLIT_CASES = [
    ("One. Two. Three.", ["One.", "Two.", "Three."]),
    ("Only one sentence", ["Only one sentence"]),
    ("Wow!? Really?! Yes.", ["Wow!?", "Really?!", "Yes."]),
    ("Wait... what? Sure.", ["Wait...", "what?", "Sure."]),
    ("Hmm… okay then!", ["Hmm…", "okay then!"]),
    ("Mixed! Case? Done.", ["Mixed!", "Case?", "Done."]),
    ("", []),
    ("Quoted ending." , ["Quoted ending."]),
]


@pytest.mark.parametrize("text,expected", SPLIT_CASES)
def test_split_sentences_cases(text, expected):
    assert split_sentences(text) == expected


def test_truncate_to_one():
    assert truncate_sentences("A first. A second. A third.", 1) == "A first."
    assert truncate_sentences("A first. A second. A third.", 2) == "A first. A second."


class EchoMultiSentenceBackend:
    def generate(self, text, params, policy):
        return "First reply sentence. Second one here! And a third?"


def test_generate_enforces_sentence_cap():
    reply = generate("hello", GenerationParams(), SmalltalkPolicy(), EchoMultiSentenceBackend())
    assert reply == "First reply sentence."


def test_generate_cap_holds_for_adversarial_replies():
    import random

    rng = random.Random(99)
    fragments = ["ok", "sure thing", "sounds fun", "wow", "tell me more", "nice"]
    marks = [".", "!", "?", "!?", "...", "?!"]

    class Adversarial:
        def generate(self, text, params, policy):
            n = rng.randint(1, 8)
            return " ".join(rng.choice(fragments) + rng.choice(marks) for _ in range(n))

    policy = SmalltalkPolicy(max_reply_sentences=2)
    backend = Adversarial()
    for i in range(50):
        reply = generate(f"text {i}", GenerationParams(), policy, backend)
        assert 1 <= len(split_sentences(reply)) <= 2


def test_http_backend_golden_request():
    captured = {}

    def handler(request):
        captured.update(json.loads(request.content))
        return httpx.Response(200, json={"reply": "Oh, lovely."})

    backend = HttpBackend("http://local-slm", transport=httpx.MockTransport(handler))
    params = GenerationParams(max_new_tokens=60, temperature=0.45, top_p=0.9,
                              repetition_penalty=1.2)
    policy = SmalltalkPolicy(system_instruction="stay non-clinical")
    reply = generate("The weather is nice today.", params, policy, backend)
    assert reply == "Oh, lovely."
    assert captured == {
        "prompt": "The weather is nice today.",
        "max_new_tokens": 60,
        "temperature": 0.45,
        "top_p": 0.9,
        "repetition_penalty": 1.2,
        "system_instruction": "stay non-clinical",
    }


def test_http_backend_transport_failure():
    def handler(request):
        raise httpx.ConnectTimeout("slow")

    backend = HttpBackend("http://local-slm", transport=httpx.MockTransport(handler))
    with pytest.raises(BackendUnavailableError):
        generate("hi", GenerationParams(), SmalltalkPolicy(), backend)


def test_stub_backend_counts_calls():
    backend = StubBackend()
    generate("one", GenerationParams(), SmalltalkPolicy(), backend)
    generate("two", GenerationParams(), SmalltalkPolicy(), backend)
    assert backend.call_count == 2
