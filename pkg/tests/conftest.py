import pytest

from faqgate.calibration import calibrate
from faqgate.embedding import EmbeddingProviderSpec, make_provider
from faqgate.faq import build_index, ingest_faq
from faqgate.fixtures import generate_fixtures, load_dataset


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    generate_fixtures(str(out), seed=7)
    return out


@pytest.fixture(scope="session")
def toy_provider():
    spec = EmbeddingProviderSpec(provider_kind="toy_hash", model_id="toy-hash-demo", dim=256)
    return make_provider(spec)


@pytest.fixture(scope="session")
def demo_corpus(demo_dir):
    entries, answers = ingest_faq(str(demo_dir / "faq.jsonl"), str(demo_dir / "answers.jsonl"))
    return entries, answers


@pytest.fixture(scope="session")
def demo_index(demo_corpus, toy_provider):
    entries, _ = demo_corpus
    return build_index(entries, toy_provider)


@pytest.fixture(scope="session")
def demo_val(demo_dir):
    return load_dataset(str(demo_dir / "val.jsonl"))


@pytest.fixture(scope="session")
def demo_test(demo_dir):
    return load_dataset(str(demo_dir / "test.jsonl"))


@pytest.fixture(scope="session")
def frozen_config(demo_index, toy_provider, demo_val):
    config, report = calibrate(
        [(text, label) for _, text, label in demo_val],
        demo_index,
        toy_provider,
        domain="demo",
        calibrated_at="2026-01-01T00:00:00+00:00",
    )
    return config
