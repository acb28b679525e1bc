import pytest

from fedlime.corpus import default_synthetic_spec, generate_synthetic, split_train_test
from fedlime.features import VectorizerConfig, vectorize
from fedlime.model import Dataset, TrainConfig, fit_centralized


def labeled_dataset(corpus, vec):
    return Dataset.from_pairs([(vectorize(vec, d.text), d.label) for d in corpus.labeled], vec.hash_dim)


@pytest.fixture(scope="session")
def vec():
    return VectorizerConfig()


@pytest.fixture(scope="session")
def synth_spec():
    return default_synthetic_spec(n_docs=1000, balance=0.58, seed=0)


@pytest.fixture(scope="session")
def synth_split(synth_spec):
    return split_train_test(generate_synthetic(synth_spec), 0.2, seed=0)


@pytest.fixture(scope="session")
def trained(synth_split, vec):
    train, _ = synth_split
    return fit_centralized(labeled_dataset(train, vec), vec.hash_dim, TrainConfig(seed=0))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, text): acceptance criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, text = marker.args
    results = item.config._acceptance
    prev = results.get(cid, (text, True))
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    results[cid] = (text, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results, key=lambda c: int(c[1:])):
        text, ok = results[cid]
        terminalreporter.write_line(f"{cid:>4} {'PASS' if ok else 'FAIL'}  {text}")
