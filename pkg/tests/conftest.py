import itertools
import math
from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("dppkit", max_examples=60, deadline=None)
settings.load_profile("dppkit")

DATA = Path(__file__).parent / "data"
TOY = Path(str(files("dppkit") / "data" / "toy"))


def random_psd(rng, n, rank=None, scale=1.0):
    """Wishart-style PSD matrix ``B B^T / k`` with ``k`` columns."""
    k = n if rank is None else rank
    B = rng.normal(size=(n, k))
    return scale * (B @ B.T) / max(k, 1)


def all_subsets(n):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


def det_sub(L, Y):
    """Plain determinant of a principal submatrix (1 for the empty set)."""
    if not Y:
        return 1.0
    return float(np.linalg.det(L[np.ix_(Y, Y)]))


def enumerate_probs(L):
    """Brute-force ``{Y: det(L_Y) / sum_Y' det(L_Y')}`` over every subset."""
    subs = list(all_subsets(L.shape[0]))
    dets = np.array([det_sub(L, Y) for Y in subs])
    return dict(zip(subs, dets / math.fsum(dets)))


@pytest.fixture
def rng():
    return np.random.default_rng(20120101)


@pytest.fixture(scope="session")
def fixture_cluster():
    from dppkit.text import ingest

    return ingest(DATA / "fixture_cluster")


@pytest.fixture(scope="session")
def fixture_expected():
    import json

    return json.loads((DATA / "fixture_expected.json").read_text())


@pytest.fixture(scope="session")
def toy_clusters():
    from dppkit.text import ingest_corpus

    return ingest_corpus(TOY / "train"), ingest_corpus(TOY / "test")


@pytest.fixture(scope="session")
def toy_trained(toy_clusters):
    from dppkit.text.pipeline import train_on_clusters

    train, _ = toy_clusters
    return train_on_clusters(train, sigma2=1.0, rho=0.3)


def random_instance(rng, n, m, d=None, gold=None, scale=0.5):
    """Random conditional-DPP instance with unit similarity vectors."""
    from dppkit import Instance

    d = d or max(n, 1)
    phi = rng.normal(size=(n, d))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    F = scale * rng.normal(size=(n, m))
    if gold is None:
        gold = tuple(i for i in range(n) if rng.random() < 0.4)
    return Instance(features=F, phi=phi, costs=np.ones(n), gold=gold)


def planted_training_set(rng, m=4, n_inst=6):
    """Instances whose gold sets are drawn from the DPP at a random ``theta*``."""
    from dppkit import Instance, build_conditional_l
    from dppkit.sampler import SamplerState

    theta_star = rng.normal(size=m)
    insts = []
    for t in range(n_inst):
        n = int(rng.integers(3, 8))
        base = random_instance(rng, n, m, d=n + 1, gold=())
        L = build_conditional_l(theta_star, base)
        gold = SamplerState(L, seed=int(rng.integers(2**63))).sample()
        insts.append(Instance(base.features, base.phi, base.costs, gold=gold, id=f"p{t}"))
    return theta_star, insts


# (criterion number, description, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, desc, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {desc} [{detail}]")
