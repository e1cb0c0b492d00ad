# tests/conftest.py

import os

import pytest

from app.services.bisim import reduce_matrix
from app.services.frontend import parse_source
from app.services.labels import label_states, pair_labels, parse_label_file
from app.services.pipeline import compile_model
from app.services.translator import annotate_actions
from app.services.validation import validate_model

SAMPLES = os.path.join(os.path.dirname(os.path.dirname(__file__)), "samples")


def sample_path(name: str) -> str:
    return os.path.join(SAMPLES, name)


def read_sample(name: str) -> str:
    with open(sample_path(name), encoding="utf-8") as fh:
        return fh.read()


GOSSIP = """
attype Col enum R, G;
attribute c : Col;

state Talk {
    1/2 :: say*[true]<> . Talk
  + rest :: wait*[false]<> . Listen
}

state Listen {
    1 :: say*[true]() . Talk
  + rest :: wait*[false]<> . Listen
}

init
  (Talk, c=R) * 1;
  (Listen, c=G) * 1;
endinit
"""


# rows sum to 1/2: nothing takes the remaining probability
DEFICIENT = """
attype Col enum R;
attribute c : Col;

state A {
    1/2 :: go*[false]<> . A
}

init
  (A, c=R) * 1;
endinit
"""


@pytest.fixture(scope="session")
def si_source():
    return read_sample("si.piff")


@pytest.fixture(scope="session")
def si_ast(si_source):
    return parse_source(si_source)


@pytest.fixture(scope="session")
def si_model(si_ast):
    return annotate_actions(validate_model(si_ast))


@pytest.fixture(scope="session")
def si_compiled(si_source):
    return compile_model(si_source, prune=True, threads=1)


@pytest.fixture(scope="session")
def si_matrix(si_compiled):
    return si_compiled.matrix


@pytest.fixture(scope="session")
def si_labels(si_matrix):
    """Sh/Sl/Ih/Il labelling of the compiled SI matrix."""
    return label_states(parse_label_file(read_sample("si.lbl")), si_matrix)


@pytest.fixture(scope="session")
def hl_labels(si_matrix):
    return label_states(parse_label_file(read_sample("hl.lbl")), si_matrix)


@pytest.fixture(scope="session")
def si_pairs(si_matrix):
    """The 8-state quotient by (agent state, location)."""
    return reduce_matrix(si_matrix, pair_labels(si_matrix))


@pytest.fixture(scope="session")
def si_reduced(si_matrix, si_labels):
    """The 4-state quotient by Sh/Sl/Ih/Il."""
    return reduce_matrix(si_matrix, si_labels)


@pytest.fixture(scope="session")
def gossip_compiled():
    return compile_model(GOSSIP, prune=False, threads=1)
