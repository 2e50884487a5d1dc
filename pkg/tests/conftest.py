import time

import pytest

from tieflow.cooccur import build_cooccurrence_graph
from tieflow.events import TimeRange
from tieflow.ifs import FlowParams, detect_communities
from tieflow.orient import orient_edges
from tieflow.pagerank import pagerank
from tieflow.synth import SyntheticConfig, generate
from tieflow.tiedecay import DecayParams, snapshot_at

WEEK = 7 * 86400

# The end-to-end verification configuration: 200 students in 4 planted
# communities, 3 same-community co-visits per pair per week against 0.2
# across communities, over a 12-week semester with 60 s pairing jitter.
PLANTED = dict(
    n_students=200,
    n_communities=4,
    semester=TimeRange(0, 12 * WEEK),
    intra_rate=3.0,
    inter_rate=0.2,
    jitter=60,
    seed=0,
)
HALF_LIFE = 7 * 86400.0


@pytest.fixture(scope="session")
def planted_pipeline():
    """Full pipeline on the planted-community config (built once per session)."""
    started = time.monotonic()
    config = SyntheticConfig(**PLANTED)
    log, truth = generate(config)
    tie_graph = orient_edges(build_cooccurrence_graph(log, window=120))
    snapshot = snapshot_at(tie_graph, DecayParams.from_half_life(HALF_LIFE), config.semester.end)
    ranking = pagerank(snapshot)
    assignment = detect_communities(snapshot, ranking, 0.2, FlowParams(beta=0.25, seed=0))
    return dict(
        config=config,
        log=log,
        truth=truth,
        tie_graph=tie_graph,
        snapshot=snapshot,
        ranking=ranking,
        assignment=assignment,
        build_seconds=time.monotonic() - started,
    )
