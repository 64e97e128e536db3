import json
import math
from dataclasses import replace

import numpy as np
import pytest

from smf_paths import AuditFailure, InvalidArgument, generate_instance, instance_from_weights, path_stats
from smf_paths.bridge import (
    BridgeConfig,
    audit_bridge,
    feasibility,
    log_f,
    paper_schedule,
    partition_vertices,
    run_bridge,
)
from smf_paths.light import GoodSpec, is_good
from smf_paths.overlap import DisjointFamily, extract_disjoint_good_paths

PI1 = tuple(range(9))
PI2 = tuple(range(9, 18))
SPEC = GoodSpec(0.5, 2.0, 8)


def fixture_instance(landing):
    """20 vertices: two good paths of 8 edges in V1 = 0..17, reservoir V2 = {18, 19}.

    Every other edge weighs 5; the open end {7, 8} reaches 18 through the
    lightest edge (7, 18), and 18 reaches ``landing`` in the end segments of
    PI2 through the lightest connector.
    """
    mat = np.full((20, 20), 5.0)
    for p in (PI1, PI2):
        for a, b in zip(p, p[1:]):
            mat[a, b] = mat[b, a] = 0.8
    mat[7, 18] = mat[18, 7] = 0.01
    mat[18, landing] = mat[landing, 18] = 0.02
    return instance_from_weights(20, mat)


def fixture_family():
    return DisjointFamily([PI1, PI2], 2, 0, 18, SPEC)


CONFIG = BridgeConfig(nu=1, length=8, delta=0.8, zeta1=0.2)


def test_fixture_paths_are_good():
    inst = fixture_instance(16)
    assert all(is_good(path_stats(inst, p), SPEC) for p in (PI1, PI2))


def test_fixture_landing_on_far_segment():
    # hand trace: cut gamma after 7 (drops edge 7-8), bridge 7-18-16, then PI2 walked back to 9
    inst = fixture_instance(16)
    res = run_bridge(inst, fixture_family(), CONFIG)
    assert res.gamma == (0, 1, 2, 3, 4, 5, 6, 7, 18, 16, 15, 14, 13, 12, 11, 10, 9)
    assert res.iterations == 1
    assert res.bridge_weights == [pytest.approx(0.03)]
    assert res.segment_lengths == [7, 7]
    assert res.log[0].bridge == (7, 18, 16)
    assert res.log[0].dropped_edges == 1
    report = audit_bridge(res, inst, fixture_family(), CONFIG, 0.5)
    assert report.length == 16 and all(report.checks.values())


def test_fixture_landing_on_near_segment():
    inst = fixture_instance(9)
    res = run_bridge(inst, fixture_family(), CONFIG)
    assert res.gamma == (0, 1, 2, 3, 4, 5, 6, 7, 18) + PI2
    assert res.length == sum(res.segment_lengths) + 2 * res.iterations == 17


def test_fixture_accounting():
    res = run_bridge(fixture_instance(16), fixture_family(), CONFIG)
    entry = res.log[0]
    assert entry.t_before - entry.t_after == 2 * CONFIG.end_segment
    assert entry.m_before - entry.m_after == CONFIG.nu


def test_single_round_returns_first_path():
    cfg = BridgeConfig(nu=1, length=8, delta=0.45, zeta1=0.2)
    assert cfg.rounds(20) == 1
    res = run_bridge(fixture_instance(16), fixture_family(), cfg)
    assert res.gamma == PI1 and res.iterations == 0 and res.length == 8


def test_infeasible_gives_empty_result():
    cfg = BridgeConfig(nu=2, length=8, delta=0.8, zeta1=0.2)
    res = run_bridge(fixture_instance(16), fixture_family(), cfg)
    assert res.gamma == () and res.iterations == 0
    assert math.isinf(res.average)
    assert not res.feasibility.feasible
    with pytest.raises(InvalidArgument):
        audit_bridge(res, fixture_instance(16), fixture_family(), cfg, 0.5)


def test_family_outside_v1_rejected():
    bad = DisjointFamily([PI1, tuple(range(11, 20))], 2, 0, 18, SPEC)
    with pytest.raises(InvalidArgument):
        run_bridge(fixture_instance(16), bad, CONFIG)


def test_tampered_result_fails_audit():
    inst = fixture_instance(16)
    res = run_bridge(inst, fixture_family(), CONFIG)
    broken = replace(res, segment_lengths=[7, 3])
    with pytest.raises(AuditFailure):
        audit_bridge(broken, inst, fixture_family(), CONFIG, 0.5)


def test_config_validation():
    for kwargs in ({"nu": 0, "length": 8, "delta": 0.5}, {"nu": 1, "length": 7, "delta": 0.5},
                   {"nu": 1, "length": 8, "delta": 1.0}, {"nu": 1, "length": 8, "delta": 0.5, "zeta1": 0.0}):
        with pytest.raises(InvalidArgument):
            BridgeConfig(**kwargs)
    assert BridgeConfig(1, 13, 0.5).end_segment == 3


def test_partition_examples():
    v1, v2 = partition_vertices(100, 0.2, 0.5)
    assert (len(v1), len(v2)) == (90, 10)
    assert len(partition_vertices(1000, 0.2, 0.25)[1]) == 50
    # tiny eta leaves at most one reservoir vertex, and an empty reservoir is simply infeasible
    assert len(partition_vertices(50, 0.2, 1e-6)[1]) == 1
    assert not feasibility(BridgeConfig(1, 8, 0.4), 10, 0, 50).feasible
    with pytest.raises(InvalidArgument):
        partition_vertices(2, 0.2, 0.9)


def test_feasibility_examples():
    cfg = BridgeConfig(1, 8, 0.5)
    assert not feasibility(cfg, 10, 100, 8).feasible  # delta n / ell = 0.5
    ok = feasibility(BridgeConfig(1, 8, 0.4), 10, 10, 200)
    assert ok.feasible and ok.rounds == 10
    bad = feasibility(BridgeConfig(2, 8, 0.12), 10, 5, 200)
    assert bad.rounds == 3 and any("reservoir" in v for v in bad.violations)
    assert any("family" in v for v in feasibility(BridgeConfig(1, 8, 0.4), 3, 50, 200).violations)


def test_schedule_examples():
    assert paper_schedule(0.01, zeta2=1.0).ln_ell == pytest.approx(20010.0)
    assert paper_schedule(0.04, zeta2=1.0).ln_delta == pytest.approx(-35000.0)
    expected = -2000.0 + (3 * math.log(0.25) - 56) / 2
    assert log_f(8.0, 0.25, 1.0) == pytest.approx(expected)
    with pytest.raises(InvalidArgument):
        paper_schedule(1.0)


def test_schedule_log_nu_matches_formula():
    s = paper_schedule(0.25, zeta1=0.2, zeta2=1.0)
    assert s.ln_nu == pytest.approx(math.log(0.2) + 2 * (s.ln_ell + math.log(0.25)) - math.log(11))
    assert s.constraints["nu_upper"]
    assert set(json.loads(s.to_json())["constraints"]) >= {"nu_lower", "nu_lower_with_eta"}


@pytest.fixture(scope="module")
def medium_run():
    inst = generate_instance(400, seed=7)
    spec = GoodSpec(0.5, 2.0, 8)
    fam = extract_disjoint_good_paths(inst, spec, 0.2, 2 * 10**6, "sampled", anchors=300, per_anchor=1, seed=7)
    cfg = BridgeConfig(nu=2, length=8, delta=0.1, zeta1=0.2)
    return inst, fam, cfg, run_bridge(inst, fam, cfg)


def test_medium_run_structure(medium_run):
    inst, fam, cfg, res = medium_run
    assert res.feasibility.feasible, res.feasibility.violations
    report = audit_bridge(res, inst, fam, cfg, 0.5)
    k = cfg.rounds(inst.n)
    assert res.iterations == k - 1
    assert report.length >= k * math.ceil(cfg.length / 2)
    assert len(set(res.gamma)) == len(res.gamma)
    middles = [e.bridge[1] for e in res.log]
    assert all(m >= fam.n_star for m in middles) and len(set(middles)) == len(middles)


def test_medium_run_deterministic(medium_run):
    inst, fam, cfg, res = medium_run
    again = run_bridge(inst, fam, cfg)
    assert again.gamma == res.gamma
    assert again.to_dict() == res.to_dict()
    json.dumps(res.to_dict())
