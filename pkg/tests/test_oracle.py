import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smf_paths import ResourceLimit, generate_instance, instance_from_weights, path_stats
from smf_paths.light import LightSpec, search_light_paths
from smf_paths.oracle import (
    brute_force_min_weights,
    build_oracle,
    enumerate_light_paths,
    exhaustive_light_count,
    read_L,
)

TRIANGLE = instance_from_weights(3, {(0, 1): 1.0, (1, 2): 2.0, (0, 2): 4.0})


def test_two_vertices():
    inst = generate_instance(2, seed=9)
    assert build_oracle(inst).min_weight[1] == inst.weight(0, 1)


def test_triangle_table():
    table = build_oracle(TRIANGLE, with_paths=True)
    assert table.min_weight[1] == 1.0 and table.min_weight[2] == 3.0
    assert table.argmin[2] in ((0, 1, 2), (2, 1, 0))


def test_triangle_read_L():
    table = build_oracle(TRIANGLE)
    assert read_L(table, 1.6) == 2
    assert read_L(table, 1.4) == 1
    assert read_L(table, 0.9) == 0


def test_guard():
    with pytest.raises(ResourceLimit):
        build_oracle(generate_instance(23, seed=0))


@pytest.mark.parametrize("seed", range(4))
def test_matches_permutation_enumeration(seed):
    # third route: itertools.permutations over all ordered simple paths
    n = 7
    inst = generate_instance(n, seed=seed)
    w = inst.matrix
    ref = np.full(n, np.inf)
    for m in range(1, n):
        for p in itertools.permutations(range(n), m + 1):
            ref[m] = min(ref[m], sum(w[a, b] for a, b in zip(p, p[1:])))
    got = build_oracle(inst).min_weight
    assert np.allclose(got[1:], ref[1:], rtol=1e-12)


def test_argmin_paths_attain_table():
    inst = generate_instance(10, seed=3)
    table = build_oracle(inst, with_paths=True)
    for m in range(1, 10):
        p = table.argmin[m]
        assert len(p) == m + 1
        assert path_stats(inst, p).total_weight == pytest.approx(table.min_weight[m], rel=1e-12)


def test_csv_export():
    text = build_oracle(TRIANGLE).to_csv().splitlines()
    assert text[0] == "m,min_weight"
    assert text[2].startswith("2,3")


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 11), st.integers(0, 2**32), st.lists(st.floats(0.01, 3.0), min_size=2, max_size=12))
def test_read_L_monotone(n, seed, lams):
    table = build_oracle(generate_instance(n, seed=seed))
    lams = sorted(lams)
    Ls = [read_L(table, lam) for lam in lams]
    assert Ls == sorted(Ls)


def test_light_count_trivial():
    inst = generate_instance(8, seed=0)
    assert exhaustive_light_count(inst, 3, LightSpec(0.5, 1.0)) == 0  # 1.5 - 1.73 < 0
    assert exhaustive_light_count(inst, 3, LightSpec(1e9, 0.0)) == 8 * 7 * 6 * 5


@pytest.mark.parametrize("seed", range(5))
def test_light_count_matches_search(seed):
    inst = generate_instance(8, seed=seed)
    spec = LightSpec(1.0, 1.0)
    res = search_light_paths(inst, 3, spec, 10**8)
    assert exhaustive_light_count(inst, 3, spec) == len(res.paths) == len(enumerate_light_paths(inst, 3, spec))


def test_light_count_guard():
    with pytest.raises(ResourceLimit):
        exhaustive_light_count(generate_instance(200, seed=0), 4, LightSpec(1.0))


def test_brute_force_guard():
    with pytest.raises(ResourceLimit):
        brute_force_min_weights(generate_instance(11, seed=0))


def test_min_weight_table_hand_case():
    # two cheap edges form the best 2-path; any 3-path must use a heavy edge
    mat = np.full((4, 4), 10.0)
    mat[0, 1] = mat[1, 0] = 0.1
    mat[1, 2] = mat[2, 1] = 0.1
    inst = instance_from_weights(4, mat)
    t = build_oracle(inst).min_weight
    assert math.isclose(t[2], 0.2) and t[3] > t[2]
