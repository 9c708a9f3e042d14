from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgcache.errors import DecodeFailure, InvalidDemand, NotRegular, SizeMismatch
from pgcache.pda import PDA, example_pda, validate_pda
from pgcache import simulator as sim


def _roundtrip(A, mode, N, file_size, demands, seed=0):
    lib = sim.FileLibrary(N, file_size, seed)
    cache = sim.place(A, lib)
    if mode == "broadcast":
        log = sim.deliver_broadcast(A, lib, demands)
        dec = sim.decode_broadcast
    else:
        log = sim.deliver_d2d(A, cache, demands, N)
        dec = sim.decode_d2d
    out = [dec(k, A, cache, log) for k in range(A.K)]
    return lib, cache, log, out


def test_library_is_seeded():
    a, b, c = sim.FileLibrary(3, 40, 1), sim.FileLibrary(3, 40, 1), sim.FileLibrary(3, 40, 2)
    assert (a.files == b.files).all() and a.digests == b.digests
    assert a.digests != c.digests
    with pytest.raises(SizeMismatch):
        a.subfiles(7)
    with pytest.raises(SizeMismatch):
        sim.FileLibrary(0, 10)


def test_example_placement():
    A = example_pda()
    lib = sim.FileLibrary(4, 8, 0)
    cache = sim.place(A, lib)
    for k in range(4):
        assert len(cache.rows[k]) == 2
        assert cache.bytes_used(k) == Fraction(1, 2) * 4 * 8


def test_empty_star_column_caches_nothing():
    A = PDA([[1, 0], [0, 1]])
    B = PDA([[1, 2], [3, 4]])
    cache = sim.place(B, sim.FileLibrary(2, 4, 0))
    assert cache.bytes_used(0) == 0 and cache.bytes_used(1) == 0
    assert validate_pda(A).ok


def test_example_broadcast_all_demands():
    A = example_pda()
    for demands in np.ndindex(4, 4, 4, 4):
        lib, _, log, out = _roundtrip(A, "broadcast", 4, 8, list(demands))
        assert log.payloads.shape[0] == 4 and log.rate == 1
        for k in range(4):
            assert (out[k] == lib.files[demands[k]]).all()


def test_minimal_multicast():
    A = PDA([[1, 0], [0, 1]])
    lib, _, log, out = _roundtrip(A, "broadcast", 2, 6, [0, 1])
    assert log.payloads.shape == (1, 3)
    assert (out[0] == lib.files[0]).all() and (out[1] == lib.files[1]).all()


def test_broadcast_2411(pda_2411):
    rng = np.random.default_rng(4)
    d = rng.integers(0, 8, 105)
    lib, cache, log, out = _roundtrip(pda_2411, "broadcast", 8, 1050, d)
    assert log.payloads.shape[0] == 840 and log.rate == 8
    assert all((out[k] == lib.files[d[k]]).all() for k in range(105))
    budget = Fraction(57, 105) * 8 * 1050
    assert all(cache.bytes_used(k) <= budget for k in range(105))


def test_d2d_example():
    A = example_pda()
    lib, _, log, out = _roundtrip(A, "d2d", 4, 8, [3, 2, 1, 0])
    assert log.rate == 2
    assert all((out[k] == lib.files[[3, 2, 1, 0][k]]).all() for k in range(4))


def test_d2d_2411(pda_2411):
    d = np.random.default_rng(5).integers(0, 4, 105)
    lib, cache, log, out = _roundtrip(pda_2411, "d2d", 4, 525, d)
    assert log.rate == Fraction(48, 5)
    assert all((out[k] == lib.files[d[k]]).all() for k in range(105))
    # every transmission is sent by a user that holds all the pieces it combines
    assert sum(log.per_user_rates(105)) == Fraction(48, 5)


def test_worst_case_demands(pda_2411):
    r = sim.verify_roundtrip("broadcast", pda_2411, demands=[[0] * 105], N=4)
    assert r.decoded_ok and r.measured_rate == 8
    r = sim.verify_roundtrip("d2d", pda_2411, demands=[[0] * 105], N=4)
    assert r.decoded_ok and r.measured_rate == Fraction(48, 5)


def test_demand_obliviousness(pda_2411):
    lib = sim.FileLibrary(8, 105, 0)
    cache = sim.place(pda_2411, lib)
    shapes = set()
    for seed in range(3):
        d = np.random.default_rng(seed).integers(0, 8, 105)
        shapes.add(sim.deliver_broadcast(pda_2411, lib, d).payloads.shape)
        log = sim.deliver_d2d(pda_2411, sim.place(pda_2411, sim.FileLibrary(8, 525, 0)), d, 8)
        shapes.add((len(log.transmissions), log.total_bytes()))
    assert len(shapes) == 2


def test_invalid_demands():
    A = example_pda()
    lib = sim.FileLibrary(4, 8, 0)
    for bad in ([0, 1, 2], [0, 1, 2, 4], [0, 1, 2, -1], [0.5, 1, 2, 3]):
        with pytest.raises(InvalidDemand):
            sim.deliver_broadcast(A, lib, bad)


def test_d2d_requires_regular_pda():
    A = PDA([[1, 0, 0], [0, 1, 2], [2, 2, 0]])
    cache = sim.place(A, sim.FileLibrary(3, 6, 0))
    with pytest.raises(NotRegular):
        sim.deliver_d2d(A, cache, [0, 1, 2], 3)
    single = PDA([[1]])
    with pytest.raises(NotRegular):
        sim.deliver_d2d(single, sim.place(single, sim.FileLibrary(1, 1, 0)), [0], 1)


def test_d2d_size_mismatch(pda_2411):
    cache = sim.place(pda_2411, sim.FileLibrary(2, 105, 0))
    with pytest.raises(SizeMismatch):
        sim.deliver_d2d(pda_2411, cache, [0] * 105, 2)


def test_flipped_bit_detected():
    A = example_pda()
    lib = sim.FileLibrary(4, 8, 0)
    cache = sim.place(A, lib)
    d = [0, 1, 2, 3]
    log = sim.deliver_broadcast(A, lib, d)
    log.payloads[0, 0] ^= 1
    got = [sim.decode_broadcast(k, A, cache, log) for k in range(4)]
    assert any(sim._digest(g) != lib.digests[d[k]] for k, g in enumerate(got))


def test_invalid_pda_decode_failure():
    # same label in crossing positions: user 0 lacks what it needs
    A = PDA([[1, 1], [0, 0]])
    lib = sim.FileLibrary(2, 2, 0)
    cache = sim.place(A, lib)
    log = sim.deliver_broadcast(A, lib, [0, 1])
    with pytest.raises(DecodeFailure) as info:
        sim.decode_broadcast(0, A, cache, log)
    assert info.value.user == 0 and info.value.subfile == 0


def test_missing_d2d_transmission():
    A = example_pda()
    lib = sim.FileLibrary(4, 4, 0)
    cache = sim.place(A, lib)
    log = sim.deliver_d2d(A, cache, [0, 1, 2, 3], 4)
    log.transmissions.pop(0)
    with pytest.raises(DecodeFailure):
        for k in range(4):
            sim.decode_d2d(k, A, cache, log)


def test_verify_roundtrip_report(pda_2411):
    r = sim.verify_roundtrip("d2d", pda_2411, seed=0, N=4, params=(2, 4, 1, 1))
    assert r.ok and r.decoded_ok and r.cache_ok
    d = r.to_dict()
    assert d["measured_rate"]["exact"] == "48/5" and d["closed_form_rate"]["value"] == 9.6
    assert "runtime_ms" not in d and "runtime_ms" in r.to_dict(timing=True)
    assert (d["K"], d["F"], d["S"], d["g"]) == (105, 105, 840, 6)


def test_file_size_padding():
    r = sim.verify_roundtrip("d2d", example_pda(), file_size=5)
    assert r.file_size == 8 and r.padding == 3 and r.ok


def test_unknown_mode():
    with pytest.raises(ValueError):
        sim.verify_roundtrip("carrier-pigeon", example_pda())


@st.composite
def random_valid_pda(draw):
    """Small PDAs from a random transversal design: label each (row, col) pair or leave a star."""
    F = draw(st.integers(2, 6))
    K = draw(st.integers(2, 6))
    Z = draw(st.integers(0, F - 1))
    seed = draw(st.integers(0, 10**6))
    rng = np.random.default_rng(seed)
    E = np.zeros((F, K), dtype=int)
    for k in range(K):
        nonstar = rng.choice(F, F - Z, replace=False)
        E[nonstar, k] = -1
    # greedily merge non-star cells into labels while C3 holds
    label = 0
    cells = [tuple(x) for x in np.argwhere(E == -1)]
    rng.shuffle(cells)
    groups = []
    for cell in cells:
        for grp in groups:
            ok = all(
                cell[0] != r and cell[1] != c and E[cell[0], c] == 0 and E[r, cell[1]] == 0 for r, c in grp
            )
            if ok and rng.random() < 0.7:
                grp.append(cell)
                break
        else:
            groups.append([cell])
    for grp in groups:
        label += 1
        for r, c in grp:
            E[r, c] = label
    return PDA(E)


@given(random_valid_pda(), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_roundtrip_property(A, seed):
    assert validate_pda(A).ok
    r = sim.verify_roundtrip("broadcast", A, seed=seed, trials=2)
    assert r.ok and r.measured_rate == Fraction(A.S, A.F)
    if A.g is not None and A.g >= 2:
        r = sim.verify_roundtrip("d2d", A, seed=seed)
        assert r.ok and r.measured_rate == Fraction(A.g, A.g - 1) * Fraction(A.S, A.F)
