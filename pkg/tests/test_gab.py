import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurogab.gab import (
    DecoderParams,
    HMatrix,
    bits,
    bitstring,
    enumerate_codebook,
    gab_decode,
    gab_rounds,
    syndrome,
)


def test_example_shape(H):
    assert (H.M, H.N, H.d_v, H.d_c) == (4, 8, 2, 4)
    assert H.is_regular
    assert H.M * H.d_c == H.N * H.d_v


def test_example_edges(H):
    assert H.checks_of(0) == [1, 3]
    assert H.checks_of(4) == [0, 3]
    assert H.checks_of(5) == [1, 2]


def test_example_pins(H):
    assert not syndrome(H, "10001101").any()
    assert bitstring(syndrome(H, "10001100")) == "1010"
    assert len(enumerate_codebook(H)) == 32
    assert H.rank2() == 3


def test_syndrome_examples(H):
    assert bitstring(syndrome(H, "00000000")) == "0000"
    with pytest.raises(ValueError):
        syndrome(H, "101")


def test_running_example(H):
    res = gab_decode(H, "10001100", DecoderParams(100))
    assert bitstring(res.x_prime) == "10001101"
    assert res.converged and res.iterations_used == 1


def test_zero_word(H):
    res = gab_decode(H, "00000000")
    assert res.converged and not res.x_prime.any()


def test_codeword_fixed_point(H):
    for cw in enumerate_codebook(H):
        for it in (1, 5, 100):
            res = gab_decode(H, cw, DecoderParams(it))
            assert res.converged and res.iterations_used == 1
            assert tuple(res.x_prime) == cw


def test_degeneracy_identity_dv2(H, dataset):
    # with d_v = 2 every variable-to-check message is the received bit
    m_idx, n_idx = np.nonzero(H.entries)
    for w in dataset:
        r = bits(w)
        for state in gab_rounds(H, r, DecoderParams(4)):
            assert np.array_equal(state.vnc, r[n_idx])


def test_monotone_check(H, dataset):
    for w in dataset:
        seen_zero = False
        for state in gab_rounds(H, w, DecoderParams(10)):
            if seen_zero:
                assert not state.syndrome.any()
            seen_zero |= not state.syndrome.any()


def test_converged_implies_zero_syndrome(H, dataset):
    for w in dataset:
        res = gab_decode(H, w)
        if res.converged:
            assert not syndrome(H, res.x_prime).any()
        else:
            assert res.iterations_used == 100


def test_dataset_structure(H, dataset):
    assert len(dataset) == 288
    # minimum distance 2: some flips of different codewords coincide
    assert len(set(dataset)) == 224
    assert (1, 0, 0, 0, 1, 1, 0, 0) in dataset
    book = enumerate_codebook(H)
    assert dataset[:32] == book
    assert dataset[32 + 8 * book.index((1, 0, 0, 0, 1, 1, 0, 1)) + 7] == (1, 0, 0, 0, 1, 1, 0, 0)


def test_dataset_convergence_count(H, dataset):
    # A 4x8 code with column weight 2 has only 6 distinct column pairs, so
    # two variables always share both checks; a flip on either of them
    # misleads its twin and cannot be corrected.
    results = [gab_decode(H, w) for w in dataset]
    assert sum(r.converged for r in results) == 160
    failed_positions = {k % 8 for k, r in enumerate(results[32:]) if not r.converged}
    twins = [(a, b) for a, b in itertools.combinations(range(8), 2)
             if H.checks_of(a) == H.checks_of(b)]
    assert failed_positions == {v for pair in twins for v in pair}


def test_automorphism_symmetry(H, dataset):
    rows = {tuple(r) for r in H.entries}
    auts = [p for p in itertools.permutations(range(8))
            if {tuple(r[list(p)]) for r in H.entries} == rows]
    assert len(auts) > 1
    for p in auts[:8]:
        for w in dataset[::7]:
            permuted = tuple(w[i] for i in p)
            a = gab_decode(H, w, DecoderParams(5))
            b = gab_decode(H, permuted, DecoderParams(5))
            assert tuple(a.x_prime[list(p)]) == tuple(b.x_prime)
            assert a.converged == b.converged


def test_codebook_full_rank():
    h = HMatrix(np.hstack([np.eye(3, dtype=np.uint8), np.ones((3, 2), dtype=np.uint8)]))
    assert len(enumerate_codebook(h)) == 2 ** (5 - 3)


def test_codebook_too_large():
    h = HMatrix(np.zeros((1, 25), dtype=np.uint8))
    with pytest.raises(ValueError):
        enumerate_codebook(h)


def test_irregular_and_bad_inputs(H):
    h = HMatrix.from_rows(["110", "011"][:1] + ["001"])
    assert not h.is_regular
    with pytest.raises(ValueError):
        gab_decode(h, "101")
    with pytest.raises(ValueError):
        gab_decode(H, "1010")
    with pytest.raises(ValueError):
        HMatrix(np.ones((3, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        bits("10x")
    with pytest.raises(ValueError):
        DecoderParams(0)


def test_default_thresholds():
    assert DecoderParams().thresholds(2) == (Fraction(1), Fraction(3, 2))
    assert DecoderParams().thresholds(3) == (Fraction(3, 2), Fraction(2))


def _brute_decode(H, r, max_iter):
    """Direct transcription of the update rules over explicit edge dicts."""
    b2, b3 = DecoderParams(max_iter).thresholds(H.d_v)
    r = [int(x) for x in r]
    edges = H.edges()
    v2c = {(m, n): r[n] for m, n in edges}
    x = r[:]
    for it in range(1, max_iter + 1):
        c2v = {(m, n): sum(v2c[(m, t)] for t in H.variables_of(m) if t != n) % 2
               for m, n in edges}
        new = {}
        for m, n in edges:
            s = sum(c2v[(t, n)] for t in H.checks_of(n) if t != m) + r[n]
            new[(m, n)] = 1 if s > b2 else 0 if s < b2 else r[n]
        v2c = new
        x = []
        for n in range(H.N):
            s = sum(c2v[(t, n)] for t in H.checks_of(n)) + r[n]
            x.append(1 if s > b3 else 0 if s < b3 else r[n])
        if all(sum(x[t] for t in H.variables_of(m)) % 2 == 0 for m in range(H.M)):
            return x, True, it
    return x, False, max_iter


def _regular_h(rng, n, d_v, d_c):
    m = n * d_v // d_c
    while True:
        stubs = rng.permutation(np.repeat(np.arange(n), d_v))
        h = np.zeros((m, n), dtype=np.uint8)
        ok = True
        for row in range(m):
            cols = stubs[row * d_c:(row + 1) * d_c]
            if len(set(cols)) < d_c:
                ok = False
                break
            h[row, cols] = 1
        if ok:
            return HMatrix(h)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(6, 2, 3), (8, 2, 4), (12, 3, 4),
                                                    (10, 3, 5), (9, 2, 3)]),
       st.integers(1, 6))
def test_vectorised_matches_edge_transcription(seed, shape, max_iter):
    rng = np.random.default_rng(seed)
    H = _regular_h(rng, *shape)
    r = rng.integers(0, 2, H.N)
    res = gab_decode(H, r, DecoderParams(max_iter))
    x, conv, it = _brute_decode(H, r, max_iter)
    assert list(res.x_prime) == x
    assert (res.converged, res.iterations_used) == (conv, it)
