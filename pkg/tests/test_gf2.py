import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bb84_info_z import gf2

PC3 = [[1, 1, 0], [0, 1, 1]]


def bits(s):
    return gf2.as_bits(s)


# --- independent oracles --------------------------------------------------

def drm_oracle(vectors, r, m):
    """Double minimum written out with tuples and explicit coefficient loops."""
    vs = [tuple(int(b) for b in v) for v in vectors]
    n = len(vs[0])
    best = None
    for rp in range(r, r + m):
        for coeffs in itertools.product((0, 1), repeat=rp):
            u = [0] * n
            for a, v in zip(coeffs, vs[:rp]):
                if a:
                    u = [x ^ y for x, y in zip(u, v)]
            d = sum(x != y for x, y in zip(u, vs[rp]))
            best = d if best is None else min(best, d)
    return best


def decode_oracle(y, pc, xi):
    """Scan every string with the right syndrome; keep (distance, error string) smallest."""
    n = len(y)
    best = None
    for cand in itertools.product((0, 1), repeat=n):
        s = tuple(sum(a * b for a, b in zip(cand, row)) % 2 for row in pc)
        if s != tuple(xi):
            continue
        err = tuple(a ^ b for a, b in zip(cand, y))
        key = (sum(err), err)
        if best is None or key < best[0]:
            best = (key, cand)
    return np.array(best[1], dtype=np.uint8)


def min_distance_oracle(pc):
    n = len(pc[0])
    best = n + 1
    for cand in itertools.product((0, 1), repeat=n):
        if any(cand) and all(sum(a * b for a, b in zip(cand, row)) % 2 == 0 for row in pc):
            best = min(best, sum(cand))
    return best


# --- examples --------------------------------------------------------------

@pytest.mark.parametrize("x, expected", [("000", "00"), ("110", "01"), ("111", "00")])
def test_syndrome_examples(x, expected):
    assert gf2.bits_to_str(gf2.syndrome(bits(x), PC3)) == expected


@pytest.mark.parametrize("x, pk, expected", [
    ("0000", [[1, 0, 1, 1], [0, 1, 1, 0]], "00"),
    ("101", [[1, 0, 1]], "0"),
    ("100", [[1, 0, 1], [1, 1, 0]], "11"),
])
def test_key_map_examples(x, pk, expected):
    assert gf2.bits_to_str(gf2.apply_key_map(bits(x), pk)) == expected


@pytest.mark.parametrize("mat, expected", [
    (np.eye(3, dtype=int), 3),
    ([[1, 0, 1], [1, 0, 1]], 1),
    ([[1, 1, 0], [0, 1, 1], [1, 0, 1]], 2),
])
def test_rank_examples(mat, expected):
    assert gf2.rank(mat) == expected


@pytest.mark.parametrize("vectors, r, m, expected", [
    (["1011"], 0, 1, 3),
    (["100", "011"], 1, 1, 2),
    (["1000", "0110", "0001"], 1, 2, 1),
])
def test_drm_examples(vectors, r, m, expected):
    vecs = np.array([bits(v) for v in vectors])
    assert gf2.code_distance_drm(vecs, r, m) == expected


def test_decoder_examples():
    y = bits("110")
    assert np.array_equal(gf2.decode_to_coset_leader(y, PC3, gf2.syndrome(y, PC3)), y)
    assert gf2.bits_to_str(gf2.decode_to_coset_leader(bits("100"), PC3, bits("00"))) == "000"
    assert gf2.bits_to_str(gf2.decode_to_coset_leader(bits("111"), PC3, bits("01"))) == "110"


def test_dimension_mismatch_rejected():
    with pytest.raises(gf2.Gf2Error):
        gf2.syndrome(bits("1010"), PC3)
    with pytest.raises(gf2.Gf2Error):
        gf2.apply_key_map(bits("10"), [[1, 0, 1]])


def test_caps_are_explicit():
    vecs = np.eye(gf2.MAX_DRM_VECTORS + 1, dtype=np.uint8)
    with pytest.raises(gf2.CapExceeded, match="too large"):
        gf2.code_distance_drm(vecs, 1, gf2.MAX_DRM_VECTORS)
    n = gf2.MAX_DECODE_N + 1
    with pytest.raises(gf2.CapExceeded):
        gf2.decode_to_coset_leader(np.zeros(n, np.uint8), np.eye(1, n, dtype=np.uint8), bits("1"))


def test_no_parity_rows_decodes_to_input():
    y = np.ones(40, dtype=np.uint8)
    assert np.array_equal(gf2.decode_to_coset_leader(y, np.zeros((0, 40), np.uint8), bits("")), y)


def test_code_spec_rejects_dependent_rows():
    with pytest.raises(gf2.Gf2Error):
        gf2.LinearCodeSpec(gf2.as_matrix([[1, 1, 0]]), gf2.as_matrix([[1, 1, 0]]))
    code = gf2.LinearCodeSpec(gf2.as_matrix(PC3), gf2.as_matrix([[1, 0, 0]]))
    assert (code.n, code.r, code.m) == (3, 2, 1)
    assert gf2.rank(code.stacked()) == 3


def test_matrix_text_roundtrip():
    mat = gf2.as_matrix([[1, 0, 1, 1], [0, 1, 1, 0]])
    text = gf2.format_matrix(mat)
    assert text.splitlines()[0] == "2 4"
    assert np.array_equal(gf2.parse_matrix("# comment\n" + text), mat)
    with pytest.raises(gf2.Gf2Error):
        gf2.parse_matrix("2 4\n1 0 1 1\n")


# --- oracle comparisons ---------------------------------------------------

def test_drm_matches_oracle_on_random_codes():
    rng = np.random.default_rng(11)
    for _ in range(150):
        n = int(rng.integers(2, 9))
        total = int(rng.integers(1, min(n, 5) + 1))
        r = int(rng.integers(0, total))
        vecs = gf2.random_full_rank(total, n, rng)
        assert gf2.code_distance_drm(vecs, r, total - r) == drm_oracle(vecs, r, total - r)


def test_decoder_matches_oracle_on_random_codes():
    rng = np.random.default_rng(12)
    for _ in range(120):
        n = int(rng.integers(2, 9))
        r = int(rng.integers(1, n))
        pc = gf2.random_full_rank(r, n, rng)
        y = rng.integers(0, 2, n, dtype=np.uint8)
        xi = rng.integers(0, 2, r, dtype=np.uint8)
        got = gf2.decode_to_coset_leader(y, pc, xi)
        assert np.array_equal(got, decode_oracle(y, pc.tolist(), xi))


def test_minimum_distance_matches_oracle():
    rng = np.random.default_rng(13)
    for _ in range(60):
        n = int(rng.integers(2, 11))
        r = int(rng.integers(1, n))
        pc = gf2.random_full_rank(r, n, rng)
        assert gf2.minimum_distance(pc) == min_distance_oracle(pc.tolist())


def test_random_code_respects_min_distance():
    rng = np.random.default_rng(14)
    code = gf2.random_code(10, 6, 2, rng, min_distance=3)
    assert gf2.minimum_distance(code.pc) >= 3
    assert gf2.rank(code.stacked()) == 8


# --- properties -----------------------------------------------------------

@st.composite
def code_and_strings(draw, max_n=12):
    n = draw(st.integers(2, max_n))
    r = draw(st.integers(1, n - 1))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    pc = gf2.random_full_rank(r, n, rng)
    x = np.array(draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.uint8)
    e = np.array(draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.uint8)
    return pc, x, e


@settings(max_examples=200, deadline=None)
@given(code_and_strings())
def test_syndrome_is_linear(data):
    pc, x, e = data
    lhs = gf2.syndrome(x ^ e, pc)
    assert np.array_equal(lhs, gf2.syndrome(x, pc) ^ gf2.syndrome(e, pc))


@settings(max_examples=200, deadline=None)
@given(code_and_strings())
def test_decoding_corrects_within_half_distance(data):
    pc, x, e = data
    d = gf2.minimum_distance(pc)
    # trim the error to the guaranteed radius
    support = np.flatnonzero(e)[: max((d - 1) // 2, 0)]
    e = np.zeros_like(x)
    e[support] = 1
    assert 2 * gf2.weight(e) < d
    assert np.array_equal(gf2.decode_to_coset_leader(x ^ e, pc, gf2.syndrome(x, pc)), x)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=30), st.data())
def test_xor_involution_and_hamming_metric(a, data):
    n = len(a)
    b = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    c = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    a, b, c = (np.array(v, dtype=np.uint8) for v in (a, b, c))
    assert np.array_equal(gf2.xor(gf2.xor(a, b), b), a)
    assert gf2.hamming(a, b) == gf2.weight(a ^ b) == gf2.hamming(b, a)
    assert gf2.hamming(a, c) <= gf2.hamming(a, b) + gf2.hamming(b, c)
    assert 0 <= gf2.weight(a) <= n


def test_rank_bounded_and_bits_roundtrip():
    rng = np.random.default_rng(15)
    for _ in range(100):
        rows, cols = rng.integers(1, 9, size=2)
        mat = rng.integers(0, 2, size=(rows, cols))
        assert 0 <= gf2.rank(mat) <= min(rows, cols)
    for v in range(64):
        assert gf2.bits_to_int(gf2.int_to_bits(v, 6)) == v
