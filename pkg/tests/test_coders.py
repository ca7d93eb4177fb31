import math
import zlib

import numpy as np
import pytest

from lsc.coders import (CodeStream, FrozenModel, arith_decode, arith_encode,
                        frozen_codelength, kt_codelength_iid,
                        kt_codelength_markov, redundancy_markov)
from lsc.models import (BernoulliModel, MarkovModel, entropy_rate, sample_iid,
                        sample_markov, stationary)
from lsc.specfn import binary_entropy, binary_kl

LN2 = math.log(2.0)


def kt_sequential_iid(x) -> float:
    # direct product of add-1/2 conditionals, the definition
    total = 0.0
    k = t = 0
    for bit in x:
        p1 = (k + 0.5) / (t + 1.0)
        total -= math.log2(p1 if bit else 1.0 - p1)
        k += bit
        t += 1
    return total


def kt_sequential_markov(x) -> float:
    total = 1.0  # first symbol at probability 1/2
    ones = [0, 0]
    seen = [0, 0]
    for prev, cur in zip(x[:-1], x[1:]):
        p1 = (ones[prev] + 0.5) / (seen[prev] + 1.0)
        total -= math.log2(p1 if cur else 1.0 - p1)
        ones[prev] += cur
        seen[prev] += 1
    return total


def test_frozen_model_validation():
    with pytest.raises(ValueError):
        FrozenModel("iid", (0.2, 0.3))
    with pytest.raises(ValueError):
        FrozenModel("markov", (1.2, 0.3))
    with pytest.raises(ValueError):
        FrozenModel("huffman", (0.5,))


def test_frozen_codelength_iid_examples():
    x = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
    assert frozen_codelength(FrozenModel("iid", (0.5,)), x) == pytest.approx(8.0)
    assert frozen_codelength(FrozenModel("iid", (0.25,)), [1, 1, 1, 1]) == pytest.approx(8.0)
    assert frozen_codelength(FrozenModel("iid", (0.5 / 11,)), [1]) == pytest.approx(4.459432, abs=1e-6)
    assert frozen_codelength(FrozenModel("iid", (0.0,)), [0, 1]) == math.inf
    assert frozen_codelength(FrozenModel("iid", (0.0,)), [0, 0]) == 0.0
    assert frozen_codelength(FrozenModel("iid", (0.3,)), []) == 0.0


def test_frozen_codelength_markov_decomposition():
    model = FrozenModel("markov", (0.8, 0.4))
    pi0, pi1 = stationary(MarkovModel(0.8, 0.4))
    x = [0, 0, 1, 1, 0]
    want = -math.log2(pi0)
    want += -math.log2(0.8)        # 0 -> 0
    want += -math.log2(1 - 0.8)    # 0 -> 1
    want += -math.log2(0.4)        # 1 -> 1
    want += -math.log2(1 - 0.4)    # 1 -> 0
    assert frozen_codelength(model, x) == pytest.approx(want, rel=1e-12)
    assert frozen_codelength(model, [1]) == pytest.approx(-math.log2(pi1), rel=1e-12)


def test_frozen_expectation_identity_exact():
    # E[codelength] = l * (h(p) + D(p||phat)), summed exactly over the counts
    for l in (4, 9, 16):
        for p in (0.2, 0.5, 0.83):
            for ph in (0.3, 0.5, 0.9):
                model = FrozenModel("iid", (ph,))
                mean = 0.0
                for k in range(l + 1):
                    w = math.comb(l, k) * p ** k * (1 - p) ** (l - k)
                    bits = np.array([1] * k + [0] * (l - k), dtype=np.uint8)
                    mean += w * frozen_codelength(model, bits)
                want = l * (binary_entropy(p) + binary_kl(p, ph))
                assert mean == pytest.approx(want, rel=1e-10)


def test_frozen_expectation_matches_monte_carlo_large_l():
    p, ph, l = 0.23, 0.31, 10 ** 5
    model = FrozenModel("iid", (ph,))
    x = sample_iid(BernoulliModel(p), l, 55)
    want = binary_entropy(p) + binary_kl(p, ph)
    assert frozen_codelength(model, x) / l == pytest.approx(want, abs=0.005)


def test_kt_iid_examples_and_sequential_equivalence():
    assert kt_codelength_iid([0]) == pytest.approx(1.0, rel=1e-12)
    assert kt_codelength_iid([0, 0]) == pytest.approx(-math.log2(0.5 * 0.75), rel=1e-12)
    assert kt_codelength_iid([0, 1]) == pytest.approx(kt_codelength_iid([1, 0]), rel=1e-14)
    rng = np.random.default_rng(3)
    for l in (1, 2, 17, 100, 400):
        x = rng.integers(0, 2, l).astype(np.uint8)
        assert kt_codelength_iid(x) == pytest.approx(kt_sequential_iid(x.tolist()), rel=1e-10)
    assert kt_codelength_iid([]) == 0.0


def test_kt_markov_examples_and_sequential_equivalence():
    assert kt_codelength_markov([0]) == pytest.approx(1.0)
    assert kt_codelength_markov([0, 0]) == pytest.approx(2.0, rel=1e-12)
    rng = np.random.default_rng(4)
    for l in (1, 2, 3, 50, 300):
        x = rng.integers(0, 2, l).astype(np.uint8)
        assert kt_codelength_markov(x) == pytest.approx(kt_sequential_markov(x.tolist()), rel=1e-10)
    with pytest.raises(ValueError):
        kt_codelength_markov([])


def test_kt_pointwise_minimax_exhaustive():
    # kt(x) <= min_p frozen(p, x) + log2(l)/2 + 1, and the minimizing frozen
    # coder is the empirical one, so the right side is l*H(k/l) + penalty.
    for l in range(1, 17):
        for k in range(l + 1):
            x = np.array([1] * k + [0] * (l - k), dtype=np.uint8)
            best_frozen = l * binary_entropy(k / l)
            assert kt_codelength_iid(x) <= best_frozen + 0.5 * math.log2(l) + 1.0 + 1e-9


def test_kt_markov_redundancy_on_iid_input():
    # two contexts cost at most twice the one-context penalty plus a constant
    x = sample_iid(BernoulliModel(0.5), 4096, 77)
    per_symbol = kt_codelength_markov(x) / 4096
    assert per_symbol - 1.0 <= 2 * math.log2(4096) / 4096 + 3.0 / 4096


def test_redundancy_markov_values():
    true = MarkovModel(0.5, 0.5)
    assert redundancy_markov(true, FrozenModel("markov", (0.5, 0.5))) == 0.0
    got = redundancy_markov(true, FrozenModel("markov", (0.25, 0.25)))
    assert got == pytest.approx(binary_kl(0.5, 0.25), rel=1e-12)
    with pytest.raises(ValueError):
        redundancy_markov(true, FrozenModel("iid", (0.5,)))


def test_redundancy_markov_monte_carlo_crosscheck():
    true = MarkovModel(0.85, 0.35)
    frozen = FrozenModel("markov", (0.8, 0.45))
    l = 10 ** 6
    x = sample_markov(true, 1, l, 31).sequences[0]
    excess = (frozen_codelength(frozen, x) - l * entropy_rate(true)) / l
    assert excess == pytest.approx(redundancy_markov(true, frozen), abs=0.002)


# --- arithmetic coder -------------------------------------------------------

def test_roundtrip_fuzz_with_payload_window():
    rng = np.random.default_rng(12)
    for trial in range(600):
        n = int(rng.integers(0, 160)) if trial % 8 else int(rng.choice([0, 1, 2]))
        x = rng.integers(0, 2, n).astype(np.uint8)
        mode = trial % 4
        if mode == 0:
            model = FrozenModel("iid", (float(rng.uniform(0.01, 0.99)),))
            ideal = frozen_codelength(model, x)
        elif mode == 1:
            model = FrozenModel("markov", (float(rng.uniform(0.01, 0.99)),
                                           float(rng.uniform(0.01, 0.99))))
            ideal = frozen_codelength(model, x)
        elif mode == 2:
            model = "kt-iid"
            ideal = kt_codelength_iid(x)
        else:
            model = "kt-markov"
            ideal = kt_codelength_markov(x) if n else 0.0
        cs = arith_encode(model, x)
        back = arith_decode(CodeStream.from_bytes(cs.to_bytes()))
        assert np.array_equal(back, x)
        if n:
            # quantization can only move the realized codelength by ~1e-8/bit
            assert -1e-7 * n <= cs.payload_bits - ideal <= 2.0 + 1e-7 * n
        else:
            assert cs.payload_bits == 0 and cs.payload == b""


def test_payload_close_to_entropy_for_matched_frozen_model():
    x = sample_iid(BernoulliModel(0.1), 10 ** 5, 9)
    cs = arith_encode(FrozenModel("iid", (0.1,)), x)
    rate = cs.payload_bits / 10 ** 5
    assert abs(rate - binary_entropy(0.1)) < 0.005
    x = sample_iid(BernoulliModel(0.5), 10 ** 5, 10)
    cs = arith_encode(FrozenModel("iid", (0.5,)), x)
    assert cs.payload_bits <= 10 ** 5 + 2


def test_adaptive_mode_matches_kt_codelength():
    rng = np.random.default_rng(5)
    x = rng.integers(0, 2, 2000).astype(np.uint8)
    cs = arith_encode("kt-iid", x)
    assert 0.0 <= cs.payload_bits - kt_codelength_iid(x) <= 2.0 + 1e-4
    cs = arith_encode("kt-markov", x)
    assert 0.0 <= cs.payload_bits - kt_codelength_markov(x) <= 2.0 + 1e-4


def test_encode_rejects_boundary_parameters_when_fatal():
    with pytest.raises(ValueError):
        arith_encode(FrozenModel("iid", (0.0,)), [0, 1, 0])
    with pytest.raises(ValueError):
        arith_encode(FrozenModel("iid", (1.0,)), [1, 0])
    # harmless boundary: the impossible symbol never occurs
    cs = arith_encode(FrozenModel("iid", (1.0,)), [1, 1, 1])
    assert np.array_equal(arith_decode(cs), [1, 1, 1])
    with pytest.raises(ValueError):
        arith_encode(FrozenModel("markov", (0.0, 0.5)), [0, 0])
    with pytest.raises(ValueError):
        arith_encode("kt-huffman", [0, 1])


def test_codestream_container_layout_and_corruption():
    x = np.array([1, 0, 1], dtype=np.uint8)
    cs = arith_encode(FrozenModel("iid", (0.25,)), x)
    blob = cs.to_bytes()
    assert blob[:4] == b"LSC1"
    assert blob[4] == 1          # version
    assert blob[5] == 0          # frozen-iid class
    assert np.frombuffer(blob[6:14], dtype="<f8")[0] == 0.25
    assert int.from_bytes(blob[14:22], "little") == 3
    assert zlib.crc32(blob[:-4]) == int.from_bytes(blob[-4:], "little")

    for mutate in (0, 5, len(blob) - 1):
        bad = bytearray(blob)
        bad[mutate] ^= 0x55
        with pytest.raises(ValueError):
            CodeStream.from_bytes(bytes(bad))
    kinds = {"iid": 0, "markov": 1, "kt-iid": 2, "kt-markov": 3}
    cs2 = arith_encode("kt-markov", x)
    assert cs2.to_bytes()[5] == kinds["kt-markov"]


def test_empty_stream_roundtrips():
    cs = arith_encode("kt-iid", [])
    blob = cs.to_bytes()
    back = CodeStream.from_bytes(blob)
    assert arith_decode(back).size == 0
