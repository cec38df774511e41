"""End-to-end acceptance criteria, one test per criterion.

Each test asserts its own wall-clock budget. The terminal summary prints a
PASS/FAIL line per criterion (see conftest.py).
"""

import itertools
import math
import subprocess
import sys

import numpy as np
import pytest

from mdiqss.adversary import measure_detection_rate
from mdiqss.coding import logical_error_rate, repetition_decode
from mdiqss.ghz import (
    ProductStateSpec,
    all_labels,
    all_product_specs,
    analyze_linear_optics,
    decompose_in_ghz_basis,
    linear_optics_success_probability,
    predict_collapse,
)
from mdiqss.protocol import DecodeMethod, SessionConfig, Verdict, decode_message, run_session
from mdiqss.quantum import Eigenstate
from mdiqss.streams import derive_seed

from reference_data import COEFFICIENTS, ODD_EXAMPLE, PRINTED_EXPANSIONS
from test_ghz import oracle_collapse, oracle_ghz, oracle_product

XY = ["+x", "-x", "+y", "-y"]


@pytest.mark.acceptance(1, "three-photon GHZ decompositions")
def test_ghz_decomposition_fidelity(stopwatch):
    worst = 0.0
    for tokens in itertools.product(XY, repeat=3):
        spec = ProductStateSpec.parse(tokens)
        dec = decompose_in_ghz_basis(spec.state())
        key = " ".join(tokens)
        if key in PRINTED_EXPANSIONS:
            printed = PRINTED_EXPANSIONS[key]
            expected = {lab: COEFFICIENTS[printed[lab]] / 2 if lab in printed else 0 for lab in all_labels(3)}
        elif key in ODD_EXAMPLE:
            expected = {lab: c / 4 for lab, c in ODD_EXAMPLE[key].items()}
        else:
            psi = oracle_product(tokens)
            expected = {lab: np.vdot(oracle_ghz(lab), psi) for lab in all_labels(3)}
        for lab in all_labels(3):
            worst = max(worst, abs(dec.amplitude(lab) - expected[lab]))
        if spec.alpha % 2 == 0:
            support = dec.support()
            for b1, b2 in itertools.product("01", repeat=2):
                assert not {b1 + b2 + "0", b1 + b2 + "1"} <= support
        else:
            assert all(abs(p - 1 / 8) < 1e-9 for p in dec.probabilities().values())
    assert worst < 1e-9
    assert len(PRINTED_EXPANSIONS) == 32
    assert stopwatch() < 1


@pytest.mark.acceptance(2, "linear-optics analyzer success rate")
def test_analyzer_success_rate(stopwatch):
    for spec in all_product_specs(3):
        assert abs(linear_optics_success_probability(spec.state()) - 0.25) < 1e-12
    for m in (4, 5, 6):
        for spec in all_product_specs(m):
            assert abs(linear_optics_success_probability(spec.state()) - 1 / 2 ** (m - 1)) < 1e-12
    assert 1 / 2 ** (6 - 1) == 1 / 32
    rng = np.random.default_rng(20240)
    trials = 100_000
    for m, tokens in ((3, "+x -y +y"), (6, "+y +x -x +x -y +x")):
        state = ProductStateSpec.parse(tokens).state()
        p = 1 / 2 ** (m - 1)
        wins = sum(analyze_linear_optics(state, rng).success for _ in range(trials))
        assert abs(wins / trials - p) <= 3 * math.sqrt(p * (1 - p) / trials)
    assert stopwatch() < 10


@pytest.mark.acceptance(3, "collapse tables agree with projection")
def test_table_correlations(stopwatch):
    agree = 0
    for pair in itertools.product(XY, repeat=2):
        for label in ("000", "001"):
            rec = [Eigenstate.parse(t) for t in pair]
            got = predict_collapse(label, rec, check_tables=True)
            agree += str(got) == oracle_collapse(label, pair)
    assert agree == 32
    assert str(predict_collapse("000", [Eigenstate.parse("+x")] * 2)) == "-x"
    assert stopwatch() < 1


@pytest.mark.acceptance(4, "honest sessions recover the message")
def test_protocol_correctness(stopwatch):
    rng = np.random.default_rng(4)
    for i in range(100):
        message = "".join(map(str, rng.integers(2, size=int(rng.integers(1, 12)))))
        cfg = SessionConfig(k1=200, k2=100, n_receivers=2, master_seed=derive_seed(4, i), message=message)
        t = run_session(cfg)
        assert t.check_error_rate == 0
        assert t.verdict is Verdict.PROCEED
        assert t.decoding.recovered_message == message
        assert t.integrity_ok
        other = decode_message(t, DecodeMethod.II)
        assert other.recovered_message == message and other.integrity_ok
    assert stopwatch() < 30


@pytest.mark.acceptance(5, "attack detection")
def test_attack_detection(stopwatch):
    # per-check error over >= 10^4 checked rounds
    t = run_session(SessionConfig(k1=10, k2=84_000, attack="intercept-resend", master_seed=5))
    assert t.check.checked >= 10_000
    assert abs(t.check.error_rate - 0.25) <= 0.02

    s = 16
    expected = 1 - 0.75**s
    cfg = SessionConfig(k1=16, k2=320, check_rounds=s, master_seed=55)
    ir = measure_detection_rate(cfg, "intercept-resend", 300)
    tp = measure_detection_rate(cfg, "teleport", 300)
    assert ir.check_shortfalls == 0 and tp.check_shortfalls == 0
    assert abs(ir.detection_rate - expected) <= 0.03
    assert abs(tp.detection_rate - ir.detection_rate) <= 0.03
    assert stopwatch() < 60


@pytest.mark.acceptance(6, "multiparty GHZ statistics")
def test_multiparty_statistics(stopwatch):
    def check(spec):
        n = spec.m - 1
        probs = decompose_in_ghz_basis(spec.state()).probabilities()
        nonzero = [p for p in probs.values() if p > 1e-9]
        if spec.alpha % 2 == 0:
            assert len(nonzero) == 2**n
            assert all(abs(p - 1 / 2**n) < 1e-9 for p in nonzero)
        else:
            assert len(nonzero) == 2 ** (n + 1)
            assert all(abs(p - 1 / 2 ** (n + 1)) < 1e-9 for p in nonzero)

    for spec in all_product_specs(4):
        check(spec)
    rng = np.random.default_rng(6)
    for _ in range(500):
        check(ProductStateSpec.parse([XY[i] for i in rng.integers(4, size=5)]))
    assert stopwatch() < 30


@pytest.mark.acceptance(7, "repetition code logical error")
def test_repetition_coding(stopwatch):
    exact = logical_error_rate(0.1, 5)
    assert abs(exact - 0.00856) <= 1e-5
    # the leading term alone, for the record; not enforced against the exact value
    assert abs(10 * 0.1**3 * 0.9**2 - 0.0081) < 1e-9
    rng = np.random.default_rng(7)
    blocks = 1_000_000
    flips = (rng.random((blocks, 5)) < 0.1).astype(np.uint8)
    rate = repetition_decode(flips.ravel(), 5).mean()
    assert abs(rate - exact) <= 3 * math.sqrt(exact * (1 - exact) / blocks)
    assert stopwatch() < 30


@pytest.mark.acceptance(8, "CLI determinism")
def test_cli_determinism(stopwatch):
    commands = [
        ["run", "--seed", "42", "--k1", "60", "--k2", "40"],
        ["run", "--seed", "42", "--attack", "teleport", "--k1", "40", "--k2", "40", "--noise-p", "0.02"],
        ["sweep", "--seed", "7", "--attack", "none,intercept-resend", "--receivers", "2,3",
         "--k1", "20", "--k2", "20", "--format", "csv"],
        ["detect", "--seed", "3", "--trials", "5", "--k1", "5", "--k2", "40"],
        ["decompose", "-y", "+x", "-y"],
        ["check-tables"],
    ]
    for argv in commands:
        outs = [
            subprocess.run([sys.executable, "-m", "mdiqss", *argv], capture_output=True, check=True).stdout
            for _ in range(2)
        ]
        assert outs[0] == outs[1] and outs[0]
    assert stopwatch() < 5
