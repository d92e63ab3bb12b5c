import math

import numpy as np
import pytest
from hypothesis import given, settings

from faithful_transmission.elements import ConfigError, NoiseUnitary
from faithful_transmission.noise import NoiseFamily, sample
from faithful_transmission.protocol import (
    BRANCHES,
    CORRECTIONS,
    PAULI_SET,
    STAGES,
    DecoderConfig,
    InputQubit,
    analyze_recoverability,
    correct_and_score,
    discard_probability,
    entangled_target,
    post_select,
    run_pipeline,
)
from faithful_transmission.state import (
    Path,
    TwoPhotonState,
    global_phase_fidelity,
    polarization_amplitudes,
    squared_norm,
)

from conftest import qubit_strategy, unitary_strategy

IDENT = NoiseUnitary(1, 0, 0, 1)
Q = InputQubit(0.6, 0.8j)


def kept(final):
    return math.fsum(b.probability for b in post_select(final))


def test_input_validation():
    with pytest.raises(ConfigError):
        InputQubit(1, 1)
    with pytest.raises(ConfigError):
        DecoderConfig(fs_efficiency=1.5)
    with pytest.raises(ConfigError):
        DecoderConfig(variant="spatial")


def test_trace_has_all_stages():
    _, trace = run_pipeline(Q, IDENT, DecoderConfig())
    assert [name for name, _ in trace] == list(STAGES)


def test_identity_noise_final_state():
    final, _ = run_pipeline(Q, IDENT, DecoderConfig())
    amps = {(r.pol.value, r.path.value, s.pol.value, s.path.value): a for (r, s), a in final}
    r2 = 1 / math.sqrt(2)
    assert amps == pytest.approx({
        ("H", "out_3y", "V", "out_3y"): r2 * Q.alpha,
        ("V", "out_3x", "H", "out_3x"): r2 * Q.beta,
        ("V", "out_3x", "V", "out_3y"): r2 * Q.alpha,
        ("H", "out_3y", "H", "out_3x"): r2 * Q.beta,
    })
    res = {b.branch: b.probability for b in post_select(final)}
    assert res[(Path.OUT_3X, Path.OUT_3Y)] == pytest.approx(0.5, abs=1e-12)
    assert sum(res.values()) == pytest.approx(0.5, abs=1e-12)
    assert discard_probability(final, post_select(final)) == pytest.approx(0.5, abs=1e-12)


def test_hwp0_disabled_leaves_pre_decoder_equal_post_pbs2():
    _, trace = run_pipeline(Q, sample(NoiseFamily("haar", seed=1), 0), DecoderConfig(with_hwp0=False))
    snaps = dict(trace)
    assert dict(snaps["pre-decoder"].amplitudes) == dict(snaps["post-pbs2"].amplitudes)


@given(qubit_strategy(), unitary_strategy())
@settings(max_examples=80, deadline=None)
def test_ideal_kept_probability_is_half(q, u):
    final, _ = run_pipeline(q, u, DecoderConfig())
    assert abs(kept(final) - 0.5) < 1e-12
    assert abs(squared_norm(final) - 1.0) < 1e-12


@given(qubit_strategy(), unitary_strategy())
@settings(max_examples=80, deadline=None)
def test_fixed_correction_is_faithful(q, u):
    final, _ = run_pipeline(q, u, DecoderConfig())
    total = 0.0
    for b in post_select(final):
        for o in correct_and_score(b, q):
            total += o.joint_probability
            if o.joint_probability > 0:
                assert o.fidelity > 1 - 1e-10
    assert abs(total - 0.5) < 1e-12


@given(qubit_strategy(), unitary_strategy())
@settings(max_examples=50, deadline=None)
def test_kept_branches_hold_entangled_pair(q, u):
    final, _ = run_pipeline(q, u, DecoderConfig())
    for b in post_select(final):
        if b.probability > 0:
            assert global_phase_fidelity(polarization_amplitudes(b.state), entangled_target(q)) > 1 - 1e-10


@pytest.mark.parametrize("eta", [0.0, 0.25, 0.5, 0.65, 0.75, 1.0])
def test_fs_scaling(eta, haar):
    for i in range(5):
        u = haar(i)
        dual, _ = run_pipeline(Q, u, DecoderConfig("frequency_dual_fs", fs_efficiency=eta))
        single, _ = run_pipeline(Q, u, DecoderConfig("frequency_single_fs", fs_efficiency=eta))
        assert abs(kept(dual) - eta**2 / 2) < 1e-12
        assert abs(kept(single) - eta / 2) < 1e-12


def test_dual_fs_at_065():
    u = sample(NoiseFamily("rotation", {"theta": 0.4}), 0)
    final, _ = run_pipeline(Q, u, DecoderConfig(fs_efficiency=0.65))
    assert kept(final) == pytest.approx(0.21125, abs=1e-12)


def test_temporal_eraser_gives_one_eighth(haar):
    for i in range(20):
        final, _ = run_pipeline(Q, haar(i), DecoderConfig("temporal_eraser"))
        assert abs(kept(final) - 0.125) < 1e-12


def test_without_hwp0_output_is_not_faithful(haar):
    # success stays 1/2 but the fixed correction no longer recovers the qubit
    worst = 1.0
    for i in range(20):
        final, _ = run_pipeline(Q, haar(i), DecoderConfig(with_hwp0=False))
        assert abs(kept(final) - 0.5) < 1e-12
        for b in post_select(final):
            for o in correct_and_score(b, Q):
                if o.joint_probability > 1e-9:
                    worst = min(worst, o.fidelity)
    assert worst < 0.99


def test_branch_order_and_zero_branches():
    final, _ = run_pipeline(Q, IDENT, DecoderConfig())
    res = post_select(final)
    assert [b.branch for b in res] == list(BRANCHES)
    for b in res[1:]:
        # identity noise only populates out_3x/out_3y
        assert b.probability == 0.0 and len(b.state) == 0
        plus, minus = correct_and_score(b, Q)
        assert plus.joint_probability == 0.0 and plus.fidelity is None


def test_recoverability_picks_fixed_table(haar):
    final, _ = run_pipeline(Q, haar(3), DecoderConfig())
    for b in post_select(final):
        if b.probability == 0:
            continue
        op, f = analyze_recoverability(b.state, "plus_x", Q)
        assert op.name == "sigma_x" and f == pytest.approx(1.0)
        op, f = analyze_recoverability(b.state, "minus_x", Q)
        assert op.name == "minus_i_sigma_y" and f == pytest.approx(1.0)


def test_recoverability_edge_cases():
    assert analyze_recoverability(TwoPhotonState(), "plus_x", Q) == (PAULI_SET[0], 0.0)
    with pytest.raises(ValueError):
        analyze_recoverability(TwoPhotonState(), "plus_x", Q, ())


def test_correction_matrices():
    y = CORRECTIONS["minus_i_sigma_y"].matrix
    assert np.allclose(y, [[0, 1], [-1, 0]])
    assert np.allclose(y @ y.conj().T, np.eye(2))
