import numpy as np
import pytest

from faithful_transmission import oracle, reference
from faithful_transmission.noise import NoiseFamily, sample
from faithful_transmission.protocol import DecoderConfig, InputQubit, post_select, run_pipeline

from conftest import qubits

CONFIGS = [
    DecoderConfig(),
    DecoderConfig(fs_efficiency=0.65),
    DecoderConfig("frequency_single_fs", fs_efficiency=0.4),
    DecoderConfig("temporal_eraser"),
    DecoderConfig("temporal_eraser", eraser_transmission=0.3, with_hwp0=False),
    DecoderConfig(with_hwp0=False),
]


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: f"{c.variant}-{c.fs_efficiency}-{c.eraser_transmission}-{c.with_hwp0}")
def test_dense_matches_sparse(cfg):
    fam = NoiseFamily("haar", seed=77)
    for i, q in enumerate(qubits(10, seed=5)):
        u = sample(fam, i)
        final, _ = run_pipeline(q, u, cfg)
        dense = oracle.oracle_evolve(q.alpha, q.beta, u.matrix, cfg.variant, cfg.fs_efficiency,
                                     cfg.eraser_transmission, cfg.with_hwp0)
        assert np.max(np.abs(dense - oracle.sparse_to_dense(final))) < 1e-12
        probs = oracle.branch_probabilities(dense)
        for b in post_select(final):
            assert abs(probs[(b.branch[0].value, b.branch[1].value)] - b.probability) < 1e-12


def test_lossless_stages_preserve_norm():
    u = sample(NoiseFamily("haar", seed=1), 0).matrix
    psi = oracle.initial_array(0.6, 0.8j)
    for name, m in oracle.stage_matrices(u, "frequency_dual_fs", 1.0, 0.5, True):
        psi = m @ psi @ m.T
        assert abs(np.vdot(psi, psi).real - 1.0) < 1e-12, name


def test_zero_component_stays_zero():
    u = sample(NoiseFamily("haar", seed=2), 0).matrix
    a = oracle.oracle_evolve(1.0, 0.0, u)
    b = oracle.oracle_evolve(0.0, 1.0, u)
    both = oracle.oracle_evolve(0.6, 0.8, u)
    assert np.allclose(0.6 * a + 0.8 * b, both, atol=1e-14)


@pytest.mark.parametrize("stage", list(reference.TABLES))
def test_stage_tables(stage):
    fam = NoiseFamily("haar", seed=31)
    for i, q in enumerate(qubits(100, seed=8)):
        u = sample(fam, i)
        _, trace = run_pipeline(q, u, DecoderConfig())
        fid, dev = reference.compare(dict(trace)[stage], reference.TABLES[stage](q, u))
        assert fid > 1 - 1e-10 and dev < 1e-12


def test_stage_table_detects_a_wrong_coefficient():
    q, u = InputQubit(0.6, 0.8), sample(NoiseFamily("haar", seed=4), 0)
    _, trace = run_pipeline(q, u, DecoderConfig())
    table = reference.final_terms(q, u)
    key = ("V", "out_3x", "V", "out_3y")  # shares its branch with another term
    table[key] = -table[key]
    fid, _ = reference.compare(dict(trace)["final"], table)
    assert fid < 1 - 1e-6
