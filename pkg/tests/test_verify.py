import math

import numpy as np
import pytest

from fracpois import dist, verify
from fracpois.dist import ProcessParams
from fracpois.sample import RngStream, SampleBatch, sample_batch
from fracpois.verify import (DegenerateBins, OracleConfig, check_fixture,
                             check_min_uniform_space,
                             check_min_uniform_space_time, check_ode_residual,
                             gof_pmf, gof_two_sample, load_fixture,
                             oracle_pmf, two_stage, write_fixture)


def test_gof_pmf_null_is_accepted():
    batch = sample_batch("space", ProcessParams(1.0, 0.5), 1.0, 50_000,
                         RngStream(101))
    rep = gof_pmf(batch)
    assert rep.passed
    assert rep.dof >= 2


def test_gof_pmf_detects_misfit():
    """Counts drawn from the wrong order must be flagged."""
    batch = sample_batch("space", ProcessParams(1.0, 0.8), 1.0, 50_000,
                         RngStream(103))
    wrong = SampleBatch(counts=batch.counts,
                        params=ProcessParams(1.0, 0.5), t=1.0,
                        seed=batch.seed, n=batch.n)
    rep = gof_pmf(wrong)
    assert not rep.passed
    assert rep.p_value < 1e-6


def test_gof_pmf_needs_large_n():
    batch = sample_batch("space", ProcessParams(1.0, 0.5), 1.0, 100,
                         RngStream(0))
    with pytest.raises(ValueError):
        gof_pmf(batch)


def test_gof_two_sample_null():
    a = sample_batch("space", ProcessParams(1.0, 0.6), 1.0, 50_000,
                     RngStream(107))
    b = sample_batch("space", ProcessParams(1.0, 0.6), 1.0, 50_000,
                     RngStream(109))
    assert gof_two_sample(a.counts, b.counts).passed


def test_gof_two_sample_detects_difference():
    a = sample_batch("space", ProcessParams(1.0, 0.6), 1.0, 50_000,
                     RngStream(107))
    b = sample_batch("space", ProcessParams(1.0, 0.9), 1.0, 50_000,
                     RngStream(109))
    rep = gof_two_sample(a.counts, b.counts)
    assert not rep.passed


def test_merge_bins_degenerate():
    with pytest.raises(DegenerateBins):
        verify._merge_bins([1.0, 1.0], [0.5, 0.5], ["0", "1"])


def test_min_uniform_space_z_small():
    res = check_min_uniform_space(0.5, 1.0, 1.0, 0.5, 200_000, RngStream(113))
    assert abs(res.z_score) < 4.0
    assert res.analytic == pytest.approx(math.exp(-math.sqrt(0.5)), rel=1e-12)


def test_min_uniform_space_time_z_small():
    res = check_min_uniform_space_time(0.7, 0.5, 1.0, 1.0, 0.5, 200_000,
                                       RngStream(127))
    assert abs(res.z_score) < 4.0


def test_min_uniform_u_domain():
    with pytest.raises(ValueError):
        check_min_uniform_space(0.5, 1.0, 1.0, 1.5, 1000, RngStream(0))


def test_ode_residual_small_on_true_pmf():
    assert check_ode_residual(ProcessParams(1.0, 0.6), 1.0, 10) < 1e-6


def test_ode_residual_flags_wrong_order():
    """Evaluating the operator with a mismatched order must leave a gap."""
    params = ProcessParams(1.0, 0.6)
    from fracpois import frac_ops
    t, K, h = 1.0, 10, 1e-4
    p_mid = np.array([r.p for r in dist.pmf_row(params, t, K)])
    p_hi = np.array([r.p for r in dist.pmf_row(params, t + h, K)])
    p_lo = np.array([r.p for r in dist.pmf_row(params, t - h, K)])
    dpdt = (p_hi - p_lo) / (2 * h)
    rhs = -(params.lam ** 0.9) * frac_ops.apply_frac_difference(p_mid, 0.9)
    assert np.max(np.abs(dpdt - rhs)) > 1e-2


def test_ode_residual_requires_nu_one():
    with pytest.raises(ValueError):
        check_ode_residual(ProcessParams(1.0, 0.5, 0.5), 1.0, 10)


def test_oracle_matches_series_pmf():
    for params in (ProcessParams(1.0, 0.5), ProcessParams(1.0, 0.7, 0.5),
                   ProcessParams(5.0, 0.3, 0.3)):
        for k in (0, 2, 7):
            ref = float(oracle_pmf(params, 1.0, k))
            got = dist.pmf(params, 1.0, k)
            assert abs(got.p - ref) <= got.abs_error_bound + 1e-15


def test_oracle_poisson_case():
    v = float(oracle_pmf(ProcessParams(2.0), 1.0, 3))
    assert v == pytest.approx(math.exp(-2.0) * 8 / 6, rel=1e-13)


def test_oracle_t_zero():
    assert oracle_pmf(ProcessParams(1.0, 0.5), 0.0, 0) == 1
    assert oracle_pmf(ProcessParams(1.0, 0.5), 0.0, 4) == 0


def test_oracle_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(precision_digits=10)


def test_fixture_round_trip(tmp_path):
    path = tmp_path / "oracle.txt"
    records = [(0.5, 1.0, 1.0, 1.0, k) for k in range(4)]
    write_fixture(path, records, OracleConfig(), meta="round trip")
    rows = load_fixture(path)
    assert len(rows) == 4
    for (a, nu, lam, t, k, v), (_, _, _, _, kk) in zip(rows, records):
        assert (a, nu, lam, t, k) == (0.5, 1.0, 1.0, 1.0, kk)
        ref = float(oracle_pmf(ProcessParams(1.0, 0.5), 1.0, k))
        assert v == pytest.approx(ref, rel=1e-15)


def test_check_fixture_on_small_table(tmp_path):
    path = tmp_path / "oracle.txt"
    write_fixture(path, [(0.7, 0.5, 1.0, 1.0, k) for k in range(6)],
                  OracleConfig())
    ok, failures = check_fixture(path)
    assert ok and not failures


def test_check_fixture_detects_corruption(tmp_path):
    path = tmp_path / "oracle.txt"
    with open(path, "w") as fh:
        fh.write("0.5 1.0 1.0 1.0 0 0.25\n")  # true value is exp(-1)
    ok, failures = check_fixture(path)
    assert not ok and len(failures) == 1


def test_packaged_fixture_loads():
    rows = load_fixture()
    assert len(rows) >= 1000
    combos = {(a, nu, lam) for a, nu, lam, _, _ in
              ((r[0], r[1], r[2], r[3], r[4]) for r in rows)}
    assert (0.3, 0.3, 5.0) in combos and (1.0, 1.0, 0.5) in combos


def test_two_stage_retries_once():
    calls = []

    def run(n, attempt):
        calls.append((n, attempt))
        return attempt == 1, n

    passed, payload = two_stage(run, 100)
    assert passed and payload == 1000
    assert calls == [(100, 0), (1000, 1)]


def test_two_stage_short_circuits_on_pass():
    passed, payload = two_stage(lambda n, attempt: (True, n), 100)
    assert passed and payload == 100
