"""Experiment drivers: config parsing, the frozen CSV schema, determinism,
and per-kind row semantics."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from mclab.errors import InvalidParameterError
from mclab.experiments import (
    FIELDS,
    ExperimentConfig,
    apply_overrides,
    emit,
    parse_config,
    rows_from_csv,
    rows_to_csv,
    run,
    run_certificate,
    run_lower_bound,
    run_model_equiv,
    run_moments,
    run_phase,
    wilson_interval,
)


def _phase_cfg(**kw):
    base = dict(kind="phase", n_grid=(8,), r_grid=(1,), m_grid=(64,),
                model="random_orth", trials=5, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------- config

def test_parse_config_lines_comments_and_grids():
    cfg = parse_config("""
        # sweep
        kind = phase
        n_grid = 16, 32
        p_grid = 0.1,0.25
        trials = 7
        model=low_coherence
    """)
    assert cfg.kind == "phase"
    assert cfg.n_grid == (16, 32)
    assert cfg.p_grid == (0.1, 0.25)
    assert cfg.trials == 7
    assert cfg.model == "low_coherence"
    # untouched keys keep their defaults
    assert cfg.sampling == "bernoulli" and cfg.threads == 1


def test_parse_config_rejects_garbage():
    with pytest.raises(InvalidParameterError):
        parse_config("no_such_key = 3")
    with pytest.raises(InvalidParameterError):
        parse_config("trials = seven")
    with pytest.raises(InvalidParameterError):
        parse_config("just a line without equals")


def test_apply_overrides():
    cfg = _phase_cfg()
    apply_overrides(cfg, ["trials=9", "m_grid=10,20"])
    assert cfg.trials == 9 and cfg.m_grid == (10, 20)
    with pytest.raises(InvalidParameterError):
        apply_overrides(cfg, ["trials"])
    with pytest.raises(InvalidParameterError):
        apply_overrides(cfg, ["bogus=1"])


def test_validation_failures_surface():
    with pytest.raises(InvalidParameterError):
        run(_phase_cfg(kind="nope"))
    with pytest.raises(InvalidParameterError):
        run(_phase_cfg(kind=""))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(model="dense"))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(sampling="poisson"))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(trials=0))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(threads=0))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(n_grid=()))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(m_grid=()))
    with pytest.raises(InvalidParameterError):
        run_phase(_phase_cfg(m_grid=(100,)))  # m > n^2
    with pytest.raises(InvalidParameterError):
        run_model_equiv(_phase_cfg(kind="equiv", equiv_p="3m"))


# ---------------------------------------------------------------- wilson

def test_wilson_interval_reference_value_and_shape():
    lo, hi = wilson_interval(8, 10)
    assert abs(lo - 0.490163) <= 5e-4 and abs(hi - 0.943318) <= 5e-4
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    lo1, hi1 = wilson_interval(2, 10)
    lo2, hi2 = wilson_interval(5, 10)
    assert lo1 < lo2 and hi1 < hi2
    for s in range(11):
        lo, hi = wilson_interval(s, 10)
        assert 0.0 <= lo <= s / 10 <= hi <= 1.0
    with pytest.raises(InvalidParameterError):
        wilson_interval(0, 0)


# ------------------------------------------------------------ CSV schema

def test_fields_schema_is_frozen():
    assert len(FIELDS) == 40
    assert FIELDS[0] == "kind"
    assert FIELDS[-1] == "wall_ms"
    assert FIELDS.index("success_rate") == 9


def test_csv_round_trip_is_exact():
    rows = run_phase(_phase_cfg(m_grid=(40, 64)))
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(FIELDS)
    back = rows_from_csv(text)
    assert back == rows  # dataclass equality, field for field


def test_csv_rejects_malformed_input():
    with pytest.raises(InvalidParameterError):
        rows_from_csv("")
    with pytest.raises(InvalidParameterError):
        rows_from_csv("a,b,c\n1,2,3\n")
    good = rows_to_csv(run_phase(_phase_cfg()))
    header, row = good.splitlines()[:2]
    with pytest.raises(InvalidParameterError):
        rows_from_csv(header + "\n" + row + ",extra\n")


def test_emit_csv_and_svg(tmp_path):
    rows = run_phase(_phase_cfg(m_grid=(40, 64)))
    csv_path = tmp_path / "out.csv"
    emit(rows, str(csv_path))
    assert csv_path.read_text() == rows_to_csv(rows)
    svg_path = tmp_path / "out.svg"
    emit(rows, str(svg_path), fmt="svg")
    root = ET.fromstring(svg_path.read_text())
    assert root.tag.endswith("svg")
    circles = [el for el in root.iter() if el.tag.endswith("circle")]
    assert len(circles) == len(rows)
    with pytest.raises(InvalidParameterError):
        emit([], str(csv_path))
    with pytest.raises(InvalidParameterError):
        emit(rows, str(csv_path), fmt="pdf")


# ---------------------------------------------------------- determinism

def test_reruns_and_thread_counts_are_byte_identical():
    cfg = dict(kind="phase", n_grid=(8,), r_grid=(1,), m_grid=(40, 64),
               model="random_orth", trials=5, seed=11)
    a = rows_to_csv(run_phase(ExperimentConfig(**cfg)))
    b = rows_to_csv(run_phase(ExperimentConfig(**cfg)))
    c = rows_to_csv(run_phase(ExperimentConfig(**cfg, threads=2)))
    assert a == b == c


def test_phase_and_certificate_runs_share_instances():
    # paired streams: both runners draw the same ground truths per trial,
    # visible through identical incoherence summaries
    base = dict(n_grid=(12,), r_grid=(2,), m_grid=(100,),
                model="random_orth", trials=6, seed=13)
    ph = run_phase(ExperimentConfig(kind="phase", **base))[0]
    ce = run_certificate(ExperimentConfig(kind="cert", cert_method="cg", **base))[0]
    assert ph.mean_mu0 == ce.mean_mu0
    assert ph.mean_mu1 == ce.mean_mu1
    assert ph.mean_mu2 == ce.mean_mu2


# ------------------------------------------------------------- run kinds

def test_phase_full_sampling_always_recovers():
    row = run_phase(_phase_cfg(m_grid=(64,)))[0]
    assert row.p == 1.0
    assert row.successes == row.trials and row.success_rate == 1.0
    assert row.mean_relerr <= 1e-6
    assert row.mean_mu0 >= 1.0  # leverage max is at least the average
    assert row.wilson_lo <= 1.0 <= row.wilson_hi
    assert row.wall_ms == 0.0  # timing off by default, keeps bytes frozen


def test_phase_success_grows_with_sampling():
    rows = run_phase(_phase_cfg(n_grid=(10,), m_grid=(25, 100), trials=8))
    assert rows[0].m == 25 and rows[1].m == 100
    assert rows[0].success_rate <= rows[1].success_rate
    assert rows[1].success_rate == 1.0


def test_certificate_rows_carry_spectral_fields():
    row = run_certificate(ExperimentConfig(
        kind="cert", n_grid=(16,), r_grid=(1,), m_grid=(220,),
        model="random_orth", trials=5, seed=17, cert_method="cg"))[0]
    assert 0.0 < row.mean_a_stat < 1.0
    assert row.mean_ptperp >= 0.0
    assert row.successes >= 4  # dense sampling certifies essentially always
    with pytest.raises(InvalidParameterError):
        run_certificate(ExperimentConfig(kind="cert", n_grid=(8,), r_grid=(1,),
                                         m_grid=(30,), cert_method="qr"))


def test_lower_bound_row_algebra():
    cfg = ExperimentConfig(kind="lower", n_grid=(16,), r_grid=(2,),
                           mu0_grid=(2.0,), p_grid=(0.3,), trials=200, seed=19,
                           model="block")
    row = run_lower_bound(cfg)[0]
    assert row.ell == 4  # n / (mu0 * r)
    assert row.pi1 == (1 - 0.3) ** 4
    assert row.pi0 == (1 - 0.3) ** 16
    assert row.prob_closed == 1.0 - (1.0 - row.pi1) ** 16
    assert abs(row.prob_empirical - (1.0 - row.success_rate)) < 1e-12
    assert row.below_m_star == int(row.m < row.m_star)
    with pytest.raises(InvalidParameterError):
        run_lower_bound(ExperimentConfig(kind="lower", n_grid=(16,), r_grid=(2,),
                                         p_grid=(), trials=5))
    with pytest.raises(InvalidParameterError):
        run_lower_bound(ExperimentConfig(kind="lower", n_grid=(16,), r_grid=(2,),
                                         p_grid=(1.5,), trials=5))


def test_model_equiv_rates_and_pooled_se():
    cfg = ExperimentConfig(kind="equiv", n_grid=(10,), r_grid=(1,),
                           m_grid=(80,), model="random_orth", trials=10, seed=23)
    row = run_model_equiv(cfg)[0]
    assert row.p_ber == 80 / 100.0
    se = np.sqrt(row.fail_unif * (1 - row.fail_unif) / 10
                 + 4 * row.fail_ber * (1 - row.fail_ber) / 10)
    assert abs(row.se_pooled - se) <= 1e-12
    assert row.success_rate == 1.0 - row.fail_unif
    cfg2 = ExperimentConfig(kind="equiv", n_grid=(10,), r_grid=(1,),
                            m_grid=(80,), model="random_orth", trials=10,
                            seed=23, equiv_p="2m")
    row2 = run_model_equiv(cfg2)[0]
    assert row2.p_ber == 1.0  # 2m/n^2 capped at one


def test_moments_cells_and_closed_form_column():
    cfg = ExperimentConfig(kind="moments", n_grid=(12,), r_grid=(1,),
                           p_grid=(0.5,), j_grid=(1,), k_grid=(0, 1),
                           model="random_orth", trials=20, seed=29)
    rows = run_moments(cfg)
    assert [row.k for row in rows] == [0, 1]
    assert rows[0].moment_closed == (1 - 0.5) * 1 / 0.5
    assert rows[1].moment_closed is None
    assert all(row.moment_mean >= 0.0 for row in rows)
    assert all(row.moment_bound_poly > 0.0 for row in rows)
    assert all(row.m == round(0.5 * 144) for row in rows)
    with pytest.raises(InvalidParameterError):
        run_moments(ExperimentConfig(kind="moments", n_grid=(12,), r_grid=(1,),
                                     p_grid=(0.5,), trials=1))
    with pytest.raises(InvalidParameterError):
        run_moments(ExperimentConfig(kind="moments", n_grid=(12,), r_grid=(1,),
                                     p_grid=(), trials=5))


def test_run_dispatches_on_kind():
    rows = run(_phase_cfg())
    assert rows[0].kind == "phase"
    rows = run(ExperimentConfig(kind="lower", n_grid=(8,), r_grid=(1,),
                                mu0_grid=(2.0,), p_grid=(0.5,), trials=20,
                                seed=5, model="block"))
    assert rows[0].kind == "lower"


@pytest.mark.slow
def test_threshold_scaling_tracks_n_log_n():
    # fit the 50% recovery threshold m50 on a coarse grid for several n;
    # the fitted constant m50 / (n r ln n) must stay within a factor two
    # across sizes
    consts = []
    for n in (32, 48, 64, 96):
        r = 2
        base = int(n * r * np.log(n))
        grid = sorted({min(n * n, max(2 * n * r - r * r + 1, int(base * f)))
                       for f in (0.8, 1.2, 1.8, 2.6, 3.6, 5.0)})
        cfg = ExperimentConfig(kind="phase", n_grid=(n,), r_grid=(r,),
                               m_grid=tuple(grid), model="random_orth",
                               trials=12, seed=47)
        rows = run_phase(cfg)
        m50 = None
        for row in rows:
            if row.success_rate >= 0.5:
                m50 = row.m
                break
        assert m50 is not None, "no cell reached 50% at n=%d" % n
        consts.append(m50 / (n * r * np.log(n)))
    assert max(consts) / min(consts) < 2.0, consts
