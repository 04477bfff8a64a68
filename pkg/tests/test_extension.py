import math

import numpy as np
import pytest

from bartnik_forge.collar import build_collar
from bartnik_forge.data import BartnikData, DirectPath
from bartnik_forge.errors import Infeasible, MassOutOfRange, TrappedSurfaceFound
from bartnik_forge.extension import (assemble_cmc, assemble_extension, collar_tail, glue_to_schwarzschild,
                                     hawking_round, taper_profile)
from bartnik_forge.profiles import CMC, Constant, InverseSqrt, g_of, v_prime

D = BartnikData(1.0, 1.0, 0.5)
PATH = DirectPath(0.05, 0.95)


@pytest.fixture(scope="module")
def rep():
    return assemble_extension(D, PATH, InverseSqrt(0.5))


def test_pipeline_audits_strict(rep):
    a = rep.audits
    assert a["dec_min_margin"] > 0 and a["min_mu_collar"] > 0 and a["min_mu_glue"] > 0
    assert math.isfinite(a["bend_min_log_excess"])
    assert a["trapped"]["ok"] and a["trapped"]["min_Hcal2"] > 0
    assert a["collar_f_minus_2mH_increasing"]
    assert a["max_joint_df"] <= 1e-10 and a["max_joint_dfp"] <= 1e-8
    assert a["exterior_isometry_residual"] <= 1e-10
    assert a["exterior_mH_deviation"] <= 1e-10
    assert a["mass_ordering"]


def test_composite_columns(rep):
    s = rep.samples["s"]
    assert np.all(np.diff(s) > 0)
    kinds = list(dict.fromkeys(rep.samples["piece"]))
    assert kinds == ["collar", "glue", "bend", "schwarzschild"]
    interior = s > 0
    assert np.all(rep.samples["Hcal2"][interior] > 0)
    assert np.all(rep.samples["mu"] >= 0)
    j = rep.to_json()
    assert j["exterior_mass"] == rep.exterior_mass


def test_evaluate_matches_samples(rep):
    s = rep.samples["s"][::97]
    f = rep.evaluate(s)[0]
    assert np.allclose(f, rep.samples["f"][::97], rtol=1e-12)


def test_collar_end_gap(rep):
    c = rep.collar
    fA = float(collar_tail(c).evaluate(c.constants.A)[0])
    mA = float(c.mH[-1])
    assert fA - 2 * mA > D.r_o - 2 * D.hawking_mass >= 0


@pytest.fixture(scope="module")
def tail():
    slab = build_collar(D, PATH, InverseSqrt(0.5))
    return collar_tail(slab)


def test_hypothesis_b_equivalence(tail):
    x = tail.profile
    fb, fpb, _ = (float(v) for v in tail.evaluate(tail.b))
    mHb = float(hawking_round(fb, fpb, x))
    slope_ok = 0 < fpb < math.sqrt(1 + float(g_of(x, fb)))
    assert slope_ok == (float(v_prime(x, mHb, fb)) > 0)
    # perturbing the slope above the ceiling breaks both sides together
    fp_hi = 1.01 * math.sqrt(1 + float(g_of(x, fb)))
    m_hi = float(hawking_round(fb, fp_hi, x))
    assert not float(v_prime(x, m_hi, fb)) > 0


def test_slope_gap_near_infimum(tail):
    x = tail.profile
    fb, fpb, _ = (float(v) for v in tail.evaluate(tail.b))
    mHb = float(hawking_round(fb, fpb, x))
    sg = glue_to_schwarzschild(tail, mHb + 1e-4 * (0.5 * fb - mHb))
    assert sg.certificate["slope_gap_at_s_hat"] > 0
    assert sg.certificate["graph_slope_at_s_o"] < fpb


def test_mass_out_of_range(tail):
    fb = float(tail.evaluate(tail.b)[0])
    with pytest.raises(MassOutOfRange):
        glue_to_schwarzschild(tail, 0.5 * fb)
    with pytest.raises(MassOutOfRange):
        glue_to_schwarzschild(tail, 0.0)


def test_eta_sequence_decreases():
    masses = [assemble_extension(D, PATH, InverseSqrt(0.5), eta=e).exterior_mass for e in (0.1, 0.01, 0.001)]
    assert masses[0] > masses[1] > masses[2]
    mHA = assemble_extension(D, PATH, InverseSqrt(0.5), eta=0.001).glued.certificate["mH_b"]
    assert 0 < masses[2] - mHA < 0.01 * (masses[0] - mHA)


def test_trapped_retry_ladder():
    r = assemble_extension(D, PATH, InverseSqrt(0.5), eta=0.999, eps_offset=0.5)
    t = r.audits["trapped"]
    assert t["retries"] >= 1 and t["ok"]
    assert t["eps_offsets"][0] == 0.5 and t["eps_offsets"][1] == 0.25


def test_trapped_retry_exhausted():
    with pytest.raises(TrappedSurfaceFound):
        assemble_extension(D, PATH, InverseSqrt(0.5), eta=0.999, eps_offset=0.5, max_retries=1)


def test_eta_range():
    with pytest.raises(Infeasible):
        assemble_extension(D, PATH, InverseSqrt(0.5), eta=1.0)


def test_cmc_maximal():
    r = assemble_cmc(D, PATH, 0.0, -0.3)
    c = r.extras["cmc"]
    assert c["mean_curvature"] == 0 and c["maximal"]
    assert c["trK_variation"] <= 1e-9
    assert max(abs(c["trK_min"]), abs(c["trK_max"])) <= 1e-9


def test_cmc_umbilic():
    r = assemble_cmc(D, PATH, 0.5, 0.0)
    c = r.extras["cmc"]
    assert c["umbilic_residual"] <= 1e-10
    assert c["trK_variation"] <= 1e-9
    assert c["trK_vs_formula"] <= 1e-9


def test_cmc_infeasible():
    with pytest.raises(Infeasible):
        assemble_cmc(D, PATH, 0.0, 0.0)


def test_taper_identity(rep):
    before = {k: v.copy() for k, v in rep.samples.items()}
    out = taper_profile(rep, 10.0, rep.profile)
    assert out.taper["identity"]
    for k in before:
        assert np.array_equal(before[k], out.samples[k])


def test_taper_to_time_symmetric():
    r = assemble_extension(D, PATH, InverseSqrt(0.5))
    out = taper_profile(r, 10.0, Constant(0.0))
    t = out.taper
    assert t["min_mu"] >= -1e-12 and t["min_Hcal2"] > 0
    assert t["mH_deviation"] <= 1e-9
    tap = out.samples["piece"] == "taper"
    f = out.samples["f"][tap]
    far = f >= 20.0
    assert np.any(far)
    # beyond 2 r_switch the slab is the time-symmetric slice: f'^2 = 1 - 2m/f
    m = out.exterior_mass
    assert np.allclose(out.samples["fp"][tap][far] ** 2, 1 - 2 * m / f[far], atol=1e-12)
    assert np.all(np.diff(out.samples["s"]) > 0)
