"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from coaperture.ir_path import tilt_sweep, trace_ir
from coaperture.metrics import first_null, first_sll, hpbw
from coaperture.scenarios import SCENARIO_IDS, build_scenario, compare, run_scenario
from coaperture.solver import (aperture_field, directivity, disc_aperture, far_field_cut,
                               far_field_map, pattern_integrate_directivity, write_cut_csv)

from conftest import FREQ, airy_db, record_acceptance


def test_criterion_1_airy_oracle():
    t0 = time.perf_counter()
    fld = disc_aperture(500.0, FREQ)
    cut = far_field_cut(fld, 0.0, -2.0, 2.0, 2001)
    d = directivity(fld).directivity_dbi
    bw, null, sll = hpbw(cut), first_null(cut), first_sll(cut)
    elapsed = time.perf_counter() - t0
    ok = (abs(d - 53.85) <= 0.05 and abs(bw - 0.373) <= 0.004
          and abs(null - 0.446) <= 0.004 and abs(sll + 17.57) <= 0.1 and elapsed < 5.0)
    record_acceptance(1, ok, f"D={d:.3f} dBi HPBW={bw:.4f} null={null:.4f} "
                             f"SLL={sll:.3f} dB in {elapsed:.2f} s")
    assert ok


def test_criterion_2_blocked_aperture():
    errs, slls = [], []
    for b in (0.1, 0.2, 0.3):
        cut = far_field_cut(disc_aperture(500.0, FREQ, inner_diameter=500.0 * b),
                            0.0, -2.0, 2.0, 2001)
        ref = airy_db(cut.theta_deg, b=b)
        sel = ref >= -35.0
        errs.append(float(np.max(np.abs(cut.co_db[sel] - ref[sel]))))
        slls.append(first_sll(cut))
    ok = max(errs) < 0.2 and slls[0] < slls[1] < slls[2]
    record_acceptance(2, ok, "max err " + "/".join(f"{e:.3f}" for e in errs)
                      + " dB; SLL " + "/".join(f"{s:.2f}" for s in slls))
    assert ok


def test_criterion_3_backfed_b(scenario_runs):
    m = scenario_runs["backfed_b"].metrics
    bws = [p.hpbw_deg for p in m.planes]
    ok = (abs(m.gain_dbi - 51.46) <= 1.5 and all(abs(b - 0.47) <= 0.05 for b in bws)
          and m.worst_sll_db <= -22.0)
    record_acceptance(3, ok, f"gain={m.gain_dbi:.2f} dBi HPBW={bws[0]:.4f}/{bws[1]:.4f} "
                             f"SLL={m.worst_sll_db:.2f} dB")
    assert ok


def test_criterion_4_ordering(scenario_runs):
    g = {s: scenario_runs[s].metrics.gain_dbi for s in SCENARIO_IDS}
    sa = scenario_runs["backfed_a"].metrics
    sb = scenario_runs["backfed_b"].metrics
    gap = sa.worst_sll_db - sb.worst_sll_db
    narrower = all(pa.hpbw_deg < pb.hpbw_deg for pa, pb in zip(sa.planes, sb.planes))
    ok = g["offset_fed"] > g["backfed_b"] > g["backfed_a"] and gap >= 10.0 and narrower
    record_acceptance(4, ok, f"gain {g['offset_fed']:.2f} > {g['backfed_b']:.2f} > "
                             f"{g['backfed_a']:.2f}; SLL gap {gap:.2f} dB; "
                             f"HPBW a<b {narrower}")
    assert ok


def test_criterion_5_cross_pol(scenario_runs):
    def worst(sid):
        vals = [p.xpol_peak_db for p in scenario_runs[sid].metrics.planes]
        return None if all(v is None for v in vals) else max(v for v in vals if v is not None)
    sym = [worst("backfed_a"), worst("backfed_b")]
    off = worst("offset_fed")
    sym_ok = all(v is None or v <= -60.0 for v in sym)
    sym_level = max((v for v in sym if v is not None), default=-np.inf)
    ok = sym_ok and off is not None and np.isfinite(off) and off > sym_level
    record_acceptance(5, ok, f"symmetric {['floor' if v is None else round(v, 2) for v in sym]}"
                             f", offset {off if off is None else round(off, 2)} dB")
    assert ok


@pytest.mark.slow
def test_criterion_6_pattern_integration():
    diffs = {}
    for sid in SCENARIO_IDS:
        sc = build_scenario(sid)
        fld = aperture_field(sc.system, sc.feed, FREQ, sc.mask)
        diffs[sid] = (pattern_integrate_directivity(far_field_map(fld))
                      - directivity(fld).directivity_dbi)
    ok = all(abs(v) < 0.2 for v in diffs.values())
    record_acceptance(6, ok, " ".join(f"{k}={v:+.3f}" for k, v in diffs.items()) + " dB")
    assert ok


def test_criterion_7_ir_boresight():
    system = build_scenario("backfed_b").system
    res = trace_ir(system)
    tilt = float(tilt_sweep(system, [0.1])[0])
    ok = (res.boresight_error_deg < 0.01 and abs(res.obscuration_fraction - 0.0144) <= 0.002
          and abs(tilt - 0.2) <= 0.05 * 0.2)
    record_acceptance(7, ok, f"boresight={res.boresight_error_deg:.2e} deg "
                             f"obscuration={res.obscuration_fraction:.5f} "
                             f"tilt 0.1 -> {tilt:.5f} deg")
    assert ok


def test_criterion_8_band_flatness():
    rep = compare([build_scenario(s) for s in SCENARIO_IDS], [93.5, 94.0, 94.5])
    spread = {}
    for sid in SCENARIO_IDS:
        g = [r.metrics.gain_dbi for r in rep.runs if r.scenario.id == sid]
        spread[sid] = max(g) - min(g)
    ok = all(v < 0.3 for v in spread.values())
    record_acceptance(8, ok, " ".join(f"{k}={v:.3f}" for k, v in spread.items()) + " dB")
    assert ok


def _cut_bytes(run, tmp_path, tag):
    out = []
    for k, cut in enumerate(run.cuts):
        p = tmp_path / f"{tag}_{k}.csv"
        write_cut_csv(cut, p)
        out.append(p.read_bytes())
    return out


def test_criterion_9_determinism_and_convergence(tmp_path, scenario_runs):
    identical = True
    for sid in SCENARIO_IDS:
        sc = build_scenario(sid)
        ref = _cut_bytes(scenario_runs[sid], tmp_path, f"{sid}_ref")
        for workers in (1, 4):
            again = _cut_bytes(run_scenario(sc, FREQ, workers=workers), tmp_path,
                               f"{sid}_{workers}")
            identical &= again == ref
    dg, ds = {}, {}
    for sid in SCENARIO_IDS:
        coarse = run_scenario(build_scenario(sid), FREQ, grid_n=512).metrics
        fine = scenario_runs[sid].metrics
        dg[sid] = abs(fine.gain_dbi - coarse.gain_dbi)
        ds[sid] = abs(fine.worst_sll_db - coarse.worst_sll_db)
    ok = identical and max(dg.values()) < 0.02 and max(ds.values()) < 0.1
    record_acceptance(9, ok, f"byte-identical={identical}; max dgain={max(dg.values()):.4f} dB "
                             f"max dSLL={max(ds.values()):.4f} dB")
    assert ok
