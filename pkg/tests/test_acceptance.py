"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them inline). Heavy simulations are
shared session fixtures from conftest; the passivity and determinism
criteria sweep every run the suite performed.

The degradation grid runs at dt=2.5e-4 to fit its wall-clock budget; the
per-axis controller criteria use dt=1e-4 where the bound is stated at that
step size.
"""

import math
import time

import numpy as np
import pytest
from scipy import signal as sig
from scipy.integrate import quad

from helpers import simulate_point_mass
from teleopsim.analysis import (
    energy_audit,
    estimate_frf,
    overshoot_ratio,
    task_metrics,
)
from teleopsim.dynamics import (
    JointState,
    ManipulatorModel,
    PlanarLink,
    dynamics_terms,
    forward_kinematics,
    jacobian,
    null_space_projector,
)
from teleopsim.fic import (
    AxisErrorState,
    AxisFicState,
    Phase,
    calibrate,
    convergence_force,
    fic_wrench,
    stored_divergence_energy,
)
from teleopsim.simulation import run


def report(name: str, ok: bool, detail: str = ""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
          + (f"  [{detail}]" if detail else ""))
    assert ok, f"{name}: {detail}"


REPLICA_AXIS = calibrate(20.0, 0.1, k_0=100.0, d=1.5)
MASTER_AXIS = calibrate(30.0, 0.12, k_0=30.0, d=4.0)


class TestFicSaturation:
    def test_stiffness_force_bounded(self):
        t0 = time.time()
        rng = np.random.default_rng(2024)
        worst = 0.0
        sat_err = 0.0
        for p in (REPLICA_AXIS, MASTER_AXIS):
            bound = p.w_max + p.k_0 * p.x_b
            errs = rng.uniform(-5.0 * p.x_b, 5.0 * p.x_b, 1_000_000)
            vels = rng.uniform(-2.0, 2.0, 1_000_000)
            xmaxs = np.abs(errs) * rng.uniform(1.0, 1.5, 1_000_000)
            for e, v, xm in zip(errs, vels, xmaxs):
                st = AxisFicState(x_max_err=xm, stored_energy=-1.0)
                res = fic_wrench(AxisErrorState(e, v),
                                 AxisFicState(x_max_err=xm,
                                              stored_energy=0.0),
                                 p)
                f = abs(res.stiffness_force)
                worst = max(worst, f / bound)
                if abs(e) > p.x_b \
                        and res.state.phase is Phase.DIVERGENCE:
                    sat_err = max(sat_err, abs(f - p.w_max) / p.w_max)
        elapsed = time.time() - t0
        report("fic-saturation",
               worst <= 1.0 + 1e-12 and sat_err <= 1e-9 and elapsed < 10.0,
               f"max |F|/bound={worst:.6f}, saturated-branch rel err="
               f"{sat_err:.2e}, {elapsed:.1f}s")


class TestCalibrationIdentity:
    def test_thousand_random_parameter_sets(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(1000):
            w_max = rng.uniform(0.5, 500.0)
            x_b = w_max / rng.uniform(1.5, 1e4)
            p = calibrate(w_max, x_b)
            lhs = math.exp((p.beta * p.x_b) ** 2)
            worst = max(worst,
                        abs(lhs - p.k_max) / p.k_max,
                        abs(p.k_max - w_max / x_b) / p.k_max)
        report("calibration-identity", worst <= 1e-9,
               f"max rel err={worst:.2e}")


class TestConvergenceEnergy:
    def test_net_work_zero_and_cycle_returns_at_rest(self):
        # quadrature of the return force, inside and beyond the saturation
        # band (the force cap is symmetric, so the integral stays zero)
        worst_work = 0.0
        for x_max in (0.05, 0.09, 0.4):
            energy = stored_divergence_energy(x_max, REPLICA_AXIS)
            k_c = 4.0 * energy / x_max ** 2
            pts = sorted({0.5 * x_max,
                          max(1e-9, 0.5 * x_max - REPLICA_AXIS.w_max / k_c),
                          min(x_max, 0.5 * x_max + REPLICA_AXIS.w_max / k_c)})
            work, _ = quad(
                lambda x: convergence_force(x, x_max, energy, REPLICA_AXIS),
                0.0, x_max, points=pts, epsabs=1e-12, limit=200)
            worst_work = max(worst_work, abs(work))

        p = calibrate(20.0, 0.1, k_0=100.0, d=0.0)
        _, errs, vels, _ = simulate_point_mass(p, 0.05, dt=1e-4, t_end=2.0)
        crossings = np.nonzero(np.diff(np.sign(errs + 1e-30)))[0]
        residual = abs(vels[crossings[0]]) if crossings.size else np.inf
        report("convergence-energy",
               worst_work <= 1e-8 and residual <= 1e-3,
               f"max |net work|={worst_work:.2e} J, residual speed="
               f"{residual:.2e} m/s")


class TestPassivity:
    def test_every_suite_run_passive(self, grid_logs, paired_logs,
                                     impulse_log, suite_runs):
        worst = ("", 0.0)
        for name, (_, log) in sorted(suite_runs.items()):
            ledger = energy_audit(log)
            v = ledger.max_violation()
            if v > worst[1]:
                worst = (name, v)
        report("passivity",
               worst[1] <= 1e-6,
               f"{len(suite_runs)} runs audited, worst={worst[0]} "
               f"({worst[1]:.2e} J)")


class TestDampingBehaviour:
    def test_fic_critically_damped_ic_underdamped(self, paired_logs):
        ratios = {}
        for name, log in paired_logs.items():
            err = log.column("xd_post_x") - log.column("ee_x")
            ratios[name] = overshoot_ratio(err)
        report("critically-damped-vs-underdamped",
               ratios["fic"] < 0.02 and ratios["ic"] > 0.10,
               f"fic overshoot={ratios['fic']:.4f}, "
               f"ic overshoot={ratios['ic']:.4f}")


class TestDelayBandwidthGrid:
    def test_all_nine_conditions(self, grid_logs):
        t0 = time.time()
        ok = True
        details = []
        completions = {}
        for delay, rate, log in grid_logs:
            s = log.summary
            if s.get("aborted") or not s.get("success"):
                ok = False
                details.append(f"d{delay}/r{rate}: failed")
                continue
            ex = log.column("xd_post_x") - log.column("ee_x")
            ey = log.column("xd_post_y") - log.column("ee_y")
            peak_err = float(np.max(np.hypot(ex, ey)))
            if peak_err >= 0.2:
                ok = False
                details.append(f"d{delay}/r{rate}: err {peak_err:.3f}")
            completions[(delay, rate)] = s["completion_time"]
        if ok:
            ok = completions[(1.0, 10.0)] >= completions[(0.0, 1000.0)]
            details.append(
                f"completion worst={completions[(1.0, 10.0)]:.2f}s vs "
                f"best={completions[(0.0, 1000.0)]:.2f}s")
        report("delay-bandwidth-grid", ok,
               "; ".join(details) or "all nine conditions succeeded")


class TestDynamicsOracles:
    def models(self):
        wide = ((-10.0, 10.0),)
        two = ManipulatorModel(
            links=(PlanarLink(0.45, 2.5, 0.225, 0.05),
                   PlanarLink(0.40, 1.8, 0.20, 0.03)),
            joint_limits=wide * 2)
        three = ManipulatorModel(
            links=(PlanarLink(0.35, 2.0, 0.175, 0.03),
                   PlanarLink(0.30, 1.5, 0.15, 0.02),
                   PlanarLink(0.25, 1.0, 0.125, 0.01)),
            joint_limits=wide * 3)
        return two, three

    def test_jacobian_mass_matrix_skew_and_projector(self):
        two, three = self.models()
        rng = np.random.default_rng(99)
        jac_err = 0.0
        min_eig = np.inf
        skew_err = 0.0
        for _ in range(1000):
            model = two if rng.uniform() < 0.5 else three
            q = rng.uniform(-math.pi, math.pi, model.dof)
            qd = rng.uniform(-2.0, 2.0, model.dof)
            h = 1e-6
            J = jacobian(model, q)
            for k in range(model.dof):
                e = np.zeros(model.dof)
                e[k] = h
                fd = (forward_kinematics(model, q + e)
                      - forward_kinematics(model, q - e)) / (2 * h)
                jac_err = max(jac_err, float(np.max(np.abs(J[:, k] - fd))))
            terms = dynamics_terms(model, q, qd)
            min_eig = min(min_eig,
                          float(np.min(np.linalg.eigvalsh(terms.M))))
            Mp = dynamics_terms(model, q + h * qd, np.zeros(model.dof)).M
            Mm = dynamics_terms(model, q - h * qd, np.zeros(model.dof)).M
            mdot_quad = qd @ ((Mp - Mm) / (2 * h)) @ qd
            skew_err = max(skew_err,
                           abs(mdot_quad - 2.0 * float(qd @ terms.c)))

        proj_err = 0.0
        count = 0
        while count < 1000:
            q = rng.uniform(-2.2, 2.2, 3)
            J = jacobian(three, q)
            if np.linalg.svd(J, compute_uv=False)[-1] < 1e-3:
                continue
            count += 1
            terms = dynamics_terms(three, q, np.zeros(3))
            P = null_space_projector(three, q, terms, J)
            tau = rng.uniform(-5.0, 5.0, 3)
            acc = J @ np.linalg.solve(terms.M, P @ tau)
            proj_err = max(proj_err, float(np.max(np.abs(acc))))

        ok = jac_err <= 1e-5 and min_eig > 0.0 and skew_err <= 1e-6 \
            and proj_err <= 1e-8
        report("dynamics-oracles", ok,
               f"jac fd err={jac_err:.2e}, min M eig={min_eig:.3f}, "
               f"skew={skew_err:.2e}, projector={proj_err:.2e}")


class TestFrfOracles:
    def test_sdof_peak_and_delay_phase(self):
        m, k, zeta = 1.0, 39.48, 0.1
        c = 2.0 * zeta * math.sqrt(m * k)
        fs = 1000.0
        rng = np.random.default_rng(11)
        n = 400_000
        taps = sig.firwin(301, 25.0, fs=fs)
        force = sig.lfilter(taps, 1.0, rng.normal(scale=5.0, size=n))
        t = np.arange(n) / fs
        _, vel, _ = sig.lsim(sig.lti([1.0, 0.0], [m, c, k]), force, t)
        frf = estimate_frf(force, vel, fs, window_len=32768)
        band = (frf.freqs > 0.3) & (frf.freqs < 3.0)
        measured = float(np.max(frf.magnitude[band]))
        w = 2.0 * math.pi * frf.freqs[band]
        analytic = float(np.max(np.abs(
            1j * w / (k - m * w ** 2 + 1j * c * w))))
        peak_ok = abs(measured - analytic) / analytic <= 0.05

        delay_samples = 40
        x = rng.normal(size=60_000)
        y = np.concatenate([np.zeros(delay_samples), x[:-delay_samples]])
        dfrf = estimate_frf(x, y, fs, window_len=4096)
        sel = (dfrf.freqs > 1.0) & (dfrf.freqs < 100.0) \
            & (dfrf.coherence > 0.99)
        slope = np.polyfit(dfrf.freqs[sel], np.unwrap(dfrf.phase[sel]), 1)[0]
        expected = -2.0 * math.pi * delay_samples / fs
        slope_ok = abs(slope - expected) / abs(expected) <= 0.02
        report("frf-oracles", peak_ok and slope_ok,
               f"peak {measured:.4f} vs {analytic:.4f}; "
               f"phase slope {slope:.5f} vs {expected:.5f}")


class TestDeterminism:
    def test_replay_every_acceptance_run(self, grid_logs, paired_logs,
                                         impulse_log, suite_runs):
        mismatched = []
        for name, (cfg, log) in sorted(suite_runs.items()):
            fresh = run(cfg)
            if fresh.to_csv_bytes() != log.to_csv_bytes():
                mismatched.append(name)
        report("determinism",
               not mismatched,
               f"{len(suite_runs)} runs replayed byte-identically"
               if not mismatched else f"diverged: {mismatched}")
