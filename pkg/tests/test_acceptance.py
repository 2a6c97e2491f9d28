"""Acceptance suite: eight end-to-end checks of the pull-in solver.

Each test prints exactly one ``[Cn] PASS/FAIL`` line.  Expensive thresholds
are memoized in ``tests/_cache.json``; running this file directly
(``python3 tests/test_acceptance.py``) prewarms the cache job by job.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from conftest import cached  # noqa: E402

from pullin import (  # noqa: E402
    HEAT,
    WAVE,
    Deflection,
    Grid,
    Params,
    Potential,
    Tolerances,
    evolve,
    find_dynamic_pullin,
    find_static_pullin,
    small_aspect_evolve,
    small_aspect_static,
    solve_potential,
    solve_stationary,
)

FINE = dict(nx=400, neta=200)    # dx = deta = 5e-3
COARSE = dict(nx=100, neta=50)   # dx = deta = 2e-2

TABLE_STATIC = {0.01: 0.34997, 0.1: 0.34536, 0.2: 0.32738, 0.3: 0.29356}


def _report(tag: str, ok: bool, detail: str) -> None:
    print(f"[{tag}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{tag}: {detail}"


# ----------------------------------------------------------------- jobs ----

def job_c1_fine():
    t0 = time.time()
    lam = find_static_pullin(1e-4, Grid(**FINE), Tolerances(bisect_tol=1e-5))
    return {"lam": lam, "wall_s": time.time() - t0}


def job_c1_coarse():
    return find_static_pullin(1e-4, Grid(**COARSE), Tolerances(bisect_tol=1e-4))


def job_c2_fine(eps):
    return find_static_pullin(eps, Grid(**FINE), Tolerances(bisect_tol=1e-5))


def job_c2_coarse(eps):
    return find_static_pullin(eps, Grid(**COARSE), Tolerances(bisect_tol=1e-4))


# the heat/static comparison uses a shared nx = 400, neta = 8 grid: the
# difference lambda*_h - lambda*_s is grid-consistent, and the eta resolution
# cancels between the two solvers
_C3_GRID = dict(nx=400, neta=8)
_C3_TOL = dict(bisect_tol=1e-5, t_max=2000.0)


def job_c3_static(eps):
    return find_static_pullin(eps, Grid(**_C3_GRID), Tolerances(**_C3_TOL))


def job_c3_heat(eps, dt):
    return find_dynamic_pullin(eps, 0.0, HEAT, Grid(**_C3_GRID, dt=dt),
                               Tolerances(**_C3_TOL))


def job_c4_wave(eps):
    return find_dynamic_pullin(eps, 0.7, WAVE, Grid(**FINE, dt=2e-3),
                               Tolerances(bisect_tol=1e-4, t_max=500.0))


_C5_GRID = dict(nx=200, neta=20)  # dx = 0.01 -> heat dt <= 5e-5
_C5_EPS = (0.01, 0.1, 0.2)
_C5_GAMMAS = (0.1, 0.3, 0.5, 0.7)


def job_c5_static(eps):
    return find_static_pullin(eps, Grid(**_C5_GRID),
                              Tolerances(bisect_tol=1e-4))


def job_c5_heat(eps):
    return find_dynamic_pullin(eps, 0.0, HEAT, Grid(**_C5_GRID, dt=4e-5),
                               Tolerances(bisect_tol=1e-4, t_max=500.0))


def job_c5_wave(eps, gamma):
    return find_dynamic_pullin(eps, gamma, WAVE, Grid(**_C5_GRID, dt=1e-3),
                               Tolerances(bisect_tol=1e-4, t_max=500.0))


_C6_GRID = dict(nx=200, neta=100)


def _traj_rows(out):
    return [[float(v) for v in row] for row in out.trajectory]


def job_c6_heat():
    out = evolve(Params(epsilon=0.2, lam=0.327), Grid(**_C6_GRID, dt=4e-5),
                 HEAT, Tolerances(t_max=30.0), sample_every=500,
                 snapshot_times=[float(k) for k in range(1, 12)])
    snaps = [[t, [float(v) for v in u]] for t, u in out.snapshots]
    return {"kind": out.kind, "t_event": out.t_event, "snaps": snaps}


def job_c6_wave_settle():
    out = evolve(Params(epsilon=0.1, lam=0.34, gamma=0.7),
                 Grid(**_C6_GRID, dt=2e-3), WAVE,
                 Tolerances(t_max=30.0), sample_every=10)
    return {"kind": out.kind, "t_event": out.t_event, "traj": _traj_rows(out)}


def job_c6_wave_quench():
    out = evolve(Params(epsilon=0.2, lam=0.327, gamma=0.7),
                 Grid(**_C6_GRID, dt=2e-3), WAVE,
                 Tolerances(t_max=100.0), sample_every=10)
    return {"kind": out.kind, "t_event": out.t_event,
            "final_u0": out.final_u0, "traj": _traj_rows(out)}


def job_c7_order():
    # solved-potential convergence against a 4x-refined reference solution
    eps = 0.2

    def solve_on(nx, neta):
        g = Grid(nx=nx, neta=neta)
        u = -0.1 * (1.0 - g.x ** 2)
        d = Deflection.from_values(u, g.dx)
        phi = solve_potential(d, eps, g, Tolerances(jacobi_tol=1e-13,
                                                    jacobi_max_iter=2_000_000))
        return phi.phi

    ref = solve_on(160, 80)
    errs = []
    for nx, neta in [(40, 20), (80, 40)]:
        phi = solve_on(nx, neta)
        stride = 160 // nx
        errs.append(float(np.max(np.abs(phi - ref[::stride, ::stride]))))
    return {"errs": errs, "order": float(np.log2(errs[0] / errs[1]))}


def job_c8_static(lam):
    full = solve_stationary(lam, 1e-4, Grid(nx=400, neta=8))
    oracle = small_aspect_static(lam, dx=1e-4)
    return {"u0_full": full.u0,
            "u0_oracle": float(oracle.u[oracle.u.size // 2])}


def job_c8_heat():
    times = [1.0, 5.0, 10.0]
    # a tiny steady_rate_tol keeps both runs marching through t = 10
    tol = Tolerances(t_max=10.2, steady_rate_tol=1e-300)
    full = evolve(Params(epsilon=1e-4, lam=0.3), Grid(nx=200, neta=8, dt=4e-5),
                  HEAT, tol, sample_every=10_000, snapshot_times=times)
    ref = small_aspect_evolve(0.3, 0.0, dx=0.01, dt=4e-5, tol=tol,
                              sample_every=10_000, snapshot_times=times)
    u0f = [float(u[u.size // 2]) for _t, u in full.snapshots]
    u0r = [float(u[u.size // 2]) for _t, u in ref.snapshots]
    return {"times": times, "u0_full": u0f, "u0_oracle": u0r}


# ---------------------------------------------------------------- tests ----

def test_c1_static_pullin_limit_consistency():
    fine = cached("acc/c1/fine/grid=400x200/tol=1e-5", job_c1_fine)
    coarse = cached("acc/c1/coarse/grid=100x50/tol=1e-4", job_c1_coarse)
    ok_fine = abs(fine["lam"] - 0.350000) <= 5e-5
    ok_time = fine["wall_s"] <= 600.0
    ok_coarse = abs(coarse - 0.350004) <= 2e-3
    _report("C1", ok_fine and ok_time and ok_coarse,
            f"lambda*_s(1e-4) fine = {fine['lam']:.6f} (target 0.350000 "
            f"+-5e-5, {fine['wall_s']:.0f} s), coarse = {coarse:.6f} "
            f"(target 0.350004 +-2e-3)")


def test_c2_static_pullin_table():
    lines, ok = [], True
    for eps, target in TABLE_STATIC.items():
        fine = cached(f"acc/c2/fine/eps={eps}/tol=1e-5",
                      lambda e=eps: job_c2_fine(e))
        coarse = cached(f"acc/c2/coarse/eps={eps}/tol=1e-4",
                        lambda e=eps: job_c2_coarse(e))
        ok_eps = abs(fine - target) <= 5e-4 and abs(coarse - target) <= 2e-3
        ok = ok and ok_eps
        lines.append(f"eps={eps}: fine {fine:.5f} / coarse {coarse:.5f} "
                     f"vs {target:.5f}{'' if ok_eps else ' <-'}")
    _report("C2", ok, "; ".join(lines))


def test_c3_heat_pullin_matches_static():
    lines, ok = [], True
    for eps in TABLE_STATIC:
        lam_s = cached(f"acc/c3/static/eps={eps}/grid=400x8/tol=1e-5",
                       lambda e=eps: job_c3_static(e))
        lam_h = cached(f"acc/c3/heat/eps={eps}/grid=400x8/dt=1.2e-5/tol=1e-5",
                       lambda e=eps: job_c3_heat(e, 1.2e-5))
        ok_eps = abs(lam_h - lam_s) <= 5e-5
        ok = ok and ok_eps
        lines.append(f"eps={eps}: |h-s| = {abs(lam_h - lam_s):.1e}"
                     f"{'' if ok_eps else ' <-'}")
    lam_h0 = cached("acc/c3/heat/eps=1e-4/grid=400x8/dt=1e-5/tol=1e-5",
                    lambda: job_c3_heat(1e-4, 1e-5))
    ok_lim = abs(lam_h0 - 0.350006) <= 5e-5
    ok = ok and ok_lim
    lines.append(f"lambda*_h(1e-4) = {lam_h0:.6f} (target 0.350006 +-5e-5)"
                 f"{'' if ok_lim else ' <-'}")
    _report("C3", ok, "; ".join(lines))


def test_c4_wave_pullin_values():
    targets = {0.1: 0.34468, 0.2: 0.3251}
    lines, ok = [], True
    for eps, target in targets.items():
        lam = cached(f"acc/c4/wave/eps={eps}/gamma=0.7/grid=400x200/dt=2e-3",
                     lambda e=eps: job_c4_wave(e))
        ok_eps = abs(lam - target) <= 1e-3
        ok = ok and ok_eps
        lines.append(f"lambda*_w({eps}, 0.7) = {lam:.5f} vs {target:.5f}"
                     f"{'' if ok_eps else ' <-'}")
    _report("C4", ok, "; ".join(lines))


def test_c5_ordering_and_trends():
    slack = 2e-4  # two bisection half-brackets at bisect_tol = 1e-4
    lam_s = {e: cached(f"acc/c5/static/eps={e}/grid=200x20",
                       lambda e=e: job_c5_static(e))
             for e in (0.01, 0.1, 0.2, 0.3)}
    lam_h = {e: cached(f"acc/c5/heat/eps={e}/grid=200x20/dt=4e-5",
                       lambda e=e: job_c5_heat(e))
             for e in _C5_EPS}
    lam_w = {(e, g): cached(f"acc/c5/wave/eps={e}/gamma={g}/grid=200x20/dt=1e-3",
                            lambda e=e, g=g: job_c5_wave(e, g))
             for e in _C5_EPS for g in _C5_GAMMAS}

    problems = []
    for (e, g), lw in lam_w.items():
        if lw > lam_h[e] + slack:
            problems.append(f"lambda*_w({e},{g}) > lambda*_h({e})")
    for e in _C5_EPS:
        vals = [lam_w[(e, g)] for g in _C5_GAMMAS]
        if any(b > a + slack for a, b in zip(vals, vals[1:])):
            problems.append(f"lambda*_w not non-increasing in gamma at eps={e}")
    svals = [lam_s[e] for e in (0.01, 0.1, 0.2, 0.3)]
    if any(b > a + slack for a, b in zip(svals, svals[1:])):
        problems.append("lambda*_s not non-increasing in eps")
    for e in _C5_EPS:
        gamma_var = abs(lam_w[(e, 0.7)] - lam_w[(e, 0.1)])
        for g in _C5_GAMMAS:
            eps_var = abs(lam_w[(0.2, g)] - lam_w[(0.01, g)])
            if not eps_var > gamma_var:
                problems.append(
                    f"eps-variation {eps_var:.2e} (gamma={g}) not above "
                    f"gamma-variation {gamma_var:.2e} (eps={e})")
    _report("C5", not problems,
            "ordering, gamma/eps monotonicity, eps-dominance"
            + ("" if not problems else ": " + "; ".join(problems)))


def test_c6_qualitative_dynamics():
    problems = []

    heat = cached("acc/c6/heat/eps=0.2/lam=0.327/grid=200x100/dt=4e-5/tmax=30",
                  job_c6_heat)
    if not (heat["kind"] == "Steady" and heat["t_event"] <= 11.0):
        problems.append(f"heat run: {heat['kind']} at t = {heat['t_event']:.2f}")
    snaps = [np.asarray(u) for _t, u in heat["snaps"]]
    for a, b in zip(snaps, snaps[1:]):
        if np.max(b - a) > 1e-7:
            problems.append("heat profiles not pointwise monotone in t")
            break

    settle = cached("acc/c6/wave_settle/eps=0.1/lam=0.34/gamma=0.7/tmax=30",
                    job_c6_wave_settle)
    traj = np.asarray(settle["traj"])
    t_deep = float(traj[np.argmin(traj[:, 1]), 0])
    if not (2.0 <= t_deep <= 4.0):
        problems.append(f"wave overshoot deepest at t = {t_deep:.2f}, not in [2, 4]")
    if not (settle["kind"] == "Steady" and settle["t_event"] <= 11.0):
        problems.append(f"wave settle run: {settle['kind']} at "
                        f"t = {settle['t_event']:.2f}")

    quench = cached("acc/c6/wave_quench/eps=0.2/lam=0.327/gamma=0.7/tmax=100",
                    job_c6_wave_quench)
    if quench["kind"] != "Quenched":
        problems.append(f"wave quench run: {quench['kind']} instead of Quenched")
    else:
        lam_s02 = cached("pullin_static/eps=0.2/grid=100x50/tol=1e-4",
                         lambda: find_static_pullin(0.2, Grid(100, 50),
                                                    Tolerances(bisect_tol=1e-4)))
        crit = solve_stationary(lam_s02 - 1e-4, 0.2, Grid(100, 50))
        qt = np.asarray(quench["traj"])
        near = np.abs(qt[:, 1] - crit.u0) < 0.05
        frac = float(np.mean(near))
        if frac < 0.30:
            problems.append(f"plateau fraction {frac:.2f} < 0.30")

    _report("C6", not problems,
            "heat settle+monotone, wave overshoot/settle, wave quench plateau"
            + ("" if not problems else ": " + "; ".join(problems)))


def test_c7_numerical_properties(bifurcation_eps02):
    problems = []

    conv = cached("acc/c7/order/eps=0.2", job_c7_order)
    if conv["order"] < 1.9:
        problems.append(f"convergence order {conv['order']:.2f} < 1.9")

    g = Grid(nx=40, neta=20)
    for defl, eps in [(Deflection.flat(g.nx), 0.2),
                      (Deflection.from_values(-0.1 * (1 - g.x ** 2), g.dx), 0.0)]:
        phi = solve_potential(defl, eps, g)
        exact = Potential.initial(g).phi
        if np.max(np.abs(phi.phi - exact)) > 1e-12:
            problems.append(f"phi = eta not exact (eps = {eps})")

    lam_star, points = bifurcation_eps02
    for tag in ("Upper", "Lower"):
        u0s = [u0 for lam, u0, t in points if t == tag]
        d = np.diff(u0s)
        if not (np.all(d <= 1e-12) or np.all(d >= -1e-12)):
            problems.append(f"u0 not monotone along {tag} branch")
    up = max(lam for lam, _u0, t in points if t == "Upper")
    lo = max(lam for lam, _u0, t in points if t == "Lower")
    if not (up >= lam_star - 1.5e-3 and lo >= lam_star - 1.5e-3):
        problems.append("branches do not meet near lambda*_s")

    _report("C7", not problems,
            f"order = {conv['order']:.2f}, phi = eta exact, single fold"
            + ("" if not problems else ": " + "; ".join(problems)))


def test_c8_oracle_equivalence():
    problems = []
    for lam in (0.1, 0.2, 0.3):
        r = cached(f"acc/c8/static/lam={lam}", lambda l=lam: job_c8_static(l))
        gap = abs(r["u0_full"] - r["u0_oracle"])
        if gap > 1e-4:
            problems.append(f"static u0 gap {gap:.1e} at lambda = {lam}")
    dyn = cached("acc/c8/heat/lam=0.3", job_c8_heat)
    for t, uf, ur in zip(dyn["times"], dyn["u0_full"], dyn["u0_oracle"]):
        if abs(uf - ur) > 1e-3:
            problems.append(f"dynamic u0 gap {abs(uf - ur):.1e} at t = {t}")
    _report("C8", not problems,
            "statics and heat dynamics track the zero-aspect oracle"
            + ("" if not problems else ": " + "; ".join(problems)))


# -------------------------------------------------------------- prewarm ----

def _prewarm():
    jobs = [
        ("acc/c1/coarse/grid=100x50/tol=1e-4", job_c1_coarse),
        ("acc/c8/heat/lam=0.3", job_c8_heat),
        ("acc/c7/order/eps=0.2", job_c7_order),
    ]
    for lam in (0.1, 0.2, 0.3):
        jobs.append((f"acc/c8/static/lam={lam}", lambda l=lam: job_c8_static(l)))
    for eps in TABLE_STATIC:
        jobs.append((f"acc/c2/coarse/eps={eps}/tol=1e-4",
                     lambda e=eps: job_c2_coarse(e)))
    for e in (0.01, 0.1, 0.2, 0.3):
        jobs.append((f"acc/c5/static/eps={e}/grid=200x20",
                     lambda e=e: job_c5_static(e)))
    jobs += [
        ("acc/c6/heat/eps=0.2/lam=0.327/grid=200x100/dt=4e-5/tmax=30", job_c6_heat),
        ("acc/c6/wave_settle/eps=0.1/lam=0.34/gamma=0.7/tmax=30", job_c6_wave_settle),
        ("acc/c6/wave_quench/eps=0.2/lam=0.327/gamma=0.7/tmax=100", job_c6_wave_quench),
    ]
    for eps in TABLE_STATIC:
        jobs.append((f"acc/c3/static/eps={eps}/grid=400x8/tol=1e-5",
                     lambda e=eps: job_c3_static(e)))
    for e in _C5_EPS:
        jobs.append((f"acc/c5/heat/eps={e}/grid=200x20/dt=4e-5",
                     lambda e=e: job_c5_heat(e)))
    for e in _C5_EPS:
        for g in _C5_GAMMAS:
            jobs.append((f"acc/c5/wave/eps={e}/gamma={g}/grid=200x20/dt=1e-3",
                         lambda e=e, g=g: job_c5_wave(e, g)))
    for eps in TABLE_STATIC:
        jobs.append((f"acc/c3/heat/eps={eps}/grid=400x8/dt=1.2e-5/tol=1e-5",
                     lambda e=eps: job_c3_heat(e, 1.2e-5)))
    jobs.append(("acc/c3/heat/eps=1e-4/grid=400x8/dt=1e-5/tol=1e-5",
                 lambda: job_c3_heat(1e-4, 1e-5)))
    jobs.append(("acc/c1/fine/grid=400x200/tol=1e-5", job_c1_fine))
    for eps in TABLE_STATIC:
        jobs.append((f"acc/c2/fine/eps={eps}/tol=1e-5",
                     lambda e=eps: job_c2_fine(e)))
    for eps in (0.1, 0.2):
        jobs.append((f"acc/c4/wave/eps={eps}/gamma=0.7/grid=400x200/dt=2e-3",
                     lambda e=eps: job_c4_wave(e)))

    for key, fn in jobs:
        t0 = time.time()
        val = cached(key, fn)
        print(f"{key}: {val if not isinstance(val, dict) else '(dict)'} "
              f"[{time.time() - t0:.1f} s]", flush=True)


if __name__ == "__main__":
    _prewarm()
