"""Acceptance criteria, one test per criterion, each printing a pass/fail line."""

import itertools
import json
import math

import numpy as np
import pytest

from geogate import HilbertSpace, ModelParams, cavity_state, product_state, reduce_to_qubits
from geogate.analysis import (
    concurrence,
    conditional_trajectory,
    fidelity,
    ghz_fidelity,
    rwa_process_fidelity,
)
from geogate.cli.config import parse_lines, resolve
from geogate.cli.runner import run_scenario
from geogate.cli.scenarios import SCHEMAS
from geogate.model import displaced_frame_residual
from geogate.propagation import (
    closed_form_propagator,
    entangler_design,
    gate_cutoff,
    gate_times,
    h3_propagator,
    magnus_coefficients,
)

WINDOW = 5


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def window_norm(u, v, n_qubits, window=WINDOW):
    keep = np.arange(window * 2**n_qubits)
    return float(np.linalg.norm(u.matrix[np.ix_(keep, keep)] - v.matrix[np.ix_(keep, keep)], 2))


def test_criterion_1_gate_times():
    worst_time, worst_beta = 0.0, 0.0
    for delta in (0.5, 1.0, 2.0, 3.7):
        for n in range(1, 6):
            T = gate_times(delta, n)
            worst_time = max(worst_time, abs(delta * T - 2 * n * math.pi))
            worst_beta = max(worst_beta, abs(magnus_coefficients(T, delta).beta))
    ok = worst_time <= 4 * np.finfo(float).eps * 10 * math.pi and worst_beta <= 1e-12
    report("1 gate-time condition", ok, f"max |delta T - 2n pi| = {worst_time:.2e}, max |beta(T_n)| = {worst_beta:.2e}")


ORACLE_CASES = [
    (1, "equal", (1.0,)),
    (1, "unequal", (1.5,)),
    (2, "equal", (1.0, 1.0)),
    (2, "unequal", (1.0, 1.5)),
    (3, "equal", (1.0, 1.0, 1.0)),
    (3, "unequal", (1.0, 1.5, 1.0)),
]


@pytest.mark.parametrize("n_qubits,label,g", ORACLE_CASES, ids=[f"N{c[0]}-{c[1]}" for c in ORACLE_CASES])
def test_criterion_2_oracle_equivalence(n_qubits, label, g):
    params = ModelParams(g=g, delta=2.0)
    space = HilbertSpace(n_qubits, 40)
    T1 = gate_times(params.delta, 1)
    times = np.linspace(0.0, 2 * T1, 21)[1:]
    numeric = h3_propagator(times, params, space)
    worst = max(window_norm(u, closed_form_propagator(t, params, space), n_qubits) for u, t in zip(numeric, times))
    report(f"2 oracle equivalence N={n_qubits} {label}", worst <= 1e-5, f"max window norm diff {worst:.2e} over 20 times")


def test_criterion_3_cavity_insensitivity():
    params = ModelParams(g=(1.0, 1.0), delta=2.0)
    T1 = gate_times(params.delta, 1)
    cutoff = gate_cutoff(params, alpha0=2.0, nbar=0.5)
    space = HilbertSpace(2, cutoff)
    u_mid, u_end = h3_propagator([T1 / 2, T1], params, space)
    cavities = {
        "vacuum": cavity_state("fock", 0, cutoff),
        "coherent(1)": cavity_state("coherent", 1.0, cutoff),
        "coherent(2i)": cavity_state("coherent", 2j, cutoff),
        "thermal(0.5)": cavity_state("thermal", 0.5, cutoff),
    }
    finals, mids = {}, {}
    for name, cav in cavities.items():
        psi0 = product_state(cav, ["up", "up"])
        finals[name] = reduce_to_qubits(psi0.evolve(u_end))
        mids[name] = reduce_to_qubits(psi0.evolve(u_mid)).purity()
    pair = min(fidelity(finals[a], finals[b]) for a, b in itertools.combinations(finals, 2))
    purity = min(r.purity() for r in finals.values())
    mid = max(mids.values())
    ok = pair >= 1 - 1e-5 and purity >= 1 - 1e-5 and mid < 0.9
    report("3 cavity insensitivity", ok, f"min pair fidelity {pair:.10f}, min purity {purity:.10f}, max mid-gate purity {mid:.4f} (cutoff {cutoff})")


def test_criterion_4_maximal_entangler():
    design = entangler_design((1.0, 1.0), n=1)
    params = design.params()
    space = HilbertSpace(2, gate_cutoff(params))
    u = h3_propagator(design.T, params, space)
    rho = reduce_to_qubits(product_state(cavity_state("fock", 0, space.fock_cutoff), ["up", "up"]).evolve(u))
    c = concurrence(rho)
    f = ghz_fidelity(rho, optimize_phase=False)
    ok = math.isclose(design.delta, 2.0) and math.isclose(design.T, math.pi) and c >= 0.999 and f >= 0.999
    report("4 maximal entangler", ok, f"delta {design.delta}, T {design.T:.12f}, concurrence {c:.8f}, fidelity to (|uu>+i|dd>)/sqrt2 {f:.8f}")


SETTINGS = [(2.0, 1.0, 1), (1.0, 1.0, 1), (3.0, 0.5, 2), (2.0, 2.0, 3), (0.7, 1.3, 1)]


def test_criterion_5_geometric_property():
    params = ModelParams(g=(2.0,), delta=2.0)
    T1 = gate_times(2.0, 1)
    errors = []
    for samples in (400, 800, 1600):
        rec = conditional_trajectory(params, (1,), np.linspace(0, T1, samples + 1))
        errors.append(abs(rec.enclosed_area - math.pi / 4))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    rec = conditional_trajectory(params, (1,), np.linspace(0, T1, 1601))
    factors = []
    for delta, weight, n in SETTINGS:
        p = ModelParams(g=(weight,), delta=delta)
        r = conditional_trajectory(p, (1,), np.linspace(0, gate_times(delta, n), 400 * n + 1))
        exact_area = n * math.pi * weight**2 / (4 * delta**2)
        factors.append(r.accumulated_phase / exact_area)
    ok = (
        rec.closure_error <= 1e-8
        and errors[-1] < 1e-4
        and all(abs(o - 2) < 0.05 for o in orders)
        and abs(rec.accumulated_phase - math.pi / 2) < 1e-12
        and max(abs(f - 2) for f in factors) < 1e-12
    )
    report(
        "5 geometric property",
        ok,
        f"closure {rec.closure_error:.1e}, area {rec.enclosed_area:.8f} (orders {orders[0]:.3f}, {orders[1]:.3f}), "
        f"phase {rec.accumulated_phase:.12f}, phase/area factors {[round(f, 12) for f in factors]}",
    )


def test_criterion_6_approximation_chain():
    space = HilbertSpace(2, 20)
    fids = [rwa_process_fidelity(ModelParams.with_rabi((1.0, 1.0), 2.0, om), space)[0] for om in (5, 10, 20, 50)]
    increasing = all(b > a for a, b in zip(fids, fids[1:]))
    ok = fids[-1] >= 0.99 and increasing
    report("6 approximation chain", ok, f"process fidelity at Omega = 5, 10, 20, 50 g: {[round(f, 6) for f in fids]}")


def test_criterion_7_frame_elimination():
    params = ModelParams(g=(1.0,), delta=1.0, omega_r=10.0, drive_eps=2.0)
    res = displaced_frame_residual(params, HilbertSpace(1, 30), np.linspace(0, 2 * math.pi, 9))
    report("7 frame elimination", res.residual <= 1e-6, f"residual {res.residual:.2e} on Fock window {res.window}")


def test_criterion_8_scalability():
    g, chi = 1.0, math.pi / 8
    times = [entangler_design((g,) * n, twist_phase=chi).T for n in (2, 3, 4)]
    deltas = [entangler_design((g,) * n, twist_phase=chi).delta for n in (2, 3, 4)]
    same = len(set(times)) == 1 and len(set(deltas)) == 1
    best, best_chi = 0.0, None
    for chi_scan in np.linspace(0, math.pi / 4, 33)[1:]:
        d = entangler_design((g,) * 3, twist_phase=float(chi_scan))
        space = HilbertSpace(3, gate_cutoff(d.params()))
        psi = product_state(cavity_state("fock", 0, space.fock_cutoff), ["up"] * 3)
        rho = reduce_to_qubits(psi.evolve(closed_form_propagator(d.T, d.params(), space)))
        f = ghz_fidelity(rho, axis="y")
        if f > best:
            best, best_chi = f, float(chi_scan)
    # numerical propagation at the optimum
    d = entangler_design((g,) * 3, twist_phase=best_chi)
    space = HilbertSpace(3, gate_cutoff(d.params()))
    psi = product_state(cavity_state("fock", 0, space.fock_cutoff), ["up"] * 3)
    numeric = ghz_fidelity(reduce_to_qubits(psi.evolve(h3_propagator(d.T, d.params(), space))), axis="y")
    ok = same and best >= 0.999 and numeric >= 0.999
    report(
        "8 multiqubit scalability",
        ok,
        f"T for N=2,3,4: {times}, best N=3 GHZ fidelity (y axis) {best:.10f} at twist {best_chi:.6f}, numerical {numeric:.10f}",
    )


SCENARIO_FILES = {
    "bell_gate": "scenario = bell_gate\n",
    "ghz_gate": "scenario = ghz_gate\nscan_points = 9\n",
    "cavity_insensitivity": "scenario = cavity_insensitivity\nqubit_state = random\nseed = 3\nmid_gate = false\n",
    "rwa_validity": "scenario = rwa_validity\nsweep.Omega = 5, 10\nfock_cutoff = 12\n",
    "trajectory_trace": "scenario = trajectory_trace\n",
    "frame_equivalence": "scenario = frame_equivalence\n",
    "convergence_report": "scenario = convergence_report\n",
}


def test_criterion_9_reproducibility_and_truncation(tmp_path):
    identical = []
    for name, text in SCENARIO_FILES.items():
        outputs = []
        for run in range(2):
            config = resolve(parse_lines(text), SCHEMAS)
            out = tmp_path / f"{name}-{run}"
            run_scenario(config, out)
            outputs.append(((out / "results.csv").read_bytes(), (out / "summary.json").read_bytes()))
        identical.append(outputs[0] == outputs[1])
    metrics = json.loads((tmp_path / "convergence_report-0" / "summary.json").read_text())["metrics"]
    change = metrics["max_change"]
    ok = all(identical) and change < 1e-5
    report("9 reproducibility and truncation", ok, f"bit-identical reruns {sum(identical)}/{len(identical)}, max metric change on doubling cutoff {change:.2e}")
