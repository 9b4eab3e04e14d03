"""Named experiments run by the command-line tool.

Each scenario maps resolved parameters to scalar metrics, optional table
rows and numerical diagnostics (cutoff, step counts, residuals).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..analysis import (
    concurrence,
    conditional_trajectory,
    cumulative_area,
    fidelity,
    ghz_fidelity,
    rwa_process_fidelity,
)
from ..errors import TruncationError
from ..hilbert import (
    TAIL_TOL,
    HilbertSpace,
    cavity_state,
    coherent_tail,
    default_cutoff,
    product_state,
    qubit_ket,
    reduce_to_qubits,
    site_operator,
)
from ..model import ModelParams, displaced_frame_residual
from ..propagation import (
    StepPolicy,
    branch_weights,
    closed_form_propagator,
    default_step,
    entangler_design,
    gate_cutoff,
    gate_times,
    h3_propagator,
    magnus_coefficients,
)
from .config import (
    as_bool,
    as_cutoff,
    as_float,
    as_float_list,
    as_int,
    as_optional_float,
    as_str,
)

ORACLE_WINDOW = 5


@dataclass
class ScenarioResult:
    metrics: dict
    rows: list[dict] = field(default_factory=list)
    numerics: dict = field(default_factory=dict)


def _policy(p, params):
    return StepPolicy(dt=default_step(params), tol=p["tol"], max_steps=p["max_steps"])


def _check_cutoff(cutoff, reach, nbar=0.0):
    """Raise when a displaced state of amplitude ``reach`` leaks past the cutoff."""
    tail = coherent_tail(reach, cutoff)
    if tail > TAIL_TOL or (nbar > 0 and cutoff < default_cutoff(reach, nbar)):
        raise TruncationError(
            f"Fock cutoff {cutoff} too small for amplitude {reach:.3g} (tail {tail:.3g}); "
            f"need about {default_cutoff(reach, nbar)}",
            tail=tail,
            cutoff=cutoff,
        )


def _window_deviation(u, v, space, window=ORACLE_WINDOW):
    """Operator-norm difference restricted to Fock levels below ``window``."""
    nb = 2**space.n_qubits
    keep = np.arange(min(window, space.fock_cutoff) * nb)
    diff = u.matrix[np.ix_(keep, keep)] - v.matrix[np.ix_(keep, keep)]
    return float(np.linalg.norm(diff, 2))


def _gate_params(p):
    g = tuple(p["g"])
    if p.get("delta") is None:
        design = entangler_design(g, p["n"])
        return ModelParams(g=g, delta=design.delta)
    return ModelParams(g=g, delta=p["delta"])


def _numerics(space, infos):
    infos = infos if isinstance(infos, list) else [infos]
    return {
        "fock_cutoff": space.fock_cutoff,
        "steps": int(sum(i.steps for i in infos)),
        "residual": float(max(i.residual for i in infos)),
    }


def bell_gate(p, seed):
    params = _gate_params(p)
    if params.n_qubits != 2:
        raise ValueError("bell_gate needs exactly two couplings")
    T = gate_times(params.delta, p["n"])
    cutoff = p["fock_cutoff"] or gate_cutoff(params)
    _check_cutoff(cutoff, float(np.abs(branch_weights(params.g)).max() / params.delta))
    space = HilbertSpace(2, cutoff)
    u, info = h3_propagator(T, params, space, _policy(p, params), return_info=True)
    psi0 = product_state(cavity_state("fock", 0, cutoff), ["up", "up"])
    rho = reduce_to_qubits(psi0.evolve(u))
    oracle = _window_deviation(u, closed_form_propagator(T, params, space), space)
    metrics = {
        "delta": params.delta,
        "T": T,
        "concurrence": concurrence(rho),
        "bell_fidelity": ghz_fidelity(rho, optimize_phase=False),
        "qubit_purity": rho.purity(),
        "oracle_deviation": oracle,
    }
    return ScenarioResult(metrics, numerics=_numerics(space, info))


def ghz_gate(p, seed):
    nq = p["n_qubits"]
    g = (p["g"],) * nq
    design = entangler_design(g, p["n"], twist_phase=p["twist_phase"])
    params = design.params()
    T = design.T
    cutoff = p["fock_cutoff"] or gate_cutoff(params)
    _check_cutoff(cutoff, float(np.abs(branch_weights(g)).max() / params.delta))
    space = HilbertSpace(nq, cutoff)
    psi0 = product_state(cavity_state("fock", 0, cutoff), ["up"] * nq)

    def ghz_metrics(u):
        rho = reduce_to_qubits(psi0.evolve(u))
        per_axis = {ax: ghz_fidelity(rho, axis=ax) for ax in ("z", "x", "y")}
        return rho, per_axis

    metrics = {"delta": params.delta, "T": T}
    # closed-form scan of the twisting phase at the design's loop count
    best = (-1.0, math.nan)
    for chi in np.linspace(0, math.pi / 4, p["scan_points"])[1:]:
        d = entangler_design(g, p["n"], twist_phase=float(chi))
        sp = HilbertSpace(nq, gate_cutoff(d.params()))
        psi = product_state(cavity_state("fock", 0, sp.fock_cutoff), ["up"] * nq)
        rho = reduce_to_qubits(psi.evolve(closed_form_propagator(d.T, d.params(), sp)))
        f = max(ghz_fidelity(rho, axis=ax) for ax in ("z", "x", "y"))
        if f > best[0] + 1e-12:
            best = (f, float(chi))
    metrics["scan_best_fidelity"], metrics["scan_best_twist"] = best

    info = None
    if p["numeric"]:
        u, info = h3_propagator(T, params, space, _policy(p, params), return_info=True)
    else:
        u = closed_form_propagator(T, params, space)
    rho, per_axis = ghz_metrics(u)
    for ax, f in per_axis.items():
        metrics[f"ghz_fidelity_{ax}"] = f
    metrics["ghz_fidelity"] = max(per_axis.values())
    metrics["qubit_purity"] = rho.purity()
    numerics = _numerics(space, info) if info else {"fock_cutoff": cutoff, "steps": 0, "residual": 0.0}
    return ScenarioResult(metrics, numerics=numerics)


def parse_cavity_spec(spec: str):
    """``vacuum``, ``fock:n``, ``coherent:alpha`` (complex allowed) or ``thermal:nbar``."""
    spec = spec.strip()
    kind, _, value = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "vacuum":
        return "fock", 0
    if kind == "fock":
        return "fock", as_int(value)
    if kind == "coherent":
        text = value.strip().replace("i", "j")
        return "coherent", complex(text)
    if kind == "thermal":
        return "thermal", as_float(value)
    raise ValueError(f"unknown cavity state {spec!r}")


def _qubit_states(spec, nq, rng):
    labels = [s.strip() for s in spec.split(",") if s.strip()]
    if labels == ["random"]:
        vecs = []
        for _ in range(nq):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            vecs.append(v / np.linalg.norm(v))
        return vecs
    if len(labels) == 1:
        labels = labels * nq
    if len(labels) != nq:
        raise ValueError(f"expected {nq} qubit labels, got {len(labels)}")
    return [qubit_ket(lab) for lab in labels]


def cavity_insensitivity(p, seed):
    params = _gate_params(p)
    nq = params.n_qubits
    T = gate_times(params.delta, p["n"])
    specs = [s for s in p["cavity_states"].split(",") if s.strip()]
    parsed = [parse_cavity_spec(s) for s in specs]
    amax = max([abs(v) for k, v in parsed if k == "coherent"] + [0.0])
    nbar = max([v for k, v in parsed if k == "thermal"] + [0.0])
    reach = amax + float(np.abs(branch_weights(params.g)).max() / params.delta)
    cutoff = p["fock_cutoff"] or default_cutoff(reach, nbar)
    _check_cutoff(cutoff, reach, nbar)
    space = HilbertSpace(nq, cutoff)
    # PCG64 via numpy's default generator, seeded from the config
    rng = np.random.default_rng(seed)
    qubits = _qubit_states(p["qubit_state"], nq, rng)

    times = [T / 2, T] if p["mid_gate"] else [T]
    us, infos = h3_propagator(times, params, space, _policy(p, params), return_info=True)
    finals, mids = [], []
    for kind, value in parsed:
        psi0 = product_state(cavity_state(kind, value, cutoff), qubits)
        finals.append(reduce_to_qubits(psi0.evolve(us[-1])))
        if p["mid_gate"]:
            mids.append(reduce_to_qubits(psi0.evolve(us[0])).purity())
    rows = []
    for (i, a), (j, b) in itertools.combinations(enumerate(finals), 2):
        rows.append(
            {
                "state_a": specs[i].strip(),
                "state_b": specs[j].strip(),
                "fidelity": fidelity(a, b),
                "purity_a": a.purity(),
                "purity_b": b.purity(),
            }
        )
    purities = [r.purity() for r in finals]
    metrics = {
        "delta": params.delta,
        "T": T,
        "min_pair_fidelity": min((r["fidelity"] for r in rows), default=1.0),
        "min_purity": min(purities),
    }
    if mids:
        metrics["max_mid_gate_purity"] = max(mids)
    return ScenarioResult(metrics, rows, _numerics(space, infos))


def rwa_validity(p, seed):
    g = tuple(p["g"])
    params = ModelParams.with_rabi(g, p["delta"], p["Omega"])
    cutoff = p["fock_cutoff"] or gate_cutoff(params)
    space = HilbertSpace(len(g), cutoff)
    policy = StepPolicy(dt=default_step(params, rabi_active=True), tol=p["tol"], max_steps=p["max_steps"])
    f, info = rwa_process_fidelity(params, space, p["n"], p["method"], policy)
    metrics = {
        "delta": params.delta,
        "Omega": p["Omega"],
        "T": gate_times(params.delta, p["n"]),
        "process_fidelity": f,
    }
    numerics = _numerics(space, info) if info else {"fock_cutoff": cutoff, "steps": 0, "residual": 0.0}
    return ScenarioResult(metrics, numerics=numerics)


def trajectory_trace(p, seed):
    delta, weight, n = p["delta"], p["S_s"], p["n"]
    params = ModelParams(g=(weight,), delta=delta)
    T = gate_times(delta, n)
    samples = n * p["points_per_period"]
    t = np.linspace(0.0, T, samples + 1)
    rec = conditional_trajectory(params, (1,), t)
    area = cumulative_area(rec.points)
    phi = weight**2 * np.atleast_1d(magnus_coefficients(t, delta).phi)
    rows = [
        {"t": float(ti), "re_alpha": float(z.real), "im_alpha": float(z.imag), "area": float(a), "phase": float(ph)}
        for ti, z, a, ph in zip(t, rec.points, area, phi)
    ]
    # second-order check of the shoelace area on a half-resolution grid
    coarse = conditional_trajectory(params, (1,), np.linspace(0.0, T, samples // 2 + 1)).enclosed_area
    exact = n * math.pi * weight**2 / (4 * delta**2)
    err_fine, err_coarse = abs(rec.enclosed_area - exact), abs(coarse - exact)
    order = math.log2(err_coarse / err_fine) if err_fine > 0 and err_coarse > 0 else math.nan
    metrics = {
        "T": T,
        "closure_error": rec.closure_error,
        "enclosed_area": rec.enclosed_area,
        "area_per_loop": rec.area_per_loop,
        "exact_area": exact,
        "area_convergence_order": order,
        "accumulated_phase": rec.accumulated_phase,
        "phase_area_factor": rec.phase_area_factor,
    }
    return ScenarioResult(metrics, rows, {"samples": samples})


def frame_equivalence(p, seed):
    delta = p["delta"]
    eps = p["eps_over_delta"] * delta
    params = ModelParams(g=(p["g"],), delta=delta, omega_r=p["omega_r"], drive_eps=eps)
    cutoff = p["fock_cutoff"] or 30
    space = HilbertSpace(1, cutoff)
    period = 2 * math.pi / abs(delta)
    t = np.linspace(0.0, period, p["t_points"])
    res = displaced_frame_residual(params, space, t)
    metrics = {"residual": res.residual, "derivative_error": res.derivative_error, "window": res.window}
    rows = [{"t": float(ti), "residual": float(r)} for ti, r in zip(t, res.per_time)]
    return ScenarioResult(metrics, rows, {"fock_cutoff": cutoff, "window": res.window})


def _report_metrics(p, params, cutoff):
    T = gate_times(params.delta, p["n"])
    space = HilbertSpace(params.n_qubits, cutoff)
    u, info = h3_propagator(T, params, space, _policy(p, params), return_info=True)
    kind, value = parse_cavity_spec(p["cavity_state"])
    psi0 = product_state(cavity_state(kind, value, cutoff, strict=False), ["up"] * params.n_qubits)
    final = psi0.evolve(u)
    rho = reduce_to_qubits(final)
    num = site_operator("number", "cavity", space)
    metrics = {
        "bell_fidelity": ghz_fidelity(rho, optimize_phase=False),
        "concurrence": concurrence(rho),
        "qubit_purity": rho.purity(),
        "mean_photons": float(final.expect(num).real),
    }
    return metrics, info


def convergence_report(p, seed):
    params = _gate_params(p)
    if params.n_qubits != 2:
        raise ValueError("convergence_report needs exactly two couplings")
    kind, value = parse_cavity_spec(p["cavity_state"])
    amax = abs(value) if kind == "coherent" else 0.0
    nbar = value if kind == "thermal" else 0.0
    base = p["fock_cutoff"] or gate_cutoff(params, amax, nbar)
    m1, i1 = _report_metrics(p, params, base)
    m2, i2 = _report_metrics(p, params, 2 * base)
    metrics = {"cutoff": base, "doubled_cutoff": 2 * base}
    rows = []
    for key in m1:
        diff = abs(m2[key] - m1[key])
        metrics[key] = m1[key]
        metrics[f"{key}_doubled"] = m2[key]
        metrics[f"{key}_change"] = diff
        rows.append({"metric": key, "value": m1[key], "value_doubled": m2[key], "change": diff})
    metrics["max_change"] = max(r["change"] for r in rows)
    numerics = {
        "fock_cutoff": base,
        "steps": i1.steps + i2.steps,
        "residual": max(i1.residual, i2.residual),
    }
    return ScenarioResult(metrics, rows, numerics)


_COMMON = {"fock_cutoff": (as_cutoff, None), "tol": (as_float, 1e-9), "max_steps": (as_int, 2**20)}

SCHEMAS = {
    "bell_gate": {"g": (as_float_list, "1, 1"), "n": (as_int, 1), "delta": (as_optional_float, None), **_COMMON},
    "ghz_gate": {
        "n_qubits": (as_int, 3),
        "g": (as_float, 1.0),
        "n": (as_int, 1),
        "twist_phase": (as_float, math.pi / 8),
        "scan_points": (as_int, 33),
        "numeric": (as_bool, True),
        **_COMMON,
    },
    "cavity_insensitivity": {
        "g": (as_float_list, "1, 1"),
        "n": (as_int, 1),
        "delta": (as_optional_float, None),
        "cavity_states": (as_str, "vacuum, coherent:1, coherent:2i, thermal:0.5"),
        "qubit_state": (as_str, "up"),
        "mid_gate": (as_bool, True),
        **_COMMON,
    },
    "rwa_validity": {
        "g": (as_float_list, "1, 1"),
        "delta": (as_float, 2.0),
        "Omega": (as_float, 50.0),
        "n": (as_int, 1),
        "method": (as_str, "exact"),
        **_COMMON,
    },
    "trajectory_trace": {
        "S_s": (as_float, 2.0),
        "delta": (as_float, 2.0),
        "n": (as_int, 1),
        "points_per_period": (as_int, 400),
    },
    "frame_equivalence": {
        "g": (as_float, 1.0),
        "delta": (as_float, 1.0),
        "omega_r": (as_float, 10.0),
        "eps_over_delta": (as_float, 2.0),
        "t_points": (as_int, 9),
        "fock_cutoff": (as_cutoff, 30),
    },
    "convergence_report": {
        "g": (as_float_list, "1, 1"),
        "n": (as_int, 1),
        "delta": (as_optional_float, None),
        "cavity_state": (as_str, "coherent:1"),
        **_COMMON,
    },
}

RUNNERS = {
    "bell_gate": bell_gate,
    "ghz_gate": ghz_gate,
    "cavity_insensitivity": cavity_insensitivity,
    "rwa_validity": rwa_validity,
    "trajectory_trace": trajectory_trace,
    "frame_equivalence": frame_equivalence,
    "convergence_report": convergence_report,
}
