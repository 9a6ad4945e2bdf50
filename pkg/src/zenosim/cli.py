"""Experiment harness: config parsing, scenario dispatch, result files.

A scenario is a JSON document (or the equivalent subcommand flags)
naming one of five kinds: ``zeno`` (single repeated-question run),
``zeno-sweep`` (leakage scaling over several event counts), ``calcium``
(ion kinematics report), ``branch`` (release-pattern mixture), and
``custom-pipeline`` (explicit step list). Every scenario writes one CSV
or JSON result file; re-running an identical config with the same seed
reproduces that file byte for byte. ``--plot`` additionally renders
figures next to the result file.

Exit codes: 0 success, 2 configuration rejected, 3 numeric or I/O
failure during an otherwise valid run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .channels import (
    BranchConfig,
    DephasingChannel,
    HamiltonianSpec,
    MAX_DENSE_BRANCH_TERMINALS,
    apply_dephasing,
    computational_dephasing,
    evolve_unitary,
    random_hermitian,
    rabi_hamiltonian,
    release_branch_mixture,
)
from .collapse import apply_answer, probability_yes, process1, select_event
from .errors import (
    ConfigurationError,
    ScenarioExecutionError,
    ZenosimError,
)
from .estimates import ATOMIC_MASS_KG, IonParameters, spread_at_trigger
from .opalg import Projector, WeightOperator, basis_projector
from .zeno import (
    EffortSetting,
    RunMode,
    SurvivalCurve,
    ZenoProtocol,
    effort_to_interval,
    leakage_sweep,
    run_expected,
    run_sampled,
)

SCENARIO_KINDS = ("zeno", "zeno-sweep", "calcium", "branch", "custom-pipeline")

CSV_COLUMNS = ("scenario", "N", "d", "survival", "stderr", "seed")


@dataclass(frozen=True)
class ScenarioConfig:
    """One validated scenario request: kind, parameters, output target."""

    kind: str
    params: dict
    out_path: Path
    out_format: str
    plot: bool = False

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigurationError(
                f"field 'scenario': unknown kind {self.kind!r}, "
                f"expected one of {', '.join(SCENARIO_KINDS)}"
            )
        if self.out_format not in ("csv", "json"):
            raise ConfigurationError(
                f"field 'format': must be 'csv' or 'json', got {self.out_format!r}"
            )


@dataclass(frozen=True)
class ResultRecord:
    """Everything a run produced.

    ``points``, ``extras``, ``event_log``, and the identity fields are
    serialized; ``wall_time`` and ``figures`` are console-only so that
    re-runs stay byte-identical.
    """

    scenario: str
    version: str
    config: dict
    points: tuple[dict, ...]
    extras: dict
    event_log: tuple | None
    trajectories: int | None
    root_seed: int | None
    wall_time: float
    figures: tuple[Path, ...] = ()

    def __post_init__(self):
        if self.config.get("mode") == "sampled":
            if self.root_seed is None or self.trajectories is None:
                raise ConfigurationError(
                    "sampled results must carry root_seed and trajectories"
                )


# ---------------------------------------------------------------------------
# config field parsing


def _field(params: dict, name: str, default=None, required: bool = False):
    if name in params:
        return params[name]
    if required:
        raise ConfigurationError(f"field '{name}': required for this scenario")
    return default


def _positive_number(params: dict, name: str, default=None) -> float:
    v = _field(params, name, default, required=default is None)
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigurationError(f"field '{name}': expected a number, got {v!r}")
    if not v > 0.0:
        raise ConfigurationError(f"field '{name}': must be > 0, got {v}")
    return v


def _matrix_from_entries(entries, name: str) -> np.ndarray:
    """Nested lists; each cell a real number or an [re, im] pair."""
    if not isinstance(entries, list) or not entries:
        raise ConfigurationError(f"field '{name}': expected a non-empty list of rows")
    rows = []
    for row in entries:
        if not isinstance(row, list):
            raise ConfigurationError(f"field '{name}': rows must be lists")
        cells = []
        for cell in row:
            if isinstance(cell, list):
                if len(cell) != 2:
                    raise ConfigurationError(
                        f"field '{name}': complex cells are [re, im] pairs"
                    )
                cells.append(complex(float(cell[0]), float(cell[1])))
            else:
                cells.append(complex(float(cell), 0.0))
        rows.append(cells)
    m = np.array(rows, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"field '{name}': matrix must be square, got {m.shape}")
    return m


def _matrix_to_entries(m: np.ndarray) -> list:
    return [[[float(c.real), float(c.imag)] for c in row] for row in np.asarray(m)]


def _parse_hamiltonian(spec, dim: int | None, name: str = "hamiltonian"):
    """Returns (HamiltonianSpec, echo dict)."""
    if spec is None:
        spec = {"preset": "rabi", "omega": 1.0}
    if not isinstance(spec, dict):
        raise ConfigurationError(f"field '{name}': expected an object")
    if "entries" in spec:
        m = _matrix_from_entries(spec["entries"], f"{name}.entries")
        return HamiltonianSpec(m), {"entries": _matrix_to_entries(m)}
    preset = spec.get("preset")
    if preset == "rabi":
        omega = float(spec.get("omega", 1.0))
        if dim is not None and dim != 2:
            raise ConfigurationError(
                f"field '{name}': rabi preset is two-level but dim = {dim}"
            )
        return rabi_hamiltonian(omega), {"preset": "rabi", "omega": omega}
    if preset == "random-hermitian":
        hdim = int(spec.get("dim", dim if dim is not None else 0))
        if hdim < 1:
            raise ConfigurationError(f"field '{name}.dim': required for this preset")
        seed = int(spec.get("seed", 0))
        return random_hermitian(hdim, seed), {
            "preset": "random-hermitian",
            "dim": hdim,
            "seed": seed,
        }
    raise ConfigurationError(
        f"field '{name}': need 'entries' or preset 'rabi'/'random-hermitian', "
        f"got {preset!r}"
    )


def _parse_projector(spec, dim: int, name: str = "projector"):
    """Returns (Projector, echo dict)."""
    if spec is None:
        spec = {"indices": [0]}
    if not isinstance(spec, dict):
        raise ConfigurationError(f"field '{name}': expected an object")
    label = str(spec.get("label", ""))
    if "entries" in spec:
        m = _matrix_from_entries(spec["entries"], f"{name}.entries")
        proj = Projector(m, label=label)
        return proj, {"entries": _matrix_to_entries(m), "label": label}
    indices = spec.get("indices")
    if not isinstance(indices, list) or not indices:
        raise ConfigurationError(f"field '{name}.indices': expected a non-empty list")
    indices = [int(i) for i in indices]
    proj = basis_projector(dim, indices, label=label)
    return proj, {"indices": sorted(set(indices)), "label": label}


def _parse_dephasing(spec, dim: int, name: str = "dephasing"):
    """Returns (DephasingChannel | None, echo)."""
    if spec is None:
        return None, None
    if not isinstance(spec, dict) or spec.get("rate") is None:
        raise ConfigurationError(f"field '{name}': expected an object with a 'rate'")
    rate = float(spec["rate"])
    basis = spec.get("basis", "computational")
    if basis == "computational":
        return computational_dephasing(dim, rate), {
            "rate": rate,
            "basis": "computational",
        }
    if isinstance(basis, dict) and "entries" in basis:
        m = _matrix_from_entries(basis["entries"], f"{name}.basis.entries")
        return DephasingChannel(m, rate), {
            "rate": rate,
            "basis": {"entries": _matrix_to_entries(m)},
        }
    raise ConfigurationError(
        f"field '{name}.basis': 'computational' or an entries object, got {basis!r}"
    )


def _parse_initial(spec, proj: Projector, name: str = "initial"):
    """Default initial state: uniform weight inside the question subspace."""
    if spec is None:
        m = proj.matrix / np.trace(proj.matrix).real
        return WeightOperator(m), None
    if isinstance(spec, dict) and "entries" in spec:
        m = _matrix_from_entries(spec["entries"], f"{name}.entries")
        return WeightOperator(m), {"entries": _matrix_to_entries(m)}
    raise ConfigurationError(f"field '{name}': expected null or an entries object")


def _resolve_event_count(params: dict, total_time: float):
    """event_count and effort are mutually exclusive; effort is mapped to a
    count through the linear rate law."""
    has_count = "event_count" in params
    has_effort = "effort" in params and params["effort"] is not None
    if has_count and has_effort:
        raise ConfigurationError(
            "field 'event_count': give either event_count or effort, not both"
        )
    if has_effort:
        e = params["effort"]
        if not isinstance(e, dict):
            raise ConfigurationError(
                "field 'effort': expected {value, rate_min, rate_max}"
            )
        try:
            setting = EffortSetting(
                effort=float(e.get("value", 0.0)),
                rate_min=float(e["rate_min"]),
                rate_max=float(e["rate_max"]),
            )
        except KeyError as k:
            raise ConfigurationError(f"field 'effort.{k.args[0]}': required")
        n = effort_to_interval(setting, total_time)
        echo = {
            "value": setting.effort,
            "rate_min": setting.rate_min,
            "rate_max": setting.rate_max,
        }
        return n, echo
    n = int(_field(params, "event_count", 100))
    if n < 1:
        raise ConfigurationError(f"field 'event_count': must be >= 1, got {n}")
    return n, None


# ---------------------------------------------------------------------------
# scenario builders: params -> (echo config, execute closure)


@dataclass(frozen=True)
class _Output:
    points: tuple[dict, ...]
    extras: dict
    event_log: tuple | None = None
    plots: tuple = ()          # (suffix, callable(path) -> Path)
    trajectories: int | None = None
    root_seed: int | None = None


def _point(n, d, survival, stderr=None, seed=None) -> dict:
    return {"N": n, "d": d, "survival": survival, "stderr": stderr, "seed": seed}


def _build_zeno(params: dict):
    dim = int(_field(params, "dim", 2))
    h, h_echo = _parse_hamiltonian(_field(params, "hamiltonian"), dim)
    proj, p_echo = _parse_projector(_field(params, "projector"), dim)
    deph, d_echo = _parse_dephasing(_field(params, "dephasing"), dim)
    total_time = _positive_number(params, "total_time", math.pi)
    n, effort_echo = _resolve_event_count(params, total_time)
    mode = str(_field(params, "mode", "expected"))
    if mode not in ("expected", "sampled"):
        raise ConfigurationError(
            f"field 'mode': 'expected' or 'sampled', got {mode!r}"
        )
    trajectories = _field(params, "trajectories")
    root_seed = _field(params, "root_seed")
    if mode == "sampled" and root_seed is None:
        raise ConfigurationError("field 'root_seed': required when mode = sampled")
    record_events = bool(_field(params, "record_events", False))
    initial, init_echo = _parse_initial(_field(params, "initial"), proj)

    proto = ZenoProtocol(
        total_time=total_time,
        event_count=n,
        hamiltonian=h,
        projector=proj,
        dephasing=deph,
        mode=RunMode(mode),
        trajectories=1 if trajectories is None else int(trajectories),
        root_seed=None if root_seed is None else int(root_seed),
    )
    if initial.dim != proto.dim:
        raise ConfigurationError(
            f"field 'initial': dim {initial.dim} != protocol dim {proto.dim}"
        )

    echo = {
        "scenario": "zeno",
        "dim": dim,
        "hamiltonian": h_echo,
        "projector": p_echo,
        "dephasing": d_echo,
        "total_time": total_time,
        "event_count": n,
        "effort": effort_echo,
        "mode": mode,
        "trajectories": proto.trajectories if mode == "sampled" else None,
        "root_seed": proto.root_seed if mode == "sampled" else None,
        "record_events": record_events,
        "initial": init_echo,
    }

    def execute() -> _Output:
        if proto.mode is RunMode.EXPECTED:
            res = run_expected(proto, initial)
            curve = res.curve()
            points = tuple(
                _point(k, proto.interval, w) for k, w in curve.points
            )
            extras = {
                "survival": res.survival,
                "final_state": {"entries": _matrix_to_entries(res.final_state.matrix)},
            }
            from .plotting import save_survival_history

            plots = (("survival", lambda path: save_survival_history(curve, path)),)
            return _Output(points=points, extras=extras, plots=plots)

        res = run_sampled(proto, initial, record_events=record_events)
        points = (
            _point(
                n, proto.interval, res.survival, stderr=res.stderr, seed=res.root_seed
            ),
        )
        extras = {
            "survival": res.survival,
            "stderr": res.stderr,
            "all_yes_count": res.all_yes_count,
            "yes_fractions": [float(x) for x in res.yes_fractions],
        }
        log = None
        if record_events and res.records is not None:
            times = res.records.event_times
            log = tuple(
                tuple(
                    {
                        "t": float(times[k]),
                        "answer": bool(res.records.answers[i, k]),
                        "probability_yes": float(res.records.probabilities[i, k]),
                    }
                    for k in range(times.size)
                )
                for i in range(res.trajectories)
            )
        freq_curve = SurvivalCurve(
            points=tuple(
                (k + 1, float(f)) for k, f in enumerate(res.yes_fractions)
            ),
            metadata=proto.metadata(),
        )
        from .plotting import save_survival_history

        plots = (("yes_fractions", lambda path: save_survival_history(freq_curve, path)),)
        return _Output(
            points=points,
            extras=extras,
            event_log=log,
            plots=plots,
            trajectories=res.trajectories,
            root_seed=res.root_seed,
        )

    return echo, execute


def _build_zeno_sweep(params: dict):
    dim = int(_field(params, "dim", 2))
    h, h_echo = _parse_hamiltonian(_field(params, "hamiltonian"), dim)
    proj, p_echo = _parse_projector(_field(params, "projector"), dim)
    deph, d_echo = _parse_dephasing(_field(params, "dephasing"), dim)
    total_time = _positive_number(params, "total_time", math.pi)
    counts = _field(params, "counts", [100, 200, 400, 800])
    if not isinstance(counts, list) or len(counts) < 2:
        raise ConfigurationError("field 'counts': expected a list of >= 2 event counts")
    counts = [int(c) for c in counts]
    if any(c < 1 for c in counts):
        raise ConfigurationError("field 'counts': all entries must be >= 1")
    initial, init_echo = _parse_initial(_field(params, "initial"), proj)

    base = ZenoProtocol(
        total_time=total_time,
        event_count=counts[0],
        hamiltonian=h,
        projector=proj,
        dephasing=deph,
    )
    if initial.dim != base.dim:
        raise ConfigurationError(
            f"field 'initial': dim {initial.dim} != protocol dim {base.dim}"
        )

    echo = {
        "scenario": "zeno-sweep",
        "dim": dim,
        "hamiltonian": h_echo,
        "projector": p_echo,
        "dephasing": d_echo,
        "total_time": total_time,
        "counts": counts,
        "initial": init_echo,
    }

    def execute() -> _Output:
        sweep = leakage_sweep(base, counts, initial)
        points = tuple(
            _point(n, total_time / n, w) for n, w in sweep.curve.points
        )
        extras = {
            "slope": sweep.slope,
            "intercept": sweep.intercept,
            "leakages": list(sweep.leakages),
        }
        from .plotting import save_leakage_fit

        plots = (("leakage", lambda path: save_leakage_fit(sweep, path)),)
        return _Output(points=points, extras=extras, plots=plots)

    return echo, execute


def _build_calcium(params: dict):
    mass_amu = _positive_number(params, "mass_amu", 40.078)
    temperature = _positive_number(params, "temperature", 310.0)
    confinement_width = _positive_number(params, "confinement_width", 1e-9)
    transit_distance = float(_field(params, "transit_distance", 50e-9))
    ion_diameter = _positive_number(params, "ion_diameter", 0.2e-9)

    ion = IonParameters(
        mass=mass_amu * ATOMIC_MASS_KG,
        temperature=temperature,
        confinement_width=confinement_width,
        transit_distance=transit_distance,
        ion_diameter=ion_diameter,
    )

    echo = {
        "scenario": "calcium",
        "mass_amu": mass_amu,
        "temperature": temperature,
        "confinement_width": confinement_width,
        "transit_distance": transit_distance,
        "ion_diameter": ion_diameter,
    }

    def execute() -> _Output:
        report = spread_at_trigger(ion)
        extras = dict(report.as_dict())
        from .plotting import save_ion_estimate

        plots = (("estimate", lambda path: save_ion_estimate(report, path)),)
        return _Output(points=(), extras=extras, plots=plots)

    return echo, execute


def _build_branch(params: dict):
    terminals = int(_field(params, "terminals", 2))
    probability = float(_field(params, "probability", 0.5))
    cfg = BranchConfig(terminal_count=terminals, release_probability=probability)

    echo = {
        "scenario": "branch",
        "terminals": cfg.terminal_count,
        "probability": cfg.release_probability,
    }

    def execute() -> _Output:
        mix = release_branch_mixture(cfg)
        # Per-pattern rows stay readable up to the dense cap; above it the
        # rows collapse to one per released-terminal count.
        if cfg.terminal_count <= MAX_DENSE_BRANCH_TERMINALS:
            points = tuple(
                _point(i, None, float(w)) for i, w in enumerate(mix.weights)
            )
            row_meaning = "pattern"
        else:
            points = tuple(
                _point(k, None, float(w))
                for k, w in enumerate(mix.hamming_class_weights())
            )
            row_meaning = "class"
        extras = {
            "terminals": cfg.terminal_count,
            "probability": cfg.release_probability,
            "branches": 2**cfg.terminal_count,
            "trace": mix.trace,
            "row_meaning": row_meaning,
            "class_weights": [float(w) for w in mix.hamming_class_weights()],
        }
        from .plotting import save_branch_classes

        plots = (("classes", lambda path: save_branch_classes(mix, path)),)
        return _Output(points=points, extras=extras, plots=plots)

    return echo, execute


def _build_pipeline(params: dict):
    dim = int(_field(params, "dim", None, required=True))
    init_spec = _field(params, "initial", None, required=True)
    if not (isinstance(init_spec, dict) and "entries" in init_spec):
        raise ConfigurationError("field 'initial': expected an entries object")
    initial, init_echo = _parse_initial(init_spec, None)
    if initial.dim != dim:
        raise ConfigurationError(
            f"field 'initial': dim {initial.dim} != declared dim {dim}"
        )
    steps_spec = _field(params, "steps", None, required=True)
    if not isinstance(steps_spec, list) or not steps_spec:
        raise ConfigurationError("field 'steps': expected a non-empty list")

    steps = []     # (apply(state) -> (state, note), duration, echo)
    for i, s in enumerate(steps_spec):
        fname = f"steps[{i}]"
        if not isinstance(s, dict) or "op" not in s:
            raise ConfigurationError(f"field '{fname}': expected an object with 'op'")
        op = s["op"]
        if op == "unitary":
            h, h_echo = _parse_hamiltonian(
                _field(s, "hamiltonian", None, required=True), dim, f"{fname}.hamiltonian"
            )
            if h.dim != dim:
                raise ConfigurationError(f"field '{fname}': hamiltonian dim mismatch")
            dur = _positive_number(s, "duration", None)

            def apply(state, h=h, dur=dur):
                return evolve_unitary(state, h, dur), {}

            steps.append((apply, dur, {"op": "unitary", "hamiltonian": h_echo, "duration": dur}))
        elif op == "dephase":
            ch, ch_echo = _parse_dephasing(
                {"rate": s.get("rate"), "basis": s.get("basis", "computational")},
                dim,
                fname,
            )
            dur = _positive_number(s, "duration", None)

            def apply(state, ch=ch, dur=dur):
                return apply_dephasing(state, ch, dur), {}

            steps.append((apply, dur, {"op": "dephase", **ch_echo, "duration": dur}))
        elif op in ("process1", "event"):
            proj, p_echo = _parse_projector(
                _field(s, "projector", None, required=True), dim, f"{fname}.projector"
            )
            if op == "process1":

                def apply(state, proj=proj):
                    return process1(state, proj), {
                        "probability_yes": probability_yes(state, proj)
                    }

                steps.append((apply, None, {"op": "process1", "projector": p_echo}))
            else:
                answer = s.get("answer")
                if answer not in ("yes", "no"):
                    raise ConfigurationError(
                        f"field '{fname}.answer': 'yes' or 'no', got {answer!r}"
                    )
                yes = answer == "yes"

                def apply(state, proj=proj, yes=yes):
                    note = {"probability_yes": probability_yes(state, proj)}
                    return apply_answer(state, proj, yes), note

                steps.append(
                    (apply, None, {"op": "event", "projector": p_echo, "answer": answer})
                )
        elif op == "select_event":
            cand_spec = _field(s, "projectors", None, required=True)
            if not isinstance(cand_spec, list) or not cand_spec:
                raise ConfigurationError(
                    f"field '{fname}.projectors': expected a non-empty list"
                )
            cands = []
            cand_echo = []
            for j, c in enumerate(cand_spec):
                pj, pe = _parse_projector(c, dim, f"{fname}.projectors[{j}]")
                cands.append(pj)
                cand_echo.append(pe)

            def apply(state, cands=cands):
                chosen = select_event(state, cands)
                # identity, not ==: dataclass equality on ndarray fields is
                # ambiguous
                idx = next(j for j, c in enumerate(cands) if c is chosen)
                note = {
                    "selected": chosen.label or idx,
                    "probability_yes": probability_yes(state, chosen),
                }
                return apply_answer(state, chosen, True), note

            steps.append(
                (apply, None, {"op": "select_event", "projectors": cand_echo})
            )
        else:
            raise ConfigurationError(
                f"field '{fname}.op': unknown op {op!r}; expected unitary, dephase, "
                f"process1, event, or select_event"
            )

    echo = {
        "scenario": "custom-pipeline",
        "dim": dim,
        "initial": init_echo,
        "steps": [e for _, _, e in steps],
    }

    def execute() -> _Output:
        state = initial
        trace0 = state.trace
        points = []
        notes = []
        for i, (apply, dur, step_echo) in enumerate(steps):
            state, note = apply(state)
            points.append(_point(i + 1, dur, state.trace / trace0))
            notes.append({"op": step_echo["op"], **note})
        extras = {
            "step_notes": notes,
            "final_trace": state.trace,
            "final_state": {"entries": _matrix_to_entries(state.matrix)},
        }
        return _Output(points=tuple(points), extras=extras)

    return echo, execute


_BUILDERS: dict[str, Callable] = {
    "zeno": _build_zeno,
    "zeno-sweep": _build_zeno_sweep,
    "calcium": _build_calcium,
    "branch": _build_branch,
    "custom-pipeline": _build_pipeline,
}


# ---------------------------------------------------------------------------
# serialization: fixed float formatting so identical runs emit identical bytes


def _format_float(x: float) -> str:
    # 17 significant digits round-trips any float64; lowercase exponent.
    return f"{float(x):.16e}"


def _json_fragment(v, indent: int) -> str:
    pad = " " * indent
    inner = " " * (indent + 2)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _format_float(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, Path):
        return json.dumps(str(v))
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        items = ",\n".join(inner + _json_fragment(x, indent + 2) for x in v)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {_json_fragment(x, indent + 2)}"
            for k, x in v.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _record_document(r: ResultRecord) -> dict:
    return {
        "scenario": r.scenario,
        "version": r.version,
        "config": r.config,
        "points": list(r.points),
        "extras": r.extras,
        "trajectories": r.trajectories,
        "root_seed": r.root_seed,
        "event_log": None if r.event_log is None else [list(t) for t in r.event_log],
    }


def emit_results(r: ResultRecord, format: str, path: str | Path) -> None:
    """Write the result file. Identical records produce identical bytes.

    CSV: header then one row per point, columns scenario, N, d, survival,
    stderr, seed; empty cells where a column does not apply. JSON: a
    single document mirroring the record (wall time and figure paths
    excluded, they vary run to run).
    """
    path = Path(path)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for pt in r.points:
            w.writerow(
                [
                    r.scenario,
                    "" if pt["N"] is None else int(pt["N"]),
                    "" if pt["d"] is None else _format_float(pt["d"]),
                    "" if pt["survival"] is None else _format_float(pt["survival"]),
                    "" if pt["stderr"] is None else _format_float(pt["stderr"]),
                    "" if pt["seed"] is None else int(pt["seed"]),
                ]
            )
        text = buf.getvalue()
    elif format == "json":
        text = _json_fragment(_record_document(r), 0) + "\n"
    else:
        raise ConfigurationError(f"field 'format': unknown format {format!r}")
    try:
        path.write_text(text)
    except OSError as e:
        raise ScenarioExecutionError(f"writing {path}: {e}") from e


def run_scenario(cfg: ScenarioConfig) -> ResultRecord:
    """Validate, execute, persist, and return one scenario's results."""
    if cfg.kind not in _BUILDERS:
        raise ConfigurationError(
            f"field 'scenario': unknown kind {cfg.kind!r}; "
            f"expected one of {', '.join(sorted(_BUILDERS))}"
        )
    echo, execute = _BUILDERS[cfg.kind](cfg.params)

    t0 = time.perf_counter()
    try:
        out = execute()
    except ZenosimError as e:
        raise ScenarioExecutionError(f"scenario '{cfg.kind}': {e}") from e
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        raise ScenarioExecutionError(f"scenario '{cfg.kind}': {e}") from e
    wall = time.perf_counter() - t0

    figures = []
    if cfg.plot:
        for suffix, render in out.plots:
            fig_path = cfg.out_path.with_name(
                f"{cfg.out_path.stem}_{suffix}.png"
            )
            try:
                figures.append(render(fig_path))
            except OSError as e:
                raise ScenarioExecutionError(f"writing {fig_path}: {e}") from e

    record = ResultRecord(
        scenario=cfg.kind,
        version=__version__,
        config=echo,
        points=out.points,
        extras=out.extras,
        event_log=out.event_log,
        trajectories=out.trajectories,
        root_seed=out.root_seed,
        wall_time=wall,
        figures=tuple(figures),
    )
    emit_results(record, cfg.out_format, cfg.out_path)
    return record


# ---------------------------------------------------------------------------
# command line


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zenosim",
        description="Repeated-question confinement simulator and ion estimates.",
    )
    p.add_argument("--version", action="version", version=f"zenosim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common_output(sp, default_format="json"):
        sp.add_argument("--out", default=None, help="output file path")
        sp.add_argument(
            "--format", choices=["csv", "json"], default=default_format
        )
        sp.add_argument(
            "--plot", action="store_true", help="render figures next to the output"
        )

    runp = sub.add_parser("run", help="execute a scenario from a JSON config file")
    runp.add_argument("--config", required=True, help="path to the scenario JSON")
    runp.add_argument("--seed", type=int, default=None, help="override root_seed")
    runp.add_argument("--out", default=None, help="override output path")
    runp.add_argument("--format", choices=["csv", "json"], default=None)
    runp.add_argument("--plot", action="store_true", default=None)

    zp = sub.add_parser("zeno", help="single repeated-question run")
    zp.add_argument("--dim", type=int, default=2)
    zp.add_argument("--omega", type=float, default=1.0, help="rabi coupling")
    zp.add_argument(
        "--preset", choices=["rabi", "random-hermitian"], default="rabi"
    )
    zp.add_argument("--h-seed", type=int, default=0, help="random-hermitian seed")
    zp.add_argument(
        "--projector", type=_int_list, default=[0], help="basis indices, e.g. 0,1"
    )
    zp.add_argument("--rate", type=float, default=None, help="dephasing rate")
    zp.add_argument("--total-time", type=float, default=math.pi)
    zp.add_argument("--event-count", type=int, default=100)
    zp.add_argument("--effort", type=float, default=None, help="effort in [0,1]")
    zp.add_argument("--rate-min", type=float, default=None, help="events per unit time")
    zp.add_argument("--rate-max", type=float, default=None)
    zp.add_argument("--mode", choices=["expected", "sampled"], default="expected")
    zp.add_argument("--trajectories", type=int, default=10000)
    zp.add_argument("--root-seed", type=int, default=None)
    zp.add_argument("--record-events", action="store_true")
    common_output(zp)

    swp = sub.add_parser("sweep", help="leakage scaling over several event counts")
    swp.add_argument("--dim", type=int, default=2)
    swp.add_argument("--omega", type=float, default=1.0)
    swp.add_argument(
        "--preset", choices=["rabi", "random-hermitian"], default="rabi"
    )
    swp.add_argument("--h-seed", type=int, default=0)
    swp.add_argument("--projector", type=_int_list, default=[0])
    swp.add_argument("--rate", type=float, default=None)
    swp.add_argument("--total-time", type=float, default=math.pi)
    swp.add_argument("--counts", type=_int_list, default=[100, 200, 400, 800])
    common_output(swp)

    cp = sub.add_parser("calcium", help="ion kinematics estimate")
    cp.add_argument("--mass-amu", type=float, default=40.078)
    cp.add_argument("--temperature", type=float, default=310.0)
    cp.add_argument("--confinement-width", type=float, default=1e-9, help="meters")
    cp.add_argument("--transit-distance", type=float, default=50e-9, help="meters")
    cp.add_argument("--ion-diameter", type=float, default=0.2e-9, help="meters")
    common_output(cp)

    bp = sub.add_parser("branch", help="terminal-release branch mixture")
    bp.add_argument("--terminals", type=int, default=2)
    bp.add_argument("--probability", type=float, default=0.5)
    common_output(bp)

    return p


def _hamiltonian_params(ns) -> dict:
    if ns.preset == "rabi":
        return {"preset": "rabi", "omega": ns.omega}
    return {"preset": "random-hermitian", "dim": ns.dim, "seed": ns.h_seed}


def _config_from_args(ns) -> ScenarioConfig:
    if ns.command == "run":
        cfg_path = Path(ns.config)
        try:
            raw = json.loads(cfg_path.read_text())
        except OSError as e:
            raise ConfigurationError(f"reading {cfg_path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"parsing {cfg_path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigurationError("config root must be a JSON object")
        kind = raw.get("scenario")
        if kind is None:
            raise ConfigurationError("field 'scenario': required")
        params = {k: v for k, v in raw.items() if k not in ("scenario", "out", "format", "plot")}
        if ns.seed is not None:
            params["root_seed"] = ns.seed
        fmt = ns.format or raw.get("format", "json")
        if fmt not in ("csv", "json"):
            raise ConfigurationError(f"field 'format': 'csv' or 'json', got {fmt!r}")
        out = ns.out or raw.get("out") or f"{kind}.{fmt}"
        plot = bool(raw.get("plot", False)) if ns.plot is None else ns.plot
        return ScenarioConfig(
            kind=str(kind),
            params=params,
            out_path=Path(out),
            out_format=str(fmt),
            plot=plot,
        )

    if ns.command == "zeno":
        params = {
            "dim": ns.dim,
            "hamiltonian": _hamiltonian_params(ns),
            "projector": {"indices": ns.projector},
            "total_time": ns.total_time,
            "mode": ns.mode,
        }
        if ns.rate is not None:
            params["dephasing"] = {"rate": ns.rate}
        if ns.effort is not None:
            if ns.rate_min is None or ns.rate_max is None:
                raise ConfigurationError(
                    "field 'effort': --effort needs --rate-min and --rate-max"
                )
            params["effort"] = {
                "value": ns.effort,
                "rate_min": ns.rate_min,
                "rate_max": ns.rate_max,
            }
        else:
            params["event_count"] = ns.event_count
        if ns.mode == "sampled":
            params["trajectories"] = ns.trajectories
            params["root_seed"] = ns.root_seed
            params["record_events"] = ns.record_events
        kind = "zeno"
    elif ns.command == "sweep":
        params = {
            "dim": ns.dim,
            "hamiltonian": _hamiltonian_params(ns),
            "projector": {"indices": ns.projector},
            "total_time": ns.total_time,
            "counts": ns.counts,
        }
        if ns.rate is not None:
            params["dephasing"] = {"rate": ns.rate}
        kind = "zeno-sweep"
    elif ns.command == "calcium":
        params = {
            "mass_amu": ns.mass_amu,
            "temperature": ns.temperature,
            "confinement_width": ns.confinement_width,
            "transit_distance": ns.transit_distance,
            "ion_diameter": ns.ion_diameter,
        }
        kind = "calcium"
    elif ns.command == "branch":
        params = {"terminals": ns.terminals, "probability": ns.probability}
        kind = "branch"
    else:
        raise ConfigurationError(f"unknown command {ns.command!r}")

    out = ns.out or f"{kind}.{ns.format}"
    return ScenarioConfig(
        kind=kind,
        params=params,
        out_path=Path(out),
        out_format=ns.format,
        plot=bool(ns.plot),
    )


def _summary_lines(r: ResultRecord) -> list[str]:
    lines = []
    if r.scenario in ("zeno", "zeno-sweep"):
        if r.scenario == "zeno":
            s = r.extras["survival"]
            msg = f"survival {s:.6f}"
            if "stderr" in r.extras:
                msg += f" +/- {r.extras['stderr']:.6f} ({r.trajectories} trajectories)"
            lines.append(f"zeno: {msg}")
        else:
            lines.append(
                f"zeno-sweep: leakage slope {r.extras['slope']:.4f} "
                f"over counts {[n['N'] for n in r.points]}"
            )
    elif r.scenario == "calcium":
        x = r.extras
        lines.append(
            f"calcium: velocity ratio {x['velocity_ratio']:.1f}, "
            f"spread {x['spread_at_trigger'] * 1e9:.3f} nm "
            f"({x['spread_to_ion_size']:.2f} ion diameters)"
        )
    elif r.scenario == "branch":
        lines.append(
            f"branch: {r.extras['branches']} branches, trace {r.extras['trace']:.6f}"
        )
    else:
        lines.append(
            f"custom-pipeline: {len(r.points)} steps, "
            f"final weight fraction {r.points[-1]['survival']:.6f}"
        )
    return lines


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _config_from_args(ns)
    except ZenosimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    try:
        record = run_scenario(cfg)
    except ScenarioExecutionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ZenosimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    for line in _summary_lines(record):
        print(line)
    print(f"wrote {cfg.out_path} [{record.wall_time:.3f} s]")
    for fig in record.figures:
        print(f"figure {fig}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
