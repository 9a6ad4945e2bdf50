"""Repeated-question protocols and the suppression they produce.

A protocol poses the same question (projector) at N uniformly spaced
instants over a total time T, with unitary drift and optional dephasing
filling each interval. Rapid repetition confines the state to the
subspace it starts in: per-step leakage is quadratic in the interval, so
total leakage at fixed T falls off like 1/N. The module provides the
deterministic (expected-value) run, the trajectory-sampled run, the
leakage scaling sweep, the literal single-step expression used as a
structural cross-check, and the effort knob that maps attention-like
effort onto an event rate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .channels import (
    DephasingChannel,
    HamiltonianSpec,
    _dephase_raw,
    coherence_multiplier,
    propagator,
)
from .collapse import (
    DEGENERATE_BRANCH_TRACE,
    _probability_yes_raw,
    _process1_raw,
)
from .errors import (
    ConfigurationError,
    DegenerateBranchError,
    DegenerateFitError,
    DimensionMismatchError,
    InvalidStateError,
    PreconditionError,
    ValidationError,
)
from .opalg import Projector, WeightOperator

# Survival difference bound asserted by the mixture-robustness comparison
# when the pointer basis is block-compatible with the question.
MIXTURE_ROBUSTNESS_ATOL = 1e-9

# Relative trace drift allowed over a whole expected-mode run.
RUN_TRACE_ATOL = 1e-10

# How far the initial state may stick out of the question's subspace.
SUBSPACE_ATOL = 1e-10


class RunMode(Enum):
    EXPECTED = "expected"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class ZenoProtocol:
    """One repeated-question experiment.

    Events happen at times k*d for k = 1..event_count with d =
    total_time / event_count; each interval applies the unitary step,
    then the optional dephasing, then the question.
    """

    total_time: float
    event_count: int
    hamiltonian: HamiltonianSpec
    projector: Projector
    dephasing: DephasingChannel | None = None
    mode: RunMode = RunMode.EXPECTED
    trajectories: int = 1
    root_seed: int | None = None

    def __post_init__(self):
        if not self.total_time > 0.0:
            raise ValidationError(f"total_time must be > 0, got {self.total_time}")
        if int(self.event_count) < 1:
            raise ValidationError(f"event_count must be >= 1, got {self.event_count}")
        object.__setattr__(self, "event_count", int(self.event_count))
        if self.hamiltonian.dim != self.projector.dim:
            raise DimensionMismatchError(
                f"hamiltonian dim {self.hamiltonian.dim} != "
                f"projector dim {self.projector.dim}"
            )
        if self.dephasing is not None and self.dephasing.dim != self.projector.dim:
            raise DimensionMismatchError(
                f"dephasing dim {self.dephasing.dim} != "
                f"projector dim {self.projector.dim}"
            )
        if self.mode is RunMode.SAMPLED:
            if int(self.trajectories) < 1:
                raise ValidationError(
                    f"sampled mode needs trajectories >= 1, got {self.trajectories}"
                )
            if self.root_seed is None:
                raise ValidationError("sampled mode needs a root_seed")
        object.__setattr__(self, "trajectories", int(self.trajectories))

    @property
    def dim(self) -> int:
        return self.projector.dim

    @property
    def interval(self) -> float:
        return self.total_time / self.event_count

    def metadata(self) -> dict:
        return {
            "total_time": self.total_time,
            "event_count": self.event_count,
            "interval": self.interval,
            "dim": self.dim,
            "projector": self.projector.label,
            "dephasing_rate": None if self.dephasing is None else self.dephasing.rate,
            "mode": self.mode.value,
            "trajectories": self.trajectories if self.mode is RunMode.SAMPLED else None,
            "root_seed": self.root_seed if self.mode is RunMode.SAMPLED else None,
        }


@dataclass(frozen=True)
class SurvivalCurve:
    """Survival probability as a function of event count."""

    points: tuple[tuple[int, float], ...]
    metadata: dict

    def __post_init__(self):
        pts = tuple((int(n), float(w)) for n, w in self.points)
        for n, w in pts:
            if w < -1e-10 or w > 1.0 + 1e-10:
                raise ValidationError(f"survival {w!r} at N={n} outside [0, 1]")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class EffortSetting:
    """Attention-like effort in [0, 1] mapped linearly onto an event rate
    between rate_min and rate_max (events per unit time)."""

    effort: float
    rate_min: float
    rate_max: float

    def __post_init__(self):
        if not 0.0 <= self.effort <= 1.0:
            raise ValidationError(f"effort must be in [0, 1], got {self.effort}")
        if not 0.0 < self.rate_min <= self.rate_max:
            raise ValidationError(
                f"need 0 < rate_min <= rate_max, got {self.rate_min}, {self.rate_max}"
            )

    @property
    def rate(self) -> float:
        return self.rate_min + self.effort * (self.rate_max - self.rate_min)


def effort_to_interval(e: EffortSetting, total_time: float) -> int:
    """Event count implied by an effort level: ``max(1, round(T * rate))``.

    Rounding is half-up so the map is monotone non-decreasing in effort.
    """
    if not total_time > 0.0:
        raise ValidationError(f"total_time must be > 0, got {total_time}")
    return max(1, int(np.floor(total_time * e.rate + 0.5)))


@dataclass(frozen=True)
class ExpectedRunResult:
    """Deterministic run output: final survival, per-event history, state."""

    survival: float
    final_state: WeightOperator
    history: tuple[float, ...]
    protocol: ZenoProtocol

    @property
    def point(self) -> tuple[int, float]:
        return (self.protocol.event_count, self.survival)

    def curve(self) -> SurvivalCurve:
        """Per-event survival history as a curve over cumulative events."""
        pts = tuple((k + 1, w) for k, w in enumerate(self.history))
        return SurvivalCurve(points=pts, metadata=self.protocol.metadata())


def _require_initial_in_subspace(initial: WeightOperator, p: Projector) -> None:
    inside = _probability_yes_raw(initial.matrix, p.matrix)
    if 1.0 - inside > SUBSPACE_ATOL:
        raise PreconditionError(
            f"initial state has weight {1.0 - inside:.3e} outside the question "
            f"subspace (allowed {SUBSPACE_ATOL:.0e})"
        )


def run_expected(p: ZenoProtocol, initial: WeightOperator) -> ExpectedRunResult:
    """Iterate [unitary step; optional dephasing; question] N times.

    The question is applied answer-agnostically (both branches kept), so
    the run is deterministic and exactly trace-preserving; survival is the
    final weight inside the question's subspace, Tr(P S_T) / Tr(S_T).
    """
    if initial.dim != p.dim:
        raise DimensionMismatchError(f"initial dim {initial.dim} != protocol dim {p.dim}")
    _require_initial_in_subspace(initial, p.projector)

    d = p.interval
    u = propagator(p.hamiltonian, d)
    proj = p.projector.matrix
    m = initial.matrix
    trace_in = float(np.trace(m).real)

    history = []
    for _ in range(p.event_count):
        m = u @ m @ u.conj().T
        if p.dephasing is not None:
            m = _dephase_raw(m, p.dephasing, d)
        m = _process1_raw(m, proj)
        history.append(_probability_yes_raw(m, proj))

    trace_out = float(np.trace(m).real)
    if abs(trace_out - trace_in) > RUN_TRACE_ATOL * trace_in:
        raise InvalidStateError(
            f"trace drifted from {trace_in!r} to {trace_out!r} over the run"
        )
    return ExpectedRunResult(
        survival=history[-1],
        final_state=WeightOperator(m),
        history=tuple(history),
        protocol=p,
    )


@dataclass(frozen=True)
class TrajectoryRecords:
    """Full per-trajectory event logs (one row per trajectory)."""

    event_times: np.ndarray         # (N,)
    answers: np.ndarray             # (trajectories, N) bool, True = Yes
    probabilities: np.ndarray       # (trajectories, N) probability_yes at each event


@dataclass(frozen=True)
class SampledRunResult:
    """Monte Carlo run output.

    ``survival`` is the fraction of trajectories that answered Yes at
    every event and sit inside the question subspace at the final time;
    ``yes_fractions`` gives the per-event Yes frequency across all
    trajectories (whatever their past answers).
    """

    survival: float
    stderr: float
    all_yes_count: int
    trajectories: int
    root_seed: int
    yes_fractions: np.ndarray
    protocol: ZenoProtocol
    records: TrajectoryRecords | None = None

    @property
    def point(self) -> tuple[int, float]:
        return (self.protocol.event_count, self.survival)


def trajectory_rng(root_seed: int, index: int) -> np.random.Generator:
    """Per-trajectory generator: split from the root seed by index.

    The splitting rule is ``default_rng([root_seed, index])``, so any
    trajectory's stream is reproducible in isolation.
    """
    return np.random.default_rng([root_seed, index])


def run_sampled(
    p: ZenoProtocol, initial: WeightOperator, record_events: bool = False
) -> SampledRunResult:
    """Sample nature's answers trajectory by trajectory.

    Each trajectory draws its own uniform stream (see
    :func:`trajectory_rng`), reduces to the answered branch at every
    event, and renormalizes before the next one. Aggregation uses integer
    counts, so results are independent of trajectory execution order.
    """
    if p.mode is not RunMode.SAMPLED:
        raise ConfigurationError("run_sampled needs a protocol in sampled mode")
    if initial.dim != p.dim:
        raise DimensionMismatchError(f"initial dim {initial.dim} != protocol dim {p.dim}")
    _require_initial_in_subspace(initial, p.projector)

    n_traj = p.trajectories
    n_events = p.event_count
    d = p.interval
    dim = p.dim

    u = propagator(p.hamiltonian, d)
    proj = p.projector.matrix
    comp = np.eye(dim) - proj
    if p.dephasing is not None:
        basis = p.dephasing.pointer_basis
        damp = np.full((dim, dim), coherence_multiplier(p.dephasing, d))
        np.fill_diagonal(damp, 1.0)

    # Same acceptance rule as collapse.sample_answer: Yes iff u < p_yes.
    uniforms = np.empty((n_traj, n_events))
    for i in range(n_traj):
        uniforms[i] = trajectory_rng(p.root_seed, i).random(n_events)

    states = np.broadcast_to(
        initial.matrix / initial.trace, (n_traj, dim, dim)
    ).copy()

    yes_counts = np.zeros(n_events, dtype=np.int64)
    all_yes = np.ones(n_traj, dtype=bool)
    answers = np.empty((n_traj, n_events), dtype=bool) if record_events else None
    probs = np.empty((n_traj, n_events)) if record_events else None

    for k in range(n_events):
        states = np.einsum("ij,njk,lk->nil", u, states, u.conj(), optimize=True)
        if p.dephasing is not None:
            states = np.einsum(
                "ij,njk,lk->nil", basis.conj().T, states, basis.T, optimize=True
            )
            states = states * damp
            states = np.einsum(
                "ij,njk,lk->nil", basis, states, basis.conj(), optimize=True
            )

        traces = np.einsum("nii->n", states).real
        p_yes = np.einsum("nij,ji->n", states, proj).real / traces
        np.clip(p_yes, 0.0, 1.0, out=p_yes)

        yes = uniforms[:, k] < p_yes
        yes_counts[k] = int(yes.sum())
        all_yes &= yes
        if record_events:
            answers[:, k] = yes
            probs[:, k] = p_yes

        pick = np.where(yes[:, None, None], proj[None, :, :], comp[None, :, :])
        states = np.einsum("nij,njk,nkl->nil", pick, states, pick, optimize=True)
        branch = np.einsum("nii->n", states).real
        if np.any(branch < DEGENERATE_BRANCH_TRACE):
            worst = int(np.argmin(branch))
            raise DegenerateBranchError(
                f"trajectory {worst} sampled a branch of trace {branch[worst]:.3e} "
                f"at event {k + 1}"
            )
        states /= branch[:, None, None]

    final_in_p = np.einsum("nij,ji->n", states, proj).real
    survived = all_yes & (final_in_p > 1.0 - 1e-9)
    count = int(survived.sum())
    w = count / n_traj
    stderr = float(np.sqrt(w * (1.0 - w) / n_traj))

    records = None
    if record_events:
        times = d * np.arange(1, n_events + 1)
        records = TrajectoryRecords(
            event_times=times, answers=answers, probabilities=probs
        )
    return SampledRunResult(
        survival=w,
        stderr=stderr,
        all_yes_count=count,
        trajectories=n_traj,
        root_seed=p.root_seed,
        yes_fractions=yes_counts / n_traj,
        protocol=p,
        records=records,
    )


@dataclass(frozen=True)
class LeakageSweepResult:
    """Survival per event count plus the fitted leakage scaling exponent."""

    curve: SurvivalCurve
    leakages: tuple[float, ...]
    slope: float
    intercept: float


def leakage_sweep(
    base: ZenoProtocol, counts: Sequence[int], initial: WeightOperator
) -> LeakageSweepResult:
    """Run the protocol at several event counts and fit the leakage law.

    Fits log(1 - w) against log(N) by least squares; the expected slope
    is -1 (per-step leakage quadratic in the interval). Points with zero
    leakage carry no log information; fewer than two usable points raise
    :class:`DegenerateFitError`.
    """
    counts = [int(n) for n in counts]
    if len(counts) < 2:
        raise DegenerateFitError(f"need at least 2 event counts, got {len(counts)}")
    points = []
    leakages = []
    for n in counts:
        proto = dataclasses.replace(base, event_count=n)
        res = run_expected(proto, initial)
        points.append((n, res.survival))
        leakages.append(1.0 - res.survival)

    usable = [(n, leak) for n, leak in zip(counts, leakages) if leak > 0.0]
    if len(usable) < 2:
        raise DegenerateFitError(
            f"only {len(usable)} event counts have positive leakage; cannot fit"
        )
    log_n = np.log([n for n, _ in usable])
    log_leak = np.log([leak for _, leak in usable])
    slope, intercept = np.polyfit(log_n, log_leak, 1)

    meta = base.metadata()
    meta["event_count"] = None
    meta["interval"] = None
    meta["counts"] = counts
    curve = SurvivalCurve(points=tuple(points), metadata=meta)
    return LeakageSweepResult(
        curve=curve,
        leakages=tuple(leakages),
        slope=float(slope),
        intercept=float(intercept),
    )


def eq4_single_step(
    s: WeightOperator, h: HamiltonianSpec, p: Projector, d: float
) -> WeightOperator:
    """One interval built literally: question, drift, question.

    Computes P U [PSP + (1-P)S(1-P)] U^dag P + (1-P) U [PSP + (1-P)S(1-P)]
    U^dag (1-P) term by term, with U = exp(-iHd). Must agree with the
    composed pipeline process1(evolve(process1(s))) to 1e-12; the equality
    is this module's structural self-check.
    """
    if s.dim != p.dim or h.dim != p.dim:
        raise DimensionMismatchError(
            f"dims differ: state {s.dim}, hamiltonian {h.dim}, projector {p.dim}"
        )
    u = propagator(h, d)
    proj = p.matrix
    comp = np.eye(p.dim) - proj
    inner = proj @ s.matrix @ proj + comp @ s.matrix @ comp
    drifted = u @ inner @ u.conj().T
    out = proj @ drifted @ proj + comp @ drifted @ comp
    return WeightOperator(out)


@dataclass(frozen=True)
class RobustnessReport:
    """Survival with and without interleaved dephasing, same protocol."""

    survival_with: float
    survival_without: float
    difference: float
    within_tolerance: bool
    tolerance: float = MIXTURE_ROBUSTNESS_ATOL


def pointer_basis_block_compatible(ch: DephasingChannel, p: Projector) -> bool:
    """True when every pointer vector lies wholly in P or wholly in 1-P."""
    weights = np.einsum(
        "ij,jk,ki->i", ch.pointer_basis.conj().T, p.matrix, ch.pointer_basis
    ).real
    return bool(np.all((np.abs(weights) < 1e-10) | (np.abs(weights - 1.0) < 1e-10)))


def mixture_robustness_check(
    p: ZenoProtocol, mixture: WeightOperator
) -> RobustnessReport:
    """Compare the run with its dephasing channel against the same run
    without it.

    Requires a protocol whose pointer basis is block-compatible with the
    question (each pointer vector inside one subspace); that is the regime
    where question events and dephasing share invariant blocks and the
    suppression must not care about the environment. The report carries
    the observed difference and whether it clears the 1e-9 bound.
    """
    if p.dephasing is None:
        raise ConfigurationError(
            "protocol has no dephasing channel; nothing to compare against"
        )
    if not pointer_basis_block_compatible(p.dephasing, p.projector):
        raise PreconditionError(
            "pointer basis is not block-compatible with the question projector; "
            "run the two protocols separately to explore this regime"
        )
    with_deph = run_expected(p, mixture)
    without = run_expected(dataclasses.replace(p, dephasing=None), mixture)
    diff = abs(with_deph.survival - without.survival)
    return RobustnessReport(
        survival_with=with_deph.survival,
        survival_without=without.survival,
        difference=diff,
        within_tolerance=diff <= MIXTURE_ROBUSTNESS_ATOL,
    )
