"""Time loop: steps the model, records norm series and per-step monitors, writes outputs."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .diagnostics import DEFAULT_P_LIST, NormSeries, record
from .initial import smallness_check
from .model import ConstraintAbort, FlowState, Integrator, ModelParams, StageInfo
from .spectral import Grid

log = logging.getLogger(__name__)


def step_columns(K_max: int) -> list[str]:
    cols = ["t", "div_residual", "constraint_dev"]
    cols += [f"norm_u_k{k}" for k in range(K_max + 1)]
    cols += [f"norm_n_m{m}" for m in range(K_max + 2)]
    cols.append("cum_dissipation")
    return cols


class SmallnessWarning(UserWarning):
    pass


@dataclass
class RunResult:
    final: FlowState
    series: NormSeries
    steps: NormSeries
    snapshots: list[Path] = field(default_factory=list)
    steps_taken: int = 0


def _every(interval: float, dt: float) -> int:
    return max(1, int(round(interval / dt)))


def run(
    init: FlowState,
    params: ModelParams,
    cadence: float,
    *,
    K_max: int = 2,
    p_list: Sequence[float] = DEFAULT_P_LIST,
    delta0: float = 1e-2,
    out_dir=None,
    snapshot_cadence: float = 0.0,
    on_step: Optional[Callable[[FlowState], None]] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> RunResult:
    """Advance ``init`` to ``init.t + params.t_end``.

    ``series`` gets a full :func:`record` row every ``cadence`` time units
    (and at both ends); ``steps`` logs cheap spectral monitors at every time
    level.  ``on_step`` receives the physical state at every time level.  On a
    constraint abort the partial result is written (when ``out_dir`` is set)
    and attached to the exception as ``partial``, whose ``final`` is
    the state that failed the check.
    """
    # local import: io depends on the model types
    from .io import write_series, write_snapshot

    grid: Grid = init.grid
    series = NormSeries.empty(K_max, p_list)
    steps = NormSeries(step_columns(K_max))
    result = RunResult(init, series, steps)
    if params.t_end == 0:
        return result

    report = smallness_check(init.u, init.n, delta0)
    if not report.passed:
        warnings.warn(f"initial data exceed the smallness budget: {report.value:.3e} > {delta0:.3e}", SmallnessWarning, stacklevel=2)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    integ = Integrator(grid, params)
    hs = integ.hs
    nsteps = int(round(params.t_end / params.dt))
    rec_every = _every(cadence, params.dt)
    snap_every = _every(snapshot_cadence, params.dt) if snapshot_cadence > 0 else 0
    uh, nh = integ.to_spectral(init)
    cum = 0.0
    prev_diss = None

    def log_level(t, uh, nh, dev):
        nonlocal cum, prev_diss
        su = hs.seminorms_sq(uh, K_max)
        sn = hs.seminorms_sq(nh, K_max + 1)
        if prev_diss is not None:
            cum += 0.5 * params.dt * (prev_diss + sn[1])
        prev_diss = sn[1]
        row = {"t": t, "div_residual": hs.divergence_residual(uh), "constraint_dev": dev, "cum_dissipation": cum}
        row.update({f"norm_u_k{k}": math.sqrt(su[k]) for k in range(K_max + 1)})
        row.update({f"norm_n_m{m}": math.sqrt(sn[m]) for m in range(K_max + 2)})
        steps.append(row)

    def write_partial():
        if out is not None and len(series):
            write_series(series, out / "series.csv")
            write_series(steps, out / "steps.csv")

    def snapshot(state, index):
        if out is not None:
            result.snapshots.append(write_snapshot(state, out / f"snap_{index:06d}.nlcf"))

    need_u = on_step is not None
    try:
        for j in range(nsteps):
            t = init.t + j * params.dt
            new_uh, new_nh, info = integ.step(uh, nh, need_u)
            dev = integ.check(info, t)
            log_level(t, uh, nh, dev)
            if j % rec_every == 0 or (snap_every and j % snap_every == 0) or on_step is not None:
                state = FlowState.from_arrays(grid, t, info.u if info.u is not None else hs.inverse(uh), info.n)
                if on_step is not None:
                    on_step(state)
                if j % rec_every == 0:
                    series.append(record(state, params, K_max, p_list, cum, integ))
                if snap_every and j % snap_every == 0:
                    snapshot(state, j)
            uh, nh = new_uh, new_nh
            result.steps_taken = j + 1
            if progress is not None:
                progress(j + 1, nsteps)

        t_final = init.t + nsteps * params.dt
        final = integ.to_state(t_final, uh, nh)
        dev = integ.check(StageInfo(final.u.array, final.n.array), t_final)
        log_level(t_final, uh, nh, dev)
        if on_step is not None:
            on_step(final)
        series.append(record(final, params, K_max, p_list, cum, integ))
    except ConstraintAbort as exc:
        log.error("run aborted: %s", exc)
        write_partial()
        # the offending state, for post-mortem inspection
        bad = integ.to_state(init.t + result.steps_taken * params.dt, uh, nh)
        snapshot(bad, result.steps_taken)
        result.final = bad
        exc.partial = result
        raise

    result.final = final
    snapshot(final, nsteps)
    write_partial()
    return result
