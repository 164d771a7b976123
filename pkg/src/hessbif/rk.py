"""Embedded adaptive Runge-Kutta stepping for small ODE systems.

Cash-Karp 5(4) pair: six stages, 5th order propagation, 4th order error
estimate.  States are plain lists of floats; the radial shooting systems here
have 2 or 4 components, where python-float arithmetic beats array overhead by
an order of magnitude.  Two modes:

  * free stepping to the right endpoint (terminal value only) - the hot path
    inside bisection loops;
  * step clamping onto a fixed output grid, recording the state at every grid
    point - used when a full profile is requested.

Step control is the standard 0.9 * err^(-1/5) rule with growth clamped to
[0.2, 5.0] per step.
"""

from __future__ import annotations

import math

from .errors import NumericalFailureError

# Cash-Karp tableau
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0),
    (-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0),
    (1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0,
     44275.0 / 110592.0, 253.0 / 4096.0),
)
_B5 = (37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0)
_B4 = (2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0,
       277.0 / 14336.0, 1.0 / 4.0)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_ORDER_EXP = -0.2  # 1 / (embedded order + 1)


class RKResult:
    """Terminal state plus, when an output grid was given, the recorded states."""

    __slots__ = ("t", "y", "grid_states", "n_steps", "n_rejected")

    def __init__(self, t, y, grid_states, n_steps, n_rejected):
        self.t = t
        self.y = y
        self.grid_states = grid_states
        self.n_steps = n_steps
        self.n_rejected = n_rejected


def integrate(rhs, t0, y0, t1, rtol, atol, output_ts=None, max_steps=500_000):
    """Integrate y' = rhs(t, y) from t0 to t1 (t1 > t0).

    atol is a per-component sequence (same length as y0).  output_ts, when
    given, must be ascending values in [t0, t1]; the stepper lands on each
    exactly and records the state there.  Raises NumericalFailureError on
    NaN/inf states, step-size underflow, or step-count exhaustion.
    """
    n = len(y0)
    y = [float(v) for v in y0]
    t = float(t0)
    span = float(t1) - t
    if span <= 0.0:
        raise NumericalFailureError(f"empty integration span [{t0}, {t1}]")
    atol = [float(a) for a in atol]
    if len(atol) != n:
        raise NumericalFailureError("atol length mismatch")

    outputs = None
    out_idx = 0
    grid_states = None
    if output_ts is not None:
        outputs = [float(v) for v in output_ts]
        grid_states = []
        while out_idx < len(outputs) and outputs[out_idx] <= t:
            grid_states.append(list(y))
            out_idx += 1

    h_ctrl = span / 64.0
    h_min = 1e-14 * span
    n_steps = 0
    n_rejected = 0
    k = [None] * 6

    while t < t1:
        if n_steps + n_rejected >= max_steps:
            raise NumericalFailureError(f"step budget exhausted after {max_steps} steps")
        # clamp the attempted step onto the next output point / right endpoint
        h = h_ctrl
        hit_output = False
        if outputs is not None and out_idx < len(outputs) and t + h >= outputs[out_idx]:
            h = outputs[out_idx] - t
            hit_output = True
        elif t + h > t1:
            h = t1 - t
        clamped = h < h_ctrl
        if hit_output and h <= 0.0:
            # grid point coincides with the current time up to roundoff
            grid_states.append(list(y))
            out_idx += 1
            continue
        if h < h_min:
            raise NumericalFailureError(f"step size underflow at t={t!r}")

        k[0] = rhs(t, y)
        ok = True
        for i in range(1, 6):
            ai = _A[i]
            yi = list(y)
            for j, aij in enumerate(ai):
                kj = k[j]
                haij = h * aij
                for c in range(n):
                    yi[c] += haij * kj[c]
            k[i] = rhs(t + _C[i] * h, yi)

        y5 = list(y)
        err_acc = 0.0
        for c in range(n):
            inc5 = 0.0
            inc4 = 0.0
            for j in range(6):
                kjc = k[j][c]
                inc5 += _B5[j] * kjc
                inc4 += _B4[j] * kjc
            y5c = y[c] + h * inc5
            y5[c] = y5c
            diff = h * (inc5 - inc4)
            scale = atol[c] + rtol * max(abs(y[c]), abs(y5c))
            err_acc += (diff / scale) ** 2
            if not math.isfinite(y5c):
                ok = False
        err = math.sqrt(err_acc / n)

        if not ok or not math.isfinite(err):
            n_rejected += 1
            h_ctrl = h * _MIN_FACTOR
            if h_ctrl < h_min:
                raise NumericalFailureError(f"non-finite state at t={t!r}")
            continue

        if err <= 1.0:
            t = t + h
            y = y5
            n_steps += 1
            if hit_output:
                grid_states.append(list(y))
                out_idx += 1
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err**_ORDER_EXP))
            if clamped:
                # a grid-shortened step must not erase the controller's memory
                h_ctrl = max(h_ctrl, h * factor)
            else:
                h_ctrl = h * factor
        else:
            n_rejected += 1
            h_ctrl = h * max(_MIN_FACTOR, _SAFETY * err**_ORDER_EXP)

    if outputs is not None:
        while out_idx < len(outputs):
            # trailing outputs at (or beyond, by roundoff) the right endpoint
            grid_states.append(list(y))
            out_idx += 1

    return RKResult(t, y, grid_states, n_steps, n_rejected)
