"""Integrating-factor (Lawson) Runge-Kutta 4 stepping on tuples of arrays.

The solvers split their dynamics as y' = A y + N(y, t) where the flow of A
is known in closed form (diffusion factors per mode, or the oscillation
rotation).  One step of the classical Lawson scheme reads

    Y2 = E2 (y + h/2 N1)            N1 = N(y, t)
    Y3 = E2 y + h/2 N2              N2 = N(Y2, t + h/2)
    Y4 = E1 y + h E2 N3             N3 = N(Y3, t + h/2)
    y+ = E1 y + h/6 (E1 N1 + 2 E2 N2 + 2 E2 N3 + N4)

with E2 = exp(A h/2), E1 = exp(A h) and N4 = N(Y4, t + h).  The scheme is
fourth order for any split and reduces to classical RK4 when A = 0.
"""

from __future__ import annotations


def _axpy(y, a, g):
    return tuple(yi + a * gi for yi, gi in zip(y, g))


def lawson_rk4_step(y, t, dt, rhs, propagate):
    """Advance y from t to t + dt.

    y: tuple of complex coefficient arrays.
    rhs(y, t): explicit tendency, same layout as y.
    propagate(y, delta): exact flow of the linear part over delta, a linear
        map applied slotwise (must distribute over addition).
    """
    half = 0.5 * dt
    n1 = rhs(y, t)
    y2 = propagate(_axpy(y, half, n1), half)
    n2 = rhs(y2, t + half)
    y3 = _axpy(propagate(y, half), half, n2)
    n3 = rhs(y3, t + half)
    y4 = _axpy(propagate(y, dt), dt, propagate(n3, half))
    n4 = rhs(y4, t + dt)

    e1_n1 = propagate(n1, dt)
    e2_n2 = propagate(n2, half)
    e2_n3 = propagate(n3, half)
    out = propagate(y, dt)
    sixth = dt / 6.0
    return tuple(
        oi + sixth * (a + 2.0 * b + 2.0 * c + d)
        for oi, a, b, c, d in zip(out, e1_n1, e2_n2, e2_n3, n4))


def substep_count(span: float, dt_target: float) -> int:
    """Number of equal substeps covering span with dt <= dt_target."""
    if span <= 0:
        return 0
    count = max(1, int(-(-span // dt_target)))  # ceil
    while span / count > dt_target * (1.0 + 1e-12):
        count += 1
    return count
