"""Nahm equations on T³×ℝ⁺ and the pole profile ``T_a = t_a / y``.

With ``φ = Σ T_a(y) dx_a`` on flat T³ the reduced system
``∇_yφ + ⋆φ∧φ = 0`` reads ``dT_a/dy = −½ ε_abc [T_b, T_c]``; with
``[t_a, t_b] = ε_abc t_c`` the profile ``t_a / y`` is an exact solution.
"""
from dataclasses import dataclass, field

import numpy as np

from . import lie


@dataclass(frozen=True, eq=False)
class NahmState:
    y: float
    T: np.ndarray  # (3, n, n)

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError(f"need y > 0, got {self.y}")
        T = np.asarray(self.T, dtype=complex)
        if T.ndim != 3 or T.shape[0] != 3 or T.shape[1] != T.shape[2]:
            raise ValueError(f"expected three n×n matrices, got shape {T.shape}")
        object.__setattr__(self, "T", T)

    @classmethod
    def pole(cls, t, y, scale=1.0):
        """``scale · t_a / y``."""
        return cls(y, scale * _arr(t) / y)

    @property
    def n(self):
        return self.T.shape[-1]


@dataclass
class NahmTrajectory:
    y: np.ndarray
    T: np.ndarray          # (steps+1, 3, n, n)
    method: str = "rk4"
    step: float = None
    casimir: np.ndarray = None
    truncated: bool = False
    message: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.y)

    def states(self):
        return [NahmState(y, T) for y, T in zip(self.y, self.T)]


def _arr(t):
    if isinstance(t, lie.PrincipalTriple):
        return t.array()
    return np.stack([lie._raw(x) for x in t])


def _drift(T):
    # −½ ε_abc [T_b, T_c] = −[T_{a+1}, T_{a+2}]
    out = np.empty_like(T)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        out[a] = -(T[b] @ T[c] - T[c] @ T[b])
    return out


def nahm_rhs(state):
    """``dT_a/dy = −½ ε_abc [T_b, T_c]`` for a :class:`NahmState` or array."""
    T = state.T if isinstance(state, NahmState) else np.asarray(state)
    return _drift(T)


def _u_drift(y, u, t):
    # u_a = y T_a − t_a
    out = np.empty_like(u)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        br = (u[b] @ u[c] - u[c] @ u[b]) + (u[b] @ t[c] - t[c] @ u[b]) + (t[b] @ u[c] - u[c] @ t[b])
        out[a] = (u[a] - br) / y
    return out


def casimir_of(T):
    """``Σ_a inner(T_a, T_a)`` along a trajectory array ``(..., 3, n, n)``."""
    return np.sum(lie.inner(T, T), axis=-1)


def integrate(s0, y_end, step, t=None, variable="T"):
    """Classical fixed-step RK4 from ``s0.y`` to ``y_end``.

    ``variable="u"`` integrates ``u_a = y T_a − t_a`` instead (needs the
    triple ``t``), which removes the 1/y blow-up from the state. The last
    step is shortened to land on ``y_end``. A non-finite state stops the run
    and the trajectory is truncated and flagged.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if not y_end > s0.y:
        raise ValueError("y_end must exceed the initial y")
    nsteps = int(np.ceil((y_end - s0.y) / step * (1 - 1e-12)))
    ys = s0.y + step * np.arange(nsteps + 1)
    ys[-1] = y_end
    if variable == "T":
        f = lambda y, x: _drift(x)
        x = s0.T.copy()
        to_T = lambda y, x: x
    elif variable == "u":
        if t is None:
            raise ValueError("the substituted variable needs the triple t")
        tt = _arr(t)
        f = lambda y, x: _u_drift(y, x, tt)
        x = s0.y * s0.T - tt
        to_T = lambda y, x: (x + tt) / y
    else:
        raise ValueError(f"unknown variable {variable!r}")
    out = np.empty((nsteps + 1,) + s0.T.shape, dtype=complex)
    out[0] = s0.T
    truncated, msg, last = False, "", nsteps
    # overflow is detected below and reported through the truncation flag
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(nsteps):
            y, h = ys[i], ys[i + 1] - ys[i]
            k1 = f(y, x)
            k2 = f(y + h / 2, x + h / 2 * k1)
            k3 = f(y + h / 2, x + h / 2 * k2)
            k4 = f(y + h, x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                truncated, msg, last = True, f"non-finite state at y={ys[i + 1]:.6g}", i
                break
            out[i + 1] = to_T(ys[i + 1], x)
    ys, out = ys[: last + 1], out[: last + 1]
    return NahmTrajectory(ys, out, "rk4" if variable == "T" else "rk4-u", step,
                          casimir_of(out), truncated, msg, {"variable": variable})


def deviation_profile(traj, t):
    """``y · Σ_a ‖T_a(y) − t_a/y‖_F`` along the trajectory."""
    tt = _arr(t)
    diff = traj.T - tt[None] / traj.y[:, None, None, None]
    return traj.y * np.sum(lie.frob(diff), axis=-1)


def pole_deviation(traj, t):
    """Sup over the trajectory of ``y · Σ_a ‖T_a(y) − t_a/y‖``."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return float(np.max(deviation_profile(traj, t)))


def terminal_error(traj, t):
    """``Σ_a ‖T_a(y_end) − t_a/y_end‖`` at the last trajectory point."""
    tt = _arr(t)
    return float(np.sum(lie.frob(traj.T[-1] - tt / traj.y[-1])))
