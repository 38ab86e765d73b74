"""Quasi-Newton maximization: BFGS inverse-Hessian updates, Armijo backtracking.

The objective callback returns ``(value, gradient)`` and signals an
infeasible point with ``value = -inf``; the line search then simply keeps
halving the step, which is also how nonpositive-mean trial points are
rejected under the identity link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["OptimResult", "maximize_bfgs"]


@dataclass(frozen=True)
class OptimResult:
    x: np.ndarray
    fval: float
    grad: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool


def maximize_bfgs(
    fun_and_grad,
    x0,
    *,
    max_iter: int = 500,
    grad_tol: float = 1e-6,
    rel_tol: float = 1e-9,
    armijo: float = 1e-4,
    max_halvings: int = 60,
    stall_limit: int = 10,
    trace: list | None = None,
) -> OptimResult:
    """Maximize a smooth objective from ``x0``.

    Stops when the gradient sup-norm reaches ``grad_tol``, when the
    relative objective improvement stays below ``rel_tol`` for
    ``stall_limit`` consecutive accepted steps, or after ``max_iter``
    accepted steps.  ``converged`` reports whether the gradient
    tolerance holds at the final point, whatever triggered the stop.

    When ``trace`` is a list, the objective value of every accepted step
    is appended to it (ascent diagnostics).
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fun_and_grad(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")

    n = x.size
    H = np.eye(n)
    is_identity = True
    iterations = 0
    stall = 0

    while iterations < max_iter:
        if float(np.max(np.abs(g))) <= grad_tol:
            break

        p = H @ g
        slope = float(g @ p)
        if not np.isfinite(slope) or slope <= 0.0:
            # Curvature approximation went bad; fall back to steepest ascent.
            H = np.eye(n)
            is_identity = True
            p = g.copy()
            slope = float(g @ g)

        step = 1.0
        accepted = False
        for _ in range(max_halvings):
            x_new = x + step * p
            f_new, g_new = fun_and_grad(x_new)
            if np.isfinite(f_new) and f_new >= f + armijo * step * slope:
                accepted = True
                break
            step *= 0.5

        if not accepted:
            if is_identity:
                break  # no ascent even along the gradient: stalled
            H = np.eye(n)
            is_identity = True
            continue

        s = step * p
        y_vec = g - g_new  # gradient change of the negated objective
        sy = float(s @ y_vec)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y_vec)):
            rho = 1.0 / sy
            Hy = H @ y_vec
            yHy = float(y_vec @ Hy)
            H = (
                H
                - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                + rho * rho * yHy * np.outer(s, s)
                + rho * np.outer(s, s)
            )
            is_identity = False

        improvement = f_new - f
        x, f, g = x_new, f_new, g_new
        iterations += 1
        if trace is not None:
            trace.append(float(f))
        if improvement <= rel_tol * (1.0 + abs(f)):
            stall += 1
            if stall >= stall_limit:
                break
        else:
            stall = 0

    grad_norm = float(np.max(np.abs(g)))
    return OptimResult(
        x=x,
        fval=float(f),
        grad=g,
        grad_norm=grad_norm,
        iterations=iterations,
        converged=bool(grad_norm <= grad_tol),
    )
