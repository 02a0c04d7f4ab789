"""Central-finite-difference gradient verification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GradCheckReport:
    max_rel_err: float = 0.0
    worst_param: str = ""
    worst_index: tuple = ()
    n_checked: int = 0
    per_param: dict = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return self.max_rel_err <= tol


def rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def finite_diff_check(loss_fn, params: dict[str, np.ndarray],
                      analytic: dict[str, np.ndarray], h: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients against (f(x+h) - f(x-h)) / 2h per coordinate.

    ``loss_fn`` must be a pure function of ``params`` (arrays are perturbed in
    place and restored). ``analytic`` maps the same names to gradient arrays.
    """
    report = GradCheckReport()
    for name, theta in params.items():
        grad = analytic[name]
        if grad.shape != theta.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        worst = 0.0
        it = np.nditer(theta, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = theta[idx]
            theta[idx] = orig + h
            f_plus = loss_fn(params)
            theta[idx] = orig - h
            f_minus = loss_fn(params)
            theta[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = rel_err(float(grad[idx]), numeric)
            report.n_checked += 1
            if err > worst:
                worst = err
            if err > report.max_rel_err:
                report.max_rel_err = err
                report.worst_param = name
                report.worst_index = idx
            it.iternext()
        report.per_param[name] = worst
    return report
