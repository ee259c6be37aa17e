"""Estimator-style front end: ``fit`` on samples of ``w``, ``predict`` values of the inverse."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_delta, check_grid, check_points, check_tol, check_values, resolve_field
from .constants import compute_constants
from .errors import ValidationError
from .grid import GridFunction
from .inverse import DEFAULT_TOL, inverse_values, solve
from .shift import ShiftMap


class DifferenceInverse(TransformerMixin, BaseEstimator):
    """Solve ``v(t + alpha*phi(t)) - v(t) = w(t)`` for ``v`` on the invariant interval.

    ``fit(X, y)`` takes a grid ``X`` covering ``[t_minus, t_plus]`` and either
    samples ``y`` of ``w`` or a callable ``w``.  The solution vanishes at the
    repelling fixed point.  ``predict(X)`` evaluates it anywhere in the
    interval; ``transform`` returns the same values as a column.

    Parameters
    ----------
    field : str, mapping or PerturbationField
        ``"sin"`` or e.g. ``{"name": "bump", "q": [1.0, 0.2]}``.
    alpha : float
        Non-zero amplitude with ``|alpha| < 1/||phi||_Lip``.
    delta : float
        Envelope margin in ``(0, 1/2)`` used by the constants.
    tol : float
        Target accuracy for the series and the range test.
    method : {"auto", "forward", "backward"}
    """

    def __init__(self, field="sin", alpha=0.1, delta=0.1, tol=DEFAULT_TOL, method="auto"):
        self.field = field
        self.alpha = alpha
        self.delta = delta
        self.tol = tol
        self.method = method

    def _check_params(self):
        if self.method not in ("auto", "forward", "backward"):
            raise ValidationError(f"method must be auto, forward or backward, got {self.method!r}")
        return check_delta(self.delta), check_tol(self.tol)

    def fit(self, X, y):
        delta, tol = self._check_params()
        grid = check_grid(X, min_points=3)
        fld = resolve_field(self.field)
        smap = ShiftMap.build(fld, self.alpha)
        report = compute_constants(smap, delta)

        if callable(y):
            w_user = GridFunction.from_callable(y, grid)
        else:
            w_user = GridFunction(grid, check_values(y, grid.size))
        # working coordinates may be reflected; the grid is reversed with them
        work_grid = np.sort(np.asarray(smap.to_working(grid), dtype=float))
        w_work = GridFunction(work_grid, w_user(smap.from_working(work_grid)),
                              lambda s: w_user(smap.from_working(s)))
        sol = solve(smap, w_work, report, tol, method=self.method)

        self.shift_map_ = smap
        self.constants_ = report
        self.solution_ = sol
        self.verdict_ = sol.verdict
        self.constant_ = sol.constant
        self.residual_sup_ = sol.residual_sup
        self.lip_ratio_ = sol.lip_ratio
        self.w_ = w_work
        values = sol.v.values if smap.orientation == 1 else sol.v.values[::-1]
        self.v_ = GridFunction(grid, values)
        self.n_features_in_ = 1
        return self

    def _fitted(self):
        if not hasattr(self, "solution_"):
            raise NotFittedError("DifferenceInverse is not fitted; call fit first")

    def predict(self, X):
        self._fitted()
        t = check_points(X)
        smap = self.shift_map_
        tol = smap.domain_tol
        if np.any(t < smap.t_minus - tol) or np.any(t > smap.t_plus + tol):
            raise ValidationError("prediction points must lie in the invariant interval")
        s = np.asarray(smap.to_working(t), dtype=float)
        return inverse_values(smap, self.w_, s, self.constant_, self.tol, self.constants_,
                              None, self.method)

    def transform(self, X):
        return self.predict(X).reshape(-1, 1)

    def residual(self, X):
        """``v(Phi t) - v(t) - w(t)`` at user points ``X``."""
        self._fitted()
        t = check_points(X)
        smap = self.shift_map_
        s = np.asarray(smap.to_working(t), dtype=float)
        v = inverse_values(smap, self.w_, s, self.constant_, self.tol, self.constants_, None, self.method)
        v_shift = inverse_values(smap, self.w_, smap(s), self.constant_, self.tol, self.constants_,
                                 None, self.method)
        return v_shift - v - self.w_(s)
