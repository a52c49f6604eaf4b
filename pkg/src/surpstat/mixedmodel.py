"""Random-intercept linear mixed models fit by REML.

The covariance is parameterized as V = sigma2 * H(gamma) with
H = I + sum_g gamma_g Z_g Z_g' and gamma_g = sigma2_g / sigma2 the variance
ratio of grouping factor g.  beta and sigma2 are profiled out, so the
optimizer searches only over log gamma.  Type III F tests use Satterthwaite
denominator degrees of freedom from numerically differentiated contrast
variances and the observed REML information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize

from .errors import NotConverged, RankDeficient, SelectionFailed
from .inference import f_upper_tail

LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FitConfig:
    """Named numerical constants for the REML fit."""

    singular_threshold: float = 1e-6  # variance ratio below this is singular
    deviance_tol: float = 1e-10
    param_tol: float = 1e-8
    fd_step: float = 1e-4  # Satterthwaite finite-difference step, log scale
    ratio_bounds: Tuple[float, float] = (1e-10, 1e10)
    multistart: Tuple[float, ...] = (1e-3, 1.0, 1e3)
    max_iter: int = 5000


DEFAULT_CONFIG = FitConfig()


@dataclass(frozen=True)
class ModelSpec:
    """What to regress on what.

    random_intercepts is ordered by drop priority: structure selection
    removes groupings from the END of the tuple first.
    """

    response: str
    fixed: Optional[str] = None
    random_intercepts: Tuple[str, ...] = ()
    fixed_levels: Optional[Tuple[str, ...]] = None  # reference order override

    def without_last_grouping(self) -> "ModelSpec":
        return ModelSpec(
            response=self.response,
            fixed=self.fixed,
            random_intercepts=self.random_intercepts[:-1],
            fixed_levels=self.fixed_levels,
        )


def _columns(data, names: Sequence[str]) -> Dict[str, list]:
    """Accept column-mapping or row-sequence data; return named columns."""
    if isinstance(data, Mapping):
        out = {}
        for name in names:
            if name not in data:
                raise KeyError(f"data has no column {name!r}")
            out[name] = list(data[name])
        lengths = {len(v) for v in out.values()}
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: lengths {sorted(lengths)}")
        return out
    rows = list(data)
    return {name: [row[name] for row in rows] for name in names}


class _REMLDesign:
    """Dense design pieces shared by every deviance evaluation."""

    def __init__(self, data, spec: ModelSpec):
        names = [spec.response]
        if spec.fixed is not None:
            names.append(spec.fixed)
        names.extend(spec.random_intercepts)
        cols = _columns(data, names)

        y = np.asarray(cols[spec.response], dtype=float)
        if y.ndim != 1 or y.shape[0] == 0:
            raise ValueError("response must be a non-empty 1-d column")
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite values")
        n = y.shape[0]

        contrast_cols = []
        fixed_levels: Optional[Tuple[str, ...]] = None
        if spec.fixed is not None:
            values = [str(v) for v in cols[spec.fixed]]
            levels = (
                tuple(spec.fixed_levels)
                if spec.fixed_levels is not None
                else tuple(sorted(set(values)))
            )
            if set(values) - set(levels):
                raise ValueError(
                    f"levels {sorted(set(values) - set(levels))} missing from fixed_levels"
                )
            if len(levels) < 2:
                raise ValueError(f"fixed factor {spec.fixed!r} has < 2 levels")
            tally = {lv: values.count(lv) for lv in levels}
            thin = [lv for lv, c in tally.items() if c < 2]
            if thin:
                raise ValueError(f"fewer than 2 observations in condition(s) {thin}")
            # sum-to-zero coding: last level is -1 on every contrast column
            for j, lv in enumerate(levels[:-1]):
                col = np.zeros(n)
                for i, v in enumerate(values):
                    if v == lv:
                        col[i] = 1.0
                    elif v == levels[-1]:
                        col[i] = -1.0
                contrast_cols.append(col)
            fixed_levels = levels

        X = np.column_stack([np.ones(n)] + contrast_cols)
        p = X.shape[1]
        if np.linalg.matrix_rank(X) < p:
            raise RankDeficient(f"fixed design matrix has rank < {p}")
        if n <= p:
            raise ValueError(f"need more than {p} observations, got {n}")

        zzt = []
        group_sizes = {}
        for g in spec.random_intercepts:
            labels = [str(v) for v in cols[g]]
            levels_g = sorted(set(labels))
            if len(levels_g) < 2:
                raise ValueError(f"grouping {g!r} has < 2 levels in the data")
            index = {lv: j for j, lv in enumerate(levels_g)}
            Z = np.zeros((n, len(levels_g)))
            for i, lab in enumerate(labels):
                Z[i, index[lab]] = 1.0
            zzt.append(Z @ Z.T)
            group_sizes[g] = len(levels_g)

        self.spec = spec
        self.y = y
        self.X = X
        self.n = n
        self.p = p
        self.zzt = zzt
        self.k = len(zzt)
        self.fixed_levels = fixed_levels
        self.group_sizes = group_sizes
        # contrast rows of the fixed factor: all non-intercept columns
        self.contrast = np.eye(p)[1:, :] if p > 1 else np.zeros((0, p))

    def _h_matrix(self, gammas: Sequence[float]) -> np.ndarray:
        H = np.eye(self.n)
        for gamma, zzt in zip(gammas, self.zzt):
            H = H + gamma * zzt
        return H

    def core(self, gammas: Sequence[float]):
        """Everything the criterion needs at one gamma point.

        Returns (logdet_H, logdet_XtHiX, beta, quad, XtHiX) with
        quad = y' P_H y, the profiled residual sum of squares.
        """
        H = self._h_matrix(gammas)
        c, low = linalg.cho_factor(H, lower=True, check_finite=False)
        logdet_h = 2.0 * float(np.sum(np.log(np.diag(c))))
        hi_x = linalg.cho_solve((c, low), self.X, check_finite=False)
        hi_y = linalg.cho_solve((c, low), self.y, check_finite=False)
        xt_hi_x = self.X.T @ hi_x
        xt_hi_y = self.X.T @ hi_y
        cx = linalg.cho_factor(xt_hi_x, lower=True, check_finite=False)
        logdet_xhx = 2.0 * float(np.sum(np.log(np.diag(cx[0]))))
        beta = linalg.cho_solve(cx, xt_hi_y, check_finite=False)
        quad = float(self.y @ hi_y - xt_hi_y @ beta)
        return logdet_h, logdet_xhx, beta, quad, xt_hi_x

    def profiled_deviance(self, gammas: Sequence[float]) -> float:
        logdet_h, logdet_xhx, _, quad, _ = self.core(gammas)
        df = self.n - self.p
        sigma2 = quad / df
        return df * (LOG2PI + math.log(sigma2)) + logdet_h + logdet_xhx + df

    def full_deviance(self, gammas: Sequence[float], sigma2: float) -> float:
        """-2 REML log-likelihood with sigma2 NOT profiled out."""
        logdet_h, logdet_xhx, _, quad, _ = self.core(gammas)
        df = self.n - self.p
        return (
            df * (LOG2PI + math.log(sigma2))
            + logdet_h
            + logdet_xhx
            + quad / sigma2
        )

    def contrast_variance(
        self, gammas: Sequence[float], sigma2: float, L: np.ndarray
    ) -> np.ndarray:
        """Var(L beta_hat) = sigma2 * L (X' H^-1 X)^-1 L'."""
        _, _, _, _, xt_hi_x = self.core(gammas)
        cx = linalg.cho_factor(xt_hi_x, lower=True, check_finite=False)
        return sigma2 * (L @ linalg.cho_solve(cx, L.T, check_finite=False))


@dataclass
class FittedLMM:
    spec: ModelSpec
    beta: np.ndarray
    variance_components: Dict[str, float]  # sigma2_g per grouping, in order
    sigma2_resid: float
    reml_deviance: float
    converged: bool
    singular: bool
    n_obs: int
    fixed_levels: Optional[Tuple[str, ...]]
    group_sizes: Dict[str, int]
    gamma: Tuple[float, ...] = ()
    config: FitConfig = DEFAULT_CONFIG
    design: _REMLDesign = field(repr=False, default=None)


def fit_reml(data, spec: ModelSpec, config: FitConfig = DEFAULT_CONFIG) -> FittedLMM:
    """REML fit of a random-intercept model.

    Variance ratios are optimized on the log scale by bounded Nelder-Mead
    from several starting points; beta is the GLS solution at the optimum.
    A non-converged optimizer is reported through converged=False.
    """
    design = _REMLDesign(data, spec)
    k = design.k

    if k == 0:
        gammas: Tuple[float, ...] = ()
        converged = True
    else:
        lo, hi = math.log(config.ratio_bounds[0]), math.log(config.ratio_bounds[1])

        def objective(u: np.ndarray) -> float:
            return design.profiled_deviance(np.exp(np.clip(u, lo, hi)))

        best = None
        for seed in config.multistart:
            x0 = np.full(k, math.log(seed))
            res = optimize.minimize(
                objective,
                x0,
                method="Nelder-Mead",
                bounds=[(lo, hi)] * k,
                options={
                    "xatol": config.param_tol,
                    "fatol": config.deviance_tol,
                    "maxiter": config.max_iter,
                    "maxfev": config.max_iter,
                },
            )
            if best is None or res.fun < best.fun:
                best = res
        gammas = tuple(np.exp(np.clip(best.x, lo, hi)))
        converged = bool(best.success)

    logdet_h, logdet_xhx, beta, quad, _ = design.core(gammas)
    df = design.n - design.p
    sigma2 = quad / df
    deviance = df * (LOG2PI + math.log(sigma2)) + logdet_h + logdet_xhx + df

    components = {
        g: gamma * sigma2 for g, gamma in zip(spec.random_intercepts, gammas)
    }
    singular = any(g < config.singular_threshold for g in gammas)

    return FittedLMM(
        spec=spec,
        beta=np.asarray(beta),
        variance_components=components,
        sigma2_resid=sigma2,
        reml_deviance=deviance,
        converged=converged,
        singular=singular,
        n_obs=design.n,
        fixed_levels=design.fixed_levels,
        group_sizes=dict(design.group_sizes),
        gamma=gammas,
        config=config,
        design=design,
    )


def reml_deviance_at(fit: FittedLMM, ratios: Sequence[float]) -> float:
    """Profiled REML deviance of a fitted model at arbitrary variance ratios."""
    if len(ratios) != fit.design.k:
        raise ValueError(f"expected {fit.design.k} ratios, got {len(ratios)}")
    return fit.design.profiled_deviance(list(ratios))


def select_random_effects(
    data, maximal_spec: ModelSpec, config: FitConfig = DEFAULT_CONFIG
) -> Tuple[ModelSpec, FittedLMM]:
    """Largest random-effects structure that converges without singularity.

    Tries the maximal spec, then drops groupings from the end one at a
    time.  If every converged fit is singular, the last one is returned
    with its singular flag set; if nothing converges, SelectionFailed.
    """
    if not maximal_spec.random_intercepts:
        raise ValueError("maximal_spec has no random intercepts to select over")
    spec = maximal_spec
    attempts = []
    fallback = None
    while spec.random_intercepts:
        try:
            fit = fit_reml(data, spec, config)
        except Exception as exc:
            attempts.append((spec, f"error: {exc}"))
        else:
            if fit.converged and not fit.singular:
                return spec, fit
            if fit.converged:
                attempts.append((spec, "singular fit"))
                fallback = (spec, fit)
            else:
                attempts.append((spec, "did not converge"))
        spec = spec.without_last_grouping()
    if fallback is not None:
        return fallback
    raise SelectionFailed(attempts)


@dataclass(frozen=True)
class AnovaResult:
    F: float
    ndf: int
    ddf: float
    p_raw: float
    p_corrected: Optional[float] = None

    def with_correction(self, p_corrected: float) -> "AnovaResult":
        return AnovaResult(self.F, self.ndf, self.ddf, self.p_raw, p_corrected)


def _satterthwaite_ddf(fit: FittedLMM, L: np.ndarray) -> float:
    """2 v^2 / Var(v) with v = Var(L beta), via the delta method.

    v is differentiated by central differences in theta = (log gamma...,
    log sigma2); Var(theta) is twice the inverse Hessian of the full REML
    deviance.  Ratios pinned at the singular floor are held fixed: the
    criterion is flat there and they contribute nothing to Var(v).
    """
    design = fit.design
    config = fit.config
    h = config.fd_step
    sigma2 = fit.sigma2_resid

    free = [
        i for i, g in enumerate(fit.gamma) if g >= config.singular_threshold
    ]
    if not free:
        # only sigma2 is uncertain: v is proportional to sigma2, so
        # dv/dlog sigma2 = v, and the deviance curvature in log sigma2 at
        # the optimum is n - p; 2 v^2 / (v^2 * 2 / (n - p)) collapses to
        # the residual df exactly, no differencing needed
        return float(design.n - design.p)
    theta0 = np.array(
        [math.log(fit.gamma[i]) for i in free] + [math.log(sigma2)]
    )
    m = theta0.shape[0]

    def unpack(theta: np.ndarray):
        gammas = list(fit.gamma)
        for slot, i in enumerate(free):
            gammas[i] = math.exp(theta[slot])
        return gammas, math.exp(theta[-1])

    def v_at(theta: np.ndarray) -> float:
        gammas, s2 = unpack(theta)
        return float(design.contrast_variance(gammas, s2, L)[0, 0])

    def dev_at(theta: np.ndarray) -> float:
        gammas, s2 = unpack(theta)
        return design.full_deviance(gammas, s2)

    grad = np.zeros(m)
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        grad[j] = (v_at(theta0 + e) - v_at(theta0 - e)) / (2.0 * h)

    dev0 = dev_at(theta0)
    hess = np.zeros((m, m))
    for j in range(m):
        ej = np.zeros(m)
        ej[j] = h
        hess[j, j] = (dev_at(theta0 + ej) - 2.0 * dev0 + dev_at(theta0 - ej)) / (h * h)
        for l in range(j + 1, m):
            el = np.zeros(m)
            el[l] = h
            cross = (
                dev_at(theta0 + ej + el)
                - dev_at(theta0 + ej - el)
                - dev_at(theta0 - ej + el)
                + dev_at(theta0 - ej - el)
            ) / (4.0 * h * h)
            hess[j, l] = hess[l, j] = cross

    v = v_at(theta0)
    df_resid = float(design.n - design.p)
    try:
        cov_theta = 2.0 * np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov_theta = 2.0 * np.linalg.pinv(hess)
    denom = float(grad @ cov_theta @ grad)
    if not math.isfinite(denom) or denom <= 0.0:
        return df_resid
    ddf = 2.0 * v * v / denom
    if not math.isfinite(ddf) or ddf <= 0.0:
        return df_resid
    return ddf


def type3_anova(fit: FittedLMM) -> AnovaResult:
    """Type III F test of the fixed factor with Satterthwaite ddf."""
    if not fit.converged:
        raise NotConverged("cannot run an ANOVA on a non-converged fit")
    if fit.spec.fixed is None:
        raise ValueError("model has no fixed factor to test")

    design = fit.design
    L = design.contrast
    q = L.shape[0]
    vmat = design.contrast_variance(list(fit.gamma), fit.sigma2_resid, L)
    lb = L @ fit.beta
    F = float(lb @ np.linalg.solve(vmat, lb)) / q
    F = max(F, 0.0)

    if q == 1:
        ddf = _satterthwaite_ddf(fit, L)
    else:
        # multi-row contrasts average the per-row Satterthwaite df; only
        # the two-level single-contrast case is exercised here
        ddf = float(
            np.mean([_satterthwaite_ddf(fit, L[i : i + 1, :]) for i in range(q)])
        )
    p_raw = f_upper_tail(F, float(q), ddf)
    return AnovaResult(F=F, ndf=q, ddf=ddf, p_raw=p_raw)
