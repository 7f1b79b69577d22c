"""Test-matrix norm solver: projected ascent over a Haar-sparsity relaxation.

The feasible set contains every symmetric matrix that is entrywise bounded,
positive semidefinite, and whose Haar conjugate is analytically sparse
(weighted L1, weighted squared-Frobenius, and weighted max bounds tied to
the sign-change budget).  The norm of a symmetric M is the supremum of
|<M, Sigma>| over that set; the set is convex and the objective linear, so
projected gradient ascent with Dykstra's alternating projections converges
to the global optimum and every iterate certifies a feasible lower bound.

The engine works in the transform domain, where four of the five constraint
sets are separable and the PSD cone is preserved (the basis is orthogonal),
so only the entrywise box needs conjugation per cycle.  Ascent steps that
fail to improve the objective are rejected and retried with a smaller step,
which keeps the reported objective sequence exactly nondecreasing even
though each projection is computed to finite accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import haar
from .haar import HaarBasis


class SolverError(RuntimeError):
    """Internal projection subroutine failed to converge."""


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the ascent and the alternating projections."""

    ell: int
    step_size: float | None = None  # defaults to n/||M||_F at solve time
    max_outer_iters: int = 500
    dykstra_iters: int = 35
    feas_tol: float = 1e-6
    value_tol: float = 1e-4  # relative improvement over value_window iterations
    value_window: int = 25
    value_floor: float = 1e-2  # |objective| scale floor for the plateau test
    change_tol: float = 1e-9  # per-cycle fixed-point tolerance of the projection

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("sign-change budget ell must be positive")
        if self.feas_tol <= 0 or self.value_tol <= 0 or self.change_tol <= 0:
            raise ValueError("tolerances must be positive")

    def sign_budget(self, n: int) -> float:
        """Sparsity level ell*log2(n) + 1 of transformed test vectors."""
        return self.ell * math.log2(n) + 1.0


@dataclass(frozen=True)
class TestMatrix:
    """A feasible (up to tolerance) member of the test-matrix set."""

    __test__ = False  # not a pytest class, despite the name

    sigma: np.ndarray
    residuals: tuple

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if np.max(np.abs(sigma - sigma.T)) > 1e-10:
            raise ValueError("test matrix must be symmetric")
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "residuals", tuple(float(r) for r in self.residuals))


@dataclass(frozen=True)
class SolverReport:
    value: float
    iterations: int
    residuals: tuple
    converged: bool
    trace: tuple = ()


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0


# ---------------------------------------------------------------------------
# projections onto the weighted balls (generic helpers, exact)


def project_weighted_l1_ball(y: np.ndarray, c: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : sum c_i |x_i| <= radius}, c_i > 0.

    Weighted soft-thresholding x_i = sign(y_i) max(|y_i| - lam c_i, 0) with
    lam located by an exact sorted-breakpoint search.
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    absy = np.abs(y)
    if float((c * absy).sum()) <= radius:
        return y
    flat_y = absy.ravel()
    flat_c = c.ravel()
    knots = flat_y / flat_c
    order = np.argsort(knots)
    cy = (flat_c * flat_y)[order]
    cc = (flat_c * flat_c)[order]
    sorted_knots = knots[order]
    # g(lam) = s1[j] - lam*s2[j] for lam in (knot_{j-1}, knot_j]; g is continuous
    # and decreasing, so lam* sits in the first interval whose knot value drops
    # below the radius.
    s1 = np.cumsum(cy[::-1])[::-1]
    s2 = np.cumsum(cc[::-1])[::-1]
    g_at_knots = s1 - sorted_knots * s2
    crossing = np.nonzero(g_at_knots <= radius)[0]
    if crossing.size == 0:
        raise SolverError("breakpoint search failed to bracket the threshold")
    j = int(crossing[0])
    lam = max((s1[j] - radius) / s2[j], 0.0)
    return np.sign(y) * np.maximum(absy - lam * c, 0.0)


def project_weighted_frob_ball(y: np.ndarray, c: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : sum c_i x_i^2 <= radius}, c_i > 0.

    Coordinate shrinkage x_i = y_i / (1 + lam c_i) with lam the unique
    nonnegative root of the budget equation, found by bisection.
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    cy2 = c * y * y

    def budget(lam):
        return float((cy2 / (1.0 + lam * c) ** 2).sum())

    if budget(0.0) <= radius:
        return y
    hi = 1.0
    for _ in range(200):
        if budget(hi) < radius:
            break
        hi *= 2.0
    else:
        raise SolverError("shrinkage root-find failed to bracket")
    lo = 0.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if budget(mid) > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * max(1.0, hi):
            break
    return y / (1.0 + hi * c)


# ---------------------------------------------------------------------------
# the five constraint projections (public surface, natural-domain inputs)


def project_constraint_c1(sigma: np.ndarray) -> np.ndarray:
    """Entrywise box |Sigma_ab| <= 1."""
    return np.clip(sigma, -1.0, 1.0)


def project_constraint_c2(basis: HaarBasis, sigma: np.ndarray, budget: float) -> np.ndarray:
    """Weighted L1 ball on the Haar conjugate."""
    L = haar.conjugate_forward(basis, sigma)
    c = np.outer(basis.weights, basis.weights)
    if float((c * np.abs(L)).sum()) <= budget:
        return sigma
    return _symmetrize(haar.conjugate_inverse(basis, project_weighted_l1_ball(L, c, budget)))


def project_constraint_c3(basis: HaarBasis, sigma: np.ndarray, budget: float) -> np.ndarray:
    """Weighted squared-Frobenius ball on the Haar conjugate."""
    L = haar.conjugate_forward(basis, sigma)
    c = np.outer(basis.weights, basis.weights) ** 2
    if float((c * L * L).sum()) <= budget:
        return sigma
    return _symmetrize(haar.conjugate_inverse(basis, project_weighted_frob_ball(L, c, budget)))


def project_constraint_c4(basis: HaarBasis, sigma: np.ndarray) -> np.ndarray:
    """Weighted entrywise box on the Haar conjugate."""
    L = haar.conjugate_forward(basis, sigma)
    bound = 1.0 / np.outer(basis.weights, basis.weights)
    clipped = np.clip(L, -bound, bound)
    if np.array_equal(clipped, L):
        return sigma
    return _symmetrize(haar.conjugate_inverse(basis, clipped))


def project_constraint_c5(sigma: np.ndarray) -> np.ndarray:
    """Positive semidefinite cone."""
    try:
        vals, vecs = np.linalg.eigh(_symmetrize(sigma))
    except np.linalg.LinAlgError as exc:
        raise SolverError("eigendecomposition failed") from exc
    return _symmetrize((vecs * np.maximum(vals, 0.0)) @ vecs.T)


def constraint_residuals(basis: HaarBasis, sigma: np.ndarray, budget: float) -> tuple:
    """Feasibility violations of the five constraints (0 means satisfied)."""
    L = haar.conjugate_forward(basis, sigma)
    norms = haar.weighted_matrix_norms(basis, L)
    return (
        max(0.0, float(np.max(np.abs(sigma))) - 1.0),
        max(0.0, norms["l11_h"] - budget),
        max(0.0, norms["frob_sq_h"] - budget),
        max(0.0, norms["max_h"] - 1.0),
        max(0.0, -float(np.linalg.eigvalsh(_symmetrize(sigma))[0])),
    )


# ---------------------------------------------------------------------------
# transform-domain Dykstra engine


class _Engine:
    """Precomputed weight tables for repeated projections at one size."""

    def __init__(self, basis: HaarBasis, config: SolverConfig):
        self.basis = basis
        self.config = config
        self.budget = config.sign_budget(basis.n) ** 2
        h = basis.weights
        self.ch = np.outer(h, h)
        self.ch2 = self.ch * self.ch
        self.c4_bound = 1.0 / self.ch

    def residuals_transform(self, L: np.ndarray, with_psd: bool = True) -> tuple:
        """Residuals of a transform-domain point (r5 optional: it is exact
        right after the PSD projection, which closes every cycle)."""
        sigma = haar.conjugate_inverse(self.basis, L)
        scaled = np.abs(L) * self.ch
        r5 = 0.0
        if with_psd:
            r5 = max(0.0, -float(np.linalg.eigvalsh(_symmetrize(L))[0]))
        return (
            max(0.0, float(np.max(np.abs(sigma))) - 1.0),
            max(0.0, float(scaled.sum()) - self.budget),
            max(0.0, float((scaled * scaled).sum()) - self.budget),
            max(0.0, float(scaled.max()) - 1.0),
            r5,
        )

    def dykstra(self, L0: np.ndarray, max_rounds: int):
        """Project L0 onto the constraint intersection (transform domain).

        Cycles the five projections with fresh increments until the iterate
        is feasible and has stopped moving, which certifies the projection
        up to change_tol.  Returns (L, residuals, converged, rounds).
        """
        cfg = self.config
        x = _symmetrize(L0)
        res = self.residuals_transform(x)
        if max(res) <= cfg.feas_tol:
            return x, res, True, 0
        incs = [np.zeros_like(x) for _ in range(5)]
        res = None
        for rounds in range(1, max_rounds + 1):
            x_prev = x
            # c1: entrywise box, the one constraint that lives in the
            # natural domain
            z = x + incs[0]
            x = haar.conjugate_forward(
                self.basis, np.clip(haar.conjugate_inverse(self.basis, z), -1.0, 1.0)
            )
            x = _symmetrize(x)
            incs[0] = z - x
            # c2: weighted L1 ball
            z = x + incs[1]
            if float((np.abs(z) * self.ch).sum()) > self.budget:
                x = project_weighted_l1_ball(z, self.ch, self.budget)
            else:
                x = z
            incs[1] = z - x
            # c3: weighted squared-Frobenius ball
            z = x + incs[2]
            if float((z * z * self.ch2).sum()) > self.budget:
                x = project_weighted_frob_ball(z, self.ch2, self.budget)
            else:
                x = z
            incs[2] = z - x
            # c4: weighted entrywise box
            z = x + incs[3]
            x = np.clip(z, -self.c4_bound, self.c4_bound)
            incs[3] = z - x
            # c5: PSD cone (orthogonal conjugation preserves it)
            z = x + incs[4]
            vals, vecs = np.linalg.eigh(_symmetrize(z))
            x = _symmetrize((vecs * np.maximum(vals, 0.0)) @ vecs.T)
            incs[4] = z - x

            res = self.residuals_transform(x, with_psd=False)
            if max(res) <= cfg.feas_tol:
                scale = max(1.0, float(np.max(np.abs(x))))
                if float(np.max(np.abs(x - x_prev))) <= cfg.change_tol * scale:
                    return x, res, True, rounds
        return x, res, False, max_rounds


def project_K(basis: HaarBasis, sigma: np.ndarray, config: SolverConfig):
    """Dykstra projection onto the test-matrix set.

    Returns (TestMatrix, converged); converged is False when the iterate is
    still moving or infeasible after the round limit (the caller decides).
    """
    engine = _Engine(basis, config)
    L0 = haar.conjugate_forward(basis, _symmetrize(np.asarray(sigma, dtype=float)))
    L, _, converged, _ = engine.dykstra(L0, config.dykstra_iters)
    out = _symmetrize(haar.conjugate_inverse(basis, L))
    res = constraint_residuals(basis, out, engine.budget)
    return TestMatrix(sigma=out, residuals=res), converged


def _feasible_pullback(engine: _Engine, L: np.ndarray) -> np.ndarray:
    """Scale a PSD iterate down until the homogeneous constraints hold.

    Every constraint set is convex and contains the origin, and the PSD cone
    is scale invariant, so theta*L is feasible for small enough theta; this
    turns an almost-feasible iterate into an exactly feasible certificate at
    a negligible objective cost.
    """
    sigma_max = float(np.max(np.abs(haar.conjugate_inverse(engine.basis, L))))
    scaled = np.abs(L) * engine.ch
    l11 = float(scaled.sum())
    frob_sq = float((scaled * scaled).sum())
    weighted_max = float(scaled.max())
    theta = min(
        1.0,
        1.0 / sigma_max if sigma_max > 0 else 1.0,
        engine.budget / l11 if l11 > 0 else 1.0,
        math.sqrt(engine.budget / frob_sq) if frob_sq > 0 else 1.0,
        1.0 / weighted_max if weighted_max > 0 else 1.0,
    )
    if theta >= 1.0:
        return L
    return (theta * (1.0 - 1e-12)) * L


def _sign_round_candidate(engine: _Engine, L: np.ndarray, ML: np.ndarray):
    """Rank-one vertex candidate from the iterate's top eigenvector.

    Rounding the leading eigenvector to signs recovers the exact optimum
    whenever the relaxation is tight at some vertex v v^T, which is exactly
    the regime where plain ascent crawls along an ill-conditioned face.
    Returns (objective, transformed vertex) or None when the rounded vector
    exceeds the sign-change budget and so certifies nothing.
    """
    _, vecs = np.linalg.eigh(L)
    v = np.sign(haar.inverse(engine.basis, vecs[:, -1]))
    v[v == 0] = 1.0
    if int(np.count_nonzero(v[1:] != v[:-1])) > engine.config.ell:
        return None
    hv = haar.forward(engine.basis, v)
    return float(hv @ ML @ hv), np.outer(hv, hv)


def _ascend(engine: _Engine, ML: np.ndarray, step: float):
    """Maximize <ML, L> over the transformed set by safeguarded ascent.

    Every candidate is pulled back to exact feasibility before the
    acceptance test, so each iterate certifies a true lower bound; a
    candidate that fails to improve the objective is rejected and the step
    shrinks, which keeps the objective sequence nondecreasing by
    construction despite finite projection accuracy.  Accepted iterates are
    additionally tested against their sign-rounded rank-one vertex.
    """
    cfg = engine.config
    fro = float(np.linalg.norm(ML))
    x, _, _, _ = engine.dykstra(engine.basis.n * ML / fro, cfg.dykstra_iters)
    x = _feasible_pullback(engine, x)
    obj = float(np.tensordot(ML, x))
    rounded = _sign_round_candidate(engine, x, ML)
    if rounded is not None and rounded[0] >= obj:
        obj, x = rounded
    trace = [obj]
    step_floor = step / 64.0
    step_cap = step * 1e6
    iterations = 0
    plateaued = False
    for t in range(cfg.max_outer_iters):
        cand, _, _, _ = engine.dykstra(x + step * ML, cfg.dykstra_iters)
        cand = _feasible_pullback(engine, cand)
        cand_obj = float(np.tensordot(ML, cand))
        iterations = t + 1
        if cand_obj >= obj:
            rounded = _sign_round_candidate(engine, cand, ML)
            if rounded is not None and rounded[0] >= cand_obj:
                cand_obj, cand = rounded
            x, obj = cand, cand_obj
            step = min(step * 2.0, step_cap)  # linear objective: long steps help
        elif step > step_floor:
            step = max(step / 4.0, step_floor)
        trace.append(obj)
        if t + 1 >= cfg.value_window:
            gain = trace[-1] - trace[-1 - cfg.value_window]
            if gain <= cfg.value_tol * max(abs(trace[-1]), cfg.value_floor):
                plateaued = True
                break
    return x, trace, iterations, plateaued


def k_norm(basis: HaarBasis, M: np.ndarray, config: SolverConfig):
    """Certified lower bound on sup |<M, Sigma>| over the test-matrix set.

    Ascends separately along +M and -M (the set is not negation symmetric
    because of the PSD constraint) and returns the larger objective with its
    maximizing matrix and a report.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != basis.n:
        raise ValueError(f"M must be {basis.n}x{basis.n}")
    if np.max(np.abs(M - M.T)) > 1e-8:
        raise ValueError("M must be symmetric")
    M = _symmetrize(M)
    engine = _Engine(basis, config)
    zero_res = (0.0,) * 5
    fro = float(np.linalg.norm(M))
    if fro == 0.0:
        test = TestMatrix(sigma=np.zeros_like(M), residuals=zero_res)
        return 0.0, test, SolverReport(0.0, 0, zero_res, True, (0.0,))

    step = config.step_size if config.step_size is not None else basis.n / fro
    ML = haar.conjugate_forward(basis, M)
    best = None
    total_iters = 0
    for sign in (1.0, -1.0):
        x, trace, iters, plateaued = _ascend(engine, sign * ML, step)
        total_iters += iters
        value = float(np.tensordot(sign * ML, x))
        if best is None or value > best[0]:
            best = (value, x, tuple(trace), plateaued)
    value, x, trace, plateaued = best
    if value < 0.0:  # the zero matrix is always feasible
        test = TestMatrix(sigma=np.zeros_like(M), residuals=zero_res)
        return 0.0, test, SolverReport(0.0, total_iters, zero_res, plateaued, trace)
    sigma = _symmetrize(haar.conjugate_inverse(basis, x))
    res = constraint_residuals(basis, sigma, engine.budget)
    converged = plateaued and max(res) <= config.feas_tol
    test = TestMatrix(sigma=sigma, residuals=res)
    return value, test, SolverReport(value, total_iters, tuple(res), converged, trace)


def brute_force_k_norm(M: np.ndarray, n: int, ell: int) -> float:
    """Exact max of |v^T M v| over sign vectors with at most ell changes (n <= 16)."""
    if n > 16:
        raise ValueError(f"brute force refused for n={n} > 16")
    M = np.asarray(M, dtype=float)
    best = 0.0
    for v in haar.enumerate_sign_vectors(n, ell):
        best = max(best, abs(float(v @ M @ v)))
    return best
