"""Kolmogorov widths of finite-dimensional balls and their intersections.

Provides the classical closed form d_n(B_p^N, l_q^N) = (N-n)^(1/q-1/p) for
q <= p, the two-sided order formula for p < q, the interpolation inclusion
that places an intersection of two balls inside a single ball, and numeric
width estimators:

* ``numeric_width_upper`` searches over approximating subspaces and returns a
  certified upper bound for the width of a sampled body (an upper bound up to
  the sampling of the body; the subspace side is rigorous).
* ``brute_force_width_oracle`` spends much more effort on tiny instances and
  is used as ground truth in the test suite.

The searches draw every random quantity from named substreams of one seed, so
results are reproducible and independent of thread schedule.  Subspace
distances max/min-reduce commutatively, which keeps the optional thread pool
(capped by the WIDTHLAB_THREADS environment variable) deterministic.
"""

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import (
    NumericError,
    SchemaError,
    SizeLimitError,
    UnsupportedRegimeError,
)
from .exponents import INF, AbstractParams, SpaceParams, recip
from .rngs import substream

__all__ = [
    "BallSpec",
    "IntersectionSpec",
    "WidthEstimate",
    "SearchConfig",
    "exact_width",
    "gluskin_order",
    "interpolation_ball",
    "ring_radii",
    "ring_level_body",
    "intersection_width_upper",
    "sample_extreme_points",
    "lq_distances",
    "numeric_width_profile",
    "numeric_width_upper",
    "brute_force_width_oracle",
]


@dataclass(frozen=True)
class BallSpec:
    """radius times the unit p-ball in R^N."""

    N: int
    p: float
    radius: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 1):
            raise SchemaError(f"N must be an integer >= 1, got {self.N!r}")
        if not (self.p >= 1.0):
            raise SchemaError(f"p must lie in [1, inf], got {self.p!r}")
        if not (self.radius > 0.0):
            raise SchemaError(f"radius must be positive, got {self.radius!r}")


@dataclass(frozen=True)
class IntersectionSpec:
    """Intersection of two centered balls; ball0 carries the zero-order
    exponent p0, ball1 the derivative-side exponent p1."""

    N: int
    ball0: BallSpec
    ball1: BallSpec

    def __post_init__(self):
        if self.ball0.N != self.N or self.ball1.N != self.N:
            raise SchemaError("ball dimensions must match the ambient N")


@dataclass(frozen=True)
class WidthEstimate:
    """A width value together with its epistemic status.

    kind: "exact" (closed form), "order" (two-sided up to constants),
    "upper" (one-sided bound), or "estimate" (numeric, tolerance attached).
    """

    value: float
    kind: str
    method: str
    n: int
    target_q: float
    rel_tol: float | None = None


@dataclass(frozen=True)
class SearchConfig:
    """Budget knobs for the numeric width searches."""

    seed: int = 0
    restarts: int = 12
    samples_per_eval: int = 600
    refine_steps: int = 40
    tolerance: float = 1e-10
    dimension_cap: int = 64
    coordinate_cap: int = 3000


def exact_width(N: int, n: int, p: float, q: float, radius: float = 1.0) -> WidthEstimate:
    """d_n of radius*B_p^N in l_q^N for q <= p: radius*(N-n)^(1/q-1/p)."""
    _check_Nn(N, n)
    if not (p >= 1.0) or not (q >= 1.0):
        raise SchemaError(f"exponents must lie in [1, inf], got p={p!r}, q={q!r}")
    if recip(q) < recip(p):
        raise UnsupportedRegimeError(
            f"closed form needs q <= p, got p={p}, q={q}")
    if n >= N:
        value = 0.0
    else:
        value = radius * float(N - n) ** (recip(q) - recip(p))
    return WidthEstimate(value=value, kind="exact", method="closed-form",
                         n=n, target_q=q)


def gluskin_order(N: int, n: int, p: float, q: float, radius: float = 1.0) -> WidthEstimate:
    """Order of d_n(B_p^N, l_q^N) for p < q, up to constants.

    Two regimes: 1 <= p < q < inf with q > 2 gives
    min(1, n^(-1/2) N^(1/q))^lambda with
    lambda = min(1, (1/p-1/q)/(1/2-1/q)); 1 <= p <= q <= 2 gives order one.
    Two-sided for n <= N/2; still an upper estimate beyond.
    """
    _check_Nn(N, n)
    if not (p >= 1.0) or not (q >= 1.0):
        raise SchemaError(f"exponents must lie in [1, inf], got p={p!r}, q={q!r}")
    ip, iq = recip(p), recip(q)
    if q != INF and q > 2.0 and p != INF and ip > iq:
        lam = min(1.0, (ip - iq) / (0.5 - iq))
        if n == 0:
            core = 1.0
        else:
            core = min(1.0, float(n) ** -0.5 * float(N) ** iq)
        value = radius * core ** lam
    elif q <= 2.0 and ip >= iq:
        value = radius * 1.0
    else:
        raise UnsupportedRegimeError(
            f"no order formula for p={p}, q={q}; for q <= p use exact_width")
    if n >= N:
        value = 0.0
    return WidthEstimate(value=value, kind="order", method="two-sided-order",
                         n=n, target_q=q)


def interpolation_ball(spec: IntersectionSpec, q_tilde: float) -> tuple[BallSpec, float]:
    """Smallest q_tilde-ball containing the intersection via the
    interpolation inclusion, with its interpolation weight.

    Needs 1/q_tilde strictly between 1/p0 and 1/p1.
    """
    ip0, ip1 = recip(spec.ball0.p), recip(spec.ball1.p)
    iqt = recip(q_tilde)
    if ip0 == ip1:
        raise UnsupportedRegimeError(
            "interpolation needs distinct ball exponents")
    lam = (iqt - ip1) / (ip0 - ip1)
    if not (0.0 < lam < 1.0):
        raise UnsupportedRegimeError(
            f"1/q_tilde={iqt} is not strictly between 1/p0={ip0} and 1/p1={ip1}")
    radius = spec.ball0.radius ** lam * spec.ball1.radius ** (1.0 - lam)
    return BallSpec(N=spec.N, p=q_tilde, radius=radius), lam


_DIM_BITS_CAP = 62


def ring_radii(a: AbstractParams, s: SpaceParams, t: float, m: float) -> tuple[float, float]:
    """(zero-order radius, derivative-side radius) of the ring/depth layer
    coefficient body; accepts real-valued t and m so balance depths can be
    checked directly."""
    kt = a.k_star * t
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    r0 = 2.0 ** (-a.alpha_star * kt) * 2.0 ** (m * (ip0 - iq))
    r1 = 2.0 ** (a.mu_star * kt) * 2.0 ** (-m * (a.s_star + iq - ip1))
    return r0, r1


def ring_level_body(a: AbstractParams, s: SpaceParams, t: int, m: int) -> IntersectionSpec:
    """Finite-dimensional model of one ring/depth layer of the multi-scale
    decomposition: the coefficient body cut out by the two constraints.

    Dimension is c*2^(gamma* k* t + m) rounded half up; the derivative-side
    ball has radius 2^(mu* k* t) * 2^(-m(s*+1/q-1/p1)), the zero-order ball
    2^(-alpha* k* t) * 2^(m(1/p0-1/q)).
    """
    if not (isinstance(t, int) and t >= 0):
        raise SchemaError(f"t must be an integer >= 0, got {t!r}")
    if not (isinstance(m, int) and m >= 0):
        raise SchemaError(f"m must be an integer >= 0, got {m!r}")
    kt = a.k_star * t
    log_dim = a.gamma_star * kt + m
    if log_dim > _DIM_BITS_CAP:
        raise SizeLimitError(
            f"layer dimension 2^{log_dim:.1f} exceeds the addressable cap")
    nu = int(math.floor(a.c * 2.0 ** log_dim + 0.5))
    nu = max(nu, 1)
    r0, r1 = ring_radii(a, s, t, m)
    return IntersectionSpec(N=nu,
                            ball0=BallSpec(N=nu, p=s.p0, radius=r0),
                            ball1=BallSpec(N=nu, p=s.p1, radius=r1))


def _single_ball_upper(N: int, n: int, p: float, q: float, radius: float):
    if recip(q) >= recip(p):
        return exact_width(N, n, p, q, radius=radius).value
    try:
        return gluskin_order(N, n, p, q, radius=radius).value
    except UnsupportedRegimeError:
        return None


def intersection_width_upper(spec: IntersectionSpec, n: int, q: float) -> WidthEstimate:
    """Upper estimate of d_n(intersection, l_q^N): minimum over the closed
    routes (relax to either ball, interpolate to the target exponent,
    interpolate to the 2-ball and use the order formula from there)."""
    _check_Nn(spec.N, n)
    if n >= spec.N:
        return WidthEstimate(value=0.0, kind="exact", method="full-rank",
                             n=n, target_q=q)
    routes: list[tuple[float, str]] = []
    for label, ball in (("ball0", spec.ball0), ("ball1", spec.ball1)):
        value = _single_ball_upper(spec.N, n, ball.p, q, ball.radius)
        if value is not None:
            routes.append((value, f"{label}-relax"))
    try:
        target_ball, _ = interpolation_ball(spec, q)
    except UnsupportedRegimeError:
        pass
    else:
        routes.append((target_ball.radius, "interp-target"))
    try:
        mid_ball, _ = interpolation_ball(spec, 2.0)
    except UnsupportedRegimeError:
        pass
    else:
        value = _single_ball_upper(spec.N, n, 2.0, q, mid_ball.radius)
        if value is not None:
            routes.append((value, "interp-2"))
    if not routes:
        raise UnsupportedRegimeError(
            f"no width route applies to p0={spec.ball0.p}, p1={spec.ball1.p}, q={q}")
    value, method = min(routes)
    return WidthEstimate(value=value, kind="upper", method=method,
                         n=n, target_q=q)


# --- point sampling ---------------------------------------------------------

_SIGN_ENUM_CAP = 16


def _unit_ball_boundary(N: int, p: float, count: int, rng) -> np.ndarray:
    if p == INF:
        if N <= _SIGN_ENUM_CAP:
            return np.array(list(itertools.product((-1.0, 1.0), repeat=N)))
        return rng.choice([-1.0, 1.0], size=(count, N))
    eye = np.eye(N)
    fixed = np.vstack([eye, -eye])
    if p == 1.0:
        return fixed
    G = rng.standard_normal((count, N))
    norms = np.sum(np.abs(G) ** p, axis=1) ** (1.0 / p)
    pts = G / norms[:, None]
    ones = np.ones(N) / N ** (1.0 / p)
    return np.vstack([fixed, ones, -ones, pts])


def _normalized(body):
    """Split a body into (scale, unit-scale body); the search runs on the
    normalized body so its output is exactly scale-equivariant."""
    if isinstance(body, BallSpec):
        return body.radius, replace(body, radius=1.0)
    scale = body.ball0.radius
    return scale, IntersectionSpec(
        N=body.N,
        ball0=replace(body.ball0, radius=1.0),
        ball1=replace(body.ball1, radius=body.ball1.radius / scale),
    )


def _body_label(body) -> str:
    if isinstance(body, BallSpec):
        return f"ball:{body.N}:{body.p!r}"
    ratio = body.ball1.radius / body.ball0.radius
    return f"cap:{body.N}:{body.ball0.p!r}:{body.ball1.p!r}:{ratio:.17g}"


_TERNARY_ENUM_CAP = 4000


def _ternary_patterns(N: int, count: int, rng) -> np.ndarray:
    """Sign-support directions: every coordinate -1, 0, or +1 (not all 0).
    After boundary rescaling these hit the points where both constraints of
    an intersection can bind, including every vertex of the polytope cases."""
    if 3 ** N - 1 <= max(_TERNARY_ENUM_CAP, count):
        pats = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=N)))
        return pats[np.any(pats != 0.0, axis=1)]
    pats = rng.integers(-1, 2, size=(count, N)).astype(float)
    keep = np.any(pats != 0.0, axis=1)
    return pats[keep]


def sample_extreme_points(body, count: int, seed: int = 0) -> np.ndarray:
    """Boundary points of the body: sign vertices (exhaustive for small N)
    for p = inf, the cross-polytope vertices for p = 1, seeded sphere points
    otherwise; intersections rescale candidates from both balls, random
    directions, and all small sign-support patterns onto the joint
    boundary."""
    scale, nb = _normalized(body)
    rng = substream(seed, "points", _body_label(body), str(count))
    if isinstance(nb, BallSpec):
        return scale * _unit_ball_boundary(nb.N, nb.p, count, rng)
    half = max(count // 2, 8)
    cand = [
        _unit_ball_boundary(nb.N, nb.ball0.p, half, rng),
        nb.ball1.radius * _unit_ball_boundary(nb.N, nb.ball1.p, half, rng),
        rng.standard_normal((half, nb.N)),
        _ternary_patterns(nb.N, half, rng),
    ]
    X = np.vstack(cand)
    s0 = _pnorm(X, nb.ball0.p) / nb.ball0.radius
    s1 = _pnorm(X, nb.ball1.p) / nb.ball1.radius
    denom = np.maximum(np.maximum(s0, s1), 1e-300)
    return scale * (X / denom[:, None])


def _pnorm(X: np.ndarray, p: float) -> np.ndarray:
    if p == INF:
        return np.max(np.abs(X), axis=1)
    return np.sum(np.abs(X) ** p, axis=1) ** (1.0 / p)


# --- distance to a subspace -------------------------------------------------

_NEWTON_CAP = 100
_ENUM_SUBSET_CAP = 3000


def _orth(V: np.ndarray) -> np.ndarray:
    if V.size == 0:
        return V.reshape(V.shape[0], 0)
    Q, R = np.linalg.qr(V)
    diag = np.abs(np.diag(R))
    keep = diag > 1e-12 * max(diag.max(), 1.0)
    return Q[:, keep]


def _dist_l1_enum(X: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Exact l1 distances for small corank: the minimizer of
    min_c |x - Qc|_1 zeroes n residual coordinates, so enumerate them."""
    N, n = Q.shape
    best = np.full(X.shape[0], np.inf)
    for S in itertools.combinations(range(N), n):
        A = Q[list(S), :]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        C = X[:, list(S)] @ np.linalg.inv(A).T
        R = X - C @ Q.T
        best = np.minimum(best, np.sum(np.abs(R), axis=1))
    if not np.all(np.isfinite(best)):
        return _dist_lp_linprog(X, Q, 1.0)
    return best


def _dist_lp_linprog(X: np.ndarray, Q: np.ndarray, q: float) -> np.ndarray:
    N, n = Q.shape
    out = np.empty(X.shape[0])
    for i, x in enumerate(X):
        if q == 1.0:
            cvec = np.concatenate([np.zeros(n), np.ones(N)])
            A_ub = np.block([[-Q, -np.eye(N)], [Q, -np.eye(N)]])
            b_ub = np.concatenate([-x, x])
            bounds = [(None, None)] * n + [(0, None)] * N
        else:  # chebyshev
            cvec = np.concatenate([np.zeros(n), [1.0]])
            ones = np.ones((N, 1))
            A_ub = np.block([[-Q, -ones], [Q, -ones]])
            b_ub = np.concatenate([-x, x])
            bounds = [(None, None)] * n + [(0, None)]
        res = linprog(cvec, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if not res.success:
            raise NumericError(f"distance LP failed: {res.message}")
        out[i] = res.fun
    return out


def _dist_newton(X: np.ndarray, Q: np.ndarray, q: float, tol: float) -> np.ndarray:
    """Batched damped Newton for min_c |x - Qc|_q, 1 < q < inf, q != 2."""
    C = X @ Q
    active = np.arange(X.shape[0])
    for _ in range(_NEWTON_CAP):
        Xa, Ca = X[active], C[active]
        R = Xa - Ca @ Q.T
        absR = np.abs(R)
        obj = np.sum(absR ** q, axis=1)
        grad = -q * (np.sign(R) * absR ** (q - 1.0)) @ Q
        W = np.maximum(absR, 1e-14) ** (q - 2.0)
        H = q * (q - 1.0) * np.einsum("kN,Ni,Nj->kij", W, Q, Q)
        H += 1e-14 * np.eye(Q.shape[1])
        try:
            step = np.linalg.solve(H, grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        alpha = np.ones(len(active))
        for _ in range(30):
            Cnew = Ca - alpha[:, None] * step
            Rnew = Xa - Cnew @ Q.T
            objnew = np.sum(np.abs(Rnew) ** q, axis=1)
            worse = objnew > obj + 1e-18
            if not np.any(worse):
                break
            alpha[worse] *= 0.5
        C[active] = Ca - alpha[:, None] * step
        # points whose damped step fell under tol are converged; drop them
        moved = np.max(np.abs(alpha[:, None] * step), axis=1)
        active = active[moved >= tol]
        if active.size == 0:
            break
    R = X - C @ Q.T
    return np.sum(np.abs(R) ** q, axis=1) ** (1.0 / q)


def lq_distances(X: np.ndarray, V: np.ndarray | None, q: float,
                 tol: float = 1e-10) -> np.ndarray:
    """l_q distances from the rows of X to the span of the columns of V.

    Closed form for q = 2, exact active-set enumeration or LP for q = 1,
    Chebyshev LP for q = inf, damped Newton otherwise.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if V is None or V.size == 0:
        return _pnorm(X, q)
    Q = _orth(np.asarray(V, dtype=float))
    if Q.shape[1] == 0:
        return _pnorm(X, q)
    if Q.shape[1] >= Q.shape[0]:
        return np.zeros(X.shape[0])
    if q == 2.0:
        R = X - (X @ Q) @ Q.T
        return np.linalg.norm(R, axis=1)
    if q == 1.0:
        n = Q.shape[1]
        if n <= 3 and math.comb(Q.shape[0], n) <= _ENUM_SUBSET_CAP:
            return _dist_l1_enum(X, Q)
        return _dist_lp_linprog(X, Q, 1.0)
    if q == INF:
        return _dist_lp_linprog(X, Q, INF)
    if not (q > 1.0):
        raise SchemaError(f"q must lie in [1, inf], got {q!r}")
    return _dist_newton(X, Q, q, tol)


def _max_distance(X: np.ndarray, Q: np.ndarray | None, q: float,
                  tol: float = 1e-10) -> float:
    return float(np.max(lq_distances(X, Q, q, tol=tol)))


def _thread_count() -> int:
    raw = os.environ.get("WIDTHLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# --- subspace search --------------------------------------------------------


def numeric_width_profile(body, n_max: int, q: float,
                          cfg: SearchConfig = SearchConfig()) -> list[WidthEstimate]:
    """Numeric width upper bounds for all ranks 0..n_max at once.

    Candidate subspaces at rank n always include the rank n-1 winner (a
    subspace of dimension at most n is admissible), so the returned sequence
    is non-increasing by construction, and the whole search runs on the
    radius-normalized body, so scaling the body scales the output exactly.
    """
    if body.N > cfg.dimension_cap:
        raise SizeLimitError(
            f"N={body.N} exceeds the search cap {cfg.dimension_cap}")
    if not (isinstance(n_max, int) and 0 <= n_max <= body.N):
        raise SchemaError(f"n_max must be an integer in [0, N], got {n_max!r}")
    scale, nb = _normalized(body)
    X = sample_extreme_points(nb, cfg.samples_per_eval, seed=cfg.seed)
    label = _body_label(nb)
    estimates = [WidthEstimate(value=scale * _max_distance(X, None, q),
                               kind="upper", method="search", n=0, target_q=q)]
    best_q_basis = np.zeros((body.N, 0))
    threads = _thread_count()
    for n in range(1, n_max + 1):
        candidates: list[np.ndarray] = [best_q_basis]
        dists = lq_distances(X, best_q_basis, q, tol=cfg.tolerance)
        worst = X[int(np.argmax(dists))]
        if best_q_basis.shape[1] > 0:
            worst = worst - best_q_basis @ (best_q_basis.T @ worst)
        if np.linalg.norm(worst) > 1e-12:
            ext = np.column_stack([best_q_basis, worst / np.linalg.norm(worst)])
            candidates.append(ext)
        if math.comb(body.N, n) <= cfg.coordinate_cap:
            for S in itertools.combinations(range(body.N), n):
                candidates.append(np.eye(body.N)[:, list(S)])
        rng = substream(cfg.seed, "frames", label, str(n))
        for _ in range(cfg.restarts):
            candidates.append(_orth(rng.standard_normal((body.N, n))))

        def score(V):
            return _max_distance(X, V, q, tol=cfg.tolerance)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                values = list(pool.map(score, candidates))
        else:
            values = [score(V) for V in candidates]
        best_idx = int(np.argmin(values))
        best_val, best_V = values[best_idx], candidates[best_idx]
        rng_ref = substream(cfg.seed, "refine", label, str(n))
        for step in range(cfg.refine_steps):
            eta = 0.5 * 0.93 ** step
            trial = _orth(best_V + eta * rng_ref.standard_normal(best_V.shape))
            val = score(trial)
            if val < best_val:
                best_val, best_V = val, trial
        best_val = min(best_val, estimates[-1].value / scale)
        best_q_basis = best_V
        estimates.append(WidthEstimate(value=scale * best_val, kind="upper",
                                       method="search", n=n, target_q=q))
    return estimates


def numeric_width_upper(body, n: int, q: float,
                        cfg: SearchConfig = SearchConfig()) -> WidthEstimate:
    """Numeric upper estimate of d_n(body, l_q^N) by subspace search."""
    return numeric_width_profile(body, n, q, cfg)[n]


_ORACLE_N_CAP = 5
_ORACLE_RANK_CAP = 2
_ORACLE_REL_TOL = 0.02


def brute_force_width_oracle(body, n: int, q: float,
                             cfg: SearchConfig | None = None) -> WidthEstimate:
    """Near-exact width of a tiny body by exhaustive multi-start optimization.

    Capped at N <= 5 and n <= 2.  Samples the body densely (exhaustively for
    the polytope cases), then polishes the best multi-start subspaces with a
    derivative-free optimizer over frame entries.  The reported tolerance is
    the design target of the search budget, validated against closed forms in
    the test suite.
    """
    if body.N > _ORACLE_N_CAP or n > _ORACLE_RANK_CAP:
        raise SizeLimitError(
            f"oracle domain is N <= {_ORACLE_N_CAP}, n <= {_ORACLE_RANK_CAP}; "
            f"got N={body.N}, n={n}")
    _check_Nn(body.N, n)
    if cfg is None:
        cfg = SearchConfig(seed=0, restarts=24, samples_per_eval=4000,
                           refine_steps=60)
    scale, nb = _normalized(body)
    X = sample_extreme_points(nb, cfg.samples_per_eval, seed=cfg.seed)
    N = body.N
    if n == 0:
        value = scale * _max_distance(X, None, q)
        return WidthEstimate(value=value, kind="estimate", method="oracle",
                             n=n, target_q=q, rel_tol=_ORACLE_REL_TOL)
    if n >= N:
        return WidthEstimate(value=0.0, kind="exact", method="full-rank",
                             n=n, target_q=q, rel_tol=0.0)
    label = _body_label(nb)
    starts: list[np.ndarray] = []
    for S in itertools.combinations(range(N), n):
        starts.append(np.eye(N)[:, list(S)])
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=N)))
    rng = substream(cfg.seed, "oracle-signs", label, str(n))
    for _ in range(min(40, len(signs) ** n)):
        cols = signs[rng.integers(0, len(signs), size=n)].T
        V = _orth(cols)
        if V.shape[1] == n:
            starts.append(V)
    rng_f = substream(cfg.seed, "oracle-frames", label, str(n))
    for _ in range(cfg.restarts):
        starts.append(_orth(rng_f.standard_normal((N, n))))

    def objective(flat: np.ndarray) -> float:
        V = _orth(flat.reshape(N, n))
        return _max_distance(X, V, q, tol=cfg.tolerance)

    scored = sorted(((objective(V.reshape(-1)), i) for i, V in enumerate(starts)))
    best_val = scored[0][0]
    best_flat = starts[scored[0][1]].reshape(-1)
    for _, idx in scored[:3]:
        res = minimize(objective, starts[idx].reshape(-1),
                       method="Nelder-Mead",
                       options={"maxiter": 150 * N * n, "xatol": 1e-9,
                                "fatol": 1e-9})
        if res.fun < best_val:
            best_val, best_flat = float(res.fun), res.x
    rng_r = substream(cfg.seed, "oracle-refine", label, str(n))
    for step in range(cfg.refine_steps):
        eta = 0.3 * 0.9 ** step
        trial = best_flat + eta * rng_r.standard_normal(best_flat.shape)
        val = objective(trial)
        if val < best_val:
            best_val, best_flat = val, trial
    return WidthEstimate(value=scale * best_val, kind="estimate",
                         method="oracle", n=n, target_q=q,
                         rel_tol=_ORACLE_REL_TOL)


def _check_Nn(N: int, n: int) -> None:
    if not (isinstance(N, int) and N >= 1):
        raise SchemaError(f"N must be an integer >= 1, got {N!r}")
    if not (isinstance(n, int) and 0 <= n <= N):
        raise SchemaError(f"n must be an integer in [0, N], got {n!r}")
