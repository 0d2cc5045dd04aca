"""Predicted width-order exponents for two-constraint weighted smoothness classes.

A class here is a set of functions on a domain with a singularity set (or an
unbounded direction) cut by two constraints: a weighted norm of the highest
derivative and a weighted zero-order norm.  Approximation error is measured in
a third weighted Lebesgue norm.  For each such class the large-budget behavior
of the Kolmogorov width is an exact power of the budget, and the exponent is
the strict minimum of a short list of candidates that depends only on a few
scaling parameters.

The module has three layers:

* a reduction of every supported problem family to four abstract scaling
  parameters (``AbstractParams``) plus the three integrability exponents,
* the two candidate exponents built from those parameters and their expansion
  into the per-regime candidate list (``exponent_profile``),
* per-family closed forms (``concrete_exponents``) written independently of
  the abstract route, so the two can be checked against each other.

Hypothesis checking never raises on a failed inequality; failures are entries
in the returned report and callers decide what to do with them.
"""

import json
import math
import sys
from dataclasses import dataclass

from .errors import DegenerateParameterError, SchemaError

__all__ = [
    "INF",
    "recip",
    "SpaceParams",
    "SobolevProblem",
    "AbstractParams",
    "ExponentPair",
    "ExponentProfile",
    "Condition",
    "HypothesisReport",
    "Prediction",
    "abstract_exponents",
    "abstract_denominator",
    "problem_to_abstract",
    "concrete_exponents",
    "exponent_profile",
    "check_hypotheses",
    "abstract_conditions",
    "predicted_width_exponent",
    "problem_to_dict",
    "problem_from_dict",
    "load_problem",
]

INF = math.inf

# Candidate lists closer than this are treated as tied (no strict minimizer).
DEFAULT_TIE_TOL = 1e-12


def recip(p: float) -> float:
    """1/p with the exact convention 1/inf = 0."""
    if p == INF:
        return 0.0
    return 1.0 / p


@dataclass(frozen=True)
class SpaceParams:
    """Integrability exponents: p0 for the zero-order constraint, p1 for the
    derivative constraint, q for the error norm.  p0, p1 in (1, inf], q in
    (1, inf)."""

    p0: float
    p1: float
    q: float

    def __post_init__(self):
        for name, value in (("p0", self.p0), ("p1", self.p1)):
            if not (value > 1.0):
                raise SchemaError(f"{name} must lie in (1, inf], got {value!r}")
        if not (1.0 < self.q < INF):
            raise SchemaError(f"q must lie in (1, inf), got {self.q!r}")


@dataclass(frozen=True)
class ExponentPair:
    """The two candidate width exponents."""

    theta_tilde: float
    theta_hat: float


@dataclass(frozen=True)
class AbstractParams:
    """Scaling parameters of the multi-scale machinery.

    s_star: smoothness-to-dimension ratio driving per-cell approximation.
    gamma_star: growth exponent of the per-ring piece count.
    alpha_star: decay rate of the zero-order embedding along rings.
    mu_star: growth rate of the per-cell projection error along rings.
    k_star, c, t0, r0 enter constants only and default to the trivial values.
    """

    s_star: float
    gamma_star: float
    alpha_star: float
    mu_star: float
    k_star: int = 1
    c: float = 1.0
    t0: int = 0
    r0: int = 1

    def __post_init__(self):
        if not (self.s_star > 0.0):
            raise SchemaError(f"s_star must be positive, got {self.s_star!r}")
        if self.gamma_star < 0.0:
            raise SchemaError(f"gamma_star must be >= 0, got {self.gamma_star!r}")
        if not (isinstance(self.k_star, int) and self.k_star >= 1):
            raise SchemaError(f"k_star must be an integer >= 1, got {self.k_star!r}")
        if not (self.c >= 1.0):
            raise SchemaError(f"c must be >= 1, got {self.c!r}")
        if not (isinstance(self.t0, int) and self.t0 >= 0):
            raise SchemaError(f"t0 must be an integer >= 0, got {self.t0!r}")
        if not (isinstance(self.r0, int) and self.r0 >= 1):
            raise SchemaError(f"r0 must be an integer >= 1, got {self.r0!r}")


_KINDS = ("power_hset", "log_hset", "power_rd")

# Exact couplings the log-weight family must satisfy between the power parts
# of its weights and the integrability exponents.
_LOG_RELATION_TOL = 1e-12


@dataclass(frozen=True)
class SobolevProblem:
    """A concrete weighted smoothness class.

    kind selects the family:
      power_hset: bounded domain, power weights in the distance to a compact
        singularity set of scaling dimension theta.
      log_hset: as above with logarithmic factors on all weights; the power
        parts are pinned to the critical couplings, so the log exponents
        (gamma, mu, alpha, nu) drive the widths.
      power_rd: the whole space with power weights in 1+|x|.

    Weight conventions (distance rho = dist to the singularity set, or
    rho = 1+|x| for power_rd): derivative weight g = rho^-beta (times
    |log rho|^mu for log_hset), zero-order weight w = rho^-sigma (times
    |log rho|^alpha), error weight v = rho^-lambda (times |log rho|^nu).
    For power_rd the signs flow the other way: g = rho^beta, w = rho^sigma,
    v = rho^lambda.
    """

    kind: str
    r: int
    d: int
    space: SpaceParams
    theta: float = 0.0
    beta: float | None = None
    sigma: float | None = None
    lam: float | None = None
    gamma: float | None = None
    mu: float | None = None
    alpha: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"unknown problem kind {self.kind!r}")
        if not (isinstance(self.r, int) and self.r >= 1):
            raise SchemaError(f"r must be an integer >= 1, got {self.r!r}")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise SchemaError(f"d must be an integer >= 1, got {self.d!r}")
        required = {
            "power_hset": ("beta", "sigma", "lam"),
            "log_hset": ("gamma", "mu", "alpha", "nu", "beta", "sigma", "lam"),
            "power_rd": ("beta", "sigma", "lam"),
        }[self.kind]
        for name in required:
            if getattr(self, name) is None:
                raise SchemaError(f"{self.kind} problem requires {name}")
        if self.kind == "power_hset":
            if not (0.0 <= self.theta < self.d):
                raise SchemaError(
                    f"theta must lie in [0, d), got {self.theta!r} with d={self.d}"
                )
        if self.kind == "log_hset":
            if self.gamma < 0.0:
                raise SchemaError(f"gamma must be >= 0, got {self.gamma!r}")
            ip0, ip1, iq = (recip(self.space.p0), recip(self.space.p1), recip(self.space.q))
            res_g = self.beta + self.lam - (self.r + self.d * iq - self.d * ip1)
            res_w = (self.sigma - self.lam) - (self.d * ip0 - self.d * iq)
            if abs(res_g) > _LOG_RELATION_TOL or abs(res_w) > _LOG_RELATION_TOL:
                raise SchemaError(
                    "log_hset power parts must satisfy the critical couplings "
                    "beta+lambda = r+d/q-d/p1 and sigma-lambda = d/p0-d/q "
                    f"(residuals {res_g:.3e}, {res_w:.3e})"
                )

    @classmethod
    def power_hset(cls, r, d, space, theta, beta, sigma, lam):
        return cls(kind="power_hset", r=r, d=d, space=space, theta=theta,
                   beta=beta, sigma=sigma, lam=lam)

    @classmethod
    def log_hset(cls, r, d, space, gamma, mu, alpha, nu, lam=0.0):
        """Build a log-weight problem; the power parts beta, sigma are derived
        from lam via the critical couplings."""
        ip0, ip1, iq = recip(space.p0), recip(space.p1), recip(space.q)
        beta = r + d * iq - d * ip1 - lam
        sigma = d * ip0 - d * iq + lam
        return cls(kind="log_hset", r=r, d=d, space=space, gamma=gamma, mu=mu,
                   alpha=alpha, nu=nu, beta=beta, sigma=sigma, lam=lam)

    @classmethod
    def power_rd(cls, r, d, space, beta, sigma, lam):
        return cls(kind="power_rd", r=r, d=d, space=space,
                   beta=beta, sigma=sigma, lam=lam)


def abstract_denominator(a: AbstractParams, s: SpaceParams) -> float:
    """Shared denominator of the two candidate exponents."""
    return a.mu_star + a.alpha_star + a.gamma_star * (
        a.s_star + recip(s.p0) - recip(s.p1)
    )


def abstract_exponents(a: AbstractParams, s: SpaceParams) -> ExponentPair:
    """Candidate exponents from the abstract scaling parameters.

    Raises DegenerateParameterError when the shared denominator vanishes.
    """
    den = abstract_denominator(a, s)
    if den == 0.0:
        raise DegenerateParameterError(
            "exponent denominator mu*+alpha*+gamma*(s*+1/p0-1/p1) vanishes"
        )
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    theta_tilde = a.s_star * (a.alpha_star + a.gamma_star * ip0 - a.gamma_star * iq) / den
    theta_hat = (
        a.alpha_star * (a.s_star + iq - ip1) + a.mu_star * (iq - ip0)
    ) / den
    return ExponentPair(theta_tilde=theta_tilde, theta_hat=theta_hat)


def problem_to_abstract(p: SobolevProblem, *, c: float = 1.0, t0: int = 0,
                        r0: int | None = None) -> AbstractParams:
    """Scaling parameters of a concrete problem.

    r0 defaults to the dimension of the local polynomial space, i.e. the
    number of monomials of degree < r in d variables.
    """
    s = p.space
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    s_star = p.r / p.d
    if r0 is None:
        r0 = math.comb(p.r - 1 + p.d, p.d)
    if p.kind == "power_hset":
        gamma_star = p.theta
        mu_star = p.beta + p.lam - p.r - p.d * iq + p.d * ip1
        alpha_star = p.sigma - p.lam + p.d * iq - p.d * ip0
    elif p.kind == "log_hset":
        gamma_star = p.gamma + 1.0
        mu_star = p.mu + p.nu
        alpha_star = p.alpha - p.nu
    else:  # power_rd
        gamma_star = 0.0
        mu_star = p.beta + p.lam + p.r + p.d * iq - p.d * ip1
        alpha_star = p.sigma - p.lam + p.d * ip0 - p.d * iq
    return AbstractParams(s_star=s_star, gamma_star=gamma_star,
                          alpha_star=alpha_star, mu_star=mu_star,
                          k_star=1, c=c, t0=t0, r0=r0)


def _concrete_denominator(p: SobolevProblem) -> float:
    s = p.space
    ip0, ip1 = recip(s.p0), recip(s.p1)
    if p.kind == "power_hset":
        return p.beta + p.sigma - (p.r + p.d * ip0 - p.d * ip1) * (1.0 - p.theta / p.d)
    if p.kind == "log_hset":
        return p.mu + p.alpha + (p.gamma + 1.0) * (p.r / p.d + ip0 - ip1)
    return p.beta + p.sigma + p.r + p.d * ip0 - p.d * ip1


def concrete_exponents(p: SobolevProblem) -> ExponentPair:
    """Candidate exponents straight from the per-family closed forms.

    Deliberately does not go through problem_to_abstract; agreement of the two
    routes is a library invariant checked by the test suite.
    """
    s = p.space
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    sd = p.r / p.d
    den = _concrete_denominator(p)
    if den == 0.0:
        raise DegenerateParameterError(
            f"{p.kind} exponent denominator vanishes for these parameters"
        )
    if p.kind == "power_hset":
        dt = p.d - p.theta
        tt = sd * (p.sigma - p.lam + dt * iq - dt * ip0) / den
        th = (
            p.sigma * (sd + iq - ip1)
            + p.beta * (iq - ip0)
            - p.lam * (sd + ip0 - ip1)
        ) / den
    elif p.kind == "log_hset":
        g1 = p.gamma + 1.0
        tt = sd * (p.alpha - p.nu + g1 * (ip0 - iq)) / den
        th = (
            p.alpha * (sd + iq - ip1)
            + p.mu * (iq - ip0)
            - p.nu * (sd + ip0 - ip1)
        ) / den
    else:  # power_rd
        tt = sd * (p.sigma - p.lam + p.d * ip0 - p.d * iq) / den
        th = (
            p.sigma * (sd + iq - ip1)
            + p.beta * (iq - ip0)
            - p.lam * (sd + ip0 - ip1)
        ) / den
    return ExponentPair(theta_tilde=tt, theta_hat=th)


@dataclass(frozen=True)
class ExponentProfile:
    """Candidate exponent list for one integrability regime.

    case_id identifies the regime (1..9), thetas is the ordered candidate
    list, j_star the 1-based index of the strict minimizer or None on a tie,
    theta_star the minimizing value or None, min_positive_gap the smallest
    nonzero spacing of the list (None when all candidates coincide).
    """

    case_id: int
    thetas: tuple[float, ...]
    j_star: int | None
    theta_star: float | None
    min_positive_gap: float | None


def _matching_cases(s: SpaceParams) -> list[int]:
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    out = []
    if ip0 <= iq and ip1 <= iq:
        out.append(1)
    if ip0 < iq and ip1 > iq and iq >= 0.5:
        out.append(2)
    # cases 3 and 4 include the p0 == q boundary, which no other case covers
    if ip0 <= iq and iq < ip1 <= 0.5:
        out.append(3)
    if ip0 <= iq and ip1 > 0.5 and iq < 0.5:
        out.append(4)
    if ip0 >= iq and ip1 >= iq and iq >= 0.5:
        out.append(5)
    if ip0 > iq and ip1 < iq and iq >= 0.5:
        out.append(6)
    if ip0 > iq and iq < 0.5:
        if ip0 >= 0.5 and ip1 >= 0.5:
            out.append(7)
        if ip0 <= 0.5 and ip1 <= 0.5:
            out.append(8)
        if (ip0 - 0.5) * (ip1 - 0.5) < 0.0:
            out.append(9)
    return out


def _case_thetas(case: int, s: SpaceParams, s_star: float, e: ExponentPair,
                 case8_theta4: str) -> tuple[float, ...]:
    ip1, iq, q = recip(s.p1), recip(s.q), s.q
    tt, th = e.theta_tilde, e.theta_hat
    if case == 1:
        return (s_star, tt)
    if case == 2:
        return (s_star + iq - ip1, tt, th)
    if case == 3:
        return (s_star, q * (s_star + iq - ip1) / 2.0, tt, q * th / 2.0)
    if case == 4:
        return (s_star + 0.5 - ip1, q * (s_star + iq - ip1) / 2.0, tt,
                th + 0.5 - iq, q * th / 2.0)
    if case == 5:
        return (s_star + iq - ip1, th)
    if case == 6:
        return (s_star, tt, th)
    if case == 7:
        return (s_star + 0.5 - ip1, q * (s_star + iq - ip1) / 2.0,
                th + 0.5 - iq, q * th / 2.0)
    if case == 8:
        last = th / 2.0 if case8_theta4 == "as-printed" else q * th / 2.0
        return (s_star, q * (s_star + iq - ip1) / 2.0, tt, last)
    if case == 9:
        return (s_star + min(0.5 - ip1, 0.0), q * (s_star + iq - ip1) / 2.0,
                tt, th + 0.5 - iq, q * th / 2.0)
    raise AssertionError(f"no such case {case}")


def exponent_profile(s: SpaceParams, s_star: float, e: ExponentPair, *,
                     tie_tol: float = DEFAULT_TIE_TOL,
                     case8_theta4: str = "q-scaled") -> ExponentProfile:
    """Expand the candidate pair into the regime's candidate list.

    The nine regimes partition the (p0, p1, q) cube once two boundary
    conventions are fixed: the two regimes with p1 < q < infinity and q > 2
    absorb the p0 == q face, and where regime predicates overlap (only on
    faces where their candidate lists provably coincide) the lowest-numbered
    regime is reported.  case8_theta4 switches the last candidate of regime 8
    between the scale-consistent value (default, "q-scaled") and the weaker
    "as-printed" variant.
    """
    if case8_theta4 not in ("q-scaled", "as-printed"):
        raise SchemaError(f"case8_theta4 must be 'q-scaled' or 'as-printed', "
                          f"got {case8_theta4!r}")
    if not (s_star > 0.0):
        raise SchemaError(f"s_star must be positive, got {s_star!r}")
    matches = _matching_cases(s)
    if not matches:
        raise AssertionError(
            f"regime selection gap at p0={s.p0}, p1={s.p1}, q={s.q}")
    lists = [
        _case_thetas(case, s, s_star, e, case8_theta4) for case in matches
    ]
    if len(matches) > 1:
        base = lists[0]
        for other in lists[1:]:
            same = len(other) == len(base) and all(
                math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-9)
                for x, y in zip(base, other)
            )
            if not same and not (case8_theta4 == "as-printed"
                                 and set(matches) == {7, 8}):
                raise AssertionError(
                    f"overlapping regimes {matches} disagree at "
                    f"p0={s.p0}, p1={s.p1}, q={s.q}: {lists}")
    case = matches[0]
    thetas = lists[0]
    order = sorted(range(len(thetas)), key=thetas.__getitem__)
    j_star = order[0] + 1
    theta_star = thetas[order[0]]
    if len(thetas) > 1 and thetas[order[1]] - theta_star <= tie_tol:
        j_star = None
        theta_star = None
    gaps = sorted(
        abs(thetas[i] - thetas[j])
        for i in range(len(thetas))
        for j in range(i + 1, len(thetas))
        if abs(thetas[i] - thetas[j]) > 0.0
    )
    return ExponentProfile(case_id=case, thetas=thetas, j_star=j_star,
                           theta_star=theta_star,
                           min_positive_gap=gaps[0] if gaps else None)


@dataclass(frozen=True)
class Condition:
    """One checked inequality: its name, the evaluated left side (the
    requirement is value > 0 unless noted), and whether it holds."""

    name: str
    value: float
    passed: bool


@dataclass(frozen=True)
class HypothesisReport:
    entries: tuple[Condition, ...]
    overall: bool

    def entry(self, name: str) -> Condition:
        for c in self.entries:
            if c.name == name:
                return c
        raise KeyError(name)


def _report(entries: list[Condition]) -> HypothesisReport:
    return HypothesisReport(entries=tuple(entries),
                            overall=all(c.passed for c in entries))


def abstract_conditions(a: AbstractParams, s: SpaceParams, *,
                        tie_tol: float = DEFAULT_TIE_TOL,
                        case8_theta4: str = "q-scaled") -> HypothesisReport:
    """Hypothesis report at the abstract-parameter level."""
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    entries = []

    def add(name, value):
        entries.append(Condition(name, value, value > 0.0))

    add("smoothness_margin", a.s_star + min(iq, ip0) - ip1)
    add("balance_mixed", a.mu_star + a.alpha_star
        + a.gamma_star * (ip0 - ip1))
    add("balance_plain", a.mu_star + a.alpha_star)
    den = abstract_denominator(a, s)
    add("exponents_defined", den)
    if den > 0.0:
        pair = abstract_exponents(a, s)
        if ip0 <= iq:
            add("theta_tilde_positive", pair.theta_tilde)
        else:
            add("theta_hat_positive", pair.theta_hat)
        if ip0 <= iq:
            add("ring_tail_decay", a.alpha_star - a.gamma_star * (iq - ip0))
        if (ip0 >= iq and ip1 >= iq) or (ip0 > iq and ip1 < iq):
            add("deep_tail_decay",
                a.alpha_star * (a.s_star + iq - ip1)
                - a.mu_star * (ip0 - iq))
        profile = exponent_profile(s, a.s_star, pair, tie_tol=tie_tol,
                                   case8_theta4=case8_theta4)
        gap = 0.0
        if profile.j_star is not None:
            rest = [th for i, th in enumerate(profile.thetas)
                    if i + 1 != profile.j_star]
            gap = min(rest) - profile.theta_star
        entries.append(Condition("strict_minimizer", gap,
                                 profile.j_star is not None))
    return _report(entries)


def check_hypotheses(p: SobolevProblem, *, tie_tol: float = DEFAULT_TIE_TOL,
                     case8_theta4: str = "q-scaled") -> HypothesisReport:
    """Evaluate every inequality the width prediction rests on.

    Failed inequalities are report entries, never exceptions; overall is the
    conjunction.  The entries use the concrete per-family forms; they agree
    with the abstract-side conditions under the parameter reduction.
    """
    s = p.space
    ip0, ip1, iq = recip(s.p0), recip(s.p1), recip(s.q)
    sd = p.r / p.d
    entries = []

    def add(name, value):
        entries.append(Condition(name, value, value > 0.0))

    add("smoothness_margin", sd + min(iq, ip0) - ip1)
    if p.kind == "power_hset":
        dt = p.d - p.theta
        add("weight_sum_ring",
            p.beta + p.sigma - p.r - dt * ip0 + dt * ip1)
        add("weight_sum_plain",
            p.beta + p.sigma - p.r - p.d * ip0 + p.d * ip1)
    elif p.kind == "log_hset":
        add("log_balance_mixed",
            p.mu + p.alpha + (p.gamma + 1.0) * (ip0 - ip1))
        add("log_balance_plain", p.mu + p.alpha)
    else:
        add("weight_sum_line",
            p.beta + p.sigma + p.r + p.d * ip0 - p.d * ip1)
    den = _concrete_denominator(p)
    add("exponents_defined", den)
    if den > 0.0:
        pair = concrete_exponents(p)
        if ip0 <= iq:
            add("theta_tilde_positive", pair.theta_tilde)
        else:
            add("theta_hat_positive", pair.theta_hat)
        a = problem_to_abstract(p)
        if ip0 <= iq:
            add("ring_tail_decay",
                a.alpha_star - a.gamma_star * (iq - ip0))
        if (ip0 >= iq and ip1 >= iq) or (ip0 > iq and ip1 < iq):
            add("deep_tail_decay",
                a.alpha_star * (a.s_star + iq - ip1)
                - a.mu_star * (ip0 - iq))
        profile = exponent_profile(s, sd, pair, tie_tol=tie_tol,
                                   case8_theta4=case8_theta4)
        gap = 0.0
        if profile.j_star is not None:
            rest = [th for i, th in enumerate(profile.thetas)
                    if i + 1 != profile.j_star]
            gap = min(rest) - profile.theta_star
        entries.append(Condition("strict_minimizer", gap,
                                 profile.j_star is not None))
    return _report(entries)


@dataclass(frozen=True)
class Prediction:
    """Outcome of a width-exponent prediction.

    theta_star is None when the hypotheses fail or the candidate list has no
    strict minimizer; reason then says why, and the report carries the
    line-item breakdown either way.
    """

    theta_star: float | None
    profile: ExponentProfile | None
    report: HypothesisReport
    reason: str | None = None


def predicted_width_exponent(p: SobolevProblem, *,
                             tie_tol: float = DEFAULT_TIE_TOL,
                             case8_theta4: str = "q-scaled") -> Prediction:
    """Predicted width-order exponent with its supporting evidence."""
    report = check_hypotheses(p, tie_tol=tie_tol, case8_theta4=case8_theta4)
    try:
        pair = concrete_exponents(p)
    except DegenerateParameterError:
        return Prediction(theta_star=None, profile=None, report=report,
                          reason="exponent denominator vanishes")
    profile = exponent_profile(p.space, p.r / p.d, pair, tie_tol=tie_tol,
                               case8_theta4=case8_theta4)
    if not report.overall:
        failed = [c.name for c in report.entries if not c.passed]
        return Prediction(theta_star=None, profile=profile, report=report,
                          reason="hypotheses failed: " + ", ".join(failed))
    return Prediction(theta_star=profile.theta_star, profile=profile,
                      report=report)


# --- JSON wire format -------------------------------------------------------

_COMMON_KEYS = {"kind", "r", "d", "p0", "p1", "q"}
_KIND_KEYS = {
    "power_hset": {"theta", "beta", "sigma", "lambda"},
    "log_hset": {"gamma", "mu", "alpha", "nu", "beta", "sigma", "lambda"},
    "power_rd": {"beta", "sigma", "lambda"},
}


def _num_out(x: float):
    return "inf" if x == INF else x


def _num_in(x, name: str) -> float:
    if x == "inf":
        return INF
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    raise SchemaError(f"field {name!r} must be a number or 'inf', got {x!r}")


def problem_to_dict(p: SobolevProblem) -> dict:
    out = {
        "kind": p.kind,
        "r": p.r,
        "d": p.d,
        "p0": _num_out(p.space.p0),
        "p1": _num_out(p.space.p1),
        "q": p.space.q,
    }
    if p.kind == "power_hset":
        out.update(theta=p.theta, beta=p.beta, sigma=p.sigma)
        out["lambda"] = p.lam
    elif p.kind == "log_hset":
        out.update(gamma=p.gamma, mu=p.mu, alpha=p.alpha, nu=p.nu,
                   beta=p.beta, sigma=p.sigma)
        out["lambda"] = p.lam
    else:
        out.update(beta=p.beta, sigma=p.sigma)
        out["lambda"] = p.lam
    return out


def problem_from_dict(data: dict) -> SobolevProblem:
    if not isinstance(data, dict):
        raise SchemaError("problem document must be a JSON object")
    kind = data.get("kind")
    if kind not in _KINDS:
        raise SchemaError(f"unknown or missing problem kind {kind!r}")
    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"unknown fields for {kind}: {sorted(unknown)}")
    missing = allowed - set(data)
    if kind == "power_hset":
        missing -= {"theta"}  # theta defaults to 0
    if missing:
        raise SchemaError(f"missing fields for {kind}: {sorted(missing)}")
    for name in ("r", "d"):
        if not isinstance(data[name], int) or isinstance(data[name], bool):
            raise SchemaError(f"field {name!r} must be an integer")
    space = SpaceParams(p0=_num_in(data["p0"], "p0"),
                        p1=_num_in(data["p1"], "p1"),
                        q=_num_in(data["q"], "q"))
    kwargs = dict(kind=kind, r=data["r"], d=data["d"], space=space)
    for name in _KIND_KEYS[kind]:
        if name == "lambda":
            kwargs["lam"] = float(data["lambda"])
        elif name == "theta":
            kwargs["theta"] = float(data.get("theta", 0.0))
        else:
            kwargs[name] = float(data[name])
    return SobolevProblem(**kwargs)


def load_problem(path: str) -> SobolevProblem:
    try:
        if path == "-":
            data = json.load(sys.stdin)
        else:
            with open(path) as fh:
                data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read problem file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"problem file {path} is not valid JSON: {exc}") from exc
    return problem_from_dict(data)
