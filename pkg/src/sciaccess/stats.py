"""Pearson r, one-way ANOVA and Kruskal-Wallis H, with their p-values.

Tail probabilities come from the regularized incomplete beta and gamma
functions, evaluated by continued fractions (modified Lentz) or series.
"""

import math
from dataclasses import dataclass

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class StatResult:
    name: str
    value: float
    p_value: float | None
    n: tuple
    dof: tuple = ()

    def to_json(self):
        return {"statistic": self.name, "value": self.value, "p_value": self.p_value,
                "n": list(self.n), "dof": list(self.dof)}


# -- special functions --------------------------------------------------------


def _beta_cf(a, b, x):
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _gamma_series(a, x):
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError("incomplete gamma series did not converge")


def _gamma_cf(a, x):
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = d if abs(d) > _TINY else _TINY
        c = b + an / c
        c = c if abs(c) > _TINY else _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError("incomplete gamma continued fraction did not converge")


def gammaincc(a, x):
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def t_two_sided_p(t, dof):
    if math.isinf(t):
        return 0.0
    return betainc(dof / 2.0, 0.5, dof / (dof + t * t))


def f_sf(f, dfn, dfd):
    if math.isinf(f):
        return 0.0
    if f <= 0:
        return 1.0
    return betainc(dfd / 2.0, dfn / 2.0, dfd / (dfd + dfn * f))


def chi2_sf(x, dof):
    return gammaincc(dof / 2.0, x / 2.0)


# -- statistics ---------------------------------------------------------------


def pearson_r(x, y):
    x, y = [float(v) for v in x], [float(v) for v in y]
    n = len(x)
    if n != len(y):
        raise ValueError(f"length mismatch: {n} != {len(y)}")
    if n < 3:
        raise DegenerateInput("pearson_r needs at least 3 points")
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    dof = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        p = t_two_sided_p(r * math.sqrt(dof / (1.0 - r * r)), dof)
    return StatResult("PearsonR", r, p, (n,), (dof,))


def _check_groups(groups):
    groups = [[float(v) for v in g] for g in groups]
    if len(groups) < 2:
        raise DegenerateInput("need at least two groups")
    if any(len(g) == 0 for g in groups):
        raise DegenerateInput("empty group")
    return groups


def anova_f(groups):
    """One-way ANOVA F with (k - 1, N - k) degrees of freedom."""
    groups = _check_groups(groups)
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    if n_total <= k:
        raise DegenerateInput("total sample size must exceed the number of groups")
    grand = math.fsum(v for g in groups for v in g) / n_total
    means = [math.fsum(g) / len(g) for g in groups]
    ss_between = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ss_within = math.fsum((v - m) ** 2 for g, m in zip(groups, means) for v in g)
    dfn, dfd = k - 1, n_total - k
    sizes = tuple(len(g) for g in groups)
    if ss_within == 0:
        if ss_between == 0:
            raise DegenerateInput("no variance within or between groups")
        return StatResult("AnovaF", math.inf, 0.0, sizes, (dfn, dfd))
    f = (ss_between / dfn) / (ss_within / dfd)
    return StatResult("AnovaF", f, f_sf(f, dfn, dfd), sizes, (dfn, dfd))


def average_ranks(values):
    """1-based ranks, ties sharing the mean of the ranks they span."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = shared
        i = j + 1
    return ranks


def kruskal_wallis_h(groups):
    """Tie-corrected Kruskal-Wallis H; p from chi-squared with k - 1 dof."""
    groups = _check_groups(groups)
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = average_ranks(pooled)
    counts = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    tie_sum = math.fsum(t ** 3 - t for t in counts.values())
    correction = 1.0 - tie_sum / (n ** 3 - n)
    if correction <= 0:
        raise DegenerateInput("all values identical")
    pos, terms = 0, []
    for g in groups:
        r = math.fsum(ranks[pos:pos + len(g)])
        terms.append(r * r / len(g))
        pos += len(g)
    total = math.fsum(terms)
    h = (12.0 / (n * (n + 1)) * total - 3.0 * (n + 1)) / correction
    h = max(h, 0.0)
    dof = len(groups) - 1
    return StatResult("KruskalWallisH", h, chi2_sf(h, dof), tuple(len(g) for g in groups), (dof,))
