"""Confidence intervals and sequences for adjustment-identified causal effects.

Every construction returns a midpoint and a half-width.  Midpoints are
plug-in adjustment formulas evaluated with either the full-sample
empirical estimates or the dyadic-prefix estimates (the estimate over the
first ``dyadic_floor(count)`` occurrences of the conditioning pattern).
Half-widths are sums of per-estimate concentration radii, one radius per
occurrence of the estimate in the expanded adjustment polynomial, with the
level split across the distinct estimated probabilities:

* back-door, IID data, fixed n: Hoeffding radii at level delta/(2|Z|),
* front-door, IID data, fixed n: Hoeffding radii at level delta/K where
  K = |X||Z| + |X| + |Z| counts the distinct estimated probabilities,
* adaptive treatment (each treatment may depend on the whole observed
  past), fixed horizon: the estimates conditioned on treatment-dependent
  patterns switch to dyadic-prefix estimates with iterated-logarithm
  radii; marginals of exogenous variables keep Hoeffding radii,
* anytime-valid: every estimate is a dyadic-prefix estimate with an
  iterated-logarithm radius, and the per-time intervals form a confidence
  sequence (their running intersection retains the coverage level).

In the fully binary single-covariate case the back-door level split needs
only three estimated probabilities, which tightens the logarithm
constants (6 instead of 4|Z| for Hoeffding radii; 10 instead of 6.6|Z|
for iterated-logarithm radii); ``binary_toy`` selects those constants.

Conventions: an estimate whose conditioning pattern has count zero
contributes factor 0 to the midpoint, and its radius is unbounded, so
the realized interval is [0,1].  Iterated-logarithm radii are unbounded
until the conditioning count reaches 2.  Half-width terms are summed
left to right in the order the formulas above list them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import TYPE_CHECKING

from .bounds import hoeffding_term, lil_term
from .counts import CountTable, dyadic_floor
from .intervals import ProbInterval, Var, eval_expr

if TYPE_CHECKING:
    from .simulator import CausalModel

CRITERIA = ('backdoor', 'frontdoor')
REGIMES = ('iid', 'adaptive-fixed', 'anytime')
FRONTDOOR_FORMS = ('expanded', 'horner-z', 'horner-x')


@dataclass(frozen=True)
class EffectQuery:
    """What to estimate and under which sampling regime."""

    criterion: str
    x: object
    y: object
    delta: float
    regime: str = 'iid'
    binary_toy: bool = False
    frontdoor_form: str = 'expanded'

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        if self.frontdoor_form not in FRONTDOOR_FORMS:
            raise ValueError(f"frontdoor_form must be one of {FRONTDOOR_FORMS}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.binary_toy and self.criterion != 'backdoor':
            raise ValueError("the tightened binary constants exist only for "
                             "the back-door construction")
        if self.frontdoor_form != 'expanded' and self.criterion != 'frontdoor':
            raise ValueError("frontdoor_form applies only to the front-door criterion")
        if self.frontdoor_form != 'expanded' and self.regime != 'iid':
            raise ValueError("the Horner width variants exist only for the "
                             "fixed-n IID construction")


@dataclass(frozen=True)
class DomainSizes:
    card_x: int
    card_z: int

    @property
    def k(self) -> int:
        """Number of distinct estimated probabilities in the front-door
        formula: |X||Z| + |X| + |Z| = (|X|+1)(|Z|+1) - 1."""
        return self.card_x * self.card_z + self.card_x + self.card_z

    @classmethod
    def from_table(cls, table: CountTable) -> "DomainSizes":
        return cls(len(table.x_domain), len(table.z_values))


@dataclass(frozen=True)
class EffectInterval:
    """A single confidence interval/sequence element, clipped to [0,1]."""

    n: int
    midpoint: float
    halfwidth: float
    lower: float
    upper: float
    constants: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, n: int, midpoint: float, halfwidth: float,
              constants: dict | None = None) -> "EffectInterval":
        return cls(n=n, midpoint=midpoint, halfwidth=halfwidth,
                   lower=max(0.0, midpoint - halfwidth),
                   upper=min(1.0, midpoint + halfwidth),
                   constants=constants or {})

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.halfwidth)

    def contains(self, p: float) -> bool:
        return self.lower <= p <= self.upper


def _require(query: EffectQuery, criterion: str, regime: str) -> None:
    if query.criterion != criterion or query.regime != regime:
        raise ValueError(f"query is for {query.criterion}/{query.regime}, "
                         f"expected {criterion}/{regime}")


def _require_binary(table: CountTable) -> None:
    if (len(table.x_domain), len(table.y_domain)) != (2, 2) \
            or len(table.z_domains) != 1 or len(table.z_domains[0]) != 2:
        raise ValueError("binary_toy needs binary treatment/outcome and a "
                         "single binary covariate")


def _backdoor_ratios(table: CountTable, query: EffectQuery,
                     sizes: DomainSizes) -> tuple[float, str, float, str]:
    """(hoeffding ratio, its label, lil ratio, its label) after the split."""
    if query.binary_toy:
        _require_binary(table)
        return 6.0 / query.delta, "6/delta", 10.0 / query.delta, "10/delta"
    return (4.0 * sizes.card_z / query.delta, "4|Z|/delta",
            6.6 * sizes.card_z / query.delta, "6.6|Z|/delta")


def _zero(v: float | None) -> float:
    return 0.0 if v is None else v


# -- back-door ----------------------------------------------------------------

def backdoor_midpoint_iid(table: CountTable, x, y) -> float:
    """Sum over z of p(y|x,z) * p(z), full-sample estimates; a z-cell that
    never co-occurred with the treatment value contributes 0."""
    if table.n == 0:
        return 0.0
    total = 0.0
    for z in table.z_values:
        cond = table.empirical_estimate({'y': y}, given={'x': x, 'z': z})
        total += _zero(cond) * (table.count(z=z) / table.n)
    return total


def backdoor_ci_iid(table: CountTable, query: EffectQuery) -> EffectInterval:
    _require(query, 'backdoor', 'iid')
    sizes = DomainSizes.from_table(table)
    ratio, label, _, _ = _backdoor_ratios(table, query, sizes)
    mid = backdoor_midpoint_iid(table, query.x, query.y)
    hw = sizes.card_z * hoeffding_term(table.n, ratio)
    for z in table.z_values:
        hw += hoeffding_term(table.count(x=query.x, z=z), ratio)
    return EffectInterval.build(table.n, mid, hw,
                                {"hoeffding": {"form": label, "value": ratio}})


def backdoor_ci_adaptive(table: CountTable, query: EffectQuery) -> EffectInterval:
    """Fixed horizon, treatments may depend on the whole past: the
    conditional estimates become dyadic-prefix estimates with
    iterated-logarithm radii."""
    _require(query, 'backdoor', 'adaptive-fixed')
    sizes = DomainSizes.from_table(table)
    h_ratio, h_label, l_ratio, l_label = _backdoor_ratios(table, query, sizes)
    mid = 0.0
    if table.n:
        for z in table.z_values:
            cond = table.dyadic_estimate({'y': query.y}, given={'x': query.x, 'z': z})
            mid += (table.count(z=z) / table.n) * _zero(cond)
    hw = sizes.card_z * hoeffding_term(table.n, h_ratio)
    for z in table.z_values:
        hw += lil_term(table.count(x=query.x, z=z), l_ratio)
    return EffectInterval.build(table.n, mid, hw,
                                {"hoeffding": {"form": h_label, "value": h_ratio},
                                 "lil": {"form": l_label, "value": l_ratio}})


def backdoor_cs_anytime(table: CountTable, query: EffectQuery,
                        n: int | None = None) -> EffectInterval:
    """Element of the anytime-valid confidence sequence after n observations
    (default: the whole stream seen so far)."""
    _require(query, 'backdoor', 'anytime')
    n = table.n if n is None else n
    sizes = DomainSizes.from_table(table)
    if query.binary_toy:
        _require_binary(table)
        ratio, label = 10.0 / query.delta, "10/delta"
    else:
        ratio, label = 6.6 * sizes.card_z / query.delta, "6.6|Z|/delta"
    mid = 0.0
    hw = sizes.card_z * lil_term(n, ratio)
    for z in table.z_values:
        marg = table.prefix_dyadic_estimate({'z': z}, {}, n) if n else None
        cond = table.prefix_dyadic_estimate({'y': query.y},
                                            {'x': query.x, 'z': z}, n) if n else None
        mid += _zero(marg) * _zero(cond)
        hw += lil_term(table.count_at(n, x=query.x, z=z) if n else 0, ratio)
    return EffectInterval.build(n, mid, hw, {"lil": {"form": label, "value": ratio}})


# -- front-door ---------------------------------------------------------------

def _frontdoor_midpoint(table: CountTable, x, y, dyadic: bool,
                        anytime_n: int | None = None) -> float:
    """Sum over z of p(z|x~) * sum over x' of p(y|x',z) * p(x'); the three
    estimate families follow the regime (full-sample, dyadic, or
    dyadic-at-prefix)."""
    n = table.n if anytime_n is None else anytime_n
    if n == 0:
        return 0.0

    def d_est(event, given):
        if anytime_n is not None:
            return table.prefix_dyadic_estimate(event, given, n)
        return table.dyadic_estimate(event, given)

    total = 0.0
    for z in table.z_values:
        if dyadic:
            pz = d_est({'z': z}, {'x': x})
        else:
            pz = table.empirical_estimate({'z': z}, given={'x': x})
        inner = 0.0
        for xv in table.x_domain:
            if dyadic:
                py = d_est({'y': y}, {'x': xv, 'z': z})
            else:
                py = table.empirical_estimate({'y': y}, given={'x': xv, 'z': z})
            if anytime_n is not None:
                px = d_est({'x': xv}, {})
            else:
                px = table.count(x=xv) / table.n
            inner += _zero(py) * _zero(px)
        total += _zero(pz) * inner
    return total


def _frontdoor_iid_halfwidth(table: CountTable, x, delta: float,
                             form: str, sizes: DomainSizes) -> float:
    ratio = 2.0 * sizes.k / delta
    cxz = sizes.card_x * sizes.card_z
    if form == 'expanded':
        hw = cxz * hoeffding_term(table.n, ratio)
        hw += cxz * hoeffding_term(table.count(x=x), ratio)
    elif form == 'horner-z':
        hw = cxz * hoeffding_term(table.n, ratio)
        hw += sizes.card_z * hoeffding_term(table.count(x=x), ratio)
    elif form == 'horner-x':
        hw = sizes.card_x * hoeffding_term(table.n, ratio)
        hw += cxz * hoeffding_term(table.count(x=x), ratio)
    else:
        raise ValueError(f"unknown form {form!r}")
    for xv in table.x_domain:
        for z in table.z_values:
            hw += hoeffding_term(table.count(x=xv, z=z), ratio)
    return hw


def frontdoor_ci_iid(table: CountTable, query: EffectQuery) -> EffectInterval:
    _require(query, 'frontdoor', 'iid')
    sizes = DomainSizes.from_table(table)
    ratio = 2.0 * sizes.k / query.delta
    mid = _frontdoor_midpoint(table, query.x, query.y, dyadic=False)
    hw = _frontdoor_iid_halfwidth(table, query.x, query.delta,
                                  query.frontdoor_form, sizes)
    return EffectInterval.build(table.n, mid, hw,
                                {"hoeffding": {"form": "2K/delta", "value": ratio},
                                 "frontdoor_form": query.frontdoor_form})


def frontdoor_halfwidth_variant(table: CountTable, query: EffectQuery) -> float:
    """Half-width alone for the requested front-door form (the three forms
    share their midpoint; their widths differ only in the multiplicities of
    the first two radius families)."""
    _require(query, 'frontdoor', 'iid')
    sizes = DomainSizes.from_table(table)
    return _frontdoor_iid_halfwidth(table, query.x, query.delta,
                                    query.frontdoor_form, sizes)


def frontdoor_ci_adaptive(table: CountTable, query: EffectQuery) -> EffectInterval:
    _require(query, 'frontdoor', 'adaptive-fixed')
    sizes = DomainSizes.from_table(table)
    h_ratio = 2.0 * sizes.k / query.delta
    l_ratio = 3.3 * sizes.k / query.delta
    cxz = sizes.card_x * sizes.card_z
    mid = _frontdoor_midpoint(table, query.x, query.y, dyadic=True)
    hw = cxz * hoeffding_term(table.n, h_ratio)
    hw += cxz * lil_term(table.count(x=query.x), l_ratio)
    for xv in table.x_domain:
        for z in table.z_values:
            hw += lil_term(table.count(x=xv, z=z), l_ratio)
    return EffectInterval.build(table.n, mid, hw,
                                {"hoeffding": {"form": "2K/delta", "value": h_ratio},
                                 "lil": {"form": "3.3K/delta", "value": l_ratio}})


def frontdoor_cs_anytime(table: CountTable, query: EffectQuery,
                         n: int | None = None) -> EffectInterval:
    _require(query, 'frontdoor', 'anytime')
    n = table.n if n is None else n
    sizes = DomainSizes.from_table(table)
    ratio = 3.3 * sizes.k / query.delta
    cxz = sizes.card_x * sizes.card_z
    mid = _frontdoor_midpoint(table, query.x, query.y, dyadic=True, anytime_n=n)
    hw = cxz * lil_term(n, ratio)
    hw += cxz * lil_term(table.count_at(n, x=query.x) if n else 0, ratio)
    for xv in table.x_domain:
        for z in table.z_values:
            hw += lil_term(table.count_at(n, x=xv, z=z) if n else 0, ratio)
    return EffectInterval.build(n, mid, hw,
                                {"lil": {"form": "3.3K/delta", "value": ratio}})


# -- dispatch -----------------------------------------------------------------

def effect_interval(table: CountTable, query: EffectQuery,
                    n: int | None = None) -> EffectInterval:
    """Route a query to the construction for its criterion and regime."""
    if query.regime != 'anytime' and n is not None and n != table.n:
        raise ValueError("a prefix index applies only to the anytime regime")
    if query.criterion == 'backdoor':
        if query.regime == 'iid':
            return backdoor_ci_iid(table, query)
        if query.regime == 'adaptive-fixed':
            return backdoor_ci_adaptive(table, query)
        return backdoor_cs_anytime(table, query, n)
    if query.regime == 'iid':
        return frontdoor_ci_iid(table, query)
    if query.regime == 'adaptive-fixed':
        return frontdoor_ci_adaptive(table, query)
    return frontdoor_cs_anytime(table, query, n)


# -- generic composition route ------------------------------------------------

def interval_via_expression(table: CountTable, query: EffectQuery,
                            n: int | None = None) -> EffectInterval:
    """Rebuild the same interval through the generic machinery: bind every
    estimated probability to midpoint ± radius, form the adjustment
    polynomial as an expression tree, and propagate.  Agrees with the
    direct construction up to floating-point summation order; used as a
    structural cross-check."""
    if query.criterion == 'backdoor':
        expr, bindings = _backdoor_expression(table, query, n)
    else:
        expr, bindings = _frontdoor_expression(table, query, n)
    result = eval_expr(expr, bindings)
    at = table.n if n is None else n
    return EffectInterval.build(at, result.midpoint, result.halfwidth)


def _backdoor_expression(table: CountTable, query: EffectQuery, n: int | None):
    sizes = DomainSizes.from_table(table)
    at = table.n if n is None else n
    regime = query.regime
    if regime == 'anytime':
        if query.binary_toy:
            _require_binary(table)
            l_ratio = 10.0 / query.delta
        else:
            l_ratio = 6.6 * sizes.card_z / query.delta
        h_ratio = None
    else:
        h_ratio, _, l_ratio, _ = _backdoor_ratios(table, query, sizes)

    bindings: dict[str, ProbInterval] = {}
    terms = []
    for i, z in enumerate(table.z_values):
        c_xz = table.count_at(at, x=query.x, z=z) if at else 0
        if regime == 'iid':
            cond = table.empirical_estimate({'y': query.y}, given={'x': query.x, 'z': z}) \
                if at else None
            cond_radius = hoeffding_term(c_xz, h_ratio)
            marg = table.count(z=z) / table.n if at else None
            marg_radius = hoeffding_term(at, h_ratio)
        elif regime == 'adaptive-fixed':
            cond = table.dyadic_estimate({'y': query.y}, given={'x': query.x, 'z': z}) \
                if at else None
            cond_radius = lil_term(c_xz, l_ratio)
            marg = table.count(z=z) / table.n if at else None
            marg_radius = hoeffding_term(at, h_ratio)
        else:
            cond = table.prefix_dyadic_estimate({'y': query.y},
                                                {'x': query.x, 'z': z}, at) if at else None
            cond_radius = lil_term(c_xz, l_ratio)
            marg = table.prefix_dyadic_estimate({'z': z}, {}, at) if at else None
            marg_radius = lil_term(at, l_ratio)
        bindings[f"cond{i}"] = ProbInterval(_zero(cond), cond_radius)
        bindings[f"marg{i}"] = ProbInterval(_zero(marg), marg_radius)
        terms.append(Var(f"cond{i}") * Var(f"marg{i}"))
    return reduce(lambda a, b: a + b, terms), bindings


def _frontdoor_expression(table: CountTable, query: EffectQuery, n: int | None):
    sizes = DomainSizes.from_table(table)
    at = table.n if n is None else n
    regime = query.regime
    h_ratio = 2.0 * sizes.k / query.delta
    l_ratio = 3.3 * sizes.k / query.delta

    def prefix_dyadic(event, given):
        if not at:
            return None
        if regime == 'anytime':
            return table.prefix_dyadic_estimate(event, given, at)
        return table.dyadic_estimate(event, given)

    bindings: dict[str, ProbInterval] = {}
    for i, z in enumerate(table.z_values):
        c = table.count_at(at, x=query.x) if at else 0
        if regime == 'iid':
            est = table.empirical_estimate({'z': z}, given={'x': query.x}) if at else None
            radius = hoeffding_term(c, h_ratio)
        else:
            est = prefix_dyadic({'z': z}, {'x': query.x})
            radius = lil_term(c, l_ratio)
        bindings[f"med{i}"] = ProbInterval(_zero(est), radius)
        for j, xv in enumerate(table.x_domain):
            c_xz = table.count_at(at, x=xv, z=z) if at else 0
            if regime == 'iid':
                est = table.empirical_estimate({'y': query.y},
                                               given={'x': xv, 'z': z}) if at else None
                radius = hoeffding_term(c_xz, h_ratio)
            else:
                est = prefix_dyadic({'y': query.y}, {'x': xv, 'z': z})
                radius = lil_term(c_xz, l_ratio)
            bindings[f"out{i}_{j}"] = ProbInterval(_zero(est), radius)
    for j, xv in enumerate(table.x_domain):
        if regime == 'anytime':
            est = prefix_dyadic({'x': xv}, {})
            radius = lil_term(at, l_ratio)
        else:
            est = table.count(x=xv) / table.n if at else None
            radius = hoeffding_term(at, h_ratio)
        bindings[f"treat{j}"] = ProbInterval(_zero(est), radius)

    nx, nz = len(table.x_domain), len(table.z_values)
    if query.frontdoor_form == 'horner-z':
        terms = [Var(f"med{i}") * reduce(lambda a, b: a + b,
                                         [Var(f"out{i}_{j}") * Var(f"treat{j}")
                                          for j in range(nx)])
                 for i in range(nz)]
    elif query.frontdoor_form == 'horner-x':
        terms = [Var(f"treat{j}") * reduce(lambda a, b: a + b,
                                           [Var(f"out{i}_{j}") * Var(f"med{i}")
                                            for i in range(nz)])
                 for j in range(nx)]
    else:
        terms = [(Var(f"med{i}") * Var(f"out{i}_{j}")) * Var(f"treat{j}")
                 for i in range(nz) for j in range(nx)]
    return reduce(lambda a, b: a + b, terms), bindings


# -- ground-truth oracle -------------------------------------------------------

def true_effect(model: "CausalModel", x, y, criterion: str) -> float:
    """Evaluate the adjustment formula on the model's exact joint law.

    Terms whose marginal weight is exactly zero are dropped; a zero-
    probability conditioning event with positive weight means the formula
    is not evaluable and raises."""
    roles = model.roles
    z_domains = [model.dag.domains[name] for name in roles.z]
    from itertools import product as _product
    z_values = list(_product(*z_domains))

    def z_dict(zv):
        return dict(zip(roles.z, zv))

    if criterion == 'backdoor':
        total = 0.0
        for zv in z_values:
            pz = model.probability(z_dict(zv))
            if pz == 0.0:
                continue
            pxz = model.probability({roles.x: x, **z_dict(zv)})
            if pxz == 0.0:
                raise ValueError(f"P(y|x,z) undefined at z={zv}: the treatment "
                                 "value never occurs there (positivity violated)")
            pyxz = model.probability({roles.x: x, roles.y: y, **z_dict(zv)})
            total += (pyxz / pxz) * pz
        return total
    if criterion == 'frontdoor':
        px_t = model.probability({roles.x: x})
        if px_t == 0.0:
            raise ValueError("the treatment value has probability zero")
        total = 0.0
        for zv in z_values:
            w = model.probability({roles.x: x, **z_dict(zv)}) / px_t
            if w == 0.0:
                continue
            inner = 0.0
            for xv in model.dag.domains[roles.x]:
                px = model.probability({roles.x: xv})
                if px == 0.0:
                    continue
                pxz = model.probability({roles.x: xv, **z_dict(zv)})
                if pxz == 0.0:
                    raise ValueError(f"P(y|x,z) undefined at x={xv}, z={zv} "
                                     "(positivity violated)")
                pyxz = model.probability({roles.x: xv, roles.y: y, **z_dict(zv)})
                inner += (pyxz / pxz) * px
            total += w * inner
        return total
    raise ValueError(f"criterion must be one of {CRITERIA}")
