"""Acceptance suites A1-A8 as deterministic, seedable checks.

Each suite returns a :class:`CriterionResult` made of named scalar checks
``value <op> bound``.  All randomness flows from one seeded generator per suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import catalog, completeness, diffops, geodesics, pathspace, projective
from .core import ConicalDomain, SprayField, TangentState, check_cone_property, check_homogeneity

DEFAULT_SEED = 42


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    op: str = "<="

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value) and self.op != "==":
            return False
        if self.op == "<=":
            return self.value <= self.bound
        if self.op == ">":
            return self.value > self.bound
        if self.op == "==":
            return self.value == self.bound
        raise ValueError(f"unknown comparison {self.op!r}")

    def to_record(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "op": self.op, "passed": self.passed}


@dataclass
class CriterionResult:
    code: str
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, value, bound, op="<="):
        self.checks.append(Check(name, float(value), float(bound), op))

    def flag(self, name, ok: bool):
        self.checks.append(Check(name, 1.0 if ok else 0.0, 1.0, "=="))

    def worst(self) -> Check:
        failing = [c for c in self.checks if not c.passed]
        return failing[0] if failing else self.checks[-1]

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bad = [c.name for c in self.checks if not c.passed]
        tail = f"failing: {', '.join(bad)}" if bad else f"{len(self.checks)} checks"
        return f"{self.code} {status} {self.title} ({tail})"

    def to_record(self, timing: bool = False) -> dict:
        rec = {"code": self.code, "title": self.title, "passed": self.passed, "checks": [c.to_record() for c in self.checks]}
        if timing:
            rec["seconds"] = self.seconds
        return rec


# -- sampling -------------------------------------------------------------


def random_states(domain: ConicalDomain, count: int, rng: np.random.Generator, radius: float = 0.9, unit: bool = False):
    """Rejection-sample ``count`` states of ``domain``.

    Positions: ball domains up to ``radius``, the half plane on
    ``(-2, 2) x (0.1, 2)``, otherwise standard normal.  Velocities are normal,
    or unit length when ``unit``.
    """
    n = domain.dimension
    label = domain.label
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 1000 * count:
            raise RuntimeError(f"could not sample states of {label}")
        if label.startswith("B^"):
            x = rng.normal(size=n)
            x *= rng.uniform(0.0, radius) / np.linalg.norm(x)
        elif label.startswith("R^2_+"):
            x = np.array([rng.uniform(-2.0, 2.0), rng.uniform(0.1, 2.0)])
        else:
            x = rng.normal(size=n)
        y = rng.normal(size=n)
        if unit:
            y /= np.linalg.norm(y)
        if domain.contains(x, y):
            out.append(TangentState(x, y))
    return out


# -- A1 ---------------------------------------------------------------------


def catalog_sprays():
    out = []
    for label in sorted(catalog.SPRAYS):
        params = {"c": 0.5} if label in ("funk_scaled", "funk_reversible") else {}
        out.append(catalog.named_spray(label, n=2, **params))
    out.append(catalog.named_spray("hyperbolic_ball", n=3))
    out.append(catalog.named_spray("klein_finsler", n=3))
    return out


def constructed_sprays():
    fams = [
        pathspace.semicircles(),
        pathspace.ball_arcs(2),
        pathspace.ball_arcs(3),
        pathspace.circles(0.5),
        pathspace.circles(1.0),
        pathspace.circles(2.0),
        pathspace.lines(2),
        pathspace.cubic2d(),
        pathspace.cubic3d(),
    ]
    out = [pathspace.construct_spray(f) for f in fams]
    fb = catalog.named_spray("flat_ball")
    out.append(completeness.make_complete(fb, completeness.LN_TWO_SIDED))
    out.append(completeness.make_complete(fb, completeness.LN_RIGHT))
    out.append(completeness.make_complete(catalog.named_spray("semicircle"), completeness.TAN_TWO_SIDED))
    return out


def suite_homogeneity(seed: int = DEFAULT_SEED, states: int = 100) -> CriterionResult:
    res = CriterionResult("A1", "2-homogeneity and conical domains")
    rng = np.random.default_rng(seed)
    for spray in catalog_sprays() + constructed_sprays():
        sts = random_states(spray.domain, states, rng)
        res.add(f"homogeneity[{spray.label}/n={spray.dimension}]", check_homogeneity(spray, sts), 1e-9)
        res.flag(f"cone[{spray.label}/n={spray.dimension}]", check_cone_property(spray.domain, sts))
    return res


# -- A2 ---------------------------------------------------------------------


def suite_clocks(seed: int = DEFAULT_SEED) -> CriterionResult:
    res = CriterionResult("A2", "Funk clocks along the chord from the centre")
    fb = catalog.named_spray("flat_ball")
    traj = geodesics.integrate(fb, TangentState([0.0, 0.0], [1.0, 0.0]), 0.95)
    c1 = projective.reclock_geodesic(traj, catalog.funk_factor(2, 0.5))
    res.add("reclock F/2 vs -ln(1-t)", np.max(np.abs(c1.v + np.log1p(-c1.t))), 1e-8)
    # this clock starts at rate F(u,v) + F(u,-v) = 2 at the centre
    c2 = projective.reclock_geodesic(traj, catalog.funk_reversible_factor(2, 0.5), initial_rate=2.0)
    res.add("reclock (F(y)-F(-y))/2 vs ln((1+t)/(1-t))", np.max(np.abs(c2.v - np.log((1 + c2.t) / (1 - c2.t)))), 1e-8)
    ts = np.linspace(-0.99, 0.99, 41)
    dev = max(abs(projective.funk_reversible_clock([0.0, 0.0], [1.0, 0.0], 0.5, t) - math.atanh(t)) for t in ts)
    res.add("reversible clock c=1/2 vs atanh", dev, 1e-8)
    return res


# -- A3 ---------------------------------------------------------------------


def _max_dev(spray, states, oracle):
    worst = 0.0
    for st in states:
        g = np.asarray(spray.coefficients(st.x, st.y), dtype=float)
        worst = max(worst, float(np.max(np.abs(g - oracle(st.x, st.y)))))
    return worst


def _ball_arc_oracle(x, y):
    return ((x @ y) * y - (y @ y) * x) / (1.0 - x @ x)


def _semicircle_oracle(x, y):
    return np.array([-y[0] * y[1] / (2 * x[1]), y[0] ** 2 / (2 * x[1])])


def suite_pathspace(seed: int = DEFAULT_SEED, states: int = 100, roundtrips: int = 3) -> CriterionResult:
    res = CriterionResult("A3", "path-space reconstruction")
    rng = np.random.default_rng(seed)
    fam = pathspace.semicircles()
    spray = pathspace.construct_spray_method2(fam)
    res.add("semicircles vs closed form", _max_dev(spray, random_states(spray.domain, states, rng), _semicircle_oracle), 1e-8)
    for n in (2, 3):
        sp = pathspace.construct_spray_method2(pathspace.ball_arcs(n))
        res.add(f"ball arcs n={n} vs closed form", _max_dev(sp, random_states(sp.domain, states, rng), _ball_arc_oracle), 1e-7)
    families = [pathspace.semicircles(), pathspace.ball_arcs(2), pathspace.ball_arcs(3), pathspace.cubic2d(), pathspace.cubic3d()]
    families += [pathspace.circles(r) for r in (0.5, 1.0, 2.0)]
    for fam in families:
        sp = pathspace.construct_spray(fam)
        sts = random_states(sp.domain, roundtrips, rng, radius=0.6)
        rep = pathspace.roundtrip_check(fam, sp, sts)
        res.add(f"roundtrip[{fam.label}]", rep.max_distance, 1e-6)
        if fam.label.startswith("circles"):
            res.add(f"radius[{fam.label}]", rep.radius_error, 1e-7)
    return res


# -- A4 ---------------------------------------------------------------------


def suite_completion(seed: int = DEFAULT_SEED, states: int = 100, probes: int = 50) -> CriterionResult:
    res = CriterionResult("A4", "completion oracles and completeness verdicts")
    rng = np.random.default_rng(seed)
    fb = catalog.named_spray("flat_ball")
    klein = catalog.named_spray("klein_finsler")
    two = completeness.make_complete(fb, completeness.LN_TWO_SIDED)
    right = completeness.make_complete(fb, completeness.LN_RIGHT)
    sts = random_states(fb.domain, states, rng)
    res.add("flat ball + ln-two-sided vs klein_finsler", _max_dev(two, sts, lambda x, y: klein.coefficients(x, y)), 2e-4)
    res.add("flat ball + ln-right vs F y / 2", _max_dev(right, sts, lambda x, y: 0.5 * catalog.funk(x, y) * y), 2e-4)
    semi = completeness.make_complete(catalog.named_spray("semicircle"), completeness.TAN_TWO_SIDED)
    target = catalog.named_spray("semicircle_complete")
    sts = random_states(target.domain, states, rng)
    res.add("semicircle + tan-two-sided vs semicircle_complete", _max_dev(semi, sts, lambda x, y: target.coefficients(x, y)), 2e-4)
    expect = [
        ("klein_finsler", {}, "complete"),
        ("funk_log", {}, "complete"),
        ("funk_scaled", {"c": 0.5}, "positively complete"),
        ("funk_scaled", {"c": 0.25}, "incomplete"),
    ]
    for label, params, verdict in expect:
        sp = catalog.named_spray(label, **params)
        rep = completeness.verify_complete(sp, random_states(sp.domain, probes, rng))
        res.flag(f"verdict[{label}{params or ''}] is {verdict}", rep.verdict == verdict)
        if verdict == "incomplete":
            ok = not rep.forward_complete and not rep.backward_complete
            res.flag(f"no complete direction[{label}{params or ''}]", ok)
    return res


# -- A5 ---------------------------------------------------------------------


def _funk_geodesic_profiles(c: float, count: int, rng):
    spray = catalog.named_spray("funk_scaled", c=c)
    factor = catalog.funk_factor(2, c)
    out = []
    for st in random_states(spray.domain, count, rng, radius=0.4, unit=True):
        b = geodesics.probe_maximal_interval(spray, st).b
        t_end = min(1.0, 0.9 * b)
        traj = geodesics.integrate(spray, st, t_end, geodesics.IntegratorSettings(max_step=t_end / 400))
        out.append(projective.sample_P_along_geodesic(factor, traj))
    return out


def suite_dichotomy(seed: int = DEFAULT_SEED, geodesics_per_case: int = 20, ricci_states: int = 10) -> CriterionResult:
    res = CriterionResult("A5", "P'' + 2PP' = 0 dichotomy for P = cF")
    rng = np.random.default_rng(seed)
    for c in (0.0, 1.0, 0.5):
        profiles = _funk_geodesic_profiles(c, geodesics_per_case, rng)
        fits = [projective.classify_P_profile(p) for p in profiles]
        res.add(f"c={c:g} fit residual", max(f.residual for f in fits), 1e-5)
        res.add(f"c={c:g} ode residual", max(f.ode_residual for f in fits), 1e-5)
    profiles = _funk_geodesic_profiles(2.0, geodesics_per_case, rng)
    res.add("c=2 largest ode residual", max(projective.ode_residual(p) for p in profiles), 1e-2, ">")
    for c in (0.0, 1.0, 0.5, 2.0):
        sp = catalog.named_spray("funk_scaled", c=c)
        verdict, worst = diffops.is_weakly_ricci_constant(sp, random_states(sp.domain, ricci_states, rng, radius=0.8, unit=True))
        if c == 2.0:
            res.add("c=2 |Ric_;0|", worst, 1e-2, ">")
        else:
            res.add(f"c={c:g} |Ric_;0|", worst, 1e-5)
    return res


# -- A6 ---------------------------------------------------------------------


def suite_relations(seed: int = DEFAULT_SEED) -> CriterionResult:
    res = CriterionResult("A6", "parameter-relation families")
    fb = catalog.named_spray("flat_ball")
    st = TangentState([0.3, 0.2], [0.6, -0.4])
    traj = geodesics.integrate(fb, st, 0.5)
    for c, family in ((0.5, "log"), (1.0, "rational")):
        fit = projective.fit_parameter_relation(projective.reclock_geodesic(traj, catalog.funk_factor(2, c)))
        res.flag(f"c={c:g} selects {family}", fit.family == family)
        res.add(f"c={c:g} residual", fit.residual, 1e-6)
    chord = geodesics.integrate(fb, TangentState([0.0, 0.0], [1.0, 0.0]), 0.95)
    fit = projective.fit_parameter_relation(projective.reclock_geodesic(chord, catalog.funk_reversible_factor(2, 0.5)))
    res.flag("Klein reclocking selects log_ratio", fit.family == "log_ratio")
    res.add("Klein reclocking residual", fit.residual, 1e-6)
    res.flag("Klein reclocking complete case", bool(fit.complete_case))
    res.flag("Klein reclocking domain ok", bool(fit.domain_ok))
    sphere = catalog.named_spray("sphere_proj")
    own = geodesics.integrate(sphere, TangentState([0.3, 0.2], [1.0, -0.4]), 1.0)
    pfit = projective.classify_P_profile(projective.sample_P_along_geodesic(catalog.sphere_factor(2), own))
    res.flag("sphere factor selects tangent", pfit.family == "tangent")
    res.add("sphere factor residual", pfit.residual, 1e-6)
    flat = geodesics.integrate(catalog.named_spray("flat"), TangentState([0.3, 0.2], [1.0, -0.4]), 3.0)
    sfit = projective.fit_parameter_relation(projective.reclock_geodesic(flat, catalog.sphere_factor(2)))
    res.flag("sphere clock selects arctan", sfit.family == "arctan")
    res.add("sphere clock residual", sfit.residual, 1e-6)
    return res


# -- A7 ---------------------------------------------------------------------


def suite_curvature(seed: int = DEFAULT_SEED, triples: int = 50) -> CriterionResult:
    res = CriterionResult("A7", "curvature oracles")
    rng = np.random.default_rng(seed)
    flat = catalog.named_spray("flat")
    worst = 0.0
    for st in random_states(flat.domain, 10, rng):
        worst = max(worst, float(np.max(np.abs(diffops.riemann_curvature(flat, st).R))))
    res.add("flat Riemann", worst, 1e-10)
    hyp = catalog.named_spray("hyperbolic_ball")
    origin = TangentState([0.0, 0.0], [0.0, 1.0])
    res.add("hyperbolic Ric + 3 (jets)", abs(diffops.ricci(hyp, origin, "ad") + 3.0), 1e-6)
    res.add("hyperbolic Ric + 3 (differences)", abs(diffops.ricci(hyp, origin, "fd") + 3.0), 1e-6)
    bases = [catalog.named_spray(s) for s in ("flat_ball", "hyperbolic_ball", "klein_finsler", "funk_scaled")]
    factors = [catalog.funk_factor(2, 0.5), catalog.funk_factor(2, 2.0), catalog.funk_reversible_factor(2, 0.5), catalog.sphere_factor(2)]
    worst = 0.0
    for _ in range(triples):
        base = bases[rng.integers(len(bases))]
        factor = factors[rng.integers(len(factors))]
        (st,) = random_states(base.domain, 1, rng, radius=0.8)
        worst = max(worst, diffops.verify_projective_ricci_relation(base, factor, st))
    res.add("projective Ricci relation", worst, 1e-5)
    semi = catalog.named_spray("semicircle")
    worst = 0.0
    for st in random_states(semi.domain, 10, rng):
        worst = max(worst, diffops.isotropy_decompose(diffops.riemann_curvature(semi, st)).residual)
    res.add("semicircle isotropy residual", worst, 1e-6)
    return res


# -- A8 ---------------------------------------------------------------------


def suite_autodiff(seed: int = DEFAULT_SEED, states: int = 50) -> CriterionResult:
    res = CriterionResult("A8", "jets vs Richardson differences")
    rng = np.random.default_rng(seed)
    for spray in catalog_sprays():
        worst = max(diffops.derivative_discrepancy(spray, st) for st in random_states(spray.domain, states, rng))
        res.add(f"discrepancy[{spray.label}/n={spray.dimension}]", worst, 1e-6)
    return res


SUITES: dict[str, tuple[str, Callable]] = {
    "homogeneity": ("A1", suite_homogeneity),
    "clocks": ("A2", suite_clocks),
    "pathspace": ("A3", suite_pathspace),
    "klein": ("A4", suite_completion),
    "dichotomy": ("A5", suite_dichotomy),
    "relations": ("A6", suite_relations),
    "curvature": ("A7", suite_curvature),
    "autodiff": ("A8", suite_autodiff),
}
ALIASES = {code.lower(): name for name, (code, _) in SUITES.items()}
ALIASES.update({"completion": "klein", "completeness": "klein"})


def resolve_suite(name: str) -> list[str]:
    key = name.lower()
    if key == "all":
        return list(SUITES)
    key = ALIASES.get(key, key)
    if key not in SUITES:
        from .errors import UnknownLabel

        raise UnknownLabel(f"unknown suite {name!r}; known: all, {', '.join(SUITES)}, a1..a8")
    return [key]


def run_suite(name: str, seed: int = DEFAULT_SEED) -> CriterionResult:
    _, fn = SUITES[name]
    t0 = time.perf_counter()
    res = fn(seed=seed)
    res.seconds = time.perf_counter() - t0
    return res


def run(names, seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    out = []
    for name in names:
        out.extend(run_suite(k, seed) for k in resolve_suite(name))
    return out
