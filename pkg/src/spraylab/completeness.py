"""Projective completion of sprays from probed maximal intervals.

A geodesic defined on ``(a, b)`` is reparameterized by a map ``s(t)`` that
sends ``(a, b)`` onto an unbounded interval.  The deformed spray
``G + P y`` has the new parameter as its affine parameter when
``P = s''(0) / (2 s'(0))`` at the evaluation state, so only ``(a, b)`` need to
be measured.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import jet
from .core import ProjectiveFactor, SprayField, TangentState, _as_state, projective_deform
from .errors import ProbeFailure, SprayError, UnknownLabel, WrongIntervalPattern
from .geodesics import ProbeSettings, probe_maximal_interval

FINITE_STATUSES = ("domain_exit", "blowup")
HORIZON = "horizon_reached"


@dataclass(frozen=True)
class ReparamStrategy:
    """Closed-form clock ``s(t)`` mapping the probed interval onto an unbounded one.

    ``needs_left`` / ``needs_right`` say which endpoints must be finite.
    """

    kind: str
    needs_left: bool
    needs_right: bool

    @property
    def cli_name(self) -> str:
        return self.kind.replace("_", "-")

    def s(self, t, a: float, b: float):
        t = np.asarray(t, dtype=float)
        if self.kind == "ln_left":
            return np.log(1.0 - t / a)
        if self.kind == "ln_right":
            return -np.log(1.0 - t / b)
        if self.kind == "ln_two_sided":
            return np.log((1.0 - t / a) / (1.0 - t / b))
        k, m = math.pi / (b - a), 0.5 * (a + b)
        return np.tan(k * (t - m)) + math.tan(k * m)

    def s_prime(self, t, a: float, b: float):
        t = np.asarray(t, dtype=float)
        if self.kind == "ln_left":
            return 1.0 / (t - a)
        if self.kind == "ln_right":
            return 1.0 / (b - t)
        if self.kind == "ln_two_sided":
            return 1.0 / (t - a) + 1.0 / (b - t)
        k, m = math.pi / (b - a), 0.5 * (a + b)
        return k / np.cos(k * (t - m)) ** 2

    def factor_at_zero(self, a: float, b: float) -> float:
        """``P = s''(0) / (2 s'(0))``."""
        if self.kind == "ln_left":
            return 1.0 / (2.0 * a)
        if self.kind == "ln_right":
            return 1.0 / (2.0 * b)
        if self.kind == "ln_two_sided":
            return 0.5 * (1.0 / a + 1.0 / b)
        k = math.pi / (b - a)
        return k * math.tan(-k * 0.5 * (a + b))

    @property
    def completes_forward(self) -> bool:
        return self.needs_right

    @property
    def completes_backward(self) -> bool:
        return self.needs_left


LN_LEFT = ReparamStrategy("ln_left", True, False)
LN_RIGHT = ReparamStrategy("ln_right", False, True)
LN_TWO_SIDED = ReparamStrategy("ln_two_sided", True, True)
TAN_TWO_SIDED = ReparamStrategy("tan_two_sided", True, True)
STRATEGIES = {s.cli_name: s for s in (LN_LEFT, LN_RIGHT, LN_TWO_SIDED, TAN_TWO_SIDED)}


def named_strategy(name: str) -> ReparamStrategy:
    key = name.replace("_", "-")
    if key not in STRATEGIES:
        raise UnknownLabel(f"unknown strategy {name!r}; known: {sorted(STRATEGIES)}")
    return STRATEGIES[key]


def _check_pattern(strategy: ReparamStrategy, est) -> None:
    left_finite = est.left_status in FINITE_STATUSES and math.isfinite(est.a)
    right_finite = est.right_status in FINITE_STATUSES and math.isfinite(est.b)
    if strategy.needs_left and not left_finite:
        raise WrongIntervalPattern(f"{strategy.cli_name} needs a finite left endpoint; probe reported {est.left_status}")
    if strategy.needs_right and not right_finite:
        raise WrongIntervalPattern(f"{strategy.cli_name} needs a finite right endpoint; probe reported {est.right_status}")


def completion_factor(
    spray: SprayField, state, strategy: ReparamStrategy, settings: Optional[ProbeSettings] = None
) -> float:
    """``P(x, y)`` from the probed interval of the geodesic through ``state``."""
    state = _as_state(state)
    try:
        est = probe_maximal_interval(spray, state, settings)
    except SprayError as exc:
        if isinstance(exc, WrongIntervalPattern):
            raise
        raise ProbeFailure(f"probe failed for {spray.label}: {exc}") from exc
    _check_pattern(strategy, est)
    return strategy.factor_at_zero(est.a, est.b)


@dataclass
class CompletionSettings:
    """``sample_states`` are checked for the interval pattern when completing;
    factor values are cached by state rounded to ``cache_resolution``."""

    probe: ProbeSettings = field(default_factory=ProbeSettings)
    sample_states: tuple = ()
    horizon: float = 1e4
    cache_resolution: float = 1e-9


class _FactorCache:
    def __init__(self, resolution: float):
        self.resolution = resolution
        self._store = {}
        self._lock = threading.Lock()

    def key(self, x, y):
        r = self.resolution
        return tuple(np.round(np.concatenate([x, y]) / r).astype(np.int64).tolist())

    def get(self, k):
        with self._lock:
            return self._store.get(k)

    def put(self, k, v):
        with self._lock:
            self._store.setdefault(k, v)

    def __len__(self):
        return len(self._store)


def completion_factor_field(
    spray: SprayField, strategy: ReparamStrategy, settings: Optional[CompletionSettings] = None
) -> ProjectiveFactor:
    """The factor ``P`` as a field, probed at unit speed and scaled by ``|y|``.

    Probing at ``y / |y|`` makes the field exactly 1-homogeneous and lets
    states differing only by speed share one probe.
    """
    settings = settings or CompletionSettings()
    cache = _FactorCache(settings.cache_resolution)

    def value(x, y):
        x = np.asarray(jet.value(x), dtype=float)
        y = np.asarray(jet.value(y), dtype=float)
        speed = float(np.linalg.norm(y))
        u = y / speed
        k = cache.key(x, u)
        p = cache.get(k)
        if p is None:
            p = completion_factor(spray, TangentState(x, u), strategy, settings.probe)
            cache.put(k, p)
        return speed * p

    value.cache = cache
    return ProjectiveFactor(spray.dimension, value, f"completion[{strategy.cli_name}]", spray.domain, ad_capable=False)


def make_complete(
    spray: SprayField, strategy: ReparamStrategy, settings: Optional[CompletionSettings] = None
) -> SprayField:
    """``G + P y`` with ``P`` from :func:`completion_factor_field`.

    Every state in ``settings.sample_states`` must show the interval pattern
    the strategy requires.
    """
    settings = settings or CompletionSettings()
    factor = completion_factor_field(spray, strategy, settings)
    for st in settings.sample_states:
        st = _as_state(st)
        factor.value(st.x, st.y)
    return projective_deform(spray, factor, label=f"completed:{spray.label}+{strategy.cli_name}")


@dataclass(frozen=True)
class CompletenessReport:
    forward_complete: tuple
    backward_complete: tuple
    samples: int
    positively_complete: bool
    negatively_complete: bool
    complete: bool
    verdict: str


def verify_complete(spray: SprayField, samples, horizon: float = 1e4, settings: Optional[ProbeSettings] = None) -> CompletenessReport:
    """Probe every sample; a direction is complete when all probes reach the horizon."""
    base = settings or ProbeSettings()
    settings = ProbeSettings(**{**base.__dict__, "horizon": horizon})
    fwd, bwd = [], []
    count = 0
    for i, st in enumerate(samples):
        est = probe_maximal_interval(spray, st, settings)
        count += 1
        if est.right_status == HORIZON:
            fwd.append(i)
        if est.left_status == HORIZON:
            bwd.append(i)
    pos = len(fwd) == count
    neg = len(bwd) == count
    if pos and neg:
        verdict = "complete"
    elif pos:
        verdict = "positively complete"
    elif neg:
        verdict = "negatively complete"
    else:
        verdict = "incomplete"
    return CompletenessReport(tuple(fwd), tuple(bwd), count, pos, neg, pos and neg, verdict)
