import logging
import math
import re
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

from apps.common.exceptions import ConfigurationError, DomainError, SingularityError
from .forces import ForceModel, harmonic_force_model
from .models import PhaseState, SchemeParams, SplittingScheme, Stage
from .repositories import SchemeRepository

logger = logging.getLogger('apps.splitting')

FORWARD_LIMIT_T0 = 0.5 * (1.0 - 1.0 / math.sqrt(3.0))

SELECTOR_PATTERN = re.compile(r'^builtin:(?P<name>[A-Za-z0-9_\-]+)(?:\((?P<args>[^()]*)\))?$')


def parse_number(text: str) -> float:
    """Parse a decimal or a fraction such as '1/6'."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"Cannot parse number '{text}'") from exc


class SchemeFactory:
    """Builds the scheme families and resolves scheme selectors."""

    def __init__(self):
        self.scheme_repo = SchemeRepository()

    def make_second_order(self, alpha: float) -> SplittingScheme:
        alpha = float(alpha)
        return SplittingScheme(
            name=f'second(alpha={alpha!r})',
            stages=(Stage.drift(0.5), Stage.kick(1.0, alpha), Stage.drift(0.5)),
            nominal_order=2,
        )

    def make_4acb(self, t0: float, alpha: float, name: str = None) -> SplittingScheme:
        # imported here: the algebra app builds on splitting models
        from apps.algebra.services import CoefficientService

        t0 = float(t0)
        alpha = float(alpha)
        point = CoefficientService().family_point(t0, alpha)
        outer_gradient = 0.5 * alpha * point.u0
        scheme = SplittingScheme(
            name=name or f'4acb(t0={t0!r},alpha={alpha!r})',
            stages=(
                Stage.drift(point.t0),
                Stage.kick(point.v1, outer_gradient),
                Stage.drift(point.t1),
                Stage.kick(point.v2, (1.0 - alpha) * point.u0),
                Stage.drift(point.t1),
                Stage.kick(point.v1, outer_gradient),
                Stage.drift(point.t0),
            ),
            nominal_order=4,
            params=SchemeParams(t0=t0, alpha=alpha),
        )
        if not (0.0 <= t0 <= FORWARD_LIMIT_T0):
            logger.warning(
                f"4ACB at t0={t0!r} is not a forward scheme",
                extra={'t0': t0, 'alpha': alpha, 'forward_limit': FORWARD_LIMIT_T0, 'forward': scheme.forward}
            )
        return scheme

    @staticmethod
    def is_forward(scheme: SplittingScheme) -> bool:
        return scheme.forward

    def from_builtin(self, name: str, arguments: Dict[str, float] = None) -> SplittingScheme:
        arguments = dict(arguments or {})
        entry = self.scheme_repo.get_builtin(name)
        if entry is None:
            known = ', '.join(item['name'] for item in self.scheme_repo.builtin_table())
            raise ConfigurationError(f"Unknown built-in scheme '{name}' (known: {known})")

        params = entry['params']
        unknown = sorted(set(arguments) - set(params))
        if unknown:
            raise ConfigurationError(f"Built-in '{entry['name']}' does not take {', '.join(unknown)}")
        resolved = {key: arguments.get(key, default) for key, default in params.items()}
        missing = sorted(key for key, value in resolved.items() if value is None)
        if missing:
            raise ConfigurationError(f"Built-in '{entry['name']}' needs {', '.join(missing)}")

        if entry['family'] == 'second':
            scheme = self.make_second_order(resolved['alpha'])
            if entry['name'] in ('leapfrog', 'TI') and not arguments:
                return SplittingScheme(entry['name'], scheme.stages, scheme.nominal_order, scheme.params)
            return scheme
        preset_name = entry['name'] if entry['name'] in ('C', 'Opt-C') and not arguments else None
        return self.make_4acb(resolved['t0'], resolved['alpha'], name=preset_name)

    def from_selector(self, selector: str) -> SplittingScheme:
        """Resolve 'builtin:NAME', 'builtin:NAME(k=v,...)' or 'file:PATH'."""
        selector = selector.strip()
        if selector.startswith('file:'):
            return self.scheme_repo.read_file(selector[len('file:'):])

        match = SELECTOR_PATTERN.match(selector)
        if match is None:
            raise ConfigurationError(
                f"Scheme selector '{selector}' must look like builtin:NAME, builtin:NAME(k=v,...) or file:PATH"
            )
        arguments = {}
        if match.group('args'):
            for item in match.group('args').split(','):
                if '=' not in item:
                    raise ConfigurationError(f"Scheme argument '{item}' must be key=value")
                key, value = item.split('=', 1)
                arguments[key.strip()] = parse_number(value)
        return self.from_builtin(match.group('name'), arguments)


class IntegratorService:
    """Stepping engine for symmetric drift-kick compositions."""

    def step_once(self, scheme: SplittingScheme, force: ForceModel, state: PhaseState, eps: float) -> PhaseState:
        self._check_step(eps)
        q, p = self._advance(scheme, force, state.q, state.p, eps, step_index=0)
        return PhaseState(q=q, p=p, t=state.t + eps)

    def integrate(self, scheme: SplittingScheme, force: ForceModel, s0: PhaseState, eps: float,
                  n: int, sample_every: int = 1) -> List[PhaseState]:
        """
        Apply n steps; return the states after every sample_every-th step,
        always including the final one.
        """
        self._check_step(eps)
        if n < 1 or sample_every < 1:
            raise DomainError(f"integrate needs n >= 1 and sample_every >= 1, got n={n}, sample_every={sample_every}")

        samples = []
        q, p = s0.q, s0.p
        for step in range(1, n + 1):
            q, p = self._advance(scheme, force, q, p, eps, step_index=step - 1)
            if step % sample_every == 0 or step == n:
                samples.append(PhaseState(q=q, p=p, t=s0.t + step * eps))
        return samples

    def convergence_slope(self, scheme: SplittingScheme, omega: float, n_values: Sequence[int]) -> float:
        """Log-log slope of the one-period global error on the oscillator against eps."""
        force = harmonic_force_model(omega)
        period = 2.0 * math.pi / omega
        s0 = PhaseState(q=[1.0], p=[0.0])
        steps, errors = [], []
        for n in n_values:
            eps = period / n
            final = self.integrate(scheme, force, s0, eps, n, sample_every=n)[-1]
            steps.append(eps)
            errors.append(final.distance_to(s0))
        slope = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
        logger.info(
            f"Convergence slope of {scheme.name}: {slope:.3f}",
            extra={'scheme': scheme.name, 'n_values': list(n_values), 'slope': slope}
        )
        return slope

    @staticmethod
    def _check_step(eps: float) -> None:
        if not math.isfinite(eps) or eps < 0.0:
            raise DomainError(f"Step size must be finite and non-negative, got {eps!r}")

    @staticmethod
    def _advance(scheme: SplittingScheme, force: ForceModel, q: np.ndarray, p: np.ndarray,
                 eps: float, step_index: int):
        eps3 = eps * eps * eps
        for index, stage in enumerate(scheme.stages):
            if stage.is_drift:
                q = q + (eps * stage.weight) * p
                continue
            f = force.force(q)
            if not np.all(np.isfinite(f)):
                raise SingularityError(
                    f"Non-finite force in stage {index} of step {step_index} at q={np.asarray(q).tolist()}",
                    stage_index=index, step_index=step_index,
                )
            p = p + (eps * stage.weight) * f
            if stage.grad_weight != 0.0:
                g = force.force_gradient(q)
                if not np.all(np.isfinite(g)):
                    raise SingularityError(
                        f"Non-finite force gradient in stage {index} of step {step_index}",
                        stage_index=index, step_index=step_index,
                    )
                p = p + (eps3 * stage.grad_weight) * g
        return q, p
