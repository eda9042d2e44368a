import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from rest_framework import serializers
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from apps.common.exceptions import SchemeValidationError
from .models import SchemeParams, SplittingScheme, Stage, StageKind
from .serializers import SchemeDocumentSerializer

logger = logging.getLogger('apps.splitting')


BUILTIN_SCHEMES: List[Dict[str, Any]] = [
    {
        'name': 'leapfrog',
        'family': 'second',
        'params': {'alpha': 0.0},
        'provenance': 'drift-kick-drift leapfrog, second-order scheme with alpha = 0',
    },
    {
        'name': 'TI',
        'family': 'second',
        'params': {'alpha': 1.0 / 24.0},
        'provenance': 'Takahashi-Imada correctable second-order scheme, alpha = 1/24',
    },
    {
        'name': 'second',
        'family': 'second',
        'params': {'alpha': None},
        'provenance': 'second-order gradient-kick scheme D(1/2) K(1, alpha) D(1/2)',
    },
    {
        'name': '4acb',
        'family': '4acb',
        'params': {'t0': None, 'alpha': None},
        'provenance': 'seven-stage fourth-order forward family 4ACB(t0, alpha)',
    },
    {
        'name': 'C',
        'family': '4acb',
        'params': {'t0': 1.0 / 6.0, 'alpha': 0.0},
        'provenance': 'forward algorithm C, 4ACB with t0 = 1/6 and alpha = 0',
    },
    {
        'name': 'Opt-C',
        'family': '4acb',
        'params': {'t0': 0.166160, 'alpha': 0.0},
        'provenance': 'Kepler-optimized C, 4ACB with t0 = 0.166160 and alpha = 0',
    },
]


class SchemeRepository:
    """Reads and writes scheme documents (JSON) and exposes the built-in registry."""

    def builtin_table(self) -> List[Dict[str, Any]]:
        return [dict(entry, params=dict(entry['params'])) for entry in BUILTIN_SCHEMES]

    def get_builtin(self, name: str) -> Dict[str, Any]:
        for entry in BUILTIN_SCHEMES:
            if entry['name'].lower() == name.lower():
                return dict(entry, params=dict(entry['params']))
        return None

    def scheme_to_document(self, scheme: SplittingScheme) -> Dict[str, Any]:
        stages = []
        for stage in scheme.stages:
            record = {'kind': stage.kind.value, 'weight': stage.weight}
            if not stage.is_drift:
                record['grad_weight'] = stage.grad_weight
            stages.append(record)
        params = None
        if scheme.params is not None:
            params = {'t0': scheme.params.t0, 'alpha': scheme.params.alpha}
        return {
            'name': scheme.name,
            'nominal_order': scheme.nominal_order,
            'params': params,
            'stages': stages,
        }

    def document_to_scheme(self, document: Dict[str, Any]) -> SplittingScheme:
        serializer = SchemeDocumentSerializer(data=document)
        try:
            serializer.is_valid(raise_exception=True)
        except serializers.ValidationError as exc:
            invariant = self._failed_invariant(exc.detail)
            logger.warning(
                f"Rejected scheme document: {invariant}",
                extra={'invariant': invariant, 'errors': exc.detail}
            )
            raise SchemeValidationError(
                f"Invalid scheme document ({invariant}): {exc.detail}",
                invariant=invariant,
            ) from exc

        data = serializer.validated_data
        params = data.get('params')
        return SplittingScheme(
            name=data['name'],
            stages=tuple(
                Stage(StageKind(stage['kind']), stage['weight'], stage.get('grad_weight', 0.0))
                for stage in data['stages']
            ),
            nominal_order=data['nominal_order'],
            params=SchemeParams(t0=params['t0'], alpha=params['alpha']) if params else None,
        )

    def save_scheme(self, scheme: SplittingScheme) -> str:
        """Render a scheme as JSON text; floats use the shortest round-trip repr."""
        return JSONRenderer().render(self.scheme_to_document(scheme)).decode('utf-8')

    def load_scheme(self, document: Union[str, bytes, Dict[str, Any]]) -> SplittingScheme:
        if isinstance(document, (str, bytes)):
            try:
                document = json.loads(document)
            except ValueError as exc:
                raise SchemeValidationError(f"Scheme document is not valid JSON: {exc}", invariant='format') from exc
        if not isinstance(document, dict):
            raise SchemeValidationError("Scheme document must be a JSON object", invariant='format')
        return self.document_to_scheme(document)

    def read_file(self, path: Union[str, Path]) -> SplittingScheme:
        path = Path(path)
        try:
            with path.open('rb') as stream:
                document = JSONParser().parse(stream)
        except OSError as exc:
            raise SchemeValidationError(f"Cannot read scheme file {path}: {exc}", invariant='format') from exc
        except Exception as exc:
            raise SchemeValidationError(f"Scheme file {path} is not valid JSON: {exc}", invariant='format') from exc
        scheme = self.load_scheme(document)
        logger.info(f"Loaded scheme {scheme.name} from {path}", extra={'scheme': scheme.name, 'path': str(path)})
        return scheme

    def write_file(self, scheme: SplittingScheme, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.save_scheme(scheme) + '\n', encoding='utf-8')
        return path

    @staticmethod
    def _failed_invariant(detail) -> str:
        text = str(detail)
        for invariant in ('weight-sum', 'palindrome', 'drift-grad-weight', 'unknown_keys', 'nominal_order'):
            if invariant in text:
                return invariant
        return 'format'
