import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _backends():
    from tomoscope import _pykernels

    out = [pytest.param(_pykernels, id="python")]
    try:
        from tomoscope import _ckernels
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip(reason="extension not built")))
    else:
        out.append(pytest.param(_ckernels, id="cython"))
    return out


@pytest.fixture(params=_backends())
def kernels(request):
    return request.param
