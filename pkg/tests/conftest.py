import pytest
from hypothesis import settings

from artifact.coeff import Q, Z, Z2, RingSpec

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

F3 = RingSpec.prime_field(3)


@pytest.fixture(params=[Z, Q, Z2, F3], ids=lambda r: r.name)
def ring(request):
    return request.param
