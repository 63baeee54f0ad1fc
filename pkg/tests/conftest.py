import pytest

from levybdg import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the numba kernels once so timing assertions measure work,
    # not JIT latency
    if kernels.HAVE_NUMBA and kernels.backend_name() == "numba":
        kernels.numba_backend.warmup()
    yield


@pytest.fixture
def both_backends():
    """Run a check under each backend, restoring the active one."""
    import contextlib

    @contextlib.contextmanager
    def use(name):
        old = kernels.backend_name()
        kernels.set_backend(name)
        try:
            yield
        finally:
            kernels.set_backend(old)

    names = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    return names, use
