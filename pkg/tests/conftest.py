import numpy as np
import pytest
import sympy as sp

from interface_lab.velocity import ManufacturedVelocity

X_, Y_ = sp.symbols("x y")


def manufactured_field(curve, seed, rotational=True):
    """Random two-sided field: polynomial inside, ``r^-4 G(1/x)`` outside.

    The exterior form keeps ``r^4 div X`` smooth at infinity, which the
    inverted-disk Poisson solver needs for spectral accuracy.
    """
    rng = np.random.default_rng(seed)
    x, y = X_, Y_
    a = [sp.Float(float(v), 15) for v in rng.normal(size=12)]
    plus = (a[0] * x + a[1] * y**2 + a[2] * x * y + (a[3] * sp.sin(y) if rotational else 0),
            a[4] * y + a[5] * x**2 + a[6] * sp.cos(x))
    r2 = x**2 + y**2
    u, v = x / r2, y / r2
    minus = ((a[7] + a[8] * u + a[9] * v**2) / r2**2, (a[10] * u + a[11] * v) / r2**2)
    return ManufacturedVelocity.from_sympy(curve, plus, minus, symbols=(x, y))


@pytest.fixture
def make_field():
    return manufactured_field


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary
ACCEPTANCE = {}


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.details = number, title, []

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = "; ".join(self.details) if ok else f"{exc_type.__name__}: {exc}".splitlines()[0]
        ACCEPTANCE[self.number] = (ok, self.title, detail)
        line = f"criterion {self.number:2d} {'PASS' if ok else 'FAIL'}  {self.title}: {detail}"
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
