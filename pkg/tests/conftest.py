import numpy as np
import pytest

from rdmlab.model import SingleSitePotential

# Regression constants for the canonical well q = -10 on [-1/4, 1/4].
# Each was produced once by the solver named next to it and cross-checked
# against an independent oracle in the tests that use it.
E0_CORNER = -6.78271933011667        # cell Neumann ground energy at a = d_max
E0_CORNER_FD = -6.782719323080972    # dense FD oracle, h = 1e-4
E0_CENTRE = -5.514533179379052       # cell ground energy at a = 0
RHO = 3.1640440901168057             # psi(1/2) / psi(-1/2) at a = d_max
PSI_CORNER = (0.45839215262076605, 1.4503729814556556)
GAP_PLUS_PLUS = 1.2681861507376198   # (+,+) minus dimer, L = 2
GAP_L4_UNBALANCED = 0.09544857686606179  # (-,-,-,+) minus dimer, L = 4
GAP_ZERO_PLUS = 1.003095264128703    # (0, +d) minus dimer
GAP_DIMER_09 = 0.15249469508731828   # (-d, 0.9 d) minus dimer

# 2D canonical q2d = -10 on [-1/8, 1/8]^2, single cell at the corner (d, d)
LAMBDA_2D = (-0.9536657376587414, -0.9523618466407944, -0.9520358206228261)  # h = 1/32, 1/64, 1/128
LAMBDA_2D_EXTRAP = -0.9519271452835033
CENTRE_MINUS_CORNER_2D = 0.2653308971339665  # h = 1/64


@pytest.fixture(scope="session")
def q():
    return SingleSitePotential.well()


@pytest.fixture(scope="session")
def d(q):
    return q.d_max


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
