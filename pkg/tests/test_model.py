import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import d_hL_bruteforce, li_series, simpson_fixed
from psprimes import model as m
from psprimes.singular_series import constants, modified_pair_table

U_GRID = [10.0**e for e in range(3, 10)]
E10 = math.exp(10.0)


def test_nu_examples():
    c = m.nu(E10)
    assert abs(c.nu - 0.9) < 1e-15
    assert abs(c.H - (-1 / math.log(0.9))) < 1e-12
    assert abs(c.H - 9.4912215810) < 1e-9
    assert abs(m.nu(3).nu - (1 - 1 / math.log(3))) < 1e-15
    assert abs(m.nu(3).nu - 0.0897608) < 1e-6
    assert c.H_k(0) == c.H
    with pytest.raises(ValueError):
        m.nu(2.9)


@given(st.floats(3.0, 1e15), st.floats(-50, 50), st.integers(0, 10_000))
def test_nu_invariants(u, k, h):
    c = m.nu(u)
    assert 0 < c.nu < 1
    assert c.H > 0
    assert abs(c.H_k(k)) <= c.H * (1 + 1e-15)
    assert math.isclose(float(c.power(h)), c.nu**h, rel_tol=1e-12 * (1 + h), abs_tol=1e-300)


def test_r_sum_geometric_example():
    r = m.r_sum(m.RSumParams(), E10)
    assert abs(r.re - 0.81 / 0.19) < 1e-9
    assert abs(r.re - 4.2632) < 1e-4
    assert r.im == 0.0


@given(st.floats(3.0, 1e12))
def test_r_sum_closed_form_everywhere(u):
    r = m.r_sum(m.RSumParams(), u)
    assert abs(r.re - m.r_closed_form(u)) <= 1e-9


def test_r00_within_two_of_half_log():
    for u in U_GRID:
        assert abs(m.r_sum(m.RSumParams(), u).re - 0.5 * math.log(u)) <= 2


def test_s00_example():
    s = m.s_sum(m.RSumParams(), E10)
    assert abs(s.re - (5 - 0.5 * math.log(10))) <= 1
    assert abs((5 - 0.5 * math.log(10)) - 3.8487) < 1e-4


def _literal_theta_one_residuals():
    p = m.RSumParams(theta=1.0, vartheta=1)
    return [abs(m.r_sum(p, u).re - 0.5 * math.log(2) * math.log(u) ** 2) for u in U_GRID]


@pytest.mark.xfail(strict=True, reason="the (log h)-weighted sum grows like H^2 log H, not (log 2)(log u)^2")
def test_theta_one_vartheta_one_literal_claim():
    res = _literal_theta_one_residuals()
    assert max(res) <= res[0] + 1


def test_theta_one_vartheta_one_corrected_form():
    # sum over even h of h log h nu^h = H^2 (log H + 1 - C0) / 2 + O(1)
    c0 = constants().euler_mascheroni
    p = m.RSumParams(theta=1.0, vartheta=1)
    res = []
    for u in U_GRID:
        H = m.nu(u).H
        res.append(m.r_sum(p, u).re - 0.5 * H * H * (math.log(H) + 1 - c0))
    assert max(abs(r) for r in res) < 0.5
    assert max(res) - min(res) < 0.05


@pytest.mark.parametrize("theta", [0.0, 0.25, 0.5, 1.0])
def test_theta_sums_in_terms_of_H(theta):
    # sum over even h of h^theta nu^h = Gamma(1+theta) H^(1+theta) / 2 + O(1)
    p = m.RSumParams(theta=theta)
    res = [
        m.r_sum(p, u).re - 0.5 * m.gamma_function(1 + theta) * m.nu(u).H ** (1 + theta)
        for u in U_GRID
    ]
    assert max(abs(r) for r in res) < 1
    assert max(res) - min(res) < 0.05


CASES = [
    m.RSumParams(),
    m.RSumParams(theta=0.5, vartheta=1),
    m.RSumParams(theta=1.0, vartheta=1, k=3),
    m.RSumParams(j=1, k=2),
    m.RSumParams(j=2, k=4, phase_family="conjugate"),
]


@pytest.mark.parametrize("params", CASES)
@pytest.mark.parametrize("u", [30.0, 1e3, 1e6, 1e9])
def test_truncation_stability(params, u):
    h0 = m.default_h_max(u)
    for fn in (m.r_sum, m.s_sum):
        a = fn(params, u, h0)
        b = fn(params, u, 2 * h0)
        assert abs(a.value - b.value) < 1e-9
        assert a.abs_error <= 1e-9


def test_insufficient_truncation():
    with pytest.raises(m.InsufficientTruncation):
        m.r_sum(m.RSumParams(), 1e6, 10)
    # near u = 3, 2 ceil((log u)^3) = 4 leaves a tail of about nu^6 ~ 5e-7
    with pytest.raises(m.InsufficientTruncation):
        m.r_sum(m.RSumParams(), 3.0, m.default_h_max(3.0))
    r = m.r_sum(m.RSumParams(), 3.0)
    assert r.h_max > m.default_h_max(3.0)
    assert abs(r.re - m.r_closed_form(3.0)) <= 1e-12


def test_params_validation():
    with pytest.raises(ValueError):
        m.RSumParams(theta=1.5)
    with pytest.raises(ValueError):
        m.RSumParams(vartheta=2)
    with pytest.raises(ValueError):
        m.RSumParams(phase_family="random")
    with pytest.raises(ValueError):
        m.RSumParams(gamma1=0.4)


def test_conjugate_family_has_unit_product():
    a = m.s_sum(m.RSumParams(k=5, phase_family="conjugate"), E10)
    b = m.s_sum(m.RSumParams(), E10)
    assert a.value == b.value


def test_phase_one_depends_on_j_only_through_global_phase():
    a = m.s_sum(m.RSumParams(j=0, k=3), E10)
    b = m.s_sum(m.RSumParams(j=1, k=3), E10)
    assert math.isclose(abs(a), abs(b), rel_tol=1e-9)


def test_d_hL_examples():
    u = E10
    assert m.d_hL(2, 0, u).value == m.nu(u).power(2)
    assert abs(m.d_hL(2, 0, u).value - 0.81) < 1e-15
    assert m.d_hL(2, 1, u).value == 0.0
    assert m.d_hL(4, 2, u).value != 0.0
    with pytest.raises(ValueError):
        m.d_hL(4, 3, u)
    with pytest.raises(ValueError):
        m.d_hL(3, 0, u)


@pytest.mark.parametrize("h", range(2, 13, 2))
@pytest.mark.parametrize("L", [0, 1, 2])
@pytest.mark.parametrize("u", [3.0, 50.0, E10, 1e8])
def test_d_hL_matches_subset_enumeration(h, L, u):
    s0 = modified_pair_table(16)
    want = d_hL_bruteforce(h, L, u, lambda d: float(s0[d]))
    got = m.d_hL(h, L, u).value
    assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-15)


def test_gap_prediction_small_x():
    a = m.gap_count_prediction(2, 10)
    b = m.gap_count_prediction(2, 20)
    c = m.gap_count_prediction(2, 1000)
    assert 0 < a < b < c
    with pytest.raises(ValueError):
        m.gap_count_prediction(2, 5)
    with pytest.raises(ValueError):
        m.gap_count_prediction(5, 100)


@pytest.mark.parametrize("h", [2, 6, 30])
def test_gap_prediction_quadrature_stable(h):
    a = m.gap_count_prediction(h, 1e8, rel_tol=1e-6)
    b = m.gap_count_prediction(h, 1e8, rel_tol=5e-7)
    assert abs(a - b) <= 1e-5 * abs(a)


def test_conjecture_main_term():
    # 10^(8/3) / (2.25 log 10^8)
    v = m.conjecture_main_term(1e8, 1.5, 1.5)
    assert abs(v - 10 ** (8 / 3) / (2.25 * math.log(1e8))) < 1e-9
    assert abs(v - 11.19898) < 1e-5
    w = m.conjecture_main_term(1e6, 1.2, 1.4)
    assert abs(w - 1e6 ** (1 / 1.2 + 1 / 1.4 - 1) / (1.2 * 1.4 * math.log(1e6))) < 1e-9
    c = 1 + 1e-9
    near = m.conjecture_main_term(1e6, c, c)
    assert abs(near / (1e6 / math.log(1e6)) - 1) < 1e-6


def test_log_integral_power():
    ref = li_series(1e6) - li_series(2)
    assert abs(m.log_integral_power(1e6, 1) - ref) <= 1e-9 * ref
    assert abs(ref - 78625.5) < 1.1
    a, b = m.log_integral_power(10, 2), m.log_integral_power(11, 2)
    assert 0 < a < b
    f = lambda v: math.exp(v) / v**2
    coarse = simpson_fixed(f, math.log(2), math.log(1e8), 20000)
    fine = simpson_fixed(f, math.log(2), math.log(1e8), 40000)
    oracle = fine + (fine - coarse) / 15
    assert abs(m.log_integral_power(1e8, 2) - oracle) <= 1e-6 * oracle
    with pytest.raises(ValueError):
        m.log_integral_power(2, 1)


def test_gamma_function():
    assert abs(m.gamma_function(1) - 1) < 1e-15
    assert abs(m.gamma_function(2) - 1) < 1e-15
    assert abs(m.gamma_function(1.5) - math.sqrt(math.pi) / 2) < 1e-15
    for i in range(201):
        z = 1 + i / 200
        assert abs(m.gamma_function(z) / math.gamma(z) - 1) < 1e-12
    with pytest.raises(ValueError):
        m.gamma_function(0.5)


def test_csv_tables():
    rows = [(E10, 1.0, m.s_sum(m.RSumParams(k=1), E10))]
    import io

    buf = io.StringIO()
    m.write_decay_csv(buf, rows)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "u,k,re,im,bound"
    assert float(lines[1].split(",")[2]) == rows[0][2].re
    text = m.dhl_csv([m.d_hL(4, 2, E10)])
    assert text.splitlines()[0] == "h,L,u,value"
