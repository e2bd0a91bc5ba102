"""Wigner construction, brackets, evolution, and transforms.

Module-level physics tests run on reduced grids (256^2 and below) so
the whole file stays fast; the full-resolution validation lives in the
acceptance suite.
"""

import math

import numpy as np
import pytest

from gravfringe.errors import (
    DerivativeOrderError,
    DomainError,
    GridError,
    InstabilityError,
    NonOrthogonalPacketsError,
)
from gravfringe.phasespace import (
    BracketOrder,
    HamiltonianField,
    WignerGrid,
    arm_coherence,
    coherence_from_kernel,
    evolve_wigner,
    kinetic_bracket,
    load_grid,
    moyal_bracket,
    moyal_correction_terms,
    poisson_bracket,
    potential_bracket,
    potential_commutator_term,
    save_grid,
    stability_bound,
    truncation_tail_ratio,
    weyl_density_matrix,
    wigner_from_two_packets,
)

# scaled two-arm geometry used throughout: orthogonal packets, fringes
# resolvable on modest grids
DX = 8.0
SIGMA = 0.25
HBAR = 1.0


def small_state(coherence, n=256, span=8.5):
    return wigner_from_two_packets(
        DX,
        SIGMA,
        coherence,
        hbar=HBAR,
        n_q=n,
        n_p=n,
        q_span=(-span, span),
        p_span=(-32.0, 32.0),
    )


def two_ball_field(q_axis, g1=705.0, d1=20.0, max_order=7):
    # couplings in the exact 2:1 ratio with distances in sqrt(2) ratio:
    # the classical midpoint force cancels identically
    return HamiltonianField.from_two_ball(
        q_axis, 1.0, g1, 2.0 * g1, d1, d1 * math.sqrt(2.0), max_order=max_order
    )


# dx*(g1/(d1^2-a^2) - g2/(d2^2-a^2)) with a = dx/2: about 0.2997
OMEGA_Q_SCALED = DX * (705.0 / (20.0**2 - DX**2 / 4) - 1410.0 / (2 * 20.0**2 - DX**2 / 4))


# ------------------------------------------------------------ two packets


def test_incoherent_state_is_nonnegative_and_normalised():
    w = small_state(0.0)
    assert w.norm() == pytest.approx(1.0, abs=1e-9)
    assert w.values.min() >= -1e-9


def test_coherent_state_goes_negative():
    w = small_state(0.5)
    assert w.norm() == pytest.approx(1.0, abs=1e-9)
    assert w.values.min() < -0.1 / (math.pi * HBAR)


def test_closed_form_matches_independent_expression():
    # reimplementation of the closed form, point by point
    c = 0.3 + 0.15j
    w = small_state(c)
    rng = np.random.default_rng(5)
    iq = rng.integers(0, w.q_axis.size, 30)
    ip = rng.integers(0, w.p_axis.size, 30)
    a = DX / 2
    for i, j in zip(iq, ip):
        q, p = w.q_axis[i], w.p_axis[j]
        env = math.exp(-2 * SIGMA**2 * p**2 / HBAR**2)
        lobes = 0.5 * (
            math.exp(-((q + a) ** 2) / (2 * SIGMA**2))
            + math.exp(-((q - a) ** 2) / (2 * SIGMA**2))
        )
        ridge = 2 * math.exp(-(q**2) / (2 * SIGMA**2)) * (
            c * np.exp(1j * p * DX / HBAR)
        ).real
        expected = (lobes + ridge) * env / (math.pi * HBAR)
        assert w.values[i, j] == pytest.approx(expected, abs=1e-15)


def test_position_marginal_is_two_lobes():
    w = small_state(0.5)
    marginal = w.position_marginal()
    a = DX / 2
    norm = 1.0 / math.sqrt(2 * math.pi * SIGMA**2)
    expected = 0.5 * norm * (
        np.exp(-((w.q_axis + a) ** 2) / (2 * SIGMA**2))
        + np.exp(-((w.q_axis - a) ** 2) / (2 * SIGMA**2))
    )
    # the ridge integrates to the (negligible) packet overlap
    assert np.allclose(marginal, expected, atol=1e-9)


def test_momentum_marginal_fringes_track_coherence():
    fringed = small_state(0.5).momentum_marginal()
    flat = small_state(0.0).momentum_marginal()
    # dividing out the envelope leaves 1 + cos(p dx / hbar) for full
    # coherence: near-nulls at destructive momenta, near-2 at constructive
    window = flat > 1e-3 * flat.max()
    ratio = fringed[window] / flat[window]
    assert ratio.min() < 1e-3
    assert ratio.max() > 1.98


def test_overlapping_packets_rejected():
    with pytest.raises(NonOrthogonalPacketsError):
        wigner_from_two_packets(1.0, 0.25, 0.5)  # overlap e^-2


def test_too_small_span_rejected():
    with pytest.raises(GridError, match="span"):
        wigner_from_two_packets(DX, SIGMA, 0.5, q_span=(-6.0, 6.0), n_q=64, n_p=64)
    # [-6, 6] fails the cover-[-dx, dx] rule for dx = 8


def test_coherence_magnitude_capped():
    with pytest.raises(ValueError, match="coherence"):
        wigner_from_two_packets(DX, SIGMA, 0.7)


def test_aliasing_momentum_grid_rejected():
    # dp = 0.5 > pi/8: the fringe e^{ip dx} would fold onto a wrong
    # wavevector and every later phase readout would silently lie
    with pytest.raises(GridError, match="fringe"):
        wigner_from_two_packets(
            DX, SIGMA, 0.5, n_q=128, n_p=128, q_span=(-8.5, 8.5), p_span=(-32, 32)
        )


# -------------------------------------------------------------- brackets


def test_constant_field_has_zero_bracket():
    w = small_state(0.25)
    flat = WignerGrid(w.q_axis, w.p_axis, np.full_like(w.values, 0.3), hbar=HBAR)
    h = two_ball_field(w.q_axis)
    assert np.abs(poisson_bracket(h, flat)).max() == 0.0


def test_free_gaussian_bracket_matches_analytic():
    # V = 0: tangent is -(p/m) dW/dq, analytic for a Gaussian blob
    n = 128
    q = -6.0 + 12.0 * np.arange(n) / n
    p = -6.0 + 12.0 * np.arange(n) / n
    qq, pp = q[:, None], p[None, :]
    blob = np.exp(-(qq**2) / 0.5 - (pp - 1.0) ** 2 / 0.8)
    w = WignerGrid(q, p, blob, hbar=1.0)
    h = HamiltonianField.from_quadratic(q, mass=2.0)
    expected = -(pp / 2.0) * blob * (-2.0 * qq / 0.5)
    got = poisson_bracket(h, w)
    assert np.allclose(got, expected, atol=1e-10 * np.abs(expected).max())


def test_bracket_conserves_total_probability():
    w = small_state(0.4 + 0.2j)
    h = two_ball_field(w.q_axis)
    for tangent in (
        poisson_bracket(h, w),
        moyal_bracket(h, w, BracketOrder(3)),
        moyal_bracket(h, w, BracketOrder(2), include_kinetic=False),
    ):
        assert abs(tangent.sum() * w.dq * w.dp) < 1e-12


def test_moyal_zero_order_is_poisson_bitwise():
    w = small_state(0.3)
    h = two_ball_field(w.q_axis)
    assert np.array_equal(moyal_bracket(h, w, BracketOrder(0)), poisson_bracket(h, w))


def test_quadratic_potential_collapses_to_classical():
    w = small_state(0.5)
    h = HamiltonianField.from_quadratic(w.q_axis, 1.0, curvature=0.7, slope=-0.3)
    for n_max in (1, 2, 3):
        assert np.array_equal(
            moyal_bracket(h, w, BracketOrder(n_max)), poisson_bracket(h, w)
        )
        assert all(
            np.abs(t).max() == 0.0
            for t in moyal_correction_terms(h, w, BracketOrder(n_max))
        )


def test_correction_terms_decay_geometrically():
    w = small_state(0.5)
    h = two_ball_field(w.q_axis)
    terms = moyal_correction_terms(h, w, BracketOrder(3))
    norms = [float(np.abs(t).sum()) for t in terms]
    assert norms[1] < 0.5 * norms[0]
    assert norms[2] < 0.5 * norms[1]
    tail = truncation_tail_ratio(h, w, BracketOrder(3), include_kinetic=False)
    assert 0.0 < tail < 0.05


def test_insufficient_derivative_order():
    w = small_state(0.3)
    h = two_ball_field(w.q_axis, max_order=3)
    moyal_bracket(h, w, BracketOrder(1))  # needs V^(3): fine
    with pytest.raises(DerivativeOrderError, match=r"V\^\(5\)"):
        moyal_bracket(h, w, BracketOrder(2))


def test_misaligned_grids_rejected():
    w = small_state(0.3)
    other_axis = w.q_axis + 0.01
    h = two_ball_field(other_axis)
    with pytest.raises(GridError, match="axes"):
        poisson_bracket(h, w)


def test_field_inside_ball_centres():
    q = -12.0 + 24.0 * np.arange(64) / 64
    with pytest.raises(DomainError):
        HamiltonianField.from_two_ball(q, 1.0, 1.0, 2.0, 5.0, 40.0)  # d1 < span


def test_bracket_order_validation():
    with pytest.raises(ValueError):
        BracketOrder(-1)
    with pytest.raises(ValueError):
        BracketOrder(1.5)
    assert BracketOrder(2).highest_derivative == 5


# -------------------------------------------------------------- evolution


def test_free_streaming_matches_analytic_shear():
    n = 128
    q = -8.0 + 16.0 * np.arange(n) / n
    p = -4.0 + 8.0 * np.arange(n) / n
    qq, pp = q[:, None], p[None, :]
    mass, t = 2.0, 0.8

    def blob(qv, pv):
        return np.exp(-(qv**2) / 0.6 - (pv**2) / 0.9)

    w0 = WignerGrid(q, p, blob(qq, pp), hbar=1.0)
    h = HamiltonianField.from_quadratic(q, mass=mass)
    out = evolve_wigner(h, w0, BracketOrder(0), t, dt=0.01)
    expected = blob(qq - pp * t / mass, pp)
    assert np.allclose(out.values, expected, atol=5e-7)
    assert out.time == pytest.approx(t)


def test_held_two_ball_coherence_rotates_at_quantum_frequency():
    w = small_state(0.5)
    h = two_ball_field(w.q_axis)
    hold = 3.0
    n_snap = 7
    ts = np.linspace(0.0, hold, n_snap)
    phases = []
    current = w
    for k in range(1, n_snap):
        current = evolve_wigner(
            h, current, BracketOrder(3), float(ts[k] - ts[k - 1]), hold_packets=True
        )
        phases.append(np.angle(arm_coherence(current, DX, SIGMA)))
    slope = np.polyfit(ts[1:], np.unwrap(phases), 1)[0]
    assert slope == pytest.approx(OMEGA_Q_SCALED, rel=0.05)
    # and the classical transport accumulates (nulled geometry) ~nothing
    poisson_end = evolve_wigner(h, w, BracketOrder(0), hold, hold_packets=True)
    poisson_phase = abs(np.angle(arm_coherence(poisson_end, DX, SIGMA)))
    assert poisson_phase < 0.05 * OMEGA_Q_SCALED * hold


def test_evolution_conserves_norm_and_contrast_decays():
    w = small_state(0.5)
    h = two_ball_field(w.q_axis)
    out = evolve_wigner(h, w, BracketOrder(3), 2.0, hold_packets=True)
    assert out.norm() == pytest.approx(1.0, abs=1e-9)
    # inhomogeneous phase across the packets shrinks, never grows, |c|
    assert abs(arm_coherence(out, DX, SIGMA)) < 0.5


def test_oversized_step_rejected():
    w = small_state(0.3)
    h = two_ball_field(w.q_axis)
    bound = stability_bound(h, w, hold_packets=True)
    with pytest.raises(ValueError, match="stability"):
        evolve_wigner(h, w, BracketOrder(1), 1.0, dt=bound * 3, hold_packets=True)


def test_instability_detected_when_bound_bypassed():
    w = wigner_from_two_packets(
        DX, SIGMA, 0.3, n_q=128, n_p=128, q_span=(-8.5, 8.5), p_span=(-24.0, 24.0)
    )
    h = two_ball_field(w.q_axis)
    bound = stability_bound(h, w, hold_packets=True)
    with pytest.raises(InstabilityError):
        evolve_wigner(
            h,
            w,
            BracketOrder(0),
            200 * bound * 30,
            dt=bound * 30,
            hold_packets=True,
            enforce_stability_bound=False,
        )


def test_mirror_symmetry_preserved():
    # symmetric potential, real coherence: W is even under (q,p) -> (-q,-p);
    # evolution must keep it so.  On an endpoint-exclusive axis the mirror
    # partner of index k >= 1 is n - k, so compare with row/col 0 dropped.
    n = 128
    q = -8.5 + 17.0 * np.arange(n) / n
    w0 = wigner_from_two_packets(
        DX, SIGMA, 0.4, n_q=n, n_p=n, q_span=(-8.5, 8.5), p_span=(-24, 24)
    )
    h = HamiltonianField.from_two_ball(q, 1.0, 705.0, 705.0, 20.0, 20.0)
    out = evolve_wigner(h, w0, BracketOrder(2), 1.0, hold_packets=True)
    core = out.values[1:, 1:]
    assert np.allclose(core, core[::-1, ::-1], atol=1e-12)


# ------------------------------------------------------------- transforms


def test_weyl_diagonal_is_position_density():
    w = small_state(0.5)
    xs = w.q_axis[::31]
    diag = weyl_density_matrix(w, xs, xs)
    assert np.abs(diag.imag).max() < 1e-12
    marginal_interp = np.interp(xs, w.q_axis, w.position_marginal())
    assert np.allclose(diag.real, marginal_interp, atol=1e-6)
    assert diag.real.min() > -1e-6


def test_weyl_cross_kernel_carries_coherence():
    c = 0.3 - 0.2j
    w = small_state(c)
    a = DX / 2
    kernel = weyl_density_matrix(w, -a, a)
    # rho(-a, +a) ~ c * |g(0)|^2 = c / sqrt(2 pi sigma^2)
    assert kernel * math.sqrt(2 * math.pi * SIGMA**2) == pytest.approx(c, rel=1e-4)


def test_weyl_outside_grid_rejected():
    w = small_state(0.3)
    with pytest.raises(GridError, match="midpoint"):
        weyl_density_matrix(w, 9.0, 9.0)


def test_trace_rule_recovers_input_coherence():
    for c in (0.5, 0.0, 0.31 + 0.17j, -0.2 - 0.4j):
        w = small_state(c)
        assert arm_coherence(w, DX, SIGMA) == pytest.approx(complex(c), abs=1e-9)


def test_kernel_route_agrees_with_trace_rule():
    c = 0.28 + 0.33j
    w = small_state(c)
    via_kernel = coherence_from_kernel(w, DX, SIGMA)
    via_trace = arm_coherence(w, DX, SIGMA)
    assert via_kernel == pytest.approx(via_trace, abs=1e-3)
    assert via_kernel == pytest.approx(complex(c), abs=1e-3)


def test_commutator_identity_against_bracket_transform():
    # Weyl image of V'(q) dW/dp must equal (x-y)/(i hbar) V'((x+y)/2)
    # rho(x,y); both routes go through the same grid, so what is being
    # tested is the transform pair, not the sampling
    c = 0.3 + 0.2j
    w = small_state(c)
    h = two_ball_field(w.q_axis)
    tangent = WignerGrid(w.q_axis, w.p_axis, potential_bracket(h, w), hbar=HBAR)

    rng = np.random.default_rng(8)
    xs = rng.uniform(-4.5, 4.5, 20)
    ys = rng.uniform(-4.5, 4.5, 20)
    lhs = weyl_density_matrix(tangent, xs, ys)
    rhs = potential_commutator_term(
        h, lambda x, y: weyl_density_matrix(w, x, y), xs, ys, hbar=HBAR
    )
    scale = np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() < 1e-3 * scale


# ----------------------------------------------------------------- files


def test_grid_roundtrip(tmp_path):
    w = wigner_from_two_packets(
        DX,
        SIGMA,
        0.25 + 0.1j,
        n_q=128,
        n_p=128,
        q_span=(-8.5, 8.5),
        p_span=(-24.0, 24.0),
    )
    out = evolve_wigner(
        two_ball_field(w.q_axis), w, BracketOrder(1), 0.5, hold_packets=True
    )
    path = tmp_path / "state.wgrd"
    save_grid(out, path)
    back = load_grid(path)
    assert np.array_equal(back.values, out.values)
    assert np.allclose(back.q_axis, out.q_axis, rtol=0, atol=1e-15)
    assert back.hbar == out.hbar
    assert back.time == out.time
    assert (tmp_path / "state.wgrd.meta").exists()


def test_grid_bad_file_rejected(tmp_path):
    path = tmp_path / "junk.wgrd"
    path.write_bytes(b"NOPE" + b"\x00" * 100)
    with pytest.raises(GridError, match="magic"):
        load_grid(path)
    path.write_bytes(b"WG")
    with pytest.raises(GridError, match="truncated"):
        load_grid(path)
