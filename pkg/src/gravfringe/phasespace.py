"""Phase-space (Wigner) representation and bracket dynamics.

Everything the two-state picture asserts can be rederived with no basis
truncation by evolving the Wigner function W(q, p) of the full state on
a grid.  Two tangents are implemented:

* the Poisson bracket (classical transport),

      dW/dt = V'(q) dW/dp - (p/m) dW/dq,

* the Moyal bracket (quantum evolution), which for H = p^2/2m + V(q)
  adds only odd-derivative potential corrections:

      dW/dt = {H, W} + sum_{n>=1} (-1)^n hbar^(2n) / (4^n (2n+1)!)
                        * V^(2n+1)(q) * d^(2n+1)W/dp^(2n+1).

The series terminates for quadratic potentials (quantum = classical
transport there, exactly) and converges geometrically for the two-ball
potential, each order smaller by roughly (arm separation / 2 distance)^2,
so a small truncation order suffices and the truncated tail is
reported, not guessed.

The two-packet interferometer state has a closed-form Wigner function:
two Gaussian lobes at q = -+ dx/2 plus an interference ridge at q = 0
whose fringes in p carry the arm coherence.  The coherence is read back
out by the trace rule (overlap against the conjugate cross kernel), and
independently through the position-space kernel recovered by the
inverse (Weyl) transform

    rho(x, y) = INT dp exp(i p (x - y) / hbar) W((x + y)/2, p).

p-derivatives are spectral (FFT), so smooth fields differentiate to
near machine precision and the integral of every tangent vanishes
identically (the evolution conserves total probability by
construction).  Axes are uniform and endpoint-exclusive (periodic FFT
layout).  All quantities are unit-agnostic: the desk-scale oracle runs
in nondimensional units where the fringes are resolvable; SI
configurations would put ~1e32 fringe periods across any feasible grid,
so the scaled route is the only honest one.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DerivativeOrderError,
    DomainError,
    GridError,
    InstabilityError,
    NonOrthogonalPacketsError,
)
from .gravity import two_ball_derivative, two_ball_potential

__all__ = [
    "WignerGrid",
    "HamiltonianField",
    "BracketOrder",
    "wigner_from_two_packets",
    "poisson_bracket",
    "potential_bracket",
    "kinetic_bracket",
    "moyal_bracket",
    "moyal_correction_terms",
    "truncation_tail_ratio",
    "evolve_wigner",
    "weyl_density_matrix",
    "arm_coherence",
    "coherence_from_kernel",
    "potential_commutator_term",
    "save_grid",
    "load_grid",
]

_ORTHOGONALITY_THRESHOLD = 1e-6
_NORMALIZATION_SLACK = 1e-6
_EVOLUTION_NORM_SLACK = 1e-5
_INSTABILITY_FACTOR = 1e6


def _check_uniform(axis: np.ndarray, name: str) -> float:
    steps = np.diff(axis)
    if axis.ndim != 1 or axis.size < 8:
        raise GridError(f"{name} axis must be 1-d with at least 8 points")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise GridError(f"{name} axis must be uniform")
    return float(steps[0])


@dataclass(frozen=True)
class WignerGrid:
    """A Wigner function sampled on a uniform rectangular grid.

    ``values[i, j]`` is W(q_axis[i], p_axis[j]).  Axes are uniform and
    endpoint-exclusive; ``hbar`` fixes the quantum scale of the state
    (transforms and Moyal corrections read it from here); ``time``
    stamps the snapshot.
    """

    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    hbar: float = 1.0
    time: float = 0.0

    def __post_init__(self) -> None:
        q = np.asarray(self.q_axis, dtype=float)
        p = np.asarray(self.p_axis, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "q_axis", q)
        object.__setattr__(self, "p_axis", p)
        object.__setattr__(self, "values", v)
        _check_uniform(q, "q")
        _check_uniform(p, "p")
        if v.shape != (q.size, p.size):
            raise GridError(
                f"values shape {v.shape} does not match axes "
                f"({q.size}, {p.size})"
            )
        if not self.hbar > 0.0:
            raise GridError("hbar must be strictly positive")

    @property
    def dq(self) -> float:
        return float(self.q_axis[1] - self.q_axis[0])

    @property
    def dp(self) -> float:
        return float(self.p_axis[1] - self.p_axis[0])

    def norm(self) -> float:
        """Total probability: the grid integral of W."""
        return float(self.values.sum() * self.dq * self.dp)

    def position_marginal(self) -> np.ndarray:
        """|psi(q)|^2 samples: integral of W over p."""
        return self.values.sum(axis=1) * self.dp

    def momentum_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dq


@dataclass(frozen=True)
class BracketOrder:
    """Truncation order of the Moyal correction series.

    ``n_max = 0`` keeps only the Poisson bracket; ``n_max = n`` keeps
    corrections up to the hbar^(2n) term (which involves the potential
    derivative of order 2n + 1).
    """

    n_max: int = 3

    def __post_init__(self) -> None:
        if not isinstance(self.n_max, int) or self.n_max < 0:
            raise ValueError("n_max must be a non-negative integer")

    @property
    def highest_derivative(self) -> int:
        return 2 * self.n_max + 1


def _as_order(order: BracketOrder | int) -> BracketOrder:
    return order if isinstance(order, BracketOrder) else BracketOrder(int(order))


@dataclass(frozen=True)
class HamiltonianField:
    """H = p^2 / (2 mass) + V(q), with V sampled on the grid axis.

    ``derivatives[k - 1]`` holds V^(k) on ``q_axis`` for k = 1 ...
    ``max_order``.  Constructors fill these from closed forms; the
    generic one takes callables so any smooth potential can drive the
    oracle.
    """

    mass: float
    q_axis: np.ndarray
    potential: np.ndarray
    derivatives: np.ndarray  # shape (max_order, n_q)

    def __post_init__(self) -> None:
        q = np.asarray(self.q_axis, dtype=float)
        object.__setattr__(self, "q_axis", q)
        object.__setattr__(self, "potential", np.asarray(self.potential, dtype=float))
        object.__setattr__(
            self, "derivatives", np.asarray(self.derivatives, dtype=float)
        )
        if not self.mass > 0.0:
            raise ValueError("mass must be strictly positive")
        _check_uniform(q, "q")
        if self.potential.shape != q.shape:
            raise GridError("potential samples must match the q axis")
        if self.derivatives.ndim != 2 or self.derivatives.shape[1] != q.size:
            raise GridError("derivative rows must match the q axis")

    @property
    def max_order(self) -> int:
        return int(self.derivatives.shape[0])

    def derivative(self, order: int) -> np.ndarray:
        if not 1 <= order <= self.max_order:
            raise DerivativeOrderError(
                f"V^({order}) requested but the field carries orders "
                f"1..{self.max_order}"
            )
        return self.derivatives[order - 1]

    @classmethod
    def from_two_ball(
        cls,
        q_axis: np.ndarray,
        mass: float,
        coupling_left: float,
        coupling_right: float,
        dist_left: float,
        dist_right: float,
        max_order: int = 7,
    ) -> "HamiltonianField":
        """Two-ball field -g1/(d1+q) - g2/(d2-q) on the axis.

        The axis must lie strictly inside (-d1, d2); the closed-form
        derivative ladder is exact at every order.
        """
        q = np.asarray(q_axis, dtype=float)
        if q[0] <= -dist_left or q[-1] >= dist_right:
            raise DomainError(
                "grid reaches a ball centre: the q axis must lie inside "
                f"(-{dist_left!r}, {dist_right!r})"
            )
        pot = two_ball_potential(q, coupling_left, coupling_right, dist_left, dist_right)
        rows = [
            two_ball_derivative(
                q, coupling_left, coupling_right, dist_left, dist_right, order=k
            )
            for k in range(1, max_order + 1)
        ]
        return cls(mass, q, pot, np.vstack(rows))

    @classmethod
    def from_quadratic(
        cls,
        q_axis: np.ndarray,
        mass: float,
        curvature: float = 0.0,
        slope: float = 0.0,
        max_order: int = 7,
    ) -> "HamiltonianField":
        """V(q) = curvature * q^2 + slope * q (all higher derivatives 0)."""
        q = np.asarray(q_axis, dtype=float)
        pot = curvature * q * q + slope * q
        rows = np.zeros((max_order, q.size))
        rows[0] = 2.0 * curvature * q + slope
        if max_order >= 2:
            rows[1] = 2.0 * curvature
        return cls(mass, q, pot, rows)

    @classmethod
    def from_callables(
        cls,
        q_axis: np.ndarray,
        mass: float,
        potential,
        derivatives,
    ) -> "HamiltonianField":
        """Sample a potential and its derivative callables on the axis."""
        q = np.asarray(q_axis, dtype=float)
        rows = np.vstack([np.broadcast_to(d(q), q.shape) for d in derivatives])
        return cls(mass, q, np.broadcast_to(potential(q), q.shape).copy(), rows)


def _require_aligned(h: HamiltonianField, w: WignerGrid) -> None:
    if h.q_axis.shape != w.q_axis.shape or not np.allclose(
        h.q_axis, w.q_axis, rtol=1e-12, atol=0.0
    ):
        raise GridError("Hamiltonian field and Wigner grid q axes differ")


# ------------------------------------------------------------ two packets


def wigner_from_two_packets(
    arm_separation: float,
    packet_width: float,
    coherence: complex,
    hbar: float = 1.0,
    n_q: int = 512,
    n_p: int = 512,
    q_span: tuple[float, float] | None = None,
    p_span: tuple[float, float] | None = None,
) -> WignerGrid:
    """Closed-form Wigner function of the two-arm state.

    The state is rho = (1/2)(|L><L| + |R><R|) + c |L><R| + conj(c)
    |R><L| with Gaussian packets of position spread ``packet_width`` at
    q = -+ ``arm_separation``/2 and ``c = coherence``:

        W(q, p) = (1/(2 pi hbar)) [G(q + a, p) + G(q - a, p)]
                  + (2/(pi hbar)) Re[c e^{i p dx / hbar}] G(q, p),

        G(q, p) = exp(-q^2/(2 sigma^2) - 2 sigma^2 p^2 / hbar^2),
        a = dx/2.

    Defaults: q spans +-1.5 dx, p spans +-8 hbar/sigma, 512 x 512.
    The arms must be effectively orthogonal (overlap <L|R> =
    exp(-dx^2 / (8 sigma^2)) below 1e-6), the q span must cover
    [-dx, dx], the p spacing must resolve the fringe wavevector
    dx/hbar at or above its Nyquist rate (a coarser grid would hold a
    silently aliased fringe), and the sampled grid must integrate to 1
    within 1e-6; each failure is a distinct error.
    """
    dx = float(arm_separation)
    sigma = float(packet_width)
    if dx <= 0.0 or sigma <= 0.0 or hbar <= 0.0:
        raise ValueError("arm_separation, packet_width, hbar must be positive")
    overlap = math.exp(-(dx * dx) / (8.0 * sigma * sigma))
    if overlap > _ORTHOGONALITY_THRESHOLD:
        raise NonOrthogonalPacketsError(
            f"arm overlap <L|R> = {overlap:.3g} exceeds "
            f"{_ORTHOGONALITY_THRESHOLD}; the two-arm description needs "
            "separated packets (increase arm_separation/packet_width)"
        )
    c = complex(coherence)
    if abs(c) > 0.5 + 1e-12:
        raise ValueError("|coherence| cannot exceed 1/2 for unit-trace states")
    if q_span is None:
        q_span = (-1.5 * dx, 1.5 * dx)
    if p_span is None:
        p_span = (-8.0 * hbar / sigma, 8.0 * hbar / sigma)
    q_lo, q_hi = map(float, q_span)
    if q_lo > -dx or q_hi < dx:
        raise GridError(
            f"q span [{q_lo!r}, {q_hi!r}] too small: it must cover "
            f"[-{dx!r}, {dx!r}] to contain both lobes"
        )
    q = q_lo + (q_hi - q_lo) * np.arange(n_q) / n_q
    p_lo, p_hi = map(float, p_span)
    dp = (p_hi - p_lo) / n_p
    fringe_limit = math.pi * hbar / dx
    if dp > fringe_limit * (1.0 + 1e-12):
        raise GridError(
            f"momentum spacing {dp!r} cannot resolve the interference "
            f"fringe: need dp <= pi*hbar/separation = {fringe_limit!r} "
            "(two samples per oscillation; the default grid gives four "
            "or more)"
        )
    p = p_lo + (p_hi - p_lo) * np.arange(n_p) / n_p

    a = dx / 2.0
    qq = q[:, None]
    pp = p[None, :]
    p_envelope = np.exp(-2.0 * sigma * sigma * pp * pp / (hbar * hbar))
    lobe_l = np.exp(-((qq + a) ** 2) / (2.0 * sigma * sigma))
    lobe_r = np.exp(-((qq - a) ** 2) / (2.0 * sigma * sigma))
    ridge = np.exp(-(qq * qq) / (2.0 * sigma * sigma))
    cross_phase = (c * np.exp(1j * pp * dx / hbar)).real
    values = (
        (0.5 * (lobe_l + lobe_r) + 2.0 * ridge * cross_phase)
        * p_envelope
        / (math.pi * hbar)
    )
    grid = WignerGrid(q, p, values, hbar=hbar)
    drift = abs(grid.norm() - 1.0)
    if drift > _NORMALIZATION_SLACK:
        raise GridError(
            f"sampled state integrates to 1{drift:+.2e}; the grid is too "
            "small or too coarse for this packet geometry"
        )
    return grid


# -------------------------------------------------------------- brackets


def _spectral_p_derivatives(
    values: np.ndarray, dp: float, orders: list[int]
) -> dict[int, np.ndarray]:
    """Odd-order p-derivatives of all rows via one forward FFT.

    The Nyquist mode of an even-length real signal carries no sign
    information for odd derivatives, so it is zeroed (standard choice;
    the fields here decay to ~1e-14 at the p boundary anyway).
    """
    n_p = values.shape[1]
    spectrum = np.fft.rfft(values, axis=1)
    k = 2.0 * math.pi * np.fft.rfftfreq(n_p, d=dp)
    out: dict[int, np.ndarray] = {}
    for order in orders:
        multiplier = (1j * k) ** order
        if order % 2 == 1 and n_p % 2 == 0:
            multiplier = multiplier.copy()
            multiplier[-1] = 0.0
        out[order] = np.fft.irfft(spectrum * multiplier, n=n_p, axis=1)
    return out


def _spectral_q_derivative(values: np.ndarray, dq: float) -> np.ndarray:
    """First q-derivative of all columns (same convention as in p)."""
    n_q = values.shape[0]
    spectrum = np.fft.rfft(values, axis=0)
    k = 2.0 * math.pi * np.fft.rfftfreq(n_q, d=dq)
    multiplier = (1j * k)[:, None]
    if n_q % 2 == 0:
        multiplier = multiplier.copy()
        multiplier[-1] = 0.0
    return np.fft.irfft(spectrum * multiplier, n=n_q, axis=0)


def potential_bracket(h: HamiltonianField, w: WignerGrid) -> np.ndarray:
    """Classical potential transport V'(q) dW/dp."""
    _require_aligned(h, w)
    dwdp = _spectral_p_derivatives(w.values, w.dp, [1])[1]
    return h.derivative(1)[:, None] * dwdp


def kinetic_bracket(h: HamiltonianField, w: WignerGrid) -> np.ndarray:
    """Free streaming -(p/m) dW/dq."""
    _require_aligned(h, w)
    dwdq = _spectral_q_derivative(w.values, w.dq)
    return -(w.p_axis[None, :] / h.mass) * dwdq


def poisson_bracket(h: HamiltonianField, w: WignerGrid) -> np.ndarray:
    """Classical Liouville tangent {H, W} (plain ndarray, W-shaped)."""
    return potential_bracket(h, w) + kinetic_bracket(h, w)


def _correction_coefficient(n: int, hbar: float) -> float:
    # (-1)^n hbar^(2n) / (4^n (2n+1)!)
    return (-1.0) ** n * hbar ** (2 * n) / (4.0**n * math.factorial(2 * n + 1))


def moyal_correction_terms(
    h: HamiltonianField, w: WignerGrid, order: BracketOrder | int
) -> list[np.ndarray]:
    """The hbar^(2n) correction fields for n = 1 .. n_max, in order.

    Each term is (-1)^n hbar^(2n) / (4^n (2n+1)!) V^(2n+1)(q)
    d^(2n+1)W/dp^(2n+1).  Raises :class:`DerivativeOrderError` if the
    field does not carry derivatives up to 2 n_max + 1.
    """
    _require_aligned(h, w)
    o = _as_order(order)
    _check_order(h, o)
    if o.n_max == 0:
        return []
    odd_orders = [2 * n + 1 for n in range(1, o.n_max + 1)]
    derivs = _spectral_p_derivatives(w.values, w.dp, odd_orders)
    return [
        _correction_coefficient(n, w.hbar)
        * h.derivative(2 * n + 1)[:, None]
        * derivs[2 * n + 1]
        for n in range(1, o.n_max + 1)
    ]


def _check_order(h: HamiltonianField, o: BracketOrder) -> None:
    if o.highest_derivative > h.max_order:
        raise DerivativeOrderError(
            f"n_max={o.n_max} needs V^({o.highest_derivative}) but the "
            f"field carries orders 1..{h.max_order}"
        )


def _tangent_arrays(
    h: HamiltonianField,
    values: np.ndarray,
    dq: float,
    dp: float,
    p_axis: np.ndarray,
    hbar: float,
    o: BracketOrder,
    include_kinetic: bool,
) -> np.ndarray:
    """Shared tangent kernel: one FFT feeds all odd p-derivatives."""
    odd_orders = [2 * n + 1 for n in range(o.n_max + 1)]
    derivs = _spectral_p_derivatives(values, dp, odd_orders)
    out = h.derivative(1)[:, None] * derivs[1]
    if include_kinetic:
        out += -(p_axis[None, :] / h.mass) * _spectral_q_derivative(values, dq)
    for n in range(1, o.n_max + 1):
        out += (
            _correction_coefficient(n, hbar)
            * h.derivative(2 * n + 1)[:, None]
            * derivs[2 * n + 1]
        )
    return out


def moyal_bracket(
    h: HamiltonianField,
    w: WignerGrid,
    order: BracketOrder | int = BracketOrder(),
    include_kinetic: bool = True,
) -> np.ndarray:
    """Quantum tangent: Poisson bracket plus Moyal corrections.

    ``n_max = 0`` reduces to :func:`poisson_bracket` identically (same
    arithmetic, bit-for-bit).  For potentials with vanishing third and
    higher derivatives every correction is exactly zero, so quadratic
    dynamics is classical at any order.  ``include_kinetic=False``
    drops the streaming term for held packets (the trap freezes packet
    motion, leaving pure phase dynamics per q row).
    """
    _require_aligned(h, w)
    o = _as_order(order)
    _check_order(h, o)
    return _tangent_arrays(
        h, w.values, w.dq, w.dp, w.p_axis, w.hbar, o, include_kinetic
    )


def truncation_tail_ratio(
    h: HamiltonianField,
    w: WignerGrid,
    order: BracketOrder | int,
    include_kinetic: bool = True,
) -> float:
    """Size of the last kept correction relative to the full tangent.

    L1-norm ratio ||term_{n_max}|| / ||tangent||; with the geometric
    decay of the series this bounds the discarded tail to within a
    factor ~1/(1 - ratio).  For n_max = 0 the first *discarded* term is
    reported instead (when the field carries V''').  Returns 0 when
    corrections vanish identically (quadratic potentials).  Pass
    ``include_kinetic=False`` for held-packet runs so the streaming
    term does not dilute the denominator.
    """
    o = _as_order(order)
    tangent = moyal_bracket(h, w, o, include_kinetic=include_kinetic)
    scale = float(np.abs(tangent).sum())
    if scale == 0.0:
        return 0.0
    if o.n_max == 0:
        if h.max_order >= 3:
            first = moyal_correction_terms(h, w, BracketOrder(1))[0]
            return float(np.abs(first).sum() / scale)
        return 0.0
    last = moyal_correction_terms(h, w, o)[-1]
    return float(np.abs(last).sum() / scale)


# -------------------------------------------------------------- evolution


def stability_bound(
    h: HamiltonianField,
    w: WignerGrid,
    hold_packets: bool = False,
    order: BracketOrder | int = 0,
) -> float:
    """Largest safe RK4 step for the spectral tangent at this order.

    Every term of the tangent is, row by row, a spectral multiplier; the
    stiffest eigenvalue the stepper must resolve is bounded by

        lam = |V'|max * k_p + sum_n |c_n V^(2n+1)|max * k_p^(2n+1)
              [+ (|p|max/m) * k_q  when streaming],

    with k_p = pi/dp and k_q = pi/dq the grid's extreme wavenumbers.
    The correction-series contribution matters: near a potential
    singularity the high-order derivatives grow factorially and the
    n >= 1 terms, negligible on the physical signal, dominate the
    stability limit at the grid's edge rows.  The returned step keeps
    dt * lam at pi/4, comfortably inside the RK4 stability region
    (|z| <~ 2.8 on the imaginary axis).
    """
    o = _as_order(order)
    k_p = math.pi / w.dp
    lam = float(np.max(np.abs(h.derivative(1)))) * k_p
    for n in range(1, o.n_max + 1):
        high = float(np.max(np.abs(h.derivative(2 * n + 1))))
        lam += abs(_correction_coefficient(n, w.hbar)) * high * k_p ** (2 * n + 1)
    if not hold_packets:
        p_max = float(np.max(np.abs(w.p_axis)))
        lam += p_max / h.mass * math.pi / w.dq
    if lam == 0.0:
        return math.inf
    return (math.pi / 4.0) / lam


def evolve_wigner(
    h: HamiltonianField,
    w: WignerGrid,
    order: BracketOrder | int,
    t: float,
    dt: float | None = None,
    hold_packets: bool = False,
    enforce_stability_bound: bool = True,
) -> WignerGrid:
    """Integrate dW/dt = bracket(H, W) for time ``t`` with classic RK4.

    ``order`` selects the tangent (0 = classical transport, n >= 1 =
    quantum with corrections).  The default step is the stability bound;
    an explicit ``dt`` above the bound is rejected unless
    ``enforce_stability_bound=False`` (the escape hatch exists so the
    blow-up detector is reachable; production runs should never need
    it).  Blow-up past 1e6 times the initial amplitude raises
    :class:`InstabilityError`, as does a final probability drift beyond
    1e-5.
    """
    _require_aligned(h, w)
    o = _as_order(order)
    if t < 0.0:
        raise ValueError("evolution time must be non-negative")
    if t == 0.0:
        return w
    bound = stability_bound(h, w, hold_packets, o)
    if dt is None:
        if not math.isfinite(bound):
            raise ValueError("free constant field has no intrinsic step; pass dt")
        dt = bound
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if enforce_stability_bound and dt > bound * (1.0 + 1e-12):
        raise ValueError(
            f"dt = {dt!r} exceeds the stability bound {bound!r}; lower dt "
            "or pass enforce_stability_bound=False at your own risk"
        )
    n_steps = max(1, math.ceil(t / dt - 1e-12))
    step = t / n_steps

    include_kinetic = not hold_packets
    ceiling = _INSTABILITY_FACTOR * float(np.max(np.abs(w.values)))
    _check_order(h, o)

    def rhs(values: np.ndarray) -> np.ndarray:
        return _tangent_arrays(
            h, values, w.dq, w.dp, w.p_axis, w.hbar, o, include_kinetic
        )

    values = w.values.copy()
    for _ in range(n_steps):
        k1 = rhs(values)
        k2 = rhs(values + 0.5 * step * k1)
        k3 = rhs(values + 0.5 * step * k2)
        k4 = rhs(values + step * k3)
        values += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        peak = float(np.max(np.abs(values)))
        if not math.isfinite(peak) or peak > ceiling:
            raise InstabilityError(
                f"evolution blew up: |W| reached {peak:.3g} "
                f"(threshold {ceiling:.3g}); reduce dt or the grid spacing"
            )
    out = WignerGrid(w.q_axis, w.p_axis, values, hbar=w.hbar, time=w.time + t)
    drift = abs(out.norm() - w.norm())
    if drift > _EVOLUTION_NORM_SLACK:
        raise InstabilityError(
            f"evolution stopped conserving probability (drift {drift:.3g})"
        )
    return out


# ------------------------------------------------------------- transforms


def weyl_density_matrix(w: WignerGrid, x, y):
    """Position kernel rho(x, y) recovered from the grid.

    rho(x, y) = INT dp e^{i p (x - y)/hbar} W((x+y)/2, p), with the
    W row at (x+y)/2 obtained by cubic interpolation along q and the
    p integral done on the grid.  ``x`` and ``y`` broadcast; midpoints
    outside the q axis raise :class:`GridError`.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    mid = 0.5 * (xv + yv)
    sep = xv - yv
    if np.any(mid < w.q_axis[0]) or np.any(mid > w.q_axis[-1]):
        raise GridError(
            "midpoint (x+y)/2 outside the grid's q axis; the kernel there "
            "is not represented"
        )
    spline = CubicSpline(w.q_axis, w.values, axis=0)
    rows = spline(mid)  # (..., n_p)
    phases = np.exp(1j * np.multiply.outer(sep, w.p_axis) / w.hbar)
    out = (rows * phases).sum(axis=-1) * w.dp
    return out if out.ndim else complex(out)


def arm_coherence(
    w: WignerGrid, arm_separation: float, packet_width: float
) -> complex:
    """Read <L| rho |R> back off the grid by the trace rule.

    tr(rho |R><L|) = 2 pi hbar INT W_rho W_{|R><L|}, and the conjugate
    cross kernel is Gaussian, so

        c = 2 INT dq dp W(q, p) e^{-q^2/(2 sigma^2) - 2 sigma^2 p^2 /
            hbar^2} e^{-i p dx / hbar}.

    Exact (up to quadrature) for any state, not just two-packet ones;
    for the synthesised state it returns the input coherence.
    """
    dx = float(arm_separation)
    sigma = float(packet_width)
    qq = w.q_axis[:, None]
    pp = w.p_axis[None, :]
    kernel = np.exp(
        -(qq * qq) / (2.0 * sigma * sigma)
        - 2.0 * sigma * sigma * pp * pp / (w.hbar * w.hbar)
    ) * np.exp(-1j * pp * dx / w.hbar)
    return complex(2.0 * (w.values * kernel).sum() * w.dq * w.dp)


def coherence_from_kernel(
    w: WignerGrid,
    arm_separation: float,
    packet_width: float,
    n_quad: int = 96,
    half_width_sigmas: float = 6.0,
) -> complex:
    """Independent coherence probe through the position kernel.

    Computes <L| rho |R> = INT dx dy psi_L(x) rho(x, y) psi_R(y) with
    rho recovered by :func:`weyl_density_matrix` and trapezoid
    quadrature over +-``half_width_sigmas`` packet widths around each
    arm.  Slower than :func:`arm_coherence` and routed through the
    inverse transform instead of the trace rule, which is exactly what
    makes it a useful cross-check.
    """
    dx = float(arm_separation)
    sigma = float(packet_width)
    a = dx / 2.0
    half = half_width_sigmas * sigma
    xs = np.linspace(-a - half, -a + half, n_quad)
    ys = np.linspace(a - half, a + half, n_quad)
    norm = (2.0 * math.pi * sigma * sigma) ** -0.25
    psi_l = norm * np.exp(-((xs + a) ** 2) / (4.0 * sigma * sigma))
    psi_r = norm * np.exp(-((ys - a) ** 2) / (4.0 * sigma * sigma))
    kernel = weyl_density_matrix(w, xs[:, None], ys[None, :])
    integrand = psi_l[:, None] * kernel * psi_r[None, :]
    inner = np.trapezoid(integrand, ys, axis=1)
    return complex(np.trapezoid(inner, xs))


def potential_commutator_term(
    h: HamiltonianField,
    rho_kernel,
    x,
    y,
    hbar: float = 1.0,
):
    """Position-space image of the classical potential transport.

    (x - y) / (i hbar) * V'((x+y)/2) * rho(x, y): the first-order term
    of the von Neumann commutator [V, rho], which the Weyl transform of
    :func:`potential_bracket` must reproduce.  ``rho_kernel`` is any
    callable (x, y) -> complex; V' is interpolated from the field's
    samples.  Midpoints outside the axis raise :class:`DomainError`.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    mid = 0.5 * (xv + yv)
    if np.any(mid < h.q_axis[0]) or np.any(mid > h.q_axis[-1]):
        raise DomainError("midpoint (x+y)/2 outside the sampled potential axis")
    v1 = CubicSpline(h.q_axis, h.derivative(1))(mid)
    out = (xv - yv) / (1j * hbar) * v1 * rho_kernel(xv, yv)
    return out if np.ndim(out) else complex(out)


# ----------------------------------------------------------------- files

_MAGIC = b"WGRD"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQdddddd")  # magic, ver, n_q, n_p, q0,dq,p0,dp,hbar,time


def save_grid(w: WignerGrid, path: str | Path) -> None:
    """Write a grid as little-endian float64 with a fixed header.

    Layout: magic ``WGRD``, u32 version, u64 n_q, u64 n_p, f64 q0, dq,
    p0, dp, hbar, time, then n_q * n_p row-major f64 values.  A text
    sidecar ``<path>.meta`` mirrors the header for eyeballing.
    """
    path = Path(path)
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        w.q_axis.size,
        w.p_axis.size,
        float(w.q_axis[0]),
        w.dq,
        float(w.p_axis[0]),
        w.dp,
        w.hbar,
        w.time,
    )
    with path.open("wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(w.values, dtype="<f8").tobytes())
    sidecar = [
        f"format = WGRD v{_VERSION}",
        f"n_q = {w.q_axis.size}",
        f"n_p = {w.p_axis.size}",
        f"q_start = {float(w.q_axis[0])!r}",
        f"dq = {w.dq!r}",
        f"p_start = {float(w.p_axis[0])!r}",
        f"dp = {w.dp!r}",
        f"hbar = {w.hbar!r}",
        f"time = {w.time!r}",
        "layout = row-major float64 little-endian, q rows",
    ]
    Path(str(path) + ".meta").write_text("\n".join(sidecar) + "\n")


def load_grid(path: str | Path) -> WignerGrid:
    """Read a grid written by :func:`save_grid`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise GridError(f"{path}: truncated header")
    magic, version, n_q, n_p, q0, dq, p0, dp, hbar, time = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise GridError(f"{path}: not a Wigner grid file (bad magic {magic!r})")
    if version != _VERSION:
        raise GridError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * n_q * n_p
    if len(raw) != expected:
        raise GridError(
            f"{path}: size {len(raw)} does not match header "
            f"({n_q} x {n_p} grid needs {expected})"
        )
    values = (
        np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        .reshape(n_q, n_p)
        .astype(float)
    )
    q = q0 + dq * np.arange(n_q)
    p = p0 + dp * np.arange(n_p)
    return WignerGrid(q, p, values, hbar=hbar, time=time)
