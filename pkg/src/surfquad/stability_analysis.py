"""Gain conditions, regions of attraction and Lyapunov monitors.

All 2x2 eigenvalues and spectral norms are evaluated in closed form so the
results are exactly reproducible and easy to cross-check against LAPACK.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .attitude_errors import ErrorSetKind, psi_of
from .control_laws import AttitudeGains, PositionGains
from .errors import AntipodalError, NotPositiveDefiniteError, ThetaTooLargeError
from .metrics import Telemetry

THETA_CLAMP = 1.0 - 1e-9
# error-vector norms within this many ulps of zero are treated as round-off
RESOLUTION_ULPS = 1e3


class RoaVariant(enum.Enum):
    ATTITUDE = "attitude"
    NO_XV = "no_xv"
    BOUNDED_X = "bounded_x"
    BOUNDED_V = "bounded_v"
    ATTRACTIVENESS = "attractiveness"

    @classmethod
    def parse(cls, value) -> "RoaVariant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for v in cls:
            if key in (v.value, v.name.lower()):
                return v
        raise ValueError(f"unknown region variant {value!r}")


POSITION_VARIANTS = (RoaVariant.NO_XV, RoaVariant.BOUNDED_X, RoaVariant.BOUNDED_V)


# ---------------------------------------------------------------- 2x2 linear algebra

def eig_sym2(M: ArrayLike) -> tuple[float, float]:
    """Eigenvalues ``(low, high)`` of the symmetric part of a 2x2 matrix."""
    M = np.asarray(M, float)
    p, s, q = M[0, 0], 0.5 * (M[0, 1] + M[1, 0]), M[1, 1]
    mean = 0.5 * (p + q)
    rad = math.hypot(0.5 * (p - q), s)
    det = p * q - s * s
    # the eigenvalue nearer zero comes from the product to avoid cancellation
    if mean >= 0:
        hi = mean + rad
        return (det / hi if hi != 0.0 else 0.0), hi
    lo = mean - rad
    return lo, det / lo


def lambda_min(M: ArrayLike) -> float:
    return eig_sym2(M)[0]


def lambda_max(M: ArrayLike) -> float:
    return eig_sym2(M)[1]


def spectral_norm2(M: ArrayLike) -> float:
    """Largest singular value of a 2x2 matrix."""
    M = np.asarray(M, float)
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    # sigma_max = (sqrt((a+d)^2 + (c-b)^2) + sqrt((a-d)^2 + (b+c)^2)) / 2
    return 0.5 * (math.hypot(a + d, c - b) + math.hypot(a - d, b + c))


# ---------------------------------------------------------------- attitude mode

def check_attitude_gains(g: AttitudeGains) -> bool:
    """Strict ``eta > k_R / k_omega^2``."""
    return g.eta > g.k_R / g.k_omega**2


def attitude_roa_contains(R0: ArrayLike, Rd0: ArrayLike, e_omega0: ArrayLike, g: AttitudeGains,
                          kind: ErrorSetKind = ErrorSetKind.SET_ONE) -> bool:
    """Initial attitude error below 2 and ``|e_omega|^2 < 2 eta k_R (2 - Psi)``."""
    try:
        psi = psi_of(R0, Rd0, kind)
    except AntipodalError:
        return False
    eo = np.asarray(e_omega0, float)
    return psi < 2.0 and float(eo @ eo) < 2.0 * g.eta * g.k_R * (2.0 - psi)


def psi_a_of(psi0: float, e_omega0: ArrayLike, g: AttitudeGains) -> float:
    """Attitude-error ceiling ``V_Psi(0) / (eta k_R)`` along the attitude-mode solution."""
    eo = np.asarray(e_omega0, float)
    return (0.5 * float(eo @ eo) + g.eta * g.k_R * psi0) / (g.eta * g.k_R)


def w_matrices(g: AttitudeGains, kind: ErrorSetKind, psi_a: float = 1.0) -> tuple[NDArray, NDArray, NDArray]:
    """Sandwich bounds ``W1``, ``W2`` of the attitude Lyapunov function and its decay weight ``W3``."""
    kind = ErrorSetKind.parse(kind)
    base = g.k_R**2 / (2.0 * g.k_omega)
    ekk = g.eta * g.k_R * g.k_omega
    if kind is ErrorSetKind.SET_ONE:
        if not psi_a < 2.0:
            raise ValueError("psi_a must be below 2")
        w1, w2 = base + ekk, base + 2.0 / (2.0 - psi_a) * ekk
    else:
        w1, w2 = base + 2.0 * ekk, base + 4.0 * ekk
    half_kr, half_kw = 0.5 * g.k_R, 0.5 * g.k_omega
    W1 = np.array([[w1, -half_kr], [-half_kr, half_kw]])
    W2 = np.array([[w2, half_kr], [half_kr, half_kw]])
    W3 = np.diag([g.k_R**2, g.k_omega**2])
    return W1, W2, W3


def decay_rate(g: AttitudeGains, kind: ErrorSetKind, psi_a: float = 1.0) -> float:
    """Exponential rate ``tau = eta lambda_min(W3) / lambda_max(W2)``."""
    _, W2, W3 = w_matrices(g, kind, psi_a)
    return float(g.eta * min(W3[0, 0], W3[1, 1]) / lambda_max(W2))


def envelope_gain(V0: float, g: AttitudeGains, kind: ErrorSetKind, psi_a: float) -> float:
    """Constant ``mu`` of the attitude-error envelope ``Psi < min(2, mu exp(-tau t))``."""
    kind = ErrorSetKind.parse(kind)
    W1, _, _ = w_matrices(g, kind, psi_a)
    l1 = lambda_min(W1)
    if kind is ErrorSetKind.SET_ONE:
        return V0 / ((2.0 - psi_a) * l1)
    return 2.0 * V0 / l1


# ---------------------------------------------------------------- position mode

def _ratio(g: PositionGains, m: float) -> float:
    if m <= 0:
        raise ValueError("mass must be positive")
    return g.a * g.k_v**2 / (m * g.k_x)


def theta_max_no_xv(g: PositionGains, m: float) -> tuple[float, float, float]:
    """``(theta_max, delta1, delta2)`` for the region without position/velocity bounds.

    With ``r = a k_v^2 / (m k_x)`` the two terms are ``delta1 = 2 r sqrt(4r^2+4r+2)``
    and ``delta2 = -4r^2 - 2r``; their sum is evaluated as
    ``2r / (sqrt(4r^2+4r+2) + 2r + 1)`` to avoid cancellation.  The result is
    clamped just below 1 (the sum never reaches 1/2, so this is a guard only).
    """
    r = _ratio(g, m)
    root = math.sqrt(4 * r * r + 4 * r + 2)
    delta1 = 2 * r * root
    delta2 = -4 * r * r - 2 * r
    total = 2 * r / (root + 2 * r + 1)
    return min(r / (r + 1), total, THETA_CLAMP), delta1, delta2


def theta_max_bounded(g: PositionGains, m: float) -> float:
    """``a k_v^2 / (a k_v^2 + m k_x)`` for the regions with a position or velocity bound."""
    r = _ratio(g, m)
    return min(r / (r + 1), THETA_CLAMP)


def theta_max_of(g: PositionGains, m: float, variant: RoaVariant) -> float:
    variant = RoaVariant.parse(variant)
    if variant is RoaVariant.NO_XV:
        return theta_max_no_xv(g, m)[0]
    if variant in (RoaVariant.BOUNDED_X, RoaVariant.BOUNDED_V):
        return theta_max_bounded(g, m)
    raise ValueError(f"{variant.value} has no theta bound")


def build_pi_matrices(g: PositionGains, m: float, B: float, theta: float,
                      variant: RoaVariant = RoaVariant.NO_XV, e_bound: float = 0.0,
                      check: bool = True) -> tuple[NDArray, NDArray]:
    """Translational decay matrix ``Pi1`` and coupling matrix ``Pi2``.

    ``e_bound`` is the initial position (bounded-x) or velocity (bounded-v)
    error bound; it is ignored for the unbounded region.  With ``check`` the
    call raises :class:`ThetaTooLargeError` unless ``theta < theta_max``.
    """
    variant = RoaVariant.parse(variant)
    if variant not in POSITION_VARIANTS:
        raise ValueError(f"{variant.value} is not a position-mode region")
    if theta < 0 or B < 0 or e_bound < 0:
        raise ValueError("theta, B and e_bound must be nonnegative")
    if check:
        tmax = theta_max_of(g, m, variant)
        if not theta < tmax:
            raise ThetaTooLargeError(f"theta={theta:.6g} must be below theta_max={tmax:.6g}")
    a, kx, kv = g.a, g.k_x, g.k_v
    p11 = a * kx**2 * (1 - theta)
    p22 = a * kv**2 - theta * (m * kx + a * kv**2)
    if variant is RoaVariant.NO_XV:
        off = -a * kx * kv * theta - m * kx**2 * theta / (2 * kv)
        P1 = np.array([[p11, off], [off, p22]])
        P2 = np.array([[B * kx, 0.0], [B * kv, 0.0]])
        return P1, P2
    P1 = np.diag([p11, p22])
    extra = (2 * a * kx * kv + m * kx**2 / kv) * e_bound
    if variant is RoaVariant.BOUNDED_X:
        P2 = np.array([[B * kx, 0.0], [B * kv + extra, 0.0]])
    else:
        P2 = np.array([[B * kx + extra, 0.0], [B * kv, 0.0]])
    return P1, P2


def check_w3_condition(g: AttitudeGains, P1: ArrayLike, P2: ArrayLike) -> bool:
    """Strict ``lambda_min(W3) > |Pi2|^2 / (4 eta lambda_min(Pi1))``."""
    l1 = lambda_min(P1)
    if not l1 > 0:
        raise NotPositiveDefiniteError(f"Pi1 is not positive definite (lambda_min={l1:.6g})")
    return bool(min(g.k_R**2, g.k_omega**2) > spectral_norm2(P2) ** 2 / (4 * g.eta * l1))


def pi_bounds(g: PositionGains, m: float) -> tuple[NDArray, NDArray]:
    """Sandwich matrices ``Pi3``, ``Pi4`` of the translational Lyapunov function."""
    a, kx, kv = g.a, g.k_x, g.k_v
    d = a * kx * kv + m * kx**2 / (2 * kv)
    c = 0.5 * m * kx
    return np.array([[d, -c], [-c, 0.5 * m * kv]]), np.array([[d, c], [c, 0.5 * m * kv]])


def pi5(g: AttitudeGains, P1: ArrayLike, P2: ArrayLike) -> NDArray:
    """Decay matrix of the complete-system Lyapunov function."""
    c = -0.5 * spectral_norm2(P2)
    return np.array([[lambda_min(P1), c], [c, g.eta * min(g.k_R**2, g.k_omega**2)]])


def theta_w3_sup(g: PositionGains, m: float, B: float, variant: RoaVariant = RoaVariant.NO_XV,
                 e_bound: float = 0.0, tol: float = 1e-12) -> float:
    """Largest ``theta`` (by bisection) for which the coupling condition still holds; 0 if none."""
    tmax = theta_max_of(g, m, variant)

    def ok(th):
        P1, P2 = build_pi_matrices(g, m, B, th, variant, e_bound, check=False)
        return lambda_min(P1) > 0 and check_w3_condition(g.att, P1, P2)

    if not ok(0.0):
        return 0.0
    lo, hi = 0.0, tmax
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def psi_p_from_theta(theta: float, kind: ErrorSetKind) -> float:
    """Invert ``theta = sqrt(psi_p (2 - psi_p))`` (set one) or ``sqrt(psi_p (1 - psi_p/4))`` (set two)."""
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    base = theta**2 / (1 + math.sqrt(1 - theta**2))
    return base if ErrorSetKind.parse(kind) is ErrorSetKind.SET_ONE else 2 * base


def theta_from_psi_p(psi_p: float, kind: ErrorSetKind) -> float:
    if ErrorSetKind.parse(kind) is ErrorSetKind.SET_ONE:
        return math.sqrt(psi_p * (2 - psi_p))
    return math.sqrt(psi_p * (1 - psi_p / 4))


def e_omega_bound(g: AttitudeGains, ceiling: float, psi0: float = 0.0) -> float:
    """Admissible initial ``|e_omega|``: ``sqrt(2 eta k_R (ceiling - Psi(0)))``."""
    return math.sqrt(max(0.0, 2 * g.eta * g.k_R * (ceiling - psi0)))


@dataclass(frozen=True)
class RoaSpec:
    """A region of attraction: which variant, and its attitude/position bounds."""

    variant: RoaVariant
    psi_p: float = 1.0
    theta: float = 0.0
    e_x_max: float | None = None
    e_v_max: float | None = None
    B: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", RoaVariant.parse(self.variant))
        if self.variant in POSITION_VARIANTS and not 0 < self.psi_p < 1:
            raise ValueError("psi_p must lie in (0, 1) for position regions")
        if self.variant is RoaVariant.BOUNDED_X and self.e_x_max is None:
            raise ValueError("bounded-x region needs e_x_max")
        if self.variant is RoaVariant.BOUNDED_V and self.e_v_max is None:
            raise ValueError("bounded-v region needs e_v_max")

    @classmethod
    def for_gains(cls, g: PositionGains, m: float, kind: ErrorSetKind, variant=RoaVariant.NO_XV,
                  margin: float = 0.99, **bounds) -> "RoaSpec":
        """Region at ``theta = margin * theta_max`` with the matching ``psi_p``."""
        theta = margin * theta_max_of(g, m, variant)
        return cls(variant, psi_p=psi_p_from_theta(theta, kind), theta=theta, **bounds)

    def contains(self, psi0: float, e_omega0: ArrayLike, g: AttitudeGains,
                 e_x0: ArrayLike | None = None, e_v0: ArrayLike | None = None) -> bool:
        eo = np.asarray(e_omega0, float)
        w2 = float(eo @ eo)
        two_ek = 2 * g.eta * g.k_R
        if self.variant is RoaVariant.ATTITUDE:
            return psi0 < 2 and w2 < two_ek * (2 - psi0)
        if self.variant is RoaVariant.ATTRACTIVENESS:
            return self.psi_p <= psi0 < 2 and w2 < two_ek * (2 - psi0)
        if not (psi0 < self.psi_p and w2 < two_ek * (self.psi_p - psi0)):
            return False
        if self.variant is RoaVariant.BOUNDED_X:
            return e_x0 is not None and float(np.linalg.norm(e_x0)) < self.e_x_max
        if self.variant is RoaVariant.BOUNDED_V:
            return e_v0 is not None and float(np.linalg.norm(e_v0)) < self.e_v_max
        return True


# ---------------------------------------------------------------- report

@dataclass
class StabilityReport:
    kind: str
    gain_ok_attitude: bool
    tau: float
    psi_a: float
    e_omega0_bound: float
    eig_W1: tuple[float, float]
    eig_W2: tuple[float, float]
    eig_W3: tuple[float, float]
    theta_max: float | None = None
    theta_max_clamped: bool | None = None
    theta_max_bounded: float | None = None
    delta1: float | None = None
    delta2: float | None = None
    psi_p: float | None = None
    B: float | None = None
    theta: float | None = None
    gain_ok_w3: bool | None = None
    theta_w3_sup: float | None = None
    eig_Pi1: tuple[float, float] | None = None
    eig_Pi2: tuple[float, float] | None = None
    norm_Pi2: float | None = None
    eig_Pi3: tuple[float, float] | None = None
    eig_Pi4: tuple[float, float] | None = None
    eig_Pi5: tuple[float, float] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.gain_ok_attitude and self.gain_ok_w3 is not False

    def items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if f.name == "notes":
                out.extend((f"note_{i}", n) for i, n in enumerate(val))
            elif isinstance(val, tuple):
                out.append((f"{f.name}_min", repr(float(val[0]))))
                out.append((f"{f.name}_max", repr(float(val[1]))))
            elif isinstance(val, (bool, np.bool_)):
                out.append((f.name, "true" if val else "false"))
            elif isinstance(val, (float, np.floating)):
                out.append((f.name, repr(float(val))))
            else:
                out.append((f.name, str(val)))
        return out

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.items())


def stability_report(gains: AttitudeGains | PositionGains, kind: ErrorSetKind = ErrorSetKind.SET_ONE,
                     m: float | None = None, B: float | None = None, theta: float | None = None,
                     psi0: float = 1.0, e_omega0: ArrayLike = (0.0, 0.0, 0.0),
                     variant: RoaVariant = RoaVariant.NO_XV, e_bound: float = 0.0) -> StabilityReport:
    """Evaluate every gain condition and region quantity available for ``gains``.

    ``psi0``/``e_omega0`` describe the attitude-mode initial error used for
    ``psi_a`` (default: a 90 degree error at rest).  Position quantities need
    ``m``; the coupling condition additionally needs ``B`` and is evaluated at
    ``theta`` (default: the largest admissible value is searched and reported
    as ``theta_w3_sup``, and the condition is checked at ``theta = 0.1``
    clipped below ``theta_max``).
    """
    kind = ErrorSetKind.parse(kind)
    att = gains.att if isinstance(gains, PositionGains) else gains
    psi_a = psi_a_of(psi0, e_omega0, att)
    W1, W2, W3 = w_matrices(att, kind, min(psi_a, 2 - 1e-12))
    rep = StabilityReport(
        kind=kind.value, gain_ok_attitude=check_attitude_gains(att), tau=decay_rate(att, kind, min(psi_a, 2 - 1e-12)),
        psi_a=psi_a, e_omega0_bound=e_omega_bound(att, 2.0, psi0),
        eig_W1=eig_sym2(W1), eig_W2=eig_sym2(W2), eig_W3=eig_sym2(W3),
    )
    if not isinstance(gains, PositionGains):
        return rep
    if m is None:
        raise ValueError("position gains need the vehicle mass")
    variant = RoaVariant.parse(variant)
    tmax_raw, d1, d2 = theta_max_no_xv(gains, m)
    r = _ratio(gains, m)
    rep.delta1, rep.delta2 = d1, d2
    rep.theta_max = theta_max_of(gains, m, variant)
    rep.theta_max_clamped = min(r / (r + 1), d1 + d2) >= THETA_CLAMP if variant is RoaVariant.NO_XV else r / (r + 1) >= THETA_CLAMP
    rep.theta_max_bounded = theta_max_bounded(gains, m)
    rep.psi_p = psi_p_from_theta(rep.theta_max, kind)
    rep.e_omega0_bound = e_omega_bound(att, rep.psi_p)
    P3, P4 = pi_bounds(gains, m)
    rep.eig_Pi3, rep.eig_Pi4 = eig_sym2(P3), eig_sym2(P4)
    if B is None:
        return rep
    rep.B = B
    if theta is None:
        theta = min(0.1, 0.5 * rep.theta_max)
        rep.notes.append(f"theta defaulted to {theta!r}")
    rep.theta = theta
    P1, P2 = build_pi_matrices(gains, m, B, theta, variant, e_bound)
    rep.eig_Pi1, rep.eig_Pi2 = eig_sym2(P1), eig_sym2(P2)
    rep.norm_Pi2 = spectral_norm2(P2)
    rep.eig_Pi5 = eig_sym2(pi5(att, P1, P2))
    try:
        rep.gain_ok_w3 = bool(check_w3_condition(att, P1, P2))
    except NotPositiveDefiniteError as exc:
        rep.gain_ok_w3 = False
        rep.notes.append(str(exc))
    rep.theta_w3_sup = theta_w3_sup(gains, m, B, variant, e_bound)
    return rep


# ---------------------------------------------------------------- Lyapunov monitors

@dataclass
class LyapunovMonitor:
    """Per-sample Lyapunov values and discrete checks of their decay bounds.

    Residuals are arranged so that a positive value is a violation.  Rate
    residuals live on the ``n - 1`` step midpoints and compare a forward
    difference with the trapezoidal mean of the bound; that pairing has a
    relative truncation error of order ``(rate * dt)^2 / 12``, hence the
    relative tolerance in :meth:`violations`.  ``scales`` holds the magnitude
    each residual is measured against.
    """

    t: NDArray
    V: NDArray
    V_psi: NDArray
    z_R: NDArray
    psi: NDArray
    psi_a: float
    tau: float
    mu: float
    floor: float
    res_V: NDArray
    res_V_psi: NDArray
    res_lower: NDArray
    res_upper: NDArray
    res_envelope: NDArray
    V_x: NDArray | None = None
    V_g: NDArray | None = None
    z_x: NDArray | None = None
    res_V_g: NDArray | None = None
    scales: dict = field(default_factory=dict)

    @property
    def envelope(self) -> NDArray:
        return np.minimum(2.0, self.mu * np.exp(-self.tau * (self.t - self.t[0])))

    def resolvable(self, which: str = "V") -> NDArray:
        """Step mask where the Lyapunov value exceeds its round-off floor at the step start."""
        return getattr(self, which)[:-1] > self.floor

    def decreasing_fraction(self, which: str = "V", resolvable_only: bool = True) -> float:
        vals = getattr(self, which)
        d = np.diff(vals) < 0
        if resolvable_only:
            mask = self.resolvable(which)
            return float(np.mean(d[mask])) if mask.any() else 1.0
        return float(np.mean(d))

    def violations(self, residual: str, rtol: float = 1e-3, resolvable_only: bool = True) -> NDArray:
        """Timestamps where ``residual`` exceeds ``rtol`` times its scale.

        Rate residuals are stamped at the step start.  With ``resolvable_only``
        samples whose attitude Lyapunov value is at round-off level are skipped.
        """
        r = getattr(self, residual)
        if r is None:
            return np.empty(0)
        tol = rtol * np.abs(self.scales.get(residual, 0.0))
        bad = r > tol
        if resolvable_only:
            bad &= self.V[: len(r)] > self.floor
        return self.t[: len(r)][bad]


def _rows_norm(a: NDArray) -> NDArray:
    return np.sqrt(np.einsum("ij,ij->i", a, a))


def _quad(z: NDArray, W: NDArray) -> NDArray:
    return W[0, 0] * z[:, 0] ** 2 + (W[0, 1] + W[1, 0]) * z[:, 0] * z[:, 1] + W[1, 1] * z[:, 1] ** 2


def lyapunov_monitors(tel: Telemetry, gains: AttitudeGains | PositionGains,
                      kind: ErrorSetKind = ErrorSetKind.SET_ONE, m: float | None = None,
                      B: float | None = None, theta: float | None = None) -> LyapunovMonitor:
    """Evaluate the Lyapunov functions along a recorded run (one mode, one phase).

    Attitude quantities use the recorded ``psi``, ``e_R`` and ``e_omega``.
    When ``gains`` are position gains the translational and complete-system
    functions are added; the complete-system rate check needs ``B`` and
    ``theta`` (the attitude-error norm bound of the region).
    """
    kind = ErrorSetKind.parse(kind)
    att = gains.att if isinstance(gains, PositionGains) else gains
    if np.isnan(tel.psi).any():
        raise ValueError("telemetry lacks attitude errors on some samples")
    dt = tel.dt
    eR, eW = _rows_norm(tel.e_R), _rows_norm(tel.e_omega)
    z_R = np.column_stack([eR, eW])
    s_R = att.k_R * tel.e_R + att.k_omega * tel.e_omega
    psi = tel.psi
    V = np.einsum("ij,ij->i", s_R, s_R) / (2 * att.k_omega) + 2 * att.eta * att.k_R * att.k_omega * psi
    V_psi = 0.5 * eW**2 + att.eta * att.k_R * psi

    psi_a = float(V_psi[0] / (att.eta * att.k_R))
    pa = min(psi_a, 2 - 1e-12)
    W1, W2, W3 = w_matrices(att, kind, pa)
    tau = decay_rate(att, kind, pa)
    mu = envelope_gain(float(V[0]), att, kind, pa)

    def mid(x):
        return 0.5 * (x[1:] + x[:-1])

    q3 = _quad(z_R, W3)
    res_V = np.diff(V) / dt + att.eta * mid(q3)
    res_V_psi = np.diff(V_psi) / dt + (att.eta * att.k_omega - att.k_R / att.k_omega) * mid(eW**2)
    res_lower = _quad(z_R, W1) - V
    res_upper = V - _quad(z_R, W2)
    env = np.minimum(2.0, mu * np.exp(-tau * (tel.t - tel.t[0])))
    res_env = psi - env
    floor = lambda_max(W2) * (RESOLUTION_ULPS * np.finfo(float).eps) ** 2

    mon = LyapunovMonitor(t=tel.t, V=V, V_psi=V_psi, z_R=z_R, psi=psi, psi_a=psi_a, tau=tau, mu=mu,
                          floor=floor, res_V=res_V, res_V_psi=res_V_psi, res_lower=res_lower,
                          res_upper=res_upper, res_envelope=res_env)
    mon.scales = {"res_V": att.eta * mid(q3), "res_V_psi": mid(eW**2) * abs(att.eta * att.k_omega - att.k_R / att.k_omega),
                  "res_lower": V, "res_upper": V, "res_envelope": env}
    if not isinstance(gains, PositionGains):
        return mon
    if m is None:
        raise ValueError("position monitors need the vehicle mass")
    s_x = gains.k_x * tel.e_x + gains.k_v * tel.e_v
    ex, ev = _rows_norm(tel.e_x), _rows_norm(tel.e_v)
    mon.z_x = np.column_stack([ex, ev])
    mon.V_x = m / (2 * gains.k_v) * np.einsum("ij,ij->i", s_x, s_x) + gains.a * gains.k_x * gains.k_v * ex**2
    mon.V_g = mon.V_x + V
    if B is not None and theta is not None:
        P1, P2 = build_pi_matrices(gains, m, B, theta, RoaVariant.NO_XV, check=False)
        z = np.column_stack([_rows_norm(mon.z_x), _rows_norm(z_R)])
        q5 = mid(_quad(z, pi5(att, P1, P2)))
        mon.res_V_g = np.diff(mon.V_g) / dt + q5
        mon.scales["res_V_g"] = q5
    return mon

