"""Quartic exponential weights, the constraint-manifold sampler, the kernel
subadditivity check, and the spectral decay fit.

The weight F(eta) = mu |eta|^4 / (1 + eps |eta|^4) is radial and
nondecreasing.  On tuples (eta_1..eta_6) lying on the resonance surface
b = |eta_1|^4 + |eta_2|^4 + |eta_3|^4 - |eta_4|^4 - |eta_5|^4 - |eta_6|^4 = 0,
the first weight never exceeds the sum of the other five, so the exponential
kernel exp(F_1 - sum_{k>=2} F_k) stays at or below one.  That bound is what
lets the weighted multilinear form inherit the unweighted decay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QS4Error, ValidationError
from .grid import SpectralField

__all__ = [
    "WeightParams",
    "ConstraintTuple",
    "KernelReport",
    "DecayFitReport",
    "weight_f",
    "sample_constraint_tuples",
    "weight_kernel_check",
    "decay_fit",
]

_MODULUS_FLOOR = 1e-15
# RMS log-residual below which a fitted spectrum is accepted as following a
# quartic-exponential envelope.
QUARTIC_PROFILE_RESIDUAL = 0.2


def _coupled_mu(s: float) -> float:
    """Largest-ulp-adjusted mu with mu * s**8 == 1.0 exactly in floats."""
    s8 = s ** 8
    mu = 1.0 / s8
    up = down = mu
    candidates = [mu]
    for _ in range(8):
        up = np.nextafter(up, np.inf)
        down = np.nextafter(down, -np.inf)
        candidates += [up, down]
    for cand in candidates:
        if cand * s8 == 1.0:
            return float(cand)
    raise ValidationError(
        f"no floating-point mu satisfies mu * s^8 = 1 exactly for s = {s!r}; "
        "pick a dyadic cutoff scale"
    )


@dataclass(frozen=True)
class WeightParams:
    """Weight parameters (mu, eps) and the cutoff scale s; in coupled mode mu
    is slaved to the scale through mu = s^-8."""

    mu: float = 1.0
    eps: float = 0.0
    s: float = 1.0
    coupled: bool = False

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s <= 0:
            raise ValidationError(f"cutoff scale must be positive, got {self.s}")
        if self.coupled:
            object.__setattr__(self, "mu", _coupled_mu(self.s))
        if self.mu < 0 or self.eps < 0:
            raise ValidationError("mu and eps must be nonnegative")
        if self.coupled and self.mu * self.s ** 8 != 1.0:
            raise ValidationError("coupled mode requires mu * s^8 = 1 exactly")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "eps": self.eps, "s": self.s, "coupled": self.coupled}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightParams":
        return cls(mu=float(d["mu"]), eps=float(d["eps"]), s=float(d["s"]),
                   coupled=bool(d["coupled"]))


def weight_f(eta, p: WeightParams):
    """F(eta) = mu |eta|^4 / (1 + eps |eta|^4); accepts (..., 2) arrays."""
    eta = np.asarray(eta, dtype=float)
    q = np.sum(eta ** 2, axis=-1) ** 2
    out = p.mu * q / (1.0 + p.eps * q)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConstraintTuple:
    """Six frequencies on the quartic resonance surface b = 0.

    Only the scalar constraint b is enforced; the vector constraint a (sum of
    the first three minus the last three) is reported but free, since the
    kernel bound only uses the b-support.
    """

    etas: np.ndarray

    def __post_init__(self):
        etas = np.asarray(self.etas, dtype=float)
        if etas.shape != (6, 2) or not np.all(np.isfinite(etas)):
            raise ValidationError(f"expected six finite frequencies, got shape {etas.shape}")
        object.__setattr__(self, "etas", etas)
        quart = np.sum(etas ** 2, axis=-1) ** 2
        scale = quart.sum()
        if scale > 0 and abs(self.b_value) > 1e-9 * scale:
            raise ValidationError(
                f"tuple violates the b-constraint: |b| = {abs(self.b_value):.3e} "
                f"vs scale {scale:.3e}"
            )

    @property
    def b_value(self) -> float:
        quart = np.sum(self.etas ** 2, axis=-1) ** 2
        return float(quart[:3].sum() - quart[3:].sum())

    @property
    def a_value(self) -> np.ndarray:
        return self.etas[:3].sum(axis=0) - self.etas[3:].sum(axis=0)


def sample_constraint_tuples(count: int, radius: float, rng_seed: int) -> list:
    """Draw eta_2..eta_6 uniformly in the ball, reject draws where the last
    three quartic powers fall short of the middle two, and solve for |eta_1|;
    the b-constraint then holds by construction.  Deterministic in the seed."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if radius <= 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    rng = np.random.default_rng(rng_seed)
    out = []
    attempts = 0
    while len(out) < count:
        batch = 2 * (count - len(out)) + 16
        attempts += batch
        r = radius * np.sqrt(rng.uniform(0, 1, (batch, 5)))
        th = rng.uniform(0, 2 * np.pi, (batch, 5))
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        quart = np.sum(pts ** 2, axis=-1) ** 2
        D = quart[:, 2:].sum(axis=1) - quart[:, :2].sum(axis=1)
        th1 = rng.uniform(0, 2 * np.pi, batch)
        keep = D >= 0
        if attempts > 100 * count and len(out) + keep.sum() < 0.01 * attempts:
            raise ValidationError("rejection rate above 99%; radius pathologically configured")
        mag = D[keep] ** 0.25
        eta1 = np.stack([mag * np.cos(th1[keep]), mag * np.sin(th1[keep])], axis=-1)
        for e1, rest in zip(eta1, pts[keep]):
            out.append(ConstraintTuple(np.concatenate([e1[None], rest], axis=0)))
            if len(out) == count:
                break
    return out


@dataclass(frozen=True)
class KernelReport:
    """Extremes of exp(F(eta_1) - sum_{k=2}^6 F(eta_k)) over checked tuples."""

    n_checked: int
    max_kernel: float
    argmax: ConstraintTuple


def weight_kernel_check(tuples: list, p: WeightParams) -> KernelReport:
    """Verify the kernel bound <= 1 + 1e-12 on every tuple; a violation is a
    hard failure because it would falsify the subadditivity of the weight on
    the resonance surface."""
    if not tuples:
        raise ValidationError("no tuples to check")
    etas = np.stack([t.etas for t in tuples])
    F = weight_f(etas, p)
    log_kernel = F[:, 0] - F[:, 1:].sum(axis=1)
    i = int(np.argmax(log_kernel))
    best = float(np.exp(log_kernel[i]))
    arg = tuples[i]
    if best > 1 + 1e-12:
        raise QS4Error(
            f"weight kernel bound violated: max exp(F1 - sum F_k) = {best:.17g}"
        )
    return KernelReport(n_checked=len(tuples), max_kernel=best, argmax=arg)


@dataclass(frozen=True)
class DecayFitReport:
    """Fit of log shell-maximum moduli against -mu_hat |xi|^4 + c."""

    mu_hat: float
    intercept: float
    goodness: float
    n_shells: int

    @property
    def quartic_profile(self) -> bool:
        return self.goodness <= QUARTIC_PROFILE_RESIDUAL


def decay_fit(F: SpectralField, r_min: float) -> DecayFitReport:
    """Least-squares decay-rate fit over the shell r_min <= |xi| <= 0.8 Nyquist.

    Uses the maximum modulus per radial shell (the claim is about the angular
    envelope, which may oscillate), floored at 1e-15 to avoid fitting noise.
    mu_hat > 0 certifies quartic-exponential decay at this resolution; the
    goodness value is the RMS log residual.
    """
    g = F.grid
    r_max = 0.8 * g.nyquist
    if not 0 <= r_min < r_max:
        raise ValidationError(f"r_min must lie in [0, {r_max:.3g}), got {r_min}")
    mod = np.abs(F.coeffs).ravel()
    r = g.xi_abs.ravel()
    d_xi = 2 * np.pi / g.extent
    edges = np.arange(r_min, r_max + d_xi, d_xi)
    radii, logs = [], []
    for lo, hi in zip(edges, edges[1:]):
        sel = (r >= lo) & (r < hi)
        if not np.any(sel):
            continue
        i = np.argmax(mod[sel])
        m = mod[sel][i]
        if m <= _MODULUS_FLOOR:
            continue
        radii.append(r[sel][i])
        logs.append(np.log(m))
    if len(radii) < 6:
        raise ValidationError(
            f"only {len(radii)} usable shells in [{r_min:.3g}, {r_max:.3g}]; "
            "spectrum is at the modulus floor or the range is too narrow"
        )
    x = np.asarray(radii) ** 4
    y = np.asarray(logs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DecayFitReport(
        mu_hat=float(-slope),
        intercept=float(intercept),
        goodness=float(np.sqrt(np.mean(resid ** 2))),
        n_shells=len(radii),
    )
