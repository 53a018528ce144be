"""Periodic-lattice simulator for ``i d_t phi = sqrt(-Lap + m^2) phi``.

Fields are stored as Fourier coefficients relative to the box centre,
``phi(x) = sum_k c_k exp(i k.x)`` on the grid ``x_j = -box/2 + j h``.
Every operator is a Fourier multiplier, so time evolution is exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .nonlocal_model import series_coeff_value

__all__ = [
    "LatticeConfig", "SpectralState", "ChargeRecord", "PacketError",
    "BoundaryContactError", "SeriesDivergenceWarning", "init_packet",
    "plane_wave", "evolve", "total_charges", "angular_momentum",
    "current_density", "continuity_defect", "emt_continuity_defect",
    "angular_momentum_drift", "symmetry_test", "leakage", "run",
]


class PacketError(ValueError):
    """Packet not resolved by the lattice or too wide for the box."""


class BoundaryContactError(RuntimeError):
    """The state reached the box boundary; lattice rotation results are void."""


class SeriesDivergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatticeConfig:
    d: int
    N: int
    box: float
    m: float = 1.0
    dt: float = 0.01
    steps: int = 0

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if self.N < 4 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if self.box <= 0 or self.m <= 0 or self.dt <= 0:
            raise ValueError("box, m and dt must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    @property
    def h(self) -> float:
        return self.box / self.N

    @property
    def dV(self) -> float:
        return self.h ** self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def modes(self) -> int:
        return self.N ** self.d

    def axis_k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def axis_x(self) -> np.ndarray:
        return -self.box / 2 + self.h * np.arange(self.N)

    def k(self) -> List[np.ndarray]:
        return np.meshgrid(*([self.axis_k()] * self.d), indexing="ij")

    def x(self) -> List[np.ndarray]:
        return np.meshgrid(*([self.axis_x()] * self.d), indexing="ij")

    def k2(self) -> np.ndarray:
        return sum(ka ** 2 for ka in self.k())

    def energy(self) -> np.ndarray:
        return np.sqrt(self.k2() + self.m ** 2)

    def nyquist_mask(self) -> np.ndarray:
        idx = np.meshgrid(*([np.arange(self.N)] * self.d), indexing="ij")
        mask = np.zeros(self.shape, dtype=bool)
        for ia in idx:
            mask |= ia == self.N // 2
        return mask

    def centre_phase(self) -> np.ndarray:
        """``(-1)^(n_1 + ... + n_d)``: shifts the DFT origin to the box centre."""
        idx = np.meshgrid(*([np.arange(self.N)] * self.d), indexing="ij")
        return np.where(sum(idx) % 2 == 0, 1.0, -1.0)


@dataclass
class SpectralState:
    cfg: LatticeConfig
    coeffs: np.ndarray
    t: float = 0.0

    def field(self) -> np.ndarray:
        return self.cfg.modes * np.fft.ifftn(self.coeffs * self.cfg.centre_phase())

    @classmethod
    def from_field(cls, cfg: LatticeConfig, phi: np.ndarray, t: float = 0.0) -> "SpectralState":
        c = np.fft.fftn(phi) * cfg.centre_phase() / cfg.modes
        return cls(cfg, c, t)

    def copy(self) -> "SpectralState":
        return SpectralState(self.cfg, self.coeffs.copy(), self.t)

    def norm2(self) -> float:
        """``box^d sum |c_k|^2``, equal to ``sum |phi|^2 dV`` by Parseval."""
        return self.cfg.box ** self.cfg.d * float(np.sum(np.abs(self.coeffs) ** 2))


@dataclass
class ChargeRecord:
    t: float
    Q: float
    E_tot: float
    P: Tuple[float, ...]
    M: Dict[Tuple[int, int], float] = field(default_factory=dict)
    continuity_defect: Optional[float] = None
    leakage: float = 0.0


# ---------------------------------------------------------------------------
# spectral helpers

def _to_x(cfg: LatticeConfig, c: np.ndarray) -> np.ndarray:
    return cfg.modes * np.fft.ifftn(c * cfg.centre_phase())


def _deriv(cfg: LatticeConfig, c: np.ndarray, a: int) -> np.ndarray:
    """Coefficients of ``d_a phi`` for spatial axis ``a`` (0-based)."""
    return 1j * cfg.k()[a] * c


def leakage(state: SpectralState) -> float:
    """Largest of boundary-to-peak density ratio and outer-band spectral fraction.

    The outer band holds modes with ``|n_a| >= 3N/8`` on some axis.
    """
    cfg = state.cfg
    dens = np.abs(state.field()) ** 2
    peak = dens.max()
    if peak == 0:
        return 0.0
    edge = 0.0
    for a in range(cfg.d):
        edge = max(edge, np.take(dens, 0, axis=a).max(), np.take(dens, -1, axis=a).max())
    n = np.abs(np.fft.fftfreq(cfg.N, d=1.0 / cfg.N))
    band = np.zeros(cfg.shape, dtype=bool)
    for na in np.meshgrid(*([n] * cfg.d), indexing="ij"):
        band |= na >= 3 * cfg.N / 8
    w = np.abs(state.coeffs) ** 2
    spec = float(w[band].sum() / w.sum())
    return float(max(edge / peak, spec))


def init_packet(cfg: LatticeConfig, center: Sequence[float], width: float,
                carrier: Sequence[float], amplitude: float = 1.0,
                band_limit: Optional[float] = None) -> SpectralState:
    """Gaussian packet ``A exp(-|x-x0|^2/(4 w^2) + i k0.(x-x0))``.

    ``|phi|^2`` has standard deviation ``w`` per axis and integrates to
    ``A^2 (2 pi w^2)^(d/2)``.  The Nyquist modes are zeroed; ``band_limit``
    additionally zeroes all modes with ``|k| > band_limit``.
    """
    center = np.asarray(center, float)
    carrier = np.asarray(carrier, float)
    if center.shape != (cfg.d,) or carrier.shape != (cfg.d,):
        raise PacketError(f"center and carrier need {cfg.d} components")
    if width < 2 * cfg.h:
        raise PacketError(f"width {width} unresolved: need at least 2 grid spacings ({2 * cfg.h})")
    if width > cfg.box / 6:
        raise PacketError(f"width {width} too wide for box {cfg.box}: the packet would wrap")
    kmax = np.pi / cfg.h
    if np.any(np.abs(carrier) + 6 / (2 * width) > kmax):
        raise PacketError(f"carrier {carrier.tolist()} too close to the lattice cutoff {kmax:.4g}")
    xs = cfg.x()
    r2 = sum((xa - ca) ** 2 for xa, ca in zip(xs, center))
    ph = sum(ka * (xa - ca) for xa, ka, ca in zip(xs, carrier, center))
    phi = amplitude * np.exp(-r2 / (4 * width ** 2) + 1j * ph)
    st = SpectralState.from_field(cfg, phi)
    st.coeffs[cfg.nyquist_mask()] = 0
    if band_limit is not None:
        st.coeffs[cfg.k2() > band_limit ** 2] = 0
    return st


def plane_wave(cfg: LatticeConfig, n: Sequence[int], amplitude: complex = 1.0) -> SpectralState:
    """Single lattice mode with integer wave numbers ``n``."""
    c = np.zeros(cfg.shape, dtype=complex)
    c[tuple(int(v) % cfg.N for v in n)] = amplitude
    return SpectralState(cfg, c)


def evolve(state: SpectralState, n_steps: int) -> SpectralState:
    """Exact evolution by ``n_steps * dt``: ``c_k <- exp(-i E(k) dt n) c_k``."""
    cfg = state.cfg
    tau = cfg.dt * n_steps
    return SpectralState(cfg, state.coeffs * np.exp(-1j * cfg.energy() * tau), state.t + tau)


# ---------------------------------------------------------------------------
# integrated charges

def angular_momentum(state: SpectralState) -> Dict[Tuple[int, int], float]:
    """``M_ab = sum Re[phi* (x_a i d_b - x_b i d_a) phi] dV`` for spatial a < b.

    Keys are 1-based spatial labels; ``x_a = -x^a``.
    """
    cfg = state.cfg
    if cfg.d < 2:
        return {}
    phi = state.field()
    xs = cfg.x()
    grads = [_to_x(cfg, _deriv(cfg, state.coeffs, a)) for a in range(cfg.d)]
    out = {}
    for a in range(cfg.d):
        for b in range(a + 1, cfg.d):
            r = (-xs[a]) * 1j * grads[b] - (-xs[b]) * 1j * grads[a]
            out[(a + 1, b + 1)] = float(np.sum((np.conj(phi) * r).real) * cfg.dV)
    return out


def total_charges(state: SpectralState, with_continuity: bool = False) -> ChargeRecord:
    cfg = state.cfg
    phi = state.field()
    Q = float(np.sum(np.abs(phi) ** 2) * cfg.dV)
    w = np.abs(state.coeffs) ** 2 * cfg.box ** cfg.d
    E_tot = float(np.sum(w * cfg.energy()))
    P = tuple(float(np.sum(w * ka)) for ka in cfg.k())
    rec = ChargeRecord(state.t, Q, E_tot, P, angular_momentum(state), leakage=leakage(state))
    if with_continuity:
        rec.continuity_defect = continuity_defect(state)
    return rec


# ---------------------------------------------------------------------------
# bilinear densities

_BILINEAR_LIMIT = 2 ** 16


def _bilinear(state: SpectralState, kernel) -> np.ndarray:
    """``sum_{k',k} conj(c_k') c_k kernel(k', k) exp(i (k - k').x)`` on the grid.

    ``kernel(kp, ep, k, e)`` receives the primed mode as scalars and the
    unprimed modes as arrays.  The difference ``k - k'`` is folded onto the
    lattice; the centre phase factorises as ``(-1)^n (-1)^n'``.
    """
    cfg = state.cfg
    if cfg.modes > _BILINEAR_LIMIT:
        raise ValueError(f"bilinear density limited to {_BILINEAR_LIMIT} modes, lattice has {cfg.modes}")
    ks = cfg.k()
    E = cfg.energy()
    s = cfg.centre_phase()
    c = state.coeffs
    acc = None
    for flat in np.flatnonzero(c):
        idx = np.unravel_index(flat, cfg.shape)
        kp = tuple(ka[idx] for ka in ks)
        vals = kernel(kp, E[idx], ks, E)
        vals = np.asarray(vals, dtype=complex)
        axes = tuple(range(vals.ndim - cfg.d, vals.ndim))
        term = np.conj(c[idx]) * s[idx] * np.roll(s * c * vals, tuple(-int(i) for i in idx), axis=axes)
        acc = term if acc is None else acc + term
    if acc is None:
        acc = np.zeros(cfg.shape, dtype=complex)
    axes = tuple(range(acc.ndim - cfg.d, acc.ndim))
    return cfg.modes * np.fft.ifftn(acc, axes=axes)


def _closed_kernel(kp, ep, ks, E):
    return np.stack([(ka + kpa) / (E + ep) for ka, kpa in zip(ks, kp)])


def _div_kernel(kp, ep, ks, E):
    return sum(1j * (ka - kpa) * (ka + kpa) / (E + ep) for ka, kpa in zip(ks, kp))


def _series_current(state: SpectralState, L: int) -> np.ndarray:
    """``sum_l f_l sum_i [i conj(D_i) d_a D_j - i conj(d_a D_i) D_j]``, ``j = l-1-i``.

    ``D_j = Lap^j phi``; this is the derivative-series form of the current.
    """
    cfg = state.cfg
    k2 = cfg.k2()
    support = np.abs(state.coeffs) > 0
    kmax2 = float(k2[support].max()) if support.any() else 0.0
    if kmax2 >= cfg.m ** 2:
        warnings.warn(f"series current diverges: spectral support reaches |k|^2 = {kmax2:.4g} >= m^2",
                      SeriesDivergenceWarning, stacklevel=3)
    D = [state.coeffs]
    for _ in range(max(L - 1, 0)):
        D.append(-k2 * D[-1])
    Dx = [_to_x(cfg, dj) for dj in D]
    J = np.zeros((cfg.d,) + cfg.shape)
    for a in range(cfg.d):
        Gx = [_to_x(cfg, _deriv(cfg, dj, a)) for dj in D]
        for l in range(1, L + 1):
            f = series_coeff_value(cfg.m, l)
            s = np.zeros(cfg.shape, dtype=complex)
            for i in range(l):
                j = l - 1 - i
                s += 1j * np.conj(Dx[i]) * Gx[j] - 1j * np.conj(Gx[i]) * Dx[j]
            J[a] += f * s.real
    return J


def current_density(state: SpectralState, method: str = "closed", L: int = 20
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """Spatial current ``J^a(x)`` (shape ``(d,) + grid``) and its integral.

    ``method="closed"`` uses the resummed bilinear form
    ``(k' + k)^a / (E(k') + E(k))``; ``method="series"`` the derivative series
    truncated at order ``L`` (requires ``|k|^2 < m^2`` on the support).
    """
    cfg = state.cfg
    if method == "closed":
        J = _bilinear(state, _closed_kernel).real
    elif method == "series":
        J = _series_current(state, L)
    else:
        raise ValueError(f"unknown current method {method!r}")
    total = J.reshape(cfg.d, -1).sum(axis=1) * cfg.dV
    return J, total


def continuity_defect(state: SpectralState) -> float:
    """``max |d_t J^0 + div J|`` with ``d_t |phi|^2 = 2 Im(phi* E phi)``."""
    cfg = state.cfg
    phi = state.field()
    ephi = _to_x(cfg, cfg.energy() * state.coeffs)
    dt_rho = 2 * np.imag(np.conj(phi) * ephi)
    div = _bilinear(state, _div_kernel).real
    return float(np.max(np.abs(dt_rho + div)))


def emt_rows(state: SpectralState) -> Tuple[np.ndarray, np.ndarray]:
    """Time rows ``T_mu^0`` (shape ``(d+1,) + grid``) and their time derivatives.

    ``T_0^0 = Re(phi* E phi)``, ``T_a^0 = -Im(phi* d_a phi)``; the time
    derivatives follow from ``d_t phi = -i E phi``.
    """
    cfg = state.cfg
    c = state.coeffs
    E = cfg.energy()
    phi, ephi, e2phi = _to_x(cfg, c), _to_x(cfg, E * c), _to_x(cfg, E * E * c)
    rows = [np.real(np.conj(phi) * ephi)]
    drows = [np.imag(np.conj(phi) * e2phi)]
    for a in range(cfg.d):
        dphi = _to_x(cfg, _deriv(cfg, c, a))
        dephi = _to_x(cfg, _deriv(cfg, E * c, a))
        rows.append(-np.imag(np.conj(phi) * dphi))
        drows.append(-np.real(np.conj(ephi) * dphi - np.conj(phi) * dephi))
    return np.array(rows), np.array(drows)


def _emt_div_kernel(mu: int):
    def kernel(kp, ep, ks, E):
        half = 0.5 * ((E + ep) if mu == 0 else -(ks[mu - 1] + kp[mu - 1]))
        return sum(1j * (ka - kpa) * (ka + kpa) / (E + ep) for ka, kpa in zip(ks, kp)) * half
    return kernel


def emt_continuity_defect(state: SpectralState) -> List[float]:
    """``max |d_t T_mu^0 + d_a T_mu^a|`` for each row mu = 0..d."""
    _, drows = emt_rows(state)
    out = []
    for mu in range(state.cfg.d + 1):
        div = _bilinear(state, _emt_div_kernel(mu)).real
        out.append(float(np.max(np.abs(drows[mu] + div))))
    return out


def angular_momentum_drift(state: SpectralState, n_steps: int, pair: Tuple[int, int] = (1, 2),
                           record_every: int = 1, max_leakage: float = 1e-10
                           ) -> Tuple[float, float, List[ChargeRecord]]:
    """Relative drift ``max |M(t) - M(0)| / (|M(0)| + Q box)`` over the run.

    Returns ``(drift, worst_leakage, records)``; raises
    :class:`BoundaryContactError` once the leakage exceeds ``max_leakage``.
    """
    if state.cfg.d < 2:
        raise ValueError("angular momentum needs d >= 2")
    recs = [total_charges(state)]
    cur = state
    done = 0
    while done < n_steps:
        step = min(record_every, n_steps - done)
        cur = evolve(cur, step)
        done += step
        rec = total_charges(cur)
        if rec.leakage > max_leakage:
            raise BoundaryContactError(f"leakage {rec.leakage:.3g} at t={rec.t:.4g} exceeds {max_leakage:.3g}")
        recs.append(rec)
    m0 = recs[0].M[pair]
    scale = abs(m0) + recs[0].Q * state.cfg.box
    drift = max(abs(r.M[pair] - m0) for r in recs) / scale
    return drift, max(r.leakage for r in recs), recs


def symmetry_test(state: SpectralState, transform: str) -> float:
    """Residual ``||i d_t phi_X - E phi_X|| / ||m phi||`` of a transformed solution.

    P: ``phi(t, -x)``; T: ``conj(phi(-t, x))``; C: ``conj(phi)``.  The time
    derivative of the transformed field follows from ``d_t phi = -i E phi``.
    """
    cfg = state.cfg
    c = state.coeffs
    E = cfg.energy()
    phi = _to_x(cfg, c)
    dphi = _to_x(cfg, -1j * E * c)
    if transform == "P":
        phx, dtx = _parity(phi), _parity(dphi)
    elif transform == "T":
        phx, dtx = np.conj(phi), -np.conj(dphi)
    elif transform == "C":
        phx, dtx = np.conj(phi), np.conj(dphi)
    else:
        raise ValueError(f"unknown transform {transform!r}; use P, T or C")
    ephx = _to_x(cfg, E * SpectralState.from_field(cfg, phx).coeffs)
    res = 1j * dtx - ephx
    return float(np.linalg.norm(res) / (cfg.m * np.linalg.norm(phi)))


def _parity(f: np.ndarray) -> np.ndarray:
    out = f
    for a in range(f.ndim):
        out = np.take(out, (-np.arange(f.shape[a])) % f.shape[a], axis=a)
    return out


def run(state: SpectralState, steps: int, record_every: int = 1,
        with_continuity: bool = False) -> List[ChargeRecord]:
    """Evolve ``steps`` steps, recording charges every ``record_every`` steps."""
    recs = [total_charges(state, with_continuity)]
    cur = state
    done = 0
    while done < steps:
        step = min(record_every, steps - done)
        cur = evolve(cur, step)
        done += step
        recs.append(total_charges(cur, with_continuity))
    return recs
