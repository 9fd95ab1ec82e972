"""Rician channel generation for one network drop.

The BS sits at the origin with its Tx and Rx uniform linear arrays along the
y-axis.  The RIS (a ULA along the x-axis) sits at ``(d, d_V)`` and the UE
cluster is centred at ``(d_H, 0)``.  Every link draws its small-scale fading
from its own seeded stream, so changing one size or distance leaves the other
links untouched.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np


class Sizes(NamedTuple):
    N_t: int = 6
    N_r: int = 6
    K: int = 16
    M: int = 4
    N: int = 4


@dataclass(frozen=True)
class ScenarioGeometry:
    d: float = 80.0
    d_H: float = 200.0
    d_V: float = 50.0
    user_radius: float = 50.0
    min_distance: float = 1.0  # floor for UE-UE links

    def __post_init__(self):
        if min(self.d_H, self.d_V, self.user_radius, self.min_distance) <= 0 or self.d < 0:
            raise ValueError("geometry distances must be positive")

    @property
    def bs(self) -> np.ndarray:
        return np.zeros(2)

    @property
    def ris(self) -> np.ndarray:
        return np.array([self.d, self.d_V])

    @property
    def cluster_center(self) -> np.ndarray:
        return np.array([self.d_H, 0.0])


PATHLOSS_CONVENTIONS = ("as_printed", "physical")


@dataclass(frozen=True)
class RicianParams:
    rho: float = 3.0
    pl_intercept_db: float = 38.88
    pl_exponent: float = 22.0  # dB per decade
    beta: float = 0.9
    si_isolation_db: float = 110.0
    si_rho: float = 3.0
    pathloss_convention: str = "physical"

    def __post_init__(self):
        if self.pathloss_convention not in PATHLOSS_CONVENTIONS:
            raise ValueError(f"pathloss_convention must be one of {PATHLOSS_CONVENTIONS}")
        if self.rho < 0 or self.si_rho < 0:
            raise ValueError("Rician factor must be nonnegative")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")


def pathloss_db(distance, intercept_db: float = 38.88, exponent: float = 22.0):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("distance must be positive")
    return intercept_db + exponent * np.log10(distance)


def pathloss_linear(distance, intercept_db: float = 38.88, exponent: float = 22.0):
    """Large-scale power gain ``10^(-PL_dB/10)`` of a link."""
    return 10.0 ** (-pathloss_db(distance, intercept_db, exponent) / 10.0)


def link_power(pl_db, convention: str = "as_printed"):
    """Mean per-entry channel power for a pathloss of ``pl_db`` dB.

    ``as_printed`` scales by ``sqrt(1/PL)`` with ``PL = 10^(-PL_dB/10)``, so the
    power is ``10^(+PL_dB/10)`` and grows with distance. ``physical`` is the
    usual attenuation ``10^(-PL_dB/10)``.
    """
    if convention == "as_printed":
        return 10.0 ** (np.asarray(pl_db, float) / 10.0)
    if convention == "physical":
        return 10.0 ** (-np.asarray(pl_db, float) / 10.0)
    raise ValueError(f"unknown pathloss convention {convention!r}")


def steering(n: int, cos_axis: float) -> np.ndarray:
    """Half-wavelength ULA response for direction cosine ``cos_axis``."""
    return np.exp(1j * np.pi * np.arange(n) * cos_axis)


BS_AXIS = np.array([0.0, 1.0])
RIS_AXIS = np.array([1.0, 0.0])


def los_matrix(n_rx, rx_pos, rx_axis, n_tx, tx_pos, tx_axis) -> np.ndarray:
    """Rank-one LoS component between two ULAs (unit-modulus entries)."""
    e = np.asarray(rx_pos, float) - np.asarray(tx_pos, float)
    dist = np.linalg.norm(e)
    e = e / dist if dist > 0 else np.array([1.0, 0.0])
    a_rx = steering(n_rx, float(-e @ rx_axis)) if n_rx > 1 else np.ones(n_rx)
    a_tx = steering(n_tx, float(e @ tx_axis)) if n_tx > 1 else np.ones(n_tx)
    return np.outer(a_rx, np.conj(a_tx))


def draw_rician(rows: int, cols: int, distance: float, params: RicianParams,
                rng: np.random.Generator, los: np.ndarray | None = None,
                gain: float | None = None, rho: float | None = None) -> np.ndarray:
    """One Rician matrix ``sqrt(g) (sqrt(rho/(1+rho)) H_LoS + sqrt(1/(1+rho)) H_NLoS)``.

    ``g`` is the mean entry power at ``distance`` under the configured
    pathloss convention, unless ``gain`` overrides it.  The
    NLoS part is drawn even when ``rho`` is infinite so the stream position
    does not depend on the Rician factor.
    """
    rho = params.rho if rho is None else rho
    if gain is None:
        g = link_power(pathloss_db(distance, params.pl_intercept_db, params.pl_exponent),
                       params.pathloss_convention)
    else:
        g = gain
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    if los is None:
        los = np.ones((rows, cols), dtype=complex)
    if np.isinf(rho):
        mix = los.astype(complex)
    else:
        mix = np.sqrt(rho / (1.0 + rho)) * los + np.sqrt(1.0 / (1.0 + rho)) * nlos
    return np.sqrt(g) * mix


@dataclass
class ChannelSet:
    """The eight channel matrices of one drop (shapes follow :class:`Sizes`)."""

    U: np.ndarray   # N_r x N   UL UE -> BS
    U1: np.ndarray  # K x N     UL UE -> RIS
    U2: np.ndarray  # N_r x K   RIS -> BS
    D: np.ndarray   # M x N_t   BS -> DL UE
    D1: np.ndarray  # K x N_t   BS -> RIS
    D2: np.ndarray  # M x K     RIS -> DL UE
    S: np.ndarray   # N_r x N_t SI
    V: np.ndarray   # M x N     UL UE -> DL UE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("U", "U1", "U2", "D", "D1", "D2", "S", "V"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be 2-D")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            setattr(self, name, arr)
        N_r, N = self.U.shape
        M, N_t = self.D.shape
        K = self.D1.shape[0]
        expected = {"U1": (K, N), "U2": (N_r, K), "D1": (K, N_t), "D2": (M, K),
                    "S": (N_r, N_t), "V": (M, N)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def sizes(self) -> Sizes:
        return Sizes(self.D.shape[1], self.U.shape[0], self.D1.shape[0], self.D.shape[0], self.U.shape[1])

    def without_ris(self) -> "ChannelSet":
        """Same drop with the RIS removed (K = 0)."""
        s = self.sizes
        return replace(self, U1=np.zeros((0, s.N), complex), U2=np.zeros((s.N_r, 0), complex),
                       D1=np.zeros((0, s.N_t), complex), D2=np.zeros((s.M, 0), complex),
                       meta=dict(self.meta))

    def permuted(self, dl_perm=None, ul_perm=None) -> "ChannelSet":
        """Reorder DL and/or UL users."""
        s = self.sizes
        dp = np.arange(s.M) if dl_perm is None else np.asarray(dl_perm)
        up = np.arange(s.N) if ul_perm is None else np.asarray(ul_perm)
        return replace(self, U=self.U[:, up], U1=self.U1[:, up], D=self.D[dp], D2=self.D2[dp],
                       V=self.V[np.ix_(dp, up)], meta=dict(self.meta))

    def to_dict(self) -> dict:
        out = {name: np.stack([getattr(self, name).real, getattr(self, name).imag], -1).tolist()
               for name in ("U", "U1", "U2", "D", "D1", "D2", "S", "V")}
        out["shapes"] = {name: list(getattr(self, name).shape)
                         for name in ("U", "U1", "U2", "D", "D1", "D2", "S", "V")}
        out["meta"] = _jsonable(self.meta)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSet":
        mats = {}
        for name in ("U", "U1", "U2", "D", "D1", "D2", "S", "V"):
            arr = np.asarray(data[name], dtype=float)
            shape = tuple(data["shapes"][name])
            mats[name] = (arr[..., 0] + 1j * arr[..., 1]).reshape(shape) if arr.size else np.zeros(shape, complex)
        return cls(**mats, meta=data.get("meta", {}))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "ChannelSet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# spawn-key tags for per-link random streams
_DL_POS, _UL_POS = 1, 2
_D, _U, _D1, _U2, _D2, _U1, _S, _V = 10, 11, 12, 13, 14, 15, 16, 17


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def sample_disk(center, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in a disk by rejection sampling."""
    while True:
        p = rng.uniform(-radius, radius, size=2)
        if p @ p <= radius * radius:
            return np.asarray(center, float) + p


def place_users(geometry: ScenarioGeometry, sizes: Sizes, seed: int):
    dl = np.array([sample_disk(geometry.cluster_center, geometry.user_radius, _stream(seed, _DL_POS, m))
                   for m in range(sizes.M)]).reshape(sizes.M, 2)
    ul = np.array([sample_disk(geometry.cluster_center, geometry.user_radius, _stream(seed, _UL_POS, n))
                   for n in range(sizes.N)]).reshape(sizes.N, 2)
    return dl, ul


def generate_drop(geometry: ScenarioGeometry = ScenarioGeometry(), sizes: Sizes = Sizes(),
                  params: RicianParams = RicianParams(), seed: int = 0) -> ChannelSet:
    """Draw all eight channel matrices for one drop, deterministically per seed."""
    sizes = Sizes(*sizes)
    if min(sizes.N_t, sizes.N_r) <= 0 or min(sizes.K, sizes.M, sizes.N) < 0:
        raise ValueError("sizes must be nonnegative, with at least one antenna")
    N_t, N_r, K, M, N = sizes
    g = geometry
    bs, ris = g.bs, g.ris
    dl_pos, ul_pos = place_users(g, sizes, seed)

    def dist(a, b):
        return max(float(np.linalg.norm(np.asarray(a) - np.asarray(b))), g.min_distance)

    D = np.zeros((M, N_t), complex)
    D2 = np.zeros((M, K), complex)
    for m in range(M):
        los = los_matrix(1, dl_pos[m], None, N_t, bs, BS_AXIS) if N_t else None
        D[m] = draw_rician(1, N_t, dist(bs, dl_pos[m]), params, _stream(seed, _D, m), los)[0]
        if K:
            los = los_matrix(1, dl_pos[m], None, K, ris, RIS_AXIS)
            D2[m] = draw_rician(1, K, dist(ris, dl_pos[m]), params, _stream(seed, _D2, m), los)[0]
    U = np.zeros((N_r, N), complex)
    U1 = np.zeros((K, N), complex)
    for n in range(N):
        los = los_matrix(N_r, bs, BS_AXIS, 1, ul_pos[n], None)
        U[:, n] = draw_rician(N_r, 1, dist(bs, ul_pos[n]), params, _stream(seed, _U, n), los)[:, 0]
        if K:
            los = los_matrix(K, ris, RIS_AXIS, 1, ul_pos[n], None)
            U1[:, n] = draw_rician(K, 1, dist(ris, ul_pos[n]), params, _stream(seed, _U1, n), los)[:, 0]
    d_br = dist(bs, ris)
    if K:
        D1 = draw_rician(K, N_t, d_br, params, _stream(seed, _D1),
                         los_matrix(K, ris, RIS_AXIS, N_t, bs, BS_AXIS))
        U2 = draw_rician(N_r, K, d_br, params, _stream(seed, _U2),
                         los_matrix(N_r, bs, BS_AXIS, K, ris, RIS_AXIS))
    else:
        D1 = np.zeros((0, N_t), complex)
        U2 = np.zeros((N_r, 0), complex)
    S = draw_rician(N_r, N_t, 1.0, params, _stream(seed, _S), np.ones((N_r, N_t), complex),
                    gain=link_power(params.si_isolation_db, params.pathloss_convention), rho=params.si_rho)
    V = np.zeros((M, N), complex)
    for m in range(M):
        for n in range(N):
            V[m, n] = draw_rician(1, 1, dist(ul_pos[n], dl_pos[m]), params, _stream(seed, _V, m, n))[0, 0]
    meta = {"seed": int(seed), "bs": bs, "ris": ris, "dl_positions": dl_pos, "ul_positions": ul_pos,
            "bs_ris_distance": d_br, "beta": params.beta}
    return ChannelSet(U=U, U1=U1, U2=U2, D=D, D1=D1, D2=D2, S=S, V=V, meta=meta)
