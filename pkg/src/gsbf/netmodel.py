"""Physical system model: topology, channels, SINR and the network power model.

All quantities are linear scale (watts) unless a name says dB. Beamformers
are grouped per (base station, user) pair; each group holds the complex
coefficients of one BS's antennas for one user's data stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Group norms below this are treated as exactly zero when deriving supports.
DEFAULT_ZERO_TOL = 1e-6

# Distances are clamped to 1 m before the log-distance path loss model to
# avoid unbounded gain when a user is sampled on top of a BS.
MIN_DISTANCE_KM = 1e-3


@dataclass(frozen=True)
class NetworkConfig:
    """Static problem data for one network instance."""

    num_bs: int
    num_users: int
    antennas: int
    p_max: np.ndarray           # (N,) per-BS transmit power budget [W]
    eta: np.ndarray             # (N,) amplifier efficiency, in (0, 1]
    p_compute: np.ndarray       # (N, K) per-task inference compute power [W]
    gamma: np.ndarray           # (K,) target SINR, linear scale
    noise_power: np.ndarray     # (K,) noise variance sigma_k^2 [W]
    region_half_width_km: float = 0.5
    channel_mode: str = "normalized"  # "normalized" or "pathloss"

    def __post_init__(self):
        n, k = self.num_bs, self.num_users
        if n < 1 or k < 1 or self.antennas < 1:
            raise ValueError("counts must be positive")
        for name, arr, shape in (
            ("p_max", self.p_max, (n,)),
            ("eta", self.eta, (n,)),
            ("p_compute", self.p_compute, (n, k)),
            ("gamma", self.gamma, (k,)),
            ("noise_power", self.noise_power, (k,)),
        ):
            arr = np.asarray(arr, dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(self.p_max <= 0) or np.any(self.noise_power <= 0):
            raise ValueError("powers must be strictly positive")
        if np.any(self.eta <= 0) or np.any(self.eta > 1):
            raise ValueError("eta must lie in (0, 1]")
        if np.any(self.p_compute < 0):
            raise ValueError("p_compute entries must be nonnegative")
        if np.any(self.gamma <= 0):
            raise ValueError("gamma must be positive")
        if self.region_half_width_km <= 0:
            raise ValueError("region_half_width_km must be positive")
        if self.channel_mode not in ("normalized", "pathloss"):
            raise ValueError(f"unknown channel_mode {self.channel_mode!r}")

    @classmethod
    def broadcast(cls, num_bs, num_users, antennas, *, p_max=1.0, eta=0.25,
                  p_compute=0.45, gamma=1.0, noise_power=None,
                  region_half_width_km=0.5, channel_mode="normalized"):
        """Build a config from scalars, broadcast to the right shapes."""
        if noise_power is None:
            noise_power = 1.0 if channel_mode == "normalized" else 1e-13
        return cls(
            num_bs=num_bs,
            num_users=num_users,
            antennas=antennas,
            p_max=np.full(num_bs, float(p_max)),
            eta=np.full(num_bs, float(eta)),
            p_compute=np.full((num_bs, num_users), float(p_compute)),
            gamma=np.full(num_users, float(gamma)),
            noise_power=np.full(num_users, float(noise_power)),
            region_half_width_km=region_half_width_km,
            channel_mode=channel_mode,
        )

    def with_gamma_db(self, gamma_db: float) -> "NetworkConfig":
        return replace(self, gamma=np.full(self.num_users, 10.0 ** (gamma_db / 10.0)))


@dataclass(frozen=True)
class Topology:
    """BS and user positions in km, inside the square region."""

    bs_positions: np.ndarray    # (N, 2)
    user_positions: np.ndarray  # (K, 2)

    def distances_km(self) -> np.ndarray:
        """(N, K) Euclidean BS-user distances."""
        diff = self.bs_positions[:, None, :] - self.user_positions[None, :, :]
        return np.linalg.norm(diff, axis=-1)


@dataclass(frozen=True)
class ChannelRealization:
    """Complex channels h[n, k] in C^L plus the per-user aggregated view."""

    h: np.ndarray  # (N, K, L) complex

    def __post_init__(self):
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel entries must be finite")

    @property
    def num_bs(self) -> int:
        return self.h.shape[0]

    @property
    def num_users(self) -> int:
        return self.h.shape[1]

    @property
    def antennas(self) -> int:
        return self.h.shape[2]

    def aggregated(self, k: int) -> np.ndarray:
        """Stacked channel vector of user k: concat of h[0,k], ..., h[N-1,k]."""
        return self.h[:, k, :].reshape(-1)


@dataclass(frozen=True)
class BeamformingSolution:
    """Grouped beamformer with its per-group norms and support set."""

    v: np.ndarray  # (N, K, L) complex
    zero_tol: float = DEFAULT_ZERO_TOL
    group_norms: np.ndarray = field(init=False)
    support: frozenset = field(init=False)

    def __post_init__(self):
        norms = np.linalg.norm(self.v, axis=-1)
        object.__setattr__(self, "group_norms", norms)
        n, k = norms.shape
        sup = frozenset(
            (i, j) for i in range(n) for j in range(k) if norms[i, j] > self.zero_tol
        )
        object.__setattr__(self, "support", sup)

    @property
    def aggregated(self) -> np.ndarray:
        """(K, N*L) aggregated beamformer per user."""
        n, k, ell = self.v.shape
        return self.v.transpose(1, 0, 2).reshape(k, n * ell)


@dataclass(frozen=True)
class TaskSelection:
    """Which (bs, user) inference tasks are executed."""

    pairs: frozenset          # set of (n, k)
    order: tuple = ()         # task permutation from the priority ranking
    cut: int = 0              # number of kept tasks along `order`

    @classmethod
    def full(cls, num_bs: int, num_users: int) -> "TaskSelection":
        pairs = tuple((n, k) for n in range(num_bs) for k in range(num_users))
        return cls(pairs=frozenset(pairs), order=pairs, cut=len(pairs))

    @classmethod
    def from_support(cls, support) -> "TaskSelection":
        order = tuple(sorted(support))
        return cls(pairs=frozenset(support), order=order, cut=len(order))

    def per_bs(self, num_bs: int):
        """Selected user sets, one per BS."""
        sets = [set() for _ in range(num_bs)]
        for n, k in self.pairs:
            sets[n].add(k)
        return sets

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class PowerBreakdown:
    transmit_w: float
    compute_w: float

    @property
    def total_w(self) -> float:
        return self.transmit_w + self.compute_w


@dataclass(frozen=True)
class ConstraintReport:
    """Worst-case constraint violations of a candidate solution."""

    sinr_shortfall_rel: float    # max over users of (gamma - SINR)/gamma, >= 0
    power_violation_w: float     # max over BSs of (sum ||v_nk||^2 - P_max), >= 0
    zero_block_violation: float  # largest group norm outside the selection
    sinr_tol: float
    power_tol: float
    zero_tol: float

    @property
    def sinr_ok(self) -> bool:
        return self.sinr_shortfall_rel <= self.sinr_tol

    @property
    def power_ok(self) -> bool:
        return self.power_violation_w <= self.power_tol

    @property
    def zero_blocks_ok(self) -> bool:
        return self.zero_block_violation <= self.zero_tol

    @property
    def ok(self) -> bool:
        return self.sinr_ok and self.power_ok and self.zero_blocks_ok


def path_loss_db(d_km) -> np.ndarray:
    """Log-distance path loss 128.1 + 37.6*log10(d) in dB; d in km, d > 0."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return 128.1 + 37.6 * np.log10(d)


def generate_topology(seed: int, cfg: NetworkConfig) -> Topology:
    """Draw BS and user positions i.i.d. uniform over the square region."""
    rng = np.random.default_rng([seed, 0])
    w = cfg.region_half_width_km
    bs = rng.uniform(-w, w, size=(cfg.num_bs, 2))
    users = rng.uniform(-w, w, size=(cfg.num_users, 2))
    return Topology(bs_positions=bs, user_positions=users)


def generate_channels(seed: int, topo: Topology, cfg: NetworkConfig,
                      small_scale: bool = True) -> ChannelRealization:
    """Draw one channel realization.

    In "pathloss" mode each h[n,k] is the path-loss amplitude times an
    i.i.d. CN(0, I) small-scale fading vector; in "normalized" mode the
    channels are the unit-scale fading vectors alone. `small_scale=False`
    replaces the fading draw by all-ones (test hook).
    """
    rng = np.random.default_rng([seed, 1])
    n, k, ell = cfg.num_bs, cfg.num_users, cfg.antennas
    if small_scale:
        xi = (rng.standard_normal((n, k, ell)) + 1j * rng.standard_normal((n, k, ell))) / np.sqrt(2)
    else:
        xi = np.ones((n, k, ell), dtype=complex)
    if cfg.channel_mode == "normalized":
        return ChannelRealization(h=xi)
    d = np.maximum(topo.distances_km(), MIN_DISTANCE_KM)
    amp = 10.0 ** (-path_loss_db(d) / 20.0)
    return ChannelRealization(h=amp[:, :, None] * xi)


def sinr_per_user(sol: BeamformingSolution, ch: ChannelRealization,
                  cfg: NetworkConfig) -> np.ndarray:
    """Per-user SINR |h_k^H v_k|^2 / (sum_{l!=k} |h_k^H v_l|^2 + sigma_k^2)."""
    if sol.v.shape != ch.h.shape:
        raise ValueError(f"shape mismatch: v {sol.v.shape} vs h {ch.h.shape}")
    # inner[k, l] = h_k^H v_l over the aggregated vectors
    inner = np.einsum("nka,nla->kl", np.conj(ch.h), sol.v)
    power = np.abs(inner) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal
    return signal / (interference + cfg.noise_power)


def power_breakdown(sol: BeamformingSolution, selection: TaskSelection,
                    cfg: NetworkConfig) -> PowerBreakdown:
    """Transmit + compute power of a solution under a task selection.

    Every group outside the selection must be zero within the solution's
    zero tolerance.
    """
    stray = sol.support - selection.pairs
    if stray:
        raise ValueError(f"groups outside the selection are nonzero: {sorted(stray)}")
    sq = sol.group_norms ** 2
    transmit = float((sq / cfg.eta[:, None]).sum())
    compute = float(sum(cfg.p_compute[n, k] for n, k in selection.pairs))
    return PowerBreakdown(transmit_w=transmit, compute_w=compute)


def validate(sol: BeamformingSolution, selection: TaskSelection,
             ch: ChannelRealization, cfg: NetworkConfig,
             sinr_tol: float = 1e-5, power_tol: float = 1e-7,
             zero_tol: float = DEFAULT_ZERO_TOL) -> ConstraintReport:
    """Check a candidate against the QoS, power and zero-block constraints."""
    sinr = sinr_per_user(sol, ch, cfg)
    shortfall = float(np.max((cfg.gamma - sinr) / cfg.gamma))
    per_bs_power = (sol.group_norms ** 2).sum(axis=1)
    violation = float(np.max(per_bs_power - cfg.p_max))
    outside = [sol.group_norms[n, k]
               for n in range(cfg.num_bs) for k in range(cfg.num_users)
               if (n, k) not in selection.pairs]
    zero_violation = float(max(outside)) if outside else 0.0
    return ConstraintReport(
        sinr_shortfall_rel=max(shortfall, 0.0),
        power_violation_w=max(violation, 0.0),
        zero_block_violation=zero_violation,
        sinr_tol=sinr_tol,
        power_tol=power_tol,
        zero_tol=zero_tol,
    )
