"""Second-order cone programs over real-embedded complex beamformers.

Every convex subproblem of the pipeline (weighted group-norm stage,
feasibility probes, transmit-power refinement, baselines) is assembled
here as an explicit conic program and handed to Clarabel through a single
solve() contract.

Real embedding convention: each group (n, k) occupies 2L consecutive real
variables laid out (Re, Im) interleaved per antenna. Inactive groups are
eliminated from the variable vector by default; an equality-pinning mode
is kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

import clarabel

from .netmodel import ChannelRealization, NetworkConfig

DEFAULT_SOLVER_TOL = 1e-8


@dataclass(frozen=True)
class GroupLayout:
    """Maps (n, k, antenna, re/im) onto the real variable vector."""

    num_bs: int
    num_users: int
    antennas: int
    active: tuple  # sorted (n, k) pairs present in the variable vector

    @property
    def n_beam_vars(self) -> int:
        return 2 * self.antennas * len(self.active)

    def offset(self, n: int, k: int) -> int:
        """Start of group (n, k)'s 2L-slot block; KeyError if eliminated."""
        return self._offsets[(n, k)]

    def __post_init__(self):
        object.__setattr__(self, "active", tuple(sorted(self.active)))
        offsets = {g: 2 * self.antennas * i for i, g in enumerate(self.active)}
        object.__setattr__(self, "_offsets", offsets)

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Complex (N, K, L) array -> real vector over the active groups."""
        x = np.zeros(self.n_beam_vars)
        ell = self.antennas
        for n, k in self.active:
            off = self.offset(n, k)
            x[off:off + 2 * ell:2] = v[n, k].real
            x[off + 1:off + 2 * ell:2] = v[n, k].imag
        return x

    def extract(self, x: np.ndarray) -> np.ndarray:
        """Real vector -> complex (N, K, L) array, zeros for inactive groups."""
        v = np.zeros((self.num_bs, self.num_users, self.antennas), dtype=complex)
        ell = self.antennas
        for n, k in self.active:
            off = self.offset(n, k)
            v[n, k] = x[off:off + 2 * ell:2] + 1j * x[off + 1:off + 2 * ell:2]
        return v


def make_layout(cfg: NetworkConfig, inactive=frozenset()) -> GroupLayout:
    active = [(n, k) for n in range(cfg.num_bs) for k in range(cfg.num_users)
              if (n, k) not in inactive]
    return GroupLayout(cfg.num_bs, cfg.num_users, cfg.antennas, tuple(active))


@dataclass(frozen=True)
class RealEmbedding:
    """Real rows representing the complex inner products h_k^H v_l.

    re_rows[k, l] @ x == Re(h_k^H v_l) and im_rows[k, l] @ x == Im(h_k^H v_l)
    for any real vector x that embeds a beamformer under `layout`.
    """

    layout: GroupLayout
    re_rows: np.ndarray  # (K, K, n_beam_vars)
    im_rows: np.ndarray


def realify(ch: ChannelRealization, layout: GroupLayout | None = None) -> RealEmbedding:
    """Embed the channel inner products into real row vectors."""
    if layout is None:
        cfg_like = GroupLayout(ch.num_bs, ch.num_users, ch.antennas,
                               tuple((n, k) for n in range(ch.num_bs)
                                     for k in range(ch.num_users)))
        layout = cfg_like
    kk = ch.num_users
    ell = layout.antennas
    nb = layout.n_beam_vars
    re_rows = np.zeros((kk, kk, nb))
    im_rows = np.zeros((kk, kk, nb))
    # h_k^H v_l = sum_{n,a} conj(h[n,k,a]) v[n,l,a]; with v = xr + i*xi:
    #   Re = hr*xr + hi*xi,  Im = hr*xi - hi*xr
    for n, l in layout.active:
        off = layout.offset(n, l)
        hr = ch.h[n, :, :].real  # (K, L)
        hi = ch.h[n, :, :].imag
        re_rows[:, l, off:off + 2 * ell:2] = hr
        re_rows[:, l, off + 1:off + 2 * ell:2] = hi
        im_rows[:, l, off:off + 2 * ell:2] = -hi
        im_rows[:, l, off + 1:off + 2 * ell:2] = hr
    return RealEmbedding(layout=layout, re_rows=re_rows, im_rows=im_rows)


@dataclass(frozen=True)
class SocCone:
    """(A x + b) in the second-order cone: ||rows 1:|| <= row 0."""

    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class RotatedCone:
    """(A x + b) = (u, w, z) with 2 u w >= ||z||^2, u, w >= 0."""

    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class ZeroCone:
    """A x + b = 0 (used only by the equality-pinning cross-check mode)."""

    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class SocProgram:
    n_vars: int
    c: np.ndarray
    cones: tuple
    layout: GroupLayout

    def __post_init__(self):
        for cone in self.cones:
            if cone.A.shape[1] != self.n_vars or cone.A.shape[0] != cone.b.shape[0]:
                raise ValueError("cone dimensions inconsistent with the program")


@dataclass(frozen=True)
class SolveResult:
    status: str                  # optimal | infeasible | inaccurate | failure
    v: np.ndarray | None         # regrouped complex beamformer (N, K, L)
    objective: float
    achieved_tol: float
    solve_time_s: float

    @property
    def is_feasible_point(self) -> bool:
        return self.status in ("optimal", "inaccurate")


def _pad(rows: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((rows.shape[0], width))
    out[:, :rows.shape[1]] = rows
    return out


def build_qos_constraints(ch: ChannelRealization, cfg: NetworkConfig,
                          layout: GroupLayout | None = None,
                          width: int | None = None) -> list:
    """One SOC per user:  ||(cross terms, sigma_k)|| <= Re(h_k^H v_k)/sqrt(gamma_k)."""
    if layout is None:
        layout = make_layout(cfg)
    if width is None:
        width = layout.n_beam_vars
    emb = realify(ch, layout)
    kk = cfg.num_users
    cones = []
    for k in range(kk):
        dim = 2 * (kk - 1) + 2
        a = np.zeros((dim, layout.n_beam_vars))
        b = np.zeros(dim)
        a[0] = emb.re_rows[k, k] / np.sqrt(cfg.gamma[k])
        r = 1
        for l in range(kk):
            if l == k:
                continue
            a[r] = emb.re_rows[k, l]
            a[r + 1] = emb.im_rows[k, l]
            r += 2
        b[-1] = np.sqrt(cfg.noise_power[k])
        cones.append(SocCone(A=_pad(a, width), b=b))
    return cones


def build_power_constraints(cfg: NetworkConfig,
                            layout: GroupLayout | None = None,
                            width: int | None = None) -> list:
    """Per BS n:  ||(v_n1, ..., v_nK)|| <= sqrt(P_n^max)."""
    if layout is None:
        layout = make_layout(cfg)
    if width is None:
        width = layout.n_beam_vars
    ell = layout.antennas
    cones = []
    for n in range(cfg.num_bs):
        cols = []
        for (bn, bk) in layout.active:
            if bn == n:
                off = layout.offset(bn, bk)
                cols.extend(range(off, off + 2 * ell))
        a = np.zeros((1 + len(cols), width))
        b = np.zeros(1 + len(cols))
        b[0] = np.sqrt(cfg.p_max[n])
        for i, c in enumerate(cols):
            a[1 + i, c] = 1.0
        cones.append(SocCone(A=a, b=b))
    return cones


def _group_norm_epigraphs(layout: GroupLayout, width: int, aux_start: int) -> list:
    """t_g >= ||v_g|| for every active group; t_g are consecutive aux vars."""
    ell = layout.antennas
    cones = []
    for i, (n, k) in enumerate(layout.active):
        off = layout.offset(n, k)
        a = np.zeros((1 + 2 * ell, width))
        a[0, aux_start + i] = 1.0
        for j in range(2 * ell):
            a[1 + j, off + j] = 1.0
        cones.append(SocCone(A=a, b=np.zeros(1 + 2 * ell)))
    return cones


def _quadratic_epigraph(cols, width: int, q_index: int,
                        offsets: np.ndarray | None = None) -> RotatedCone:
    """q >= sum of squares of (x[cols] + offsets), via a rotated cone."""
    m = len(cols)
    a = np.zeros((2 + m, width))
    b = np.zeros(2 + m)
    a[0, q_index] = 1.0   # u = q
    b[1] = 0.5            # w = 1/2, so 2*u*w = q
    for i, c in enumerate(cols):
        a[2 + i, c] = 1.0
    if offsets is not None:
        b[2:] = offsets
    return RotatedCone(A=a, b=b)


def build_stage1(weights: np.ndarray, v_prev: np.ndarray, beta: float,
                 ch: ChannelRealization, cfg: NetworkConfig) -> SocProgram:
    """Weighted group-norm objective plus a proximal quadratic around v_prev.

    minimize sum_g w_g ||v_g|| + (beta/2) ||v - v_prev||^2  over the QoS and
    power constraint set. `weights` is an (N, K) array of positive reals.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    layout = make_layout(cfg)
    nb = layout.n_beam_vars
    ng = len(layout.active)
    width = nb + ng + 1  # beamformer, group epigraphs, prox epigraph
    c = np.zeros(width)
    for i, (n, k) in enumerate(layout.active):
        c[nb + i] = weights[n, k]
    c[nb + ng] = beta / 2.0
    x_prev = layout.embed(v_prev)
    cones = (
        build_qos_constraints(ch, cfg, layout, width)
        + build_power_constraints(cfg, layout, width)
        + _group_norm_epigraphs(layout, width, nb)
        + [_quadratic_epigraph(list(range(nb)), width, nb + ng, offsets=-x_prev)]
    )
    return SocProgram(n_vars=width, c=c, cones=tuple(cones), layout=layout)


def build_mixed_l12(rho: np.ndarray, ch: ChannelRealization,
                    cfg: NetworkConfig) -> SocProgram:
    """Weighted group-norm objective sum_g rho_g ||v_g||, no proximal term."""
    layout = make_layout(cfg)
    nb = layout.n_beam_vars
    ng = len(layout.active)
    width = nb + ng
    c = np.zeros(width)
    for i, (n, k) in enumerate(layout.active):
        c[nb + i] = rho[n, k]
    cones = (
        build_qos_constraints(ch, cfg, layout, width)
        + build_power_constraints(cfg, layout, width)
        + _group_norm_epigraphs(layout, width, nb)
    )
    return SocProgram(n_vars=width, c=c, cones=tuple(cones), layout=layout)


def _pinning_cones(cfg: NetworkConfig, layout: GroupLayout, width: int,
                   inactive) -> list:
    ell = cfg.antennas
    cones = []
    for n, k in sorted(inactive):
        off = layout.offset(n, k)
        a = np.zeros((2 * ell, width))
        for j in range(2 * ell):
            a[j, off + j] = 1.0
        cones.append(ZeroCone(A=a, b=np.zeros(2 * ell)))
    return cones


def build_feasibility(inactive, ch: ChannelRealization, cfg: NetworkConfig,
                      eliminate: bool = True) -> SocProgram:
    """Zero-objective program: is the constraint set nonempty with the given
    groups forced to zero?"""
    inactive = frozenset(inactive)
    if eliminate:
        layout = make_layout(cfg, inactive)
        extra = []
    else:
        layout = make_layout(cfg)
        extra = _pinning_cones(cfg, layout, layout.n_beam_vars, inactive)
    width = layout.n_beam_vars
    cones = (build_qos_constraints(ch, cfg, layout, width)
             + build_power_constraints(cfg, layout, width)
             + extra)
    return SocProgram(n_vars=width, c=np.zeros(width), cones=tuple(cones),
                      layout=layout)


def build_refinement(inactive, ch: ChannelRealization, cfg: NetworkConfig,
                     eliminate: bool = True) -> SocProgram:
    """Minimize the transmit power sum_n ||v_n.||^2 / eta_n over the
    restricted support. The fixed compute power of the selection is not
    part of the objective."""
    inactive = frozenset(inactive)
    if eliminate:
        layout = make_layout(cfg, inactive)
        pin = []
    else:
        layout = make_layout(cfg)
    nb = layout.n_beam_vars
    width = nb + cfg.num_bs  # one quadratic epigraph per BS
    if not eliminate:
        pin = _pinning_cones(cfg, layout, width, inactive)
    c = np.zeros(width)
    ell = cfg.antennas
    quad = []
    for n in range(cfg.num_bs):
        cols = []
        for (bn, bk) in layout.active:
            if bn == n and (eliminate or (bn, bk) not in inactive):
                off = layout.offset(bn, bk)
                cols.extend(range(off, off + 2 * ell))
        quad.append(_quadratic_epigraph(cols, width, nb + n))
        c[nb + n] = 1.0 / cfg.eta[n]
    cones = (build_qos_constraints(ch, cfg, layout, width)
             + build_power_constraints(cfg, layout, width)
             + quad + pin)
    return SocProgram(n_vars=width, c=c, cones=tuple(cones), layout=layout)


def build_cb(ch: ChannelRealization, cfg: NetworkConfig) -> SocProgram:
    """Coordinated beamforming baseline: refinement over the full support."""
    return build_refinement(frozenset(), ch, cfg)


def _rotated_to_soc(cone: RotatedCone) -> SocCone:
    # 2uw >= ||z||^2, u,w >= 0  <=>  ||(u - w, sqrt(2) z)|| <= u + w
    u_a, u_b = cone.A[0], cone.b[0]
    w_a, w_b = cone.A[1], cone.b[1]
    z_a, z_b = cone.A[2:], cone.b[2:]
    a = np.vstack([u_a + w_a, u_a - w_a, np.sqrt(2.0) * z_a])
    b = np.concatenate([[u_b + w_b], [u_b - w_b], np.sqrt(2.0) * z_b])
    return SocCone(A=a, b=b)


_STATUS_MAP = {
    "Solved": "optimal",
    "AlmostSolved": "inaccurate",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
}


def solve(prog: SocProgram, tol: float = DEFAULT_SOLVER_TOL) -> SolveResult:
    """Solve a conic program with Clarabel.

    Returns status "optimal" with the regrouped complex beamformer on
    success, "infeasible" on a certified infeasibility, "inaccurate" for
    reduced-accuracy solutions and "failure" on numerical breakdown.
    """
    zero_cones = [c for c in prog.cones if isinstance(c, ZeroCone)]
    soc_cones = [c if isinstance(c, SocCone) else _rotated_to_soc(c)
                 for c in prog.cones if not isinstance(c, ZeroCone)]
    blocks, b_parts, cone_spec = [], [], []
    for c in zero_cones:
        blocks.append(c.A)
        b_parts.append(c.b)
        cone_spec.append(clarabel.ZeroConeT(c.A.shape[0]))
    for c in soc_cones:
        blocks.append(c.A)
        b_parts.append(c.b)
        cone_spec.append(clarabel.SecondOrderConeT(c.A.shape[0]))
    # Clarabel convention: A x + s = b with s in the cone, so negate A and
    # keep our offsets as b.
    a_mat = sparse.csc_matrix(-np.vstack(blocks))
    b_vec = np.concatenate(b_parts)
    p_mat = sparse.csc_matrix((prog.n_vars, prog.n_vars))

    def attempt(target):
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = target
        settings.tol_gap_rel = target
        settings.tol_feas = target
        settings.reduced_tol_gap_abs = tol
        settings.reduced_tol_gap_rel = tol
        settings.reduced_tol_feas = tol
        try:
            solver = clarabel.DefaultSolver(p_mat, prog.c, a_mat, b_vec,
                                            cone_spec, settings)
            return solver.solve()
        except BaseException:
            return None

    # Aim three orders below the requested tolerance but certify at the
    # requested one: the solver keeps iterating toward the tight target and
    # falls back to AlmostSolved ("inaccurate") when only `tol` is reached.
    # Degenerate instances can break down numerically at tight targets, so
    # retry deterministically up a ladder of looser targets ending at `tol`.
    sol = None
    for scale in (1e-3, 1e-2, 1e-1, 1.0):
        sol = attempt(max(tol * scale, 1e-13))
        if sol is not None and _STATUS_MAP.get(str(sol.status),
                                               "failure") != "failure":
            break
    if sol is None:
        return SolveResult(status="failure", v=None, objective=np.nan,
                           achieved_tol=np.nan, solve_time_s=0.0)
    status = _STATUS_MAP.get(str(sol.status), "failure")
    v = None
    if status in ("optimal", "inaccurate"):
        x = np.asarray(sol.x)
        v = prog.layout.extract(x)
    return SolveResult(status=status, v=v, objective=float(sol.obj_val),
                       achieved_tol=float(max(sol.r_prim, sol.r_dual)),
                       solve_time_s=float(sol.solve_time))
