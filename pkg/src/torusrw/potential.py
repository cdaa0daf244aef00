"""Lattice potential theory on Z^d: Green function, equilibrium measures.

The Green function table is built the classical way: Dirichlet solves of
(I - P) g = delta_0 on centered cubes of increasing radius (zero outside),
then pointwise Richardson extrapolation in 1/R across the radius schedule.
Each solve is harmonic off the origin up to the CG residual, and the
extrapolated table is a fixed linear combination of solves, so harmonicity
survives extrapolation exactly; the extrapolation level sequence is kept for
convergence diagnostics.

Equilibrium measures are computed relative to a finite environment box U:
e_{K,U}(x) is the probability that the walk from x leaves U before returning
to K.  The infinite-lattice equilibrium measure is sandwiched between
e_{K,U} scaled down by the far-return budget and e_{K,U} itself, and reports
carry that interval rather than pretending the truncation away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._poisson import cg_dirichlet
from .lattice import box_sites_zd, enclosing_radius

__all__ = [
    "GreenTable",
    "green",
    "EquilibriumReport",
    "equilibrium_measure",
    "relative_equilibrium",
    "u_of_z",
    "hit_prob_far_bound",
]

#: Watson's integral for the d=3 walk, used only as an external cross-check
#: in tests; the table never reads it.
G0_D3_REFERENCE = 1.5163860591

_DEFAULT_SCHEDULES = {3: (12, 18, 27, 40, 60)}
_DEFAULT_TABLE_RADIUS = {3: 10}


def _default_schedule(d: int) -> tuple[int, ...]:
    if d in _DEFAULT_SCHEDULES:
        return _DEFAULT_SCHEDULES[d]
    # keep the largest cube below ~6e6 sites in higher dimensions
    top = max(8, int(6e6 ** (1.0 / d)) // 2 - 1)
    r3 = max(8, int(top * 0.67))
    r2 = max(8, int(top * 0.45))
    r1 = max(8, int(top * 0.30))
    radii = sorted({r1, r2, r3, top})
    if len(radii) < 2:
        radii = [top // 2, top]
    return tuple(radii)


def _solve_green_cube(d: int, radius: int, atol: float) -> np.ndarray:
    """Dirichlet Green function g_R(0, .) on the cube of the given radius."""
    L = 2 * radius + 1
    n = L**d
    b = np.zeros(n)
    center = (n - 1) // 2  # coordinates (radius, ..., radius)
    b[center] = 1.0
    blocked = np.zeros(n, dtype=np.uint8)
    u, _res, _it = cg_dirichlet(b, blocked, L, d, atol=atol)
    return u.reshape((L,) * d)


def _richardson_weights(radii: np.ndarray) -> np.ndarray:
    """Lagrange-at-zero weights in the variable 1/R: eliminate 1/R^k terms."""
    x = 1.0 / radii
    m = x.size
    w = np.ones(m)
    for i in range(m):
        for j in range(m):
            if j != i:
                w[i] *= x[j] / (x[j] - x[i])
    return w


@dataclass
class GreenTable:
    """Extrapolated Green function values on the window B(0, radius).

    ``values`` has shape (2*radius+1,)*d indexed by coordinates shifted by
    +radius.  ``level_estimates`` is the sequence of Richardson extrapolants
    of g(0) using the first j schedule radii; the last entry is the table's
    own g(0).
    """

    d: int
    radius: int
    schedule: tuple
    values: np.ndarray
    level_estimates: np.ndarray
    raw_origin_values: np.ndarray
    harmonicity_residual: float

    @property
    def g0(self) -> float:
        return float(self.values[(self.radius,) * self.d])

    @property
    def extrapolation_step(self) -> float:
        """|difference| of the last two extrapolation levels (conv. check)."""
        return float(abs(self.level_estimates[-1] - self.level_estimates[-2]))

    def g(self, v):
        """g(v) for lattice displacements v, |v|_inf <= radius (else raises)."""
        pts = np.asarray(v, dtype=np.int64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.d:
            raise ValueError(f"expected {self.d}-dimensional displacements")
        if np.abs(pts).max(initial=0) > self.radius:
            raise ValueError(f"displacement outside table window (radius {self.radius})")
        idx = tuple((pts + self.radius).T)
        out = self.values[idx]
        return float(out[0]) if single else out

    def far_envelope_constant(self, safety: float = 1.005) -> float:
        """sup of g(x) |x|_2^{d-2} on the window's outer shell, with margin.

        Used to budget probabilities of return from far away; at the shell
        radius the approach to the asymptotic constant is already at the
        1e-3 level in d=3, and ``safety`` covers the direction dependence.
        """
        shell = box_sites_zd((0,) * self.d, self.radius, self.d)
        shell = shell[np.abs(shell).max(axis=1) == self.radius]
        gv = self.g(shell)
        r2 = np.sqrt((shell.astype(float) ** 2).sum(axis=1))
        return float(np.max(gv * r2 ** (self.d - 2)) * safety)

    def to_csv(self, path_or_buf):
        """Write the table as CSV: columns x1..xd,g in lexicographic order."""
        pts = box_sites_zd((0,) * self.d, self.radius, self.d)
        gv = self.g(pts)
        header = ",".join(f"x{k+1}" for k in range(self.d)) + ",g"
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w") if own else path_or_buf
        try:
            fh.write(header + "\n")
            for row, val in zip(pts, gv):
                fh.write(",".join(str(int(c)) for c in row) + f",{val:.15g}\n")
        finally:
            if own:
                fh.close()


def green(d: int = 3, r_table: int | None = None, schedule=None, atol: float = 1e-13) -> GreenTable:
    """Green function table for the simple random walk on Z^d, d >= 3.

    Parameters
    ----------
    d : dimension (transient range only).
    r_table : radius of the returned window; defaults keep the window well
        inside the smallest solve cube.
    schedule : increasing cube radii for the Dirichlet solves; each radius
        must be >= 8 and > r_table + 1.
    atol : CG residual target (2-norm), absolute — the right-hand side is a
        unit vector, so this is also the relative target.

    Notes
    -----
    The window values are the Lagrange/Richardson combination of the per-cube
    solves, eliminating 1/R through 1/R^{m-1}; the combination is linear, so
    interior harmonicity holds to CG accuracy times the weight 1-norm, which
    is reported as ``harmonicity_residual``.
    """
    if d < 3:
        raise ValueError("green function requires a transient walk: d >= 3")
    schedule = tuple(_default_schedule(d) if schedule is None else schedule)
    if len(schedule) < 2:
        raise ValueError("schedule needs at least two radii")
    if any(schedule[i] >= schedule[i + 1] for i in range(len(schedule) - 1)):
        raise ValueError("schedule must be strictly increasing")
    if schedule[0] < 8:
        raise ValueError("solve radii must be >= 8")
    if r_table is None:
        r_table = _DEFAULT_TABLE_RADIUS.get(d, max(2, schedule[0] - 4))
    if r_table + 1 >= schedule[0]:
        raise ValueError("r_table must leave an interior margin inside the smallest cube")

    radii = np.array(schedule, dtype=float)
    windows = []
    raw0 = np.empty(len(schedule))
    L_t = 2 * r_table + 1
    for i, R in enumerate(schedule):
        cube = _solve_green_cube(d, int(R), atol)
        lo = int(R) - r_table
        hi = int(R) + r_table + 1
        sl = (slice(lo, hi),) * d
        windows.append(cube[sl].copy())
        raw0[i] = cube[(int(R),) * d]
        del cube

    levels = np.empty(len(schedule))
    levels[0] = raw0[0]
    for j in range(1, len(schedule)):
        w = _richardson_weights(radii[: j + 1])
        levels[j] = float(w @ raw0[: j + 1])
    w_full = _richardson_weights(radii)
    table = np.zeros((L_t,) * d)
    for wi, win in zip(w_full, windows):
        table += wi * win

    residual = _harmonicity_residual(table, d, r_table)
    return GreenTable(
        d=d,
        radius=int(r_table),
        schedule=schedule,
        values=table,
        level_estimates=levels,
        raw_origin_values=raw0,
        harmonicity_residual=residual,
    )


def _harmonicity_residual(table: np.ndarray, d: int, radius: int) -> float:
    """max |(I-P)g - delta_0| over the strict interior of the window."""
    inner = (slice(1, -1),) * d
    acc = np.zeros_like(table[inner])
    for k in range(d):
        for shift in (+1, -1):
            sl = tuple(
                slice(1 + (shift if a == k else 0), (table.shape[a] - 1) + (shift if a == k else 0))
                for a in range(d)
            )
            acc += table[sl]
    resid = table[inner] - acc / (2 * d)
    resid = resid.copy()
    center = (radius - 1,) * d  # origin within the interior view
    resid[center] -= 1.0
    return float(np.abs(resid).max())


# ---------------------------------------------------------------------------
# equilibrium measures
# ---------------------------------------------------------------------------

_default_tables: dict[int, GreenTable] = {}


def _shared_table(d: int) -> GreenTable:
    if d not in _default_tables:
        _default_tables[d] = green(d)
    return _default_tables[d]


@dataclass
class EquilibriumReport:
    """Equilibrium measure of K relative to the box B(0, r_env), with the
    sandwich down to the infinite-lattice measure.

    ``e_upper`` is e_{K,U} itself (an upper bound for e_K), ``e_lower`` is
    e_{K,U} (1 - q) where q bounds the probability of returning to K from
    outside the environment box; capacities are the corresponding sums and
    ``cap_mid``/``cap_err`` give the midpoint form.
    """

    points: np.ndarray
    r_env: int
    e_upper: np.ndarray
    e_lower: np.ndarray
    q: float

    @property
    def e_mid(self) -> np.ndarray:
        return 0.5 * (self.e_upper + self.e_lower)

    @property
    def cap_upper(self) -> float:
        return float(self.e_upper.sum())

    @property
    def cap_lower(self) -> float:
        return float(self.e_lower.sum())

    @property
    def cap_mid(self) -> float:
        return 0.5 * (self.cap_upper + self.cap_lower)

    @property
    def cap_err(self) -> float:
        return 0.5 * (self.cap_upper - self.cap_lower)


def equilibrium_measure(points, r_env: int = 64, table: GreenTable | None = None) -> EquilibriumReport:
    """Equilibrium measure and capacity of a finite K subset of Z^d.

    ``points`` is an (m, d) integer array; K must fit inside B(0, r_env/4).
    The Dirichlet solve runs on the environment cube B(0, r_env); the far
    -return budget q uses the Green far-field envelope from ``table`` (a
    shared default table when omitted).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
    m, d = pts.shape
    if m == 0:
        raise ValueError("K must be nonempty")
    r_k = enclosing_radius(pts)
    if r_k > r_env // 4:
        raise ValueError(f"K (radius {r_k}) must fit inside B(0, r_env/4) = B(0, {r_env // 4})")
    if table is None:
        table = _shared_table(d)

    L = 2 * r_env + 1
    n = L**d
    strides = L ** np.arange(d - 1, -1, -1, dtype=np.int64)
    k_flat = (pts + r_env) @ strides
    blocked = np.zeros(n, dtype=np.uint8)
    blocked[k_flat] = 1

    # influx from the absorbing exterior: h = 1 outside the cube
    b = np.zeros(n)
    grid = np.indices((L,) * d).reshape(d, -1)
    outside_nbrs = ((grid == 0).sum(axis=0) + (grid == L - 1).sum(axis=0)).astype(float)
    b += outside_nbrs / (2.0 * d)

    h, _res, _it = cg_dirichlet(b, blocked, L, d)

    e_upper = np.zeros(m)
    inv2d = 1.0 / (2.0 * d)
    for j in range(m):
        acc = 0.0
        base = k_flat[j]
        for k in range(d):
            c = pts[j, k] + r_env
            # K is deep inside the cube, so neighbours never leave it
            acc += h[base + strides[k]] if c + 1 < L else 1.0
            acc += h[base - strides[k]] if c > 0 else 1.0
        e_upper[j] = inv2d * acc

    cap_u = float(e_upper.sum())
    dist = float(r_env + 1 - r_k)
    q = cap_u * table.far_envelope_constant() / dist ** (d - 2)
    q = min(q, 0.5)  # a q this large means r_env was far too small anyway
    return EquilibriumReport(points=pts, r_env=int(r_env), e_upper=e_upper, e_lower=e_upper * (1.0 - q), q=float(q))


def relative_equilibrium(k_points, u_points):
    """e_{K,U} and cap_U(K) for finite K inside finite U (plain Z^d sets).

    Direct sparse solve; intended for moderate |U| (up to ~1e5 sites).
    Returns (e, cap) with e aligned to the order of ``k_points``.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    K = np.atleast_2d(np.asarray(k_points, dtype=np.int64))
    U = np.atleast_2d(np.asarray(u_points, dtype=np.int64))
    m, d = K.shape
    if U.shape[1] != d:
        raise ValueError("K and U dimension mismatch")
    u_index = {tuple(row): i for i, row in enumerate(U)}
    if len(u_index) != U.shape[0]:
        raise ValueError("U contains duplicate sites")
    k_pos = []
    for row in K:
        t = tuple(row)
        if t not in u_index:
            raise ValueError("K must be contained in U")
        k_pos.append(u_index[t])
    k_pos = np.asarray(k_pos, dtype=np.int64)
    k_set = set(map(tuple, K))
    if len(k_set) != m:
        raise ValueError("K contains duplicate sites")

    # unknowns: sites of U \ K
    free = [i for i, row in enumerate(U) if tuple(row) not in k_set]
    free_of = {i: j for j, i in enumerate(free)}
    nf = len(free)
    inv2d = 1.0 / (2.0 * d)
    rows, cols, vals = [], [], []
    b = np.zeros(nf)
    eye = np.eye(d, dtype=np.int64)
    for j, i in enumerate(free):
        site = U[i]
        for k in range(d):
            for sgn in (+1, -1):
                nbr = tuple(site + sgn * eye[k])
                if nbr in u_index:
                    ii = u_index[nbr]
                    if ii in free_of:
                        rows.append(j)
                        cols.append(free_of[ii])
                        vals.append(-inv2d)
                    # neighbour in K contributes 0
                else:
                    b[j] += inv2d  # absorbed outside U at value 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(nf, nf)) + sp.eye(nf, format="csr")
    h = spla.spsolve(A.tocsc(), b) if nf else np.zeros(0)

    h_of = np.zeros(U.shape[0])
    for j, i in enumerate(free):
        h_of[i] = h[j]
    e = np.zeros(m)
    for a, row in enumerate(K):
        acc = 0.0
        for k in range(d):
            for sgn in (+1, -1):
                nbr = tuple(row + sgn * eye[k])
                if nbr in u_index:
                    if nbr not in k_set:
                        acc += h_of[u_index[nbr]]
                else:
                    acc += 1.0
        e[a] = inv2d * acc
    return e, float(e.sum())


def u_of_z(f_size: int, z: float, g0: float) -> float:
    """Time level per site, u_F(z) = g0 (log|F| + z); raises if nonpositive."""
    if f_size < 2:
        raise ValueError("need |F| >= 2")
    if g0 <= 0:
        raise ValueError("g0 must be positive")
    u = g0 * (np.log(float(f_size)) + z)
    if u <= 0:
        raise ValueError(f"level z={z} gives a nonpositive time scale for |F|={f_size}")
    return float(u)


def hit_prob_far_bound(r1: float, r2: float, d: int, c_const: float = 2.0) -> float:
    """Envelope c (r1/r2)^{d-2} for hitting B(0, r1) from distance r2.

    The default constant is calibrated (conservatively) for d=3 boxes against
    capacity times the Green far-field; override for other uses.
    """
    if not (0 < r1 < r2):
        raise ValueError("need 0 < r1 < r2")
    return float(min(1.0, c_const * (r1 / r2) ** (d - 2)))
