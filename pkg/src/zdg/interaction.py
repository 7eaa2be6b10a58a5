"""Renormalized Hartree interaction: tensor, counterterms, energies, Wick algebra.

The quartic interaction of a truncated field u = sum c_n e_n with pair
potential w(x, y) is encoded by

    A[j, k, l, m] = intint rho_jk(x) w(x, y) rho_lm(y),
    rho_jk(x) = e_j(x) . e_k(x)  (component dot; real),

assembled by quadrature on the zonal grid.  Renormalization subtracts the
two quadratic Wick contractions (direct and exchange) and adds back the two
fully-contracted constants, giving for coefficients c

    E(c) = sum A c~_j c_k c~_l c_m
           - 2 sum_jk S_jk c~_j c_k - 2 sum_jk T_jk c~_j c_k
           + e0_const + e0_trace,

    S_jk = sum_p A[j, k, p, p] / lambda_p^2      (direct contraction)
    T_jk = sum_p A[j, p, p, k] / lambda_p^2      (exchange contraction)
    e0_const = sum_jl A[j, j, l, l] / (lambda_j lambda_l)^2
    e0_trace = sum_jk A[j, k, k, j] / (lambda_j lambda_k)^2.

On raw Gaussians g (c = g / lambda) the same quantity is the integrated
fourth Wick monomial; `wick_energy_literal` evaluates that seven-term
monomial directly as an independent route.  A third, fully grid-space route
(`interaction_energy_grid`) never touches the tensor at all.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TENSOR_BUDGET = 2 * 1024 ** 3  # bytes

SEPARABLE_PROFILES = {
    "one_plus_cos": lambda theta: 1.0 + np.cos(theta),
    "gauss_bump": lambda theta: np.exp(-((theta - np.pi / 2) ** 2)
                                       / (2 * 0.4 ** 2)),
}

GRID_KERNELS = {
    "gaussian_angle": lambda ti, tj, width: np.exp(
        -((ti[:, None] - tj[None, :]) ** 2) / (2.0 * width ** 2)),
}


@dataclass
class KernelSpec:
    """Pair-potential description.

    kind "constant": w = kappa (kappa >= 0).
    kind "separable": w(x, y) = v(x) v(y) with v = amplitude * profile(theta)
        (profiles are nonnegative, so w >= 0 and rank one).
    kind "grid": w(x, y) tabulated from a named positive-definite family.
    kind "matrix": w(x, y) supplied as node values (e.g. loaded from a CSV
        kernel file); validated like a grid kernel.
    """

    kind: str = "constant"
    kappa: float = 1.0
    profile: str = "one_plus_cos"
    amplitude: float = 1.0
    name: str = "gaussian_angle"
    width: float = 0.7
    matrix: np.ndarray = None

    def describe(self):
        if self.kind == "constant":
            return f"constant(kappa={self.kappa})"
        if self.kind == "separable":
            return f"separable({self.profile}, amplitude={self.amplitude})"
        if self.kind == "matrix":
            shape = None if self.matrix is None else self.matrix.shape
            return f"matrix(shape={shape})"
        return f"grid({self.name}, width={self.width})"


def kernel_node_values(spec, grid):
    """Discretize the kernel on the grid.

    Returns ("constant", kappa) or ("separable", v nodes) or ("grid", matrix).
    Nonnegativity is enforced here; grid kernels are also checked to be
    symmetric and positive semidefinite in the quadrature inner product.
    """
    if spec.kind == "constant":
        if spec.kappa < 0:
            raise ValueError("constant kernel needs kappa >= 0")
        return "constant", float(spec.kappa)
    if spec.kind == "separable":
        try:
            prof = SEPARABLE_PROFILES[spec.profile]
        except KeyError:
            raise ValueError(f"unknown separable profile {spec.profile!r}")
        if spec.amplitude < 0:
            raise ValueError("separable kernel needs amplitude >= 0")
        v = spec.amplitude * prof(grid.theta)
        if np.any(v < -1e-12):
            raise ValueError("separable profile must be nonnegative")
        return "separable", np.maximum(v, 0.0)
    if spec.kind == "grid":
        try:
            fam = GRID_KERNELS[spec.name]
        except KeyError:
            raise ValueError(f"unknown grid kernel {spec.name!r}")
        if spec.width <= 0:
            raise ValueError("grid kernel needs width > 0")
        mat = fam(grid.theta, grid.theta, spec.width)
        return "grid", _check_kernel_matrix(mat, grid)
    if spec.kind == "matrix":
        if spec.matrix is None:
            raise ValueError("matrix kernel needs node values")
        mat = np.asarray(spec.matrix, dtype=float)
        if mat.shape != (grid.size, grid.size):
            raise ValueError(
                f"kernel matrix shape {mat.shape} does not match the "
                f"{grid.size}-node grid")
        return "grid", _check_kernel_matrix(mat, grid)
    raise ValueError(f"unknown kernel kind {spec.kind!r}")


def _check_kernel_matrix(mat, grid):
    if not np.allclose(mat, mat.T, atol=1e-12):
        raise ValueError("grid kernel must be symmetric")
    if np.any(mat < 0):
        raise ValueError("grid kernel must be pointwise nonnegative")
    sq = np.sqrt(grid.weights)
    weighted = sq[:, None] * mat * sq[None, :]
    eigmin = np.linalg.eigvalsh(weighted)[0]
    if eigmin < -1e-10 * max(1.0, np.abs(weighted).max()):
        raise ValueError("grid kernel is not positive semidefinite")
    return mat


def kernel_matrix_to_csv(path, theta, matrix):
    """Write kernel node values as CSV: header row of theta nodes, K rows."""
    matrix = np.asarray(matrix, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if matrix.shape != (theta.size, theta.size):
        raise ValueError("kernel matrix shape must match the node count")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([repr(float(t)) for t in theta])
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def kernel_matrix_from_csv(path, theta=None, rtol=1e-8):
    """Read a kernel file (header row of theta nodes, then K rows of K values).

    When theta is given the header nodes must match it to relative
    tolerance rtol, so a file tabulated on one quadrature grid cannot be
    applied silently to another.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise ValueError("kernel file needs a header row and K value rows")
    nodes = np.array([float(v) for v in rows[0]])
    k = nodes.size
    if len(rows) != k + 1:
        raise ValueError(
            f"kernel file has {len(rows) - 1} value rows for {k} nodes")
    mat = np.empty((k, k))
    for i, row in enumerate(rows[1:]):
        if len(row) != k:
            raise ValueError(f"kernel file row {i} has {len(row)} values, "
                             f"expected {k}")
        mat[i] = [float(v) for v in row]
    if theta is not None:
        theta = np.asarray(theta, dtype=float)
        if theta.size != k or not np.allclose(nodes, theta, rtol=rtol,
                                              atol=1e-12):
            raise ValueError(
                "kernel file nodes do not match the quadrature grid")
    return mat


def pair_density(basis):
    """rho[j, k, i] = e_j(theta_i) . e_k(theta_i), shape (J, J, K)."""
    return np.einsum("jia,kia->jki", basis.values, basis.values)


@dataclass
class InteractionTensor:
    """Assembled interaction tensor with counterterm contractions.

    factor is the rank-one pair factor V with A = V (x) V when the kernel is
    constant or separable (None for grid kernels); it powers the fast batched
    energy path, while A itself is always present for the generic routes.
    """

    dim: int
    cutoff: int
    a: np.ndarray
    s_mat: np.ndarray
    t_mat: np.ndarray
    e0_const: float
    e0_trace: float
    lam: np.ndarray
    kernel: KernelSpec
    factor: np.ndarray = None
    basis: object = field(default=None, repr=False)

    @property
    def n_modes(self):
        return self.cutoff + 1

    @property
    def inv_lam2(self):
        return 1.0 / self.lam ** 2

    def slice(self, cutoff):
        """Tensor for a lower cutoff; counterterms recomputed at that cutoff."""
        if cutoff > self.cutoff:
            raise ValueError("can only slice to a smaller cutoff")
        j = cutoff + 1
        a = np.ascontiguousarray(self.a[:j, :j, :j, :j])
        factor = None if self.factor is None else self.factor[:j, :j].copy()
        s, t, e0c, e0t = _contract_counterterms(a, self.lam[:j])
        return InteractionTensor(dim=self.dim, cutoff=cutoff, a=a,
                                 s_mat=s, t_mat=t, e0_const=e0c, e0_trace=e0t,
                                 lam=self.lam[:j].copy(), kernel=self.kernel,
                                 factor=factor, basis=self.basis)


def _contract_counterterms(a, lam):
    il2 = 1.0 / lam ** 2
    s = np.einsum("jkpp,p->jk", a, il2)
    t = np.einsum("jppk,p->jk", a, il2)
    e0c = float(np.einsum("jjll,j,l->", a, il2, il2))
    e0t = float(np.einsum("jkkj,j,k->", a, il2, il2))
    return s, t, e0c, e0t


def assemble_interaction(basis, kspec, budget_bytes=DEFAULT_TENSOR_BUDGET):
    """Assemble the dense interaction tensor on the basis grid.

    Raises ValueError when the dense tensor would exceed budget_bytes.
    """
    j = basis.n_modes
    need = 8 * j ** 4
    if need > budget_bytes:
        max_cutoff = int((budget_bytes / 8) ** 0.25) - 1
        raise ValueError(
            f"dense interaction tensor needs {need} bytes, over the budget "
            f"of {budget_bytes}; the largest admissible cutoff is "
            f"{max_cutoff}")
    kind, payload = kernel_node_values(kspec, basis.grid)
    rho = pair_density(basis)
    w = basis.grid.weights
    if kind == "constant":
        gram = rho @ w
        factor = math.sqrt(payload) * gram
        a = np.einsum("jk,lm->jklm", factor, factor)
    elif kind == "separable":
        factor = rho @ (w * payload)
        a = np.einsum("jk,lm->jklm", factor, factor)
    else:
        b = rho * w
        half = np.tensordot(b, payload, axes=(2, 0))  # (J, J, K)
        a = np.tensordot(half, b, axes=(2, 2))
        a = 0.5 * (a + a.transpose(2, 3, 0, 1))  # exact symmetry to roundoff
        factor = None
    s, t, e0c, e0t = _contract_counterterms(a, basis.lam)
    return InteractionTensor(dim=basis.dim, cutoff=basis.cutoff, a=a,
                             s_mat=s, t_mat=t, e0_const=e0c, e0_trace=e0t,
                             lam=basis.lam.copy(), kernel=kspec,
                             factor=factor, basis=basis)


def _as_batch(coeffs):
    c = np.asarray(coeffs, dtype=complex)
    single = c.ndim == 1
    return (c[None, :] if single else c), single


def quartic_form(tensor, coeffs, chunk=128):
    """sum A c~_j c_k c~_l c_m per sample (real)."""
    c, single = _as_batch(coeffs)
    if tensor.factor is not None:
        q = np.einsum("sj,jk,sk->s", np.conj(c), tensor.factor, c).real
        out = q * q
    else:
        out = np.empty(c.shape[0])
        for lo in range(0, c.shape[0], chunk):
            blk = c[lo:lo + chunk]
            out[lo:lo + chunk] = np.einsum(
                "jklm,sj,sk,sl,sm->s", tensor.a,
                np.conj(blk), blk, np.conj(blk), blk, optimize=True).real
    return out[0] if single else out


def interaction_energy(tensor, coeffs):
    """Renormalized interaction energy E(c); batched over leading axis."""
    c, single = _as_batch(coeffs)
    quart = quartic_form(tensor, c)
    st = tensor.s_mat + tensor.t_mat
    lin = np.einsum("sj,jk,sk->s", np.conj(c), st, c).real
    out = quart - 2.0 * lin + tensor.e0_const + tensor.e0_trace
    return out[0] if single else out


def log_gibbs_weight(tensor, coeffs):
    """log of the Gibbs reweighting factor, -E(c)."""
    return -interaction_energy(tensor, coeffs)


def nonlinearity(tensor, coeffs):
    """Renormalized cubic coefficient vector F(c).

    F_m = sum_{jkl} A[m, k, j, l] c~_j c_k c_l - ((S + T) c)_m; the energy
    gradient satisfies d/dc~ E = 2 F exactly.
    """
    c, single = _as_batch(coeffs)
    st = tensor.s_mat + tensor.t_mat
    if tensor.factor is not None:
        q = np.einsum("sj,jk,sk->s", np.conj(c), tensor.factor, c).real
        cubic = q[:, None] * (c @ tensor.factor)
    else:
        cubic = np.einsum("mkjl,sj,sk,sl->sm", tensor.a,
                          np.conj(c), c, c, optimize=True)
    out = cubic - c @ st
    return out[0] if single else out


# ---------------------------------------------------------------------------
# grid-space (tensor-free) routes


def grid_energy_context(basis, kspec):
    """Precompute covariance tables and kernel values for the grid routes."""
    from .field import covariance_diag, covariance_kernel
    kind, payload = kernel_node_values(kspec, basis.grid)
    return {
        "kind": kind,
        "payload": payload,
        "sigma": covariance_diag(basis),
        "sigma_kernel": covariance_kernel(basis),
        "weights": basis.grid.weights,
    }


def _pair_integral(ctx, f, g):
    """intint f(x) w(x, y) g(y) over the zonal measure (f, g node vectors)."""
    w = ctx["weights"]
    if ctx["kind"] == "constant":
        return ctx["payload"] * (f @ w) * (g @ w)
    if ctx["kind"] == "separable":
        v = ctx["payload"]
        return (f @ (w * v)) * (g @ (w * v))
    return (f * w) @ ctx["payload"] @ (g * w)


def interaction_energy_grid(basis, ctx, values):
    """Grid-space renormalized energy of one spinor state (K, 2).

    E = intint (q - sigma) w (q - sigma) - 2 Re intint w psi^+ Sigma psi
        + intint w sum_ab Sigma_ab^2,
    q = |psi|^2 pointwise; Sigma the mode-truncated covariance kernel.
    """
    psi = np.asarray(values)
    q = np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, 1]) ** 2
    centered = q - ctx["sigma"]
    direct = _pair_integral(ctx, centered, centered)
    sk = ctx["sigma_kernel"]
    cross = np.einsum("ia,ijab,jb->ij", np.conj(psi), sk, psi)
    trace_sq = np.einsum("ijab,ijab->ij", sk, sk)
    w = ctx["weights"]
    if ctx["kind"] == "constant":
        kappa = ctx["payload"]
        exch = kappa * np.einsum("i,ij,j->", w, cross, w)
        const = kappa * np.einsum("i,ij,j->", w, trace_sq, w)
    elif ctx["kind"] == "separable":
        v = ctx["payload"] * w
        exch = np.einsum("i,ij,j->", v, cross, v)
        const = np.einsum("i,ij,j->", v, trace_sq, v)
    else:
        wmat = ctx["payload"] * w[:, None] * w[None, :]
        exch = np.sum(wmat * cross)
        const = np.sum(wmat * trace_sq)
    return float(direct - 2.0 * exch.real + const)


def nonlinearity_grid(basis, ctx, values):
    """Grid-space renormalized cubic term, returned as grid values (K, 2).

    F(u)(x) = [int w(x, y)(q - sigma)(y) dy] u(x) - int w(x, y) Sigma(x, y) u(y) dy.
    """
    psi = np.asarray(values)
    q = np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, 1]) ** 2
    centered = q - ctx["sigma"]
    w = ctx["weights"]
    if ctx["kind"] == "constant":
        pot = ctx["payload"] * (centered @ w) * np.ones_like(q)
    elif ctx["kind"] == "separable":
        v = ctx["payload"]
        pot = v * ((centered * v) @ w)
    else:
        pot = ctx["payload"] @ (centered * w)
    sk = ctx["sigma_kernel"]
    if ctx["kind"] == "constant":
        exch = ctx["payload"] * np.einsum("ijab,j,jb->ia", sk, w, psi)
    elif ctx["kind"] == "separable":
        v = ctx["payload"]
        exch = np.einsum("i,ijab,j,jb->ia", v, sk, v * w, psi)
    else:
        wk = ctx["payload"] * w[None, :]
        exch = np.einsum("ij,ijab,jb->ia", wk, sk, psi)
    return pot[:, None] * psi - exch


# ---------------------------------------------------------------------------
# Wick algebra


def wick_energy_literal(tensor, g):
    """Integrated fourth Wick monomial on raw Gaussians, term by term.

    Builds the seven-term monomial :g~_j g_k g~_l g_m: as a dense rank-4
    array and contracts it against A / (lambda_j lambda_k lambda_l lambda_m).
    Oracle route: independent of the counterterm contractions.
    """
    g = np.asarray(g, dtype=complex)
    j = g.shape[0]
    if j != tensor.n_modes:
        raise ValueError("sample length does not match tensor cutoff")
    gc = np.conj(g)
    eye = np.eye(j)
    pair = np.outer(gc, g)
    mono = np.einsum("j,k,l,m->jklm", gc, g, gc, g)
    mono -= np.einsum("jk,lm->jklm", pair, eye)
    mono -= np.einsum("jk,lm->jklm", eye, pair)
    mono -= np.einsum("jm,kl->jklm", eye, np.outer(g, gc))
    mono -= np.einsum("kl,jm->jklm", eye, pair)
    mono += np.einsum("jk,lm->jklm", eye, eye)
    mono += np.einsum("jm,kl->jklm", eye, eye)
    il = 1.0 / tensor.lam
    scaled = tensor.a * il[:, None, None, None] * il[None, :, None, None] \
        * il[None, None, :, None] * il[None, None, None, :]
    val = np.sum(scaled * mono)
    return complex(val)


def wick_quartic_cov(idx, idx2):
    """Closed-form covariance of two fourth Wick monomials.

    E[:g~_j g_k g~_l g_m: conj(:g~_j' g_k' g~_l' g_m':)] =
        (d_jj' d_ll' + d_jl' d_lj') (d_kk' d_mm' + d_km' d_mk').
    idx and idx2 are arrays (..., 4) of integer mode indices.
    """
    j, k, l, m = (np.asarray(idx)[..., i] for i in range(4))
    j2, k2, l2, m2 = (np.asarray(idx2)[..., i] for i in range(4))
    bar = (((j == j2) & (l == l2)).astype(np.int64)
           + ((j == l2) & (l == j2)).astype(np.int64))
    unbar = (((k == k2) & (m == m2)).astype(np.int64)
             + ((k == m2) & (m == k2)).astype(np.int64))
    return bar * unbar


_SEVEN_TERMS = (
    # (sign, bar slots, unbar slots, delta pairs) over slots (j, k, l, m)
    (+1, (0, 2), (1, 3), ()),
    (-1, (0,), (1,), ((2, 3),)),
    (-1, (2,), (3,), ((0, 1),)),
    (-1, (2,), (1,), ((0, 3),)),
    (-1, (0,), (3,), ((1, 2),)),
    (+1, (), (), ((0, 1), (2, 3))),
    (+1, (), (), ((0, 3), (1, 2))),
)


def _sorted_multiset_moment(bars, unbars):
    """E[prod g~_(bars) prod g_(unbars)] for standard complex Gaussians.

    Zero unless the two index multisets agree; then the product of the
    multiplicity factorials.  bars/unbars are integer arrays (n, L).
    """
    n = bars.shape[0]
    if bars.shape[1] != unbars.shape[1]:
        return np.zeros(n, dtype=np.int64)
    if bars.shape[1] == 0:
        return np.ones(n, dtype=np.int64)
    a = np.sort(bars, axis=1)
    b = np.sort(unbars, axis=1)
    match = np.all(a == b, axis=1)
    perm = np.ones(n, dtype=np.int64)
    for i in range(1, a.shape[1]):
        # r_i = count of positions <= i holding the same value; the product
        # of the r_i over a sorted row is the multiplicity factorial product
        r = np.zeros(n, dtype=np.int64)
        for back in range(i + 1):
            r += (a[:, back] == a[:, i]).astype(np.int64)
        perm *= r
    return match.astype(np.int64) * perm


def wick_quartic_cov_enumerated(idx, idx2):
    """Same covariance by brute-force Isserlis enumeration.

    Expands both seven-term Wick monomials, multiplies term pairs, and
    evaluates each raw Gaussian moment by the multiset multiplicity rule.
    Vectorized over rows of idx/idx2 (shape (n, 4) each).
    """
    idx = np.atleast_2d(np.asarray(idx, dtype=np.int64))
    idx2 = np.atleast_2d(np.asarray(idx2, dtype=np.int64))
    n = idx.shape[0]
    total = np.zeros(n, dtype=np.int64)
    for s1, bars1, unbars1, deltas1 in _SEVEN_TERMS:
        mask1 = np.ones(n, dtype=bool)
        for p, q in deltas1:
            mask1 &= idx[:, p] == idx[:, q]
        for s2, bars2, unbars2, deltas2 in _SEVEN_TERMS:
            mask2 = np.ones(n, dtype=bool)
            for p, q in deltas2:
                mask2 &= idx2[:, p] == idx2[:, q]
            # conjugating the second monomial swaps its bars and unbars
            bars = np.concatenate(
                [idx[:, list(bars1)], idx2[:, list(unbars2)]], axis=1)
            unbars = np.concatenate(
                [idx[:, list(unbars1)], idx2[:, list(bars2)]], axis=1)
            moment = _sorted_multiset_moment(bars, unbars)
            total += s1 * s2 * moment * (mask1 & mask2)
    return total


# ---------------------------------------------------------------------------
# chaos tail series


def _abs_term_sum(a, il2):
    return float(np.einsum("jklm,jklm,j,k,l,m->", a, a, il2, il2, il2, il2,
                           optimize=True))


def _full_series(a, il2):
    # the two bar pairings times the two unbar pairings give the identity
    # permutation (squared term) plus these three index shuffles
    p1 = a.transpose(0, 3, 2, 1)
    p2 = a.transpose(2, 1, 0, 3)
    p3 = a.transpose(2, 3, 0, 1)
    cross = a * (p1 + p2 + p3)
    sq = float(np.einsum("jklm,jklm,j,k,l,m->", a, a, il2, il2, il2, il2,
                         optimize=True))
    cr = float(np.einsum("jklm,j,k,l,m->", cross, il2, il2, il2, il2,
                         optimize=True))
    return sq + cr


def chaos_tail_series(tensor, low_cutoff):
    """Exact E |G_N - G_M|^2 and its permutation bound, M = low_cutoff.

    The tail sum runs over index boxes [0, N]^4 minus [0, M]^4; evaluated as
    the difference of the two full-box sums.  Returns (exact, bound) with
    bound = 4 * sum |A|^2 / lambda-weights over the same set.
    """
    n_hi = tensor.n_modes
    n_lo = low_cutoff + 1
    if n_lo > n_hi:
        raise ValueError("low cutoff exceeds tensor cutoff")
    il2 = tensor.inv_lam2
    exact = _full_series(tensor.a, il2)
    bound = 4.0 * _abs_term_sum(tensor.a, il2)
    a_lo = tensor.a[:n_lo, :n_lo, :n_lo, :n_lo]
    exact -= _full_series(a_lo, il2[:n_lo])
    bound -= 4.0 * _abs_term_sum(a_lo, il2[:n_lo])
    return exact, bound
