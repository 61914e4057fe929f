"""Small-matrix Lie algebra arithmetic for su(n) and sl(n, C)."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

TOL = 1e-12

EPS3 = np.zeros((3, 3, 3))
EPS3[0, 1, 2] = EPS3[1, 2, 0] = EPS3[2, 0, 1] = 1.0
EPS3[0, 2, 1] = EPS3[2, 1, 0] = EPS3[1, 0, 2] = -1.0

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


@dataclass(frozen=True, eq=False)
class LieElement:
    """An n×n complex matrix tagged as an element of su(n) or sl(n, C)."""

    entries: np.ndarray
    algebra_tag: str = "su_n"

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if self.algebra_tag not in ("su_n", "sl_n_c"):
            raise ValueError(f"unknown algebra tag {self.algebra_tag!r}")
        if abs(np.trace(m)) > TOL:
            raise ValueError("Lie algebra elements must be traceless")
        if self.algebra_tag == "su_n" and np.linalg.norm(m + m.conj().T) > TOL:
            raise ValueError("su(n) elements must be anti-Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __add__(self, other):
        return LieElement(self.entries + _raw(other), _join_tags(self, other))

    def __sub__(self, other):
        return LieElement(self.entries - _raw(other), _join_tags(self, other))

    def __mul__(self, c):
        tag = self.algebra_tag if np.isreal(c) else "sl_n_c"
        return LieElement(c * self.entries, tag)

    __rmul__ = __mul__

    def __neg__(self):
        return LieElement(-self.entries, self.algebra_tag)


def _raw(x):
    return x.entries if isinstance(x, LieElement) else np.asarray(x)


def _join_tags(*xs):
    tags = {x.algebra_tag for x in xs if isinstance(x, LieElement)}
    return "su_n" if tags == {"su_n"} else "sl_n_c"


def _check_dims(X, Y):
    if X.shape[-2:] != Y.shape[-2:]:
        raise ValueError(f"dimension mismatch: {X.shape[-2:]} vs {Y.shape[-2:]}")


def bracket(X, Y):
    """Commutator ``XY − YX``.

    Accepts :class:`LieElement` or arrays of matrices (broadcast over leading
    axes); the result has the same kind as the inputs.
    """
    x, y = _raw(X), _raw(Y)
    _check_dims(x, y)
    c = x @ y - y @ x
    if isinstance(X, LieElement) and isinstance(Y, LieElement):
        return LieElement(c, _join_tags(X, Y))
    return c


def inner(X, Y):
    """Trace form ``−Re Tr(XY)``; positive definite on su(n)."""
    x, y = _raw(X), _raw(Y)
    _check_dims(x, y)
    return -np.real(np.einsum("...ij,...ji->...", x, y))


def frob(X):
    return np.linalg.norm(_raw(X), axis=(-2, -1))


@dataclass(frozen=True)
class PrincipalTriple:
    """Images ``t_1, t_2, t_3`` of the standard su(2) generators."""

    t1: LieElement
    t2: LieElement
    t3: LieElement

    @property
    def n(self):
        return self.t1.n

    def __iter__(self):
        return iter((self.t1, self.t2, self.t3))

    def __getitem__(self, a):
        return (self.t1, self.t2, self.t3)[a]

    def array(self):
        """The triple stacked as an array of shape ``(3, n, n)``."""
        return np.stack([t.entries for t in self])

    def conjugate(self, g):
        """Triple ``g⁻¹ t_a g`` for an invertible matrix ``g``."""
        gi = np.linalg.inv(g)
        return PrincipalTriple(*(LieElement(gi @ t.entries @ g) for t in self))

    @property
    def is_nonvanishing(self):
        return all(frob(t) > TOL for t in self)


@dataclass(frozen=True)
class Dreibein:
    """The adjoint-valued coframe ``e = Σ_a t_a e*_a``.

    ``coframe_labels`` names the orthonormal coframe slots that pair with
    ``t_1, t_2, t_3``.
    """

    triple: PrincipalTriple
    coframe_labels: tuple = ("dx1", "dx2", "dx3")

    def __post_init__(self):
        if len(self.coframe_labels) != 3:
            raise ValueError("a dreibein needs exactly 3 coframe slots")
        if not self.triple.is_nonvanishing:
            raise ValueError("dreibein generators must be nonvanishing")

    def components(self):
        return dict(zip(self.coframe_labels, self.triple))


def spin_matrices(n):
    """Angular momentum matrices ``(J_x, J_y, J_z)`` for spin ``(n−1)/2``."""
    j = (n - 1) / 2
    m = j - np.arange(n)
    jz = np.diag(m).astype(complex)
    # J_+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, basis ordered m = j, j-1, ..., -j
    jp = np.zeros((n, n), dtype=complex)
    for col in range(1, n):
        mm = m[col]
        jp[col - 1, col] = np.sqrt(j * (j + 1) - mm * (mm + 1))
    jm = jp.conj().T
    return (jp + jm) / 2, (jp - jm) / 2j, jz


@lru_cache(maxsize=None)
def _principal_triple(n):
    return PrincipalTriple(*(LieElement(-1j * J) for J in spin_matrices(n)))


def principal_triple(n):
    """Principal su(2) triple in su(n), normalized so ``[t_1, t_2] = t_3``.

    Built as ``t_a = −i J_a`` from the spin-(n−1)/2 ladder construction; for
    ``n = 2`` this is ``t_a = −(i/2) σ_a``.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"principal embedding needs integer n >= 2, got {n}")
    return _principal_triple(int(n))


def check_triple(t):
    """Largest ``‖[t_a, t_b] − ε_abc t_c‖_F`` over all ordered pairs."""
    ts = np.stack([_raw(x) for x in t])
    worst = 0.0
    for a in range(3):
        for b in range(3):
            target = np.einsum("c,cij->ij", EPS3[a, b], ts)
            worst = max(worst, float(frob(ts[a] @ ts[b] - ts[b] @ ts[a] - target)))
    return worst


def casimir(t):
    """``Σ_a inner(t_a, t_a)``."""
    return float(sum(inner(x, x) for x in t))


@lru_cache(maxsize=None)
def su_basis(n):
    """Basis of su(n) with ``−Tr(T_a T_b) = δ_ab / 2``.

    Generalized Gell-Mann matrices times ``−i/2``; for ``n = 2`` this is the
    principal triple ``−(i/2) σ_a``.
    """
    mats = []
    for j in range(n):
        for k in range(j + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((n, n), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            mats.extend([s, a])
    for l in range(1, n):
        dgl = np.zeros(n)
        dgl[:l] = 1
        dgl[l] = -l
        mats.append(np.diag(dgl * np.sqrt(2 / (l * (l + 1)))).astype(complex))
    out = -0.5j * np.stack(mats)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def structure_constants(n):
    """``f[a, b, c]`` with ``[T_a, T_b] = Σ_c f_abc T_c`` in :func:`su_basis`."""
    T = su_basis(n)
    comm = np.einsum("aij,bjk->abik", T, T) - np.einsum("bij,ajk->abik", T, T)
    f = 2 * inner(comm[:, :, None], T[None, None])
    f[np.abs(f) < 1e-14] = 0.0
    f.setflags(write=False)
    return f


def to_adjoint(X):
    """Real coordinates of su(n)-valued arrays in :func:`su_basis`."""
    x = np.asarray(X)
    T = su_basis(x.shape[-1])
    return 2 * inner(x[..., None, :, :], T)


def from_adjoint(v, n):
    return np.tensordot(np.asarray(v), su_basis(n), axes=([-1], [0]))


def random_su(n, size=(), rng=None):
    """Random su(n) matrices with standard normal adjoint coordinates."""
    rng = np.random.default_rng(rng)
    size = (size,) if np.isscalar(size) else tuple(size)
    return from_adjoint(rng.standard_normal(size + (n * n - 1,)), n)


def random_unitary(n, rng=None):
    """Haar-random element of SU(n)."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q / np.linalg.det(q) ** (1 / n)


def exp_su(X):
    return expm(_raw(X))
