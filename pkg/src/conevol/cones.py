"""Cone descriptors and metric projections.

A cone is described by a small immutable dataclass; composite cones are
built with Product and Polar wrappers.  ``project`` maps a point to the
nearest point of the cone and reports squared norms of the projection
and the residual; the residual is simultaneously the projection onto the
polar cone, so one projection call prices both sides of the
decomposition x = proj_C(x) + proj_polar(x) with proj_C(x) orthogonal to
proj_polar(x).

Ambient points are plain float vectors (anything numpy can coerce).
Points of the semidefinite cone live in the isometric vector coordinates
produced by sym_to_vec, where off-diagonal entries carry a sqrt(2)
factor so that Euclidean norm equals Frobenius norm.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConeSpecError, DimensionMismatchError, UnsupportedConeError
from .linalg import jacobi_eigh_batch, nnls_solve, symmetric_eigen

MAX_AMBIENT_DIM = 10_000


def _check_dim(d, lo=1):
    if not isinstance(d, (int, np.integer)) or not lo <= d <= MAX_AMBIENT_DIM:
        raise ConeSpecError(f"dimension must be an integer in [{lo}, {MAX_AMBIENT_DIM}], got {d!r}")


@dataclass(frozen=True)
class Subspace:
    """Linear subspace spanned by the first ``dim`` coordinate axes."""
    dim: int
    ambient: int

    def __post_init__(self):
        _check_dim(self.ambient)
        if not isinstance(self.dim, (int, np.integer)) or not 0 <= self.dim <= self.ambient:
            raise ConeSpecError(f"subspace dimension must lie in [0, {self.ambient}], got {self.dim!r}")


@dataclass(frozen=True)
class Orthant:
    """Nonnegative orthant in R^d."""
    d: int

    def __post_init__(self):
        _check_dim(self.d)


@dataclass(frozen=True)
class Circular:
    """Circular cone {x : x_1 >= ||x|| cos(alpha)} with alpha in [0, pi/2]."""
    d: int
    alpha: float

    def __post_init__(self):
        _check_dim(self.d, lo=2)
        if not (isinstance(self.alpha, (int, float)) and 0.0 <= self.alpha <= math.pi / 2):
            raise ConeSpecError(f"alpha must lie in [0, pi/2], got {self.alpha!r}")
        object.__setattr__(self, "alpha", float(self.alpha))


def second_order_cone(d):
    """The cone {x : x_1 >= ||x_2..d||}, i.e. Circular(d, pi/4)."""
    return Circular(d, math.pi / 4)


@dataclass(frozen=True)
class Psd:
    """Positive semidefinite n x n matrices, in sym_to_vec coordinates."""
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConeSpecError(f"matrix order must be a positive integer, got {self.n!r}")
        _check_dim(self.n * (self.n + 1) // 2)


@dataclass(frozen=True)
class Trivial:
    """The cone containing only the origin of R^d."""
    d: int

    def __post_init__(self):
        _check_dim(self.d)


@dataclass(frozen=True, eq=False)
class Generators:
    """Finitely generated cone {sum tau_i g_i : tau >= 0}, rows = generators."""
    matrix: np.ndarray
    source: str = field(default="", compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ConeSpecError(f"generator matrix must be 2-D and nonempty, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ConeSpecError("generator matrix contains non-finite entries")
        row_norms = np.sqrt(np.sum(m * m, axis=1))
        if np.any(row_norms == 0.0):
            raise ConeSpecError("generator rows must be nonzero")
        if m.shape[0] > 1000:
            raise ConeSpecError("at most 1000 generators supported")
        _check_dim(m.shape[1])
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        return (isinstance(other, Generators)
                and self.matrix.shape == other.matrix.shape
                and bool(np.array_equal(self.matrix, other.matrix)))

    __hash__ = None


@dataclass(frozen=True)
class Product:
    """Direct product C1 x C2, coordinates of C1 first."""
    left: "Cone"
    right: "Cone"


@dataclass(frozen=True)
class Polar:
    """Polar cone {y : <x, y> <= 0 for all x in C}."""
    inner: "Cone"


Cone = (Subspace, Orthant, Circular, Psd, Trivial, Generators, Product, Polar)


def ambient_dim(cone):
    """Dimension of the space the cone lives in."""
    if isinstance(cone, Subspace):
        return cone.ambient
    if isinstance(cone, (Orthant, Trivial)):
        return cone.d
    if isinstance(cone, Circular):
        return cone.d
    if isinstance(cone, Psd):
        return cone.n * (cone.n + 1) // 2
    if isinstance(cone, Generators):
        return cone.matrix.shape[1]
    if isinstance(cone, Product):
        return ambient_dim(cone.left) + ambient_dim(cone.right)
    if isinstance(cone, Polar):
        return ambient_dim(cone.inner)
    raise UnsupportedConeError(f"not a cone descriptor: {cone!r}")


def supports_face_dim(cone):
    """True when per-sample face dimensions are defined (polyhedral variants)."""
    if isinstance(cone, (Subspace, Orthant, Trivial, Generators)):
        return True
    if isinstance(cone, Product):
        return supports_face_dim(cone.left) and supports_face_dim(cone.right)
    return False


# ---------------------------------------------------------------------------
# symmetric-matrix coordinates
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)


def _triu_indices(n):
    return np.triu_indices(n)


def sym_to_vec(s):
    """Isometric vectorization of a symmetric matrix (off-diagonals * sqrt2)."""
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    if s.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {s.shape}")
    iu, ju = _triu_indices(n)
    v = s[iu, ju].copy()
    v[iu != ju] *= _SQRT2
    return v


def vec_to_sym(v, n):
    """Inverse of sym_to_vec."""
    v = np.asarray(v, dtype=float)
    if v.shape != (n * (n + 1) // 2,):
        raise ValueError(f"expected length {n*(n+1)//2}, got {v.shape}")
    iu, ju = _triu_indices(n)
    s = np.zeros((n, n))
    off = iu != ju
    vals = v.copy()
    vals[off] /= _SQRT2
    s[iu, ju] = vals
    s[ju, iu] = vals
    return s


def _vec_to_sym_block(x, n):
    # (B, n(n+1)/2) -> (B, n, n)
    iu, ju = _triu_indices(n)
    off = iu != ju
    vals = x.copy()
    vals[:, off] /= _SQRT2
    s = np.zeros((x.shape[0], n, n))
    s[:, iu, ju] = vals
    s[:, ju, iu] = vals
    return s


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionOutcome:
    """Nearest point of the cone plus the complementary residual."""
    projection: np.ndarray
    residual: np.ndarray
    sq_norm_proj: float
    sq_norm_residual: float
    face_dim: int | None = None


def _zero_threshold(x_norm):
    # activity threshold shared by projectors and face counting
    return 1e-12 * (1.0 + x_norm)


def project(cone, x):
    """Metric projection of x onto the cone.

    Returns a ProjectionOutcome; face_dim is filled in for polyhedral
    variants (orthant, subspace, trivial, generators, and products of
    those) and left as None otherwise.
    """
    x = np.asarray(x, dtype=float)
    d = ambient_dim(cone)
    if x.shape != (d,):
        raise DimensionMismatchError(f"point has shape {x.shape}, cone lives in R^{d}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point contains non-finite coordinates")
    proj, fd = _project_vector(cone, x)
    resid = x - proj
    return ProjectionOutcome(
        projection=proj,
        residual=resid,
        sq_norm_proj=float(proj @ proj),
        sq_norm_residual=float(resid @ resid),
        face_dim=fd,
    )


def _project_vector(cone, x):
    if isinstance(cone, Subspace):
        proj = np.zeros_like(x)
        proj[:cone.dim] = x[:cone.dim]
        return proj, cone.dim
    if isinstance(cone, Orthant):
        proj = np.maximum(x, 0.0)
        nx = math.sqrt(float(x @ x))
        return proj, int(np.count_nonzero(proj > _zero_threshold(nx)))
    if isinstance(cone, Trivial):
        return np.zeros_like(x), 0
    if isinstance(cone, Circular):
        return _project_circular(cone, x), None
    if isinstance(cone, Psd):
        s = vec_to_sym(x, cone.n)
        s = 0.5 * (s + s.T)
        vals, vecs = symmetric_eigen(s)
        pos = np.maximum(vals, 0.0)
        proj = (vecs * pos) @ vecs.T
        return sym_to_vec(proj), None
    if isinstance(cone, Generators):
        tau = nnls_solve(cone.matrix, x)
        proj = cone.matrix.T @ tau
        return proj, _generator_face_dim(cone, x, tau)
    if isinstance(cone, Product):
        dl = ambient_dim(cone.left)
        pl, fl = _project_vector(cone.left, x[:dl])
        pr, fr = _project_vector(cone.right, x[dl:])
        fd = fl + fr if (fl is not None and fr is not None) else None
        return np.concatenate([pl, pr]), fd
    if isinstance(cone, Polar):
        inner_proj, _ = _project_vector(cone.inner, x)
        return x - inner_proj, None
    raise UnsupportedConeError(f"not a cone descriptor: {cone!r}")


def _project_circular(cone, x):
    ca, sa = math.cos(cone.alpha), math.sin(cone.alpha)
    x1 = x[0]
    z = x[1:]
    nrm = math.sqrt(float(x @ x))
    if x1 >= nrm * ca:
        return x.copy()
    if x1 <= -nrm * sa:
        return np.zeros_like(x)
    r = math.sqrt(float(z @ z))
    rho = x1 * ca + r * sa
    proj = np.empty_like(x)
    proj[0] = rho * ca
    proj[1:] = (rho * sa / r) * z
    return proj


def _generator_face_dim(cone, x, tau):
    nx = math.sqrt(float(x @ x))
    active = cone.matrix[tau > _zero_threshold(nx)]
    if active.shape[0] == 0:
        return 0
    gram = active @ active.T
    vals = jacobi_eigh_batch(gram[None])[0]
    top = float(vals[0])
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(vals > 1e-20 * top))


def face_dimension(cone, outcome):
    """Dimension of the face of the cone whose relative interior holds the
    projection recorded in ``outcome``.  Defined for polyhedral variants.
    """
    if isinstance(cone, Subspace):
        return cone.dim
    if isinstance(cone, Trivial):
        return 0
    if isinstance(cone, Orthant):
        nx = math.sqrt(outcome.sq_norm_proj + outcome.sq_norm_residual)
        return int(np.count_nonzero(outcome.projection > _zero_threshold(nx)))
    if isinstance(cone, Generators):
        x = outcome.projection + outcome.residual
        tau = nnls_solve(cone.matrix, x)
        return _generator_face_dim(cone, x, tau)
    if isinstance(cone, Product):
        dl = ambient_dim(cone.left)
        left = ProjectionOutcome(
            projection=outcome.projection[:dl],
            residual=outcome.residual[:dl],
            sq_norm_proj=float(outcome.projection[:dl] @ outcome.projection[:dl]),
            sq_norm_residual=float(outcome.residual[:dl] @ outcome.residual[:dl]),
        )
        right = ProjectionOutcome(
            projection=outcome.projection[dl:],
            residual=outcome.residual[dl:],
            sq_norm_proj=float(outcome.projection[dl:] @ outcome.projection[dl:]),
            sq_norm_residual=float(outcome.residual[dl:] @ outcome.residual[dl:]),
        )
        return face_dimension(cone.left, left) + face_dimension(cone.right, right)
    raise UnsupportedConeError(f"face dimensions are not defined for {type(cone).__name__}")


# ---------------------------------------------------------------------------
# vectorized norms for the sampling hot path
# ---------------------------------------------------------------------------

def norms_block(cone, X):
    """Squared projection / residual norms for a block of points.

    X has shape (B, d).  Returns (s, t, face_dims) where s[i] is
    ||proj_C(x_i)||^2, t[i] = ||x_i||^2 - s[i] is the squared distance to
    the cone, and face_dims is an int array or None when the variant has
    no face structure.  Matches project() sample by sample.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != ambient_dim(cone):
        raise DimensionMismatchError(f"block shape {X.shape} does not fit R^{ambient_dim(cone)}")
    return _norms_block(cone, X)


def _norms_block(cone, X):
    if isinstance(cone, Subspace):
        k = cone.dim
        s = np.einsum("ij,ij->i", X[:, :k], X[:, :k])
        t = np.einsum("ij,ij->i", X[:, k:], X[:, k:])
        return s, t, np.full(X.shape[0], k, dtype=np.int64)
    if isinstance(cone, Orthant):
        pos = np.maximum(X, 0.0)
        neg = X - pos
        s = np.einsum("ij,ij->i", pos, pos)
        t = np.einsum("ij,ij->i", neg, neg)
        thresh = _zero_threshold(np.sqrt(s + t))[:, None]
        fd = np.count_nonzero(pos > thresh, axis=1).astype(np.int64)
        return s, t, fd
    if isinstance(cone, Trivial):
        t = np.einsum("ij,ij->i", X, X)
        return np.zeros_like(t), t, np.zeros(X.shape[0], dtype=np.int64)
    if isinstance(cone, Circular):
        ca, sa = math.cos(cone.alpha), math.sin(cone.alpha)
        sq = np.einsum("ij,ij->i", X, X)
        nrm = np.sqrt(sq)
        x1 = X[:, 0]
        r = np.sqrt(np.maximum(sq - x1 * x1, 0.0))
        rho = x1 * ca + r * sa
        s = np.where(x1 >= nrm * ca, sq, np.where(x1 <= -nrm * sa, 0.0, rho * rho))
        return s, sq - s, None
    if isinstance(cone, Psd):
        mats = _vec_to_sym_block(X, cone.n)
        vals = jacobi_eigh_batch(mats)
        pos = np.maximum(vals, 0.0)
        neg = vals - pos
        return np.einsum("ij,ij->i", pos, pos), np.einsum("ij,ij->i", neg, neg), None
    if isinstance(cone, Generators):
        B = X.shape[0]
        s = np.empty(B)
        t = np.empty(B)
        fd = np.empty(B, dtype=np.int64)
        for i in range(B):
            tau = nnls_solve(cone.matrix, X[i])
            proj = cone.matrix.T @ tau
            resid = X[i] - proj
            s[i] = proj @ proj
            t[i] = resid @ resid
            fd[i] = _generator_face_dim(cone, X[i], tau)
        return s, t, fd
    if isinstance(cone, Product):
        dl = ambient_dim(cone.left)
        sl, tl, fl = _norms_block(cone.left, X[:, :dl])
        sr, tr, fr = _norms_block(cone.right, X[:, dl:])
        fd = fl + fr if (fl is not None and fr is not None) else None
        return sl + sr, tl + tr, fd
    if isinstance(cone, Polar):
        s, t, _ = _norms_block(cone.inner, X)
        return t, s, None
    raise UnsupportedConeError(f"not a cone descriptor: {cone!r}")


# ---------------------------------------------------------------------------
# generator matrices from disk
# ---------------------------------------------------------------------------

def load_generators(path):
    """Read a generator matrix from CSV: one generator per row, no header."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ConeSpecError(
                    f"{path}: row {lineno} has {len(cells)} columns, expected {width}")
            parsed = []
            for col, cell in enumerate(cells, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ConeSpecError(
                        f"{path}: row {lineno}, column {col}: not a number: {cell.strip()!r}") from None
            rows.append(parsed)
    if not rows:
        raise ConeSpecError(f"{path}: no generator rows found")
    return Generators(np.array(rows), source=str(path))
