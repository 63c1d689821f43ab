"""Starshaped hypersurfaces in R^{2n}, their Reeb dynamics, and the
graph-Hamiltonian correspondence over the unit sphere.

Conventions
-----------
Coordinates are interleaved (x_1, y_1, ..., x_n, y_n) and the complex
structure acts by J(x_j, y_j) = (-y_j, x_j).  The ambient contact form on a
starshaped hypersurface is alpha_x(v) = <v, Jx>/2, whose Reeb field is
R(x) = (2/<nu, x>) J nu with nu the unit exterior normal; on the unit sphere
this flow has period pi.

The graph side works in prequantization units: the rescaled form
abar = alpha/pi has Reeb field Rbar(x) = 2*pi*J x with 1-periodic flow, and
d(abar)(u, v) = <Ju, v>/pi on sphere tangent vectors.  A starshaped surface
centred at the origin with inner radius R1 corresponds to the graph function
f = (rho/R1)^2 with the unit conversion scale = pi*R1^2.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import RK45, solve_ivp
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from .radial_profile import RadialProfile

__all__ = [
    "AmbientSpace",
    "StarshapedSurface",
    "ReebOrbit",
    "GraphFunction",
    "FlowResult",
    "HamiltonianOrbit",
    "HypothesisError",
    "OffSurfaceError",
    "RADIAL_SIGN",
    "normal_at",
    "reeb_field",
    "flow",
    "hypothesis_margin",
    "pinch_radii",
    "sphere_directions",
    "v_f_field",
    "graph_hamiltonian_field",
    "reeb_on_graph",
    "orbit_correspondence",
    "hamiltonian_action",
    "integrate_hamiltonian_orbit",
    "radial_to_graph",
    "surface_to_json",
    "surface_from_json",
    "orbit_to_csv",
    "orbit_summary",
]

ON_SURFACE_TOL = 1e-9

# Radial sign in the graph Hamiltonian vector field.  With the conventions
# above the contraction identity i_X d(r*abar) = -d h_f forces +1; the module
# test suite pins this down through the contraction residual.
RADIAL_SIGN = +1.0


class HypothesisError(RuntimeError):
    """<nu(x), x> <= 0 encountered: the starshapedness hypothesis fails."""


class OffSurfaceError(ValueError):
    """A point handed to a surface operation does not lie on the surface."""


# ---------------------------------------------------------------------------
# ambient linear algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmbientSpace:
    """R^{2n} with the standard complex structure on interleaved coordinates."""

    n: int

    @property
    def dim(self) -> int:
        return 2 * self.n

    def J(self, v: np.ndarray) -> np.ndarray:
        """Apply J(x_j, y_j) = (-y_j, x_j) along the last axis."""
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        out[..., 0::2] = -v[..., 1::2]
        out[..., 1::2] = v[..., 0::2]
        return out

    def omega(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Standard symplectic form omega(u, v) = <Ju, v>."""
        return np.sum(self.J(u) * np.asarray(v, dtype=float), axis=-1)

    def alpha(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Ambient contact form alpha_x(v) = <v, Jx>/2."""
        return 0.5 * np.sum(np.asarray(v, dtype=float) * self.J(x), axis=-1)


# ---------------------------------------------------------------------------
# starshaped surfaces
# ---------------------------------------------------------------------------

# Smooth sphere functions used by the "radial_series" kind: each term is a
# coefficient times a product of coordinate monomials restricted to the
# sphere, psi(u) = prod_k u_{i_k}.
@dataclass(frozen=True)
class SeriesTerm:
    indices: tuple
    coef: float

    def value(self, u: np.ndarray) -> np.ndarray:
        out = np.ones(u.shape[:-1])
        for i in self.indices:
            out = out * u[..., i]
        return self.coef * out

    def grad(self, u: np.ndarray) -> np.ndarray:
        """Ambient gradient of the monomial (product rule over repeated indices)."""
        g = np.zeros_like(u)
        for k, i in enumerate(self.indices):
            part = np.ones(u.shape[:-1])
            for m, j in enumerate(self.indices):
                if m != k:
                    part = part * u[..., j]
            g[..., i] += part
        return self.coef * g


@dataclass(frozen=True)
class StarshapedSurface:
    """Hypersurface { x0 + rho(u) u : |u| = 1 } starshaped about x0.

    kind is one of "sphere" (params: R), "ellipsoid" (params: radii, one per
    complex coordinate), or "radial_series" (params: R and a list of
    SeriesTerm perturbations rho = R (1 + sum terms)).
    """

    space: AmbientSpace
    center: np.ndarray
    kind: str
    params: dict

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.kind not in ("sphere", "ellipsoid", "radial_series"):
            raise ValueError(f"unknown surface kind {self.kind!r}")
        if self.kind == "ellipsoid":
            radii = np.asarray(self.params["radii"], dtype=float)
            if radii.size != self.space.n:
                raise ValueError("ellipsoid needs one radius per complex coordinate")
            # per-real-coordinate semi-axes (each complex radius twice)
            object.__setattr__(self, "_axes", np.repeat(radii, 2))

    def rho(self, u: np.ndarray) -> np.ndarray:
        """Radial function on unit directions (vectorized over leading axes)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "sphere":
            return np.broadcast_to(float(self.params["R"]), u.shape[:-1]).copy()
        if self.kind == "ellipsoid":
            q = np.sum((u / self._axes) ** 2, axis=-1)
            return q ** -0.5
        val = np.ones(u.shape[:-1])
        for term in self.params["terms"]:
            val = val + term.value(u)
        return float(self.params["R"]) * val

    def rho_grad(self, u: np.ndarray) -> np.ndarray:
        """Ambient gradient of the defining formula of rho at unit directions."""
        u = np.asarray(u, dtype=float)
        if self.kind == "sphere":
            return np.zeros_like(u)
        if self.kind == "ellipsoid":
            q = np.sum((u / self._axes) ** 2, axis=-1)
            return -(q[..., None] ** -1.5) * (u / self._axes ** 2)
        g = np.zeros_like(u)
        for term in self.params["terms"]:
            g = g + term.grad(u)
        return float(self.params["R"]) * g

    # -- geometry helpers --------------------------------------------------

    def radial_residual(self, x: np.ndarray) -> np.ndarray:
        w = np.asarray(x, dtype=float) - self.center
        nr = np.linalg.norm(w, axis=-1)
        u = w / nr[..., None]
        return np.abs(nr - self.rho(u))

    def project(self, x: np.ndarray) -> np.ndarray:
        """Radially rescale x - x0 onto the surface."""
        w = np.asarray(x, dtype=float) - self.center
        nr = np.linalg.norm(w, axis=-1)
        u = w / nr[..., None]
        return self.center + self.rho(u)[..., None] * u

    def point(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u, axis=-1, keepdims=True)
        return self.center + self.rho(u)[..., None] * u

    def normals(self, x: np.ndarray) -> np.ndarray:
        """Unit exterior normals at on-surface points (no residual check)."""
        w = np.asarray(x, dtype=float) - self.center
        nr = np.linalg.norm(w, axis=-1)
        u = w / nr[..., None]
        g = self.rho_grad(u)
        # tangential part of the gradient of the 0-homogeneous extension
        gt = (g - np.sum(g * u, axis=-1)[..., None] * u) / nr[..., None]
        nu = u - gt
        return nu / np.linalg.norm(nu, axis=-1, keepdims=True)

    def reeb(self, x: np.ndarray) -> np.ndarray:
        """Batched Reeb field (2/<nu, x>) J nu; no hypothesis guard."""
        nu = self.normals(x)
        denom = np.sum(nu * np.asarray(x, dtype=float), axis=-1)
        return (2.0 / denom)[..., None] * self.space.J(nu)


def normal_at(surface: StarshapedSurface, x: np.ndarray) -> np.ndarray:
    """Unit exterior normal at an on-surface point."""
    res = float(surface.radial_residual(x))
    if res >= ON_SURFACE_TOL:
        raise OffSurfaceError(f"point off surface, radial residual {res:.3e}")
    return surface.normals(np.asarray(x, dtype=float))


def reeb_field(surface: StarshapedSurface, x: np.ndarray) -> np.ndarray:
    """Reeb vector field R(x) = (2/<nu(x), x>) J nu(x) of alpha on the surface."""
    x = np.asarray(x, dtype=float)
    nu = normal_at(surface, x)
    denom = float(np.dot(nu, x))
    if denom <= 0.0:
        raise HypothesisError(f"<nu, x> = {denom:.3e} <= 0 at {x}")
    return (2.0 / denom) * surface.space.J(nu)


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------

@dataclass
class FlowResult:
    t: np.ndarray          # accepted step times
    points: np.ndarray     # (len(t), 2n) on-surface samples
    action: float          # accumulated int alpha(xdot) dt
    radial_residual: float # final |r - rho| before the last projection

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]


def flow(surface: StarshapedSurface, x: np.ndarray, T: float,
         tol: float = 1e-10) -> FlowResult:
    """Integrate xdot = R(x) for time T with per-step radial re-projection.

    The action accumulator int alpha_x(xdot) dt rides along as an independent
    consistency signal (it must equal the elapsed time within tolerance).
    """
    x = np.asarray(x, dtype=float)
    res = float(surface.radial_residual(x))
    if res >= ON_SURFACE_TOL:
        raise OffSurfaceError(f"flow start off surface, residual {res:.3e}")
    space = surface.space

    def rhs(t, y):
        pt = y[:-1]
        nu = surface.normals(pt)
        denom = float(np.sum(nu * pt))
        if denom <= 0.0:
            raise HypothesisError(
                f"<nu, x> = {denom:.3e} <= 0 at t = {t:.6g}, x = {pt}")
        R = (2.0 / denom) * space.J(nu)
        return np.append(R, float(space.alpha(pt, R)))

    y0 = np.append(x, 0.0)
    stepper = RK45(rhs, 0.0, y0, t_bound=float(T), rtol=tol, atol=tol)
    ts = [0.0]
    pts = [x.copy()]
    last_res = 0.0
    while stepper.status == "running":
        stepper.step()
        pt = stepper.y[:-1]
        last_res = float(surface.radial_residual(pt))
        stepper.y[:-1] = surface.project(pt)
        ts.append(stepper.t)
        pts.append(stepper.y[:-1].copy())
    if stepper.status == "failed":
        raise RuntimeError("flow integration failed")
    return FlowResult(np.asarray(ts), np.asarray(pts),
                      float(stepper.y[-1]), last_res)


# ---------------------------------------------------------------------------
# sampling, hypothesis, pinching
# ---------------------------------------------------------------------------

def sphere_directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform directions: Sobol points through the
    Gaussian inverse CDF, normalized to the unit sphere."""
    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    pts = eng.random(1 << max(0, (count - 1).bit_length()))[:count]
    g = norm.ppf(np.clip(pts, 1e-12, 1.0 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def hypothesis_margin(surface: StarshapedSurface, R1: float,
                      sample_count: int = 4096, seed: int = 0) -> float:
    """min <nu(z), z - x0> - R1 over a quasi-uniform sample; positive
    certifies the period-bound hypothesis."""
    u = sphere_directions(surface.space.dim, sample_count, seed)
    z = surface.point(u)
    nu = surface.normals(z)
    return float(np.min(np.sum(nu * (z - surface.center), axis=-1)) - R1)


def pinch_radii(surface: StarshapedSurface, sample_count: int = 4096,
                seed: int = 0):
    """(R1, R2, ratio_ok): extremal radii |x - x0|, refined by local
    optimization from the best sampled directions; ratio_ok iff R2/R1 < sqrt 2."""
    u = sphere_directions(surface.space.dim, sample_count, seed)
    r = surface.rho(u)

    def refine(u0, sign):
        # rho on the 0-homogeneous extension; gradient available analytically
        def obj(v):
            nr = np.linalg.norm(v)
            u = v / nr
            g = surface.rho_grad(u)
            gt = (g - np.dot(g, u) * u) / nr
            return sign * float(surface.rho(u)), sign * gt
        res = minimize(obj, u0, jac=True, method="L-BFGS-B",
                       options={"gtol": 1e-14, "ftol": 1e-16, "maxiter": 500})
        return sign * res.fun

    R1 = min(float(np.min(r)), refine(u[np.argmin(r)], +1.0))
    R2 = max(float(np.max(r)), refine(u[np.argmax(r)], -1.0))
    return R1, R2, bool(R2 / R1 < math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Reeb orbits
# ---------------------------------------------------------------------------

@dataclass
class ReebOrbit:
    """A closed Reeb orbit given by ordered samples over one period."""

    points: np.ndarray
    period: float
    action: float
    closure_residual: float
    multiplicity: int = 1

    def resample(self, count: int) -> np.ndarray:
        """Uniform-in-index resample of the point loop (for set comparisons)."""
        idx = np.linspace(0, len(self.points) - 1, count).round().astype(int)
        return self.points[idx]


def orbit_to_csv(orbit: ReebOrbit, times: Optional[np.ndarray] = None) -> str:
    """CSV dump "t,x_1,...,x_2n" of the orbit samples."""
    n_cols = orbit.points.shape[1]
    if times is None:
        times = np.linspace(0.0, orbit.period, len(orbit.points))
    buf = io.StringIO()
    buf.write("t," + ",".join(f"x_{i + 1}" for i in range(n_cols)) + "\n")
    for t, p in zip(times, orbit.points):
        buf.write(",".join(repr(float(v)) for v in (t, *p)) + "\n")
    return buf.getvalue()


def orbit_summary(orbit: ReebOrbit) -> dict:
    return {
        "T": float(orbit.period),
        "action": float(orbit.action),
        "residual": float(orbit.closure_residual),
        "multiplicity": int(orbit.multiplicity),
    }


# ---------------------------------------------------------------------------
# graph functions over the unit sphere
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphFunction:
    """Function f on S^{2n-1} with values in [1, R0], given with the ambient
    gradient of a 0-homogeneous-extendable formula."""

    space: AmbientSpace
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    provenance: str = ""

    @classmethod
    def constant(cls, space: AmbientSpace, c: float,
                 provenance: str = "constant") -> "GraphFunction":
        return cls(space,
                   lambda u: np.broadcast_to(float(c), np.shape(u)[:-1]).copy(),
                   lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                   provenance)

    def df(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Differential along sphere tangent vectors (tangential gradient)."""
        x = np.asarray(x, dtype=float)
        g = self.grad(x)
        gt = g - np.sum(g * x, axis=-1)[..., None] * x
        return np.sum(gt * np.asarray(v, dtype=float), axis=-1)


def radial_to_graph(surface: StarshapedSurface):
    """Encode a centred starshaped surface as (GraphFunction, scale).

    f(u) = (rho(u)/R1)^2 has min 1, and scale = pi R1^2 converts graph-side
    (prequantization) action units back to ambient ones.
    """
    if np.any(surface.center != 0.0):
        raise ValueError("surface must be centred at the origin; recenter first")
    R1, _, _ = pinch_radii(surface)

    def value(u):
        return (surface.rho(u) / R1) ** 2

    def grad(u):
        return 2.0 * surface.rho(u)[..., None] * surface.rho_grad(u) / R1 ** 2

    f = GraphFunction(surface.space, value, grad,
                      provenance=f"radial_to_graph:{surface.kind}")
    return f, math.pi * R1 ** 2


# -- normalized sphere forms (prequantization units) -------------------------

def _rbar(space: AmbientSpace, x: np.ndarray) -> np.ndarray:
    """Reeb field of abar = alpha/pi on the unit sphere: 2 pi J x (1-periodic)."""
    return 2.0 * math.pi * space.J(x)


def _abar(space: AmbientSpace, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return space.alpha(x, v) / math.pi


def _xi_basis(space: AmbientSpace, x: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of xi_x = ker abar cap T_x S^{2n-1}:
    Gram-Schmidt of the coordinate basis projected off span{x, Jx}."""
    d = space.dim
    Jx = space.J(x)
    basis = []
    for i in range(d):
        v = np.zeros(d)
        v[i] = 1.0
        v = v - np.dot(v, x) * x - np.dot(v, Jx) * Jx
        for b in basis:
            v = v - np.dot(v, b) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            basis.append(v / nrm)
        if len(basis) == d - 2:
            break
    if len(basis) != d - 2:
        raise RuntimeError("failed to build a basis of the contact hyperplane")
    return np.asarray(basis)


def v_f_field(f: GraphFunction, x: np.ndarray) -> np.ndarray:
    """The xi_x-valued solution V_f of d(abar)(V_f, .) = df(Rbar) abar - df.

    Solved over a deterministic orthonormal basis e_i of xi_x, on which
    abar(e_i) = 0, so the right-hand side reduces to -df(e_i).
    """
    x = np.asarray(x, dtype=float)
    space = f.space
    basis = _xi_basis(space, x)
    m = len(basis)
    M = np.empty((m, m))
    for j in range(m):
        M[:, j] = space.omega(basis[j], basis) / math.pi
    rhs = -f.df(x, basis)
    try:
        coeffs = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:  # cannot occur for nondegenerate dalpha
        raise RuntimeError(f"singular contact-hyperplane system: {exc}")
    return coeffs @ basis


@dataclass
class GraphField:
    """Sphere/radial decomposition of a vector field along the graph picture."""

    reeb: np.ndarray    # component along Rbar
    xi: np.ndarray      # component in the contact hyperplane
    radial: float       # coefficient of d/dr

    @property
    def sphere(self) -> np.ndarray:
        return self.reeb + self.xi


def graph_hamiltonian_field(profile: RadialProfile, f: GraphFunction,
                            x: np.ndarray, r: float) -> GraphField:
    """Hamiltonian vector field of h_f(x, r) = h(r/f(x)) for d(r abar):

        X = (h'(r/f)/f^2) (f Rbar - V_f + r df(Rbar) d/dr).

    The radial sign is fixed by the contraction identity
    i_X d(r abar) = -d h_f.
    """
    if r <= 0.0:
        raise ValueError("radial coordinate must be positive")
    x = np.asarray(x, dtype=float)
    fv = float(f.value(x))
    hp = float(profile.dh(r / fv))
    V = v_f_field(f, x)
    Rb = _rbar(f.space, x)
    pref = hp / fv ** 2
    return GraphField(reeb=pref * fv * Rb, xi=-pref * V,
                      radial=pref * RADIAL_SIGN * r * float(f.df(x, Rb)))


def reeb_on_graph(f: GraphFunction, x: np.ndarray) -> GraphField:
    """Reeb field of alpha_f = f abar on the graph of f:

        R_f = (1/f) Rbar - (1/f^2) V_f + df(U) d/dr

    with U the sphere part; satisfies alpha_f(R_f) = 1.
    """
    x = np.asarray(x, dtype=float)
    fv = float(f.value(x))
    V = v_f_field(f, x)
    Rb = _rbar(f.space, x)
    U = Rb / fv - V / fv ** 2
    return GraphField(reeb=Rb / fv, xi=-V / fv ** 2,
                      radial=float(f.df(x, U)))


# ---------------------------------------------------------------------------
# orbits of the graph Hamiltonian and the correspondence lemma
# ---------------------------------------------------------------------------

@dataclass
class HamiltonianOrbit:
    """A 1-periodic orbit of X_{h_f}, sampled uniformly on [0, 1)."""

    x: np.ndarray            # (N, 2n) sphere part
    r: np.ndarray            # (N,) radial part
    closure_residual: float  # |(x, r)(1) - (x, r)(0)| from the integration

    @property
    def samples(self) -> int:
        return len(self.r)


def integrate_hamiltonian_orbit(profile: RadialProfile, f: GraphFunction,
                                x0: np.ndarray, c: float, n_samples: int = 256,
                                tol: float = 1e-12) -> HamiltonianOrbit:
    """Integrate X_{h_f} over [0, 1] from (x0, c f(x0)) and sample uniformly."""
    x0 = np.asarray(x0, dtype=float)
    x0 = x0 / np.linalg.norm(x0)
    r0 = c * float(f.value(x0))

    def rhs(t, y):
        pt = y[:-1]
        pt = pt / np.linalg.norm(pt)
        X = graph_hamiltonian_field(profile, f, pt, float(y[-1]))
        return np.append(X.sphere, X.radial)

    y0 = np.append(x0, r0)
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=tol, atol=tol,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"Hamiltonian orbit integration failed: {sol.message}")
    closure = float(np.linalg.norm(sol.y[:, -1] - y0))
    t = np.arange(n_samples) / n_samples
    Y = sol.sol(t).T
    x = Y[:, :-1]
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    return HamiltonianOrbit(x=x, r=Y[:, -1], closure_residual=closure)


def _fft_derivative(values: np.ndarray, period: float) -> np.ndarray:
    """Spectral derivative of uniformly sampled periodic data (axis 0)."""
    n = values.shape[0]
    k = np.fft.fftfreq(n, d=period / n)
    fac = 2j * math.pi * k
    return np.real(np.fft.ifft(fac[:, None] * np.fft.fft(values, axis=0), axis=0)
                   if values.ndim > 1 else
                   np.fft.ifft(fac * np.fft.fft(values)))


@dataclass
class CorrespondenceResult:
    c: float
    zeta: ReebOrbit
    reeb_residual: float
    rf_spread: float


def orbit_correspondence(profile: RadialProfile, f: GraphFunction,
                         gamma: HamiltonianOrbit,
                         rf_tol: float = 1e-6) -> CorrespondenceResult:
    """Turn a 1-periodic orbit of X_{h_f} into a Reeb orbit of alpha_f.

    Along such an orbit r(t) = c f(x(t)) for a constant c; the loop
    z(t) = x(t/h'(c)) traced on the graph of f is a closed Reeb orbit of
    period h'(c).  The returned residual max |zeta' - R_f(zeta)| certifies
    the reparametrization.
    """
    ratios = gamma.r / f.value(gamma.x)
    c = float(np.mean(ratios))
    spread = float(np.max(ratios) - np.min(ratios))
    if spread > rf_tol * max(1.0, abs(c)):
        raise ValueError(
            f"r/f spread {spread:.3e} exceeds tolerance: not a 1-periodic "
            "Hamiltonian orbit")
    T = float(profile.dh(c))
    fz = np.asarray(f.value(gamma.x), dtype=float)
    pts = np.column_stack([gamma.x, fz])
    zdot = _fft_derivative(pts, T)
    resid = 0.0
    for k in range(gamma.samples):
        Rf = reeb_on_graph(f, gamma.x[k])
        target = np.append(Rf.sphere, Rf.radial)
        resid = max(resid, float(np.linalg.norm(zdot[k] - target)))
    # action of the Reeb orbit: int alpha_f(zeta') dt = T in these units
    abar_dot = _abar(f.space, gamma.x, zdot[:, :-1])
    action = T * float(np.mean(fz * abar_dot))
    zeta = ReebOrbit(points=pts, period=T, action=action,
                     closure_residual=gamma.closure_residual)
    return CorrespondenceResult(c=c, zeta=zeta, reeb_residual=resid,
                                rf_spread=spread)


def hamiltonian_action(profile: RadialProfile, f: GraphFunction,
                       gamma: HamiltonianOrbit) -> float:
    """Quadrature of A_{h_f}(gamma) = int gamma^*(r abar) - int h_f dt.

    Agrees with the closed form c h'(c) - h(c) at the orbit level c.
    """
    xdot = _fft_derivative(gamma.x, 1.0)
    integrand = (gamma.r * _abar(f.space, gamma.x, xdot)
                 - profile.h(gamma.r / f.value(gamma.x)))
    return float(np.mean(integrand))


# ---------------------------------------------------------------------------
# JSON surface definitions
# ---------------------------------------------------------------------------

def surface_to_json(surface: StarshapedSurface) -> str:
    params = dict(surface.params)
    if surface.kind == "radial_series":
        params = {"R": params["R"],
                  "terms": [{"indices": list(t.indices), "coef": t.coef}
                            for t in params["terms"]]}
    doc = {"n": surface.space.n, "center": surface.center.tolist(),
           "kind": surface.kind, "params": params}
    return json.dumps(doc, indent=2)


def surface_from_json(text: str) -> StarshapedSurface:
    doc = json.loads(text)
    space = AmbientSpace(int(doc["n"]))
    params = doc["params"]
    if doc["kind"] == "radial_series":
        params = {"R": float(params["R"]),
                  "terms": [SeriesTerm(tuple(t["indices"]), float(t["coef"]))
                            for t in params["terms"]]}
    return StarshapedSurface(space, np.asarray(doc["center"], dtype=float),
                             doc["kind"], params)
