"""The *-algebra spanned by the transitions of a finite groupoid."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .groupoid import FiniteGroupoid
from .lagrangian import QLagrangian

DENSITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Finite formal combination of transitions; absent coefficients are zero."""

    groupoid: FiniteGroupoid
    coefficients: Mapping[str, complex]

    def __post_init__(self):
        unknown = set(self.coefficients) - set(self.groupoid.elements)
        if unknown:
            raise ValueError(f"coefficients for unknown elements {sorted(unknown)}")
        object.__setattr__(self, "coefficients", MappingProxyType(dict(self.coefficients)))

    def __getitem__(self, element: str):
        return self.coefficients.get(element, 0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if self.groupoid != other.groupoid:
            return False
        keys = set(self.coefficients) | set(other.coefficients)
        return all(self[k] == other[k] for k in keys)

    def __hash__(self):
        return hash(self.groupoid)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check_same(other)
        coeffs = dict(self.coefficients)
        for k, v in other.coefficients.items():
            coeffs[k] = coeffs.get(k, 0) + v
        return AlgebraElement(self.groupoid, coeffs)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check_same(other)
        coeffs = dict(self.coefficients)
        for k, v in other.coefficients.items():
            coeffs[k] = coeffs.get(k, 0) - v
        return AlgebraElement(self.groupoid, coeffs)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return convolve(self, other)
        return AlgebraElement(self.groupoid, {k: v * other for k, v in self.coefficients.items()})

    def __rmul__(self, scalar):
        return AlgebraElement(self.groupoid, {k: scalar * v for k, v in self.coefficients.items()})

    def __neg__(self):
        return AlgebraElement(self.groupoid, {k: -v for k, v in self.coefficients.items()})

    def _check_same(self, other: "AlgebraElement") -> None:
        if self.groupoid != other.groupoid:
            raise ValueError("elements live over different groupoids")


def delta(g: FiniteGroupoid, element: str, coefficient: complex = 1) -> AlgebraElement:
    """Basis element: coefficient on a single transition."""
    if element not in g.source:
        raise ValueError(f"unknown element {element!r}")
    return AlgebraElement(g, {element: coefficient})


def algebra_unit(g: FiniteGroupoid) -> AlgebraElement:
    """Sum of all unit transitions; the multiplicative identity."""
    return AlgebraElement(g, {g.unit_of[o]: 1 for o in g.outcomes})


def convolve(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Product (a·b)_gamma = sum of a_beta b_alpha over beta ∘ alpha = gamma."""
    a._check_same(b)
    g = a.groupoid
    out: dict[str, complex] = {}
    for beta, ca in a.coefficients.items():
        for alpha, cb in b.coefficients.items():
            gamma = g.compose_table.get((beta, alpha))
            if gamma is None:
                continue
            out[gamma] = out.get(gamma, 0) + ca * cb
    return AlgebraElement(g, out)


def involute(a: AlgebraElement) -> AlgebraElement:
    """Adjoint: conjugate coefficients transported to the inverse transitions."""
    g = a.groupoid
    return AlgebraElement(g, {g.inverse[k]: v.conjugate() for k, v in a.coefficients.items()})


def is_observable(a: AlgebraElement, tol: float = 1e-10) -> bool:
    """True when a equals its adjoint within tol, coefficientwise."""
    adj = involute(a)
    keys = set(a.coefficients) | set(adj.coefficients)
    return all(abs(a[k] - adj[k]) <= tol for k in keys)


def lagrangian_element(ell: QLagrangian) -> AlgebraElement:
    """Embed a transition weight function as an algebra element."""
    return AlgebraElement(ell.groupoid, dict(ell.values))


def fundamental_rep(a: AlgebraElement) -> np.ndarray:
    """Matrix on the outcome basis: entry [target, source] sums the coefficients.

    Rows and columns follow the groupoid's declared outcome order.
    """
    g = a.groupoid
    idx = {o: i for i, o in enumerate(g.outcomes)}
    m = np.zeros((len(g.outcomes), len(g.outcomes)), dtype=complex)
    for el, c in a.coefficients.items():
        m[idx[g.target[el]], idx[g.source[el]]] += c
    return m


def element_from_matrix(g: FiniteGroupoid, matrix: np.ndarray, tol: float = 1e-12) -> AlgebraElement:
    """Invert fundamental_rep where that is possible.

    Requires at most one transition per ordered outcome pair; entries at pairs
    with no transition must vanish within tol (relative to the matrix norm).
    """
    matrix = np.asarray(matrix, dtype=complex)
    n = len(g.outcomes)
    if matrix.shape != (n, n):
        raise ValueError(f"matrix shape {matrix.shape} does not match {n} outcomes")
    by_pair: dict[tuple[str, str], str] = {}
    for e in g.elements:
        key = (g.target[e], g.source[e])
        if key in by_pair:
            raise ValueError(
                "fundamental representation is not injective for this groupoid: "
                f"both {by_pair[key]} and {e} map {key[1]} -> {key[0]}"
            )
        by_pair[key] = e
    scale = max(1.0, float(np.max(np.abs(matrix))))
    idx = {o: i for i, o in enumerate(g.outcomes)}
    coeffs: dict[str, complex] = {}
    for bt in g.outcomes:
        for bs in g.outcomes:
            entry = matrix[idx[bt], idx[bs]]
            el = by_pair.get((bt, bs))
            if el is not None:
                coeffs[el] = complex(entry)
            elif abs(entry) > tol * scale:
                raise ValueError(
                    f"matrix entry at ({bt}, {bs}) = {entry} has no transition to carry it"
                )
    return AlgebraElement(g, coeffs)


def operator_norm(a: AlgebraElement) -> float:
    """Largest singular value of the fundamental representation."""
    return float(np.linalg.norm(fundamental_rep(a), 2))


def commutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return convolve(a, b) - convolve(b, a)


def heisenberg_rhs(a: AlgebraElement, h: AlgebraElement, hbar: float, tol: float = 1e-10) -> AlgebraElement:
    """Right-hand side i*hbar*[a, h] of the printed evolution equation.

    Kept verbatim; see evolve_observable for the automorphism flow whose
    derivative is (i/hbar)[h, a].
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if not is_observable(h, tol):
        raise ValueError("generator h is not self-adjoint")
    return (1j * hbar) * commutator(a, h)


def evolve_observable(
    a: AlgebraElement, h: AlgebraElement, t: float, hbar: float, tol: float = 1e-10
) -> AlgebraElement:
    """Conjugate the representation of a by exp((i t / hbar) rep(h)) and pull back."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if not is_observable(h, tol):
        raise ValueError("generator h is not self-adjoint")
    g = a.groupoid
    hm = fundamental_rep(h)
    # h self-adjoint makes hm Hermitian, so the exponential comes from an
    # eigendecomposition and the flow is exactly unitary.
    evals, vecs = np.linalg.eigh(hm)
    phases = np.exp(1j * t / hbar * evals)
    flow = (vecs * phases) @ vecs.conj().T
    moved = flow @ fundamental_rep(a) @ flow.conj().T
    return element_from_matrix(g, moved, tol=1e-9)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state amplitudes in the groupoid's outcome order."""

    amplitudes: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", tuple(complex(z) for z in self.amplitudes))

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.amplitudes == other.amplitudes

    def norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.amplitudes)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.amplitudes, dtype=complex)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semi-definite, unit-trace matrix on the outcome basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > DENSITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if evals.min() < -DENSITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
        if abs(np.trace(m) - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix trace is {np.trace(m)}, expected 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def state_expectation(state: StateVector | DensityMatrix, a: AlgebraElement) -> complex:
    """Expectation of a in a pure or mixed state over the outcome basis."""
    m = fundamental_rep(a)
    if isinstance(state, StateVector):
        psi = state.as_array()
        if psi.shape != (m.shape[0],):
            raise ValueError(f"state has {psi.shape[0]} amplitudes, groupoid has {m.shape[0]} outcomes")
        norm_sq = float(np.real(np.vdot(psi, psi)))
        if norm_sq == 0.0:
            raise ValueError("pure state must have nonzero norm")
        return complex(np.vdot(psi, m @ psi) / norm_sq)
    if isinstance(state, DensityMatrix):
        if state.matrix.shape != m.shape:
            raise ValueError("density matrix shape does not match the outcome count")
        return complex(np.trace(state.matrix @ m))
    raise TypeError(f"unsupported state type {type(state).__name__}")


def element_to_lines(a: AlgebraElement) -> str:
    """Serialize as one 'NAME = re,im' line per element, in element order."""
    lines = []
    for e in a.groupoid.elements:
        c = complex(a[e])
        lines.append(f"{e} = {c.real:.17g},{c.imag:.17g}")
    return "\n".join(lines) + "\n"


def element_from_lines(g: FiniteGroupoid, text: str) -> AlgebraElement:
    """Parse the 'NAME = re,im' serialization produced by element_to_lines."""
    coeffs: dict[str, complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'NAME = re,im'")
        name = name.strip()
        if name not in g.source:
            raise ValueError(f"line {lineno}: unknown element {name!r}")
        parts = value.strip().split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two comma-separated reals")
        try:
            coeffs[name] = complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return AlgebraElement(g, coeffs)
