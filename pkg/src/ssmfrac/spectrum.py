"""Linear analysis at a hyperbolic fixed point.

Partitions the spectrum of a real matrix into master/slaved blocks relative
to a chosen spectral subspace, checks nonresonance, predicts the smoothness
class of the generic invariant-manifold family, and runs the pseudo-unstable
subspace test.

Conventions
-----------
* Flows compare eigenvalue real parts against zero; maps compare moduli
  against one.
* Complex eigenvalues are stored as (real, imag) pairs with positive
  imaginary part; conjugates are implicit.
* Within each block entries are sorted by |Re| (flow) or |log modulus| (map),
  ascending, so the "slowest" entry comes first.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DefectiveMatrix, InputError, NonInvariantSplit, NotHyperbolic

# hyperbolicity margins (relative to ||A|| for flows, absolute for maps)
FLOW_HYPERBOLICITY_RTOL = 1e-10
MAP_HYPERBOLICITY_TOL = 1e-10
# resonance equality tolerance, and the 1:1 dedup tolerance
RESONANCE_TOL = 1e-9
# eigenvector matrix condition number beyond which we refuse to proceed
DEFECTIVE_COND = 1e8


@dataclass(frozen=True)
class SpectralPartition:
    """Real-Jordan partition of a hyperbolic spectrum.

    p master reals ``lam``, q master complex pairs ``alpha_omega`` as
    (alpha, omega), r slaved reals ``kappa``, s slaved complex pairs
    ``beta_nu`` as (beta, nu). ``kind`` is "flow" or "map".
    """

    kind: str
    lam: tuple = ()
    alpha_omega: tuple = ()
    kappa: tuple = ()
    beta_nu: tuple = ()

    def __post_init__(self):
        if self.kind not in ("flow", "map"):
            raise InputError(f"kind must be 'flow' or 'map', got {self.kind!r}")
        rate = self._rate
        object.__setattr__(self, "lam",
                           tuple(sorted((float(x) for x in self.lam),
                                        key=lambda v: abs(rate(complex(v))))))
        object.__setattr__(self, "alpha_omega",
                           tuple(sorted(((float(a), abs(float(w))) for a, w in self.alpha_omega),
                                        key=lambda p: abs(rate(complex(p[0], p[1]))))))
        object.__setattr__(self, "kappa",
                           tuple(sorted((float(x) for x in self.kappa),
                                        key=lambda v: abs(rate(complex(v))))))
        object.__setattr__(self, "beta_nu",
                           tuple(sorted(((float(b), abs(float(n))) for b, n in self.beta_nu),
                                        key=lambda p: abs(rate(complex(p[0], p[1]))))))

    # -- shape ---------------------------------------------------------------

    @property
    def p(self):
        return len(self.lam)

    @property
    def q(self):
        return len(self.alpha_omega)

    @property
    def r(self):
        return len(self.kappa)

    @property
    def s(self):
        return len(self.beta_nu)

    @property
    def n(self):
        return self.p + 2 * self.q + self.r + 2 * self.s

    # -- eigenvalue access ---------------------------------------------------

    def _rate(self, z: complex) -> float:
        """Decay/growth rate entering every exponent ratio: Re for flows,
        log-modulus for maps."""
        if self.kind == "flow":
            return z.real
        mod = abs(z)
        return math.log(mod) if mod > 0 else -math.inf

    def master_eigenvalues(self, conjugates=False):
        vals = [complex(x) for x in self.lam]
        vals += [complex(a, w) for a, w in self.alpha_omega]
        if conjugates:
            vals += [complex(a, -w) for a, w in self.alpha_omega]
        return vals

    def slaved_eigenvalues(self, conjugates=False):
        vals = [complex(x) for x in self.kappa]
        vals += [complex(b, nu) for b, nu in self.beta_nu]
        if conjugates:
            vals += [complex(b, -nu) for b, nu in self.beta_nu]
        return vals

    def all_eigenvalues(self, conjugates=True):
        return (self.master_eigenvalues(conjugates)
                + self.slaved_eigenvalues(conjugates))

    # master decay rates (denominators of the spectral quotients)
    def master_rates(self):
        return [self._rate(z) for z in self.master_eigenvalues()]

    def slaved_rates(self):
        return [self._rate(z) for z in self.slaved_eigenvalues()]

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "kind": self.kind,
            "p": self.p, "q": self.q, "r": self.r, "s": self.s,
            "lambda": list(self.lam),
            "alpha_omega": [list(p) for p in self.alpha_omega],
            "kappa": list(self.kappa),
            "beta_nu": [list(p) for p in self.beta_nu],
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"],
                   lam=tuple(d.get("lambda", ())),
                   alpha_omega=tuple(tuple(p) for p in d.get("alpha_omega", ())),
                   kappa=tuple(d.get("kappa", ())),
                   beta_nu=tuple(tuple(p) for p in d.get("beta_nu", ())))

    @classmethod
    def from_json(cls, source):
        if isinstance(source, str) and source.lstrip().startswith("{"):
            return cls.from_dict(json.loads(source))
        with open(source) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_map_logs(cls, master_logs, slaved_logs):
        """Map-kind partition from log-moduli of real positive eigenvalues.

        Convenience for tabulated data given as log eigenvalues.
        """
        return cls(kind="map",
                   lam=tuple(math.exp(v) for v in master_logs),
                   kappa=tuple(math.exp(v) for v in slaved_logs))


# ---------------------------------------------------------------------------
# master selectors
# ---------------------------------------------------------------------------

def slowest(n_dims, kind="flow"):
    """Selector keeping the n_dims slowest real dimensions (a conjugate pair
    counts as two)."""
    def select(eigs):
        rate = (lambda z: abs(z.real)) if kind == "flow" \
            else (lambda z: abs(math.log(abs(z))))
        order = sorted(range(len(eigs)), key=lambda i: (rate(eigs[i]), abs(eigs[i].imag)))
        mask = np.zeros(len(eigs), dtype=bool)
        taken = 0
        for i in order:
            if mask[i]:
                continue
            if abs(eigs[i].imag) > 0:
                # take the conjugate partner along
                j = int(np.argmin(np.abs(eigs - np.conj(eigs[i]))))
                if taken + 2 > n_dims:
                    continue
                mask[i] = mask[j] = True
                taken += 2
            else:
                if taken + 1 > n_dims:
                    continue
                mask[i] = True
                taken += 1
            if taken == n_dims:
                break
        if taken != n_dims:
            raise InputError(f"cannot select {n_dims} dimensions from spectrum")
        return mask
    return select


def select_where(pred):
    """Selector from a per-eigenvalue predicate on complex eigenvalues."""
    def select(eigs):
        return np.array([bool(pred(z)) for z in eigs])
    return select


# ---------------------------------------------------------------------------
# partitioning
# ---------------------------------------------------------------------------

def partition_spectrum(A, master_selector, kind="flow"):
    """Split the spectrum of a real matrix into master and slaved blocks.

    Parameters
    ----------
    A : (n, n) array_like, real
    master_selector : callable(eigs: complex ndarray) -> boolean mask
        The selected set must be closed under conjugation.
    kind : "flow" | "map"
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("A must be a square matrix")
    eigs, vecs = np.linalg.eig(A)
    cond = np.linalg.cond(vecs)
    if cond > DEFECTIVE_COND:
        raise DefectiveMatrix(
            f"eigenvector condition number {cond:.3g} exceeds {DEFECTIVE_COND:.0e}")

    scale = max(np.linalg.norm(A, 2), 1e-300)
    if kind == "flow":
        bad = np.abs(eigs.real) <= FLOW_HYPERBOLICITY_RTOL * scale
    elif kind == "map":
        bad = np.abs(np.abs(eigs) - 1.0) <= MAP_HYPERBOLICITY_TOL
    else:
        raise InputError(f"unknown kind {kind!r}")
    if np.any(bad):
        raise NotHyperbolic(f"eigenvalues on the critical set: {eigs[bad]}")

    mask = np.asarray(master_selector(eigs), dtype=bool)
    if mask.shape != eigs.shape:
        raise InputError("master selector returned a mask of wrong length")

    # conjugate closure of the selection
    imag_tol = 1e-10 * scale
    for i, z in enumerate(eigs):
        if abs(z.imag) > imag_tol:
            j = int(np.argmin(np.abs(eigs - np.conj(z))))
            if mask[i] != mask[j]:
                raise InputError("master selection is not closed under conjugation")

    def collect(sel):
        reals, pairs = [], []
        used = np.zeros(len(eigs), dtype=bool)
        for i, z in enumerate(eigs):
            if not sel[i] or used[i]:
                continue
            if abs(z.imag) <= imag_tol:
                reals.append(z.real)
                used[i] = True
            elif z.imag > 0:
                j = int(np.argmin(np.abs(eigs - np.conj(z))))
                pairs.append((z.real, z.imag))
                used[i] = used[j] = True
        return reals, pairs

    lam, alpha_omega = collect(mask)
    kappa, beta_nu = collect(~mask)
    return SpectralPartition(kind=kind, lam=tuple(lam),
                             alpha_omega=tuple(alpha_omega),
                             kappa=tuple(kappa), beta_nu=tuple(beta_nu))


# ---------------------------------------------------------------------------
# nonresonance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceReport:
    resonant: bool
    violations: tuple          # of (j, multi_index) into `eigenvalues`
    checked_order: int
    eigenvalues: tuple = ()    # deduplicated list the indices refer to


def _dedupe(eigs, tol=RESONANCE_TOL):
    out = []
    for z in eigs:
        if not any(abs(z - w) <= tol * max(1.0, abs(w)) for w in out):
            out.append(z)
    return out


def check_nonresonance(spec: SpectralPartition, max_order: int) -> ResonanceReport:
    """Exhaustive resonance scan up to the requested order.

    Flows test lambda_j = sum_k m_k lambda_k, maps test
    lambda_j = prod_k lambda_k^{m_k}, for 2 <= sum m_k <= max_order.
    Repeated (1:1) eigenvalues are deduplicated first, per the usual
    exemption.
    """
    if max_order < 2:
        raise InputError("max_order must be >= 2")
    eigs = _dedupe(spec.all_eigenvalues(conjugates=True))
    d = len(eigs)
    violations = []
    for total in range(2, max_order + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            m = [0] * d
            for i in combo:
                m[i] += 1
            if spec.kind == "flow":
                val = sum(mi * eigs[i] for i, mi in enumerate(m))
                for j in range(d):
                    if abs(eigs[j] - val) <= RESONANCE_TOL:
                        violations.append((j, tuple(m)))
            else:
                val = np.prod([eigs[i] ** mi for i, mi in enumerate(m)])
                for j in range(d):
                    if abs(eigs[j] - val) <= RESONANCE_TOL * max(1.0, abs(val)):
                        violations.append((j, tuple(m)))
    return ResonanceReport(resonant=bool(violations),
                           violations=tuple(violations),
                           checked_order=max_order,
                           eigenvalues=tuple(eigs))


# ---------------------------------------------------------------------------
# smoothness class
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothnessReport:
    eta: object        # nonnegative int, or the string "infinity"
    ratios: tuple      # positive spectral quotients entering the minimum


def smoothness_class(spec: SpectralPartition) -> SmoothnessReport:
    """Differentiability class of the generic invariant-graph family.

    eta = Int[min+ of the slaved/master rate quotients]; if every quotient is
    negative the family collapses to the unique C-infinity member and eta is
    "infinity".
    """
    num = spec.slaved_rates()
    den = spec.master_rates()
    positive = tuple(sorted(a / b for a in num for b in den if a / b > 0))
    if not positive:
        return SmoothnessReport(eta="infinity", ratios=())
    return SmoothnessReport(eta=int(math.floor(min(positive) + 1e-12)),
                            ratios=positive)


def spectral_ratio_table(spec: SpectralPartition):
    """Log-eigenvalue quotients log kappa_l / log |lambda_1| for a map
    spectrum with a single real master direction, in stored order."""
    if spec.kind != "map" or spec.p != 1 or spec.q != 0:
        raise InputError("ratio table requires a map spectrum with p=1, q=0")
    denom = math.log(abs(spec.lam[0]))
    return [(i + 1, math.log(abs(k)) / denom) for i, k in enumerate(spec.kappa)]


# ---------------------------------------------------------------------------
# pseudo-unstable subspace test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PseudoUnstableResult:
    holds: bool
    a_interval: tuple        # open interval (lo, hi), possibly empty (lo>=hi)
    a_below_one: bool = False

    def __iter__(self):      # allow (holds, interval) unpacking
        yield self.holds
        yield self.a_interval if self.holds else None


def _restriction(Df0, basis, scale):
    # orthonormalize, check invariance, return the restricted operator
    Q, _ = np.linalg.qr(np.asarray(basis, dtype=float))
    image = Df0 @ Q
    resid = image - Q @ (Q.T @ image)
    if np.linalg.norm(resid, 2) > 1e-8 * max(scale, 1.0):
        raise NonInvariantSplit("subspace is not invariant under Df0")
    return Q.T @ image


def pseudo_unstable_check(Df0, split, r):
    """Rate-gap feasibility test for a pseudo-unstable subspace.

    Checks whether some a with ||Df0^-1|_U|| < a and ||Df0|_S|| < a^{-r}
    exists; the admissible open interval is
    (||Df0^-1|_U||, ||Df0|_S||^{-1/r}).

    Parameters
    ----------
    Df0 : (n, n) linear map at the fixed point
    split : (S_basis, U_basis) column bases spanning R^n
    r : requested smoothness integer, r >= 1
    """
    Df0 = np.asarray(Df0, dtype=float)
    S, U = split
    S = np.atleast_2d(np.asarray(S, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if S.shape[0] != Df0.shape[0]:
        S = S.T
    if U.shape[0] != Df0.shape[0]:
        U = U.T
    if S.shape[1] + U.shape[1] != Df0.shape[0]:
        raise NonInvariantSplit("S and U do not span the full space")
    scale = np.linalg.norm(Df0, 2)
    M_S = _restriction(Df0, S, scale)
    M_U = _restriction(Df0, U, scale)
    try:
        inv_norm = np.linalg.norm(np.linalg.inv(M_U), 2)
    except np.linalg.LinAlgError as exc:
        raise NonInvariantSplit("Df0 restricted to U is singular") from exc
    lo = inv_norm
    hi = np.linalg.norm(M_S, 2) ** (-1.0 / r)
    holds = lo < hi
    return PseudoUnstableResult(holds=holds, a_interval=(lo, hi),
                                a_below_one=holds and lo < 1.0)


# ---------------------------------------------------------------------------
# CSV matrix ingestion (row-major, header optional)
# ---------------------------------------------------------------------------

def read_matrix_csv(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                if rows:
                    raise InputError(f"non-numeric row in {path}: {line!r}")
                continue  # header line
    if not rows:
        raise InputError(f"no numeric rows in {path}")
    try:
        return np.array(rows, dtype=float)
    except ValueError as exc:
        raise InputError(f"ragged rows in {path}") from exc
