"""Rank tests for stabilizability and exact null-controllability, plus
controllability indices and the minimal-time bounds they generate.

The universal quantifiers in the rank conditions ("for all lam", "for all
Re lam >= 0") reduce to finitely many checks: [D(lam) | B] can only lose rank
where det D(lam) = 0, and [mu I - A | B] only at eigenvalues of A.  The root
locations come from a windowed scan, so every verdict that depends on them
carries the window as a caveat.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._linalg import rank_tolerance, svd_rank
from .charmatrix import delta
from .stability import ScanOptions, matrix_spectral_structure, _run_scan
from .sysmodel import NeutralSystem


@dataclass(frozen=True)
class RankTestResult:
    test_point: complex
    matrix_shape: tuple[int, int]
    min_singular_value: float
    rank: int
    passes: bool

    def to_json_dict(self) -> dict:
        return {
            "test_point": {"re": self.test_point.real, "im": self.test_point.imag},
            "matrix_shape": list(self.matrix_shape),
            "min_singular_value": self.min_singular_value,
            "rank": self.rank,
            "passes": self.passes,
        }


ROOT_SITE_REL_TOL = 1e-8


def _rank_test(
    M: np.ndarray,
    point: complex,
    required: int,
    tol: float | None,
    rel_tol: float = 0.0,
) -> RankTestResult:
    _, sigma = svd_rank(M)
    cut = rank_tolerance(sigma, M.shape) if tol is None else float(tol)
    if sigma.size:
        cut = max(cut, rel_tol * float(sigma[0]))
    rank = int(np.count_nonzero(sigma > cut))
    return RankTestResult(
        test_point=complex(point),
        matrix_shape=M.shape,
        min_singular_value=float(sigma[-1]) if sigma.size else 0.0,
        rank=rank,
        passes=rank >= required,
    )


def hautus_at(
    sys_: NeutralSystem,
    lam: complex,
    tol: float | None = None,
    rel_tol: float = 0.0,
) -> RankTestResult:
    """Rank of [D(lam) | B]; full rank n everywhere except possibly at roots.

    When lam is a numerically located root, pass rel_tol on the order of the
    root accuracy: the vanishing singular value only drops to the size of the
    localization error, far above machine epsilon.
    """
    M = np.hstack([delta(sys_, lam), sys_.B.astype(complex)])
    return _rank_test(M, lam, sys_.n, tol, rel_tol)


def hautus_matrix_pair(A, B, mu: complex, tol: float | None = None) -> RankTestResult:
    """Rank of [mu I - A | B]."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    M = np.hstack([mu * np.eye(n) - A, B]).astype(complex)
    return _rank_test(M, mu, n, tol)


def kalman_rank(A, B_cols, tol: float | None = None) -> int:
    """Rank of [B, AB, ..., A^{n-1}B]; zero-width B gives 0."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B_cols, dtype=float)
    n = A.shape[0]
    if B.ndim == 1:
        B = B.reshape(n, 1)
    if B.shape[1] == 0:
        return 0
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    rank, _ = svd_rank(np.hstack(blocks), tol)
    return rank


# ------------------------------------------------------------ stabilizability


@dataclass(frozen=True)
class StabilizabilityReport:
    condition_1: bool           # all |mu| <= 1
    condition_2: bool           # unit-circle eigenvalues simple
    condition_3: tuple[RankTestResult, ...]   # [D(lam) | B] at scanned RHP roots
    condition_3_passes: bool
    condition_4: tuple[RankTestResult, ...]   # [mu I - A | B] at unit eigenvalues
    condition_4_passes: bool
    verdict: str                # regularly_stabilizable_within_window |
                                # hypotheses_not_satisfied | sufficient_conditions_fail
    window_note: str
    structure: dict

    def to_json_dict(self) -> dict:
        return {
            "condition_1_all_eigenvalues_inside_closed_unit_disk": self.condition_1,
            "condition_2_unit_circle_eigenvalues_simple": self.condition_2,
            "condition_3_hautus_at_scanned_rhp_roots": [
                t.to_json_dict() for t in self.condition_3
            ],
            "condition_3_passes": self.condition_3_passes,
            "condition_4_hautus_pair_at_unit_eigenvalues": [
                t.to_json_dict() for t in self.condition_4
            ],
            "condition_4_passes": self.condition_4_passes,
            "verdict": self.verdict,
            "window_note": self.window_note,
            "matrix_structure": self.structure,
        }


def check_stabilizability(
    sys_: NeutralSystem,
    scan: ScanOptions | None = None,
    rank_tol: float | None = None,
    unit_tol: float = 1e-9,
) -> StabilizabilityReport:
    """Regular-stabilizability test: two hypotheses on the difference matrix,
    then the two rank conditions, the first checked at every scanned root with
    Re >= 0 (rank can only drop there) and the second at unit-circle
    eigenvalues (elsewhere mu I - A is invertible)."""
    scan = scan or ScanOptions()
    structure = matrix_spectral_structure(sys_.A_minus1, unit_tol=unit_tol)
    cond1 = structure.spectral_radius <= 1.0 + unit_tol
    sigma1 = structure.sigma1
    cond2 = all(e.algebraic == 1 for e in sigma1)

    report, floor = _run_scan(sys_, structure, scan)
    rhp_roots = [r for r in report.all_roots() if r.lam.real >= 0.0]
    tests3 = tuple(
        hautus_at(sys_, r.lam, rank_tol, rel_tol=ROOT_SITE_REL_TOL) for r in rhp_roots
    )
    cond3 = all(t.passes for t in tests3)

    tests4 = tuple(
        hautus_matrix_pair(sys_.A_minus1, sys_.B, e.mu, rank_tol) for e in sigma1
    )
    cond4 = all(t.passes for t in tests4)

    if not (cond1 and cond2):
        verdict = "hypotheses_not_satisfied"
    elif cond3 and cond4:
        verdict = "regularly_stabilizable_within_window"
    else:
        verdict = "sufficient_conditions_fail"

    note = (
        f"condition 3 checked at {len(tests3)} root(s) with Re >= 0 inside "
        f"[{floor:.6g}, {report.window.re_max:.6g}] x [-{scan.im_cap:.6g}, {scan.im_cap:.6g}]; "
        "roots outside the window are not covered"
    )
    if report.unresolved_cells:
        note += f"; {len(report.unresolved_cells)} unresolved scan cell(s)"
    return StabilizabilityReport(
        condition_1=cond1,
        condition_2=cond2,
        condition_3=tests3,
        condition_3_passes=cond3,
        condition_4=tests4,
        condition_4_passes=cond4,
        verdict=verdict,
        window_note=note,
        structure=structure.to_json_dict(),
    )


# ------------------------------------------------------- null controllability


@dataclass(frozen=True)
class NullControllabilityResult:
    condition_i: tuple[RankTestResult, ...]
    condition_i_passes: bool
    condition_ii: RankTestResult
    verdict: str                      # yes | yes_within_window | no
    witness: RankTestResult | None
    window_note: str

    def to_json_dict(self) -> dict:
        return {
            "condition_i_hautus_at_scanned_roots": [t.to_json_dict() for t in self.condition_i],
            "condition_i_passes": self.condition_i_passes,
            "condition_ii_kalman": self.condition_ii.to_json_dict(),
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_json_dict(),
            "window_note": self.window_note,
        }


def check_null_controllability(
    sys_: NeutralSystem,
    scan: ScanOptions | None = None,
    rank_tol: float | None = None,
) -> NullControllabilityResult:
    """Null-controllability for some horizon: Kalman condition on (A, B) exact,
    Hautus condition checked at every scanned root.  An invertible B settles
    the Hautus condition globally, hence verdict 'yes' without a window caveat."""
    if sys_.r < 1:
        raise ValueError("null-controllability test needs at least one input")
    scan = scan or ScanOptions()

    n = sys_.n
    kal = kalman_rank(sys_.A_minus1, sys_.B, rank_tol)
    blocks = [sys_.B]
    for _ in range(n - 1):
        blocks.append(sys_.A_minus1 @ blocks[-1])
    K = np.hstack(blocks)
    _, sigma = svd_rank(K, rank_tol)
    cond_ii = RankTestResult(
        test_point=0.0,
        matrix_shape=K.shape,
        min_singular_value=float(sigma[-1]) if sigma.size else 0.0,
        rank=kal,
        passes=kal == n,
    )

    b_rank, _ = svd_rank(sys_.B, rank_tol)
    if b_rank == n:
        note = "input matrix has full row rank; Hautus condition holds at every point"
        verdict = "yes" if cond_ii.passes else "no"
        return NullControllabilityResult(
            condition_i=(),
            condition_i_passes=True,
            condition_ii=cond_ii,
            verdict=verdict,
            witness=None if cond_ii.passes else cond_ii,
            window_note=note,
        )

    structure = matrix_spectral_structure(sys_.A_minus1)
    report, floor = _run_scan(sys_, structure, scan)
    tests = tuple(
        hautus_at(sys_, r.lam, rank_tol, rel_tol=ROOT_SITE_REL_TOL)
        for r in report.all_roots()
    )
    cond_i = all(t.passes for t in tests)
    witness = next((t for t in tests if not t.passes), None)
    if witness is None and not cond_ii.passes:
        witness = cond_ii

    if not cond_i or not cond_ii.passes:
        verdict = "no"
    else:
        verdict = "yes_within_window"
    note = (
        f"Hautus condition checked at {len(tests)} scanned root(s) in "
        f"[{floor:.6g}, {report.window.re_max:.6g}] x [-{scan.im_cap:.6g}, {scan.im_cap:.6g}]; "
        "rank can only drop at roots of det D"
    )
    if report.unresolved_cells:
        note += f"; {len(report.unresolved_cells)} unresolved scan cell(s)"
    return NullControllabilityResult(
        condition_i=tests,
        condition_i_passes=cond_i,
        condition_ii=cond_ii,
        verdict=verdict,
        witness=witness,
        window_note=note,
    )


# --------------------------------------------------- indices and time bounds


def _column_basis(B: np.ndarray, tol: float | None = None) -> np.ndarray:
    """First maximal independent subset of columns, in order."""
    cols: list[int] = []
    for j in range(B.shape[1]):
        trial = B[:, cols + [j]]
        rank, _ = svd_rank(trial, tol)
        if rank == len(cols) + 1:
            cols.append(j)
    return B[:, cols]


def controllability_indices(sys_: NeutralSystem, basis) -> tuple[list[int], list[int]]:
    """Nested Kalman ranks n_i and their drops m_i for an ordered basis of Im B.

    n_0 is the Kalman rank of the full input matrix; n_i removes the first i
    basis vectors; n_d = 0 by convention.  m_i = n_{i-1} - n_i telescopes to
    n_0.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis.reshape(sys_.n, 1)
    d = basis.shape[1]
    rank_basis, _ = svd_rank(basis)
    if rank_basis != d:
        raise ValueError("basis vectors must be linearly independent")
    rank_B, _ = svd_rank(sys_.B)
    if rank_B != d:
        raise ValueError("basis must span the image of B")
    joint, _ = svd_rank(np.hstack([sys_.B, basis]))
    if joint != rank_B:
        raise ValueError("basis vectors must lie in the image of B")

    A = sys_.A_minus1
    n_chain = [kalman_rank(A, sys_.B)]
    for i in range(1, d):
        n_chain.append(kalman_rank(A, basis[:, i:]))
    n_chain.append(0)
    m = [n_chain[i - 1] - n_chain[i] for i in range(1, d + 1)]
    return n_chain, m


@dataclass(frozen=True)
class BasisIndices:
    order: tuple[int, ...]
    n_chain: tuple[int, ...]
    m: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {"order": list(self.order), "n_chain": list(self.n_chain), "m": list(self.m)}


@dataclass(frozen=True)
class TimeBounds:
    m_min: int | None
    m_max: int | None
    time_lower: float | None
    time_sufficient: float | None
    single_input_exact: bool
    policy: str
    refused: bool
    refusal_reason: str | None

    def to_json_dict(self) -> dict:
        return {
            "m_min": self.m_min,
            "m_max": self.m_max,
            "time_lower": self.time_lower,
            "time_sufficient": self.time_sufficient,
            "single_input_exact": self.single_input_exact,
            "policy": self.policy,
            "refused": self.refused,
            "refusal_reason": self.refusal_reason,
        }


def _enumerate_bases(sys_: NeutralSystem, policy: str, seed: int = 0):
    """(order_label, basis matrix) pairs for the chosen search policy.

    'permutations' walks all orderings of one fixed column basis of Im B;
    'random:K' adds K invertible recombinations of it, labeled by draw index.
    """
    base = _column_basis(sys_.B)
    d = base.shape[1]
    for perm in itertools.permutations(range(d)):
        yield perm, base[:, list(perm)]
    if policy.startswith("random:"):
        k = int(policy.split(":", 1)[1])
        rng = np.random.default_rng(seed)
        made = 0
        while made < k:
            G = rng.standard_normal((d, d))
            if abs(np.linalg.det(G)) < 1e-3:
                continue
            made += 1
            yield ("random", made), base @ G


def controllability_time_bounds(
    sys_: NeutralSystem,
    policy: str = "permutations",
    seed: int = 0,
    verdict: NullControllabilityResult | None = None,
    scan: ScanOptions | None = None,
) -> tuple[TimeBounds, tuple[BasisIndices, ...]]:
    """Index bounds m_min = max over bases of m_1 and m_max = min over bases of
    max_i m_i, with times (m_min h, m_max h).  Refuses to bound the time when
    the system is not null-controllable.  For one input the time nh is sharp:
    controllable for T > nh and not controllable at T = nh."""
    if sys_.r < 1:
        raise ValueError("time bounds need at least one input")
    if verdict is None:
        verdict = check_null_controllability(sys_, scan)
    if verdict.verdict == "no":
        bounds = TimeBounds(
            m_min=None,
            m_max=None,
            time_lower=None,
            time_sufficient=None,
            single_input_exact=False,
            policy=policy,
            refused=True,
            refusal_reason="system is not null-controllable; witness recorded in the verdict",
        )
        return bounds, ()

    records = []
    for label, basis in _enumerate_bases(sys_, policy, seed):
        n_chain, m = controllability_indices(sys_, basis)
        records.append(
            BasisIndices(
                order=tuple(label) if isinstance(label, tuple) else (label,),
                n_chain=tuple(n_chain),
                m=tuple(m),
            )
        )
    m_min = max(rec.m[0] for rec in records)
    m_max = min(max(rec.m) for rec in records)
    single = sys_.B.shape[1] == 1 or _column_basis(sys_.B).shape[1] == 1
    bounds = TimeBounds(
        m_min=m_min,
        m_max=m_max,
        time_lower=m_min * sys_.h,
        time_sufficient=m_max * sys_.h,
        single_input_exact=single,
        policy=policy,
        refused=False,
        refusal_reason=None,
    )
    return bounds, tuple(records)


@dataclass(frozen=True)
class ControllabilityReport:
    null_controllability: NullControllabilityResult
    indices: tuple[BasisIndices, ...]
    bounds: TimeBounds

    def to_json_dict(self) -> dict:
        doc = {
            "null_controllability": self.null_controllability.to_json_dict(),
            "indices": [rec.to_json_dict() for rec in self.indices],
            "bounds": self.bounds.to_json_dict(),
        }
        if self.bounds.single_input_exact and not self.bounds.refused:
            doc["sharpness"] = (
                "single input: null-controllable for T > n h and not null-controllable "
                "at T = n h"
            )
        return doc

    def summary(self) -> str:
        """Plain-text summary naming the condition behind each verdict."""
        nc = self.null_controllability
        lines = [
            f"null-controllability: {nc.verdict}",
            f"  Kalman rank condition on (A, B): "
            f"{'holds' if nc.condition_ii.passes else 'fails'} "
            f"(rank {nc.condition_ii.rank} of {nc.condition_ii.matrix_shape[0]})",
            f"  Hautus condition at characteristic roots: "
            f"{'holds on the scanned window' if nc.condition_i_passes else 'fails'}",
        ]
        if nc.witness is not None:
            w = nc.witness.test_point
            lines.append(
                f"  witness point {w.real:+.6g}{w.imag:+.6g}i with rank {nc.witness.rank}"
            )
        b = self.bounds
        if b.refused:
            lines.append("controllability time: no finite time (system not null-controllable)")
        else:
            lines.append(
                f"controllability indices: m_min = {b.m_min}, m_max = {b.m_max} "
                f"(basis policy: {b.policy})"
            )
            lines.append(
                f"controllability time: not below {b.time_lower:.6g}, "
                f"achieved beyond {b.time_sufficient:.6g}"
            )
            if b.single_input_exact:
                lines.append(
                    "  single-input sharpness: the bound n h is exact "
                    "(not null-controllable at T = n h)"
                )
        return "\n".join(lines)


def controllability_report(
    sys_: NeutralSystem,
    scan: ScanOptions | None = None,
    policy: str = "permutations",
    seed: int = 0,
    rank_tol: float | None = None,
) -> ControllabilityReport:
    """Full controllability analysis: verdict, per-basis indices, time bounds."""
    verdict = check_null_controllability(sys_, scan, rank_tol)
    bounds, records = controllability_time_bounds(
        sys_, policy=policy, seed=seed, verdict=verdict
    )
    return ControllabilityReport(
        null_controllability=verdict, indices=records, bounds=bounds
    )
