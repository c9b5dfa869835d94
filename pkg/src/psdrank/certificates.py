"""Certificate layer: build, verify and invert the reduction's witnesses.

Yes-instances flow forward: a root xi of f in the unit cube induces the
rank-3 completion B'(u|v) = ((u.v)(xi))^2 of B, which extends to a size
2k+3 witness for M(B, K).  The converse direction is executable too:
``extract_root`` walks a rank-3 completion back to a root of f, and
``sqrt_condition_check`` verifies the pattern condition that makes the
converse argument work.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .factorizations import (
    PSDFactorization,
    Vector,
    dense_vector,
    p_alpha_gram_vectors,
    sparse_dot,
    vector_norm_sq,
)
from .gadgets import block_labels, build_B, compute_K, index_set_H
from .matrices import (
    IncompleteMatrix,
    InstanceMatrix,
    LabelVector,
)
from .polynomials import (
    Assignment,
    Number,
    Polynomial,
    VarId,
    evaluate,
    format_polynomial,
)


# ---------------------------------------------------------------------------
# Completion from a root
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Completion:
    """A rank-3 completion of B: the matrix B' and its size-3 witness."""

    matrix: InstanceMatrix
    factorization: PSDFactorization


def _check_root(f: Polynomial, xi: Assignment, tol: float = 1e-12) -> None:
    for v in f.variables():
        val = xi.value_of(v)
        mag = abs(val if isinstance(val, float) else Fraction(val))
        if mag > 1:
            raise ValueError(f"|{v}| = {val} lies outside the unit cube")
    residual = evaluate(f, xi)
    if xi.mode == "exact":
        if residual != 0:
            raise ValueError(f"point is not a root: f(xi) = {residual}")
    elif abs(residual) > tol:
        raise ValueError(f"point is not a root within {tol}: f(xi) = {residual}")


def completion_from_root(f: Polynomial, xi: Assignment, tol: float = 1e-12) -> Completion:
    """Entrywise square of the evaluated label matrix, plus its witness.

    B'(u|v) = ((u.v)(xi))^2 agrees with every known entry of B and its
    entries stay within 9*(length f)^4 because |xi_i| <= 1.  The witness is
    the rank-one factorization by evaluated label vectors.
    """
    _check_root(f, xi, tol)
    H = index_set_H(f)
    exact = xi.mode == "exact"
    sigma_value: Dict[Polynomial, Number] = {}

    def value_of(p: Polynomial) -> Number:
        hit = sigma_value.get(p)
        if hit is None:
            hit = evaluate(p, xi)
            sigma_value[p] = hit
        return hit

    labels = tuple(h.render() for h in H)
    points = [tuple(value_of(c) for c in h.coords) for h in H]
    data: Dict[Tuple[str, str], Fraction] = {}
    n = len(H)
    for i in range(n):
        a = points[i]
        for j in range(i, n):
            b = points[j]
            d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
            if d:
                sq = d * d
                data[(labels[i], labels[j])] = sq
                if i != j:
                    data[(labels[j], labels[i])] = sq
    if not exact:
        data = {k: Fraction(v) for k, v in data.items()}
    matrix = InstanceMatrix(labels, labels, data)
    rows = {labels[i]: (dense_vector(points[i]),) for i in range(n)}
    cols = {labels[i]: (dense_vector(points[i]),) for i in range(n)}
    fact = PSDFactorization(3, labels, labels, rows, cols,
                            "exact" if exact else "float")
    return Completion(matrix, fact)


# ---------------------------------------------------------------------------
# Witness assembly for M(B, K)
# ---------------------------------------------------------------------------

def assemble_instance_witness(f: Polynomial, xi: Assignment,
                              tol: float = 1e-12) -> PSDFactorization:
    """Size 2k+3 witness for M(B(f), K) from a cube root xi of f.

    M decomposes as the embedded completion plus k disjoint blocks
    K*P(alpha_e) with alpha_e = (K - B'(e))/K; the completion occupies
    coordinates 0..2 and block t occupies coordinates 3+2t, 4+2t, which is
    exactly the block-diagonal padding of the direct-sum bound.
    """
    comp = completion_from_root(f, xi, tol)
    B = build_B(f)
    K = Fraction(compute_K(f))
    E = B.unknown_positions()
    k = len(E)
    ktot = 2 * k + 3
    exact = comp.factorization.mode == "exact"

    rows: Dict[str, List[Vector]] = {}
    cols: Dict[str, List[Vector]] = {}
    for l in B.row_labels:
        rows[l] = list(comp.factorization.row_vectors[l])
        cols[l] = list(comp.factorization.col_vectors[l])

    # Gram vectors per distinct completion value; alpha_e only depends on it.
    block_cache: Dict[Fraction, Tuple[Tuple[Vector, ...], Tuple[Vector, ...]]] = {}

    def block_vectors(bval: Fraction):
        hit = block_cache.get(bval)
        if hit is None:
            if bval > K:
                raise ValueError(
                    f"completion entry {bval} exceeds the budget K = {K}")
            alpha = (K - bval) / K
            hit = p_alpha_gram_vectors(alpha, scale=K)
            block_cache[bval] = hit
        return hit

    for t, (i, j) in enumerate(E):
        base = 3 + 2 * t
        e1, e2 = block_labels(t)
        bval = comp.matrix.entry(i, j)
        prows, pcols = block_vectors(bval)

        def shift(vec: Vector) -> Vector:
            return {base + c: v for c, v in vec.items()}

        rows.setdefault(e1, [])
        rows.setdefault(e2, [])
        cols.setdefault(e1, [])
        cols.setdefault(e2, [])
        rows[i].extend(shift(v) for v in prows[0])
        rows[e1].extend(shift(v) for v in prows[1])
        rows[e2].extend(shift(v) for v in prows[2])
        cols[j].extend(shift(v) for v in pcols[0])
        cols[e1].extend(shift(v) for v in pcols[1])
        cols[e2].extend(shift(v) for v in pcols[2])

    e1s = tuple(block_labels(t)[0] for t in range(k))
    e2s = tuple(block_labels(t)[1] for t in range(k))
    labels = e1s + e2s + B.row_labels
    return PSDFactorization(
        ktot, labels, labels,
        {l: tuple(v) for l, v in rows.items()},
        {l: tuple(v) for l, v in cols.items()},
        "exact" if exact else "float")


# ---------------------------------------------------------------------------
# Root extraction from a rank-3 completion
# ---------------------------------------------------------------------------

class ExtractionError(ValueError):
    pass


def _single_vector(F: PSDFactorization, side: str, label: str,
                   tol: float) -> Tuple[Number, Number, Number]:
    table = F.row_vectors if side == "row" else F.col_vectors
    vecs = table.get(label, ())
    live = [v for v in vecs if float(vector_norm_sq(v)) > tol * tol]
    if len(live) > 1:
        raise ExtractionError(f"{side} {label} is not rank one")
    vec = live[0] if live else {}
    return (vec.get(0, Fraction(0)), vec.get(1, Fraction(0)), vec.get(2, Fraction(0)))


def _mat_vec(M: Sequence[Sequence[Number]], x: Sequence[Number]) -> List[Number]:
    return [sum(M[i][t] * x[t] for t in range(3)) for i in range(3)]


def _det3(M: Sequence[Sequence[Number]]) -> Number:
    return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
            - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
            + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))


def _inv3(M: Sequence[Sequence[Number]], det: Number) -> List[List[Number]]:
    cof = [
        [M[1][1] * M[2][2] - M[1][2] * M[2][1],
         M[0][2] * M[2][1] - M[0][1] * M[2][2],
         M[0][1] * M[1][2] - M[0][2] * M[1][1]],
        [M[1][2] * M[2][0] - M[1][0] * M[2][2],
         M[0][0] * M[2][2] - M[0][2] * M[2][0],
         M[0][2] * M[1][0] - M[0][0] * M[1][2]],
        [M[1][0] * M[2][1] - M[1][1] * M[2][0],
         M[0][1] * M[2][0] - M[0][0] * M[2][1],
         M[0][0] * M[1][1] - M[0][1] * M[1][0]],
    ]
    return [[cof[i][j] / det for j in range(3)] for i in range(3)]


def extract_root(f: Polynomial, F: PSDFactorization,
                 coord_tol: float = 1e-7,
                 residual_tol: float = 1e-6) -> Assignment:
    """Invert a rank-3 completion witness into a root of f.

    The basis change sends p_(1,0,0), p_(0,1,0), p_(0,0,1) to the standard
    basis and dual-transforms the l vectors; a diagonal rescale makes
    p_(1,1,1) = (1,1,1).  Each variable with x_i in sigma is then read off
    l_(1,0,x_i) normalized to first coordinate 1.  Variables that appear in
    monomials only behind other variables are recovered from consecutive
    prefix-product values (val(prefix*x) / val(prefix)); any coordinate that
    stays undetermined defaults to 0 and the final residual check |f(y)| <=
    residual_tol decides acceptance.
    """
    H = index_set_H(f)
    renders = {h.render(): h for h in H}
    if set(F.row_labels) != set(renders) or set(F.col_labels) != set(renders):
        raise ExtractionError("factorization labels do not match H(f)")
    exact = F.mode == "exact"

    one = Polynomial.constant(1)
    zero = Polynomial.zero()

    def lbl(a: Polynomial, b: Polynomial, c: Polynomial) -> str:
        return LabelVector((a, b, c)).render()

    e_labels = [lbl(one, zero, zero), lbl(zero, one, zero), lbl(zero, zero, one)]
    p_basis = [_single_vector(F, "row", l, coord_tol) for l in e_labels]
    # Columns of P3 are the three basis images; p -> P3^{-1} p, l -> P3^T l
    # preserves every dot product.
    P3 = [[p_basis[j][i] for j in range(3)] for i in range(3)]
    det = _det3(P3)
    if (exact and det == 0) or (not exact and abs(float(det)) < coord_tol):
        raise ExtractionError("the p-vectors of (1,0,0),(0,1,0),(0,0,1) are singular")
    P3inv = _inv3(P3, det)
    P3t = [[P3[j][i] for j in range(3)] for i in range(3)]

    def p_of(label: str) -> List[Number]:
        return _mat_vec(P3inv, _single_vector(F, "row", label, coord_tol))

    def l_of(label: str) -> List[Number]:
        return _mat_vec(P3t, _single_vector(F, "col", label, coord_tol))

    p111 = p_of(lbl(one, one, one))
    for c in p111:
        if (exact and c == 0) or (not exact and abs(float(c)) < coord_tol):
            raise ExtractionError("a coordinate of p_(1,1,1) vanishes")

    def l_normalized(s: Polynomial) -> Optional[Tuple[Number, Number]]:
        """Transformed l_(1,0,s) rescaled to (1, *, value); None if absent."""
        label = lbl(one, zero, s)
        if label not in renders:
            return None
        raw = l_of(label)
        # undo the diagonal rescale: l -> diag(p111) l
        vec = [p111[i] * raw[i] for i in range(3)]
        first = vec[0]
        if (exact and first == 0) or (not exact and abs(float(first)) < coord_tol):
            raise ExtractionError(
                f"first coordinate of l_(1,0,{format_polynomial(s, compact=True)}) vanishes")
        mid = vec[1] / first
        val = vec[2] / first
        if abs(float(mid)) > max(coord_tol, 1e-6):
            raise ExtractionError(
                f"l_(1,0,{format_polynomial(s, compact=True)}) violates the zero pattern")
        return (mid, val)

    values: Dict[VarId, Number] = {}
    fvars = f.variables()
    sigma_elems = {c for h in H for c in h.coords}
    for v in fvars:
        xv = Polynomial.variable(v)
        if xv in sigma_elems:
            got = l_normalized(xv)
            if got is not None:
                values[v] = got[1]

    # Prefix-product fallback for variables hidden behind others.
    for term in f.terms:
        prev: Number = Fraction(1)
        prev_known = True
        for cut in range(1, len(term.vars) + 1):
            v = term.vars[cut - 1]
            prefix = Polynomial.monomial(term.vars[:cut])
            got = l_normalized(prefix)
            if got is None:
                prev_known = False
                continue
            if v not in values and prev_known:
                nonzero = (prev != 0) if exact else abs(float(prev)) > coord_tol
                if nonzero:
                    values[v] = got[1] / prev
            prev = got[1]
            prev_known = True

    for v in fvars:
        values.setdefault(v, Fraction(0))

    mode = "exact" if exact and all(not isinstance(x, float) for x in values.values()) else "float"
    if mode == "float":
        values = {k: float(x) for k, x in values.items()}
    result = Assignment(values, mode)
    residual = evaluate(f, result)
    if abs(residual if isinstance(residual, float) else float(residual)) > residual_tol:
        raise ExtractionError(f"extracted point misses the zero set: f(y) = {residual}")
    return result


# ---------------------------------------------------------------------------
# sqrt condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqrtWitness:
    """Per column: rows (i1, i2) and columns (j1, j2) realizing the pattern
    [[0,1,0],[0,0,1]] against that column; same for the transpose."""

    columns: Mapping[str, Tuple[str, str, str, str]]
    transpose_columns: Mapping[str, Tuple[str, str, str, str]]


def _pattern_at(S: IncompleteMatrix, i1: str, i2: str, k: str, j1: str, j2: str) -> bool:
    want = ((i1, k, 0), (i1, j1, 1), (i1, j2, 0), (i2, k, 0), (i2, j1, 0), (i2, j2, 1))
    for r, c, val in want:
        e = S.entry(r, c)
        if isinstance(e, Fraction):
            if e != val:
                return False
        else:
            return False
    return True


def _column_witness(S: IncompleteMatrix, k: str,
                    ones: Mapping[str, set], zeros: Mapping[str, set]) -> Optional[Tuple[str, str, str, str]]:
    rows0 = [i for i in S.row_labels
             if isinstance(S.entry(i, k), Fraction) and S.entry(i, k) == 0]
    col_pos = {c: t for t, c in enumerate(S.col_labels)}
    for i1 in rows0:
        if not ones[i1]:
            continue
        for i2 in rows0:
            if i1 == i2 or not ones[i2]:
                continue
            j1s = ones[i1] & zeros[i2]
            if not j1s:
                continue
            j2s = zeros[i1] & ones[i2]
            if not j2s:
                continue
            j1 = min(j1s, key=col_pos.__getitem__)
            j2 = min(j2s, key=col_pos.__getitem__)
            return (i1, i2, j1, j2)
    return None


def _guided_candidate(S: IncompleteMatrix, k_idx: int) -> Optional[Tuple[str, str, str, str]]:
    """Closed-form witness rows/columns for label-triple matrices: with the
    1 in coordinate c of the column label v, two rows orthogonal to v and
    the matching unit-style columns realize the pattern."""
    if S.label_vectors is None:
        return None
    H = S.label_vectors
    index = {h.render(): t for t, h in enumerate(H)}
    one = Polynomial.constant(1)
    zero = Polynomial.zero()
    v = H[k_idx].coords
    if v[0] == one:
        i1 = LabelVector((-v[1], one, zero))
        i2 = LabelVector((-v[2], zero, one))
        j1 = LabelVector((zero, one, zero))
        j2 = LabelVector((zero, zero, one))
    elif v[1] == one:
        i1 = LabelVector((one, -v[0], zero))
        i2 = LabelVector((zero, -v[2], one))
        j1 = LabelVector((one, zero, zero))
        j2 = LabelVector((zero, zero, one))
    else:
        i1 = LabelVector((one, zero, -v[0]))
        i2 = LabelVector((zero, one, -v[1]))
        j1 = LabelVector((one, zero, zero))
        j2 = LabelVector((zero, one, zero))
    names = tuple(x.render() for x in (i1, i2, j1, j2))
    if any(n not in index for n in names):
        return None
    k_label = S.col_labels[k_idx]
    if _pattern_at(S, names[0], names[1], k_label, names[2], names[3]):
        return names
    return None


def _is_symmetric(S: IncompleteMatrix) -> bool:
    if S.row_labels != S.col_labels:
        return False
    for (r, c), v in S.data.items():
        w = S.data.get((c, r))
        if w is None:
            if not (isinstance(v, Fraction) and v == 0):
                return False
        elif w is not v and w != v:
            return False
    return True


def sqrt_condition_check(S: IncompleteMatrix) -> Tuple[bool, Optional[SqrtWitness]]:
    """Decide the pattern condition for S and its transpose.

    Every column needs two rows whose known entries form [[0,1,0],[0,0,1]]
    against the column and two witness columns.  Searches the closed-form
    candidate first when label triples are attached, then exhaustively in
    label order; the first witness per column is returned.
    """
    def build_maps(T: IncompleteMatrix):
        ones: Dict[str, set] = {i: set() for i in T.row_labels}
        for (r, c), v in T.data.items():
            if isinstance(v, Fraction) and v == 1:
                ones[r].add(c)
        zeros = {i: {c for c in T.col_labels
                     if isinstance(T.entry(i, c), Fraction) and T.entry(i, c) == 0}
                 for i in T.row_labels}
        return ones, zeros

    def one_side(T: IncompleteMatrix) -> Optional[Dict[str, Tuple[str, str, str, str]]]:
        maps = None  # row -> {columns with a known 1 / known 0}, built on demand
        out: Dict[str, Tuple[str, str, str, str]] = {}
        for k_idx, k in enumerate(T.col_labels):
            got = _guided_candidate(T, k_idx)
            if got is None:
                if maps is None:
                    maps = build_maps(T)
                got = _column_witness(T, k, maps[0], maps[1])
            if got is None:
                return None
            out[k] = got
        return out

    primal = one_side(S)
    if primal is None:
        return (False, None)
    if _is_symmetric(S):
        return (True, SqrtWitness(primal, dict(primal)))
    dual = one_side(S.transpose())
    if dual is None:
        return (False, None)
    return (True, SqrtWitness(primal, dual))


# ---------------------------------------------------------------------------
# Hadamard square root of a rank-one factorization
# ---------------------------------------------------------------------------

def hadamard_sqrt_from_rank1(F: PSDFactorization, tol: float = 1e-9) -> List[List[Number]]:
    """Entrywise square root Q(i|j) = a_i . b_j of the certified matrix,
    where a_i, b_j are the single live Gram vectors per index.

    Raises when some index carries two or more vectors of norm above tol
    (its PSD factor has rank >= 2 and no rank-one square root exists).
    """
    def live(table: Mapping[str, Tuple[Vector, ...]], label: str) -> Vector:
        vecs = [v for v in table.get(label, ()) if float(vector_norm_sq(v)) > tol * tol]
        if len(vecs) > 1:
            raise ValueError(f"factor at {label!r} has numerical rank >= 2")
        return vecs[0] if vecs else {}

    a = [live(F.row_vectors, l) for l in F.row_labels]
    b = [live(F.col_vectors, l) for l in F.col_labels]
    return [[sparse_dot(ai, bj) for bj in b] for ai in a]
