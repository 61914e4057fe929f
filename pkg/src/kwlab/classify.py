"""Integer bookkeeping for knot data, divisors and existence verdicts.

Points on the Riemann surface are opaque ids and line bundles are tracked by
degree (plus an optional n-torsion label), which is all the counting
statements use. Everything is exact Python integer arithmetic.
"""
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .models import Weight

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Divisor:
    """Finite formal sum of points with integer multiplicities."""

    items: tuple = ()

    def __post_init__(self):
        acc = Counter()
        src = self.items.items() if isinstance(self.items, dict) else self.items
        for p, m in src:
            if int(m) != m:
                raise ValueError(f"multiplicity at {p!r} is not an integer: {m}")
            acc[p] += int(m)
        clean = tuple(sorted(((p, m) for p, m in acc.items() if m != 0), key=lambda pm: str(pm[0])))
        object.__setattr__(self, "items", clean)

    @classmethod
    def of(cls, **mult):
        return cls(tuple(mult.items()))

    @property
    def entries(self):
        return dict(self.items)

    @property
    def degree(self):
        return sum(m for _, m in self.items)

    def multiplicity(self, p):
        return self.entries.get(p, 0)

    def support(self):
        return [p for p, _ in self.items]

    def is_effective(self):
        return all(m > 0 for _, m in self.items)

    def __add__(self, other):
        return Divisor(self.items + other.items)

    def __neg__(self):
        return Divisor(tuple((p, -m) for p, m in self.items))

    def __sub__(self, other):
        return self + (-other)

    def __len__(self):
        return len(self.items)

    def __str__(self):
        if not self.items:
            return "0"
        return " + ".join(f"{m}*{p}" if m != 1 else f"{p}" for p, m in self.items)


@dataclass(frozen=True)
class KnotData:
    """Knot points with their weights ``k = (k_1, ..., k_{n-1})``."""

    points: tuple = ()

    def __post_init__(self):
        pts = tuple((p, w if isinstance(w, Weight) else Weight(w)) for p, w in self.points)
        ids = [p for p, _ in pts]
        if len(set(ids)) != len(ids):
            raise ValueError("knot point ids must be distinct")
        for p, w in pts:
            if not w.is_knot:
                raise ValueError(f"weight at {p!r} has no nonzero entry")
        if len({w.n for _, w in pts}) > 1:
            raise ValueError("all weights must have the same length n - 1")
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points[0][1].n if self.points else None

    @property
    def degree(self):
        return sum(w.total for _, w in self.points)

    def __bool__(self):
        return bool(self.points)

    def __len__(self):
        return len(self.points)

    def __add__(self, other):
        # disjoint union; shared ids are rejected by the constructor
        return KnotData(self.points + other.points)

    def to_json(self):
        return [{"id": p, "weight": list(w.k)} for p, w in self.points]


@dataclass(frozen=True)
class LineBundleClass:
    degree: int
    torsion_label: str = None

    def __mul__(self, other):
        lab = "*".join(x for x in (self.torsion_label, other.torsion_label) if x) or None
        return LineBundleClass(self.degree + other.degree, lab)

    def __pow__(self, k):
        return LineBundleClass(self.degree * k, self.torsion_label if k else None)

    def dual(self):
        return LineBundleClass(-self.degree, self.torsion_label)


@dataclass(frozen=True)
class SurfaceSpec:
    g: int
    n: int = 2

    def __post_init__(self):
        if int(self.g) != self.g or self.g < 0:
            raise ValueError(f"genus must be a nonnegative integer, got {self.g}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"rank must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "g", int(self.g))
        object.__setattr__(self, "n", int(self.n))

    def canonical(self):
        return LineBundleClass(2 * self.g - 2, None)


def divisor_from_knot_data(kd):
    """``D = Σ_i (Σ_j k_j^i) p_i``."""
    return Divisor(tuple((p, w.total) for p, w in kd.points))


@dataclass(frozen=True)
class Inadmissible:
    deg_D: int
    n: int
    reason: str = ""

    verdict = "Inadmissible"


@dataclass(frozen=True)
class Admissible:
    deg_D: int
    n: int
    deg_L: int

    verdict = "Admissible"

    @property
    def line_bundle(self):
        return LineBundleClass(self.deg_L)


def admissibility(D, s):
    """Divisibility test on ``deg D = −n deg L + n(n−1)(g−1)``."""
    if s.g < 2:
        raise ValueError("admissibility is stated for g >= 2; use classify_existence for g <= 1")
    deg = D.degree if isinstance(D, Divisor) else int(D)
    n = s.n
    if deg % n:
        return Inadmissible(deg, n, f"n = {n} does not divide deg D = {deg}")
    return Admissible(deg, n, (n * (n - 1) * (s.g - 1) - deg) // n)


def solution_count_bound(s):
    """``n^{2g}``, the number of n-torsion twists; an upper bound only."""
    return s.n ** (2 * s.g)


@dataclass(frozen=True)
class VanishingResult:
    knot_data: KnotData
    hitchin_component: bool

    @property
    def divisor(self):
        return divisor_from_knot_data(self.knot_data)


def knot_data_from_vanishing(orders, require_nonvanishing_top=False):
    """Weights from vanishing orders ``ord_p(f_1), ..., ord_p(f_n)``.

    ``orders`` maps point id to its list of orders (or is a list of
    ``(id, orders)`` pairs). ``k_j = ord(f_{j+1}) − ord(f_j)``; points whose
    weight vanishes are dropped. An empty result raises the Hitchin flag.
    """
    src = orders.items() if isinstance(orders, dict) else orders
    pts, lengths = [], set()
    for p, ords in src:
        ords = [int(v) for v in ords]
        if len(ords) < 2:
            raise ValueError(f"need at least ord(f_1), ord(f_2) at {p!r}")
        if any(v < 0 for v in ords):
            raise ValueError(f"negative vanishing order at {p!r}")
        if require_nonvanishing_top and ords[-1] != 0:
            raise ValueError(f"f_n vanishes at {p!r}")
        k = [b - a for a, b in zip(ords, ords[1:])]
        if any(v < 0 for v in k):
            raise ValueError(f"vanishing orders decrease at {p!r}: {ords}")
        lengths.add(len(ords))
        if any(k):
            pts.append((p, Weight(tuple(k))))
    if len(lengths) > 1:
        raise ValueError("every point needs the same number of orders")
    kd = KnotData(tuple(pts))
    return VanishingResult(kd, not kd)


def char_poly(phi):
    """Coefficients ``c_0..c_n`` of ``det(λ − φ) = Σ c_j λ^{n−j}``
    (Faddeev–LeVerrier, batched over leading axes)."""
    phi = np.asarray(phi)
    n = phi.shape[-1]
    c = np.zeros(phi.shape[:-2] + (n + 1,), dtype=np.result_type(phi, complex))
    c[..., 0] = 1
    eye = np.eye(n)
    M = np.zeros_like(phi, dtype=c.dtype)
    for k in range(1, n + 1):
        M = phi @ M + c[..., k - 1, None, None] * eye
        c[..., k] = -np.trace(phi @ M, axis1=-2, axis2=-1) / k
    return c


def hitchin_fibration(phi):
    """``p_j(φ)`` with ``det(λ − φ) = Σ_j λ^{n−j} (−1)^j p_j(φ)``.

    Returns an array ``(..., n+1)`` indexed by j; ``p_0 = 1`` and ``p_1``
    (≈ 0 for traceless φ) is kept as a sanity value.
    """
    c = char_poly(phi)
    signs = (-1.0) ** np.arange(c.shape[-1])
    return c * signs


@dataclass(frozen=True)
class SL2Result:
    verdict: str   # UniqueSolution | NoSolution | NotCovered
    reason: str = ""


def nonhitchin_sl2_check(deg_l, g, D, Z_alpha):
    """The two non-Hitchin SL(2,ℝ) cases, for ``0 < deg ℓ < g − 1``."""
    if not 0 < deg_l < g - 1:
        raise ValueError(f"need 0 < deg l < g - 1, got deg l = {deg_l}, g = {g}")
    lo = 2 * g - 2 - 2 * deg_l
    d = D.degree
    if d == lo:
        if D == Z_alpha:
            return SL2Result("UniqueSolution", "deg D = 2g-2-2deg l and D = Z(alpha)")
        return SL2Result("NoSolution", "deg D = 2g-2-2deg l but D != Z(alpha)")
    if lo < d < 2 * g - 2:
        return SL2Result("NoSolution", "2g-2 > deg D > 2g-2-2deg l")
    return SL2Result("NotCovered", f"deg D = {d} outside the stated ranges")


LIMITS = ("hitchin", "other", "irreducible")


@dataclass
class Verdict:
    verdict: str
    surface: SurfaceSpec
    count_bound: int = None
    deg_L: int = None
    flags: list = field(default_factory=list)
    detail: str = ""

    def to_dict(self):
        out = {"v": SCHEMA_VERSION, "verdict": self.verdict, "g": self.surface.g, "n": self.surface.n}
        if self.count_bound is not None:
            # json writes Python ints exactly, so n^{2g} survives round trips
            out["count_bound"] = self.count_bound
        if self.deg_L is not None:
            out["deg_L"] = self.deg_L
        out["flags"] = list(self.flags)
        out["detail"] = self.detail
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def table(self):
        rows = [("verdict", self.verdict), ("g", self.surface.g), ("n", self.surface.n)]
        if self.count_bound is not None:
            rows.append(("count_bound", self.count_bound))
        if self.deg_L is not None:
            rows.append(("deg_L", self.deg_L))
        if self.flags:
            rows.append(("flags", ",".join(self.flags)))
        if self.detail:
            rows.append(("detail", self.detail))
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


def classify_existence(s, limit="other", kd=None, witness=None):
    """Existence verdict for the Nahm pole boundary problem on S¹×Σ×ℝ⁺.

    ``limit`` is "hitchin" when the limiting flat connection lies in the
    Hitchin section, "other" otherwise, or "irreducible" for a knotted query
    resting on a line-subbundle data set. ``witness`` says whether a
    holomorphic line subbundle with the given data set is known to exist
    (None when not supplied).
    """
    if limit not in LIMITS:
        raise ValueError(f"limit must be one of {LIMITS}, got {limit!r}")
    knotted = kd is not None and bool(kd)
    if knotted and kd.n != s.n:
        raise ValueError(f"weights have length {kd.n - 1}, expected {s.n - 1}")
    if s.g == 0:
        return Verdict("NoSolutions", s, detail="no solutions on S1 x S2")
    if s.g == 1:
        if knotted:
            return Verdict("ExplicitlyUndetermined", s, detail="knotted g = 1 has no stated existence theory")
        return Verdict("Unique", s, detail="unique up to unitary gauge equivalence")
    if not knotted:
        if limit == "hitchin":
            return Verdict("ExistsUnique", s, detail="limit in the Hitchin section")
        return Verdict("None", s, detail="limit not in the Hitchin section")
    adm = admissibility(divisor_from_knot_data(kd), s)
    if isinstance(adm, Inadmissible):
        return Verdict("NoSolutions", s, detail=adm.reason)
    flags = ["IrreducibilityAssumed"]
    if witness is False:
        return Verdict("NoSolutions", s, deg_L=adm.deg_L, flags=flags,
                       detail="no line subbundle with this data set")
    if witness is None:
        flags.append("WitnessNotSupplied")
    return Verdict("ConditionalExists", s, solution_count_bound(s), adm.deg_L, flags,
                   detail="at most n^(2g) solutions, one per n-torsion twist at most")


def parse_query(doc):
    """Read a classification query document (dict or JSON text).

    Keys: ``n``, ``g``, optional ``points`` (list of ``{id, weight}``),
    ``limit`` and ``vanishing_orders`` (``{id: [ord f_1, ..., ord f_n]}``),
    ``witness`` (bool).
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    if "g" not in doc:
        raise ValueError("query needs a genus g")
    s = SurfaceSpec(doc["g"], doc.get("n", 2))
    kd = KnotData(tuple((str(p["id"]), tuple(p["weight"])) for p in doc.get("points", [])))
    hitflag = None
    if doc.get("vanishing_orders") is not None:
        vr = knot_data_from_vanishing(doc["vanishing_orders"])
        kd = kd + vr.knot_data
        hitflag = vr.hitchin_component
    return s, doc.get("limit", "other"), kd, doc.get("witness"), hitflag


def classify_query(doc):
    s, limit, kd, witness, hitflag = parse_query(doc)
    v = classify_existence(s, limit, kd, witness)
    if hitflag:
        v.flags.append("HitchinComponent")
    return v
