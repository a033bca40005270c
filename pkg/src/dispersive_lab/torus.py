"""Fourier representations of periodic functions on the two torus conventions.

Two normalizations coexist in the lab and are never mixed implicitly:

* ``UNIT``  -- period 1, basis e^{2 pi i n x}; used by the counting,
  Weyl-sum and level-set machinery.
* ``TWO_PI`` -- period 2 pi, basis e^{i n x}; used by the PDE side.

``FourierSeries`` is a band-limited spatial slice; ``HarmonicTrajectory``
is a finite sum of terms c * e^{inx} * t^j * e^{i lambda t}, which is
closed under products, x-derivatives and exact Duhamel integration.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_BAND_CAP = 4096


class BandCapExceeded(ValueError):
    """Raised when a spectral product would exceed the hard band cap."""


class ConventionMismatch(ValueError):
    """Raised on arithmetic between objects with different torus conventions."""


class TorusConvention(Enum):
    UNIT = "unit"      # period 1, basis e^{2 pi i n x}
    TWO_PI = "two_pi"  # period 2 pi, basis e^{i n x}

    @property
    def wavenumber_factor(self) -> float:
        """Multiplier w such that mode n has spatial frequency w*n."""
        return 2.0 * math.pi if self is TorusConvention.UNIT else 1.0

    @property
    def period(self) -> float:
        return 1.0 if self is TorusConvention.UNIT else 2.0 * math.pi


def bracket(x: float) -> float:
    """Japanese bracket <x> = 1 + |x|."""
    return 1.0 + abs(x)


def _check_same_convention(a, b):
    if a.convention is not b.convention:
        raise ConventionMismatch(
            f"mixed torus conventions: {a.convention.value} vs {b.convention.value}"
        )


def _symmetric_bucket_sum(items: dict, self_mirrored: bool, sign: int, mirror):
    """Sum bucket values in a mirror-canonical order.

    ``items`` maps a first-factor id to its product contribution. Mirrored
    output buckets are summed over termwise-mirrored ids in the same
    sequence, so their partial sums are exactly conjugate in IEEE
    arithmetic; self-mirrored buckets sum conjugate id pairs first, which
    cancels imaginary parts exactly for conjugate-symmetric inputs.
    """
    if not self_mirrored:
        total = 0j
        for key in sorted(items, key=lambda t: _mirror_rank(t, sign)):
            total += items[key]
        return total
    total = 0j
    done = set()
    for key in sorted(items, key=lambda t: _mirror_rank(t, 1)):
        if key in done:
            continue
        partner = mirror(key)
        if partner == key:
            total += items[key]
        elif partner in items:
            total += items[key] + items[partner]
            done.add(partner)
        else:
            total += items[key]
    return total


def _mirror_rank(key, sign: int):
    if isinstance(key, tuple):
        n, j, lam = key
        return (abs(n), j, abs(lam), sign * n, sign * lam)
    return (abs(key), sign * key)


@dataclass(frozen=True)
class FourierSeries:
    """Band-limited periodic function given by complex coefficients on [-band, band]."""

    convention: TorusConvention
    coeff: dict = field(default_factory=dict)
    band: int = None  # type: ignore[assignment]

    def __post_init__(self):
        clean = {int(n): complex(c) for n, c in self.coeff.items() if c != 0}
        object.__setattr__(self, "coeff", clean)
        b = max((abs(n) for n in clean), default=0)
        if self.band is None:
            object.__setattr__(self, "band", b)
        elif self.band < b:
            raise ValueError(f"coefficients outside declared band {self.band}")

    def __getitem__(self, n: int) -> complex:
        return self.coeff.get(n, 0j)

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        _check_same_convention(self, other)
        out = dict(self.coeff)
        for n, c in other.coeff.items():
            out[n] = out.get(n, 0j) + c
        return FourierSeries(self.convention, out)

    def __sub__(self, other: "FourierSeries") -> "FourierSeries":
        return self + other.scaled(-1.0)

    def scaled(self, alpha: complex) -> "FourierSeries":
        return FourierSeries(self.convention, {n: alpha * c for n, c in self.coeff.items()})

    def product(self, other: "FourierSeries", band_cap: int = DEFAULT_BAND_CAP) -> "FourierSeries":
        """Exact spectral product; the band grows to band(f)+band(g), no aliasing.

        Accumulation order is mirror-canonical, so conjugate-symmetric inputs
        produce an exactly conjugate-symmetric output.
        """
        _check_same_convention(self, other)
        if self.band + other.band > band_cap:
            raise BandCapExceeded(
                f"product band {self.band + other.band} exceeds cap {band_cap}"
            )
        buckets: dict = {}
        for n1, c1 in self.coeff.items():
            for n2, c2 in other.coeff.items():
                buckets.setdefault(n1 + n2, {})[n1] = c1 * c2
        out: dict = {}
        for n, items in buckets.items():
            out[n] = _symmetric_bucket_sum(
                items, n == 0, 1 if n >= 0 else -1, lambda k: -k)
        return FourierSeries(self.convention, out)

    def power(self, k: int, band_cap: int = DEFAULT_BAND_CAP) -> "FourierSeries":
        if k == 0:
            return FourierSeries(self.convention, {0: 1.0 + 0j})
        result = self
        for _ in range(k - 1):
            result = result.product(self, band_cap=band_cap)
        return result

    def derivative(self) -> "FourierSeries":
        """Spatial derivative: coeff(n) -> i*w*n*coeff(n) with w the wavenumber factor."""
        w = self.convention.wavenumber_factor
        return FourierSeries(self.convention, {n: 1j * w * n * c for n, c in self.coeff.items()})

    def truncated(self, band: int) -> tuple["FourierSeries", float]:
        """Drop modes with |n| > band; returns (truncated series, dropped l2 mass)."""
        kept = {n: c for n, c in self.coeff.items() if abs(n) <= band}
        dropped = math.sqrt(sum(abs(c) ** 2 for n, c in self.coeff.items() if abs(n) > band))
        return FourierSeries(self.convention, kept, band=band), dropped

    def evaluate(self, x) -> complex:
        w = self.convention.wavenumber_factor
        return sum(c * cmath.exp(1j * w * n * x) for n, c in self.coeff.items())

    def l2_norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.coeff.values()))

    def is_real_symmetric(self, tol: float = 0.0) -> bool:
        """True iff coeff(-n) == conj(coeff(n)) within tol (0 means exact)."""
        for n, c in self.coeff.items():
            if abs(self.coeff.get(-n, 0j) - c.conjugate()) > tol:
                return False
        return True

    def mean_coefficient(self) -> complex:
        return self[0]

    def to_json(self) -> str:
        records = [
            {"n": n, "re": c.real, "im": c.imag}
            for n, c in sorted(self.coeff.items())
        ]
        return json.dumps({"convention": self.convention.value, "coeff": records})

    @staticmethod
    def from_json(text: str) -> "FourierSeries":
        data = json.loads(text)
        conv = TorusConvention(data["convention"])
        coeff = {int(r["n"]): complex(r["re"], r["im"]) for r in data["coeff"]}
        return FourierSeries(conv, coeff)


@dataclass(frozen=True)
class HarmonicTrajectory:
    """Finite sum of terms c * e^{i w n x} * t^j * e^{i lambda t}.

    Terms are stored merged on the key (n, j, lambda); j > 0 only arises from
    resonant Duhamel integration. Integer-valued lambdas stay exact as floats
    up to 2^53, which covers dispersion frequencies n^5 for |n| <= 1500.
    """

    convention: TorusConvention
    terms: dict = field(default_factory=dict)  # (n, j, lam) -> complex amplitude

    def __post_init__(self):
        clean = {}
        for (n, j, lam), c in self.terms.items():
            c = complex(c)
            if c != 0:
                clean[(int(n), int(j), float(lam))] = c
        object.__setattr__(self, "terms", clean)

    @staticmethod
    def from_series(f: FourierSeries) -> "HarmonicTrajectory":
        return HarmonicTrajectory(f.convention, {(n, 0, 0.0): c for n, c in f.coeff.items()})

    @property
    def band(self) -> int:
        return max((abs(n) for (n, _, _) in self.terms), default=0)

    def term_count(self) -> int:
        return len(self.terms)

    def __add__(self, other: "HarmonicTrajectory") -> "HarmonicTrajectory":
        _check_same_convention(self, other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0j) + c
        return HarmonicTrajectory(self.convention, out)

    def __sub__(self, other: "HarmonicTrajectory") -> "HarmonicTrajectory":
        return self + other.scaled(-1.0)

    def scaled(self, alpha: complex) -> "HarmonicTrajectory":
        return HarmonicTrajectory(self.convention, {k: alpha * c for k, c in self.terms.items()})

    def product(self, other: "HarmonicTrajectory", band_cap: int = DEFAULT_BAND_CAP) -> "HarmonicTrajectory":
        """Exact product with mirror-canonical accumulation (see FourierSeries)."""
        _check_same_convention(self, other)
        if self.band + other.band > band_cap:
            raise BandCapExceeded(
                f"product band {self.band + other.band} exceeds cap {band_cap}"
            )
        buckets: dict = {}
        for (n1, j1, l1), c1 in self.terms.items():
            for (n2, j2, l2), c2 in other.terms.items():
                key = (n1 + n2, j1 + j2, l1 + l2)
                buckets.setdefault(key, {})[(n1, j1, l1)] = c1 * c2
        out: dict = {}
        for key, items in buckets.items():
            n, _, lam = key
            self_mirrored = n == 0 and lam == 0.0
            sign = 1 if (n, lam) >= (0, 0.0) else -1
            out[key] = _symmetric_bucket_sum(
                items, self_mirrored, sign, lambda t: (-t[0], t[1], -t[2]))
        return HarmonicTrajectory(self.convention, out)

    def x_derivative(self) -> "HarmonicTrajectory":
        w = self.convention.wavenumber_factor
        return HarmonicTrajectory(
            self.convention,
            {(n, j, lam): 1j * w * n * c for (n, j, lam), c in self.terms.items()},
        )

    def x_derivative_power(self, order: int) -> "HarmonicTrajectory":
        w = self.convention.wavenumber_factor
        return HarmonicTrajectory(
            self.convention,
            {(n, j, lam): (1j * w * n) ** order * c for (n, j, lam), c in self.terms.items()},
        )

    def t_derivative(self) -> "HarmonicTrajectory":
        """Exact d/dt: t^j e^{i lam t} -> j t^{j-1} e^{i lam t} + i lam t^j e^{i lam t}."""
        out: dict = {}
        for (n, j, lam), c in self.terms.items():
            if j > 0:
                key = (n, j - 1, lam)
                out[key] = out.get(key, 0j) + j * c
            key = (n, j, lam)
            out[key] = out.get(key, 0j) + 1j * lam * c
        return HarmonicTrajectory(self.convention, out)

    def at_time(self, t: float) -> FourierSeries:
        """Spatial slice at time t; accumulation is mirror-canonical so
        conjugate-symmetric trajectories evaluate to exactly symmetric series."""
        buckets: dict = {}
        for (n, j, lam), c in self.terms.items():
            val = c * (t ** j if j else 1.0) * cmath.exp(1j * lam * t)
            buckets.setdefault(n, {})[(n, j, lam)] = val
        coeff: dict = {}
        for n, items in buckets.items():
            coeff[n] = _symmetric_bucket_sum(
                items, n == 0, 1 if n >= 0 else -1,
                lambda k: (-k[0], k[1], -k[2]))
        return FourierSeries(self.convention, coeff)

    def zero_mode_terms(self) -> "HarmonicTrajectory":
        return HarmonicTrajectory(
            self.convention, {k: c for k, c in self.terms.items() if k[0] == 0}
        )

    def drop_zero_mode(self) -> "HarmonicTrajectory":
        return HarmonicTrajectory(
            self.convention, {k: c for k, c in self.terms.items() if k[0] != 0}
        )

    def truncated(self, band: int) -> tuple["HarmonicTrajectory", float]:
        kept = {k: c for k, c in self.terms.items() if abs(k[0]) <= band}
        dropped = math.sqrt(sum(abs(c) ** 2 for k, c in self.terms.items() if abs(k[0]) > band))
        return HarmonicTrajectory(self.convention, kept), dropped

    def pruned(self, amp_tol: float) -> tuple["HarmonicTrajectory", float]:
        """Drop terms with |c| <= amp_tol; returns (pruned, dropped l2 mass of amplitudes)."""
        kept = {k: c for k, c in self.terms.items() if abs(c) > amp_tol}
        dropped = math.sqrt(sum(abs(c) ** 2 for k, c in self.terms.items() if abs(c) <= amp_tol))
        return HarmonicTrajectory(self.convention, kept), dropped

    def is_real_symmetric(self, tol: float = 0.0) -> bool:
        for (n, j, lam), c in self.terms.items():
            mirror = self.terms.get((-n, j, -lam), 0j)
            if abs(mirror - c.conjugate()) > tol:
                return False
        return True

    def to_json(self) -> str:
        records = [
            {"n": n, "j": j, "lam": lam, "re": c.real, "im": c.imag}
            for (n, j, lam), c in sorted(self.terms.items())
        ]
        return json.dumps({"convention": self.convention.value, "terms": records})

    @staticmethod
    def from_json(text: str) -> "HarmonicTrajectory":
        data = json.loads(text)
        conv = TorusConvention(data["convention"])
        terms = {
            (int(r["n"]), int(r["j"]), float(r["lam"])): complex(r["re"], r["im"])
            for r in data["terms"]
        }
        return HarmonicTrajectory(conv, terms)
