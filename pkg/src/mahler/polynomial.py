from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from src.models.errors import ParseError, ValidationError

Exponent = Tuple[int, int]


@dataclass(frozen=True)
class LaurentPolynomial:
    """
    Finite sum of c_ab x^a y^b with integer exponents of either sign

    Terms with equal exponents are merged and zero coefficients dropped.
    """
    terms: Dict[Exponent, complex]

    def __post_init__(self):
        merged: Dict[Exponent, complex] = {}
        for (a, b), c in self.terms.items():
            key = (int(a), int(b))
            merged[key] = merged.get(key, 0j) + complex(c)
        merged = {k: c for k, c in sorted(merged.items()) if c != 0}
        if not merged:
            raise ValidationError("polynomial is identically zero")
        object.__setattr__(self, "terms", merged)

    @classmethod
    def parse(cls, text: str) -> "LaurentPolynomial":
        """
        Parse whitespace-separated terms "a,b,re[,im]"

        Example:
            "0,0,4 1,0,1 -1,0,1 0,1,1 0,-1,1" is 4 + x + 1/x + y + 1/y
        """
        terms: Dict[Exponent, complex] = {}
        for i, token in enumerate(text.split()):
            fields = token.split(",")
            if len(fields) not in (3, 4):
                raise ParseError(f"term {i} '{token}': expected a,b,re[,im]")
            try:
                a, b = int(fields[0]), int(fields[1])
                c = complex(float(fields[2]), float(fields[3]) if len(fields) == 4 else 0.0)
            except ValueError:
                raise ParseError(f"term {i} '{token}': bad number")
            if not np.isfinite(c.real) or not np.isfinite(c.imag):
                raise ParseError(f"term {i} '{token}': non-finite coefficient")
            terms[(a, b)] = terms.get((a, b), 0j) + c
        if not terms:
            raise ParseError("empty polynomial")
        try:
            return cls(terms)
        except ValidationError as e:
            raise ParseError(str(e))

    def to_text(self) -> str:
        return " ".join(f"{a},{b},{c.real!r},{c.imag!r}" for (a, b), c in self.terms.items())

    @property
    def coefficient_norm(self) -> float:
        """
        Sum of |c_ab|, the maximum of |P| on the torus up to equality
        """
        return float(sum(abs(c) for c in self.terms.values()))

    def __mul__(self, other: Union["LaurentPolynomial", complex, float]) -> "LaurentPolynomial":
        if not isinstance(other, LaurentPolynomial):
            return LaurentPolynomial({k: c * other for k, c in self.terms.items()})
        product: Dict[Exponent, complex] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (a1 + a2, b1 + b2)
                product[key] = product.get(key, 0j) + c1 * c2
        return LaurentPolynomial(product)

    __rmul__ = __mul__

    def swap_variables(self) -> "LaurentPolynomial":
        return LaurentPolynomial({(b, a): c for (a, b), c in self.terms.items()})

    def invert_x(self) -> "LaurentPolynomial":
        return LaurentPolynomial({(-a, b): c for (a, b), c in self.terms.items()})

    def __call__(self, s, t) -> np.ndarray:
        return eval_on_torus(self, s, t)


def eval_on_torus(P: LaurentPolynomial, s, t):
    """
    P(e(s), e(t)) with e(u) = exp(2 pi i u); broadcasts over array arguments
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    total = np.zeros(np.broadcast(s, t).shape, dtype=complex)
    for (a, b), c in P.terms.items():
        total = total + c * np.exp(2j * np.pi * (a * s + b * t))
    return total[()] if total.ndim == 0 else total


LOZENGE_POLYNOMIAL = LaurentPolynomial({(0, 0): 1, (1, 0): 1, (0, 1): 1})
DOMINO_POLYNOMIAL = LaurentPolynomial({(0, 0): 4, (1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1})
