"""
DPM (Diamond Polymer Moments) - Sparse Polynomial
y_2, ..., y_m 변수의 희소 다변수 다항식 (정확한 유리수 계수)
"""

import json
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from typing_extensions import TypeAlias

from src.core.exceptions import DomainError

Exponent: TypeAlias = Tuple[int, ...]
Scalar: TypeAlias = Union[int, Fraction]

FIRST_VARIABLE = 2  # 변수 인덱스 0 ↔ y_2


class SparsePolynomial:
    """
    {지수 벡터: 계수} 사전으로 표현한 다항식

    - 계수 0 항은 저장하지 않는다
    - 지수 벡터 길이 = 변수 수 (y_2..y_{nvars+1})
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Optional[Dict[Exponent, Scalar]] = None):
        if nvars < 1:
            raise DomainError(f"SparsePolynomial needs at least one variable, got {nvars}")
        self.nvars = nvars
        self.terms: Dict[Exponent, Fraction] = {}
        for exponent, coefficient in (terms or {}).items():
            exponent = tuple(int(e) for e in exponent)
            if len(exponent) != nvars or any(e < 0 for e in exponent):
                raise DomainError(f"bad exponent vector {exponent} for {nvars} variables")
            coefficient = Fraction(coefficient)
            if coefficient != 0:
                self.terms[exponent] = self.terms.get(exponent, Fraction(0)) + coefficient
                if self.terms[exponent] == 0:
                    del self.terms[exponent]

    # ---------- 생성 ----------

    @classmethod
    def zero(cls, nvars: int) -> "SparsePolynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: Scalar) -> "SparsePolynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, order: int) -> "SparsePolynomial":
        """y_order (order >= 2)"""
        index = order - FIRST_VARIABLE
        if not 0 <= index < nvars:
            raise DomainError(f"variable y_{order} outside y_2..y_{nvars + 1}")
        exponent = [0] * nvars
        exponent[index] = 1
        return cls(nvars, {tuple(exponent): 1})

    # ---------- 산술 ----------

    def _coerce(self, other) -> "SparsePolynomial":
        if isinstance(other, SparsePolynomial):
            if other.nvars != self.nvars:
                raise DomainError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        return SparsePolynomial.constant(self.nvars, other)

    def __add__(self, other) -> "SparsePolynomial":
        other = self._coerce(other)
        result = dict(self.terms)
        for exponent, coefficient in other.terms.items():
            value = result.get(exponent, Fraction(0)) + coefficient
            if value == 0:
                result.pop(exponent, None)
            else:
                result[exponent] = value
        return SparsePolynomial(self.nvars, result)

    __radd__ = __add__

    def __neg__(self) -> "SparsePolynomial":
        return SparsePolynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "SparsePolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "SparsePolynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "SparsePolynomial":
        if not isinstance(other, SparsePolynomial):
            factor = Fraction(other)
            return SparsePolynomial(self.nvars, {e: c * factor for e, c in self.terms.items()})
        other = self._coerce(other)
        result: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exponent = tuple(a + b for a, b in zip(e1, e2))
                result[exponent] = result.get(exponent, Fraction(0)) + c1 * c2
        return SparsePolynomial(self.nvars, result)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "SparsePolynomial":
        if power < 0:
            raise DomainError("negative powers are not polynomial")
        result = SparsePolynomial.constant(self.nvars, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePolynomial):
            other = SparsePolynomial.constant(self.nvars, other)
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exponent, coefficient in self.sorted_terms():
            factors = [f"y{i + FIRST_VARIABLE}" + (f"^{e}" if e > 1 else "")
                       for i, e in enumerate(exponent) if e]
            parts.append("*".join([str(coefficient)] + factors))
        return " + ".join(parts)

    # ---------- 구조 ----------

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, exponent: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exponent), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * self.nvars)

    def linear_terms(self) -> Dict[int, Fraction]:
        """{변수 차수 j: y_j 의 계수}"""
        result = {}
        for exponent, coefficient in self.terms.items():
            if sum(exponent) == 1:
                result[exponent.index(1) + FIRST_VARIABLE] = coefficient
        return result

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @staticmethod
    def weight(exponent: Sequence[int]) -> int:
        """단항식 가중치 Σ j·e_j"""
        return sum((i + FIRST_VARIABLE) * e for i, e in enumerate(exponent))

    def min_weight(self) -> int:
        return min((self.weight(e) for e in self.terms), default=0)

    def sorted_terms(self) -> List[Tuple[Exponent, Fraction]]:
        """차수 우선 사전식 순서 (graded lexicographic)"""
        return sorted(self.terms.items(), key=lambda item: (sum(item[0]), item[0]))

    def extend(self, nvars: int) -> "SparsePolynomial":
        """뒤쪽에 사용하지 않는 변수 추가"""
        if nvars < self.nvars:
            raise DomainError(f"cannot shrink {self.nvars} variables to {nvars}")
        pad = (0,) * (nvars - self.nvars)
        return SparsePolynomial(nvars, {e + pad: c for e, c in self.terms.items()})

    def split_on(self, order: int) -> Tuple["SparsePolynomial", "SparsePolynomial"]:
        """(y_order 를 포함하는 항, 포함하지 않는 항)"""
        index = order - FIRST_VARIABLE
        with_var = {e: c for e, c in self.terms.items() if e[index] > 0}
        without = {e: c for e, c in self.terms.items() if e[index] == 0}
        return SparsePolynomial(self.nvars, with_var), SparsePolynomial(self.nvars, without)

    def divide_by_variable(self, order: int) -> Tuple["SparsePolynomial", "SparsePolynomial"]:
        """y_order 로 나눈 (몫, 나머지)"""
        index = order - FIRST_VARIABLE
        quotient, remainder = {}, {}
        for exponent, coefficient in self.terms.items():
            if exponent[index] > 0:
                reduced = list(exponent)
                reduced[index] -= 1
                quotient[tuple(reduced)] = coefficient
            else:
                remainder[exponent] = coefficient
        return SparsePolynomial(self.nvars, quotient), SparsePolynomial(self.nvars, remainder)

    def diff(self, order: int) -> "SparsePolynomial":
        """∂/∂y_order"""
        index = order - FIRST_VARIABLE
        result = {}
        for exponent, coefficient in self.terms.items():
            e = exponent[index]
            if e:
                reduced = list(exponent)
                reduced[index] = e - 1
                result[tuple(reduced)] = coefficient * e
        return SparsePolynomial(self.nvars, result)

    # ---------- 평가 ----------

    def evaluate(self, values: Sequence) -> Union[Fraction, float]:
        """values = (y_2, ..., y_{nvars+1}); Fraction 입력이면 정확한 값"""
        if len(values) < self.nvars:
            raise DomainError(f"need {self.nvars} values, got {len(values)}")
        total = 0
        for exponent, coefficient in self.terms.items():
            term = coefficient
            for value, e in zip(values, exponent):
                if e:
                    term = term * value ** e
            total = total + term
        return total

    def substitute(self, assignments: Dict[int, Scalar]) -> "SparsePolynomial":
        """{차수: 값} 변수에 유리수 대입 (변수 수는 유지, 대입된 변수는 사라짐)"""
        indices = {order - FIRST_VARIABLE: Fraction(value) for order, value in assignments.items()}
        result: Dict[Exponent, Fraction] = {}
        for exponent, coefficient in self.terms.items():
            reduced = list(exponent)
            for index, value in indices.items():
                if reduced[index]:
                    coefficient = coefficient * value ** reduced[index]
                    reduced[index] = 0
            key = tuple(reduced)
            result[key] = result.get(key, Fraction(0)) + coefficient
        return SparsePolynomial(self.nvars, result)

    def compile(self) -> "CompiledSystem":
        return CompiledSystem([self])

    def to_sympy(self, symbols: Sequence):
        import sympy
        expression = sympy.Integer(0)
        for exponent, coefficient in self.terms.items():
            term = sympy.Rational(coefficient.numerator, coefficient.denominator)
            for symbol, e in zip(symbols, exponent):
                if e:
                    term *= symbol ** e
            expression += term
        return expression

    # ---------- JSON ----------

    def to_json_dict(self, b: int, m: int) -> dict:
        return {
            "b": b,
            "m": m,
            "terms": [{"exp": list(e), "coef": f"{c.numerator}/{c.denominator}"}
                      for e, c in self.sorted_terms()],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SparsePolynomial":
        nvars = int(data["m"]) - 1
        terms = {}
        for term in data["terms"]:
            terms[tuple(term["exp"])] = Fraction(term["coef"])
        return cls(nvars, terms)

    def dumps(self, b: int, m: int) -> str:
        return json.dumps(self.to_json_dict(b, m), indent=2)


class CompiledSystem:
    """
    여러 다항식을 (지수 행렬, float 계수 행렬) 로 묶은 평가기

    evaluate(y) 는 y 의 마지막 축이 변수 (y_2..), 출력 마지막 축이 다항식
    """

    def __init__(self, polynomials: Iterable[SparsePolynomial]):
        polynomials = list(polynomials)
        if not polynomials:
            raise DomainError("CompiledSystem needs at least one polynomial")
        self.nvars = polynomials[0].nvars
        monomials = sorted({e for p in polynomials for e in p.terms})
        index = {e: i for i, e in enumerate(monomials)}
        self.exponents = np.array(monomials, dtype=np.int64).reshape(len(monomials), self.nvars)
        self.coefficients = np.zeros((len(monomials), len(polynomials)))
        for column, polynomial in enumerate(polynomials):
            if polynomial.nvars != self.nvars:
                raise DomainError("all compiled polynomials must share one variable set")
            for exponent, coefficient in polynomial.terms.items():
                self.coefficients[index[exponent], column] = float(coefficient)

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            monomials = np.prod(y[..., None, :] ** self.exponents, axis=-1)
            return monomials @ self.coefficients
