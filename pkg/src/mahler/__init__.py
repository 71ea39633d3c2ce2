from src.mahler.dimer_entropy import dimer_entropy_extrapolation, mahler_vs_dimer_report
from src.mahler.polynomial import LaurentPolynomial, eval_on_torus
from src.mahler.quadrature import QuadratureResult, mahler_measure
