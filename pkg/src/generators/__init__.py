from src.generators.dimers import TilingCountResult, domino_count, lozenge_count
from src.generators.lattices import coin_coloured_lattice, integer_lattice, lattice
from src.generators.model_sets import CutProjectScheme, fibonacci_scheme, model_set
from src.generators.sparse import euler_gap_set
from src.generators.substitution import SubstitutionRule, substitution_chain
from src.generators.visible import coloured_visible_points, visible_points
