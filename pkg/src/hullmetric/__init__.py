from src.hullmetric.kronecker import KroneckerSystem, kronecker_entropy_demo
from src.hullmetric.metric import MetricBracket, hull_metric, orbit_metric
from src.hullmetric.separation import HullSample, covering_number, hull_sample, separated_set
from src.hullmetric.theorem import check_htop_equals_hpc, check_lemma_geometry, epsilon0, rho
