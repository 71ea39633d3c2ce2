import os
from typing import Dict, Any


def _env_float(name: str, default: float) -> float:
    value = os.environ.get(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value not in (None, "") else default


class Config:
    """
    Configuration class for the toolkit

    Every getter returns a plain dictionary of defaults; any value can be
    overridden through an FLC_* environment variable (or a .env file).
    """

    TOOL_NAME = "flc-entropy"
    VERSION = "0.3.0"

    @staticmethod
    def get_runtime_config() -> Dict[str, Any]:
        """
        Get runtime configuration

        Returns:
            Dictionary with thread count, default seed and logging options
        """
        return {
            "threads": _env_int("FLC_THREADS", os.cpu_count() or 1),
            "seed": _env_int("FLC_SEED", 0),
            "log_level": os.environ.get("FLC_LOG_LEVEL", "WARNING"),
            "log_format": os.environ.get("FLC_LOG_FORMAT", "json"),
        }

    @staticmethod
    def get_geometry_config() -> Dict[str, Any]:
        """
        Get tolerances shared by point-set geometry

        Returns:
            Dictionary with coordinate tolerances
        """
        return {
            "coordinate_tolerance": 1e-12,
            "window_tolerance": 1e-9,
            "quantization_grid": _env_float("FLC_QUANTIZATION", 1e-9),
            "hole_tile": 400,
        }

    @staticmethod
    def get_patch_config() -> Dict[str, Any]:
        """
        Get patch statistics configuration

        Returns:
            Dictionary with repetitivity and frequency parameters
        """
        return {
            "repetitivity_anchors": _env_int("FLC_ANCHORS", 32),
            "min_anchors": 3,
            "chunk_size": _env_int("FLC_PATCH_CHUNK", 20000),
        }

    @staticmethod
    def get_metric_config() -> Dict[str, Any]:
        """
        Get hull metric configuration

        Returns:
            Dictionary with bisection resolution and orbit sampling parameters
        """
        return {
            "resolution": _env_float("FLC_RESOLUTION", 1e-3),
            "orbit_grid_step": 0.25,
            "grid_points_2d": 48,
            "exact_search_limit": 12,
            "eps_auto_factor": 0.9,
        }

    @staticmethod
    def get_diffraction_config() -> Dict[str, Any]:
        """
        Get diffraction configuration

        Returns:
            Dictionary with grid, peak detection and verdict parameters
        """
        return {
            "k_grid_size": 4096,
            "k_max": 1.0,
            "r2_threshold": 0.99,
            "min_exponent": 0.9,
            "peak_snr": 10.0,
            "pure_point_threshold": 0.95,
            "continuous_threshold": 0.7,
            "mass_stability": 0.25,
            "n_volumes": 3,
            "resonance_modulus": 210,
            "oversampling": 4,
            "lobe_halfwidth": 3.0,
            "chunk_size": 512,
        }

    @staticmethod
    def get_quadrature_config() -> Dict[str, Any]:
        """
        Get Mahler measure quadrature configuration

        Returns:
            Dictionary with grid sizes and singularity handling parameters
        """
        return {
            "base_grid": 64,
            "max_levels": 6,
            "singular_factor": 1e-3,
            "refine_depth": 3,
            "tolerance": 5e-4,
        }

    @staticmethod
    def get_dimer_config() -> Dict[str, Any]:
        """
        Get dimer counting configuration

        Returns:
            Dictionary with transfer-matrix capacity and default sizes
        """
        return {
            "max_width": 24,
            "max_hexagon_side": 64,
            "domino_sizes": [8, 12, 16, 20],
            "lozenge_sizes": [2, 3, 4, 5, 6],
        }
