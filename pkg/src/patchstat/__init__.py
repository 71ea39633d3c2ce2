from src.patchstat.entropy import EntropyCurve, cropped_patch_counts, entropy_estimate, linear_complexity_ratio
from src.patchstat.frequencies import FrequencyReport, patch_frequencies
from src.patchstat.patches import Patch, PatchTable, extract_patches, patch_count
from src.patchstat.repetitivity import RepetitivityEstimate, check_repetitivity_bound, repetitivity_estimate
