from src.diffraction.autocorrelation import Autocorrelation, autocorrelation
from src.diffraction.model_set_oracle import BraggPeak, cut_and_project_peaks
from src.diffraction.peaks import Diagnosis, PeakReport, detect_peaks, pure_point_diagnostic
from src.diffraction.spectrum import Spectrum, default_k_grid, fft_spectrum, intensity
