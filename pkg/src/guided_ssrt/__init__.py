"""Hessian-guided scale space Radon transform for thick line detection."""
from .guided import GuidanceParams, gamma_map, guided_image, guided_radon, guided_ssrt
from .hessian import (HessianField, OrientationField, average_gamma_scales, hessian_field,
                      orientation_field, orientation_fields)
from .image import (GroundTruthLine, ImageFormatError, ImageGrid, SyntheticSpec, add_awgn,
                    load_image, overlay_lines, synth_bars)
from .maxima import (Peak, RefineParams, dedup_pi, local_maxima, scale_space_refine,
                     threshold_peaks)
from .pipeline import (DetectConfig, DetectionResult, EvalReport, detect_lines, evaluate)
from .transform import (Sinogram, SinogramGrid, SsrtParams, gaussian_kernel_1d, radon,
                        ssrt_direct, ssrt_from_radon)

__version__ = "0.1.0"
