"""Vector-valued-norm correlation measures, regular binning and decoupling experiments."""

from .prob import (Channel, Distribution, JointDistribution, SeededRng, TypeClassSpec,
                   load_joint, parse_joint)
from .measures import (Alpha, csiszar_mi, shannon_mi, sibson_mi, tsallis_mi, v_alpha,
                       v_infinity, w_alpha)

__version__ = "0.1.0"

__all__ = ["Alpha", "Channel", "Distribution", "JointDistribution", "SeededRng", "TypeClassSpec",
           "csiszar_mi", "load_joint", "parse_joint", "shannon_mi", "sibson_mi", "tsallis_mi",
           "v_alpha", "v_infinity", "w_alpha"]
