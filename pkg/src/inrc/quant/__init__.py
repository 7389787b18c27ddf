from .adaround import AdaRoundResult, adaround, adaround_detail, rectified_sigmoid
from .grid import (QuantGrid, QuantizedParams, dequantize, fit_grid, fit_storable_grid, quantize,
                   quantize_params)
from .layerwise import adaround_network
from .qat import QATResult, qat

__all__ = [
    "AdaRoundResult", "QATResult", "QuantGrid", "QuantizedParams", "adaround", "adaround_detail",
    "adaround_network", "dequantize", "fit_grid", "fit_storable_grid", "qat", "quantize",
    "quantize_params", "rectified_sigmoid",
]
