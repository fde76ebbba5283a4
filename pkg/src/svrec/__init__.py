"""Activity recognition on scalable (degraded) multi-view video.

Subpackages: :mod:`svrec.bof` (interest points, codebook, chi-square SVM)
and :mod:`svrec.neural` (conv + LSTM network). :mod:`svrec.scalability`
degrades clips along quality, spatial and temporal axes and
:mod:`svrec.evaluation` sweeps both recognizers over the grid.
"""

__version__ = "0.1.0"
