"""tsdaug: denoising-based data augmentation for time series.

Train denoising autoencoders and diffusion denoisers conditioned on
per-segment meta-attributes, generate synthetic training samples from them,
and compare augmentation strategies with a Bayesian signed-rank harness.
"""

__version__ = "0.1.0"
