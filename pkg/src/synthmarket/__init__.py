"""synthmarket: spectral factor extraction, clustered TCN-GAN synthesis of
factor returns with Student-t mixture residuals, and the evaluation,
backtesting and coverage tooling around the resulting scenario sets."""

__version__ = "0.1.0"
