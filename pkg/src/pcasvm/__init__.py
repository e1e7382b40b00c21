"""PCA + kernel-SVM direction forecasting."""

__version__ = "0.1.0"
