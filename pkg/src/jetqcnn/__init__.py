"""QCNN and matched-CNN top tagging on PCA-compressed jet images."""

__version__ = "0.1.0"
