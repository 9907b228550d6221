# DPM (Diamond Polymer Moments)
__version__ = "0.1.0"
