"""phishgrab: archive landing pages with their resources and extract ternary phishing features."""

__version__ = "0.1.0"
