"""Feature ranking, subset sweeps and hidden-label audits for flow-based intrusion detection."""

__version__ = "0.1.0"
