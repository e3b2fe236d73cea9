"""Visual-imagery BCI lab: synthetic EEG, FIR preprocessing, a small numpy CNN,
electrode statistics, channel scans and a simulated online arm session."""

__version__ = "0.1.0"
