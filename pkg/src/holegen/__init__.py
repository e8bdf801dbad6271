"""holegen: differential testing pipeline for MiniJ runtimes.

Extracts templates (programs with typed holes) from a MiniJ corpus, fills
holes by executing the templates, wraps the results in checksum harnesses,
runs them across a matrix of execution configurations (reference interpreter
vs. optimizing bytecode VM with injectable faults), and prunes false
positives before reporting bugs.
"""

__version__ = "0.1.0"
