"""spoilkit: dataset engineering and evaluation for clickbait spoiling.

Pipeline stages: ingest raw scraped dumps (corpus), clean noisy user
answers (cleaner), localize answer spans (spanlab), review fuzzy spans
(review + browser UI), tag/split/export training files (dataset), and
score model predictions (metrics, evalrun).  The ``spoilkit`` CLI chains
the stages through files.
"""

__version__ = "0.1.0"
