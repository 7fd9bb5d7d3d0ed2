"""vidqg: evaluation harness for question generation from educational videos.

Pipeline: load/validate a corpus, split it, drive generation backends
through the three prompt modes, score outputs (ROUGE-L, semantic F1, ICD),
aggregate report tables, and run the manual-rating workflow with
inter-rater agreement.
"""

__version__ = "0.1.0"
