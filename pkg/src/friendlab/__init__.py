"""friendlab: a workbench for steering the similarity-diversity balance of
multi-channel friend recommendations, with expert-tuned preference ratios
propagated across player cohorts."""

__version__ = "0.1.0"
