"""xferlab: a desk-scale testbed for cross-discipline transfer of masked LMs.

Pretrain small transformer MLMs on synthetic corpora, remap downstream token
vocabularies into the model's, fine-tune against train-from-scratch baselines,
and probe the result with representation-similarity and training-stability
diagnostics.
"""

__version__ = "0.1.0"
